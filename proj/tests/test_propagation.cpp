#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "cv2x/error.hpp"
#include "cv2x/propagation.hpp"
#include "cv2x/scenario.hpp"
#include "oracles.hpp"

using namespace cv2x;

namespace {

constexpr std::uint64_t kDraws = 1'000'000;

LinkModel default_link() { return make_scenario(0.1, 20.0, 10, 4).link(); }

LinkModel link_with(BlerTable bler, double sigma = 3.0, double pt = 20.0) {
    RadioConfig radio;
    radio.tx_power_dbm = pt;
    return LinkModel(radio, default_pathloss(), ShadowingModel{sigma}, std::move(bler));
}

BlerTable flat_bler(double value) { return BlerTable(0, {{-300.0, value}, {300.0, value}}); }

// 1 below s0, 0 from s0 + 0.01 dB on
BlerTable step_bler(double s0) { return BlerTable(0, {{-300.0, 1.0}, {s0, 1.0}, {s0 + 0.01, 0.0}, {300.0, 0.0}}); }

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto dir = std::filesystem::temp_directory_path() / "cv2x_test_propagation";
    std::filesystem::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << content;
    return p;
}

}  // namespace

TEST_CASE("pathloss follows the log-distance form") {
    const PathlossModel pl{50.0, 22.7, 1.0};
    CHECK(pathloss(1.0, pl) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(pathloss(10.0, pl) == doctest::Approx(72.7).epsilon(1e-12));
    CHECK(pathloss(0.0, pl) == pathloss(1.0, pl));
    CHECK(pathloss(0.3, pl) == pathloss(1.0, pl));

    const PathlossModel def = default_pathloss();
    CHECK(pathloss(354.0, def) == doctest::Approx(3.6 + 40.0 * std::log10(354.0)).epsilon(1e-12));

    double prev = pathloss(1.0, def);
    for (double d = 2.0; d < 5000.0; d *= 1.3) {
        const double v = pathloss(d, def);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("configuration validation") {
    CHECK_THROWS_AS(validate(PathlossModel{0.0, 20.0, 0.0}), ConfigError);
    CHECK_THROWS_AS(validate(PathlossModel{0.0, -1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(validate(ShadowingModel{0.0}), ConfigError);
    CHECK_THROWS_AS(validate(ShadowingModel{-1.0}), ConfigError);
    RadioConfig hot;
    hot.tx_power_dbm = 23.5;
    CHECK_THROWS_AS(validate(hot), ConfigError);
    hot.tx_power_dbm = 23.0;
    CHECK_NOTHROW(validate(hot));
}

TEST_CASE("psr and delta_sen closed forms") {
    const ShadowingModel sh{3.0};
    RadioConfig radio;
    // flat pathloss putting the mean exactly on the threshold
    const PathlossModel at_threshold{radio.tx_power_dbm - radio.sensing_threshold_dbm, 0.0, 1.0};
    CHECK(psr(123.0, radio, at_threshold, sh) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(delta_sen(123.0, radio, at_threshold, sh) == doctest::Approx(0.5).epsilon(1e-15));

    const PathlossModel strong{at_threshold.reference_loss_db - 10.0 * sh.sigma_db, 0.0, 1.0};
    CHECK(std::abs(psr(5.0, radio, strong, sh) - 1.0) < 1e-12);

    const PathlossModel pl = default_pathloss();
    CHECK(delta_sen(0.0, radio, pl, sh) < 1e-12);
    for (double d : {0.0, 50.0, 300.0, 512.5, 900.0, 3000.0}) {
        const double p = psr(d, radio, pl, sh);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(p + delta_sen(d, radio, pl, sh) == 1.0);
    }
    double prev = 1.0;
    for (double d = 0.0; d < 2000.0; d += 7.0) {
        const double p = psr(d, radio, pl, sh);
        CHECK(p <= prev);
        prev = p;
    }
}

TEST_CASE("psr matches the shadowing oracle") {
    std::mt19937_64 rng(11);
    for (double d : {150.0, 420.0, 600.0}) {
        const LinkModel link = default_link();
        const auto e = oracle::psr(link, d, kDraws, rng);
        CHECK_MESSAGE(e.agrees(link.psr(d)), "d=" << d << " oracle " << e.mean << " +- " << e.se);
    }
}

TEST_CASE("BLER table lookup") {
    const BlerTable t(9, {{0.0, 1.0}, {2.0, 0.6}, {5.0, 0.1}, {6.0, 0.0}});
    CHECK(t(-3.0) == 1.0);
    CHECK(t(10.0) == 0.0);
    CHECK(t(2.0) == 0.6);
    CHECK(t(5.0) == 0.1);
    const double mid = t(3.5);
    CHECK(mid <= 0.6);
    CHECK(mid >= 0.1);
    CHECK(mid == doctest::Approx(0.35));

    const BlerTable tail(1, {{0.0, 0.5}, {1.0, 0.2}});
    CHECK(tail(5.0) == 0.2);

    const BlerTable logistic = logistic_bler(9, 3.0, 1.5);
    CHECK(logistic(3.0) == doctest::Approx(0.5).epsilon(1e-9));
    for (const auto& p : logistic.points()) CHECK(logistic(p.snr_db) == p.bler);
    double prev = 1.0;
    for (double s = -12.0; s < 30.0; s += 0.037) {
        const double v = logistic(s);
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("BLER table rejects malformed curves") {
    CHECK_THROWS_AS(BlerTable(0, {}), ConfigError);
    CHECK_THROWS_AS(BlerTable(0, {{0.0, 1.0}, {0.0, 0.5}}), ConfigError);
    CHECK_THROWS_AS(BlerTable(0, {{0.0, 0.5}, {1.0, 0.7}}), ConfigError);
    CHECK_THROWS_AS(BlerTable(0, {{0.0, 1.2}}), ConfigError);
    CHECK_THROWS_AS(default_bler(3), ConfigError);
}

TEST_CASE("BLER CSV loading") {
    const auto good = temp_file("lut_mcs7.csv", "snr_db,bler\n-2,1\n0,0.5\n3,0.01\n");
    const BlerTable t = load_bler_csv(good);
    CHECK(t.mcs_id() == 7);
    CHECK(t(0.0) == 0.5);
    CHECK(load_bler_csv(good, 11).mcs_id() == 11);

    CHECK_THROWS_AS(load_bler_csv(temp_file("bad_header9.csv", "snr,bler\n0,1\n")), ConfigError);
    CHECK_THROWS_AS(load_bler_csv(temp_file("unsorted9.csv", "snr_db,bler\n1,1\n0,0.5\n")), ConfigError);
    CHECK_THROWS_AS(load_bler_csv(temp_file("nan9.csv", "snr_db,bler\n1,abc\n")), ConfigError);
    CHECK_THROWS_AS(load_bler_csv(temp_file("nodigits.csv", "snr_db,bler\n1,1\n")), ConfigError);
    CHECK_THROWS_AS(load_bler_csv("/nonexistent/mcs9.csv"), ConfigError);
}

TEST_CASE("delta_pro limits") {
    CHECK(link_with(flat_bler(0.0)).delta_pro(300.0).value == doctest::Approx(0.0));
    CHECK(link_with(flat_bler(1.0)).delta_pro(300.0).value == doctest::Approx(1.0).epsilon(1e-12));

    // step at 5 dB, mean SNR around 30 dB at 100 m, small sigma
    const LinkModel sharp = link_with(step_bler(5.0), 0.5);
    CHECK(sharp.mean_rx_dbm(100.0) - sharp.radio().noise_power_dbm > 25.0);
    CHECK(sharp.delta_pro(100.0).value < 1e-9);

    // nothing above the sensing threshold: loss belongs to sensing
    const PropagationLoss far = default_link().delta_pro(20000.0);
    CHECK(far.value == 0.0);
    CHECK(far.sensing_dominated);
    CHECK_FALSE(default_link().delta_pro(300.0).sensing_dominated);
}

TEST_CASE("delta_pro matches the rejection-sampling oracle") {
    std::mt19937_64 rng(12);
    const LinkModel link = default_link();
    for (double d : {350.0, 450.0, 550.0}) {
        const auto e = oracle::delta_pro(link, d, kDraws, rng);
        const double v = link.delta_pro(d).value;
        CHECK_MESSAGE(e.agrees(v), "d=" << d << " model " << v << " oracle " << e.mean << " +- " << e.se);
    }
}

TEST_CASE("p_int limits") {
    const LinkModel link = default_link();
    CHECK(link.p_int(200.0, 1e7) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(link.p_int(20000.0, 10.0) == 0.0);  // nothing survives propagation

    // all-or-nothing PHY at 20 dB, strong wanted signal, equally strong interferer
    const LinkModel hard = link_with(step_bler(20.0), 1.0);
    CHECK(hard.delta_pro(10.0).value < 1e-6);
    CHECK(hard.p_int(10.0, 10.0) > 0.999);

    const auto profile = link.profile(150.0);
    CHECK_FALSE(profile.degenerate());
    CHECK(link.profile(20000.0).degenerate());
}

TEST_CASE("p_int decreases as the interferer moves away") {
    const LinkModel link = default_link();
    for (double d_tr : {50.0, 250.0, 450.0}) {
        auto profile = link.profile(d_tr);
        double prev = 1.0;
        for (double d_ir = 1.0; d_ir < 3000.0; d_ir *= 1.15) {
            const double p = profile.p_int(d_ir);
            CHECK(p >= 0.0);
            CHECK(p <= prev + 1e-12);
            prev = p;
        }
    }
}

TEST_CASE("p_int matches the joint-shadowing oracle") {
    std::mt19937_64 rng(13);
    const LinkModel link = default_link();
    const auto e = oracle::p_int(link, 100.0, 50.0, kDraws, rng);
    const double v = link.p_int(100.0, 50.0);
    CHECK_MESSAGE(e.agrees(v), "model " << v << " oracle " << e.mean << " +- " << e.se);

    auto profile = link.profile(100.0);
    CHECK(profile.p_int(50.0) == doctest::Approx(v).epsilon(2e-3));
}

TEST_CASE("literal dB interference matches its oracle") {
    auto cfg = make_scenario(0.1, 20.0, 10, 4);
    cfg.interference = InterferenceModel::literal_db;
    const LinkModel link = cfg.link();
    std::mt19937_64 rng(14);
    const auto e = oracle::p_int(link, 300.0, 200.0, kDraws, rng);
    const double v = link.p_int(300.0, 200.0);
    CHECK_MESSAGE(e.agrees(v), "model " << v << " oracle " << e.mean << " +- " << e.se);
}

TEST_CASE("SINR penalty") {
    const LinkModel link = default_link();
    const double n0 = link.radio().noise_power_dbm;
    CHECK(link.sinr_penalty_db(n0) == doctest::Approx(10.0 * std::log10(2.0)));
    CHECK(link.sinr_penalty_db(-400.0) == doctest::Approx(0.0).epsilon(1e-12));
}
