#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cv2x/analytic.hpp"
#include "cv2x/error.hpp"
#include "oracles.hpp"

using namespace cv2x;

namespace {

ScenarioConfig base(double beta = 0.1, double pt = 20.0, int lambda = 10, int s = 4) {
    return make_scenario(beta, pt, lambda, s);
}

}  // namespace

TEST_CASE("half-duplex probability") {
    CHECK(delta_hd(10) == 0.01);
    CHECK(delta_hd(20) == 0.02);
    CHECK(delta_hd(1000) == 1.0);
    CHECK_THROWS_AS(delta_hd(0.5), ConfigError);
    CHECK_THROWS_AS(delta_hd(1001), ConfigError);
}

TEST_CASE("resource counts") {
    auto c = resource_counts(base());
    CHECK(c.n_total == 400);
    CHECK(c.n_candidate == 80);
    CHECK(c.tau == 10.0);
    CHECK(c.n_assignable == 400.0);

    c = resource_counts(base(0.1, 20, 10, 2));
    CHECK(c.n_total == 200);
    CHECK(c.n_candidate == 40);

    c = resource_counts(base(0.1, 20, 20, 4));
    CHECK(c.n_total == 200);
    CHECK(c.tau == 20.0);

    auto odd = base(0.1, 20, 10, 1);
    odd.lambda_hz = 30;  // 1000/30 is not whole
    CHECK_THROWS_AS(resource_counts(odd), ConfigError);

    const auto e = with_excluded(resource_counts(base()), 500.0);
    CHECK(e.n_excluded == 400.0);
    CHECK(e.n_assignable == 0.0);
}

TEST_CASE("scenario validation") {
    CHECK_THROWS_AS(reselection_bounds(15), ConfigError);
    CHECK(reselection_bounds(50) == std::pair{25, 75});
    auto cfg = base();
    cfg.resel_max = 20;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = base();
    cfg.beta = 0.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    CHECK_THROWS_AS(validate(base(0.1, 24.0)), ConfigError);
    CHECK(base(0.1, 20, 10, 2).mcs_id == 7);
    CHECK(base().tag() == "pt20_b0.1_l10_s4");
}

TEST_CASE("sensed vehicle count") {
    CHECK(s_psr(0.1, [](double) { return 0.0; }) == 0.0);
    // hard disc of radius 100 m
    const double disc = s_psr(0.1, [](double d) { return d <= 100.0 ? 1.0 : 0.0; });
    CHECK(std::abs(disc - 2.0 * 0.1 * 100.0) <= 0.1 + 1e-12);
    CHECK_THROWS_AS(s_psr(0.0, [](double) { return 1.0; }), ConfigError);

    AnalyticModel m(base());
    double direct = m.psr(0.0);
    for (long i = 1; m.psr(double(i) / 0.1) > 1e-9; ++i) direct += 2.0 * m.psr(double(i) / 0.1);
    CHECK(m.s_psr() == doctest::Approx(direct).epsilon(0.01));
}

TEST_CASE("step-2 exclusions") {
    CHECK(n_excluded_step2(0.0, 400) == 0.0);
    CHECK(n_excluded_step2(2.0, 400) == doctest::Approx(1.0 + (1.0 - 1.0 / 399.0)).epsilon(1e-12));
    CHECK(n_excluded_step2(5000.0, 400) == 400.0);
    CHECK(n_excluded_step2(800.0, 400) == 400.0);
    double prev = 0.0;
    for (double s = 0.0; s < 900.0; s += 3.7) {
        const double v = n_excluded_step2(s, 400);
        CHECK(v >= prev - 1e-9);
        CHECK(v <= 400.0);
        prev = v;
    }
}

TEST_CASE("step-3 exclusions") {
    SUBCASE("low density exits at n = 0 with the doubled density") {
        const auto cfg = base(0.05);
        const auto r = n_excluded_step3(cfg, 400);
        CHECK(r.n_steps == 0);
        const LinkModel link = cfg.link();
        const double doubled = s_psr(2.0 * cfg.beta, [&](double d) { return link.psr(d); });
        CHECK(r.n_excluded == doctest::Approx(n_excluded_step2(doubled, 400)).epsilon(1e-12));
    }
    SUBCASE("sharp sensing range under heavy load raises the threshold") {
        auto cfg = base(0.3, 23.0);
        cfg.shadowing.sigma_db = 0.05;
        const auto r = n_excluded_step3(cfg, 400);
        CHECK(r.n_steps > 0);
        CHECK(r.n_excluded <= 0.8 * 400 + 1.0);
    }
    SUBCASE("vanishing density") { CHECK(n_excluded_step3(base(1e-6), 400).n_excluded < 1e-3); }
    SUBCASE("search gives up past 60 dB") {
        auto cfg = base(50.0);
        CHECK_THROWS_AS(n_excluded_step3(cfg, 400), ModelError);
    }
    SUBCASE("non-positive increment") {
        auto cfg = base();
        cfg.delta_db = 0.0;
        CHECK_THROWS_AS(n_excluded_step3(cfg, 400), ConfigError);
    }
}

TEST_CASE("common resources") {
    AnalyticModel m(base());
    const auto counts = m.step2_counts();
    const double n = counts.n_total, ne = counts.n_excluded;

    const auto far = m.common_resources(1e5, counts);
    CHECK(far.c_excluded == doctest::Approx(ne * ne / n).epsilon(1e-12));

    const auto none = m.common_resources(0.0, with_excluded(counts, 0.0));
    CHECK(none.c_excluded == 0.0);
    CHECK(none.c_assignable == n);
    CHECK(none.c_candidate == doctest::Approx(counts.n_candidate * counts.n_candidate / n));

    for (double d : {0.0, 30.0, 200.0, 600.0, 5000.0}) {
        for (const auto& c : {m.step2_counts(), m.step3_counts()}) {
            const auto r = m.common_resources(d, c);
            CHECK(r.c_excluded >= 0.0);
            CHECK(r.c_excluded <= c.n_excluded + 1e-9);
            CHECK(r.c_assignable >= 0.0);
            CHECK(r.c_assignable <= c.n_assignable + 1e-9);
            CHECK(r.c_candidate <= c.n_candidate + 1e-9);
        }
    }
}

TEST_CASE("common exclusions of co-located vehicles match set sampling") {
    AnalyticModel m(base());
    std::mt19937_64 rng(21);
    const auto o = oracle::co_located_exclusions(m.link(), 0.1, 20000, rng);
    const auto c = m.common_resources(0.0, m.step2_counts());
    const double model_ratio = c.c_excluded / m.step2_counts().n_excluded;
    CHECK(model_ratio == doctest::Approx(o.common / o.excluded).epsilon(0.05));
}

TEST_CASE("autocorrelation peaks at zero lag") {
    AnalyticModel m(base());
    const double r0 = m.r_psr0();
    CHECK(r0 == doctest::Approx(m.r_psr(0.0)));
    for (double d = 0.0; d < 2000.0; d += 12.5) CHECK(m.r_psr(d) <= r0 + 1e-9);
    CHECK(m.r_psr(1e6) == 0.0);
}

TEST_CASE("sensing-independence probability") {
    CHECK(p_s(0.0, 10.0) == 1.0);
    CHECK(p_s(1.0, 10.0) == doctest::Approx(0.1));
    CHECK(p_s(0.37, 1.0) == 1.0);
    CHECK_THROWS_AS(p_s(0.5, 0.5), ConfigError);
}

TEST_CASE("alpha weighting") {
    const AlphaCurve a;
    CHECK(a(0.0) == 0.0);
    CHECK(a(0.1) == 0.0);
    CHECK(a(0.2) == 0.0);
    CHECK(a(0.45) == 0.5);
    CHECK(a(0.7) == 1.0);
    CHECK(a(0.8) == 1.0);
    CHECK(a(1.0) == 1.0);
    double prev = 0.0;
    for (double x = 0.0; x <= 1.0; x += 0.001) {
        CHECK(a(x) >= prev);
        CHECK(a(x) - prev < 0.0021);
        prev = a(x);
    }
}

TEST_CASE("simultaneous-selection probability") {
    AnalyticModel m(base(0.2));
    const double far = 1e5;
    CHECK(m.p_s(far) == 1.0);
    auto expected = [&](const ResourceCounts& c) {
        const double nn = c.n_total, ne = c.n_excluded;
        const double ca = std::max(0.0, nn - 2.0 * ne + ne * ne / nn);
        return common_candidates(ca, c) / (double(c.n_candidate) * c.n_candidate);
    };
    const double a = m.alpha();
    CHECK(m.p_sim(far) ==
          doctest::Approx(a * expected(m.step2_counts()) + (1.0 - a) * expected(m.step3_counts())).epsilon(1e-12));
    // far apart vehicles pick independently: one chance in N
    CHECK(m.p_sim_step2(far) == doctest::Approx(1.0 / m.counts().n_total).epsilon(1e-9));

    for (double d : {0.0, 10.0, 100.0, 400.0}) {
        CHECK(m.p_sim(d) >= 0.0);
        CHECK(m.p_sim(d) <= 1.0);
    }
    CHECK(m.p_sim(0.0) < m.p_sim(far));  // neighbours see each other
}

TEST_CASE("two-vehicle selection matches brute force") {
    ResourceCounts toy;
    toy.n_total = 20;
    toy.n_candidate = 4;
    toy = with_excluded(toy, 4.0);
    std::mt19937_64 rng(22);
    for (int ca : {12, 14, 16}) {
        const auto e = oracle::same_resource(20, 4, 16, ca, 200000, rng);
        const double model = p_sim_from(1.0, common_candidates(ca, toy), toy.n_candidate);
        CHECK_MESSAGE(e.agrees(model), "C_A=" << ca << " model " << model << " oracle " << e.mean);
    }
    CHECK(p_sim_from(0.4, 2.0, 4) == doctest::Approx(0.05));
    CHECK_THROWS_AS(p_sim_from(1.0, 1.0, 0), ConfigError);
}

TEST_CASE("collision combination") {
    CHECK(combine_collisions({}) == 0.0);
    const std::vector<double> one{0.3};
    CHECK(combine_collisions(one) == doctest::Approx(0.3));
    const std::vector<double> zeros(10, 0.0);
    CHECK(combine_collisions(zeros) == 0.0);
    const std::vector<double> two{0.5, 0.5};
    CHECK(combine_collisions(two) == doctest::Approx(0.75));
}

TEST_CASE("collision curve has an interior maximum") {
    AnalyticModel m(base());
    const auto grid = distance_grid(1000.0, 25.0);
    const auto curve = m.pdr_curve(grid);
    const auto peak = std::max_element(curve.begin(), curve.end(),
                                       [](const auto& a, const auto& b) { return a.col_norm < b.col_norm; });
    CHECK(peak != curve.begin());
    CHECK(peak != curve.end() - 1);
    CHECK(peak->distance_m > 200.0);
    CHECK(peak->distance_m < 500.0);
}

TEST_CASE("breakdown composition") {
    const auto clean = compose_breakdown(0.0, 0.0, 0.0, 0.0, 0.0);
    CHECK(clean.pdr == 1.0);

    const auto hd = compose_breakdown(0.0, 0.01, 0.0, 0.0, 0.0);
    CHECK(hd.pdr == doctest::Approx(0.99));
    CHECK(hd.hd_norm == doctest::Approx(0.01));

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        const auto r = compose_breakdown(0.0, a, b, c, d);
        const double product = (1 - a) * (1 - b) * (1 - c) * (1 - d);
        CHECK(std::abs(product - (1.0 - r.hd_norm - r.sen_norm - r.pro_norm - r.col_norm)) < 1e-12);
        CHECK(std::abs(r.pdr + r.hd_norm + r.sen_norm + r.pro_norm + r.col_norm - 1.0) < 1e-12);
    }
}

TEST_CASE("pdr curve properties") {
    AnalyticModel m(base());
    const auto grid = distance_grid();
    CHECK(grid.size() == 101);
    const auto curve = m.pdr_curve(grid);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto& b = curve[i];
        CHECK(b.hd_norm == 0.01);
        CHECK(std::abs(b.pdr + b.hd_norm + b.sen_norm + b.pro_norm + b.col_norm - 1.0) < 1e-9);
        for (double v : {b.pdr, b.hd_norm, b.sen_norm, b.pro_norm, b.col_norm, b.delta_sen, b.delta_pro, b.delta_col}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        if (i > 0) {
            CHECK(b.sen_norm >= curve[i - 1].sen_norm - 1e-12);
            CHECK(b.pdr <= curve[i - 1].pdr + 1e-12);
        }
    }
    const std::vector<double> bad{-1.0};
    CHECK_THROWS_AS(m.pdr_curve(bad), ConfigError);
    CHECK_THROWS_AS(distance_grid(100.0, 0.0), ConfigError);
}

TEST_CASE("channel busy ratio grows with density and power") {
    double prev = 0.0;
    for (double b : {0.05, 0.1, 0.2, 0.3}) {
        const double lo = AnalyticModel(base(b, 20.0)).cbr();
        const double hi = AnalyticModel(base(b, 23.0)).cbr();
        CHECK(lo > prev);
        CHECK(hi >= lo);
        prev = lo;
    }
}
