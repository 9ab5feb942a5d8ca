#include "cv2x/scenario.hpp"

#include <cmath>
#include <cstdio>

#include "cv2x/error.hpp"

namespace cv2x {

double AlphaCurve::operator()(double cbr) const {
    if (knots.empty()) return 0.0;
    if (cbr <= knots.front().first) return knots.front().second;
    if (cbr >= knots.back().first) return knots.back().second;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        const auto& [x1, y1] = knots[i];
        if (cbr <= x1) {
            const auto& [x0, y0] = knots[i - 1];
            // knots are decimal inputs; snapping the span keeps 0.7 - 0.2 at exactly 0.5
            const double span = std::round((x1 - x0) * 1e12) / 1e12;
            return y0 + (cbr - x0) / span * (y1 - y0);
        }
    }
    return knots.back().second;
}

PathlossModel default_pathloss() { return {3.6, 40.0, 1.0}; }

BlerTable ScenarioConfig::bler_table() const { return bler ? *bler : default_bler(mcs_id); }

LinkModel ScenarioConfig::link() const {
    return LinkModel(radio, pathloss, shadowing, bler_table(), grid, interference);
}

std::string ScenarioConfig::tag() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "pt%g_b%g_l%d_s%d", radio.tx_power_dbm, beta, lambda_hz, subchannels);
    return buf;
}

std::pair<int, int> reselection_bounds(int lambda_hz) {
    switch (lambda_hz) {
        case 10: return {5, 15};
        case 20: return {10, 30};
        case 50: return {25, 75};
        default: throw ConfigError("lambda_hz must be 10, 20 or 50 (got " + std::to_string(lambda_hz) + ")");
    }
}

int period_subframes(int lambda_hz) {
    reselection_bounds(lambda_hz);
    return 1000 / lambda_hz;
}

ScenarioConfig make_scenario(double beta, double tx_power_dbm, int lambda_hz, int subchannels) {
    ScenarioConfig cfg;
    cfg.beta = beta;
    cfg.radio.tx_power_dbm = tx_power_dbm;
    cfg.lambda_hz = lambda_hz;
    cfg.subchannels = subchannels;
    cfg.mcs_id = subchannels == 2 ? 7 : 9;
    std::tie(cfg.resel_min, cfg.resel_max) = reselection_bounds(lambda_hz);
    return cfg;
}

void validate(const ScenarioConfig& cfg) {
    if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta)) throw ConfigError("beta must be > 0");
    const auto [lo, hi] = reselection_bounds(cfg.lambda_hz);
    if (cfg.resel_min != lo || cfg.resel_max != hi) {
        throw ConfigError("reselection bounds for " + std::to_string(cfg.lambda_hz) + " Hz must be (" +
                          std::to_string(lo) + ", " + std::to_string(hi) + ")");
    }
    if (cfg.subchannels < 1) throw ConfigError("subchannels must be >= 1");
    if (cfg.packet_size_bytes < 1) throw ConfigError("packet_size_bytes must be >= 1");
    if (!(cfg.delta_db > 0.0)) throw ConfigError("delta_db must be > 0");
    for (std::size_t i = 1; i < cfg.alpha.knots.size(); ++i) {
        if (!(cfg.alpha.knots[i].first > cfg.alpha.knots[i - 1].first)) {
            throw ConfigError("alpha knots must have increasing CBR");
        }
    }
    validate(cfg.radio);
    validate(cfg.pathloss);
    validate(cfg.shadowing);
    cfg.bler_table();
}

}  // namespace cv2x
