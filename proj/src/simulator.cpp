#include "cv2x/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "cv2x/error.hpp"

namespace cv2x::sim {

namespace {

constexpr int kMinVehicles = 50;
constexpr int kCbrWindow = 100;

double dbm_to_mw(double dbm) { return std::exp(dbm * (std::numbers::ln10 / 10.0)); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

std::size_t slot_of(long t) { return std::size_t(t % kSensingWindow); }

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                      std::uint32_t(stream >> 32), 0x5eedu};
    return std::mt19937_64(seq);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::ok: return "OK";
        case Outcome::hd: return "HD";
        case Outcome::sen: return "SEN";
        case Outcome::pro: return "PRO";
        case Outcome::col: return "COL";
    }
    return "?";
}

std::uint64_t BinCounts::total() const {
    std::uint64_t acc = 0;
    for (auto c : n) acc += c;
    return acc;
}

std::vector<double> SimStats::bin_centers() const {
    std::vector<double> out(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) out[i] = bin_center(i);
    return out;
}

std::uint64_t SimStats::attempts() const {
    std::uint64_t acc = 0;
    for (const auto& b : bins) acc += b.total();
    return acc;
}

double SimStats::share(std::size_t i, Outcome o) const {
    const auto total = bins.at(i).total();
    return total == 0 ? 0.0 : double(bins[i][o]) / double(total);
}

double SimStats::pooled_share(Outcome o) const {
    std::uint64_t hits = 0;
    for (const auto& b : bins) hits += b[o];
    const auto total = attempts();
    return total == 0 ? 0.0 : double(hits) / double(total);
}

double SimStats::mean_cbr() const {
    if (cbr_series.empty()) return 0.0;
    double acc = 0.0;
    for (double c : cbr_series) acc += c;
    return acc / double(cbr_series.size());
}

void SimStats::record(double distance_m, Outcome o) {
    if (!(distance_m >= 0.0) || distance_m >= max_distance_m) return;
    const auto i = std::size_t(distance_m / bin_width_m);
    if (i >= bins.size()) return;
    ++bins[i].n[std::size_t(o)];
}

void SimStats::merge(const SimStats& other) {
    if (bins.empty()) {
        *this = other;
        return;
    }
    if (other.bins.size() != bins.size() || other.bin_width_m != bin_width_m) {
        throw ConfigError("cannot merge statistics with different binning");
    }
    for (std::size_t i = 0; i < bins.size(); ++i) {
        for (std::size_t k = 0; k < kOutcomeCount; ++k) bins[i].n[k] += other.bins[i].n[k];
    }
    cbr_series.insert(cbr_series.end(), other.cbr_series.begin(), other.cbr_series.end());
}

double World::distance(int a, int b) const {
    const double dx = std::abs(vehicles[std::size_t(a)].position_m - vehicles[std::size_t(b)].position_m);
    return std::min(dx, length_m - dx);
}

World make_world(const ScenarioConfig& cfg, std::vector<double> positions_m, double length_m, std::uint64_t seed) {
    validate(cfg);
    if (!(length_m > 0.0)) throw ConfigError("road length must be > 0");
    if (positions_m.empty()) throw ConfigError("no vehicles");

    World w(cfg);
    w.length_m = length_m;
    w.period = period_subframes(cfg.lambda_hz);
    w.channel_rng = derive_rng(seed, 0);

    const auto s = std::size_t(cfg.subchannels);
    const auto n = positions_m.size();
    w.vehicles.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = w.vehicles[i];
        v.id = int(i);
        v.position_m = std::fmod(positions_m[i], length_m);
        if (v.position_m < 0.0) v.position_m += length_m;
        v.rng = derive_rng(seed, i + 1);
        v.generation_phase = uniform_int(v.rng, 0, w.period - 1);
        // reservation made one period before t = 0
        long first = long(v.generation_phase) - w.period + uniform_int(v.rng, 1, w.period);
        if (first < 0) first += w.period;
        v.reserved = {first, uniform_int(v.rng, 0, cfg.subchannels - 1)};
        v.reselection_counter = uniform_int(v.rng, cfg.resel_min, cfg.resel_max);
        v.rssi_mw.assign(std::size_t(kSensingWindow) * s, 0.0f);
        v.tx_at.assign(std::size_t(kSensingWindow), -1);
        v.sensed.assign(n, SensedReservation{});
    }
    return w;
}

World build_scenario(const ScenarioConfig& cfg, double length_m, std::uint64_t seed) {
    if (!(cfg.beta > 0.0)) throw ConfigError("beta must be > 0");
    const auto count = long(std::llround(length_m * cfg.beta));
    if (count < kMinVehicles) {
        throw ConfigError("scenario has " + std::to_string(count) + " vehicles, at least " +
                          std::to_string(kMinVehicles) + " are required");
    }
    std::vector<double> positions(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) positions[std::size_t(i)] = double(i) / cfg.beta;
    return make_world(cfg, std::move(positions), length_m, seed);
}

SelectionResult sps_select(VehicleState& v, const World& world, long t_b) {
    const int period = world.period;
    const int s = world.cfg.subchannels;
    const int n = period * s;
    const int n_candidates = int(std::lround(0.2 * n));
    const auto index = [s](int offset, int c) { return (offset - 1) * s + c; };

    // Own transmissions: the sub-frame was not monitored in the matching past periods.
    std::vector<char> own_blocked(std::size_t(period) + 1, 0);
    for (int o = 1; o <= period; ++o) {
        const long sf = t_b + o;
        for (long past = sf - period; past >= 0 && past > t_b - kSensingWindow; past -= period) {
            if (v.tx_at[slot_of(past)] == past) {
                own_blocked[std::size_t(o)] = 1;
                break;
            }
        }
    }

    struct Reserved {
        int idx;
        double rsrp_dbm;
    };
    std::vector<Reserved> reserved;
    for (std::size_t u = 0; u < v.sensed.size(); ++u) {
        const auto& r = v.sensed[u];
        if (int(u) == v.id || r.last_seen < 0 || t_b - r.last_seen >= kSensingWindow || r.remaining <= 0) continue;
        // first reserved occurrence inside (t_b, t_b + period]
        const long m = (t_b + 1 - r.last_seen + period - 1) / period;
        if (m < 1 || m > r.remaining) continue;
        const long sf = r.last_seen + m * period;
        reserved.push_back({index(int(sf - t_b), r.subchannel), mw_to_dbm(r.rsrp_sum_mw / r.rsrp_samples)});
    }

    SelectionResult out;
    out.window_resources = n;
    double threshold = world.cfg.rsrp_threshold_dbm;
    std::vector<char> excluded;
    for (;;) {
        excluded.assign(std::size_t(n), 0);
        for (int o = 1; o <= period; ++o) {
            if (!own_blocked[std::size_t(o)]) continue;
            for (int c = 0; c < s; ++c) excluded[std::size_t(index(o, c))] = 1;
        }
        bool any_above = false;
        for (const auto& r : reserved) {
            if (r.rsrp_dbm > threshold) {
                excluded[std::size_t(r.idx)] = 1;
                any_above = true;
            }
        }
        out.available = int(std::count(excluded.begin(), excluded.end(), 0));
        if (out.available >= n_candidates || !any_above) break;
        threshold += 3.0;
        ++out.iterations;
    }
    out.rsrp_threshold_dbm = threshold;

    // Step 3: rank L_A by RSSI averaged over the same resource in past periods.
    struct Ranked {
        int idx;
        double rssi;
    };
    std::vector<Ranked> available;
    available.reserve(std::size_t(out.available));
    for (int o = 1; o <= period; ++o) {
        const long sf = t_b + o;
        for (int c = 0; c < s; ++c) {
            const int idx = index(o, c);
            if (excluded[std::size_t(idx)]) continue;
            double acc = 0.0;
            int samples = 0;
            for (long past = sf - period; past >= 0 && past > t_b - kSensingWindow; past -= period) {
                acc += v.rssi_mw[slot_of(past) * std::size_t(s) + std::size_t(c)];
                ++samples;
            }
            available.push_back({idx, samples > 0 ? acc / samples : 0.0});
        }
    }
    std::shuffle(available.begin(), available.end(), v.rng);
    std::stable_sort(available.begin(), available.end(),
                     [](const Ranked& a, const Ranked& b) { return a.rssi < b.rssi; });
    const auto keep = std::min<std::size_t>(std::size_t(n_candidates), available.size());
    out.candidates.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const int idx = available[i].idx;
        out.candidates.push_back({t_b + 1 + idx / s, idx % s});
    }
    if (!out.candidates.empty()) {
        out.chosen = out.candidates[std::size_t(uniform_int(v.rng, 0, int(out.candidates.size()) - 1))];
    }
    return out;
}

Outcome classify_rx(bool rx_transmitting, double rx_power_dbm, double interference_mw, double u,
                    const LinkModel& link) {
    if (rx_transmitting) return Outcome::hd;
    const auto& radio = link.radio();
    if (rx_power_dbm <= radio.sensing_threshold_dbm) return Outcome::sen;
    const auto& bler = link.bler();
    if (u < bler(rx_power_dbm - radio.noise_power_dbm)) return Outcome::pro;
    if (interference_mw > 0.0) {
        const double sinr = rx_power_dbm - mw_to_dbm(dbm_to_mw(radio.noise_power_dbm) + interference_mw);
        if (u < bler(sinr)) return Outcome::col;
    }
    return Outcome::ok;
}

void step(World& world) {
    const long t = world.now;
    const auto n = world.vehicles.size();
    const auto s = std::size_t(world.cfg.subchannels);
    const std::size_t slot = slot_of(t);
    const auto& radio = world.link.radio();
    const double sigma = world.link.shadowing().sigma_db;

    std::vector<int> tx;
    std::vector<char> transmitting(n, 0);
    for (auto& v : world.vehicles) {
        std::fill_n(v.rssi_mw.begin() + std::ptrdiff_t(slot * s), s, 0.0f);
        if (v.reserved.subframe == t) {
            tx.push_back(v.id);
            transmitting[std::size_t(v.id)] = 1;
        }
    }

    if (!tx.empty()) {
        const std::size_t k_tx = tx.size();
        std::normal_distribution<double> shadow(0.0, sigma);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        // received power of every transmission at every vehicle
        std::vector<double> p_dbm(k_tx * n, -std::numeric_limits<double>::infinity());
        std::vector<double> p_mw(k_tx * n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = 0; k < k_tx; ++k) {
                if (std::size_t(tx[k]) == r) continue;
                const double d = world.distance(tx[k], int(r));
                const double p = world.link.mean_rx_dbm(d) - shadow(world.channel_rng);
                p_dbm[k * n + r] = p;
                p_mw[k * n + r] = dbm_to_mw(p);
            }
        }

        for (std::size_t r = 0; r < n; ++r) {
            if (transmitting[r]) continue;
            auto& rssi = world.vehicles[r].rssi_mw;
            for (std::size_t k = 0; k < k_tx; ++k) {
                const auto c = std::size_t(world.vehicles[std::size_t(tx[k])].reserved.subchannel);
                rssi[slot * s + c] += float(p_mw[k * n + r]);
            }
        }

        for (std::size_t k = 0; k < k_tx; ++k) {
            const auto& sender = world.vehicles[std::size_t(tx[k])];
            const int c = sender.reserved.subchannel;
            for (std::size_t r = 0; r < n; ++r) {
                if (std::size_t(sender.id) == r) continue;
                const double d = world.distance(sender.id, int(r));
                Outcome outcome;
                if (transmitting[r]) {
                    outcome = Outcome::hd;
                } else {
                    double interference = 0.0;
                    for (std::size_t k2 = 0; k2 < k_tx; ++k2) {
                        if (k2 == k || world.vehicles[std::size_t(tx[k2])].reserved.subchannel != c) continue;
                        interference += p_mw[k2 * n + r];
                    }
                    const double p = p_dbm[k * n + r];
                    const double u = unit(world.channel_rng);
                    outcome = classify_rx(false, p, interference, u, world.link);

                    const bool sci_decoded =
                        p > radio.sensing_threshold_dbm && u >= world.link.bler()(p - radio.noise_power_dbm);
                    if (sci_decoded) {
                        auto& e = world.vehicles[r].sensed[std::size_t(sender.id)];
                        const bool same = e.last_seen >= 0 && t - e.last_seen < kSensingWindow &&
                                          e.subchannel == c && (t - e.last_seen) % world.period == 0;
                        if (!same) {
                            e.rsrp_sum_mw = 0.0;
                            e.rsrp_samples = 0;
                        }
                        e.last_seen = t;
                        e.subchannel = c;
                        e.remaining = sender.reselection_counter - 1;
                        e.rsrp_sum_mw += p_mw[k * n + r];
                        ++e.rsrp_samples;
                    }
                }
                if (world.measuring) {
                    world.stats.record(d, outcome);
                    if (world.trace && d < world.stats.max_distance_m) {
                        *world.trace << t << ',' << sender.id << ',' << r << ',' << d << ',' << to_string(outcome)
                                     << '\n';
                    }
                }
            }
        }

        for (int id : tx) {
            auto& v = world.vehicles[std::size_t(id)];
            v.tx_at[slot] = t;
            ++v.packets_sent;
            --v.reselection_counter;
            if (v.reselection_counter > 0) {
                v.reserved.subframe += world.period;
            } else {
                v.reserved.subframe = -1;
            }
        }
    }

    for (auto& v : world.vehicles) {
        if (t % world.period != v.generation_phase) continue;
        ++v.packets_generated;
        if (v.reserved.subframe >= 0) continue;
        const SelectionResult sel = sps_select(v, world, t);
        v.reserved = sel.chosen;
        v.reselection_counter = uniform_int(v.rng, world.cfg.resel_min, world.cfg.resel_max);
        ++world.reselections;
    }

    ++world.now;
}

std::optional<double> measure_cbr(const World& world, int vehicle) {
    if (world.now < kCbrWindow || vehicle < 0 || std::size_t(vehicle) >= world.vehicles.size()) return std::nullopt;
    const auto s = std::size_t(world.cfg.subchannels);
    const auto busy = float(dbm_to_mw(world.cfg.busy_threshold()));
    const auto& rssi = world.vehicles[std::size_t(vehicle)].rssi_mw;
    std::size_t count = 0;
    for (long t = world.now - kCbrWindow; t < world.now; ++t) {
        const std::size_t base = slot_of(t) * s;
        for (std::size_t c = 0; c < s; ++c) count += rssi[base + c] > busy;
    }
    return double(count) / double(kCbrWindow * s);
}

std::optional<double> measure_cbr(const World& world) {
    if (world.now < kCbrWindow || world.vehicles.empty()) return std::nullopt;
    double acc = 0.0;
    for (const auto& v : world.vehicles) acc += *measure_cbr(world, v.id);
    return acc / double(world.vehicles.size());
}

SimStats run(const ScenarioConfig& cfg, double duration_s, double length_m, std::uint64_t seed,
             const RunOptions& opts) {
    if (!(duration_s > 0.0)) throw ConfigError("measured duration must be > 0");
    if (!(opts.warmup_s >= 0.0)) throw ConfigError("warmup must be >= 0");
    if (!(opts.bin_width_m > 0.0) || !(opts.max_distance_m > opts.bin_width_m)) {
        throw ConfigError("invalid distance binning");
    }
    World world = build_scenario(cfg, length_m, seed);
    world.stats.bin_width_m = opts.bin_width_m;
    world.stats.max_distance_m = opts.max_distance_m;
    world.stats.bins.resize(std::size_t(std::ceil(opts.max_distance_m / opts.bin_width_m - 1e-9)));
    world.trace = opts.trace;

    const auto warmup = long(std::llround(opts.warmup_s * 1000.0));
    const auto total = warmup + long(std::llround(duration_s * 1000.0));
    for (long t = 0; t < total; ++t) {
        world.measuring = t >= warmup;
        step(world);
        if (world.measuring && (t + 1 - warmup) % kCbrWindow == 0) {
            if (auto cbr = measure_cbr(world)) world.stats.cbr_series.push_back(*cbr);
        }
    }
    return world.stats;
}

}  // namespace cv2x::sim
