#include "cv2x/analytic.hpp"

#include <algorithm>
#include <cmath>

#include "cv2x/error.hpp"

namespace cv2x {

namespace {

constexpr double kPsrCutoff = 1e-6;
constexpr double kTermCutoff = 1e-9;
constexpr double kMaxInterfererRange_m = 1e5;

// psr at integer meters 0..D with psr(D) the first value below the cutoff
std::vector<double> tabulate_psr(const std::function<double(double)>& psr, double cutoff) {
    std::vector<double> table;
    for (long i = 0;; ++i) {
        const double p = psr(double(i));
        table.push_back(p);
        if (p < cutoff || i > 1'000'000) break;
    }
    return table;
}

double two_sided_sum(const std::vector<double>& table) {
    double acc = table.front();
    for (std::size_t i = 1; i < table.size(); ++i) acc += 2.0 * table[i];
    return acc;
}

}  // namespace

double delta_hd(double lambda_hz) {
    if (!(lambda_hz >= 1.0 && lambda_hz <= 1000.0)) throw ConfigError("lambda_hz must lie in [1, 1000]");
    return lambda_hz / 1000.0;
}

ResourceCounts resource_counts(const ScenarioConfig& cfg) {
    if (cfg.lambda_hz < 1 || cfg.subchannels < 1) throw ConfigError("lambda_hz and subchannels must be positive");
    if ((1000 * cfg.subchannels) % cfg.lambda_hz != 0) {
        throw ConfigError("1000 * S / lambda is not a whole number of resources");
    }
    if (cfg.resel_min < 1 || cfg.resel_max < cfg.resel_min) throw ConfigError("invalid reselection bounds");
    ResourceCounts c;
    c.n_total = 1000 * cfg.subchannels / cfg.lambda_hz;
    c.n_candidate = int(std::lround(0.2 * c.n_total));
    c.tau = 0.5 * double(cfg.resel_min + cfg.resel_max);
    c.n_excluded = 0.0;
    c.n_assignable = c.n_total;
    return c;
}

ResourceCounts with_excluded(ResourceCounts counts, double n_excluded) {
    counts.n_excluded = std::clamp(n_excluded, 0.0, double(counts.n_total));
    counts.n_assignable = counts.n_total - counts.n_excluded;
    return counts;
}

double s_psr(double beta, const std::function<double(double)>& psr, double cutoff) {
    if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
    return beta * two_sided_sum(tabulate_psr(psr, cutoff));
}

double n_excluded_from_sensed(double s_psr, int n_total) {
    const double half = std::max(0.0, s_psr) / 2.0;
    const double n = n_total;
    if (half >= n) return n;
    const double room = n - half;
    const auto k_max = std::llround(half);
    double acc = half;
    for (long long k = 1; k <= k_max; ++k) {
        const double term = 1.0 - double(k) / room;
        if (term <= 0.0) break;
        acc += term;
    }
    return std::clamp(acc, 0.0, n);
}

Step3Exclusion n_excluded_step3(const ScenarioConfig& cfg, int n_total) {
    if (!(cfg.delta_db > 0.0)) throw ConfigError("delta_db must be > 0");
    const LinkModel link = cfg.link();
    const double limit = 0.8 * n_total;
    for (int n = 0;; ++n) {
        const double offset = n * cfg.delta_db;
        if (offset > 60.0) throw ModelError("step-3 threshold search diverged");
        // doubled density: each vehicle occupies two resources per 1000 sub-frames on average
        const double sensed = s_psr(2.0 * cfg.beta, [&](double d) { return link.psr(d, offset); });
        const double excluded = n_excluded_from_sensed(sensed, n_total);
        if (excluded <= limit) return {excluded, n};
    }
}

double p_s(double psr_value, double tau) {
    if (!(tau >= 1.0)) throw ConfigError("tau must be >= 1");
    return 1.0 - (1.0 - 1.0 / tau) * psr_value;
}

double common_candidates(double c_assignable, const ResourceCounts& counts) {
    const double na = std::max(counts.n_assignable, double(counts.n_candidate));
    const double ratio = double(counts.n_candidate) / na;
    return c_assignable * ratio * ratio;
}

double p_sim_from(double p_s, double c_candidate, int n_candidate) {
    if (n_candidate < 1) throw ConfigError("N_C must be >= 1");
    const double nc = n_candidate;
    return std::clamp(p_s * c_candidate / (nc * nc), 0.0, 1.0);
}

double combine_collisions(std::span<const double> per_interferer) {
    double survive = 1.0;
    for (double p : per_interferer) survive *= 1.0 - p;
    return 1.0 - survive;
}

PdrBreakdown compose_breakdown(double distance_m, double hd, double sen, double pro, double col) {
    PdrBreakdown b;
    b.distance_m = distance_m;
    b.delta_hd = std::clamp(hd, 0.0, 1.0);
    b.delta_sen = std::clamp(sen, 0.0, 1.0);
    b.delta_pro = std::clamp(pro, 0.0, 1.0);
    b.delta_col = std::clamp(col, 0.0, 1.0);
    const double after_hd = 1.0 - b.delta_hd;
    const double after_sen = after_hd * (1.0 - b.delta_sen);
    const double after_pro = after_sen * (1.0 - b.delta_pro);
    b.hd_norm = b.delta_hd;
    b.sen_norm = after_hd * b.delta_sen;
    b.pro_norm = after_sen * b.delta_pro;
    b.col_norm = after_pro * b.delta_col;
    b.pdr = after_pro * (1.0 - b.delta_col);
    return b;
}

AnalyticModel::AnalyticModel(ScenarioConfig cfg) : cfg_(std::move(cfg)), link_((validate(cfg_), cfg_.link())) {
    counts_ = resource_counts(cfg_);
    psr_m_ = tabulate_psr([&](double d) { return link_.psr(d); }, kPsrCutoff);
    s_psr_ = cfg_.beta * two_sided_sum(psr_m_);
    r0_ = r_psr(0.0);
    n_excluded_step2_ = cv2x::n_excluded_step2(s_psr_, counts_.n_total);
    step3_ = cv2x::n_excluded_step3(cfg_, counts_.n_total);
    // Step 2 never leaves fewer than N_C assignable resources.
    const double cap = double(counts_.n_total - counts_.n_candidate);
    step2_counts_ = with_excluded(counts_, std::min(n_excluded_step2_, cap));
    step3_counts_ = with_excluded(counts_, std::min(step3_.n_excluded, cap));
}

double AnalyticModel::psr(double distance_m) const { return link_.psr(distance_m); }

double AnalyticModel::r_psr(double lag_m) const {
    const long reach = long(psr_m_.size()) - 1;
    const double lag = std::abs(lag_m);
    if (lag > 2.0 * double(reach) + 1.0) return 0.0;
    double acc = 0.0;
    for (long i = -reach; i <= reach; ++i) {
        const double shifted = std::abs(double(i) + lag);
        const double a = psr_m_[std::size_t(std::labs(i))];
        const double b = shifted == std::floor(shifted) && shifted <= double(reach)
                             ? psr_m_[std::size_t(shifted)]
                             : link_.psr(shifted);
        acc += a * b;
    }
    return acc;
}

CommonResources AnalyticModel::common_resources(double d_ti, const ResourceCounts& counts) const {
    const double n = counts.n_total;
    const double ne = counts.n_excluded;
    const double independent = ne * ne / n;
    CommonResources c;
    if (s_psr_ > 0.0 && r0_ > 0.0) {
        const double ratio = r_psr(d_ti) / r0_;
        c.c_excluded = ratio * (cfg_.beta * ne * r0_ / s_psr_ - independent) + independent;
    } else {
        c.c_excluded = independent;
    }
    c.c_excluded = std::clamp(c.c_excluded, 0.0, ne);
    c.c_assignable = n - 2.0 * ne + c.c_excluded;
    const double na = std::max(counts.n_assignable, double(counts.n_candidate));
    // two subsets of size N_A out of N share at least 2 N_A - N elements
    c.c_assignable = std::clamp(c.c_assignable, std::max(0.0, 2.0 * na - n), na);
    c.c_candidate = common_candidates(c.c_assignable, counts);
    return c;
}

double AnalyticModel::p_s(double d_ti) const { return cv2x::p_s(link_.psr(d_ti), counts_.tau); }

double AnalyticModel::p_sim_with(double d_ti, const ResourceCounts& counts) const {
    return p_sim_from(p_s(d_ti), common_resources(d_ti, counts).c_candidate, counts.n_candidate);
}

double AnalyticModel::p_sim_step2(double d_ti) const { return p_sim_with(d_ti, step2_counts_); }
double AnalyticModel::p_sim_step3(double d_ti) const { return p_sim_with(d_ti, step3_counts_); }

double AnalyticModel::p_sim(double d_ti) const {
    const double a = alpha();
    return a * p_sim_step2(d_ti) + (1.0 - a) * p_sim_step3(d_ti);
}

double AnalyticModel::p_sim_at_index(long i) {
    const auto idx = std::size_t(std::labs(i));
    if (idx >= p_sim_cache_.size()) {
        const std::size_t from = p_sim_cache_.size();
        p_sim_cache_.resize(idx + 1);
        for (std::size_t k = from; k <= idx; ++k) p_sim_cache_[k] = p_sim(double(k) / cfg_.beta);
    }
    return p_sim_cache_[idx];
}

double AnalyticModel::delta_col(double d_tr) {
    SinrLossProfile profile = link_.profile(d_tr);
    if (profile.degenerate()) return 0.0;
    // p_sim <= C_A / N_A^2 <= 1 / N_A
    const double p_sim_bound =
        1.0 / std::max(1.0, std::min(step2_counts_.n_assignable, step3_counts_.n_assignable));

    double survive = 1.0;
    for (int side : {+1, -1}) {
        for (long i = 1;; ++i) {
            const double x = side * double(i) / cfg_.beta;
            if (std::abs(x) > kMaxInterfererRange_m) break;
            const double d_ir = std::abs(x - d_tr);
            if (d_ir < 1e-6) continue;  // the receiver itself
            const double p_int = profile.p_int(d_ir);
            const double term = p_sim_at_index(i) * p_int;
            survive *= 1.0 - term;
            const bool past_receiver = side < 0 || x > d_tr;
            if (past_receiver && term < kTermCutoff && p_int * p_sim_bound < kTermCutoff) break;
        }
    }
    return std::clamp(1.0 - survive, 0.0, 1.0);
}

PdrBreakdown AnalyticModel::breakdown(double distance_m) {
    const double hd = delta_hd(cfg_.lambda_hz);
    const double sen = link_.delta_sen(distance_m);
    const PropagationLoss pro = link_.delta_pro(distance_m);
    const double col = delta_col(distance_m);
    PdrBreakdown b = compose_breakdown(distance_m, hd, sen, pro.value, col);
    b.sensing_dominated = pro.sensing_dominated;
    return b;
}

std::vector<PdrBreakdown> AnalyticModel::pdr_curve(std::span<const double> distances) {
    std::vector<PdrBreakdown> out;
    out.reserve(distances.size());
    for (double d : distances) {
        if (!(d >= 0.0)) throw ConfigError("distances must be non-negative");
        out.push_back(breakdown(d));
    }
    return out;
}

std::vector<PdrBreakdown> pdr_curve(const ScenarioConfig& cfg, std::span<const double> distances) {
    AnalyticModel model(cfg);
    return model.pdr_curve(distances);
}

std::vector<double> distance_grid(double max_m, double step_m) {
    if (!(step_m > 0.0) || max_m < 0.0) throw ConfigError("invalid distance grid");
    const auto n = std::size_t(std::floor(max_m / step_m + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = double(i) * step_m;
    return out;
}

}  // namespace cv2x
