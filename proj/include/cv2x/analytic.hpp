#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cv2x/propagation.hpp"
#include "cv2x/scenario.hpp"

namespace cv2x {

struct ResourceCounts {
    int n_total = 0;            // N, resources in the selection window
    double n_excluded = 0.0;    // N_E, step specific
    double n_assignable = 0.0;  // N_A = N - N_E
    int n_candidate = 0;        // N_C = round(0.2 N)
    double tau = 1.0;           // mean reselection counter
};

struct CommonResources {
    double c_excluded = 0.0;
    double c_assignable = 0.0;
    double c_candidate = 0.0;
};

/// One point of the PDR curve with its four-way error split. The *_norm
/// shares and pdr sum to one.
struct PdrBreakdown {
    double distance_m = 0.0;
    double pdr = 1.0;
    double hd_norm = 0.0;
    double sen_norm = 0.0;
    double pro_norm = 0.0;
    double col_norm = 0.0;
    double delta_hd = 0.0;
    double delta_sen = 0.0;
    double delta_pro = 0.0;
    double delta_col = 0.0;
    bool sensing_dominated = false;
};

struct Step3Exclusion {
    double n_excluded = 0.0;
    int n_steps = 0;
};

/// Half-duplex loss, lambda / 1000. Throws ConfigError outside [1, 1000] Hz.
double delta_hd(double lambda_hz);

/// N, N_C and tau for a scenario; n_excluded is left at zero.
ResourceCounts resource_counts(const ScenarioConfig& cfg);
ResourceCounts with_excluded(ResourceCounts counts, double n_excluded);

/// beta * sum over integer meters of psr(|i|), truncated once psr < cutoff.
double s_psr(double beta, const std::function<double(double)>& psr, double cutoff = 1e-6);

/// Expected excluded resources for s_psr sensed vehicles among n_total:
/// s/2 + sum_{k=1}^{round(s/2)} max(1 - k / (N - s/2), 0), clamped to [0, N].
double n_excluded_from_sensed(double s_psr, int n_total);

/// Step-2 excluded resources (sensing at the nominal threshold).
inline double n_excluded_step2(double s_psr, int n_total) { return n_excluded_from_sensed(s_psr, n_total); }

/// Step-3 exclusions: raises the sensing threshold by delta_db until the
/// exclusion count over a doubled density drops to 0.8 N. Throws ModelError
/// once the offset exceeds 60 dB.
Step3Exclusion n_excluded_step3(const ScenarioConfig& cfg, int n_total);

/// Probability that two vehicles ignore each other's transmissions when selecting.
double p_s(double psr_value, double tau);

/// Expected common candidates when both vehicles draw N_C of their N_A
/// assignable resources and c_assignable of those are shared.
double common_candidates(double c_assignable, const ResourceCounts& counts);

/// Probability that two vehicles end up on the same resource.
double p_sim_from(double p_s, double c_candidate, int n_candidate);

/// Product-form combination 1 - prod(1 - p_i).
double combine_collisions(std::span<const double> per_interferer);

/// Builds the normalised split from the four raw error probabilities.
PdrBreakdown compose_breakdown(double distance_m, double hd, double sen, double pro, double col);

/// Analytical PDR model for one scenario. Holds per-scenario caches (PSR
/// table, per-interferer p_sim), so one instance must not be shared between
/// threads; separate instances are independent.
class AnalyticModel {
public:
    explicit AnalyticModel(ScenarioConfig cfg);

    const ScenarioConfig& config() const { return cfg_; }
    const LinkModel& link() const { return link_; }
    const ResourceCounts& counts() const { return counts_; }

    double psr(double distance_m) const;
    /// Sensed-vehicle count seen by one vehicle.
    double s_psr() const { return s_psr_; }
    double n_excluded_step2() const { return n_excluded_step2_; }
    const Step3Exclusion& n_excluded_step3() const { return step3_; }
    double cbr() const { return n_excluded_step2_ / double(counts_.n_total); }
    double alpha() const { return cfg_.alpha(cbr()); }

    /// Autocorrelation of the PSR profile over 1 m steps.
    double r_psr(double lag_m) const;
    double r_psr0() const { return r0_; }

    CommonResources common_resources(double d_ti, const ResourceCounts& counts) const;
    const ResourceCounts& step2_counts() const { return step2_counts_; }
    const ResourceCounts& step3_counts() const { return step3_counts_; }

    double p_s(double d_ti) const;
    double p_sim_step2(double d_ti) const;
    double p_sim_step3(double d_ti) const;
    double p_sim(double d_ti) const;

    double delta_col(double d_tr);
    PdrBreakdown breakdown(double distance_m);
    std::vector<PdrBreakdown> pdr_curve(std::span<const double> distances);

private:
    double p_sim_at_index(long i);
    double p_sim_with(double d_ti, const ResourceCounts& counts) const;

    ScenarioConfig cfg_;
    LinkModel link_;
    ResourceCounts counts_;
    std::vector<double> psr_m_;  // psr at integer meters until it drops below the cutoff
    double s_psr_ = 0.0;
    double r0_ = 0.0;
    double n_excluded_step2_ = 0.0;
    Step3Exclusion step3_;
    ResourceCounts step2_counts_;
    ResourceCounts step3_counts_;
    std::vector<double> p_sim_cache_;  // by |vehicle index|
};

/// Convenience wrapper: builds an AnalyticModel and evaluates the curve.
std::vector<PdrBreakdown> pdr_curve(const ScenarioConfig& cfg, std::span<const double> distances);

/// 0, step, 2*step, ... up to and including max_m.
std::vector<double> distance_grid(double max_m = 1000.0, double step_m = 10.0);

}  // namespace cv2x
