#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

namespace cv2x {

/// Log-distance pathloss: reference_loss_db + exponent_coeff * log10(d), with
/// d clamped from below at min_distance_m.
struct PathlossModel {
    double reference_loss_db = 0.0;
    double exponent_coeff = 0.0;
    double min_distance_m = 1.0;

    double loss_db(double distance_m) const;
};

/// Zero-mean log-normal shadowing (Gaussian in dB).
struct ShadowingModel {
    double sigma_db = 3.0;
};

struct RadioConfig {
    double tx_power_dbm = 20.0;
    double sensing_threshold_dbm = -90.4;
    double noise_power_dbm = -95.0;
};

void validate(const PathlossModel& pl);
void validate(const ShadowingModel& sh);
void validate(const RadioConfig& radio);

struct BlerPoint {
    double snr_db;
    double bler;
};

/// Piecewise-linear BLER(SNR) curve for one MCS.
///
/// Below the first knot the curve returns 1, above the last knot it returns
/// the last knot value. Knots must have strictly increasing SNR and
/// non-increasing BLER in [0, 1].
class BlerTable {
public:
    BlerTable(int mcs_id, std::vector<BlerPoint> points);

    double operator()(double snr_db) const { return at(snr_db); }
    double at(double snr_db) const;

    int mcs_id() const { return mcs_id_; }
    const std::vector<BlerPoint>& points() const { return points_; }
    double first_snr_db() const { return points_.front().snr_db; }
    double last_snr_db() const { return points_.back().snr_db; }

private:
    int mcs_id_;
    std::vector<BlerPoint> points_;
    // set when knots are equally spaced, enables O(1) lookup
    double uniform_step_ = 0.0;
};

/// Tabulates 1 / (1 + exp(slope * (snr - snr50))) on [lo, hi] with the given step.
BlerTable logistic_bler(int mcs_id, double snr50_db, double slope_per_db,
                        double lo_db = -10.0, double hi_db = 25.0, double step_db = 0.1);

/// Synthetic default curves. MCS 9 (QPSK r=0.7) and MCS 7 (QPSK r=0.5) are
/// known; other ids throw ConfigError.
BlerTable default_bler(int mcs_id);

/// Loads a `snr_db,bler` CSV. When mcs_id is not given it is taken from the
/// last run of digits in the file stem ("mcs9.csv" -> 9).
BlerTable load_bler_csv(const std::filesystem::path& path, std::optional<int> mcs_id = std::nullopt);

double pathloss(double distance_m, const PathlossModel& pl);

/// Probability that the received power exceeds `threshold_dbm`.
double sensing_probability(double distance_m, double tx_power_dbm, double threshold_dbm,
                           const PathlossModel& pl, const ShadowingModel& sh);

double psr(double distance_m, const RadioConfig& radio, const PathlossModel& pl,
           const ShadowingModel& sh);
double delta_sen(double distance_m, const RadioConfig& radio, const PathlossModel& pl,
                 const ShadowingModel& sh);

struct IntegrationGrid {
    double step_db = 0.1;
    double span_sigmas = 8.0;
};

/// How an interferer combines with thermal noise in the SINR.
enum class InterferenceModel {
    linear_sum,  // SINR = P_r - 10log10(10^(P_i/10) + 10^(N_0/10))
    literal_db,  // SINR = P_r - P_i - N_0, all in dB
};

/// Received-SNR distribution conditioned on P_r > P_SEN, discretised on cells
/// of width grid.step_db anchored at the sensing threshold. Cell k spans
/// SNR [floor + k*h, floor + (k+1)*h) with floor = P_SEN - N_0; the first cell
/// collects mass down to the threshold and the last one up to +inf.
struct SnrCells {
    std::size_t first = 0;
    std::vector<double> mass;  // unnormalised, sums to 1 - delta_sen
    double total = 0.0;
};

struct PropagationLoss {
    double value = 0.0;
    bool sensing_dominated = false;  // no receivable mass, loss attributed to sensing
};

class SinrLossProfile;

/// Link abstraction: pathloss, shadowing and PHY lookup for one scenario.
/// Immutable after construction and safe to share between threads.
class LinkModel {
public:
    LinkModel(RadioConfig radio, PathlossModel pl, ShadowingModel sh, BlerTable bler,
              IntegrationGrid grid = {}, InterferenceModel interference = InterferenceModel::linear_sum);

    const RadioConfig& radio() const { return radio_; }
    const PathlossModel& pathloss_model() const { return pl_; }
    const ShadowingModel& shadowing() const { return sh_; }
    const BlerTable& bler() const { return bler_; }
    const IntegrationGrid& grid() const { return grid_; }
    InterferenceModel interference_model() const { return interference_; }

    double mean_rx_dbm(double distance_m) const;
    double psr(double distance_m) const;
    double psr(double distance_m, double threshold_offset_db) const;
    double delta_sen(double distance_m) const;

    SnrCells received_cells(double distance_m) const;
    double cell_snr_db(std::size_t k) const;
    /// BLER at the centre of cell k.
    double cell_bler(std::size_t k) const;

    PropagationLoss delta_pro(double distance_m) const;

    /// Probability that one co-resource interferer at d_ir turns a packet that
    /// survives propagation at d_tr into a loss.
    double p_int(double d_tr, double d_ir) const;

    /// Interference-free SINR offset (dB) produced by an interferer of power p_i_dbm.
    double sinr_penalty_db(double interferer_dbm) const;

    /// Precomputed p_int evaluator for a fixed transmitter-receiver distance.
    SinrLossProfile profile(double d_tr) const;

private:
    RadioConfig radio_;
    PathlossModel pl_;
    ShadowingModel sh_;
    BlerTable bler_;
    IntegrationGrid grid_;
    InterferenceModel interference_;
    std::vector<double> cell_bler_;
};

/// p_int(d_tr, .) with memoised intermediate tables. Not thread-safe; keep one
/// per evaluation context.
class SinrLossProfile {
public:
    SinrLossProfile(const LinkModel& link, double d_tr);

    double delta_pro() const { return delta_pro_; }
    bool degenerate() const { return degenerate_; }

    double p_int(double d_ir);
    /// p_int for an interferer whose mean received power is mean_dbm.
    double p_int_for_mean(double mean_dbm);

private:
    double loss_given_penalty(double g_db);  // F(g) = sum_k m_k BL(snr_k - g)
    double exact_p_int(double mean_dbm);

    const LinkModel* link_;
    SnrCells cells_;
    double delta_pro_ = 0.0;
    double base_loss_ = 0.0;  // F(0) with the exact (no penalty) BLER
    bool degenerate_ = false;
    double g_step_ = 0.05;
    double g_lo_ = 0.0;
    double g_hi_ = 0.0;
    std::vector<double> f_table_;  // NaN = not yet computed
    double mean_step_ = 0.1;
    long mean_origin_ = 0;
    std::vector<double> mean_table_;
};

}  // namespace cv2x
