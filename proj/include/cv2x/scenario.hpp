#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cv2x/propagation.hpp"

namespace cv2x {

/// Piecewise-linear weight between the Step-2 and Step-3 collision models as a
/// function of the channel busy ratio. Flat outside the first and last knots.
struct AlphaCurve {
    std::vector<std::pair<double, double>> knots{{0.2, 0.0}, {0.7, 1.0}};

    double operator()(double cbr) const;
};

/// Highway-LOS style log-distance defaults; see README for how they were chosen.
PathlossModel default_pathloss();

struct ScenarioConfig {
    double beta = 0.1;             // vehicles per meter
    int lambda_hz = 10;            // packets per second per vehicle
    int subchannels = 4;           // S, resources per sub-frame
    int packet_size_bytes = 190;
    int mcs_id = 9;
    RadioConfig radio{};
    PathlossModel pathloss = default_pathloss();
    ShadowingModel shadowing{};
    std::shared_ptr<const BlerTable> bler;  // null selects default_bler(mcs_id)
    double delta_db = 0.5;         // Step-3 threshold increment
    int resel_min = 5;
    int resel_max = 15;
    InterferenceModel interference = InterferenceModel::linear_sum;
    IntegrationGrid grid{};
    AlphaCurve alpha{};

    // simulator only
    double rsrp_threshold_dbm = -110.0;
    std::optional<double> busy_threshold_dbm;  // defaults to the sensing threshold

    BlerTable bler_table() const;
    double busy_threshold() const { return busy_threshold_dbm.value_or(radio.sensing_threshold_dbm); }
    LinkModel link() const;
    /// Short identifier used in output file names, e.g. "pt20_b0.1_l10_s4".
    std::string tag() const;
};

/// Reselection-counter bounds mandated for a packet rate: (5,15), (10,30), (25,75).
std::pair<int, int> reselection_bounds(int lambda_hz);

/// Semi-persistent period in sub-frames (equals the selection-window length).
int period_subframes(int lambda_hz);

/// Highway scenario with the stock radio settings: MCS 9 for 4 sub-channels, MCS 7 for 2.
ScenarioConfig make_scenario(double beta, double tx_power_dbm, int lambda_hz, int subchannels);

/// Throws ConfigError on any violated precondition.
void validate(const ScenarioConfig& cfg);

}  // namespace cv2x
