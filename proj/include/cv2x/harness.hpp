#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cv2x/analytic.hpp"
#include "cv2x/scenario.hpp"
#include "cv2x/simulator.hpp"

namespace cv2x::harness {

/// Environment variable that overrides the manifest's output directory.
inline constexpr const char* kOutDirEnv = "CV2X_OUT_DIR";

/// One cell of the scenario matrix.
struct ScenarioPoint {
    double beta = 0.1;
    double tx_power_dbm = 20.0;
    int lambda_hz = 10;
    int subchannels = 4;

    std::string tag() const;
};

/// Optional replacements for the defaults of every scenario.
struct ChannelOverrides {
    std::optional<double> sigma_db;
    std::optional<double> noise_power_dbm;
    std::optional<double> sensing_threshold_dbm;
    std::optional<double> pathloss_a_db;
    std::optional<double> pathloss_b_db;
    std::optional<double> delta_db;
    std::optional<double> rsrp_threshold_dbm;
    std::optional<double> busy_threshold_dbm;
    std::optional<int> mcs_id;
    std::optional<int> packet_size_bytes;
    std::optional<InterferenceModel> interference;
    std::optional<std::filesystem::path> bler_csv;
};

struct RunManifest {
    // sweep axes; the matrix is their cartesian product
    std::vector<double> beta{0.1, 0.2, 0.3};
    std::vector<double> tx_power_dbm{20.0};
    std::vector<int> lambda_hz{10};
    std::vector<int> subchannels{4};

    std::vector<std::uint64_t> seeds{1, 2, 3};
    double duration_s = 20.0;  // measured, after warmup
    double warmup_s = 3.0;
    double road_length_m = 2000.0;
    double bin_width_m = 25.0;
    double max_distance_m = 1000.0;
    double grid_step_m = 10.0;  // analytic curve spacing
    double cbr_limit = 0.8;     // above this a comparison is flagged, not judged
    std::filesystem::path out_dir = "out";
    ChannelOverrides overrides;

    /// Ordered by lambda, subchannels, tx power, beta.
    std::vector<ScenarioPoint> scenarios() const;
    /// Throws ConfigError when the point does not form a valid scenario.
    ScenarioConfig resolve(const ScenarioPoint& p) const;
    sim::RunOptions run_options() const;
    /// Throws ConfigError when seeds or timing are unusable for simulation.
    void require_simulation_inputs() const;
};

/// Parses a YAML mapping of flat keys; sweep keys accept a scalar or a list.
RunManifest parse_manifest(const std::string& text);
RunManifest load_manifest(const std::filesystem::path& path);

/// CLI flag, then $CV2X_OUT_DIR, then the manifest value.
std::filesystem::path resolve_out_dir(const RunManifest& m, const std::optional<std::filesystem::path>& cli);

/// Mean absolute deviation in percent. Throws std::invalid_argument on length
/// mismatch or empty input.
double mad(std::span<const double> m_s, std::span<const double> m_a);

/// PDR and normalized loss shares over distance.
struct Curve {
    std::vector<double> distance_m, pdr, hd, sen, pro, col;
    std::vector<std::uint64_t> attempts;  // simulated curves only
    double cbr = 0.0;

    std::size_t size() const { return distance_m.size(); }
};

Curve curve_from(std::span<const PdrBreakdown> rows, double cbr);
Curve curve_from(const sim::SimStats& stats);

struct MadRow {
    double pdr = 0.0, hd = 0.0, sen = 0.0, pro = 0.0, col = 0.0;
};

/// Curves must share their distance grid.
MadRow compare_curves(const Curve& simulated, const Curve& analytic);

/// Header `distance_m,pdr,hd,sen,pro,col,cbr`, plus `attempts` for simulated curves.
std::string curve_csv(const Curve& c);
std::string side_by_side_csv(const Curve& simulated, const Curve& analytic);

/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Merged statistics over the manifest's seeds.
sim::SimStats simulate(const ScenarioConfig& cfg, const RunManifest& m, const std::filesystem::path* trace_dir = nullptr);

struct ScenarioResult {
    ScenarioPoint point;
    bool ok = false;
    std::string error;
    std::vector<std::filesystem::path> files;
};

struct BatchResult {
    std::vector<ScenarioResult> scenarios;
    std::vector<std::filesystem::path> files;  // summary outputs

    bool all_ok() const;
};

/// One `analytic_<tag>.csv` per scenario.
BatchResult run_analytic(const RunManifest& m, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

/// One `sim_<tag>.csv` per scenario; traces go to `trace_<tag>_seed<k>.csv` when requested.
BatchResult run_simulate(const RunManifest& m, const std::filesystem::path& out_dir, bool trace,
                         std::ostream* log = nullptr);

/// `sweep.csv` with CBR, alpha, exclusion counts and the 50% PDR range per scenario.
BatchResult run_sweep(const RunManifest& m, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

struct ReportRow {
    ScenarioPoint point;
    bool ok = false;
    std::string error;
    MadRow mad;
    double cbr_analytic = 0.0;
    double cbr_sim = 0.0;
    bool above_cbr_limit = false;
};

struct ComparisonReport {
    std::vector<ReportRow> rows;  // one per manifest scenario, in manifest order
    std::vector<std::filesystem::path> files;

    bool all_ok() const;
};

/// Header `p_t,beta,mad_pdr,mad_hd,mad_sen,mad_pro,mad_col,cbr_analytic,cbr_sim,note`.
std::string report_csv(std::span<const ReportRow> rows);

/// Simulates every scenario, evaluates the analytic model on the bin centers and
/// writes `compare_<tag>.csv` plus one `report_l<lambda>_s<S>.csv` per group.
ComparisonReport run_compare(const RunManifest& m, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

}  // namespace cv2x::harness
