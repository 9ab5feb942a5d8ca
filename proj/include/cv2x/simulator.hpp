#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "cv2x/propagation.hpp"
#include "cv2x/scenario.hpp"

namespace cv2x::sim {

/// Reception outcome; the loss classes are checked in this order.
enum class Outcome : std::uint8_t { ok = 0, hd, sen, pro, col };
inline constexpr std::size_t kOutcomeCount = 5;

const char* to_string(Outcome o);

/// Sensing window length in sub-frames.
inline constexpr int kSensingWindow = 1000;

/// A (sub-frame, sub-channel) resource; subframe is absolute.
struct Resource {
    long subframe = -1;
    int subchannel = -1;

    bool operator==(const Resource&) const = default;
};

/// What a vehicle learnt from the last decoded SCI of another vehicle.
struct SensedReservation {
    long last_seen = -1;  // sub-frame of the last decoded SCI
    int subchannel = -1;
    int remaining = 0;     // transmissions still reserved after last_seen
    double rsrp_sum_mw = 0.0;
    int rsrp_samples = 0;
};

struct VehicleState {
    int id = 0;
    double position_m = 0.0;
    int generation_phase = 0;  // packets are generated at t % period == phase
    int reselection_counter = 0;
    Resource reserved;         // next transmission; subframe < 0 when none
    std::uint64_t packets_generated = 0;
    std::uint64_t packets_sent = 0;

    // sensing memory over the last kSensingWindow sub-frames
    std::vector<float> rssi_mw;                // [slot * S + subchannel]
    std::vector<long> tx_at;                   // own transmissions, [slot] = absolute sub-frame or -1
    std::vector<SensedReservation> sensed;     // by vehicle id

    std::mt19937_64 rng;
};

struct SelectionResult {
    Resource chosen;
    std::vector<Resource> candidates;  // L_C
    int available = 0;                 // |L_A|
    int window_resources = 0;
    int iterations = 0;                // +3 dB threshold raises
    double rsrp_threshold_dbm = 0.0;
};

struct BinCounts {
    std::array<std::uint64_t, kOutcomeCount> n{};

    std::uint64_t total() const;
    std::uint64_t operator[](Outcome o) const { return n[std::size_t(o)]; }
};

struct SimStats {
    double bin_width_m = 25.0;
    double max_distance_m = 1000.0;
    std::vector<BinCounts> bins;
    std::vector<double> cbr_series;

    std::size_t bin_count() const { return bins.size(); }
    double bin_center(std::size_t i) const { return (double(i) + 0.5) * bin_width_m; }
    std::vector<double> bin_centers() const;
    std::uint64_t attempts() const;
    /// Share of attempts in bin i with outcome o (PDR for Outcome::ok).
    double share(std::size_t i, Outcome o) const;
    /// Pooled share over all bins.
    double pooled_share(Outcome o) const;
    double mean_cbr() const;

    void record(double distance_m, Outcome o);
    void merge(const SimStats& other);
};

struct RunOptions {
    double warmup_s = 3.0;
    double bin_width_m = 25.0;
    double max_distance_m = 1000.0;
    std::ostream* trace = nullptr;  // CSV subframe,tx_id,rx_id,distance_m,outcome
};

/// Simulation state: vehicles on a ring road plus the channel RNG.
struct World {
    explicit World(const ScenarioConfig& c) : cfg(c), link(c.link()) {}

    ScenarioConfig cfg;
    LinkModel link;
    double length_m = 0.0;
    int period = 100;
    long now = 0;  // next sub-frame to simulate
    std::vector<VehicleState> vehicles;
    std::mt19937_64 channel_rng;

    bool measuring = false;
    SimStats stats;
    std::ostream* trace = nullptr;
    std::uint64_t reselections = 0;

    double distance(int a, int b) const;
};

/// Places vehicles every 1/beta meters on a ring of length_m; needs >= 50 vehicles.
World build_scenario(const ScenarioConfig& cfg, double length_m, std::uint64_t seed);

/// Same as build_scenario but with explicit positions and no population floor.
World make_world(const ScenarioConfig& cfg, std::vector<double> positions_m, double length_m, std::uint64_t seed);

/// Sensing-based SPS resource selection for a packet generated at sub-frame t_b.
/// Reads the vehicle's sensing memory, draws from its RNG, does not modify the
/// reservation.
SelectionResult sps_select(VehicleState& v, const World& world, long t_b);

/// Single-draw classification. `u` is one U(0,1) sample shared by the PRO and
/// COL tests, so every COL packet would have survived propagation alone.
Outcome classify_rx(bool rx_transmitting, double rx_power_dbm, double interference_mw, double u,
                    const LinkModel& link);

/// Advances the world by one sub-frame.
void step(World& world);

/// Busy-resource fraction over the trailing 100 sub-frames averaged over
/// vehicles; empty when fewer than 100 sub-frames have elapsed.
std::optional<double> measure_cbr(const World& world);
/// Same measurement seen by a single vehicle.
std::optional<double> measure_cbr(const World& world, int vehicle);

SimStats run(const ScenarioConfig& cfg, double duration_s, double length_m, std::uint64_t seed,
             const RunOptions& opts = {});

}  // namespace cv2x::sim
