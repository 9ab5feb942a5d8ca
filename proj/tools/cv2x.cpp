// Command-line front end: analytic curves, simulation, comparison and sweeps.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cv2x/error.hpp"
#include "cv2x/harness.hpp"

namespace fs = std::filesystem;
using namespace cv2x;

namespace {

enum Exit { kOk = 0, kScenarioFailed = 1, kUsage = 2 };

struct Flags {
    std::string config;
    std::vector<std::uint64_t> seeds;
    std::optional<double> duration_s;
    std::optional<fs::path> out_dir;
    std::optional<double> bin_width_m;
    bool trace = false;
};

void add_common(CLI::App& cmd, Flags& f) {
    cmd.add_option("--config", f.config, "YAML run manifest (defaults apply when omitted)");
    cmd.add_option("--seed", f.seeds, "simulation seed, repeatable; replaces the manifest seeds");
    cmd.add_option("--duration-s", f.duration_s, "measured simulation time per seed in seconds")->check(CLI::PositiveNumber);
    cmd.add_option("--out-dir", f.out_dir, std::string("output directory; overrides $") + harness::kOutDirEnv);
    cmd.add_option("--bins", f.bin_width_m, "distance bin width in meters")->check(CLI::PositiveNumber);
    cmd.add_flag("--trace", f.trace, "write per-reception trace CSVs (simulate)");
}

harness::RunManifest manifest_from(const Flags& f) {
    harness::RunManifest m = f.config.empty() ? harness::RunManifest{} : harness::load_manifest(f.config);
    if (!f.seeds.empty()) m.seeds = f.seeds;
    if (f.duration_s) m.duration_s = *f.duration_s;
    if (f.bin_width_m) m.bin_width_m = *f.bin_width_m;
    return m;
}

int exit_for(bool ok) { return ok ? kOk : kScenarioFailed; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"C-V2X Mode 4 packet delivery: analytic model and SPS simulator"};
    app.require_subcommand(1);
    Flags flags;

    auto* analytic = app.add_subcommand("analytic", "write analytic PDR curves for every scenario");
    auto* simulate = app.add_subcommand("simulate", "simulate every scenario and write binned curves");
    auto* compare = app.add_subcommand("compare", "simulate, evaluate the model on the same bins, report MAD");
    auto* sweep = app.add_subcommand("sweep", "summarize CBR and PDR range over the scenario matrix");
    for (auto* cmd : {analytic, simulate, compare, sweep}) add_common(*cmd, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        const harness::RunManifest m = manifest_from(flags);
        const fs::path out = harness::resolve_out_dir(m, flags.out_dir);
        if (analytic->parsed()) return exit_for(harness::run_analytic(m, out, &std::cerr).all_ok());
        if (sweep->parsed()) return exit_for(harness::run_sweep(m, out, &std::cerr).all_ok());
        m.require_simulation_inputs();
        if (simulate->parsed()) return exit_for(harness::run_simulate(m, out, flags.trace, &std::cerr).all_ok());
        const auto report = harness::run_compare(m, out, &std::cerr);
        std::cout << harness::report_csv(report.rows);
        return exit_for(report.all_ok());
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}
