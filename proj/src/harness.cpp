#include "cv2x/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cv2x/error.hpp"

namespace cv2x::harness {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* format, double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string prob(double v) { return fmt("%.6f", v); }
std::string dist(double v) { return fmt("%g", v); }

template <class T>
std::vector<T> scalar_or_list(const YAML::Node& node, const std::string& key) {
    try {
        if (node.IsSequence()) return node.as<std::vector<T>>();
        if (node.IsScalar()) return {node.as<T>()};
    } catch (const YAML::Exception&) {
    }
    throw ConfigError("manifest key '" + key + "' must be a value or a list of values");
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key) {
    try {
        if (node.IsScalar()) return node.as<T>();
    } catch (const YAML::Exception&) {
    }
    throw ConfigError("manifest key '" + key + "' must be a single value");
}

InterferenceModel parse_interference(const std::string& s) {
    if (s == "linear_sum") return InterferenceModel::linear_sum;
    if (s == "literal_db") return InterferenceModel::literal_db;
    throw ConfigError("interference must be linear_sum or literal_db (got '" + s + "')");
}

// keeps a report cell on one line and out of the column structure
std::string sanitize(std::string s) {
    for (char& ch : s) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return s;
}

void note(std::ostream* log, const std::string& msg) {
    if (log) *log << msg << '\n';
}

std::vector<double> shares(const sim::SimStats& s, sim::Outcome o) {
    std::vector<double> out(s.bin_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.share(i, o);
    return out;
}

}  // namespace

std::string ScenarioPoint::tag() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "pt%g_b%g_l%d_s%d", tx_power_dbm, beta, lambda_hz, subchannels);
    return buf;
}

std::vector<ScenarioPoint> RunManifest::scenarios() const {
    std::vector<ScenarioPoint> out;
    for (int l : lambda_hz)
        for (int s : subchannels)
            for (double pt : tx_power_dbm)
                for (double b : beta) out.push_back({b, pt, l, s});
    return out;
}

ScenarioConfig RunManifest::resolve(const ScenarioPoint& p) const {
    ScenarioConfig cfg = make_scenario(p.beta, p.tx_power_dbm, p.lambda_hz, p.subchannels);
    const auto& o = overrides;
    if (o.sigma_db) cfg.shadowing.sigma_db = *o.sigma_db;
    if (o.noise_power_dbm) cfg.radio.noise_power_dbm = *o.noise_power_dbm;
    if (o.sensing_threshold_dbm) cfg.radio.sensing_threshold_dbm = *o.sensing_threshold_dbm;
    if (o.pathloss_a_db) cfg.pathloss.reference_loss_db = *o.pathloss_a_db;
    if (o.pathloss_b_db) cfg.pathloss.exponent_coeff = *o.pathloss_b_db;
    if (o.delta_db) cfg.delta_db = *o.delta_db;
    if (o.rsrp_threshold_dbm) cfg.rsrp_threshold_dbm = *o.rsrp_threshold_dbm;
    if (o.busy_threshold_dbm) cfg.busy_threshold_dbm = *o.busy_threshold_dbm;
    if (o.mcs_id) cfg.mcs_id = *o.mcs_id;
    if (o.packet_size_bytes) cfg.packet_size_bytes = *o.packet_size_bytes;
    if (o.interference) cfg.interference = *o.interference;
    if (o.bler_csv) cfg.bler = std::make_shared<const BlerTable>(load_bler_csv(*o.bler_csv, cfg.mcs_id));
    validate(cfg);
    return cfg;
}

sim::RunOptions RunManifest::run_options() const {
    sim::RunOptions opts;
    opts.warmup_s = warmup_s;
    opts.bin_width_m = bin_width_m;
    opts.max_distance_m = max_distance_m;
    return opts;
}

void RunManifest::require_simulation_inputs() const {
    if (seeds.empty()) throw ConfigError("simulation needs at least one seed");
    if (!(duration_s > 0.0)) throw ConfigError("duration_s must be > 0");
    if (!(warmup_s >= 0.0)) throw ConfigError("warmup_s must be >= 0");
    if (!(road_length_m > 0.0)) throw ConfigError("road_length_m must be > 0");
    if (!(bin_width_m > 0.0) || !(max_distance_m > bin_width_m)) throw ConfigError("invalid distance binning");
    if (max_distance_m > road_length_m / 2.0) throw ConfigError("max_distance_m exceeds half the ring length");
}

RunManifest parse_manifest(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("manifest is not valid YAML: ") + e.what());
    }
    RunManifest m;
    if (root.IsNull()) return m;
    if (!root.IsMap()) throw ConfigError("manifest must be a mapping of keys to values");

    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        const YAML::Node& v = kv.second;
        auto& o = m.overrides;
        if (key == "beta") m.beta = scalar_or_list<double>(v, key);
        else if (key == "tx_power_dbm") m.tx_power_dbm = scalar_or_list<double>(v, key);
        else if (key == "lambda_hz") m.lambda_hz = scalar_or_list<int>(v, key);
        else if (key == "subchannels") m.subchannels = scalar_or_list<int>(v, key);
        else if (key == "seeds") m.seeds = scalar_or_list<std::uint64_t>(v, key);
        else if (key == "duration_s") m.duration_s = scalar<double>(v, key);
        else if (key == "warmup_s") m.warmup_s = scalar<double>(v, key);
        else if (key == "road_length_m") m.road_length_m = scalar<double>(v, key);
        else if (key == "bin_width_m") m.bin_width_m = scalar<double>(v, key);
        else if (key == "max_distance_m") m.max_distance_m = scalar<double>(v, key);
        else if (key == "grid_step_m") m.grid_step_m = scalar<double>(v, key);
        else if (key == "cbr_limit") m.cbr_limit = scalar<double>(v, key);
        else if (key == "out_dir") m.out_dir = scalar<std::string>(v, key);
        else if (key == "sigma_db") o.sigma_db = scalar<double>(v, key);
        else if (key == "noise_power_dbm") o.noise_power_dbm = scalar<double>(v, key);
        else if (key == "sensing_threshold_dbm") o.sensing_threshold_dbm = scalar<double>(v, key);
        else if (key == "pathloss_a_db") o.pathloss_a_db = scalar<double>(v, key);
        else if (key == "pathloss_b_db") o.pathloss_b_db = scalar<double>(v, key);
        else if (key == "delta_db") o.delta_db = scalar<double>(v, key);
        else if (key == "rsrp_threshold_dbm") o.rsrp_threshold_dbm = scalar<double>(v, key);
        else if (key == "busy_threshold_dbm") o.busy_threshold_dbm = scalar<double>(v, key);
        else if (key == "mcs_id") o.mcs_id = scalar<int>(v, key);
        else if (key == "packet_size_bytes") o.packet_size_bytes = scalar<int>(v, key);
        else if (key == "interference") o.interference = parse_interference(scalar<std::string>(v, key));
        else if (key == "bler_csv") o.bler_csv = scalar<std::string>(v, key);
        else throw ConfigError("unknown manifest key '" + key + "'");
    }
    if (!(m.grid_step_m > 0.0)) throw ConfigError("grid_step_m must be > 0");
    if (!(m.max_distance_m > 0.0)) throw ConfigError("max_distance_m must be > 0");
    return m;
}

RunManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    RunManifest m = parse_manifest(buf.str());
    // relative LUT paths are taken relative to the manifest
    if (m.overrides.bler_csv && m.overrides.bler_csv->is_relative()) {
        m.overrides.bler_csv = path.parent_path() / *m.overrides.bler_csv;
    }
    return m;
}

fs::path resolve_out_dir(const RunManifest& m, const std::optional<fs::path>& cli) {
    if (cli && !cli->empty()) return *cli;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return m.out_dir;
}

double mad(std::span<const double> m_s, std::span<const double> m_a) {
    if (m_s.size() != m_a.size()) throw std::invalid_argument("mad: vectors differ in length");
    if (m_s.empty()) throw std::invalid_argument("mad: empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < m_s.size(); ++i) acc += std::abs(m_s[i] - m_a[i]);
    return 100.0 * acc / double(m_s.size());
}

Curve curve_from(std::span<const PdrBreakdown> rows, double cbr) {
    Curve c;
    c.cbr = cbr;
    for (const auto& r : rows) {
        c.distance_m.push_back(r.distance_m);
        c.pdr.push_back(r.pdr);
        c.hd.push_back(r.hd_norm);
        c.sen.push_back(r.sen_norm);
        c.pro.push_back(r.pro_norm);
        c.col.push_back(r.col_norm);
    }
    return c;
}

Curve curve_from(const sim::SimStats& stats) {
    using sim::Outcome;
    Curve c;
    c.cbr = stats.mean_cbr();
    c.distance_m = stats.bin_centers();
    c.pdr = shares(stats, Outcome::ok);
    c.hd = shares(stats, Outcome::hd);
    c.sen = shares(stats, Outcome::sen);
    c.pro = shares(stats, Outcome::pro);
    c.col = shares(stats, Outcome::col);
    for (const auto& b : stats.bins) c.attempts.push_back(b.total());
    return c;
}

MadRow compare_curves(const Curve& simulated, const Curve& analytic) {
    if (simulated.distance_m != analytic.distance_m) throw std::invalid_argument("curves use different distance grids");
    return {mad(simulated.pdr, analytic.pdr), mad(simulated.hd, analytic.hd), mad(simulated.sen, analytic.sen),
            mad(simulated.pro, analytic.pro), mad(simulated.col, analytic.col)};
}

std::string curve_csv(const Curve& c) {
    const bool counts = !c.attempts.empty();
    std::string out = counts ? "distance_m,pdr,hd,sen,pro,col,cbr,attempts\n" : "distance_m,pdr,hd,sen,pro,col,cbr\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        out += dist(c.distance_m[i]) + ',' + prob(c.pdr[i]) + ',' + prob(c.hd[i]) + ',' + prob(c.sen[i]) + ',' +
               prob(c.pro[i]) + ',' + prob(c.col[i]) + ',' + prob(c.cbr);
        if (counts) out += ',' + std::to_string(c.attempts[i]);
        out += '\n';
    }
    return out;
}

std::string side_by_side_csv(const Curve& s, const Curve& a) {
    if (s.distance_m != a.distance_m) throw std::invalid_argument("curves use different distance grids");
    std::string out =
        "distance_m,pdr_sim,pdr_analytic,hd_sim,hd_analytic,sen_sim,sen_analytic,pro_sim,pro_analytic,col_sim,"
        "col_analytic,attempts\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += dist(s.distance_m[i]) + ',' + prob(s.pdr[i]) + ',' + prob(a.pdr[i]) + ',' + prob(s.hd[i]) + ',' +
               prob(a.hd[i]) + ',' + prob(s.sen[i]) + ',' + prob(a.sen[i]) + ',' + prob(s.pro[i]) + ',' +
               prob(a.pro[i]) + ',' + prob(s.col[i]) + ',' + prob(a.col[i]) + ',' +
               std::to_string(s.attempts.empty() ? 0 : s.attempts[i]) + '\n';
    }
    return out;
}

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.close();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

sim::SimStats simulate(const ScenarioConfig& cfg, const RunManifest& m, const fs::path* trace_dir) {
    m.require_simulation_inputs();
    sim::SimStats merged;
    for (auto seed : m.seeds) {
        sim::RunOptions opts = m.run_options();
        std::ofstream trace;
        fs::path trace_path;
        if (trace_dir) {
            fs::create_directories(*trace_dir);
            trace_path = *trace_dir / ("trace_" + cfg.tag() + "_seed" + std::to_string(seed) + ".csv");
            trace.open(trace_path.string() + ".tmp", std::ios::binary | std::ios::trunc);
            if (!trace) throw std::runtime_error("cannot write " + trace_path.string());
            trace << "subframe,tx_id,rx_id,distance_m,outcome\n";
            opts.trace = &trace;
        }
        merged.merge(sim::run(cfg, m.duration_s, m.road_length_m, seed, opts));
        if (trace_dir) {
            trace.close();
            fs::rename(trace_path.string() + ".tmp", trace_path);
        }
    }
    return merged;
}

bool BatchResult::all_ok() const {
    for (const auto& s : scenarios) {
        if (!s.ok) return false;
    }
    return true;
}

bool ComparisonReport::all_ok() const {
    for (const auto& r : rows) {
        if (!r.ok) return false;
    }
    return true;
}

BatchResult run_analytic(const RunManifest& m, const fs::path& out_dir, std::ostream* log) {
    BatchResult result;
    const auto points = m.scenarios();
    if (points.empty()) note(log, "warning: empty scenario matrix, nothing to do");
    const auto grid = distance_grid(m.max_distance_m, m.grid_step_m);
    for (const auto& p : points) {
        ScenarioResult r;
        r.point = p;
        try {
            AnalyticModel model(m.resolve(p));
            const auto rows = model.pdr_curve(grid);
            const fs::path file = out_dir / ("analytic_" + p.tag() + ".csv");
            write_atomic(file, curve_csv(curve_from(rows, model.cbr())));
            r.ok = true;
            r.files.push_back(file);
            note(log, "analytic " + p.tag() + ": cbr " + prob(model.cbr()) + " -> " + file.string());
        } catch (const std::exception& e) {
            r.error = e.what();
            note(log, "analytic " + p.tag() + " failed: " + r.error);
        }
        result.scenarios.push_back(std::move(r));
    }
    return result;
}

BatchResult run_simulate(const RunManifest& m, const fs::path& out_dir, bool trace, std::ostream* log) {
    BatchResult result;
    const auto points = m.scenarios();
    if (points.empty()) note(log, "warning: empty scenario matrix, nothing to do");
    for (const auto& p : points) {
        ScenarioResult r;
        r.point = p;
        try {
            const ScenarioConfig cfg = m.resolve(p);
            const auto stats = simulate(cfg, m, trace ? &out_dir : nullptr);
            const fs::path file = out_dir / ("sim_" + p.tag() + ".csv");
            write_atomic(file, curve_csv(curve_from(stats)));
            r.ok = true;
            r.files.push_back(file);
            note(log, "simulate " + p.tag() + ": cbr " + prob(stats.mean_cbr()) + ", " +
                          std::to_string(stats.attempts()) + " receptions -> " + file.string());
        } catch (const std::exception& e) {
            r.error = e.what();
            note(log, "simulate " + p.tag() + " failed: " + r.error);
        }
        result.scenarios.push_back(std::move(r));
    }
    return result;
}

BatchResult run_sweep(const RunManifest& m, const fs::path& out_dir, std::ostream* log) {
    BatchResult result;
    const auto points = m.scenarios();
    if (points.empty()) note(log, "warning: empty scenario matrix, nothing to do");
    const auto grid = distance_grid(m.max_distance_m, m.grid_step_m);
    std::string csv = "p_t,beta,lambda_hz,subchannels,cbr,alpha,n_excluded_step2,n_excluded_step3,range_pdr50_m\n";
    for (const auto& p : points) {
        ScenarioResult r;
        r.point = p;
        std::string row = fmt("%g", p.tx_power_dbm) + ',' + fmt("%g", p.beta) + ',' + std::to_string(p.lambda_hz) +
                          ',' + std::to_string(p.subchannels) + ',';
        try {
            AnalyticModel model(m.resolve(p));
            const auto rows = model.pdr_curve(grid);
            // last grid distance whose PDR is still at least one half
            double range = std::nan("");
            for (const auto& b : rows) {
                if (b.pdr >= 0.5) range = b.distance_m;
            }
            row += prob(model.cbr()) + ',' + prob(model.alpha()) + ',' + fmt("%.3f", model.n_excluded_step2()) + ',' +
                   fmt("%.3f", model.n_excluded_step3().n_excluded) + ',' + dist(range);
            r.ok = true;
        } catch (const std::exception& e) {
            r.error = e.what();
            row += "nan,nan,nan,nan,nan";
            note(log, "sweep " + p.tag() + " failed: " + r.error);
        }
        csv += row + '\n';
        result.scenarios.push_back(std::move(r));
    }
    const fs::path file = out_dir / "sweep.csv";
    write_atomic(file, csv);
    result.files.push_back(file);
    note(log, "sweep: " + std::to_string(points.size()) + " scenarios -> " + file.string());
    return result;
}

std::string report_csv(std::span<const ReportRow> rows) {
    std::string out = "p_t,beta,mad_pdr,mad_hd,mad_sen,mad_pro,mad_col,cbr_analytic,cbr_sim,note\n";
    for (const auto& r : rows) {
        const double nan = std::nan("");
        const auto val = [&](double v) { return fmt("%.4f", r.ok ? v : nan); };
        std::string status = "ok";
        if (!r.ok) status = "failed: " + sanitize(r.error);
        else if (r.above_cbr_limit) status = "above recommended CBR";
        out += fmt("%g", r.point.tx_power_dbm) + ',' + fmt("%g", r.point.beta) + ',' + val(r.mad.pdr) + ',' +
               val(r.mad.hd) + ',' + val(r.mad.sen) + ',' + val(r.mad.pro) + ',' + val(r.mad.col) + ',' +
               val(r.cbr_analytic) + ',' + val(r.cbr_sim) + ',' + status + '\n';
    }
    return out;
}

ComparisonReport run_compare(const RunManifest& m, const fs::path& out_dir, std::ostream* log) {
    ComparisonReport report;
    const auto points = m.scenarios();
    if (points.empty()) note(log, "warning: empty scenario matrix, nothing to do");
    for (const auto& p : points) {
        ReportRow row;
        row.point = p;
        try {
            const ScenarioConfig cfg = m.resolve(p);
            const Curve simulated = curve_from(simulate(cfg, m));
            AnalyticModel model(cfg);
            const Curve analytic = curve_from(model.pdr_curve(simulated.distance_m), model.cbr());
            row.mad = compare_curves(simulated, analytic);
            row.cbr_analytic = analytic.cbr;
            row.cbr_sim = simulated.cbr;
            row.above_cbr_limit = analytic.cbr > m.cbr_limit;
            const fs::path file = out_dir / ("compare_" + p.tag() + ".csv");
            write_atomic(file, side_by_side_csv(simulated, analytic));
            report.files.push_back(file);
            row.ok = true;
            note(log, "compare " + p.tag() + ": mad_pdr " + fmt("%.2f", row.mad.pdr) + "%, cbr " +
                          prob(row.cbr_analytic) + " / " + prob(row.cbr_sim) +
                          (row.above_cbr_limit ? " (above recommended CBR)" : ""));
        } catch (const std::exception& e) {
            row.error = e.what();
            note(log, "compare " + p.tag() + " failed: " + row.error);
        }
        report.rows.push_back(std::move(row));
    }

    std::map<std::pair<int, int>, std::vector<ReportRow>> groups;
    for (const auto& r : report.rows) groups[{r.point.lambda_hz, r.point.subchannels}].push_back(r);
    for (const auto& [key, rows] : groups) {
        const fs::path file =
            out_dir / ("report_l" + std::to_string(key.first) + "_s" + std::to_string(key.second) + ".csv");
        write_atomic(file, report_csv(rows));
        report.files.push_back(file);
    }
    return report;
}

}  // namespace cv2x::harness
