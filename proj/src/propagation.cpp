#include "cv2x/propagation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "cv2x/error.hpp"

namespace cv2x {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEmptyMass = 1e-12;

// P(X > x) for X ~ N(mean, sigma^2)
double upper_tail(double x, double mean, double sigma) {
    if (x == kInf) return 0.0;
    if (x == -kInf) return 1.0;
    return 0.5 * std::erfc((x - mean) / (sigma * std::numbers::sqrt2));
}

double lower_tail(double x, double mean, double sigma) {
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    return 0.5 * std::erfc((mean - x) / (sigma * std::numbers::sqrt2));
}

// P(a < X <= b), evaluated on the tail that keeps precision
double interval_mass(double a, double b, double mean, double sigma) {
    if (a >= mean) return upper_tail(a, mean, sigma) - upper_tail(b, mean, sigma);
    if (b <= mean) return lower_tail(b, mean, sigma) - lower_tail(a, mean, sigma);
    return 1.0 - lower_tail(a, mean, sigma) - upper_tail(b, mean, sigma);
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

}  // namespace

double PathlossModel::loss_db(double distance_m) const {
    return reference_loss_db + exponent_coeff * std::log10(std::max(distance_m, min_distance_m));
}

void validate(const PathlossModel& pl) {
    if (!(pl.min_distance_m > 0.0)) throw ConfigError("pathloss min_distance_m must be > 0");
    if (pl.exponent_coeff < 0.0) throw ConfigError("pathloss exponent_coeff must be >= 0");
    if (!std::isfinite(pl.reference_loss_db)) throw ConfigError("pathloss reference_loss_db must be finite");
}

void validate(const ShadowingModel& sh) {
    if (!(sh.sigma_db > 0.0) || !std::isfinite(sh.sigma_db)) throw ConfigError("shadowing sigma_db must be > 0");
}

void validate(const RadioConfig& radio) {
    if (radio.tx_power_dbm > 23.0) throw ConfigError("tx_power_dbm exceeds the 23 dBm maximum");
    if (!std::isfinite(radio.tx_power_dbm) || !std::isfinite(radio.sensing_threshold_dbm) ||
        !std::isfinite(radio.noise_power_dbm)) {
        throw ConfigError("radio parameters must be finite");
    }
}

BlerTable::BlerTable(int mcs_id, std::vector<BlerPoint> points) : mcs_id_(mcs_id), points_(std::move(points)) {
    if (points_.empty()) throw ConfigError("BLER table is empty");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (!(p.bler >= 0.0 && p.bler <= 1.0)) throw ConfigError("BLER value outside [0, 1]");
        if (i > 0) {
            if (!(p.snr_db > points_[i - 1].snr_db)) throw ConfigError("BLER table snr_db must be strictly increasing");
            if (p.bler > points_[i - 1].bler) throw ConfigError("BLER table must be non-increasing in snr_db");
        }
    }
    if (points_.size() > 2) {
        const double step = (points_.back().snr_db - points_.front().snr_db) / double(points_.size() - 1);
        bool uniform = true;
        for (std::size_t i = 1; i < points_.size() && uniform; ++i) {
            const double expected = points_.front().snr_db + step * double(i);
            uniform = std::abs(points_[i].snr_db - expected) <= 1e-9 * std::max(1.0, std::abs(expected));
        }
        if (uniform) uniform_step_ = step;
    }
}

double BlerTable::at(double snr_db) const {
    if (snr_db < points_.front().snr_db) return 1.0;
    if (snr_db >= points_.back().snr_db) return points_.back().bler;
    std::size_t hi;
    if (uniform_step_ > 0.0) {
        auto lo = std::min(std::size_t((snr_db - points_.front().snr_db) / uniform_step_), points_.size() - 2);
        // rounding at knot boundaries
        if (lo > 0 && points_[lo].snr_db > snr_db) --lo;
        if (lo + 2 < points_.size() && points_[lo + 1].snr_db <= snr_db) ++lo;
        hi = lo + 1;
    } else {
        auto it = std::upper_bound(points_.begin(), points_.end(), snr_db,
                                   [](double s, const BlerPoint& p) { return s < p.snr_db; });
        hi = std::size_t(it - points_.begin());
    }
    const auto& a = points_[hi - 1];
    const auto& b = points_[hi];
    const double t = (snr_db - a.snr_db) / (b.snr_db - a.snr_db);
    return a.bler + t * (b.bler - a.bler);
}

BlerTable logistic_bler(int mcs_id, double snr50_db, double slope_per_db, double lo_db, double hi_db,
                        double step_db) {
    if (!(slope_per_db > 0.0) || !(step_db > 0.0) || !(hi_db > lo_db)) {
        throw ConfigError("invalid logistic BLER parameters");
    }
    const auto n = std::size_t(std::llround((hi_db - lo_db) / step_db)) + 1;
    std::vector<BlerPoint> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = lo_db + step_db * double(i);
        pts.push_back({s, 1.0 / (1.0 + std::exp(slope_per_db * (s - snr50_db)))});
    }
    return BlerTable(mcs_id, std::move(pts));
}

BlerTable default_bler(int mcs_id) {
    // Synthetic curves, not link-level data.
    switch (mcs_id) {
        case 9: return logistic_bler(9, 3.0, 1.5);
        case 7: return logistic_bler(7, 1.0, 1.5);
        default: throw ConfigError("no default BLER curve for MCS " + std::to_string(mcs_id));
    }
}

BlerTable load_bler_csv(const std::filesystem::path& path, std::optional<int> mcs_id) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open BLER file " + path.string());

    if (!mcs_id) {
        const std::string stem = path.stem().string();
        auto end = std::find_if(stem.rbegin(), stem.rend(), [](unsigned char c) { return std::isdigit(c); });
        if (end == stem.rend()) throw ConfigError("cannot infer MCS id from file name " + path.string());
        auto begin = std::find_if(end, stem.rend(), [](unsigned char c) { return !std::isdigit(c); });
        mcs_id = std::stoi(std::string(begin.base(), end.base()));
    }

    std::string line;
    if (!std::getline(in, line) || trim(line) != "snr_db,bler") {
        throw ConfigError("BLER file " + path.string() + " must start with header snr_db,bler");
    }
    std::vector<BlerPoint> pts;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b)) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected two columns");
        }
        try {
            pts.push_back({std::stod(a), std::stod(b)});
        } catch (const std::exception&) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": not a number");
        }
    }
    return BlerTable(*mcs_id, std::move(pts));
}

double pathloss(double distance_m, const PathlossModel& pl) { return pl.loss_db(distance_m); }

double sensing_probability(double distance_m, double tx_power_dbm, double threshold_dbm, const PathlossModel& pl,
                           const ShadowingModel& sh) {
    const double margin = tx_power_dbm - pl.loss_db(distance_m) - threshold_dbm;
    return 0.5 * std::erfc(-margin / (sh.sigma_db * std::numbers::sqrt2));
}

double psr(double distance_m, const RadioConfig& radio, const PathlossModel& pl, const ShadowingModel& sh) {
    return sensing_probability(distance_m, radio.tx_power_dbm, radio.sensing_threshold_dbm, pl, sh);
}

double delta_sen(double distance_m, const RadioConfig& radio, const PathlossModel& pl, const ShadowingModel& sh) {
    return 1.0 - psr(distance_m, radio, pl, sh);
}

LinkModel::LinkModel(RadioConfig radio, PathlossModel pl, ShadowingModel sh, BlerTable bler, IntegrationGrid grid,
                     InterferenceModel interference)
    : radio_(radio), pl_(pl), sh_(sh), bler_(std::move(bler)), grid_(grid), interference_(interference) {
    validate(radio_);
    validate(pl_);
    validate(sh_);
    if (!(grid_.step_db > 0.0) || !(grid_.span_sigmas >= 8.0)) {
        throw ConfigError("integration grid must have step > 0 and span >= 8 sigma");
    }
    const double top = mean_rx_dbm(0.0) + grid_.span_sigmas * sh_.sigma_db;
    const auto cells = std::size_t(std::max(0.0, std::ceil((top - radio_.sensing_threshold_dbm) / grid_.step_db))) + 2;
    cell_bler_.resize(cells);
    for (std::size_t k = 0; k < cells; ++k) cell_bler_[k] = bler_(cell_snr_db(k));
}

double LinkModel::mean_rx_dbm(double distance_m) const { return radio_.tx_power_dbm - pl_.loss_db(distance_m); }

double LinkModel::psr(double distance_m) const { return cv2x::psr(distance_m, radio_, pl_, sh_); }

double LinkModel::psr(double distance_m, double threshold_offset_db) const {
    return sensing_probability(distance_m, radio_.tx_power_dbm, radio_.sensing_threshold_dbm + threshold_offset_db,
                               pl_, sh_);
}

double LinkModel::delta_sen(double distance_m) const { return 1.0 - psr(distance_m); }

double LinkModel::cell_snr_db(std::size_t k) const {
    return radio_.sensing_threshold_dbm - radio_.noise_power_dbm + (double(k) + 0.5) * grid_.step_db;
}

double LinkModel::cell_bler(std::size_t k) const {
    return k < cell_bler_.size() ? cell_bler_[k] : bler_(cell_snr_db(k));
}

SnrCells LinkModel::received_cells(double distance_m) const {
    const double mean = mean_rx_dbm(distance_m);
    const double sigma = sh_.sigma_db;
    const double h = grid_.step_db;
    const double thr = radio_.sensing_threshold_dbm;
    const double lo = mean - grid_.span_sigmas * sigma;
    const double hi = mean + grid_.span_sigmas * sigma;

    SnrCells out;
    if (hi <= thr) return out;
    const auto k0 = lo > thr ? std::size_t(std::floor((lo - thr) / h)) : std::size_t{0};
    const auto k1 = std::size_t(std::ceil((hi - thr) / h));
    out.first = k0;
    out.mass.reserve(k1 - k0);
    for (std::size_t k = k0; k < k1; ++k) {
        const double a = k == k0 ? thr : thr + double(k) * h;
        const double b = k + 1 == k1 ? kInf : thr + double(k + 1) * h;
        const double m = std::max(0.0, interval_mass(a, b, mean, sigma));
        out.mass.push_back(m);
        out.total += m;
    }
    return out;
}

PropagationLoss LinkModel::delta_pro(double distance_m) const {
    const SnrCells cells = received_cells(distance_m);
    if (cells.total < kEmptyMass) return {0.0, true};
    double acc = 0.0;
    for (std::size_t i = 0; i < cells.mass.size(); ++i) acc += cells.mass[i] * cell_bler(cells.first + i);
    return {std::clamp(acc / cells.total, 0.0, 1.0), false};
}

double LinkModel::sinr_penalty_db(double interferer_dbm) const {
    if (interference_ == InterferenceModel::literal_db) return interferer_dbm;
    const double inr_db = interferer_dbm - radio_.noise_power_dbm;
    return 10.0 * std::log1p(std::pow(10.0, inr_db / 10.0)) / std::numbers::ln10;
}

double LinkModel::p_int(double d_tr, double d_ir) const {
    const SnrCells cells = received_cells(d_tr);
    if (cells.total < kEmptyMass) return 0.0;
    double base = 0.0;
    for (std::size_t i = 0; i < cells.mass.size(); ++i) base += cells.mass[i] * cell_bler(cells.first + i);
    const double pro = base / cells.total;
    if (pro >= 1.0 - kEmptyMass) return 0.0;

    const double mean_i = mean_rx_dbm(d_ir);
    const double sigma = sh_.sigma_db;
    const double h = grid_.step_db;
    const double lo = mean_i - grid_.span_sigmas * sigma;
    const auto ny = std::size_t(std::ceil(2.0 * grid_.span_sigmas * sigma / h));

    double excess = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        const double a = j == 0 ? -kInf : lo + double(j) * h;
        const double b = j + 1 == ny ? kInf : lo + double(j + 1) * h;
        const double v = interval_mass(a, b, mean_i, sigma);
        if (v <= 0.0) continue;
        const double g = sinr_penalty_db(lo + (double(j) + 0.5) * h);
        double f = 0.0;
        for (std::size_t i = 0; i < cells.mass.size(); ++i) {
            const std::size_t k = cells.first + i;
            f += cells.mass[i] * bler_(cell_snr_db(k) - g);
        }
        excess += v * (f - base);
    }
    // (p_sinr - delta_pro) / (1 - delta_pro)
    return std::clamp(excess / cells.total / (1.0 - pro), 0.0, 1.0);
}

SinrLossProfile LinkModel::profile(double d_tr) const { return SinrLossProfile(*this, d_tr); }

SinrLossProfile::SinrLossProfile(const LinkModel& link, double d_tr) : link_(&link), cells_(link.received_cells(d_tr)) {
    if (cells_.total < kEmptyMass) {
        degenerate_ = true;
        return;
    }
    for (std::size_t i = 0; i < cells_.mass.size(); ++i) base_loss_ += cells_.mass[i] * link.cell_bler(cells_.first + i);
    delta_pro_ = std::clamp(base_loss_ / cells_.total, 0.0, 1.0);
    if (delta_pro_ >= 1.0 - kEmptyMass) {
        degenerate_ = true;
        return;
    }
    // Outside [g_lo, g_hi] every cell sits on a flat end of the BLER curve.
    const auto& bler = link.bler();
    const double snr_min = link.cell_snr_db(cells_.first);
    const double snr_max = link.cell_snr_db(cells_.first + cells_.mass.size() - 1);
    g_lo_ = std::min(0.0, snr_min - bler.last_snr_db());
    g_hi_ = std::max(g_step_, snr_max - bler.first_snr_db());
    g_lo_ = std::floor(g_lo_ / g_step_) * g_step_;
    g_hi_ = std::ceil(g_hi_ / g_step_) * g_step_;
    f_table_.assign(std::size_t(std::llround((g_hi_ - g_lo_) / g_step_)) + 1, std::numeric_limits<double>::quiet_NaN());
}

double SinrLossProfile::loss_given_penalty(double g_db) {
    const double g = std::clamp(g_db, g_lo_, g_hi_);
    const double pos = (g - g_lo_) / g_step_;
    auto j = std::size_t(pos);
    if (j + 1 >= f_table_.size()) j = f_table_.size() - 2;
    const double t = pos - double(j);
    const auto& bler = link_->bler();
    for (std::size_t q : {j, j + 1}) {
        if (!std::isnan(f_table_[q])) continue;
        const double shift = g_lo_ + double(q) * g_step_;
        double f = 0.0;
        for (std::size_t i = 0; i < cells_.mass.size(); ++i) {
            f += cells_.mass[i] * bler(link_->cell_snr_db(cells_.first + i) - shift);
        }
        f_table_[q] = f;
    }
    return f_table_[j] + t * (f_table_[j + 1] - f_table_[j]);
}

double SinrLossProfile::exact_p_int(double mean_dbm) {
    const double sigma = link_->shadowing().sigma_db;
    const double h = link_->grid().step_db;
    const double span = link_->grid().span_sigmas;
    const double lo = mean_dbm - span * sigma;
    const auto ny = std::size_t(std::ceil(2.0 * span * sigma / h));
    // F(0) from the lattice so that a vanishing penalty gives exactly zero
    const double base = link_->interference_model() == InterferenceModel::linear_sum ? loss_given_penalty(0.0)
                                                                                      : base_loss_;
    double excess = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        const double a = j == 0 ? -kInf : lo + double(j) * h;
        const double b = j + 1 == ny ? kInf : lo + double(j + 1) * h;
        const double v = interval_mass(a, b, mean_dbm, sigma);
        if (v <= 0.0) continue;
        const double g = link_->sinr_penalty_db(lo + (double(j) + 0.5) * h);
        excess += v * (loss_given_penalty(g) - base);
    }
    return std::clamp(excess / cells_.total / (1.0 - delta_pro_), 0.0, 1.0);
}

double SinrLossProfile::p_int_for_mean(double mean_dbm) {
    if (degenerate_) return 0.0;
    const double pos = mean_dbm / mean_step_;
    const auto idx = long(std::floor(pos));
    const double t = pos - double(idx);
    if (mean_table_.empty()) mean_origin_ = idx - 64;
    auto value = [&](long q) {
        if (q < mean_origin_) {
            const auto grow = std::size_t(mean_origin_ - q + 64);
            mean_table_.insert(mean_table_.begin(), grow, std::numeric_limits<double>::quiet_NaN());
            mean_origin_ -= long(grow);
        }
        const auto off = std::size_t(q - mean_origin_);
        if (off >= mean_table_.size()) mean_table_.resize(off + 64, std::numeric_limits<double>::quiet_NaN());
        double& slot = mean_table_[off];
        if (std::isnan(slot)) slot = exact_p_int(double(q) * mean_step_);
        return slot;
    };
    const double a = value(idx);
    const double b = value(idx + 1);
    return a + t * (b - a);
}

double SinrLossProfile::p_int(double d_ir) { return p_int_for_mean(link_->mean_rx_dbm(d_ir)); }

}  // namespace cv2x
