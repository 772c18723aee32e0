#include "bwd/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "bwd/engine.hpp"
#include "bwd/errors.hpp"
#include "bwd/rng.hpp"
#include "bwd/text.hpp"

namespace bwd {

std::string_view to_string(NullType t) noexcept {
    switch (t) {
        case NullType::normal: return "normal";
        case NullType::permute: return "permute";
        case NullType::bootstrap: return "bootstrap";
    }
    return "?";
}

NullType parse_null_type(std::string_view s) {
    if (s == "normal") return NullType::normal;
    if (s == "permute") return NullType::permute;
    if (s == "bootstrap") return NullType::bootstrap;
    throw UsageError("unknown null type '" + std::string(s) + "'");
}

std::size_t default_replicates(double alpha) noexcept {
    return alpha < 0.05 ? 5000 : 2000;
}

namespace {

void check_spec(const CalibrationSpec& spec, std::span<const double> data) {
    if (spec.n < 2) throw UsageError("calibration needs n >= 2");
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    if (spec.B < 100) throw UsageError("calibration needs B >= 100");
    if (spec.min_segment < 1) throw UsageError("min_segment must be >= 1");
    if (spec.null_type != NullType::normal) {
        if (data.empty())
            throw UsageError(std::string("null requires data: the ") +
                             std::string(to_string(spec.null_type)) + " null resamples residuals");
        if (spec.null_type == NullType::permute && data.size() != spec.n)
            throw UsageError("permute null needs n equal to the data length");
    }
}

}  // namespace

std::vector<double> null_max_statistics(const CalibrationSpec& spec, std::span<const double> data,
                                        Execution exec) {
    check_spec(spec, data);
    std::vector<double> pool;
    if (spec.null_type != NullType::normal) pool = residuals(data, spec.h);

    std::vector<double> u(spec.B);
    for_each_index(spec.B, exec, [&](std::size_t b) {
        Philox4x32 gen(spec.seed, b);
        std::vector<double> y(spec.n);
        switch (spec.null_type) {
            case NullType::normal: {
                std::normal_distribution<double> normal;
                for (auto& v : y) v = normal(gen);
                break;
            }
            case NullType::permute:
                y = pool;
                std::shuffle(y.begin(), y.end(), gen);
                break;
            case NullType::bootstrap:
                for (auto& v : y) v = pool[uniform_below(gen, pool.size())];
                break;
        }
        const double sigma = estimate_sigma(y, SigmaMethod::window_mean, spec.h).sigma_hat;
        u[b] = full_merge_max_statistic(y, sigma, spec.min_segment);
    });
    return u;
}

std::size_t cutoff_rank(double alpha, std::size_t B) {
    // The epsilon keeps e.g. (1 - 0.05) * 2000 from rounding up to 1901.
    const double raw = std::ceil((1.0 - alpha) * static_cast<double>(B) - 1e-9);
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, B);
}

double cutoff_from_draws(std::vector<double> draws, double alpha) {
    if (draws.empty()) throw UsageError("no draws to take a quantile of");
    std::sort(draws.begin(), draws.end());
    return draws[cutoff_rank(alpha, draws.size()) - 1];
}

double cutoff_standard_error(std::vector<double> draws, double alpha) {
    if (draws.size() < 2) return 0.0;
    std::sort(draws.begin(), draws.end());
    const auto B = static_cast<double>(draws.size());
    const double k = static_cast<double>(cutoff_rank(alpha, draws.size()));
    const double spread = std::sqrt(B * alpha * (1.0 - alpha));
    const auto at = [&](double rank) {
        const double r = std::clamp(std::round(rank), 1.0, B);
        return draws[static_cast<std::size_t>(r) - 1];
    };
    return 0.5 * (at(k + spread) - at(k - spread));
}

double calibrate(const CalibrationSpec& spec, std::span<const double> data, Execution exec) {
    return cutoff_from_draws(null_max_statistics(spec, data, exec), spec.alpha);
}

namespace {

bool same_alpha(double a, double b) { return std::abs(a - b) <= 1e-12; }

}  // namespace

std::optional<double> CutoffTable::lookup(std::size_t n, double alpha, NullType null_type,
                                          std::int64_t min_segment) const {
    for (const auto& e : entries)
        if (e.n == n && same_alpha(e.alpha, alpha) && e.null_type == null_type &&
            e.min_segment == min_segment)
            return e.cutoff;
    return std::nullopt;
}

const LogLinearFit* CutoffTable::find_fit(double alpha, NullType null_type,
                                          std::int64_t min_segment) const {
    for (const auto& f : fits)
        if (same_alpha(f.alpha, alpha) && f.null_type == null_type && f.min_segment == min_segment)
            return &f;
    return nullptr;
}

LogLinearFit fit_loglinear(const CutoffTable& table, double alpha, NullType null_type,
                           std::int64_t min_segment) {
    std::vector<double> xs, ys;
    for (const auto& e : table.entries)
        if (same_alpha(e.alpha, alpha) && e.null_type == null_type && e.min_segment == min_segment) {
            xs.push_back(std::log(static_cast<double>(e.n)));
            ys.push_back(e.cutoff);
        }
    if (xs.size() < 5)
        throw UsageError("insufficient grid: log-linear fit needs >= 5 points, got " +
                         std::to_string(xs.size()));
    const auto m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw UsageError("insufficient grid: all n are equal");

    LogLinearFit fit;
    fit.alpha = alpha;
    fit.null_type = null_type;
    fit.min_segment = min_segment;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

double predict_cutoff(const LogLinearFit& fit, std::size_t n) {
    if (n < 2) throw UsageError("predict_cutoff needs n >= 2");
    return fit.intercept + fit.slope * std::log(static_cast<double>(n));
}

bool monotone_within(std::span<const double> cutoffs, std::span<const double> standard_errors,
                     double k) {
    for (std::size_t i = 0; i + 1 < cutoffs.size(); ++i) {
        const double drop = cutoffs[i] - cutoffs[i + 1];
        const double pooled = std::hypot(standard_errors[i], standard_errors[i + 1]);
        if (drop > k * pooled) return false;
    }
    return true;
}

namespace {

constexpr std::string_view table_header = "n\talpha\tnull_type\tM\tcutoff\tB\tseed";

}  // namespace

std::string format_cutoff_table(const CutoffTable& table) {
    std::ostringstream out;
    out << table_header << '\n';
    for (const auto& e : table.entries)
        out << e.n << '\t' << text::real6(e.alpha) << '\t' << to_string(e.null_type) << '\t'
            << e.min_segment << '\t' << text::real6(e.cutoff) << '\t' << e.B << '\t' << e.seed << '\n';
    for (const auto& f : table.fits)
        out << "#fit\talpha=" << text::real6(f.alpha) << "\tnull_type=" << to_string(f.null_type)
            << "\tM=" << f.min_segment << "\tintercept=" << text::real6(f.intercept)
            << "\tslope=" << text::real6(f.slope) << "\tr_squared=" << text::real6(f.r_squared) << '\n';
    return out.str();
}

namespace {

[[noreturn]] void table_error(std::size_t line, const std::string& what) {
    throw DataError("cutoff table line " + std::to_string(line) + ": " + what);
}

double field_real(std::string_view s, std::size_t line) {
    double v = 0.0;
    if (!text::parse_double(s, v)) table_error(line, "bad number '" + std::string(s) + "'");
    return v;
}

long long field_int(std::string_view s, std::size_t line) {
    long long v = 0;
    if (!text::parse_int(s, v)) table_error(line, "bad integer '" + std::string(s) + "'");
    return v;
}

LogLinearFit parse_fit_line(std::string_view line, std::size_t lineno) {
    LogLinearFit f;
    int seen = 0;
    const auto fields = text::split(line, '\t');
    for (std::size_t i = 1; i < fields.size(); ++i) {
        const auto eq = fields[i].find('=');
        if (eq == std::string_view::npos) table_error(lineno, "fit field without '='");
        const auto key = fields[i].substr(0, eq);
        const auto val = fields[i].substr(eq + 1);
        if (key == "alpha") f.alpha = field_real(val, lineno);
        else if (key == "null_type") f.null_type = parse_null_type(val);
        else if (key == "M") f.min_segment = field_int(val, lineno);
        else if (key == "intercept") f.intercept = field_real(val, lineno);
        else if (key == "slope") f.slope = field_real(val, lineno);
        else if (key == "r_squared") f.r_squared = field_real(val, lineno);
        else table_error(lineno, "unknown fit field '" + std::string(key) + "'");
        ++seen;
    }
    if (seen != 6) table_error(lineno, "fit line needs 6 fields");
    return f;
}

}  // namespace

CutoffTable parse_cutoff_table(std::string_view contents) {
    CutoffTable table;
    std::size_t lineno = 0;
    bool header_seen = false;
    std::size_t start = 0;
    while (start < contents.size()) {
        auto end = contents.find('\n', start);
        if (end == std::string_view::npos) end = contents.size();
        std::string_view line = contents.substr(start, end - start);
        start = end + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.starts_with("#fit")) {
            table.fits.push_back(parse_fit_line(line, lineno));
            continue;
        }
        if (line.starts_with('#')) continue;
        if (!header_seen) {
            if (line != table_header) table_error(lineno, "expected header '" + std::string(table_header) + "'");
            header_seen = true;
            continue;
        }
        const auto f = text::split(line, '\t');
        if (f.size() != 7) table_error(lineno, "expected 7 columns");
        CutoffEntry e;
        e.n = static_cast<std::size_t>(field_int(f[0], lineno));
        e.alpha = field_real(f[1], lineno);
        e.null_type = parse_null_type(f[2]);
        e.min_segment = field_int(f[3], lineno);
        e.cutoff = field_real(f[4], lineno);
        e.B = static_cast<std::size_t>(field_int(f[5], lineno));
        e.seed = static_cast<std::uint64_t>(field_int(f[6], lineno));
        if (!(e.cutoff > 0.0)) table_error(lineno, "cutoff must be positive");
        table.entries.push_back(e);
    }
    if (!header_seen) throw DataError("cutoff table has no header");
    return table;
}

CutoffTable read_cutoff_table(const std::string& path) {
    return parse_cutoff_table(text::read_file(path));
}

void write_cutoff_table(const std::string& path, const CutoffTable& table) {
    text::write_file(path, format_cutoff_table(table));
}

}  // namespace bwd
