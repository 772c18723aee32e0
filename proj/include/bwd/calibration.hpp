#pragma once

// Monte Carlo calibration of the stopping cutoff.
//
// For each replicate b a change-free sequence is drawn from the chosen null,
// the noise scale is re-estimated with the window-mean estimator, the
// sequence is merged all the way down, and u_b = max_m S_(m) is recorded.
// The cutoff is the ceil((1 - alpha) B)-th smallest u_b, which bounds the
// familywise error rate of the detector by alpha up to Monte Carlo error.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bwd/parallel.hpp"
#include "bwd/preprocess.hpp"

namespace bwd {

enum class NullType { normal, permute, bootstrap };

std::string_view to_string(NullType t) noexcept;
NullType parse_null_type(std::string_view s);

/// Replicate count giving at least ~50 expected exceedances of the quantile.
std::size_t default_replicates(double alpha) noexcept;

struct CalibrationSpec {
    std::size_t n = 0;
    double alpha = 0.05;
    std::size_t B = 2000;
    NullType null_type = NullType::normal;
    std::int64_t min_segment = 1;
    std::size_t h = default_window_half_width;
    std::uint64_t seed = 1;
};

/// u_1..u_B in replicate order. `data` supplies the residual pool for the
/// permute and bootstrap nulls (permute requires data.size() == n).
std::vector<double> null_max_statistics(const CalibrationSpec& spec,
                                        std::span<const double> data = {},
                                        Execution exec = Execution::parallel);

/// 1-based rank of the order statistic used as the cutoff.
std::size_t cutoff_rank(double alpha, std::size_t B);

/// The ceil((1 - alpha) B)-th smallest draw.
double cutoff_from_draws(std::vector<double> draws, double alpha);

/// Monte Carlo standard error of that order statistic, from the spread of
/// the order statistics one binomial standard deviation either side.
double cutoff_standard_error(std::vector<double> draws, double alpha);

double calibrate(const CalibrationSpec& spec, std::span<const double> data = {},
                 Execution exec = Execution::parallel);

struct CutoffEntry {
    std::size_t n = 0;
    double alpha = 0.0;
    NullType null_type = NullType::normal;
    std::int64_t min_segment = 1;
    double cutoff = 0.0;
    std::size_t B = 0;
    std::uint64_t seed = 0;
};

/// cutoff ~ intercept + slope * log(n) for one (alpha, null, M) key.
struct LogLinearFit {
    double alpha = 0.0;
    NullType null_type = NullType::normal;
    std::int64_t min_segment = 1;
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
};

struct CutoffTable {
    std::vector<CutoffEntry> entries;
    std::vector<LogLinearFit> fits;

    std::optional<double> lookup(std::size_t n, double alpha, NullType null_type,
                                 std::int64_t min_segment) const;
    const LogLinearFit* find_fit(double alpha, NullType null_type, std::int64_t min_segment) const;
};

/// Ordinary least squares of cutoff on log n over the table rows matching
/// the key. Needs at least five rows.
LogLinearFit fit_loglinear(const CutoffTable& table, double alpha, NullType null_type,
                           std::int64_t min_segment = 1);

double predict_cutoff(const LogLinearFit& fit, std::size_t n);

/// True when the cutoffs, ordered by n, never drop by more than `k` pooled
/// standard errors between neighbours.
bool monotone_within(std::span<const double> cutoffs, std::span<const double> standard_errors,
                     double k = 2.0);

/// Tab-separated text: header row, one row per entry, then one '#fit' comment
/// line per fit. Reals are written with 6 significant digits.
std::string format_cutoff_table(const CutoffTable& table);
CutoffTable parse_cutoff_table(std::string_view text);

CutoffTable read_cutoff_table(const std::string& path);
void write_cutoff_table(const std::string& path, const CutoffTable& table);

}  // namespace bwd
