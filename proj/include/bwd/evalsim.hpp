#pragma once

// Synthetic short-signal benchmark: planted mean-shift segments on a zero
// baseline, the overlap/length matching rule, and sensitivity/precision
// tables over parameter grids.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bwd/calibration.hpp"
#include "bwd/model.hpp"
#include "bwd/parallel.hpp"

namespace bwd {

enum class NoiseKind { normal, student_t };

struct Noise {
    NoiseKind kind = NoiseKind::normal;
    double sigma = 1.0;  ///< normal only
    double df = 10.0;    ///< student_t only; not rescaled to unit variance
};

struct SimSpec {
    std::size_t n = 1000;
    std::size_t kappa = 1;
    std::size_t L = 10;
    double delta = 0.0;
    Noise noise;
    std::size_t min_gap = 200;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;  ///< replicate number
};

struct SimData {
    Sequence seq;
    std::vector<IndexRange> truth;  ///< planted intervals, sorted
};

/// Throws DataError("infeasible placement") when kappa (L + min_gap) > n or
/// rejection sampling exhausts its attempt budget.
SimData generate(const SimSpec& spec);

struct Score {
    std::size_t n_true = 0;
    std::size_t n_found = 0;     ///< true intervals hit by at least one correct call
    std::size_t n_detected = 0;
    std::size_t n_correct = 0;   ///< true intervals credited to a call, at most one each
    double sensitivity = 0.0;
    double precision = 0.0;      ///< 0/0 is taken as 0
};

Score match_and_score(std::span<const IndexRange> truth, std::span<const IndexRange> detected,
                      std::size_t L);

/// Turns a segmentation into calls: maximal runs of segments flagged as
/// departing from `mu0`. Plain results flag |mean - mu0| > 2 sigma_hat / sqrt(len);
/// epidemic results flag variant-labelled segments.
std::vector<IndexRange> calls_from_result(const DetectionResult& result, std::size_t n,
                                          double mu0 = 0.0);

enum class Detector { bwd1, bwd2 };  // plain, epidemic
enum class CutoffMode { cutoff1, cutoff2 };

std::string_view to_string(Detector d) noexcept;
std::string_view to_string(CutoffMode m) noexcept;
std::string_view to_string(NoiseKind k) noexcept;

/// Upper alpha quantile of the standard normal.
double upper_normal_quantile(double alpha);

struct CellSpec {
    std::size_t n = 1000;
    std::size_t L = 10;
    double delta = 0.0;
    Noise noise;
    double alpha = 0.05;
    Detector detector = Detector::bwd1;
    CutoffMode mode = CutoffMode::cutoff1;
};

struct EvalSettings {
    std::size_t replicates = 500;
    std::uint64_t seed = 1;
    std::size_t h = 10;
    std::int64_t min_segment = 1;
    std::size_t kappa = 0;  ///< 0 means n / 1000 (at least 1)
    std::size_t min_gap = 200;
    std::size_t cutoff2_B = 0;  ///< per-replicate permutation count; 0 means default_replicates(alpha)
    double mu0 = 0.0;
    Execution exec = Execution::parallel;
};

/// Normal-null cutoff for (n, alpha), used by cutoff1 cells.
using CutoffProvider = std::function<double(std::size_t n, double alpha)>;

/// Calibrates normal-null cutoffs on first use and remembers them.
CutoffProvider caching_normal_cutoffs(std::size_t B, std::int64_t min_segment, std::size_t h,
                                      std::uint64_t seed);

struct EvalReport {
    CellSpec cell;
    std::size_t replicates = 0;
    double sensitivity = 0.0;     ///< total found / total true
    double precision = 0.0;       ///< total correct / total detected, 0/0 = 0
    double sensitivity_se = 0.0;
    double precision_se = 0.0;
    double rejection_rate = 0.0;  ///< share of replicates with at least one change point
    std::size_t n_detected = 0;
    std::size_t n_correct = 0;
    std::vector<Score> per_replicate;
};

/// Replicate r of every cell uses data stream r, so cells sharing (n, L,
/// delta, noise) are evaluated on identical data.
EvalReport evaluate_cell(const CellSpec& cell, const EvalSettings& settings,
                         const CutoffProvider& cutoffs);

std::vector<EvalReport> run_table(std::span<const CellSpec> cells, const EvalSettings& settings,
                                  const CutoffProvider& cutoffs);

/// One row per cell with sensitivity, precision and their standard errors.
std::string format_report_table(std::span<const EvalReport> reports);
/// Long format: cell keys, metric, value, std_error.
std::string format_report_long(std::span<const EvalReport> reports);

struct ForwardDemoSpec {
    double mu = 2.0;
    double sigma = 1.0;
    double c = 0.5;
    double beta = 0.25;
    double alpha = 0.05;
    std::size_t replicates = 10000;
    std::uint64_t seed = 1;
    /// Draw whole sequences and estimate sigma by the sample SD instead of
    /// sampling the two segment sums directly with known sigma.
    bool full_sequences = false;
};

struct PowerPoint {
    std::size_t n = 0;
    std::size_t t1 = 0;
    std::size_t L = 0;
    double power = 0.0;
    double standard_error = 0.0;
};

/// Rejection rate of the two-sided single-split z-test at the known split
/// t1 = floor(c n) when a segment of length L = floor(n^beta) and mean mu
/// starts right after t1.
std::vector<PowerPoint> forward_power_demo(const ForwardDemoSpec& spec,
                                           std::span<const std::size_t> n_grid,
                                           Execution exec = Execution::parallel);

}  // namespace bwd
