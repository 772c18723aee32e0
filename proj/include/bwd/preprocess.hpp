#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bwd/model.hpp"

namespace bwd {

enum class SigmaMethod { window_mean, mad, sample };

inline constexpr std::size_t default_window_half_width = 10;

/// Normal-consistency constant for the median absolute deviation.
inline constexpr double mad_consistency = 0.6745;

struct VarianceEstimate {
    double sigma_hat = 0.0;
    SigmaMethod method = SigmaMethod::window_mean;
    std::optional<std::size_t> h;  ///< set iff method == window_mean
};

std::string_view to_string(SigmaMethod m) noexcept;
SigmaMethod parse_sigma_method(std::string_view s);

/// Local mean over [i-h, i+h], truncated at the sequence ends (each entry
/// divides by its actual window size).
std::vector<double> window_mean(std::span<const double> values, std::size_t h);

/// values[i] - window_mean(values, h)[i].
std::vector<double> residuals(std::span<const double> values, std::size_t h);

/// Global noise scale.
///   window_mean: sqrt(n^-1 sum (y_i - local mean_i)^2)
///   mad:         median |y_{i+1} - y_i| / (sqrt(2) * 0.6745)
///   sample:      sample standard deviation (n - 1 denominator)
/// Throws ZeroVarianceError when the estimate is not above tol_num relative
/// to the data magnitude.
VarianceEstimate estimate_sigma(std::span<const double> values, SigmaMethod method,
                                std::size_t h = default_window_half_width);

/// Median of a sample; even sizes average the two central order statistics.
double median(std::vector<double> xs);

/// Medians of consecutive, non-overlapping bins of `bin_size` observations.
/// A trailing partial bin is dropped; positions, if any, become the first
/// coordinate of each bin.
Sequence local_median_bin(const Sequence& seq, std::size_t bin_size);

}  // namespace bwd
