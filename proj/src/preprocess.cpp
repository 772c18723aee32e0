#include "bwd/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bwd/errors.hpp"

namespace bwd {

std::string_view to_string(SigmaMethod m) noexcept {
    switch (m) {
        case SigmaMethod::window_mean: return "window";
        case SigmaMethod::mad: return "mad";
        case SigmaMethod::sample: return "sample";
    }
    return "?";
}

SigmaMethod parse_sigma_method(std::string_view s) {
    if (s == "window" || s == "window_mean") return SigmaMethod::window_mean;
    if (s == "mad") return SigmaMethod::mad;
    if (s == "sample") return SigmaMethod::sample;
    throw UsageError("unknown sigma method '" + std::string(s) + "'");
}

std::vector<double> window_mean(std::span<const double> values, std::size_t h) {
    const std::size_t n = values.size();
    if (h == 0) throw UsageError("window half-width must be >= 1");
    // Prefix sums of centred values keep the running totals small.
    const double centre = values.empty() ? 0.0 : values[0];
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        prefix[i + 1] = prefix[i] + (values[i] - centre);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= h ? i - h : 0;
        const std::size_t hi = std::min(n - 1, i + h);
        out[i] = centre + (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    }
    return out;
}

std::vector<double> residuals(std::span<const double> values, std::size_t h) {
    auto out = window_mean(values, h);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = values[i] - out[i];
    return out;
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw UsageError("median of an empty sample");
    const std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    const double upper = xs[mid];
    if (xs.size() % 2 == 1) return upper;
    const double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

VarianceEstimate estimate_sigma(std::span<const double> values, SigmaMethod method, std::size_t h) {
    const std::size_t n = values.size();
    if (n < 2) throw UsageError("variance estimation needs at least two observations");

    VarianceEstimate est;
    est.method = method;
    switch (method) {
        case SigmaMethod::window_mean: {
            const auto r = residuals(values, h);
            double ss = 0.0;
            for (double x : r) ss += x * x;
            est.sigma_hat = std::sqrt(ss / static_cast<double>(n));
            est.h = h;
            break;
        }
        case SigmaMethod::mad: {
            std::vector<double> diffs(n - 1);
            for (std::size_t i = 0; i + 1 < n; ++i)
                diffs[i] = std::abs(values[i + 1] - values[i]);
            est.sigma_hat = median(std::move(diffs)) / (std::sqrt(2.0) * mad_consistency);
            break;
        }
        case SigmaMethod::sample: {
            const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
            double ss = 0.0;
            for (double y : values) ss += (y - mean) * (y - mean);
            est.sigma_hat = std::sqrt(ss / static_cast<double>(n - 1));
            break;
        }
    }

    double magnitude = 1.0;
    for (double y : values) magnitude = std::max(magnitude, std::abs(y));
    if (!(est.sigma_hat > tol_num * magnitude))
        throw ZeroVarianceError(std::string(to_string(method)) + " estimate is " +
                                std::to_string(est.sigma_hat));
    return est;
}

Sequence local_median_bin(const Sequence& seq, std::size_t bin_size) {
    if (bin_size == 0) throw UsageError("bin size must be >= 1");
    const std::size_t n = seq.size();
    if (n < bin_size)
        throw DataError("bin larger than sequence: " + std::to_string(bin_size) + " > " +
                        std::to_string(n));
    const std::size_t bins = n / bin_size;
    const auto y = seq.values();
    std::vector<double> medians(bins);
    std::optional<std::vector<std::int64_t>> positions;
    if (seq.positions()) positions.emplace(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        const auto chunk = y.subspan(b * bin_size, bin_size);
        medians[b] = median(std::vector<double>(chunk.begin(), chunk.end()));
        if (positions) (*positions)[b] = (*seq.positions())[b * bin_size];
    }
    return Sequence(std::move(medians), std::move(positions), seq.label());
}

}  // namespace bwd
