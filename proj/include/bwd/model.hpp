#pragma once

// Domain types for the normal mean change-point model.
//
// Indexing convention used throughout the library: observations are
// numbered 1..n, and a change point t means "segment ends at index t",
// so change points live in 1..n-1.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bwd {

/// Relative tolerance for floating-point identity checks.
inline constexpr double tol_num = 1e-9;

/// An ordered series of observations, optionally with genomic coordinates.
class Sequence {
public:
    Sequence() = default;
    explicit Sequence(std::vector<double> values,
                      std::optional<std::vector<std::int64_t>> positions = std::nullopt,
                      std::string label = {});

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    const std::optional<std::vector<std::int64_t>>& positions() const noexcept { return positions_; }
    const std::string& label() const noexcept { return label_; }

private:
    std::vector<double> values_;
    std::optional<std::vector<std::int64_t>> positions_;
    std::string label_;
};

/// Mergeable summary of one contiguous segment.
struct GroupStats {
    std::int64_t count = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    static GroupStats of(double y) noexcept { return {1, y, y * y}; }
    static GroupStats of(std::span<const double> ys) noexcept;

    double mean() const noexcept { return sum / static_cast<double>(count); }
    /// Sum of squared deviations from the mean, clamped at zero.
    double sse() const noexcept;
};

/// Summary of the union of two disjoint groups.
inline GroupStats merge(const GroupStats& a, const GroupStats& b) noexcept {
    return {a.count + b.count, a.sum + b.sum, a.sumsq + b.sumsq};
}

enum class SegmentCall { baseline, variant };

/// One executed merge of the backward procedure.
struct TraceEntry {
    std::size_t iteration = 0;  ///< 1-based merge counter
    std::size_t boundary = 0;   ///< boundary removed (last index of the left group)
    double statistic = 0.0;     ///< guarded merge statistic S
    double cost = 0.0;          ///< SSE rise R that made this pair the cheapest
    bool guarded = false;       ///< both groups were shorter than the guard M
    bool substituted = false;   ///< cost came from a baseline-substituted neighbour
};

struct DetectionResult {
    std::vector<std::size_t> change_points;  ///< strictly increasing, in 1..n-1
    std::vector<double> segment_means;       ///< one per segment
    std::optional<std::vector<SegmentCall>> calls;
    std::vector<TraceEntry> trace;
    double sigma_hat = 0.0;

    std::size_t segment_count() const noexcept { return segment_means.size(); }
};

/// First and last (1-based, inclusive) index of segment k.
struct IndexRange {
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t length() const noexcept { return last - first + 1; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Expands change points into inclusive segment ranges over 1..n.
std::vector<IndexRange> segments_of(std::span<const std::size_t> change_points, std::size_t n);

/// Sum over segments of the within-segment SSE.
double total_sse(std::span<const double> values, std::span<const std::size_t> change_points);

/// Largest input accepted by brute_force_segment.
inline constexpr std::size_t oracle_size_cap = 500;

/// Exact minimiser of total SSE with exactly `k` change points, by dynamic
/// programming over segment costs. Ties go to the lexicographically
/// smallest change-point vector. Testing oracle only; rejects n > 500.
DetectionResult brute_force_segment(const Sequence& seq, std::size_t k);

}  // namespace bwd
