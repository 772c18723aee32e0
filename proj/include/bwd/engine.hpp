#pragma once

// Backward detection: start from n singleton groups and repeatedly merge
// the adjacent pair whose union raises the total SSE the least, stopping
// once the standardized mean difference of the cheapest pair exceeds a
// calibrated cutoff.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bwd/model.hpp"

namespace bwd {

/// SSE rise of merging two adjacent groups, n_a n_b / (n_a + n_b) (mean_a - mean_b)^2.
inline double merge_cost(const GroupStats& a, const GroupStats& b) noexcept {
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    const double d = a.mean() - b.mean();
    return na * nb / (na + nb) * d * d;
}

/// Standardized mean difference of two adjacent groups. Returns 0 when both
/// groups hold fewer than `min_segment` observations.
double merge_statistic(const GroupStats& a, const GroupStats& b, double sigma_hat,
                       std::int64_t min_segment) noexcept;

struct EpidemicConfig {
    double mu0 = 0.0;
    double z_alpha = 1.959963984540054;
};

struct BwdConfig {
    double alpha = 0.05;  ///< informational; the cutoff already encodes it
    double cutoff = 0.0;  ///< stop threshold on the merge statistic
    double sigma_hat = 0.0;
    std::int64_t min_segment = 1;  ///< M; 1 disables the guard
    std::optional<EpidemicConfig> epidemic;

    /// Throws UsageError on non-positive cutoff or M, ZeroVarianceError on
    /// a degenerate sigma_hat.
    void validate() const;
};

/// Indexed 4-ary min-heap over boundary costs, ordered by (cost, boundary)
/// so ties resolve to the smallest boundary. Supports in-place key updates
/// and removal by boundary id.
class CostHeap {
public:
    struct Entry {
        double cost;
        std::uint32_t boundary;
    };

    /// Builds from arbitrary-order entries; ids must be below `id_limit`.
    CostHeap(std::vector<Entry> entries, std::size_t id_limit);

    bool empty() const noexcept { return heap_.empty(); }
    std::size_t size() const noexcept { return heap_.size(); }
    const Entry& top() const noexcept { return heap_.front(); }
    bool contains(std::size_t boundary) const noexcept { return pos_[boundary] != absent; }
    double cost(std::size_t boundary) const noexcept { return heap_[pos_[boundary]].cost; }

    void erase(std::size_t boundary) noexcept;
    void update(std::size_t boundary, double cost) noexcept;

private:
    static constexpr std::uint32_t absent = static_cast<std::uint32_t>(-1);
    static bool before(const Entry& a, const Entry& b) noexcept {
        return a.cost < b.cost || (a.cost == b.cost && a.boundary < b.boundary);
    }
    void place(std::size_t slot, const Entry& e) noexcept {
        heap_[slot] = e;
        pos_[e.boundary] = static_cast<std::uint32_t>(slot);
    }
    void sift_up(std::size_t slot) noexcept;
    void sift_down(std::size_t slot) noexcept;

    std::vector<Entry> heap_;
    std::vector<std::uint32_t> pos_;
};

/// Live partition of 1..n into contiguous groups together with an ordered
/// index over the merge cost of every adjacent pair.
///
/// Groups are addressed by their first index (0-based internally); a
/// boundary is addressed by the 1-based last index of its left group.
class Segmentation {
public:
    explicit Segmentation(std::span<const double> values);

    std::size_t size() const noexcept { return n_; }
    std::size_t group_count() const noexcept { return groups_; }
    bool has_boundary() const noexcept { return !cost_index_.empty(); }

    /// Cheapest boundary as (cost, boundary); ties go to the smallest boundary.
    std::pair<double, std::size_t> cheapest() const noexcept {
        return {cost_index_.top().cost, cost_index_.top().boundary};
    }

    const GroupStats& left_of(std::size_t boundary) const noexcept;
    const GroupStats& right_of(std::size_t boundary) const noexcept;

    /// Merge the two groups at `boundary` and refresh the (at most two)
    /// neighbouring costs. When `proxy` is given, those neighbour costs are
    /// computed as if the merged group had the proxy's summary; the stored
    /// summary is always the exact union.
    const GroupStats& merge(std::size_t boundary, const std::optional<GroupStats>& proxy = std::nullopt);

    /// Current boundaries in increasing order.
    std::vector<std::size_t> boundaries() const;
    /// Summaries of the current groups, left to right.
    std::vector<GroupStats> groups() const;

    /// Cost currently indexed for a boundary (for invariant checks).
    double indexed_cost(std::size_t boundary) const noexcept { return cost_index_.cost(boundary); }

private:
    static constexpr std::size_t none = static_cast<std::size_t>(-1);

    // Groups are contiguous, so the right neighbour starts at last + 1 and
    // the left neighbour is found through start_of_last_.
    std::size_t next_of(std::size_t g) const noexcept { return last_[g] + 1 < n_ ? last_[g] + 1 : none; }
    std::size_t prev_of(std::size_t g) const noexcept { return g > 0 ? start_of_last_[g - 1] : none; }

    void reindex_boundary(std::size_t left_start, const GroupStats* left_override,
                          const GroupStats* right_override);

    std::size_t n_ = 0;
    std::size_t groups_ = 0;
    // Per group, keyed by first index; only entries for live groups are meaningful.
    std::vector<GroupStats> stats_;
    std::vector<std::uint32_t> last_;           // 0-based last index
    std::vector<std::uint32_t> start_of_last_;  // 0-based last index -> group first index
    CostHeap cost_index_;
};

/// Plain backward detection.
DetectionResult run_bwd(const Sequence& seq, const BwdConfig& config);

/// Backward detection with baseline substitution for epidemic change points.
/// `config.epidemic` must be set.
DetectionResult run_bwd_epidemic(const Sequence& seq, const BwdConfig& config);

/// Merge everything down to one group and return the largest guarded merge
/// statistic seen along the way.
double full_merge_max_statistic(std::span<const double> values, double sigma_hat,
                                std::int64_t min_segment);

}  // namespace bwd
