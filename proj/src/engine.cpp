#include "bwd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bwd/errors.hpp"

namespace bwd {

double merge_statistic(const GroupStats& a, const GroupStats& b, double sigma_hat,
                       std::int64_t min_segment) noexcept {
    if (a.count < min_segment && b.count < min_segment) return 0.0;
    const double scale =
        sigma_hat * std::sqrt(1.0 / static_cast<double>(a.count) + 1.0 / static_cast<double>(b.count));
    return std::abs(a.mean() - b.mean()) / scale;
}

void BwdConfig::validate() const {
    if (!std::isfinite(sigma_hat) || sigma_hat <= tol_num)
        throw ZeroVarianceError("sigma_hat = " + std::to_string(sigma_hat));
    if (!std::isfinite(cutoff) || cutoff <= 0.0)
        throw UsageError("cutoff must be finite and positive");
    if (min_segment < 1)
        throw UsageError("min_segment must be >= 1");
    if (epidemic && !(epidemic->z_alpha > 0.0))
        throw UsageError("z_alpha must be positive");
}

CostHeap::CostHeap(std::vector<Entry> entries, std::size_t id_limit)
    : heap_(std::move(entries)), pos_(id_limit, absent) {
    for (std::size_t i = 0; i < heap_.size(); ++i) pos_[heap_[i].boundary] = static_cast<std::uint32_t>(i);
    for (std::size_t i = heap_.size() / 4 + 1; i-- > 0;) sift_down(i);
}

void CostHeap::sift_up(std::size_t slot) noexcept {
    const Entry e = heap_[slot];
    while (slot > 0) {
        const std::size_t parent = (slot - 1) / 4;
        if (!before(e, heap_[parent])) break;
        place(slot, heap_[parent]);
        slot = parent;
    }
    place(slot, e);
}

void CostHeap::sift_down(std::size_t slot) noexcept {
    if (slot >= heap_.size()) return;
    const Entry e = heap_[slot];
    const std::size_t count = heap_.size();
    while (true) {
        const std::size_t first = 4 * slot + 1;
        if (first >= count) break;
        std::size_t best = first;
        const std::size_t stop = std::min(first + 4, count);
        for (std::size_t c = first + 1; c < stop; ++c)
            if (before(heap_[c], heap_[best])) best = c;
        if (!before(heap_[best], e)) break;
        place(slot, heap_[best]);
        slot = best;
    }
    place(slot, e);
}

void CostHeap::erase(std::size_t boundary) noexcept {
    const std::size_t slot = pos_[boundary];
    pos_[boundary] = absent;
    const Entry tail = heap_.back();
    heap_.pop_back();
    if (slot == heap_.size()) return;
    place(slot, tail);
    if (slot > 0 && before(tail, heap_[(slot - 1) / 4]))
        sift_up(slot);
    else
        sift_down(slot);
}

void CostHeap::update(std::size_t boundary, double cost) noexcept {
    const std::size_t slot = pos_[boundary];
    const double old = heap_[slot].cost;
    heap_[slot].cost = cost;
    if (cost < old)
        sift_up(slot);
    else
        sift_down(slot);
}

namespace {

std::vector<CostHeap::Entry> adjacent_costs(std::span<const double> values) {
    if (values.size() >= static_cast<std::size_t>(std::numeric_limits<std::uint32_t>::max()))
        throw UsageError("sequence too long");
    std::vector<CostHeap::Entry> out;
    out.reserve(values.size() > 0 ? values.size() - 1 : 0);
    for (std::size_t t = 1; t < values.size(); ++t)
        out.push_back({merge_cost(GroupStats::of(values[t - 1]), GroupStats::of(values[t])),
                       static_cast<std::uint32_t>(t)});
    return out;
}

}  // namespace

Segmentation::Segmentation(std::span<const double> values)
    : n_(values.size()),
      groups_(values.size()),
      stats_(values.size()),
      last_(values.size()),
      start_of_last_(values.size()),
      cost_index_(adjacent_costs(values), values.size()) {
    for (std::size_t i = 0; i < n_; ++i) {
        stats_[i] = GroupStats::of(values[i]);
        last_[i] = static_cast<std::uint32_t>(i);
        start_of_last_[i] = static_cast<std::uint32_t>(i);
    }
}

const GroupStats& Segmentation::left_of(std::size_t boundary) const noexcept {
    return stats_[start_of_last_[boundary - 1]];
}

const GroupStats& Segmentation::right_of(std::size_t boundary) const noexcept {
    return stats_[boundary];
}

void Segmentation::reindex_boundary(std::size_t left_start, const GroupStats* left_override,
                                    const GroupStats* right_override) {
    const std::size_t boundary = last_[left_start] + 1;  // also the right group's start
    const GroupStats& a = left_override ? *left_override : stats_[left_start];
    const GroupStats& b = right_override ? *right_override : stats_[boundary];
    cost_index_.update(boundary, merge_cost(a, b));
}

const GroupStats& Segmentation::merge(std::size_t boundary, const std::optional<GroupStats>& proxy) {
    const std::size_t left = start_of_last_[boundary - 1];
    const std::size_t right = boundary;
    const std::size_t before = prev_of(left);
    const std::size_t after = next_of(right);

    cost_index_.erase(boundary);
    stats_[left] = bwd::merge(stats_[left], stats_[right]);
    last_[left] = last_[right];
    start_of_last_[last_[left]] = static_cast<std::uint32_t>(left);
    --groups_;

    const GroupStats* p = proxy ? &*proxy : nullptr;
    if (before != none) reindex_boundary(before, nullptr, p);
    if (after != none) reindex_boundary(left, p, nullptr);
    return stats_[left];
}

std::vector<std::size_t> Segmentation::boundaries() const {
    std::vector<std::size_t> out;
    out.reserve(groups_ > 0 ? groups_ - 1 : 0);
    for (std::size_t g = 0; g != none && next_of(g) != none; g = next_of(g))
        out.push_back(last_[g] + 1);
    return out;
}

std::vector<GroupStats> Segmentation::groups() const {
    std::vector<GroupStats> out;
    out.reserve(groups_);
    if (n_ == 0) return out;
    for (std::size_t g = 0; g != none; g = next_of(g))
        out.push_back(stats_[g]);
    return out;
}

namespace {

double baseline_z(const GroupStats& g, double mu0, double sigma_hat) {
    return std::sqrt(static_cast<double>(g.count)) * std::abs(g.mean() - mu0) / sigma_hat;
}

DetectionResult detect(const Sequence& seq, const BwdConfig& config, bool epidemic) {
    config.validate();
    DetectionResult res;
    res.sigma_hat = config.sigma_hat;

    Segmentation seg(seq.values());
    // Which boundaries currently carry a baseline-substituted cost.
    std::vector<char> proxied(seq.size() + 1, 0);
    std::size_t iteration = 0;
    while (seg.has_boundary()) {
        const auto [cost, boundary] = seg.cheapest();
        const GroupStats& a = seg.left_of(boundary);
        const GroupStats& b = seg.right_of(boundary);
        const bool guarded = a.count < config.min_segment && b.count < config.min_segment;
        const double s = merge_statistic(a, b, config.sigma_hat, config.min_segment);
        if (s > config.cutoff) break;

        res.trace.push_back({++iteration, boundary, s, cost, guarded, proxied[boundary] != 0});

        std::optional<GroupStats> proxy;
        if (epidemic) {
            const GroupStats merged = merge(a, b);
            if (baseline_z(merged, config.epidemic->mu0, config.sigma_hat) <= config.epidemic->z_alpha) {
                const double v = static_cast<double>(merged.count);
                const double mu0 = config.epidemic->mu0;
                proxy = GroupStats{merged.count, v * mu0, v * mu0 * mu0};
            }
        }
        const std::size_t first = boundary + 1 - static_cast<std::size_t>(a.count);  // 1-based
        const std::size_t last = boundary + static_cast<std::size_t>(b.count);
        seg.merge(boundary, proxy);
        // The refreshed neighbour boundaries sit just outside the merged group.
        if (first > 1) proxied[first - 1] = proxy ? 1 : 0;
        if (last < seq.size()) proxied[last] = proxy ? 1 : 0;
    }

    res.change_points = seg.boundaries();
    const auto groups = seg.groups();
    res.segment_means.reserve(groups.size());
    if (epidemic) {
        std::vector<SegmentCall> calls;
        calls.reserve(groups.size());
        for (const auto& g : groups) {
            const bool baseline =
                baseline_z(g, config.epidemic->mu0, config.sigma_hat) <= config.epidemic->z_alpha;
            calls.push_back(baseline ? SegmentCall::baseline : SegmentCall::variant);
            res.segment_means.push_back(baseline ? config.epidemic->mu0 : g.mean());
        }
        res.calls = std::move(calls);
    } else {
        for (const auto& g : groups) res.segment_means.push_back(g.mean());
    }
    return res;
}

}  // namespace

DetectionResult run_bwd(const Sequence& seq, const BwdConfig& config) {
    return detect(seq, config, false);
}

DetectionResult run_bwd_epidemic(const Sequence& seq, const BwdConfig& config) {
    if (!config.epidemic)
        throw UsageError("run_bwd_epidemic needs an epidemic configuration");
    return detect(seq, config, true);
}

double full_merge_max_statistic(std::span<const double> values, double sigma_hat,
                                std::int64_t min_segment) {
    if (values.size() < 2)
        throw UsageError("full merge needs at least two observations");
    if (!std::isfinite(sigma_hat) || sigma_hat <= tol_num)
        throw ZeroVarianceError("sigma_hat = " + std::to_string(sigma_hat));
    Segmentation seg(values);
    double best = 0.0;
    while (seg.has_boundary()) {
        const std::size_t boundary = seg.cheapest().second;
        best = std::max(best, merge_statistic(seg.left_of(boundary), seg.right_of(boundary),
                                              sigma_hat, min_segment));
        seg.merge(boundary);
    }
    return best;
}

}  // namespace bwd
