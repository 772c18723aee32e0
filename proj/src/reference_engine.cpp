#include "bwd/reference_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bwd/errors.hpp"

namespace bwd::reference {

namespace {

struct Group {
    GroupStats stats;
    std::size_t last = 0;  // 1-based last index
};

std::vector<Group> singletons(std::span<const double> values) {
    std::vector<Group> groups;
    groups.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        groups.push_back({GroupStats::of(values[i]), i + 1});
    return groups;
}

// Position in `groups` of the left member of the cheapest pair; first wins on ties.
std::size_t cheapest_pair(const std::vector<Group>& groups, double& cost) {
    std::size_t arg = 0;
    cost = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < groups.size(); ++i) {
        const double r = merge_cost(groups[i].stats, groups[i + 1].stats);
        if (r < cost) {
            cost = r;
            arg = i;
        }
    }
    return arg;
}

void merge_at(std::vector<Group>& groups, std::size_t i) {
    groups[i].stats = bwd::merge(groups[i].stats, groups[i + 1].stats);
    groups[i].last = groups[i + 1].last;
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(i) + 1);
}

}  // namespace

DetectionResult run_bwd(const Sequence& seq, const BwdConfig& config) {
    if (config.epidemic)
        throw UsageError("the reference engine does not implement epidemic mode");
    config.validate();
    DetectionResult res;
    res.sigma_hat = config.sigma_hat;

    auto groups = singletons(seq.values());
    std::size_t iteration = 0;
    while (groups.size() > 1) {
        double cost = 0.0;
        const std::size_t i = cheapest_pair(groups, cost);
        const auto& a = groups[i].stats;
        const auto& b = groups[i + 1].stats;
        const bool guarded = a.count < config.min_segment && b.count < config.min_segment;
        const double s = merge_statistic(a, b, config.sigma_hat, config.min_segment);
        if (s > config.cutoff) break;
        res.trace.push_back({++iteration, groups[i].last, s, cost, guarded, false});
        merge_at(groups, i);
    }
    for (std::size_t i = 0; i + 1 < groups.size(); ++i)
        res.change_points.push_back(groups[i].last);
    for (const auto& g : groups)
        res.segment_means.push_back(g.stats.mean());
    return res;
}

double full_merge_max_statistic(std::span<const double> values, double sigma_hat,
                                std::int64_t min_segment) {
    if (values.size() < 2)
        throw UsageError("full merge needs at least two observations");
    if (!std::isfinite(sigma_hat) || sigma_hat <= tol_num)
        throw ZeroVarianceError("sigma_hat = " + std::to_string(sigma_hat));
    auto groups = singletons(values);
    double best = 0.0;
    while (groups.size() > 1) {
        double cost = 0.0;
        const std::size_t i = cheapest_pair(groups, cost);
        best = std::max(best, merge_statistic(groups[i].stats, groups[i + 1].stats, sigma_hat,
                                              min_segment));
        merge_at(groups, i);
    }
    return best;
}

}  // namespace bwd::reference
