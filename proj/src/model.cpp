#include "bwd/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bwd/errors.hpp"

namespace bwd {

Sequence::Sequence(std::vector<double> values,
                   std::optional<std::vector<std::int64_t>> positions,
                   std::string label)
    : values_(std::move(values)), positions_(std::move(positions)), label_(std::move(label)) {
    if (values_.empty())
        throw DataError("sequence '" + label_ + "' is empty");
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!std::isfinite(values_[i]))
            throw DataError("sequence '" + label_ + "' has a non-finite value at index " +
                            std::to_string(i + 1));
    if (positions_) {
        if (positions_->size() != values_.size())
            throw DataError("sequence '" + label_ + "': positions and values differ in length");
        for (std::size_t i = 1; i < positions_->size(); ++i)
            if ((*positions_)[i] <= (*positions_)[i - 1])
                throw DataError("sequence '" + label_ +
                                "': positions not strictly increasing at index " +
                                std::to_string(i + 1));
    }
}

GroupStats GroupStats::of(std::span<const double> ys) noexcept {
    GroupStats g;
    for (double y : ys) {
        ++g.count;
        g.sum += y;
        g.sumsq += y * y;
    }
    return g;
}

double GroupStats::sse() const noexcept {
    const double v = sumsq - sum * sum / static_cast<double>(count);
    return v > 0.0 ? v : 0.0;
}

std::vector<IndexRange> segments_of(std::span<const std::size_t> change_points, std::size_t n) {
    std::vector<IndexRange> out;
    out.reserve(change_points.size() + 1);
    std::size_t first = 1;
    for (std::size_t t : change_points) {
        out.push_back({first, t});
        first = t + 1;
    }
    out.push_back({first, n});
    return out;
}

double total_sse(std::span<const double> values, std::span<const std::size_t> change_points) {
    double total = 0.0;
    for (const auto& seg : segments_of(change_points, values.size()))
        total += GroupStats::of(values.subspan(seg.first - 1, seg.length())).sse();
    return total;
}

DetectionResult brute_force_segment(const Sequence& seq, std::size_t k) {
    const std::size_t n = seq.size();
    if (n > oracle_size_cap)
        throw UsageError("oracle scale exceeded: n = " + std::to_string(n) + " > " +
                         std::to_string(oracle_size_cap));
    if (k + 1 > n)
        throw UsageError("oracle needs k <= n - 1");

    const auto y = seq.values();
    std::vector<double> ps(n + 1, 0.0), pq(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        ps[i + 1] = ps[i] + y[i];
        pq[i + 1] = pq[i] + y[i] * y[i];
    }
    // SSE of the 0-based closed range [i, j]
    auto cost = [&](std::size_t i, std::size_t j) {
        const GroupStats g{static_cast<std::int64_t>(j - i + 1), ps[j + 1] - ps[i], pq[j + 1] - pq[i]};
        return g.sse();
    };

    // best[c][i]: minimal SSE of suffix i..n-1 split by exactly c change points.
    // cut[c][i]: 0-based last index of the first segment in that optimum.
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best(k + 1, std::vector<double>(n, inf));
    std::vector<std::vector<std::size_t>> cut(k + 1, std::vector<std::size_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        best[0][i] = cost(i, n - 1);
    for (std::size_t c = 1; c <= k; ++c) {
        for (std::size_t i = 0; i + c < n; ++i) {
            double b = inf;
            std::size_t arg = i;
            for (std::size_t j = i; j + c < n; ++j) {
                const double v = cost(i, j) + best[c - 1][j + 1];
                if (v < b) {
                    b = v;
                    arg = j;
                }
            }
            best[c][i] = b;
            cut[c][i] = arg;
        }
    }

    DetectionResult res;
    std::size_t i = 0;
    for (std::size_t c = k; c >= 1; --c) {
        const std::size_t j = cut[c][i];
        res.change_points.push_back(j + 1);
        i = j + 1;
    }
    for (const auto& seg : segments_of(res.change_points, n))
        res.segment_means.push_back(GroupStats::of(y.subspan(seg.first - 1, seg.length())).mean());
    res.sigma_hat = std::sqrt(best[k][0] / static_cast<double>(n));
    return res;
}

}  // namespace bwd
