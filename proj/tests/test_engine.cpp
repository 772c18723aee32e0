#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "bwd/calibration.hpp"
#include "bwd/engine.hpp"
#include "bwd/errors.hpp"
#include "bwd/preprocess.hpp"
#include "bwd/reference_engine.hpp"
#include "oracles.hpp"

using namespace bwd;

namespace {

GroupStats stats(std::vector<double> v) { return GroupStats::of(v); }

BwdConfig config(double cutoff, double sigma, std::int64_t M = 1) {
    BwdConfig c;
    c.cutoff = cutoff;
    c.sigma_hat = sigma;
    c.min_segment = M;
    return c;
}

}  // namespace

TEST_CASE("merge cost") {
    CHECK(merge_cost(stats({3, 3}), stats({3})) == 0.0);
    CHECK(merge_cost(stats({1, 2}), stats({4})) == doctest::Approx(25.0 / 6.0));
}

TEST_CASE("merge statistic") {
    CHECK(merge_statistic(stats({0, 0, 0}), stats({0, 0, 0}), 1.0, 1) == 0.0);
    CHECK(merge_statistic(stats({1, 2}), stats({4}), 1.0, 1) == doctest::Approx(std::sqrt(25.0 / 6.0)));
    CHECK(merge_statistic(stats({0}), stats({10}), 1.0, 3) == 0.0);
    // One side long enough switches the guard off.
    CHECK(merge_statistic(stats({0, 0, 0}), stats({10}), 1.0, 3) > 0.0);
}

TEST_CASE("config validation") {
    const Sequence s({0.0, 1.0});
    CHECK_THROWS_AS(run_bwd(s, config(1.0, 0.0)), ZeroVarianceError);
    CHECK_THROWS_AS(run_bwd(s, config(1.0, 1e-12)), ZeroVarianceError);
    CHECK_THROWS_AS(run_bwd(s, config(0.0, 1.0)), UsageError);
    CHECK_THROWS_AS(run_bwd(s, config(1.0, 1.0, 0)), UsageError);
    CHECK_THROWS_AS(run_bwd_epidemic(s, config(1.0, 1.0)), UsageError);
    CHECK_THROWS_AS(full_merge_max_statistic(std::vector<double>{1.0}, 1.0, 1), UsageError);
    CHECK_THROWS_AS(full_merge_max_statistic(std::vector<double>{1.0, 2.0}, 0.0, 1), ZeroVarianceError);
}

TEST_CASE("constant sequence merges completely") {
    const auto r = run_bwd(Sequence({0, 0, 0, 0}), config(0.5, 1.0));
    CHECK(r.change_points.empty());
    CHECK(r.trace.size() == 3);
    CHECK(r.segment_means == std::vector<double>{0.0});
}

TEST_CASE("single observation") {
    const auto r = run_bwd(Sequence({3.0}), config(1.0, 1.0));
    CHECK(r.change_points.empty());
    CHECK(r.segment_means == std::vector<double>{3.0});
}

TEST_CASE("stop pair is not merged") {
    const auto r = run_bwd(Sequence({0, 0, 0, 10, 10, 10}), config(3.0, 1.0));
    CHECK(r.change_points == std::vector<std::size_t>{3});
    CHECK(r.trace.size() == 4);
    REQUIRE(r.segment_means.size() == 2);
    CHECK(r.segment_means[1] == doctest::Approx(10.0));
}

TEST_CASE("guarded pairs still merge") {
    // Two singletons far apart: the guard zeroes S, so they merge anyway.
    const auto r = run_bwd(Sequence({0, 100}), config(1.0, 1.0, 2));
    CHECK(r.change_points.empty());
    REQUIRE(r.trace.size() == 1);
    CHECK(r.trace[0].guarded);
    CHECK(r.trace[0].statistic == 0.0);
}

TEST_CASE("full merge maximum") {
    CHECK(full_merge_max_statistic(std::vector<double>(10, 0.0), 1.0, 1) == 0.0);
    CHECK(full_merge_max_statistic(std::vector<double>{0.0, 5.0}, 1.0, 1) ==
          doctest::Approx(5.0 / std::sqrt(2.0)));
    const auto y = oracle::normal_draws(100, 4);
    const double fast = full_merge_max_statistic(y, 1.0, 1);
    CHECK(fast == reference::full_merge_max_statistic(y, 1.0, 1));
    double naive = 0.0;
    for (const auto& m : oracle::naive_bwd(y, 1.0, -1.0, 1).merges) naive = std::max(naive, m.statistic);
    CHECK(oracle::close(fast, naive));
}

TEST_CASE("fast engine matches the quadratic engines") {
    std::mt19937_64 gen(42);
    std::uniform_int_distribution<std::size_t> len(1, 120);
    std::uniform_real_distribution<double> cut(1.0, 6.0);
    for (int rep = 0; rep < 150; ++rep) {
        const std::size_t n = len(gen);
        auto y = oracle::normal_draws(n, static_cast<unsigned>(rep));
        if (n > 20) for (std::size_t i = n / 3; i < n / 3 + 5; ++i) y[i] += 3.0;
        const std::int64_t M = rep % 3 == 0 ? 3 : 1;
        const auto cfg = config(cut(gen), 1.0, M);
        const auto fast = run_bwd(Sequence(y), cfg);
        const auto ref = reference::run_bwd(Sequence(y), cfg);
        CHECK(fast.change_points == ref.change_points);
        REQUIRE(fast.trace.size() == ref.trace.size());
        for (std::size_t i = 0; i < fast.trace.size(); ++i) {
            CHECK(fast.trace[i].boundary == ref.trace[i].boundary);
            CHECK(fast.trace[i].statistic == ref.trace[i].statistic);
        }
        const auto naive = oracle::naive_bwd(y, 1.0, cfg.cutoff, M);
        CHECK(fast.change_points == naive.change_points);
        REQUIRE(fast.trace.size() == naive.merges.size());
        for (std::size_t i = 0; i < naive.merges.size(); ++i) {
            CHECK(fast.trace[i].boundary == naive.merges[i].boundary);
            CHECK(oracle::close(fast.trace[i].statistic, naive.merges[i].statistic));
        }
    }
}

TEST_CASE("cost equals sigma squared times statistic squared") {
    for (unsigned seed = 0; seed < 30; ++seed) {
        const auto y = oracle::normal_draws(150, seed, 2.0);
        const auto r = run_bwd(Sequence(y), config(4.0, 1.7, 2));
        for (const auto& t : r.trace) {
            if (t.guarded) continue;
            CHECK(oracle::close(t.cost, 1.7 * 1.7 * t.statistic * t.statistic));
        }
    }
}

TEST_CASE("segment means are the segment averages") {
    auto y = oracle::normal_draws(300, 8);
    for (std::size_t i = 100; i < 120; ++i) y[i] += 4.0;
    const auto r = run_bwd(Sequence(y), config(4.0, 1.0));
    const auto segs = segments_of(r.change_points, y.size());
    REQUIRE(segs.size() == r.segment_means.size());
    for (std::size_t k = 0; k < segs.size(); ++k)
        CHECK(oracle::close(r.segment_means[k], oracle::mean(y, segs[k].first - 1, segs[k].last - 1)));
}

TEST_CASE("merge count is non-decreasing in the cutoff") {
    const auto y = oracle::normal_draws(200, 19);
    std::size_t prev = 0;
    for (double c = 0.5; c < 6.0; c += 0.25) {
        const auto merges = run_bwd(Sequence(y), config(c, 1.0)).trace.size();
        CHECK(merges >= prev);
        prev = merges;
    }
}

TEST_CASE("shift invariance and scale equivariance") {
    auto y = oracle::normal_draws(180, 23);
    for (std::size_t i = 50; i < 58; ++i) y[i] += 3.0;
    const auto base = run_bwd(Sequence(y), config(3.5, 1.0));
    auto shifted = y;
    for (auto& v : shifted) v += 0.25;
    auto scaled = y;
    for (auto& v : scaled) v *= 4.0;
    const auto rs = run_bwd(Sequence(shifted), config(3.5, 1.0));
    const auto rc = run_bwd(Sequence(scaled), config(3.5, 4.0));
    CHECK(rs.change_points == base.change_points);
    CHECK(rc.change_points == base.change_points);
    REQUIRE(rs.trace.size() == base.trace.size());
    REQUIRE(rc.trace.size() == base.trace.size());
    for (std::size_t i = 0; i < base.trace.size(); ++i) {
        CHECK(rs.trace[i].boundary == base.trace[i].boundary);
        CHECK(rc.trace[i].boundary == base.trace[i].boundary);
        CHECK(std::abs(rs.trace[i].statistic - base.trace[i].statistic) < 1e-6);
        CHECK(oracle::close(rc.trace[i].statistic, base.trace[i].statistic, 1e-7));
    }
}

TEST_CASE("segmentation keeps its index consistent") {
    auto y = oracle::normal_draws(300, 31);
    Segmentation seg(y);
    std::mt19937_64 gen(3);
    while (seg.has_boundary()) {
        const auto bounds = seg.boundaries();
        const auto groups = seg.groups();
        REQUIRE(bounds.size() + 1 == groups.size());
        std::int64_t covered = 0;
        for (const auto& g : groups) covered += g.count;
        CHECK(covered == 300);
        const auto [cost, b] = seg.cheapest();
        for (std::size_t i = 0; i < bounds.size(); ++i) {
            const double c = merge_cost(groups[i], groups[i + 1]);
            CHECK(oracle::close(seg.indexed_cost(bounds[i]), c));
            CHECK((cost < c || (cost == c && b <= bounds[i])));
        }
        // Merge the cheapest most of the time, an arbitrary boundary otherwise.
        const std::size_t pick = gen() % 4 == 0 ? bounds[gen() % bounds.size()] : b;
        seg.merge(pick);
    }
    CHECK(seg.group_count() == 1);
}

TEST_CASE("cost heap against an ordered set") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    const std::size_t ids = 400;
    std::vector<CostHeap::Entry> init;
    std::set<std::pair<double, std::size_t>> ref;
    std::vector<double> cost(ids);
    for (std::uint32_t i = 1; i < ids; ++i) {
        cost[i] = std::floor(u(gen));  // many ties
        init.push_back({cost[i], i});
        ref.emplace(cost[i], i);
    }
    CostHeap heap(init, ids);
    while (!ref.empty()) {
        REQUIRE(heap.size() == ref.size());
        CHECK(heap.top().cost == ref.begin()->first);
        CHECK(heap.top().boundary == ref.begin()->second);
        const auto it = std::next(ref.begin(), static_cast<long>(gen() % ref.size()));
        const std::size_t id = it->second;
        if (gen() % 3 == 0) {
            heap.erase(id);
            ref.erase(it);
            CHECK_FALSE(heap.contains(id));
        } else {
            ref.erase(it);
            cost[id] = std::floor(u(gen));
            heap.update(id, cost[id]);
            ref.emplace(cost[id], id);
        }
    }
    CHECK(heap.empty());
}

TEST_CASE("epidemic mode on a flat baseline") {
    BwdConfig cfg = config(1.0, 1.0);
    cfg.epidemic = EpidemicConfig{0.0, 1.96};
    const auto r = run_bwd_epidemic(Sequence({0, 0, 0, 0}), cfg);
    CHECK(r.change_points.empty());
    REQUIRE(r.calls);
    CHECK(*r.calls == std::vector<SegmentCall>{SegmentCall::baseline});
    CHECK(r.segment_means == std::vector<double>{0.0});
}

TEST_CASE("baseline substitution is a no-op when the merged mean equals the baseline") {
    // Indices 2..10 hold nine values averaging exactly 2.
    const std::vector<double> y{9, 0, 4, 2, 2, 2, 2, 2, 1, 3, -5};
    Segmentation with_proxy(y), without(y);
    for (std::size_t b = 2; b <= 8; ++b) {
        with_proxy.merge(b);
        without.merge(b);
    }
    with_proxy.merge(9, GroupStats{9, 9 * 2.0, 9 * 4.0});
    without.merge(9);
    CHECK(with_proxy.indexed_cost(1) == without.indexed_cost(1));
    CHECK(with_proxy.indexed_cost(10) == without.indexed_cost(10));
    CHECK(with_proxy.groups()[1].count == 9);
}

TEST_CASE("epidemic mode substitutes neighbour costs and labels segments") {
    auto y = oracle::normal_draws(400, 12);
    for (std::size_t i = 200; i < 210; ++i) y[i] += 5.0;
    BwdConfig cfg = config(4.5, 1.0);
    cfg.epidemic = EpidemicConfig{0.0, 1.96};
    const auto r = run_bwd_epidemic(Sequence(y), cfg);
    REQUIRE(r.calls);
    const auto segs = segments_of(r.change_points, y.size());
    bool variant_on_signal = false;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const double m = oracle::mean(y, segs[k].first - 1, segs[k].last - 1);
        const double z = std::sqrt(static_cast<double>(segs[k].length())) * std::abs(m);
        const bool baseline = z <= 1.96;
        CHECK(((*r.calls)[k] == SegmentCall::baseline) == baseline);
        CHECK(oracle::close(r.segment_means[k], baseline ? 0.0 : m));
        if (!baseline && segs[k].first <= 210 && segs[k].last >= 201) variant_on_signal = true;
    }
    CHECK(variant_on_signal);
    bool any_substituted = false;
    for (const auto& t : r.trace) any_substituted = any_substituted || t.substituted;
    CHECK(any_substituted);
}

TEST_CASE("planted block is found at its boundaries") {
    CalibrationSpec spec;
    spec.n = 200;
    spec.alpha = 0.05;
    spec.seed = 99;
    const double cutoff = calibrate(spec);
    int hits = 0;
    for (unsigned seed = 0; seed < 100; ++seed) {
        auto y = oracle::normal_draws(200, 5000 + seed);
        for (std::size_t i = 100; i < 110; ++i) y[i] += 3.0;  // indices 101..110
        const double sigma = estimate_sigma(y, SigmaMethod::window_mean).sigma_hat;
        const auto r = run_bwd(Sequence(y), config(cutoff, sigma));
        bool left = false, right = false;
        for (auto t : r.change_points) {
            left = left || (t >= 99 && t <= 101);
            right = right || (t >= 109 && t <= 111);
        }
        hits += left && right;
    }
    // Greedy merging lands within one index about 89% of the time
    // (1000-seed Monte Carlo); the exact two-cut optimum manages about 95%.
    CHECK(hits >= 85);
}

TEST_CASE("pure noise rarely triggers a detection") {
    CalibrationSpec spec;
    spec.n = 200;
    spec.alpha = 0.05;
    spec.seed = 99;
    const double cutoff = calibrate(spec);
    int rejections = 0;
    for (unsigned seed = 0; seed < 1000; ++seed) {
        const auto y = oracle::normal_draws(200, 90000 + seed);
        const double sigma = estimate_sigma(y, SigmaMethod::window_mean).sigma_hat;
        rejections += !run_bwd(Sequence(y), config(cutoff, sigma)).change_points.empty();
    }
    CHECK(rejections <= 70);
}
