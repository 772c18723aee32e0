#include "bwd/evalsim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "bwd/engine.hpp"
#include "bwd/errors.hpp"
#include "bwd/preprocess.hpp"
#include "bwd/rng.hpp"
#include "bwd/text.hpp"

namespace bwd {

namespace {

constexpr std::size_t placement_attempts = 10000;

}  // namespace

SimData generate(const SimSpec& spec) {
    if (spec.L == 0) throw UsageError("segment length L must be >= 1");
    if (spec.kappa * (spec.L + spec.min_gap) > spec.n)
        throw DataError("infeasible placement: kappa (L + min_gap) = " +
                        std::to_string(spec.kappa * (spec.L + spec.min_gap)) + " > n = " +
                        std::to_string(spec.n));

    Philox4x32 gen(spec.seed, spec.stream);
    std::vector<IndexRange> truth;
    std::size_t attempts = 0;
    const std::size_t starts = spec.n - spec.L + 1;
    while (truth.size() < spec.kappa) {
        if (++attempts > placement_attempts)
            throw DataError("infeasible placement: gave up after " +
                            std::to_string(placement_attempts) + " attempts");
        const std::size_t first = 1 + uniform_below(gen, starts);
        const IndexRange cand{first, first + spec.L - 1};
        const bool clear = std::all_of(truth.begin(), truth.end(), [&](const IndexRange& t) {
            return cand.first > t.last + spec.min_gap || t.first > cand.last + spec.min_gap;
        });
        if (clear) truth.push_back(cand);
    }
    std::sort(truth.begin(), truth.end(),
              [](const IndexRange& a, const IndexRange& b) { return a.first < b.first; });

    std::vector<double> y(spec.n);
    if (spec.noise.kind == NoiseKind::normal) {
        std::normal_distribution<double> eps(0.0, spec.noise.sigma);
        for (auto& v : y) v = eps(gen);
    } else {
        std::student_t_distribution<double> eps(spec.noise.df);
        for (auto& v : y) v = eps(gen);
    }
    for (const auto& t : truth)
        for (std::size_t i = t.first; i <= t.last; ++i) y[i - 1] += spec.delta;
    return {Sequence(std::move(y)), std::move(truth)};
}

Score match_and_score(std::span<const IndexRange> truth, std::span<const IndexRange> detected,
                      std::size_t L) {
    const auto overlaps = [](const IndexRange& a, const IndexRange& b) {
        return a.first <= b.last && b.first <= a.last;
    };
    Score s;
    s.n_true = truth.size();
    s.n_detected = detected.size();
    std::vector<char> found(truth.size(), 0);
    for (const auto& d : detected) {
        if (d.length() >= 2 * L) continue;
        for (std::size_t k = 0; k < truth.size(); ++k)
            if (overlaps(d, truth[k])) found[k] = 1;
    }
    s.n_found = static_cast<std::size_t>(std::count(found.begin(), found.end(), 1));
    // Sensitivity and precision share the numerator: signals correctly detected.
    s.n_correct = std::min(s.n_found, s.n_detected);
    s.sensitivity = s.n_true ? static_cast<double>(s.n_found) / static_cast<double>(s.n_true) : 0.0;
    s.precision = s.n_detected ? static_cast<double>(s.n_correct) / static_cast<double>(s.n_detected) : 0.0;
    return s;
}

std::vector<IndexRange> calls_from_result(const DetectionResult& result, std::size_t n, double mu0) {
    const auto segs = segments_of(result.change_points, n);
    std::vector<IndexRange> calls;
    bool open = false;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        bool flagged = false;
        if (result.calls) {
            flagged = (*result.calls)[k] == SegmentCall::variant;
        } else {
            const double len = static_cast<double>(segs[k].length());
            flagged = std::abs(result.segment_means[k] - mu0) > 2.0 * result.sigma_hat / std::sqrt(len);
        }
        if (flagged && open) {
            calls.back().last = segs[k].last;
        } else if (flagged) {
            calls.push_back(segs[k]);
        }
        open = flagged;
    }
    return calls;
}

std::string_view to_string(Detector d) noexcept {
    return d == Detector::bwd1 ? "BWD1" : "BWD2";
}

std::string_view to_string(CutoffMode m) noexcept {
    return m == CutoffMode::cutoff1 ? "cutoff1" : "cutoff2";
}

std::string_view to_string(NoiseKind k) noexcept {
    return k == NoiseKind::normal ? "normal" : "t";
}

double upper_normal_quantile(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), alpha));
}

CutoffProvider caching_normal_cutoffs(std::size_t B, std::int64_t min_segment, std::size_t h,
                                      std::uint64_t seed) {
    struct Cache {
        std::mutex mutex;
        std::map<std::pair<std::size_t, double>, double> values;
    };
    auto cache = std::make_shared<Cache>();
    return [=](std::size_t n, double alpha) {
        std::lock_guard lock(cache->mutex);
        auto it = cache->values.find({n, alpha});
        if (it != cache->values.end()) return it->second;
        CalibrationSpec spec;
        spec.n = n;
        spec.alpha = alpha;
        spec.B = B ? B : default_replicates(alpha);
        spec.min_segment = min_segment;
        spec.h = h;
        spec.seed = seed;
        const double c = calibrate(spec);
        cache->values.emplace(std::pair{n, alpha}, c);
        return c;
    };
}

EvalReport evaluate_cell(const CellSpec& cell, const EvalSettings& settings,
                         const CutoffProvider& cutoffs) {
    if (settings.replicates == 0) throw UsageError("need at least one replicate");
    const std::size_t kappa = settings.kappa ? settings.kappa : std::max<std::size_t>(1, cell.n / 1000);
    const double fixed_cutoff =
        cell.mode == CutoffMode::cutoff1 ? cutoffs(cell.n, cell.alpha) : 0.0;
    const double z_alpha = upper_normal_quantile(cell.alpha);

    EvalReport rep;
    rep.cell = cell;
    rep.replicates = settings.replicates;
    rep.per_replicate.resize(settings.replicates);
    std::vector<char> rejected(settings.replicates, 0);

    for_each_index(settings.replicates, settings.exec, [&](std::size_t r) {
        SimSpec sim;
        sim.n = cell.n;
        sim.kappa = kappa;
        sim.L = cell.L;
        sim.delta = cell.delta;
        sim.noise = cell.noise;
        sim.min_gap = settings.min_gap;
        sim.seed = settings.seed;
        sim.stream = r;
        const SimData data = generate(sim);
        const auto y = data.seq.values();

        BwdConfig cfg;
        cfg.alpha = cell.alpha;
        cfg.min_segment = settings.min_segment;
        cfg.sigma_hat = estimate_sigma(y, SigmaMethod::window_mean, settings.h).sigma_hat;
        if (cell.mode == CutoffMode::cutoff1) {
            cfg.cutoff = fixed_cutoff;
        } else {
            CalibrationSpec cal;
            cal.n = cell.n;
            cal.alpha = cell.alpha;
            cal.B = settings.cutoff2_B ? settings.cutoff2_B : default_replicates(cell.alpha);
            cal.null_type = NullType::permute;
            cal.min_segment = settings.min_segment;
            cal.h = settings.h;
            cal.seed = mix_seed(settings.seed, r);
            cfg.cutoff = calibrate(cal, y, Execution::serial);
        }

        DetectionResult res;
        if (cell.detector == Detector::bwd2) {
            cfg.epidemic = EpidemicConfig{settings.mu0, z_alpha};
            res = run_bwd_epidemic(data.seq, cfg);
        } else {
            res = run_bwd(data.seq, cfg);
        }
        rejected[r] = res.change_points.empty() ? 0 : 1;
        const auto calls = calls_from_result(res, cell.n, settings.mu0);
        rep.per_replicate[r] = match_and_score(data.truth, calls, cell.L);
    });

    std::size_t total_true = 0, total_found = 0;
    double sen_sum = 0.0, sen_sq = 0.0;
    for (const auto& s : rep.per_replicate) {
        total_true += s.n_true;
        total_found += s.n_found;
        rep.n_detected += s.n_detected;
        rep.n_correct += s.n_correct;
        sen_sum += s.sensitivity;
        sen_sq += s.sensitivity * s.sensitivity;
    }
    const auto R = static_cast<double>(settings.replicates);
    rep.sensitivity = total_true ? static_cast<double>(total_found) / static_cast<double>(total_true) : 0.0;
    rep.precision = rep.n_detected ? static_cast<double>(rep.n_correct) / static_cast<double>(rep.n_detected) : 0.0;
    const double sen_mean = sen_sum / R;
    rep.sensitivity_se = R > 1 ? std::sqrt(std::max(0.0, sen_sq / R - sen_mean * sen_mean) / (R - 1)) : 0.0;
    rep.precision_se = rep.n_detected
                           ? std::sqrt(rep.precision * (1 - rep.precision) / static_cast<double>(rep.n_detected))
                           : 0.0;
    rep.rejection_rate =
        static_cast<double>(std::count(rejected.begin(), rejected.end(), 1)) / R;
    return rep;
}

std::vector<EvalReport> run_table(std::span<const CellSpec> cells, const EvalSettings& settings,
                                  const CutoffProvider& cutoffs) {
    std::vector<EvalReport> out;
    out.reserve(cells.size());
    for (const auto& c : cells) out.push_back(evaluate_cell(c, settings, cutoffs));
    return out;
}

namespace {

void write_keys(std::ostream& out, const EvalReport& r) {
    const auto& c = r.cell;
    out << c.n << '\t' << c.L << '\t' << text::real6(c.delta) << '\t' << to_string(c.noise.kind) << '\t'
        << (c.noise.kind == NoiseKind::student_t ? text::real6(c.noise.df) : std::string("NA")) << '\t'
        << text::real6(c.alpha) << '\t' << to_string(c.detector) << '\t' << to_string(c.mode) << '\t'
        << r.replicates;
}

constexpr std::string_view key_header = "n\tL\tdelta\tnoise\tdf\talpha\tdetector\tcutoff\treplicates";

}  // namespace

std::string format_report_table(std::span<const EvalReport> reports) {
    std::ostringstream out;
    out << key_header << "\tsensitivity\tsensitivity_se\tprecision\tprecision_se\trejection_rate\n";
    for (const auto& r : reports) {
        write_keys(out, r);
        out << '\t' << text::real6(r.sensitivity) << '\t' << text::real6(r.sensitivity_se) << '\t'
            << text::real6(r.precision) << '\t' << text::real6(r.precision_se) << '\t'
            << text::real6(r.rejection_rate) << '\n';
    }
    return out.str();
}

std::string format_report_long(std::span<const EvalReport> reports) {
    std::ostringstream out;
    out << key_header << "\tmetric\tvalue\tstd_error\n";
    for (const auto& r : reports) {
        const double R = static_cast<double>(r.replicates);
        const double rej_se = std::sqrt(r.rejection_rate * (1 - r.rejection_rate) / R);
        const std::pair<std::string_view, std::pair<double, double>> metrics[] = {
            {"sensitivity", {r.sensitivity, r.sensitivity_se}},
            {"precision", {r.precision, r.precision_se}},
            {"rejection_rate", {r.rejection_rate, rej_se}},
        };
        for (const auto& [name, vs] : metrics) {
            write_keys(out, r);
            out << '\t' << name << '\t' << text::real6(vs.first) << '\t' << text::real6(vs.second) << '\n';
        }
    }
    return out.str();
}

std::vector<PowerPoint> forward_power_demo(const ForwardDemoSpec& spec,
                                           std::span<const std::size_t> n_grid, Execution exec) {
    if (!(spec.c > 0.0 && spec.c < 1.0)) throw UsageError("c must lie in (0, 1)");
    if (!(spec.beta >= 0.0 && spec.beta <= 1.0)) throw UsageError("beta must lie in [0, 1]");
    if (spec.replicates == 0) throw UsageError("need at least one replicate");
    const double z = upper_normal_quantile(spec.alpha / 2.0);

    std::vector<PowerPoint> curve;
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const std::size_t n = n_grid[gi];
        PowerPoint pt;
        pt.n = n;
        pt.t1 = static_cast<std::size_t>(std::floor(spec.c * static_cast<double>(n)));
        if (pt.t1 < 1 || pt.t1 + 1 >= n) throw UsageError("c n leaves an empty side");
        const auto raw_L = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), spec.beta)));
        pt.L = std::clamp<std::size_t>(raw_L, 1, n - pt.t1 - 1);

        const double left_n = static_cast<double>(pt.t1);
        const double right_n = static_cast<double>(n - pt.t1);
        const double root = std::sqrt(1.0 / left_n + 1.0 / right_n);
        std::vector<char> reject(spec.replicates, 0);
        for_each_index(spec.replicates, exec, [&](std::size_t r) {
            Philox4x32 gen(mix_seed(spec.seed, n), r);
            std::normal_distribution<double> normal;
            double left_sum = 0.0, right_sum = 0.0, sigma_hat = spec.sigma;
            if (spec.full_sequences) {
                std::vector<double> y(n);
                for (std::size_t i = 0; i < n; ++i) {
                    y[i] = spec.sigma * normal(gen);
                    if (i >= pt.t1 && i < pt.t1 + pt.L) y[i] += spec.mu;
                }
                for (std::size_t i = 0; i < pt.t1; ++i) left_sum += y[i];
                for (std::size_t i = pt.t1; i < n; ++i) right_sum += y[i];
                sigma_hat = estimate_sigma(y, SigmaMethod::sample).sigma_hat;
            } else {
                // Sums of iid normals are themselves normal.
                left_sum = spec.sigma * std::sqrt(left_n) * normal(gen);
                right_sum = static_cast<double>(pt.L) * spec.mu + spec.sigma * std::sqrt(right_n) * normal(gen);
            }
            const double diff = left_sum / left_n - right_sum / right_n;
            reject[r] = std::abs(diff) / (sigma_hat * root) > z ? 1 : 0;
        });
        const auto R = static_cast<double>(spec.replicates);
        pt.power = static_cast<double>(std::count(reject.begin(), reject.end(), 1)) / R;
        pt.standard_error = std::sqrt(pt.power * (1 - pt.power) / R);
        curve.push_back(pt);
    }
    return curve;
}

}  // namespace bwd
