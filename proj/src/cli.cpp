#include "bwd/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bwd/calibration.hpp"
#include "bwd/engine.hpp"
#include "bwd/errors.hpp"
#include "bwd/evalsim.hpp"
#include "bwd/io.hpp"
#include "bwd/parallel.hpp"
#include "bwd/preprocess.hpp"
#include "bwd/reference_engine.hpp"
#include "bwd/rng.hpp"
#include "bwd/text.hpp"

namespace bwd::cli {

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto part : text::split(s, ','))
        if (!text::trim(part).empty()) out.emplace_back(text::trim(part));
    return out;
}

std::vector<double> real_list(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const auto& p : split_list(s)) {
        double v = 0.0;
        if (!text::parse_double(p, v)) throw UsageError(std::string("bad ") + what + " '" + p + "'");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
    return out;
}

/// "a,b,c" or "start:stop:step" (inclusive).
std::vector<std::size_t> size_list(const std::string& s, const char* what) {
    std::vector<std::size_t> out;
    const auto parts = text::split(s, ':');
    long long a = 0, b = 0, step = 0;
    if (parts.size() == 3) {
        if (!text::parse_int(parts[0], a) || !text::parse_int(parts[1], b) ||
            !text::parse_int(parts[2], step) || a < 1 || step < 1 || b < a)
            throw UsageError(std::string("bad ") + what + " range '" + s + "'");
        for (long long v = a; v <= b; v += step) out.push_back(static_cast<std::size_t>(v));
        return out;
    }
    for (const auto& p : split_list(s)) {
        if (!text::parse_int(p, a) || a < 1) throw UsageError(std::string("bad ") + what + " '" + p + "'");
        out.push_back(static_cast<std::size_t>(a));
    }
    if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
    return out;
}

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
    if (path.empty() || path == "-")
        out << contents;
    else
        text::write_file(path, contents);
}

struct DetectOptions {
    std::string input;
    std::string output = "-";
    std::string cnv_output;
    std::size_t cnv_min = 2;
    std::size_t cnv_max = 200;
    double alpha = 0.05;
    std::optional<double> cutoff;
    std::string cutoff_table;
    bool calibrate = false;
    std::string null_type = "normal";
    std::size_t B = 0;
    std::size_t h = default_window_half_width;
    std::int64_t min_seg = 1;
    std::string sigma_method = "window";
    std::optional<double> mu0;
    std::optional<double> z_alpha;
    std::size_t bin = 0;
    std::uint64_t seed = 1;
    int threads = 0;
};

int cmd_detect(const DetectOptions& o, std::ostream& out) {
    set_thread_count(o.threads);
    const int sources = (o.cutoff ? 1 : 0) + (o.cutoff_table.empty() ? 0 : 1) + (o.calibrate ? 1 : 0);
    if (sources != 1)
        throw UsageError("supply exactly one of --cutoff, --cutoff-table, --calibrate");
    if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
    const NullType null_type = parse_null_type(o.null_type);
    const SigmaMethod method = parse_sigma_method(o.sigma_method);
    std::optional<CutoffTable> table;
    if (!o.cutoff_table.empty()) table = read_cutoff_table(o.cutoff_table);

    auto sequences = read_input(o.input);
    if (o.bin > 0)
        for (auto& s : sequences) s = local_median_bin(s, o.bin);

    const Execution inner = sequences.size() > 1 ? Execution::serial : Execution::parallel;
    std::vector<std::vector<SegmentRecord>> per_label(sequences.size());
    for_each_index(sequences.size(), Execution::parallel, [&](std::size_t i) {
        const Sequence& seq = sequences[i];
        const std::size_t n = seq.size();
        BwdConfig cfg;
        cfg.alpha = o.alpha;
        cfg.min_segment = o.min_seg;
        cfg.sigma_hat = estimate_sigma(seq.values(), method, o.h).sigma_hat;
        if (o.cutoff) {
            cfg.cutoff = *o.cutoff;
        } else if (table) {
            if (auto c = table->lookup(n, o.alpha, null_type, o.min_seg)) {
                cfg.cutoff = *c;
            } else if (const auto* fit = table->find_fit(o.alpha, null_type, o.min_seg)) {
                cfg.cutoff = predict_cutoff(*fit, n);
            } else {
                throw DataError("missing cutoff for (n=" + std::to_string(n) + ", alpha=" +
                                text::real6(o.alpha) + ", null=" + std::string(to_string(null_type)) +
                                ", M=" + std::to_string(o.min_seg) + ") in " + o.cutoff_table);
            }
        } else {
            if (n < 2) throw DataError("sequence '" + seq.label() + "' too short to calibrate");
            CalibrationSpec spec;
            spec.n = n;
            spec.alpha = o.alpha;
            spec.B = o.B ? o.B : default_replicates(o.alpha);
            spec.null_type = null_type;
            spec.min_segment = o.min_seg;
            spec.h = o.h;
            spec.seed = o.seed;
            cfg.cutoff = calibrate(spec, seq.values(), inner);
        }

        DetectionResult res;
        if (o.mu0) {
            cfg.epidemic = EpidemicConfig{*o.mu0, o.z_alpha ? *o.z_alpha : upper_normal_quantile(o.alpha)};
            res = run_bwd_epidemic(seq, cfg);
        } else {
            res = run_bwd(seq, cfg);
        }
        per_label[i] = segment_records(seq, res, o.mu0);
    });

    std::vector<SegmentRecord> all;
    for (auto& v : per_label) all.insert(all.end(), v.begin(), v.end());
    emit(o.output, format_segments(all), out);
    if (!o.cnv_output.empty()) {
        if (o.cnv_min > o.cnv_max) throw UsageError("--cnv-min exceeds --cnv-max");
        emit(o.cnv_output, format_segments(cnv_calls(all, o.cnv_min, o.cnv_max)), out);
    }
    return ok;
}

struct CalibrateOptions {
    std::string n;
    std::string alpha = "0.05";
    std::string null_type = "normal";
    std::size_t B = 0;
    std::uint64_t seed = 1;
    std::int64_t min_seg = 1;
    std::size_t h = default_window_half_width;
    std::string input;
    std::string label;
    bool fit = false;
    std::string output = "-";
    int threads = 0;
};

int cmd_calibrate(const CalibrateOptions& o, std::ostream& out) {
    set_thread_count(o.threads);
    const NullType null_type = parse_null_type(o.null_type);
    std::vector<double> data;
    if (!o.input.empty()) {
        const auto seqs = read_input(o.input);
        const Sequence* chosen = &seqs.front();
        if (!o.label.empty()) {
            auto it = std::find_if(seqs.begin(), seqs.end(), [&](const Sequence& s) { return s.label() == o.label; });
            if (it == seqs.end()) throw UsageError("no sequence labelled '" + o.label + "'");
            chosen = &*it;
        }
        data.assign(chosen->values().begin(), chosen->values().end());
    }
    if (null_type != NullType::normal && data.empty())
        throw UsageError("--null " + o.null_type + " requires --input");
    std::vector<std::size_t> ns;
    if (!o.n.empty()) ns = size_list(o.n, "--n");
    else if (!data.empty()) ns = {data.size()};
    else throw UsageError("supply --n or --input");
    const auto alphas = real_list(o.alpha, "--alpha");

    CutoffTable table;
    for (double alpha : alphas) {
        for (std::size_t n : ns) {
            CalibrationSpec spec;
            spec.n = n;
            spec.alpha = alpha;
            spec.B = o.B ? o.B : default_replicates(alpha);
            spec.null_type = null_type;
            spec.min_segment = o.min_seg;
            spec.h = o.h;
            spec.seed = o.seed;
            const double c = calibrate(spec, data);
            table.entries.push_back({n, alpha, null_type, o.min_seg, c, spec.B, o.seed});
        }
        if (o.fit) table.fits.push_back(fit_loglinear(table, alpha, null_type, o.min_seg));
    }
    emit(o.output, format_cutoff_table(table), out);
    return ok;
}

struct SimulateOptions {
    std::string n = "1000";
    std::string L = "5,10";
    std::string delta = "1.5,2,2.5";
    std::string noise = "normal";
    std::string df = "10";
    std::string alpha = "0.01,0.05";
    std::string detector = "bwd1";
    std::string cutoff_mode = "cutoff1";
    std::size_t replicates = 500;
    std::uint64_t seed = 1;
    std::size_t B = 0;
    std::size_t cutoff2_B = 0;
    std::int64_t min_seg = 1;
    std::size_t h = default_window_half_width;
    std::string cutoff_table;
    std::string output = "-";
    std::string long_output;
    int threads = 0;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
    set_thread_count(o.threads);
    const auto ns = size_list(o.n, "--n");
    const auto Ls = size_list(o.L, "--L");
    const auto deltas = real_list(o.delta, "--delta");
    const auto alphas = real_list(o.alpha, "--alpha");
    std::vector<Noise> noises;
    if (o.noise == "normal") {
        noises.push_back(Noise{});
    } else if (o.noise == "t") {
        for (double df : real_list(o.df, "--df")) noises.push_back(Noise{NoiseKind::student_t, 1.0, df});
    } else {
        throw UsageError("--noise must be normal or t");
    }
    std::vector<Detector> detectors;
    for (const auto& d : split_list(o.detector)) {
        if (d == "bwd1") detectors.push_back(Detector::bwd1);
        else if (d == "bwd2") detectors.push_back(Detector::bwd2);
        else throw UsageError("unknown detector '" + d + "'");
    }
    std::vector<CutoffMode> modes;
    for (const auto& m : split_list(o.cutoff_mode)) {
        if (m == "cutoff1") modes.push_back(CutoffMode::cutoff1);
        else if (m == "cutoff2") modes.push_back(CutoffMode::cutoff2);
        else throw UsageError("unknown cutoff mode '" + m + "'");
    }

    std::vector<CellSpec> cells;
    for (auto n : ns)
        for (const auto& noise : noises)
            for (auto L : Ls)
                for (double delta : deltas)
                    for (double alpha : alphas)
                        for (auto det : detectors)
                            for (auto mode : modes)
                                cells.push_back({n, L, delta, noise, alpha, det, mode});

    EvalSettings settings;
    settings.replicates = o.replicates;
    settings.seed = o.seed;
    settings.h = o.h;
    settings.min_segment = o.min_seg;
    settings.cutoff2_B = o.cutoff2_B;

    CutoffProvider provider = caching_normal_cutoffs(o.B, o.min_seg, o.h, o.seed);
    if (!o.cutoff_table.empty()) {
        auto table = std::make_shared<CutoffTable>(read_cutoff_table(o.cutoff_table));
        provider = [table, fallback = provider, M = o.min_seg](std::size_t n, double alpha) {
            if (auto c = table->lookup(n, alpha, NullType::normal, M)) return *c;
            if (const auto* f = table->find_fit(alpha, NullType::normal, M)) return predict_cutoff(*f, n);
            return fallback(n, alpha);
        };
    }
    const auto reports = run_table(cells, settings, provider);
    emit(o.output, format_report_table(reports), out);
    if (!o.long_output.empty()) emit(o.long_output, format_report_long(reports), out);
    return ok;
}

struct BenchOptions {
    std::string n = "100000,200000,400000";
    std::uint64_t seed = 1;
    std::size_t reps = 3;
    std::size_t naive_n = 0;
    std::int64_t min_seg = 1;
};

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed) {
    Philox4x32 gen(seed, n);
    std::normal_distribution<double> normal;
    std::vector<double> y(n);
    for (auto& v : y) v = normal(gen);
    return y;
}

template <class F>
double best_seconds(std::size_t reps, F&& f) {
    double best = 1e300;
    for (std::size_t r = 0; r < std::max<std::size_t>(reps, 1); ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

int cmd_bench(const BenchOptions& o, std::ostream& out) {
    const auto ns = size_list(o.n, "--n");
    if (!std::is_sorted(ns.begin(), ns.end())) throw UsageError("--n grid must be ascending");
    out << "n\tseconds\tratio_to_previous\tmax_statistic\n";
    double prev = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const auto y = normal_draws(ns[i], o.seed);
        double u = 0.0;
        const double secs = best_seconds(o.reps, [&] { u = full_merge_max_statistic(y, 1.0, o.min_seg); });
        out << ns[i] << '\t' << text::real6(secs) << '\t' << (i ? text::real6(secs / prev) : std::string("NA"))
            << '\t' << text::real6(u) << '\n';
        prev = secs;
    }
    if (o.naive_n >= 2) {
        const auto y = normal_draws(o.naive_n, o.seed);
        double fast_u = 0.0, naive_u = 0.0;
        const double fast = best_seconds(o.reps, [&] { fast_u = full_merge_max_statistic(y, 1.0, o.min_seg); });
        const double naive = best_seconds(1, [&] { naive_u = reference::full_merge_max_statistic(y, 1.0, o.min_seg); });
        out << "naive_n\tfast_seconds\tnaive_seconds\tspeedup\tidentical\n"
            << o.naive_n << '\t' << text::real6(fast) << '\t' << text::real6(naive) << '\t'
            << text::real6(naive / fast) << '\t' << (fast_u == naive_u ? "yes" : "no") << '\n';
    }
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Backward detection of mean change points"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    DetectOptions det;
    auto* d = app.add_subcommand("detect", "Segment sequences and write segment records");
    d->add_option("--input", det.input, "Input observations")->required();
    d->add_option("--output", det.output, "Segment file ('-' for stdout)");
    d->add_option("--cnv-output", det.cnv_output, "Also write short segments (CNV calls) here");
    d->add_option("--cnv-min", det.cnv_min, "Shortest CNV call, inclusive");
    d->add_option("--cnv-max", det.cnv_max, "Longest CNV call, inclusive");
    d->add_option("--alpha", det.alpha, "Familywise error rate");
    d->add_option("--cutoff", det.cutoff, "Stop threshold on the merge statistic");
    d->add_option("--cutoff-table", det.cutoff_table, "Calibrated cutoff table");
    d->add_flag("--calibrate", det.calibrate, "Calibrate a cutoff per sequence");
    d->add_option("--null", det.null_type, "Null for calibration: normal|permute|bootstrap");
    d->add_option("--B", det.B, "Calibration replicates (default by alpha)");
    d->add_option("--h", det.h, "Window half-width for the noise estimate");
    d->add_option("--min-seg", det.min_seg, "Small-segment guard M");
    d->add_option("--sigma-method", det.sigma_method, "window|mad|sample");
    d->add_option("--epidemic-mu0", det.mu0, "Known baseline mean; enables epidemic mode");
    d->add_option("--z-alpha", det.z_alpha, "Baseline test threshold (default: upper alpha normal quantile)");
    d->add_option("--bin", det.bin, "Local-median bin size");
    d->add_option("--seed", det.seed, "Calibration seed");
    d->add_option("--threads", det.threads, "OpenMP threads (0 = runtime default)");

    CalibrateOptions cal;
    auto* c = app.add_subcommand("calibrate", "Monte Carlo cutoff calibration");
    c->add_option("--n", cal.n, "Sequence lengths: list or start:stop:step");
    c->add_option("--alpha", cal.alpha, "Comma-separated levels");
    c->add_option("--null", cal.null_type, "normal|permute|bootstrap");
    c->add_option("--B", cal.B, "Replicates (default by alpha)");
    c->add_option("--seed", cal.seed, "Seed");
    c->add_option("--min-seg", cal.min_seg, "Small-segment guard M");
    c->add_option("--h", cal.h, "Window half-width");
    c->add_option("--input", cal.input, "Data whose residuals feed the permute/bootstrap null");
    c->add_option("--label", cal.label, "Which labelled sequence of --input to use");
    c->add_flag("--fit", cal.fit, "Append log-linear fits");
    c->add_option("--output", cal.output, "Table file ('-' for stdout)");
    c->add_option("--threads", cal.threads, "OpenMP threads");

    SimulateOptions sim;
    auto* s = app.add_subcommand("simulate", "Sensitivity/precision tables on synthetic data");
    s->add_option("--n", sim.n, "Sequence lengths");
    s->add_option("--L", sim.L, "Signal lengths");
    s->add_option("--delta", sim.delta, "Signal means");
    s->add_option("--noise", sim.noise, "normal|t");
    s->add_option("--df", sim.df, "t degrees of freedom");
    s->add_option("--alpha", sim.alpha, "Levels");
    s->add_option("--detector", sim.detector, "bwd1,bwd2");
    s->add_option("--cutoff-mode", sim.cutoff_mode, "cutoff1,cutoff2");
    s->add_option("--replicates", sim.replicates, "Replicates per cell");
    s->add_option("--seed", sim.seed, "Seed");
    s->add_option("--B", sim.B, "Normal-null calibration replicates");
    s->add_option("--cutoff2-B", sim.cutoff2_B, "Per-replicate permutation replicates");
    s->add_option("--min-seg", sim.min_seg, "Small-segment guard M");
    s->add_option("--h", sim.h, "Window half-width");
    s->add_option("--cutoff-table", sim.cutoff_table, "Precomputed normal-null cutoffs");
    s->add_option("--output", sim.output, "Report table ('-' for stdout)");
    s->add_option("--long", sim.long_output, "Long-format report");
    s->add_option("--threads", sim.threads, "OpenMP threads");

    BenchOptions bench;
    auto* b = app.add_subcommand("bench", "Time full merges across n");
    b->add_option("--n", bench.n, "Ascending sequence lengths");
    b->add_option("--seed", bench.seed, "Seed");
    b->add_option("--reps", bench.reps, "Timing repetitions (best is kept)");
    b->add_option("--naive-n", bench.naive_n, "Also compare against the quadratic engine at this n");
    b->add_option("--min-seg", bench.min_seg, "Small-segment guard M");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        if (*d) return cmd_detect(det, out);
        if (*c) return cmd_calibrate(cal, out);
        if (*s) return cmd_simulate(sim, out);
        if (*b) return cmd_bench(bench, out);
    } catch (const UsageError& e) {
        err << "bwd: usage error: " << e.what() << '\n';
        return usage;
    } catch (const ZeroVarianceError& e) {
        err << "bwd: " << e.what() << '\n';
        return degenerate;
    } catch (const DataError& e) {
        err << "bwd: data error: " << e.what() << '\n';
        return data_error;
    }
    return usage;
}

}  // namespace bwd::cli
