#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <unistd.h>

#include "bwd/calibration.hpp"
#include "bwd/cli.hpp"
#include "bwd/engine.hpp"
#include "bwd/io.hpp"
#include "bwd/preprocess.hpp"
#include "bwd/text.hpp"
#include "oracles.hpp"

using namespace bwd;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("bwd_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string write_values(const TempDir& dir, const std::string& name, const std::vector<double>& y) {
    std::vector<Sequence> seqs{Sequence(y)};
    const auto path = dir.file(name);
    text::write_file(path, format_input(seqs));
    return path;
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(invoke({}).code == cli::usage);
    CHECK(invoke({"frobnicate"}).code == cli::usage);
    CHECK(invoke({"--help"}).code == cli::ok);
    CHECK(invoke({"detect", "--help"}).code == cli::ok);
    TempDir dir;
    const auto in = write_values(dir, "y.txt", oracle::normal_draws(50, 1));
    const auto r = invoke({"detect", "--input", in});
    CHECK(r.code == cli::usage);
    CHECK(r.err.find("--cutoff") != std::string::npos);
    CHECK(invoke({"detect", "--input", in, "--cutoff", "3", "--calibrate"}).code == cli::usage);
    CHECK(invoke({"calibrate", "--n", "100", "--null", "permute", "--B", "100"}).code == cli::usage);
}

TEST_CASE("data errors and zero variance") {
    TempDir dir;
    text::write_file(dir.file("bad.txt"), "1\n2\nabc\n");
    const auto bad = invoke({"detect", "--input", dir.file("bad.txt"), "--cutoff", "3"});
    CHECK(bad.code == cli::data_error);
    CHECK(bad.err.find("line 3") != std::string::npos);

    const auto flat = write_values(dir, "flat.txt", std::vector<double>(100, 2.0));
    const auto z = invoke({"detect", "--input", flat, "--cutoff", "3"});
    CHECK(z.code == cli::degenerate);
    CHECK(z.err.find("zero variance") != std::string::npos);

    const auto in = write_values(dir, "y.txt", oracle::normal_draws(80, 2));
    CutoffTable t;
    t.entries.push_back({100, 0.05, NullType::normal, 1, 4.0, 2000, 1});
    write_cutoff_table(dir.file("table.tsv"), t);
    const auto miss = invoke({"detect", "--input", in, "--cutoff-table", dir.file("table.tsv")});
    CHECK(miss.code == cli::data_error);
    CHECK(miss.err.find("n=80") != std::string::npos);
    CHECK(miss.err.find("alpha=0.05") != std::string::npos);
}

TEST_CASE("detect matches the library") {
    TempDir dir;
    auto y = oracle::normal_draws(500, 3);
    for (std::size_t i = 200; i < 210; ++i) y[i] += 3.0;
    const auto in = write_values(dir, "y.txt", y);
    const auto r = invoke({"detect", "--input", in, "--cutoff", "4.2"});
    REQUIRE(r.code == cli::ok);

    std::vector<std::int64_t> pos(y.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<std::int64_t>(i + 1);
    const Sequence with_pos(y, pos, "seq");
    BwdConfig cfg;
    cfg.cutoff = 4.2;
    cfg.sigma_hat = estimate_sigma(y, SigmaMethod::window_mean).sigma_hat;
    CHECK(r.out == format_segments(segment_records(with_pos, run_bwd(with_pos, cfg))));
    CHECK(format_segments(parse_segments(r.out)) == r.out);
}

TEST_CASE("detect with on-the-fly calibration equals a table lookup") {
    TempDir dir;
    const auto y = oracle::normal_draws(150, 4);
    const auto in = write_values(dir, "y.txt", y);
    const auto cal = invoke({"calibrate", "--n", "150", "--alpha", "0.05", "--B", "200", "--seed", "5",
                             "--output", dir.file("t.tsv")});
    REQUIRE(cal.code == cli::ok);
    const auto a = invoke({"detect", "--input", in, "--calibrate", "--B", "200", "--seed", "5"});
    const auto b = invoke({"detect", "--input", in, "--cutoff-table", dir.file("t.tsv")});
    REQUIRE(a.code == cli::ok);
    REQUIRE(b.code == cli::ok);
    CHECK(a.out == b.out);
}

TEST_CASE("epidemic detection writes calls and z scores") {
    TempDir dir;
    auto y = oracle::normal_draws(400, 5);
    for (std::size_t i = 100; i < 110; ++i) y[i] += 4.0;
    const auto in = write_values(dir, "y.txt", y);
    const auto r = invoke({"detect", "--input", in, "--cutoff", "4.3", "--epidemic-mu0", "0", "--cnv-output",
                           dir.file("cnv.tsv"), "--output", dir.file("seg.tsv")});
    REQUIRE(r.code == cli::ok);
    const auto segs = parse_segments(text::read_file(dir.file("seg.tsv")));
    for (const auto& s : segs) {
        CHECK(s.call);
        CHECK(s.z_vs_baseline);
    }
    const auto cnv = parse_segments(text::read_file(dir.file("cnv.tsv")));
    REQUIRE(cnv.size() >= 1);
    for (const auto& c : cnv) CHECK(c.call == SegmentCall::variant);
}

TEST_CASE("planted segment becomes a single cnv call") {
    TempDir dir;
    CalibrationSpec spec;
    spec.n = 1000;
    spec.seed = 3;
    const double cutoff = calibrate(spec);
    int exact = 0;
    const int seeds = 60;
    for (int s = 0; s < seeds; ++s) {
        auto y = oracle::normal_draws(1000, 300 + static_cast<unsigned>(s));
        for (std::size_t i = 500; i < 510; ++i) y[i] += 3.0;
        const auto in = write_values(dir, "y.txt", y);
        const auto r = invoke({"detect", "--input", in, "--cutoff", text::real6(cutoff), "--output",
                               dir.file("seg.tsv"), "--cnv-output", dir.file("cnv.tsv")});
        REQUIRE(r.code == cli::ok);
        const auto cnv = parse_segments(text::read_file(dir.file("cnv.tsv")));
        exact += cnv.size() == 1 && cnv[0].start_index <= 510 && cnv[0].end_index >= 501;
    }
    CHECK(exact >= 55);
}

TEST_CASE("binning reports bin indices and first-in-bin positions") {
    TempDir dir;
    std::ostringstream body;
    for (int i = 0; i < 5000; ++i) body << (i >= 2500 && i < 2600 ? 5.0 : 0.0) + 0.1 * (i % 7) << '\t' << 10 * i + 3 << '\n';
    text::write_file(dir.file("rd.txt"), body.str());
    const auto r = invoke({"detect", "--input", dir.file("rd.txt"), "--cutoff", "4", "--bin", "100"});
    REQUIRE(r.code == cli::ok);
    const auto segs = parse_segments(r.out);
    REQUIRE(segs.size() == 3);
    CHECK(segs.back().end_index == 50);
    CHECK(segs[1].start_index == 26);
    CHECK(segs[1].end_index == 26);
    CHECK(*segs[1].start_pos == 25003);
    CHECK(*segs[1].end_pos == 25003);
}

TEST_CASE("labels keep input order") {
    TempDir dir;
    std::ostringstream body;
    const auto a = oracle::normal_draws(60, 6), b = oracle::normal_draws(40, 7);
    for (std::size_t i = 0; i < 60; ++i) body << a[i] << '\t' << i + 1 << "\tchrB\n";
    for (std::size_t i = 0; i < 40; ++i) body << b[i] << '\t' << i + 1 << "\tchrA\n";
    text::write_file(dir.file("two.txt"), body.str());
    const auto r1 = invoke({"detect", "--input", dir.file("two.txt"), "--cutoff", "3.5", "--threads", "2"});
    const auto r2 = invoke({"detect", "--input", dir.file("two.txt"), "--cutoff", "3.5", "--threads", "1"});
    REQUIRE(r1.code == cli::ok);
    CHECK(r1.out == r2.out);
    const auto segs = parse_segments(r1.out);
    CHECK(segs.front().label == "chrB");
    CHECK(segs.back().label == "chrA");
}

TEST_CASE("calibrate is deterministic and fits") {
    TempDir dir;
    const std::vector<std::string> args{"calibrate", "--n", "100:500:100", "--alpha", "0.05", "--B", "200", "--fit"};
    const auto a = invoke(args), b = invoke(args);
    REQUIRE(a.code == cli::ok);
    CHECK(a.out == b.out);
    const auto t = parse_cutoff_table(a.out);
    CHECK(t.entries.size() == 5);
    REQUIRE(t.fits.size() == 1);
    CHECK(invoke({"calibrate", "--n", "100,200", "--B", "200", "--fit"}).code == cli::usage);

    const auto in = write_values(dir, "y.txt", oracle::normal_draws(120, 8));
    const auto perm = invoke({"calibrate", "--input", in, "--null", "permute", "--B", "100"});
    REQUIRE(perm.code == cli::ok);
    CHECK(parse_cutoff_table(perm.out).entries.at(0).n == 120);
}

TEST_CASE("simulate and bench produce tables") {
    const auto s = invoke({"simulate", "--n", "1000", "--L", "10", "--delta", "2.5", "--alpha", "0.05",
                           "--replicates", "10", "--B", "200"});
    REQUIRE(s.code == cli::ok);
    CHECK(std::count(s.out.begin(), s.out.end(), '\n') == 2);
    CHECK(invoke({"simulate", "--noise", "cauchy"}).code == cli::usage);
    const auto b = invoke({"bench", "--n", "1000,2000", "--reps", "1", "--naive-n", "200"});
    REQUIRE(b.code == cli::ok);
    CHECK(b.out.find("ratio_to_previous") != std::string::npos);
    CHECK(b.out.find("\tyes\n") != std::string::npos);
    CHECK(invoke({"bench", "--n", "2000,1000"}).code == cli::usage);
}
