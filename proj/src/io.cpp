#include "bwd/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "bwd/errors.hpp"
#include "bwd/text.hpp"

namespace bwd {

namespace text {

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, long long& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace text

namespace {

enum class Delim { tab, comma, space };

std::vector<std::string_view> split_fields(std::string_view line, Delim d) {
    if (d == Delim::tab) return text::split(line, '\t');
    if (d == Delim::comma) return text::split(line, ',');
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (i == line.size()) break;
        const std::size_t j = line.find_first_of(" \t", i);
        const std::size_t end = j == std::string_view::npos ? line.size() : j;
        out.push_back(line.substr(i, end - i));
        i = end;
    }
    return out;
}

[[noreturn]] void input_error(std::size_t line, const std::string& what) {
    throw DataError("input line " + std::to_string(line) + ": " + what);
}

struct Builder {
    std::vector<double> values;
    std::vector<std::int64_t> positions;
    std::size_t first_line = 0;
};

}  // namespace

std::vector<Sequence> parse_input(std::istream& in) {
    std::vector<std::string> order;
    std::map<std::string, Builder> builders;
    std::optional<Delim> delim;
    std::size_t columns = 0;
    std::size_t lineno = 0;
    bool any_data = false;
    std::string raw;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty() || line.front() == '#') continue;
        if (!delim) {
            delim = line.find('\t') != std::string_view::npos ? Delim::tab
                    : line.find(',') != std::string_view::npos ? Delim::comma
                                                                : Delim::space;
        }
        const auto f = split_fields(line, *delim);
        if (!any_data && text::trim(f[0]) == "value") {  // header row
            any_data = true;
            columns = f.size();
            if (columns > 3) input_error(lineno, "expected at most 3 columns (value, position, label)");
            continue;
        }
        any_data = true;
        if (columns == 0) {
            columns = f.size();
            if (columns > 3) input_error(lineno, "expected at most 3 columns (value, position, label)");
        }
        if (f.size() != columns)
            input_error(lineno, "expected " + std::to_string(columns) + " columns, found " +
                                    std::to_string(f.size()));
        double v = 0.0;
        if (!text::parse_double(f[0], v))
            input_error(lineno, "missing or non-numeric value '" + std::string(f[0]) + "'");
        std::string label = columns >= 3 ? std::string(text::trim(f[2])) : std::string("seq");
        if (label.empty()) input_error(lineno, "empty label");
        auto [it, inserted] = builders.try_emplace(label);
        if (inserted) {
            order.push_back(label);
            it->second.first_line = lineno;
        }
        Builder& b = it->second;
        b.values.push_back(v);
        if (columns >= 2) {
            long long p = 0;
            if (!text::parse_int(f[1], p))
                input_error(lineno, "missing or non-integer position '" + std::string(f[1]) + "'");
            if (!b.positions.empty() && p <= b.positions.back())
                input_error(lineno, "positions for '" + label + "' are not strictly increasing");
            b.positions.push_back(p);
        }
    }
    if (order.empty()) throw DataError("input has no observations");
    std::vector<Sequence> out;
    out.reserve(order.size());
    for (const auto& label : order) {
        Builder& b = builders[label];
        std::optional<std::vector<std::int64_t>> pos;
        if (columns >= 2) pos = std::move(b.positions);
        out.emplace_back(std::move(b.values), std::move(pos), label);
    }
    return out;
}

std::vector<Sequence> parse_input(std::string_view contents) {
    std::istringstream in{std::string(contents)};
    return parse_input(in);
}

std::vector<Sequence> read_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_input(in);
}

std::string format_input(std::span<const Sequence> sequences) {
    std::ostringstream out;
    for (const auto& s : sequences) {
        const auto y = s.values();
        for (std::size_t i = 0; i < y.size(); ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", y[i]);
            out << buf << '\t';
            out << (s.positions() ? (*s.positions())[i] : static_cast<std::int64_t>(i + 1));
            out << '\t' << (s.label().empty() ? "seq" : s.label()) << '\n';
        }
    }
    return out.str();
}

std::vector<SegmentRecord> segment_records(const Sequence& seq, const DetectionResult& result,
                                           std::optional<double> mu0) {
    const auto segs = segments_of(result.change_points, seq.size());
    std::vector<SegmentRecord> out;
    out.reserve(segs.size());
    const auto y = seq.values();
    for (std::size_t k = 0; k < segs.size(); ++k) {
        SegmentRecord r;
        r.label = seq.label().empty() ? "seq" : seq.label();
        r.start_index = segs[k].first;
        r.end_index = segs[k].last;
        if (seq.positions()) {
            r.start_pos = (*seq.positions())[segs[k].first - 1];
            r.end_pos = (*seq.positions())[segs[k].last - 1];
        }
        r.length = segs[k].length();
        r.mean = result.segment_means[k];
        if (mu0) {
            const double m = GroupStats::of(y.subspan(segs[k].first - 1, segs[k].length())).mean();
            r.z_vs_baseline = std::sqrt(static_cast<double>(r.length)) * std::abs(m - *mu0) / result.sigma_hat;
        }
        if (result.calls) r.call = (*result.calls)[k];
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SegmentRecord> cnv_calls(std::span<const SegmentRecord> records, std::size_t min_length,
                                     std::size_t max_length) {
    std::vector<SegmentRecord> out;
    for (const auto& r : records) {
        if (r.length < min_length || r.length > max_length) continue;
        if (r.call && *r.call != SegmentCall::variant) continue;
        out.push_back(r);
    }
    return out;
}

namespace {

constexpr std::string_view segment_header =
    "label\tstart_index\tend_index\tstart_pos\tend_pos\tlength\tmean\tz_vs_baseline\tcall";

std::string opt_int(const std::optional<std::int64_t>& v) {
    return v ? std::to_string(*v) : std::string("NA");
}

[[noreturn]] void segment_error(std::size_t line, const std::string& what) {
    throw DataError("segment file line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_segments(std::span<const SegmentRecord> records) {
    std::ostringstream out;
    out << segment_header << '\n';
    for (const auto& r : records) {
        out << r.label << '\t' << r.start_index << '\t' << r.end_index << '\t' << opt_int(r.start_pos)
            << '\t' << opt_int(r.end_pos) << '\t' << r.length << '\t' << text::real6(r.mean) << '\t'
            << (r.z_vs_baseline ? text::real6(*r.z_vs_baseline) : std::string("NA")) << '\t'
            << (r.call ? (*r.call == SegmentCall::baseline ? "baseline" : "variant") : "NA") << '\n';
    }
    return out.str();
}

std::vector<SegmentRecord> parse_segments(std::string_view contents) {
    std::vector<SegmentRecord> out;
    std::istringstream in{std::string(contents)};
    std::string raw;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!header) {
            if (line != segment_header) segment_error(lineno, "unexpected header");
            header = true;
            continue;
        }
        const auto f = text::split(line, '\t');
        if (f.size() != 9) segment_error(lineno, "expected 9 columns");
        SegmentRecord r;
        r.label = std::string(f[0]);
        long long v = 0;
        auto need_int = [&](std::string_view s) {
            if (!text::parse_int(s, v) || v < 0) segment_error(lineno, "bad integer '" + std::string(s) + "'");
            return static_cast<std::size_t>(v);
        };
        auto opt_pos = [&](std::string_view s) -> std::optional<std::int64_t> {
            if (s == "NA") return std::nullopt;
            if (!text::parse_int(s, v)) segment_error(lineno, "bad position '" + std::string(s) + "'");
            return v;
        };
        r.start_index = need_int(f[1]);
        r.end_index = need_int(f[2]);
        r.start_pos = opt_pos(f[3]);
        r.end_pos = opt_pos(f[4]);
        r.length = need_int(f[5]);
        if (!text::parse_double(f[6], r.mean)) segment_error(lineno, "bad mean");
        if (f[7] != "NA") {
            double z = 0.0;
            if (!text::parse_double(f[7], z)) segment_error(lineno, "bad z");
            r.z_vs_baseline = z;
        }
        if (f[8] == "baseline") r.call = SegmentCall::baseline;
        else if (f[8] == "variant") r.call = SegmentCall::variant;
        else if (f[8] != "NA") segment_error(lineno, "bad call '" + std::string(f[8]) + "'");
        if (r.start_index > r.end_index || r.length != r.end_index - r.start_index + 1)
            segment_error(lineno, "inconsistent segment extent");
        out.push_back(std::move(r));
    }
    if (!header) throw DataError("segment file has no header");
    return out;
}

}  // namespace bwd
