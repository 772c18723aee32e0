#pragma once

// File formats for the command-line tool.
//
// Input: one observation per row, columns `value [position [label]]`,
// separated by tabs, commas, or runs of spaces (fixed by the first data
// row). Lines starting with '#' are comments; an optional header row
// starts with the word "value". Rows with the same label form one
// sequence; labels keep their order of first appearance.
//
// Segment output: tab-separated, one row per segment, columns
//   label start_index end_index start_pos end_pos length mean z_vs_baseline call
// with "NA" for absent optional fields and reals at 6 significant digits.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bwd/model.hpp"

namespace bwd {

std::vector<Sequence> parse_input(std::istream& in);
std::vector<Sequence> parse_input(std::string_view contents);
std::vector<Sequence> read_input(const std::string& path);

/// Writes sequences in the input format (value, position, label).
std::string format_input(std::span<const Sequence> sequences);

struct SegmentRecord {
    std::string label;
    std::size_t start_index = 0;  ///< 1-based, inclusive
    std::size_t end_index = 0;
    std::optional<std::int64_t> start_pos;
    std::optional<std::int64_t> end_pos;
    std::size_t length = 0;
    double mean = 0.0;
    std::optional<double> z_vs_baseline;
    std::optional<SegmentCall> call;

    friend bool operator==(const SegmentRecord&, const SegmentRecord&) = default;
};

/// One record per detected segment. `mu0` (epidemic runs) adds the
/// baseline z-score sqrt(len) |segment mean - mu0| / sigma_hat.
std::vector<SegmentRecord> segment_records(const Sequence& seq, const DetectionResult& result,
                                           std::optional<double> mu0 = std::nullopt);

/// Records whose length lies in [min_length, max_length] (inclusive) and,
/// when calls are present, are labelled variant.
std::vector<SegmentRecord> cnv_calls(std::span<const SegmentRecord> records, std::size_t min_length,
                                     std::size_t max_length);

std::string format_segments(std::span<const SegmentRecord> records);
std::vector<SegmentRecord> parse_segments(std::string_view contents);

}  // namespace bwd
