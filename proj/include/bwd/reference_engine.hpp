#pragma once

// Quadratic-time reference for the backward procedure: every iteration
// recomputes all adjacent merge costs and scans for the minimum. Kept as an
// independent check on the ordered-index engine and as a benchmark baseline.
// Plain (non-epidemic) mode only.

#include <cstdint>
#include <span>

#include "bwd/engine.hpp"
#include "bwd/model.hpp"

namespace bwd::reference {

DetectionResult run_bwd(const Sequence& seq, const BwdConfig& config);

double full_merge_max_statistic(std::span<const double> values, double sigma_hat,
                                std::int64_t min_segment);

}  // namespace bwd::reference
