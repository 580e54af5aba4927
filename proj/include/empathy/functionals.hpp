#pragma once

#include <span>
#include <string>
#include <vector>

namespace empathy {

/// Names of the statistical functionals in output order.
const std::vector<std::string>& functional_names();

struct FunctionalResult {
  std::vector<double> values;  // aligned with functional_names()
  bool degenerate = false;     // fewer than two frames: moments are reported as 0
};

/// Linear interpolation between closest ranks over the sorted values
/// (position (n-1)p).
double percentile(std::span<const double> sorted, double p);

/// Summarises one LLD track sampled at `rate_fps`.
FunctionalResult compute_functionals(std::span<const double> track, double rate_fps = 100.0);

}  // namespace empathy
