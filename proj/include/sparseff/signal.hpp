#pragma once

#include <span>
#include <vector>

namespace sparseff {

/// Centered moving average of odd width; samples outside the signal take
/// the value of the nearest endpoint (edge replication).
std::vector<double> moving_average(std::span<const double> signal, int width);

/// Central differences in the interior, one-sided at the two ends.
std::vector<double> finite_difference(std::span<const double> signal);

}  // namespace sparseff
