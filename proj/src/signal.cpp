#include "sparseff/signal.hpp"

#include <algorithm>

namespace sparseff {

std::vector<double> moving_average(std::span<const double> signal, int width) {
    const auto n = static_cast<long>(signal.size());
    std::vector<double> out(signal.size(), 0.0);
    if (n == 0) return out;
    const long half = width / 2;
    for (long t = 0; t < n; ++t) {
        double sum = 0.0;
        for (long k = -half; k <= half; ++k) {
            sum += signal[static_cast<std::size_t>(std::clamp(t + k, 0L, n - 1))];
        }
        out[static_cast<std::size_t>(t)] = sum / static_cast<double>(2 * half + 1);
    }
    return out;
}

std::vector<double> finite_difference(std::span<const double> signal) {
    const std::size_t n = signal.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    out[0] = signal[1] - signal[0];
    out[n - 1] = signal[n - 1] - signal[n - 2];
    for (std::size_t t = 1; t + 1 < n; ++t) out[t] = 0.5 * (signal[t + 1] - signal[t - 1]);
    return out;
}

}  // namespace sparseff
