#pragma once

#include <vector>

namespace pdmkws::fir {

double hamming(int n, int length);

/// Kaiser window sample, shape parameter `beta`.
double kaiser(int n, int length, double beta);

/// Linear-phase lowpass, cutoff in cycles/sample (0 < cutoff < 0.5), Hamming
/// window, normalized to unit DC gain.
std::vector<double> lowpass_hamming(int taps, double cutoff);

}  // namespace pdmkws::fir
