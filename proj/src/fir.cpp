#include "pdmkws/fir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pdmkws/errors.hpp"

namespace pdmkws::fir {

double hamming(int n, int length) {
  if (length == 1) return 1.0;
  return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
}

double kaiser(int n, int length, double beta) {
  if (length == 1) return 1.0;
  const double r = 2.0 * n / (length - 1) - 1.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
         std::cyl_bessel_i(0.0, beta);
}

std::vector<double> lowpass_hamming(int taps, double cutoff) {
  if (taps < 1) throw ArgumentError("lowpass_hamming: taps must be >= 1");
  if (!(cutoff > 0.0 && cutoff < 0.5)) throw ArgumentError("lowpass_hamming: cutoff must be in (0, 0.5)");
  std::vector<double> h(static_cast<std::size_t>(taps));
  const double center = 0.5 * (taps - 1);
  for (int n = 0; n < taps; ++n) {
    const double m = n - center;
    const double x = 2.0 * cutoff * m;
    const double sinc = m == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    h[static_cast<std::size_t>(n)] = 2.0 * cutoff * sinc * hamming(n, taps);
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= sum;
  return h;
}

}  // namespace pdmkws::fir
