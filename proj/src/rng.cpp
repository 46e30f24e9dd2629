#include "fact/rng.hpp"

#include <cmath>

namespace fact {

double Rng::normal(double mean, double stddev) {
  // Box-Muller; u1 is kept away from zero.
  const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace fact
