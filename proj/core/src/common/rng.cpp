#include "locjepa/common/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "locjepa/common/error.hpp"

namespace locjepa {

std::uint64_t Rng::index(std::uint64_t n) {
  if (n == 0) throw UsageError("Rng::index: empty range");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::trunc_normal(double std) {
  double z = normal();
  while (std::abs(z) > 2.0) z = normal();
  return z * std;
}

Rng Rng::split() { return Rng(engine_()); }

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::set_state(const std::string& text) {
  std::istringstream in(text);
  in >> engine_;
  if (in.fail()) throw DataError("Rng::set_state: malformed engine state");
}

}  // namespace locjepa
