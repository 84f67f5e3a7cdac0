#pragma once

#include <cmath>
#include <random>

#include "somb/grid.hpp"
#include "somb/model.hpp"

namespace somb::test {

inline SpinorField random_field(const GridSpec& g, int components, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  SpinorField f(g, components, Rep::Position);
  for (auto& c : f.data()) c = {n(rng), n(rng)};
  f.scale(1.0 / std::sqrt(f.norm()));
  return f;
}

inline double linf(std::span<const cplx> a, std::span<const cplx> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace somb::test
