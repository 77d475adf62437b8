#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>

namespace hema::quad {

/// 8-point Gauss-Legendre rule mapped onto [0, 1]: node positions and weights
/// (weights sum to 1).
inline constexpr std::array<double, 8> kGL8Theta = {
    0.5 * (1.0 - 0.96028985649753623168), 0.5 * (1.0 - 0.79666647741362673959),
    0.5 * (1.0 - 0.52553240991632898582), 0.5 * (1.0 - 0.18343464249564980494),
    0.5 * (1.0 + 0.18343464249564980494), 0.5 * (1.0 + 0.52553240991632898582),
    0.5 * (1.0 + 0.79666647741362673959), 0.5 * (1.0 + 0.96028985649753623168)};

inline constexpr std::array<double, 8> kGL8Weight = {
    0.5 * 0.10122853629037625915, 0.5 * 0.22238103445337447054,
    0.5 * 0.31370664587788728734, 0.5 * 0.36268378337836198297,
    0.5 * 0.36268378337836198297, 0.5 * 0.31370664587788728734,
    0.5 * 0.22238103445337447054, 0.5 * 0.10122853629037625915};

/// Single 8-point Gauss-Legendre panel on [a, b].
template <class F>
auto gauss8(F&& f, double a, double b) {
  using R = std::decay_t<decltype(f(a))>;
  const double len = b - a;
  R acc{};
  for (std::size_t j = 0; j < 8; ++j) acc += kGL8Weight[j] * f(a + kGL8Theta[j] * len);
  return acc * len;
}

/// Composite Gauss-Legendre over consecutive intervals [breaks[i], breaks[i+1]],
/// each split into equal panels no wider than `max_width`.
template <class F>
auto composite(F&& f, std::span<const double> breaks, double max_width) {
  using R = std::decay_t<decltype(f(0.0))>;
  R acc{};
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (!(b > a)) continue;
    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / max_width)));
    const double w = (b - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double lo = a + static_cast<double>(p) * w;
      const double hi = (p + 1 == panels) ? b : lo + w;
      acc += gauss8(f, lo, hi);
    }
  }
  return acc;
}

}  // namespace hema::quad
