#pragma once

#include <cstddef>
#include <functional>

// Composite Simpson rule; interval count is rounded up to even.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t intervals) {
  if (intervals % 2 == 1) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double acc = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i)
    acc += f(a + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}
