#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/numeric/mat.hpp"
#include "graphshield/numeric/tape.hpp"

namespace graphshield::encoder {

/// Rotation angle for column pair (2i, 2i+1) at time position t.
inline double rotary_angle(double t, std::size_t pair, std::size_t dim) {
  return t / std::pow(10000.0, 2.0 * static_cast<double>(pair) / static_cast<double>(dim));
}

/// Rotate each row of `h` by its time position: (a, b) -> (a cos + b sin, b cos - a sin).
inline Mat rotary_encode(const Mat& h, const std::vector<double>& positions) {
  if (h.cols() % 2 != 0) throw ShapeError("rotary_encode: width " + std::to_string(h.cols()) + " is odd");
  if (positions.size() != h.rows()) throw ShapeError("rotary_encode: one position per row required");
  Mat out(h.rows(), h.cols());
  for (std::size_t r = 0; r < h.rows(); ++r)
    for (std::size_t i = 0; i < h.cols() / 2; ++i) {
      const double th = rotary_angle(positions[r], i, h.cols());
      const double c = std::cos(th), s = std::sin(th);
      const double a = h(r, 2 * i), b = h(r, 2 * i + 1);
      out(r, 2 * i) = a * c + b * s;
      out(r, 2 * i + 1) = b * c - a * s;
    }
  return out;
}

inline Var rotary(Var h, const std::vector<double>& positions) {
  Tape& t = *h.tape;
  Mat out = rotary_encode(h.value(), positions);
  return t.record("rotary", std::move(out), t.requires_grad(h), [h, &positions](Tape& tp, const Mat& g) {
    Mat d(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t i = 0; i < g.cols() / 2; ++i) {
        const double th = rotary_angle(positions[r], i, g.cols());
        const double c = std::cos(th), s = std::sin(th);
        const double ga = g(r, 2 * i), gb = g(r, 2 * i + 1);
        d(r, 2 * i) = ga * c - gb * s;
        d(r, 2 * i + 1) = ga * s + gb * c;
      }
    tp.accumulate(h, d);
  });
}

}  // namespace graphshield::encoder
