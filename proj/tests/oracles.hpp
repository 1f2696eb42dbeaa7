#pragma once

// Reference computations the tests compare against. None of these call into
// the code under test beyond the forward maps they differentiate.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vlpoison/encoder.hpp"
#include "vlpoison/image.hpp"
#include "vlpoison/rng.hpp"

namespace oracle {

using vlpoison::ImageArray;
using vlpoison::ImageBuffer;
using vlpoison::Shape;

inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

// Central difference of f along coordinate i.
inline double central_difference(const std::function<double(const ImageArray&)>& f,
                                 const ImageArray& x, std::size_t i, double h = 1e-4) {
  ImageArray plus = x;
  ImageArray minus = x;
  plus[i] += h;
  minus[i] -= h;
  return (f(plus) - f(minus)) / (2.0 * h);
}

// Worst relative error over `count` random coordinates (all when count >= n).
inline double worst_gradient_error(const std::function<double(const ImageArray&)>& f,
                                   const ImageArray& x, const ImageArray& grad,
                                   std::size_t count, std::uint64_t seed, double h = 1e-4) {
  std::vector<std::size_t> coords(x.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  if (count < coords.size()) {
    std::mt19937_64 gen(seed);
    std::shuffle(coords.begin(), coords.end(), gen);
    coords.resize(count);
  }
  double worst = 0.0;
  for (const auto i : coords) {
    worst = std::max(worst, rel_error(grad[i], central_difference(f, x, i, h)));
  }
  return worst;
}

inline ImageArray random_array(Shape shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  ImageArray a(shape);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = dist(gen);
  return a;
}

inline ImageBuffer random_image(Shape shape, std::uint64_t seed) {
  return ImageBuffer(random_array(shape, seed));
}

// Dense matrix, row-major.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

inline std::vector<double> matmul(const Matrix& a, const std::vector<double>& x) {
  std::vector<double> y(a.rows, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t c = 0; c < a.cols; ++c) y[r] += a.at(r, c) * x[c];
  return y;
}

// Recovers an affine encoder F(x) = A x + b by probing with unit images.
inline Matrix probe_affine(const vlpoison::EncoderHandle& enc, std::vector<double>* offset) {
  const auto shape = enc.input_size();
  const ImageArray zero(shape);
  const auto f0 = vlpoison::encode(enc, zero);
  Matrix a{f0.dim(), shape.size(), std::vector<double>(f0.dim() * shape.size())};
  for (std::size_t c = 0; c < shape.size(); ++c) {
    ImageArray e(shape);
    e[c] = 1.0;
    const auto fc = vlpoison::encode(enc, e);
    for (std::size_t r = 0; r < a.rows; ++r) a.data[r * a.cols + c] = fc[r] - f0[r];
  }
  if (offset) offset->assign(f0.values().begin(), f0.values().end());
  return a;
}

// min ||A x - b||^2 over lo <= x <= hi by exact coordinate descent.
inline std::vector<double> box_least_squares(const Matrix& a, const std::vector<double>& b,
                                             const std::vector<double>& lo,
                                             const std::vector<double>& hi,
                                             std::vector<double> x, int sweeps = 400) {
  std::vector<double> residual = matmul(a, x);
  for (std::size_t r = 0; r < a.rows; ++r) residual[r] -= b[r];
  std::vector<double> col_norm(a.cols, 0.0);
  for (std::size_t c = 0; c < a.cols; ++c)
    for (std::size_t r = 0; r < a.rows; ++r) col_norm[c] += a.at(r, c) * a.at(r, c);
  for (int s = 0; s < sweeps; ++s) {
    for (std::size_t c = 0; c < a.cols; ++c) {
      if (col_norm[c] == 0.0) continue;
      double g = 0.0;
      for (std::size_t r = 0; r < a.rows; ++r) g += a.at(r, c) * residual[r];
      const double next = std::clamp(x[c] - g / col_norm[c], lo[c], hi[c]);
      const double delta = next - x[c];
      if (delta == 0.0) continue;
      for (std::size_t r = 0; r < a.rows; ++r) residual[r] += a.at(r, c) * delta;
      x[c] = next;
    }
  }
  return x;
}

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Nearest point to v on a 1e-3 grid of [lo, hi] (endpoints included).
inline double grid_nearest(double v, double lo, double hi, double step = 1e-3) {
  double best = lo;
  for (double g = lo; g <= hi; g += step) {
    if (std::abs(g - v) < std::abs(best - v)) best = g;
  }
  if (std::abs(hi - v) < std::abs(best - v)) best = hi;
  return best;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("vlpoison-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
