#pragma once

#include <array>
#include <vector>

#include "vlpoison/image.hpp"

namespace vlpoison {

// Axis-aligned source window in continuous pixel coordinates: the window
// covers [top, top + height) x [left, left + width).
struct CropWindow {
  double top = 0.0;
  double left = 0.0;
  double height = 0.0;
  double width = 0.0;
};

// Bilinear resampling of a crop window onto an output grid, stored as a
// sparse linear map so that both the forward pass and its adjoint are exact.
// Sampling uses half-pixel centers with edge clamping.
class BilinearMap {
 public:
  BilinearMap(Shape input, Shape output, CropWindow window);

  // Full-image resize.
  static BilinearMap resize(Shape input, Shape output);

  const Shape& input_shape() const { return input_; }
  const Shape& output_shape() const { return output_; }

  ImageArray apply(const ImageArray& x) const;
  // Adjoint: accumulates output gradients back onto input pixels.
  ImageArray adjoint(const ImageArray& grad_out) const;

 private:
  struct Taps {
    std::array<int, 4> pixel{};  // flat pixel index (y * width + x) into the input
    std::array<double, 4> weight{};
  };

  Shape input_;
  Shape output_;
  std::vector<Taps> taps_;  // one entry per output pixel
};

}  // namespace vlpoison
