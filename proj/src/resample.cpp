#include "vlpoison/resample.hpp"

#include <algorithm>
#include <cmath>

namespace vlpoison {

namespace {

struct AxisTap {
  int lo;
  int hi;
  double frac;  // weight of hi
};

AxisTap axis_tap(double coord, int size) {
  const double clamped = std::clamp(coord, 0.0, static_cast<double>(size - 1));
  const int lo = static_cast<int>(std::floor(clamped));
  const int hi = std::min(lo + 1, size - 1);
  return {lo, hi, clamped - lo};
}

}  // namespace

BilinearMap::BilinearMap(Shape input, Shape output, CropWindow window)
    : input_(input), output_(output) {
  if (input.height <= 0 || input.width <= 0 || output.height <= 0 || output.width <= 0) {
    throw ShapeError("bilinear map needs positive shapes, got " + to_string(input) + " -> " +
                     to_string(output));
  }
  if (!(window.height > 0.0 && window.width > 0.0)) {
    throw ShapeError("bilinear map needs a non-empty crop window");
  }
  taps_.resize(static_cast<std::size_t>(output.height) * output.width);
  const double sy = window.height / output.height;
  const double sx = window.width / output.width;
  for (int oy = 0; oy < output.height; ++oy) {
    const auto ty = axis_tap(window.top + (oy + 0.5) * sy - 0.5, input.height);
    for (int ox = 0; ox < output.width; ++ox) {
      const auto tx = axis_tap(window.left + (ox + 0.5) * sx - 0.5, input.width);
      auto& t = taps_[static_cast<std::size_t>(oy) * output.width + ox];
      t.pixel = {ty.lo * input.width + tx.lo, ty.lo * input.width + tx.hi,
                 ty.hi * input.width + tx.lo, ty.hi * input.width + tx.hi};
      t.weight = {(1 - ty.frac) * (1 - tx.frac), (1 - ty.frac) * tx.frac, ty.frac * (1 - tx.frac),
                  ty.frac * tx.frac};
    }
  }
}

BilinearMap BilinearMap::resize(Shape input, Shape output) {
  return BilinearMap(input, output,
                     CropWindow{0.0, 0.0, static_cast<double>(input.height),
                                static_cast<double>(input.width)});
}

ImageArray BilinearMap::apply(const ImageArray& x) const {
  if (x.shape() != input_) {
    throw ShapeError("bilinear map expects " + to_string(input_) + ", got " + to_string(x.shape()));
  }
  ImageArray out(output_);
  for (std::size_t p = 0; p < taps_.size(); ++p) {
    const auto& t = taps_[p];
    for (int c = 0; c < kChannels; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * x[t.pixel[k] * kChannels + c];
      out[p * kChannels + c] = acc;
    }
  }
  return out;
}

ImageArray BilinearMap::adjoint(const ImageArray& grad_out) const {
  if (grad_out.shape() != output_) {
    throw ShapeError("bilinear adjoint expects " + to_string(output_) + ", got " +
                     to_string(grad_out.shape()));
  }
  ImageArray grad_in(input_);
  for (std::size_t p = 0; p < taps_.size(); ++p) {
    const auto& t = taps_[p];
    for (int c = 0; c < kChannels; ++c) {
      const double g = grad_out[p * kChannels + c];
      for (int k = 0; k < 4; ++k) grad_in[t.pixel[k] * kChannels + c] += t.weight[k] * g;
    }
  }
  return grad_in;
}

}  // namespace vlpoison
