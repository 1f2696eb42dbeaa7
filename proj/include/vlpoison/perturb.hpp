#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlpoison/encoder.hpp"
#include "vlpoison/image.hpp"
#include "vlpoison/model.hpp"
#include "vlpoison/resample.hpp"
#include "vlpoison/rng.hpp"

namespace vlpoison {

// Nearest point to `x` inside {r : |r - center|_inf <= eps} intersected with
// the [0, 1] box. The bound holds exactly in floating point.
ImageArray project_box(const ImageArray& x, const ImageBuffer& center, double eps);

// Rounds every value to the nearest multiple of 1/255 (ties up).
ImageBuffer quantize_8bit(const ImageBuffer& x);

class TransformError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Draws crop parameters: scale s ~ U[scale_min, scale_max] applied to both
// sides (fixed aspect ratio), position uniform over valid offsets. Returns the
// bilinear map that resizes the crop back to the input shape.
BilinearMap sample_resize_crop(Shape shape, const TransformDescriptor& desc, Rng& rng);

// Deterministic version with explicit parameters. `top` and `left` are in
// [0, 1] as a fraction of the free range (0.5 = centered).
BilinearMap resize_crop_map(Shape shape, double scale, double top, double left);

ImageArray random_resize_crop(const ImageArray& x, const TransformDescriptor& desc, Rng& rng);

struct CraftReport {
  int steps_run = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;  // loss of the returned (best) iterate
  std::vector<double> loss_trace;
  double achieved_linf = 0.0;  // pre-quantization
  double wall_time_seconds = 0.0;
};

class CraftError : public std::runtime_error {
 public:
  CraftError(const std::string& message, int step)
      : std::runtime_error(message), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct CraftResult {
  ImageBuffer poison;  // pre-quantization, feasible
  CraftReport report;
};

// Projected gradient descent on ||F(T(x)) - F(x_o)||_2 subject to
// |x - x_d|_inf <= epsilon and x in [0, 1], starting from x_d. Returns the
// best evaluated iterate.
CraftResult craft_poison_image(const ImageBuffer& destination, const ImageBuffer& original,
                               const EncoderHandle& enc, const PerturbationSpec& spec);

}  // namespace vlpoison
