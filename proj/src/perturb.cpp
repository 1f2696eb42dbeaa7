#include "vlpoison/perturb.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "vlpoison/image_io.hpp"
#include "vlpoison/jpegsim.hpp"

namespace vlpoison {

namespace {

// Largest representable upper bound u <= center + eps with fl(u - center) <= eps.
double upper_bound(double center, double eps) {
  double hi = center + eps;
  while (hi - center > eps) hi = std::nextafter(hi, -std::numeric_limits<double>::infinity());
  return std::min(hi, 1.0);
}

double lower_bound(double center, double eps) {
  double lo = center - eps;
  while (center - lo > eps) lo = std::nextafter(lo, std::numeric_limits<double>::infinity());
  return std::max(lo, 0.0);
}

// One sampled differentiable pipeline: optional crop, optional JPEG surrogate.
struct StepPipeline {
  std::optional<BilinearMap> crop;
  const JpegSurrogate* jpeg = nullptr;

  LossAndGrad evaluate(const EncoderHandle& enc, const ImageArray& x,
                       const FeatureVector& target) const {
    const ImageArray cropped = crop ? crop->apply(x) : x;
    if (jpeg == nullptr) {
      auto lg = loss_and_grad(enc, cropped, target);
      if (crop) lg.grad = crop->adjoint(lg.grad);
      return lg;
    }
    auto lg = loss_and_grad(enc, jpeg->forward(cropped), target);
    lg.grad = jpeg->backward(cropped, lg.grad);
    if (crop) lg.grad = crop->adjoint(lg.grad);
    return lg;
  }
};

}  // namespace

ImageArray project_box(const ImageArray& x, const ImageBuffer& center, double eps) {
  if (x.shape() != center.shape()) {
    throw ShapeError("project_box: iterate " + to_string(x.shape()) + " vs center " +
                     to_string(center.shape()));
  }
  if (!(eps > 0.0)) throw std::invalid_argument("project_box: eps must be positive");
  ImageArray out(x.shape());
  const auto c = center.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::clamp(x[i], lower_bound(c[i], eps), upper_bound(c[i], eps));
  }
  return out;
}

ImageBuffer quantize_8bit(const ImageBuffer& x) {
  std::vector<double> values(x.values().size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = to_byte(x.values()[i]) / 255.0;
  return ImageBuffer(x.shape(), std::move(values));
}

BilinearMap resize_crop_map(Shape shape, double scale, double top, double left) {
  const double h = scale * shape.height;
  const double w = scale * shape.width;
  if (!(h >= 1.0 && w >= 1.0)) {
    std::ostringstream msg;
    msg << "degenerate crop: scale " << scale << " on " << to_string(shape)
        << " leaves less than one pixel";
    throw TransformError(msg.str());
  }
  return BilinearMap(shape, shape,
                     CropWindow{top * (shape.height - h), left * (shape.width - w), h, w});
}

BilinearMap sample_resize_crop(Shape shape, const TransformDescriptor& desc, Rng& rng) {
  if (!(desc.scale_min > 0.0 && desc.scale_min <= desc.scale_max && desc.scale_max <= 1.0)) {
    throw TransformError("resize-crop scale range must satisfy 0 < min <= max <= 1");
  }
  const double scale = rng.uniform(desc.scale_min, desc.scale_max);
  const double top = rng.uniform();
  const double left = rng.uniform();
  return resize_crop_map(shape, scale, top, left);
}

ImageArray random_resize_crop(const ImageArray& x, const TransformDescriptor& desc, Rng& rng) {
  return sample_resize_crop(x.shape(), desc, rng).apply(x);
}

CraftResult craft_poison_image(const ImageBuffer& destination, const ImageBuffer& original,
                               const EncoderHandle& enc, const PerturbationSpec& spec) {
  require_valid(spec);
  const auto started = std::chrono::steady_clock::now();
  const double eps = spec.epsilon();
  const FeatureVector target = encode(enc, original);

  std::optional<JpegSurrogate> jpeg;
  if (spec.jpeg_surrogate_quality) {
    jpeg.emplace(JpegParams{*spec.jpeg_surrogate_quality, Rounding::smooth});
  }

  Rng rng(spec.seed);
  ImageArray x = destination.array();
  ImageArray best = x;
  double best_loss = std::numeric_limits<double>::infinity();
  CraftReport report;

  auto evaluate = [&](int step) {
    StepPipeline pipeline;
    pipeline.jpeg = jpeg ? &*jpeg : nullptr;
    if (!spec.transforms.empty()) {
      const auto pick = static_cast<std::size_t>(rng.below(spec.transforms.size()));
      pipeline.crop = sample_resize_crop(x.shape(), spec.transforms[pick], rng);
    }
    try {
      return pipeline.evaluate(enc, x, target);
    } catch (const NumericalError& e) {
      throw CraftError("step " + std::to_string(step) + ": " + e.what(), step);
    }
  };

  int step = 0;
  for (const auto& segment : spec.schedule) {
    const double step_size = segment.step_size();
    for (int i = 0; i < segment.step_count; ++i, ++step) {
      LossAndGrad lg = evaluate(step);
      if (step == 0) report.initial_loss = lg.loss;
      if (step % spec.record_every == 0) report.loss_trace.push_back(lg.loss);
      if (lg.loss < best_loss) {
        best_loss = lg.loss;
        best = x;
      }
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double g = lg.grad[k];
        const double direction = spec.step_mode == StepMode::sign
                                     ? static_cast<double>((g > 0.0) - (g < 0.0))
                                     : g;
        x[k] -= step_size * direction;
      }
      x = project_box(x, destination, eps);
    }
  }
  const LossAndGrad last = evaluate(step);
  if (last.loss < best_loss) {
    best_loss = last.loss;
    best = x;
  }
  report.loss_trace.push_back(best_loss);
  report.steps_run = step;
  report.final_loss = best_loss;
  report.achieved_linf = linf_distance(best, destination.array());
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {ImageBuffer(std::move(best)), std::move(report)};
}

}  // namespace vlpoison
