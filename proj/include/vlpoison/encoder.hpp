#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlpoison/image.hpp"

namespace vlpoison {

class FeatureDimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  bool operator==(const FeatureVector&) const = default;

 private:
  std::vector<double> values_;
};

// Differentiable backend behind an EncoderHandle. Adapters for real vision
// encoders implement this and nothing else; the rest of the toolkit never
// sees which backend is in use. Implementations must be safe to call
// concurrently (const methods, no mutable state).
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::size_t feature_dim() const = 0;
  virtual Shape input_size() const = 0;
  virtual std::string descriptor() const = 0;

  // `x` always has shape input_size().
  virtual FeatureVector forward(const ImageArray& x) const = 0;
  // Vector-Jacobian product (dF/dx)^T * feature_grad at `x`.
  virtual ImageArray backward(const ImageArray& x, std::span<const double> feature_grad) const = 0;
};

enum class ResizePolicy {
  bilinear,  // resize to input_size inside the differentiated pipeline
  reject,    // shape mismatch is an error
};

class EncoderHandle {
 public:
  EncoderHandle(std::shared_ptr<const Encoder> impl, ResizePolicy policy = ResizePolicy::bilinear);

  std::size_t feature_dim() const { return impl_->feature_dim(); }
  Shape input_size() const { return impl_->input_size(); }
  std::string descriptor() const { return impl_->descriptor(); }
  ResizePolicy resize_policy() const { return policy_; }
  const Encoder& backend() const { return *impl_; }

 private:
  std::shared_ptr<const Encoder> impl_;
  ResizePolicy policy_;
};

FeatureVector encode(const EncoderHandle& enc, const ImageArray& image);
FeatureVector encode(const EncoderHandle& enc, const ImageBuffer& image);

struct LossAndGrad {
  double loss = 0.0;  // ||F(x) - target||_2
  ImageArray grad;    // d(loss^2)/dx, same shape as x
};

// Throws FeatureDimensionError on a target of the wrong dimension and
// NumericalError when the encoder yields non-finite values.
LossAndGrad loss_and_grad(const EncoderHandle& enc, const ImageArray& x, const FeatureVector& target);
LossAndGrad loss_and_grad(const EncoderHandle& enc, const ImageBuffer& x,
                          const FeatureVector& target);

// ---------------------------------------------------------------------------
// Toy encoders for desk-scale runs and tests.

enum class ToyVariant { identity, linear, conv1 };

std::string to_string(ToyVariant variant);

struct ToyEncoderOptions {
  // Feature dimension of the linear variant; other variants derive D from shape.
  std::size_t linear_dim = 32;
  ResizePolicy resize = ResizePolicy::bilinear;
};

EncoderHandle make_toy_encoder(ToyVariant variant, std::uint64_t seed, Shape input_size,
                               ToyEncoderOptions options = {});

// ---------------------------------------------------------------------------
// Descriptor registry. A descriptor is "<scheme>:<rest>"; the built-in "toy"
// scheme reads e.g. "toy:linear:seed=7:size=8x8:dim=32" (add ":resize=reject"
// to disable resizing).

using EncoderFactory = std::function<EncoderHandle(const std::string& descriptor)>;

void register_encoder_adapter(const std::string& scheme, EncoderFactory factory);
EncoderHandle resolve_encoder(const std::string& descriptor);

}  // namespace vlpoison
