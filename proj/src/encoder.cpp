#include "vlpoison/encoder.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include "vlpoison/resample.hpp"
#include "vlpoison/rng.hpp"

namespace vlpoison {

namespace {

void check_input(const Encoder& enc, const ImageArray& x) {
  if (x.shape() != enc.input_size()) {
    throw ShapeError(enc.descriptor() + ": expected input " + to_string(enc.input_size()) +
                     ", got " + to_string(x.shape()));
  }
}

void check_feature_grad(const Encoder& enc, std::span<const double> g) {
  if (g.size() != enc.feature_dim()) {
    throw FeatureDimensionError(enc.descriptor() + ": feature gradient has dimension " +
                                std::to_string(g.size()) + ", expected " +
                                std::to_string(enc.feature_dim()));
  }
}

std::string toy_descriptor(ToyVariant variant, std::uint64_t seed, Shape size) {
  std::ostringstream out;
  out << "toy:" << to_string(variant) << ":seed=" << seed << ":size=" << size.height << "x"
      << size.width;
  return out.str();
}

class IdentityEncoder final : public Encoder {
 public:
  IdentityEncoder(std::uint64_t seed, Shape size) : seed_(seed), size_(size) {}

  std::size_t feature_dim() const override { return size_.size(); }
  Shape input_size() const override { return size_; }
  std::string descriptor() const override {
    return toy_descriptor(ToyVariant::identity, seed_, size_);
  }

  FeatureVector forward(const ImageArray& x) const override {
    check_input(*this, x);
    return FeatureVector(std::vector<double>(x.values().begin(), x.values().end()));
  }

  ImageArray backward(const ImageArray& x, std::span<const double> g) const override {
    check_input(*this, x);
    check_feature_grad(*this, g);
    return ImageArray(size_, std::vector<double>(g.begin(), g.end()));
  }

 private:
  std::uint64_t seed_;
  Shape size_;
};

// F(x) = A * flatten(x), A_ij ~ N(0, 1/n).
class LinearEncoder final : public Encoder {
 public:
  LinearEncoder(std::uint64_t seed, Shape size, std::size_t dim)
      : seed_(seed), size_(size), dim_(dim), weights_(dim * size.size()) {
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(size.size()));
    for (auto& w : weights_) w = rng.normal() * scale;
  }

  std::size_t feature_dim() const override { return dim_; }
  Shape input_size() const override { return size_; }
  std::string descriptor() const override {
    return toy_descriptor(ToyVariant::linear, seed_, size_) + ":dim=" + std::to_string(dim_);
  }

  std::span<const double> weights() const { return weights_; }

  FeatureVector forward(const ImageArray& x) const override {
    check_input(*this, x);
    const std::size_t n = x.size();
    std::vector<double> out(dim_, 0.0);
    for (std::size_t r = 0; r < dim_; ++r) {
      const double* row = weights_.data() + r * n;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += row[i] * x[i];
      out[r] = acc;
    }
    return FeatureVector(std::move(out));
  }

  ImageArray backward(const ImageArray& x, std::span<const double> g) const override {
    check_input(*this, x);
    check_feature_grad(*this, g);
    const std::size_t n = x.size();
    ImageArray grad(size_);
    for (std::size_t r = 0; r < dim_; ++r) {
      const double* row = weights_.data() + r * n;
      for (std::size_t i = 0; i < n; ++i) grad[i] += row[i] * g[r];
    }
    return grad;
  }

 private:
  std::uint64_t seed_;
  Shape size_;
  std::size_t dim_;
  std::vector<double> weights_;  // row-major dim x n
};

// One 3x3 convolution (zero padding, stride 1) with kOut output channels and
// tanh activation; the feature vector is the flattened activation map.
class Conv1Encoder final : public Encoder {
 public:
  static constexpr int kOut = 4;
  static constexpr int kTaps = 3 * 3 * kChannels;

  Conv1Encoder(std::uint64_t seed, Shape size)
      : seed_(seed), size_(size), kernel_(kOut * kTaps), bias_(kOut) {
    Rng rng(seed);
    const double scale = 1.5 / std::sqrt(static_cast<double>(kTaps));
    for (auto& w : kernel_) w = rng.normal() * scale;
    for (auto& b : bias_) b = 0.1 * rng.normal();
  }

  std::size_t feature_dim() const override {
    return static_cast<std::size_t>(size_.height) * size_.width * kOut;
  }
  Shape input_size() const override { return size_; }
  std::string descriptor() const override {
    return toy_descriptor(ToyVariant::conv1, seed_, size_);
  }

  FeatureVector forward(const ImageArray& x) const override {
    check_input(*this, x);
    return FeatureVector(activations(x));
  }

  ImageArray backward(const ImageArray& x, std::span<const double> g) const override {
    check_input(*this, x);
    check_feature_grad(*this, g);
    const auto act = activations(x);
    ImageArray grad(size_);
    for (int y = 0; y < size_.height; ++y) {
      for (int xx = 0; xx < size_.width; ++xx) {
        for (int k = 0; k < kOut; ++k) {
          const std::size_t o = feature_index(y, xx, k);
          const double gz = g[o] * (1.0 - act[o] * act[o]);
          if (gz == 0.0) continue;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int sy = y + dy;
              const int sx = xx + dx;
              if (sy < 0 || sy >= size_.height || sx < 0 || sx >= size_.width) continue;
              for (int c = 0; c < kChannels; ++c) {
                grad.at(sy, sx, c) += kernel_[weight_index(k, dy, dx, c)] * gz;
              }
            }
          }
        }
      }
    }
    return grad;
  }

 private:
  std::size_t feature_index(int y, int x, int k) const {
    return (static_cast<std::size_t>(y) * size_.width + x) * kOut + k;
  }
  static std::size_t weight_index(int k, int dy, int dx, int c) {
    return static_cast<std::size_t>(((k * 3 + (dy + 1)) * 3 + (dx + 1)) * kChannels + c);
  }

  std::vector<double> activations(const ImageArray& x) const {
    std::vector<double> out(feature_dim());
    for (int y = 0; y < size_.height; ++y) {
      for (int xx = 0; xx < size_.width; ++xx) {
        for (int k = 0; k < kOut; ++k) {
          double z = bias_[k];
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int sy = y + dy;
              const int sx = xx + dx;
              if (sy < 0 || sy >= size_.height || sx < 0 || sx >= size_.width) continue;
              for (int c = 0; c < kChannels; ++c) {
                z += kernel_[weight_index(k, dy, dx, c)] * x.at(sy, sx, c);
              }
            }
          }
          out[feature_index(y, xx, k)] = std::tanh(z);
        }
      }
    }
    return out;
  }

  std::uint64_t seed_;
  Shape size_;
  std::vector<double> kernel_;
  std::vector<double> bias_;
};

struct Registry {
  std::mutex mutex;
  std::map<std::string, EncoderFactory> factories;
};

Registry& registry() {
  static Registry instance;
  return instance;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  std::istringstream in(text);
  while (std::getline(in, current, sep)) parts.push_back(current);
  return parts;
}

EncoderHandle make_toy_from_descriptor(const std::string& descriptor) {
  const auto parts = split(descriptor, ':');
  if (parts.size() < 2 || parts[0] != "toy") {
    throw std::invalid_argument("not a toy encoder descriptor: '" + descriptor + "'");
  }
  ToyVariant variant;
  if (parts[1] == "identity") variant = ToyVariant::identity;
  else if (parts[1] == "linear") variant = ToyVariant::linear;
  else if (parts[1] == "conv1") variant = ToyVariant::conv1;
  else throw std::invalid_argument("unknown toy encoder variant '" + parts[1] + "'");

  std::uint64_t seed = 0;
  Shape size{8, 8};
  ToyEncoderOptions options;
  for (std::size_t i = 2; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("malformed encoder option '" + parts[i] + "' in '" + descriptor + "'");
    }
    const auto key = parts[i].substr(0, eq);
    const auto value = parts[i].substr(eq + 1);
    try {
      if (key == "seed") {
        seed = std::stoull(value);
      } else if (key == "size") {
        const auto x = value.find('x');
        if (x == std::string::npos) throw std::invalid_argument("size must be HxW");
        size = Shape{std::stoi(value.substr(0, x)), std::stoi(value.substr(x + 1))};
      } else if (key == "dim") {
        options.linear_dim = std::stoull(value);
      } else if (key == "resize") {
        if (value == "bilinear") options.resize = ResizePolicy::bilinear;
        else if (value == "reject") options.resize = ResizePolicy::reject;
        else throw std::invalid_argument("resize must be bilinear or reject");
      } else {
        throw std::invalid_argument("unknown option");
      }
    } catch (const std::logic_error& e) {
      throw std::invalid_argument("bad encoder option '" + parts[i] + "' in '" + descriptor +
                                  "': " + e.what());
    }
  }
  return make_toy_encoder(variant, seed, size, options);
}

}  // namespace

EncoderHandle::EncoderHandle(std::shared_ptr<const Encoder> impl, ResizePolicy policy)
    : impl_(std::move(impl)), policy_(policy) {
  if (!impl_) throw std::invalid_argument("EncoderHandle needs a backend");
}

FeatureVector encode(const EncoderHandle& enc, const ImageArray& image) {
  const Shape want = enc.input_size();
  if (image.shape() == want) return enc.backend().forward(image);
  if (enc.resize_policy() == ResizePolicy::reject) {
    throw ShapeError(enc.descriptor() + ": image " + to_string(image.shape()) +
                     " does not match encoder input " + to_string(want) +
                     " and resizing is disabled");
  }
  return enc.backend().forward(BilinearMap::resize(image.shape(), want).apply(image));
}

FeatureVector encode(const EncoderHandle& enc, const ImageBuffer& image) {
  return encode(enc, image.array());
}

LossAndGrad loss_and_grad(const EncoderHandle& enc, const ImageArray& x,
                          const FeatureVector& target) {
  if (target.dim() != enc.feature_dim()) {
    throw FeatureDimensionError("target has dimension " + std::to_string(target.dim()) +
                                ", encoder " + enc.descriptor() + " produces " +
                                std::to_string(enc.feature_dim()));
  }
  const Shape want = enc.input_size();
  const bool resized = x.shape() != want;
  if (resized && enc.resize_policy() == ResizePolicy::reject) {
    throw ShapeError(enc.descriptor() + ": image " + to_string(x.shape()) +
                     " does not match encoder input " + to_string(want) +
                     " and resizing is disabled");
  }
  const auto map = resized ? std::optional<BilinearMap>(BilinearMap::resize(x.shape(), want))
                           : std::nullopt;
  const ImageArray input = resized ? map->apply(x) : x;

  const FeatureVector features = enc.backend().forward(input);
  if (features.dim() != enc.feature_dim()) {
    throw FeatureDimensionError(enc.descriptor() + " returned " + std::to_string(features.dim()) +
                                " features, declared " + std::to_string(enc.feature_dim()));
  }
  std::vector<double> feature_grad(features.dim());
  double squared = 0.0;
  for (std::size_t i = 0; i < features.dim(); ++i) {
    const double d = features[i] - target[i];
    squared += d * d;
    feature_grad[i] = 2.0 * d;
  }
  if (!std::isfinite(squared)) {
    throw NumericalError(enc.descriptor() + " produced a non-finite loss");
  }
  ImageArray grad = enc.backend().backward(input, feature_grad);
  if (resized) grad = map->adjoint(grad);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericalError(enc.descriptor() + " produced a non-finite gradient");
    }
  }
  return {std::sqrt(squared), std::move(grad)};
}

LossAndGrad loss_and_grad(const EncoderHandle& enc, const ImageBuffer& x,
                          const FeatureVector& target) {
  return loss_and_grad(enc, x.array(), target);
}

std::string to_string(ToyVariant variant) {
  switch (variant) {
    case ToyVariant::identity: return "identity";
    case ToyVariant::linear: return "linear";
    case ToyVariant::conv1: return "conv1";
  }
  return "unknown";
}

EncoderHandle make_toy_encoder(ToyVariant variant, std::uint64_t seed, Shape input_size,
                               ToyEncoderOptions options) {
  if (input_size.height <= 0 || input_size.width <= 0) {
    throw ShapeError("toy encoder input size must be positive, got " + to_string(input_size));
  }
  std::shared_ptr<const Encoder> impl;
  switch (variant) {
    case ToyVariant::identity:
      impl = std::make_shared<IdentityEncoder>(seed, input_size);
      break;
    case ToyVariant::linear:
      if (options.linear_dim == 0) throw std::invalid_argument("linear encoder dim must be > 0");
      impl = std::make_shared<LinearEncoder>(seed, input_size, options.linear_dim);
      break;
    case ToyVariant::conv1:
      impl = std::make_shared<Conv1Encoder>(seed, input_size);
      break;
  }
  return EncoderHandle(std::move(impl), options.resize);
}

void register_encoder_adapter(const std::string& scheme, EncoderFactory factory) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  reg.factories[scheme] = std::move(factory);
}

EncoderHandle resolve_encoder(const std::string& descriptor) {
  const auto colon = descriptor.find(':');
  const auto scheme = descriptor.substr(0, colon);
  if (scheme == "toy") return make_toy_from_descriptor(descriptor);
  EncoderFactory factory;
  {
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    const auto it = reg.factories.find(scheme);
    if (it != reg.factories.end()) factory = it->second;
  }
  if (!factory) {
    throw std::invalid_argument("no encoder adapter registered for '" + descriptor + "'");
  }
  return factory(descriptor);
}

}  // namespace vlpoison
