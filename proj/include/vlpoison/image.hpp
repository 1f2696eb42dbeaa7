#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vlpoison {

inline constexpr int kChannels = 3;

struct Shape {
  int height = 0;
  int width = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * kChannels;
  }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unconstrained H x W x 3 real array, channels-last. Used for iterates,
// gradients and intermediate values of differentiable pipelines.
class ImageArray {
 public:
  ImageArray() = default;
  explicit ImageArray(Shape shape, double fill = 0.0);
  ImageArray(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  std::size_t size() const { return values_.size(); }

  double& at(int y, int x, int c) { return values_[index(y, x, c)]; }
  double at(int y, int x, int c) const { return values_[index(y, x, c)]; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.width) +
            static_cast<std::size_t>(x)) * kChannels + static_cast<std::size_t>(c);
  }

  bool operator==(const ImageArray&) const = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

// Linf distance; throws ShapeError on mismatch.
double linf_distance(const ImageArray& a, const ImageArray& b);

class ValueRangeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Validated image: positive dimensions, every value in [0, 1].
// Immutable after construction.
class ImageBuffer {
 public:
  explicit ImageBuffer(ImageArray values);
  ImageBuffer(Shape shape, std::vector<double> values);

  static ImageBuffer filled(Shape shape, double value);

  const Shape& shape() const { return array_.shape(); }
  int height() const { return array_.height(); }
  int width() const { return array_.width(); }
  double at(int y, int x, int c) const { return array_.at(y, x, c); }
  std::span<const double> values() const { return array_.values(); }
  const ImageArray& array() const { return array_; }

  bool operator==(const ImageBuffer&) const = default;

 private:
  ImageArray array_;
};

}  // namespace vlpoison
