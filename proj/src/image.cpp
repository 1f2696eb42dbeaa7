#include "vlpoison/image.hpp"

#include <cmath>
#include <sstream>

namespace vlpoison {

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << shape.height << "x" << shape.width << "x" << kChannels;
  return out.str();
}

ImageArray::ImageArray(Shape shape, double fill) : shape_(shape), values_(shape.size(), fill) {
  if (shape.height < 0 || shape.width < 0) {
    throw ShapeError("negative image dimensions: " + to_string(shape));
  }
}

ImageArray::ImageArray(Shape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (shape.height < 0 || shape.width < 0) {
    throw ShapeError("negative image dimensions: " + to_string(shape));
  }
  if (values_.size() != shape.size()) {
    std::ostringstream msg;
    msg << "image " << to_string(shape) << " needs " << shape.size() << " values, got "
        << values_.size();
    throw ShapeError(msg.str());
  }
}

double linf_distance(const ImageArray& a, const ImageArray& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("linf_distance: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

ImageBuffer::ImageBuffer(ImageArray values) : array_(std::move(values)) {
  if (array_.height() <= 0 || array_.width() <= 0) {
    throw ShapeError("image dimensions must be positive, got " + to_string(array_.shape()));
  }
  for (std::size_t i = 0; i < array_.size(); ++i) {
    const double v = array_[i];
    // Written so that NaN fails too.
    if (!(v >= 0.0 && v <= 1.0)) {
      std::ostringstream msg;
      msg << "pixel value " << v << " at flat index " << i << " outside [0, 1]";
      throw ValueRangeError(msg.str());
    }
  }
}

ImageBuffer::ImageBuffer(Shape shape, std::vector<double> values)
    : ImageBuffer(ImageArray(shape, std::move(values))) {}

ImageBuffer ImageBuffer::filled(Shape shape, double value) {
  return ImageBuffer(ImageArray(shape, value));
}

}  // namespace vlpoison
