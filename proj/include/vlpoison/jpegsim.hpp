#pragma once

#include <array>

#include "vlpoison/image.hpp"
#include "vlpoison/jpeg_codec.hpp"

namespace vlpoison {

enum class Rounding {
  hard,    // real codec only
  smooth,  // differentiable surrogate
};

struct JpegParams {
  int quality = 75;
  Rounding rounding = Rounding::smooth;
};

using QuantTable = std::array<double, 64>;

// Standard IJG luminance/chrominance tables scaled for `quality` exactly as
// libjpeg does with baseline clamping.
QuantTable luma_table(int quality);
QuantTable chroma_table(int quality);

// Differentiable rounding used by the surrogate:
// round(v) + 4 (v - round(v))^3. Continuous with a continuous derivative.
double smooth_round(double v);
double smooth_round_derivative(double v);

// Differentiable JPEG approximation: full-range YCbCr (4:4:4), 8x8 blockwise
// orthonormal DCT with edge-replicated padding, quality-scaled quantization
// with smooth rounding, inverse DCT, back to RGB, clamp to [0, 1].
class JpegSurrogate {
 public:
  explicit JpegSurrogate(JpegParams params);

  const JpegParams& params() const { return params_; }

  ImageArray forward(const ImageArray& x) const;
  // Gradient of <grad_out, forward(x)> with respect to x.
  ImageArray backward(const ImageArray& x, const ImageArray& grad_out) const;

 private:
  JpegParams params_;
  QuantTable luma_;
  QuantTable chroma_;
};

// Throws std::invalid_argument when params.rounding is hard or the quality is
// out of range.
ImageArray jpeg_surrogate(const ImageArray& x, const JpegParams& params);

// Encode then decode with the real codec.
ImageBuffer jpeg_roundtrip(const ImageBuffer& x, int quality,
                           ChromaSubsampling subsampling = ChromaSubsampling::s420);

}  // namespace vlpoison
