#include "vlpoison/jpegsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace vlpoison {

namespace {

constexpr std::array<int, 64> kLumaBase = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> kChromaBase = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

// Full-range (JFIF) RGB -> YCbCr, with the 128 offsets folded into the level
// shift: Y - 128, Cb - 128, Cr - 128 all come out centered on zero.
constexpr double kToYcc[3][3] = {{0.299, 0.587, 0.114},
                                 {-0.168735892, -0.331264108, 0.5},
                                 {0.5, -0.418687589, -0.081312411}};
constexpr double kToRgb[3][3] = {{1.0, 0.0, 1.402},
                                 {1.0, -0.344136286, -0.714136286},
                                 {1.0, 1.772, 0.0}};

QuantTable scale_table(const std::array<int, 64>& base, int quality) {
  if (quality < 1 || quality > 100) {
    throw std::invalid_argument("JPEG quality must lie in [1, 100], got " + std::to_string(quality));
  }
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  QuantTable table{};
  for (std::size_t i = 0; i < 64; ++i) {
    const long q = (static_cast<long>(base[i]) * scale + 50) / 100;
    table[i] = static_cast<double>(std::clamp(q, 1L, 255L));
  }
  return table;
}

struct DctMatrix {
  double m[8][8];

  DctMatrix() {
    for (int u = 0; u < 8; ++u) {
      const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) {
        m[u][x] = alpha * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
      }
    }
  }
};

const DctMatrix& dct() {
  static const DctMatrix instance;
  return instance;
}

using Block = std::array<double, 64>;

// out = D * in * D^T
Block dct2(const Block& in) {
  const auto& d = dct().m;
  Block tmp{};
  Block out{};
  for (int u = 0; u < 8; ++u)
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += d[u][y] * in[y * 8 + x];
      tmp[u * 8 + x] = acc;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += tmp[u * 8 + x] * d[v][x];
      out[u * 8 + v] = acc;
    }
  return out;
}

// out = D^T * in * D
Block idct2(const Block& in) {
  const auto& d = dct().m;
  Block tmp{};
  Block out{};
  for (int y = 0; y < 8; ++y)
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += d[u][y] * in[u * 8 + v];
      tmp[y * 8 + v] = acc;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += tmp[y * 8 + v] * d[v][x];
      out[y * 8 + x] = acc;
    }
  return out;
}

int round_up8(int n) { return (n + 7) / 8 * 8; }

// Forward intermediates needed by both passes.
struct Trace {
  int height = 0;
  int width = 0;
  int padded_h = 0;
  int padded_w = 0;
  // Quantized-coefficient inputs (coef / Q) per channel, block-major.
  std::vector<double> scaled[3];
  // Output before the final clamp, channels-last like ImageArray.
  std::vector<double> unclamped;
};

}  // namespace

QuantTable luma_table(int quality) { return scale_table(kLumaBase, quality); }
QuantTable chroma_table(int quality) { return scale_table(kChromaBase, quality); }

double smooth_round(double v) {
  const double r = std::nearbyint(v);
  const double d = v - r;
  return r + 4.0 * d * d * d;
}

double smooth_round_derivative(double v) {
  const double d = v - std::nearbyint(v);
  return 12.0 * d * d;
}

JpegSurrogate::JpegSurrogate(JpegParams params)
    : params_(params), luma_(luma_table(params.quality)), chroma_(chroma_table(params.quality)) {
  if (params.rounding != Rounding::smooth) {
    throw std::invalid_argument("the JPEG surrogate requires smooth rounding");
  }
}

namespace {

Trace run_forward(const ImageArray& x, const QuantTable& luma, const QuantTable& chroma) {
  Trace t;
  t.height = x.height();
  t.width = x.width();
  t.padded_h = round_up8(t.height);
  t.padded_w = round_up8(t.width);
  const std::size_t plane = static_cast<std::size_t>(t.padded_h) * t.padded_w;

  std::vector<double> ycc[3];
  for (auto& p : ycc) p.assign(plane, 0.0);
  for (int py = 0; py < t.padded_h; ++py) {
    const int sy = std::min(py, t.height - 1);
    for (int px = 0; px < t.padded_w; ++px) {
      const int sx = std::min(px, t.width - 1);
      double rgb[3];
      for (int c = 0; c < 3; ++c) rgb[c] = 255.0 * x.at(sy, sx, c);
      for (int k = 0; k < 3; ++k) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) acc += kToYcc[k][c] * rgb[c];
        ycc[k][static_cast<std::size_t>(py) * t.padded_w + px] = k == 0 ? acc - 128.0 : acc;
      }
    }
  }

  const int blocks_x = t.padded_w / 8;
  const int blocks = (t.padded_h / 8) * blocks_x;
  for (int k = 0; k < 3; ++k) {
    const QuantTable& q = k == 0 ? luma : chroma;
    t.scaled[k].resize(static_cast<std::size_t>(blocks) * 64);
    for (int b = 0; b < blocks; ++b) {
      const int by = b / blocks_x * 8;
      const int bx = b % blocks_x * 8;
      Block block{};
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          block[i * 8 + j] = ycc[k][static_cast<std::size_t>(by + i) * t.padded_w + bx + j];
      Block coef = dct2(block);
      for (int i = 0; i < 64; ++i) {
        const double s = coef[i] / q[i];
        t.scaled[k][static_cast<std::size_t>(b) * 64 + i] = s;
        coef[i] = smooth_round(s) * q[i];
      }
      const Block rec = idct2(coef);
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          ycc[k][static_cast<std::size_t>(by + i) * t.padded_w + bx + j] = rec[i * 8 + j];
    }
  }

  t.unclamped.resize(x.size());
  for (int y = 0; y < t.height; ++y) {
    for (int xx = 0; xx < t.width; ++xx) {
      const std::size_t p = static_cast<std::size_t>(y) * t.padded_w + xx;
      const double v[3] = {ycc[0][p] + 128.0, ycc[1][p], ycc[2][p]};
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) acc += kToRgb[c][k] * v[k];
        t.unclamped[x.index(y, xx, c)] = acc / 255.0;
      }
    }
  }
  return t;
}

}  // namespace

ImageArray JpegSurrogate::forward(const ImageArray& x) const {
  if (x.height() <= 0 || x.width() <= 0) throw ShapeError("JPEG surrogate needs a non-empty image");
  Trace t = run_forward(x, luma_, chroma_);
  for (auto& v : t.unclamped) v = std::clamp(v, 0.0, 1.0);
  return ImageArray(x.shape(), std::move(t.unclamped));
}

ImageArray JpegSurrogate::backward(const ImageArray& x, const ImageArray& grad_out) const {
  if (grad_out.shape() != x.shape()) {
    throw ShapeError("JPEG surrogate gradient shape " + to_string(grad_out.shape()) +
                     " does not match input " + to_string(x.shape()));
  }
  const Trace t = run_forward(x, luma_, chroma_);
  const std::size_t plane = static_cast<std::size_t>(t.padded_h) * t.padded_w;

  // Clamp, inverse color transform, and the 1/255 scale.
  std::vector<double> g_ycc[3];
  for (auto& p : g_ycc) p.assign(plane, 0.0);
  for (int y = 0; y < t.height; ++y) {
    for (int xx = 0; xx < t.width; ++xx) {
      double g_rgb[3];
      for (int c = 0; c < 3; ++c) {
        const std::size_t i = x.index(y, xx, c);
        const double u = t.unclamped[i];
        g_rgb[c] = (u >= 0.0 && u <= 1.0) ? grad_out[i] / 255.0 : 0.0;
      }
      const std::size_t p = static_cast<std::size_t>(y) * t.padded_w + xx;
      for (int k = 0; k < 3; ++k) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) acc += kToRgb[c][k] * g_rgb[c];
        g_ycc[k][p] = acc;
      }
    }
  }

  // Blockwise: adjoint of IDCT is DCT and vice versa (orthonormal basis).
  const int blocks_x = t.padded_w / 8;
  const int blocks = (t.padded_h / 8) * blocks_x;
  for (int k = 0; k < 3; ++k) {
    for (int b = 0; b < blocks; ++b) {
      const int by = b / blocks_x * 8;
      const int bx = b % blocks_x * 8;
      Block g{};
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          g[i * 8 + j] = g_ycc[k][static_cast<std::size_t>(by + i) * t.padded_w + bx + j];
      Block g_coef = dct2(g);
      for (int i = 0; i < 64; ++i) {
        // coef' = Q * r(coef / Q)  =>  d coef' / d coef = r'(coef / Q)
        g_coef[i] *= smooth_round_derivative(t.scaled[k][static_cast<std::size_t>(b) * 64 + i]);
      }
      const Block g_block = idct2(g_coef);
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          g_ycc[k][static_cast<std::size_t>(by + i) * t.padded_w + bx + j] = g_block[i * 8 + j];
    }
  }

  // Padding replicates edge pixels, so its adjoint accumulates.
  ImageArray grad(x.shape());
  for (int py = 0; py < t.padded_h; ++py) {
    const int sy = std::min(py, t.height - 1);
    for (int px = 0; px < t.padded_w; ++px) {
      const int sx = std::min(px, t.width - 1);
      const std::size_t p = static_cast<std::size_t>(py) * t.padded_w + px;
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) acc += kToYcc[k][c] * g_ycc[k][p];
        grad.at(sy, sx, c) += 255.0 * acc;
      }
    }
  }
  return grad;
}

ImageArray jpeg_surrogate(const ImageArray& x, const JpegParams& params) {
  return JpegSurrogate(params).forward(x);
}

ImageBuffer jpeg_roundtrip(const ImageBuffer& x, int quality, ChromaSubsampling subsampling) {
  return decode_jpeg(encode_jpeg(x, quality, subsampling), "in-memory JPEG round trip");
}

}  // namespace vlpoison
