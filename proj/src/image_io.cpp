#include "vlpoison/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <vector>

#include "vlpoison/hashing.hpp"
#include "vlpoison/jpeg_codec.hpp"

namespace vlpoison {

namespace {

struct PngReadState {
  const std::string* bytes;
  std::size_t offset;
};

// libpng reports errors through longjmp. The helpers below keep every C++
// object outside the setjmp regions so no destructor is skipped.
struct PngErrorState {
  char message[256];
};

void png_on_error(png_structp png, png_const_charp message) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof(state->message), "%s", message);
  png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

void png_read_from_string(png_structp png, png_bytep out, png_size_t length) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + length > state->bytes->size()) png_error(png, "truncated PNG data");
  std::memcpy(out, state->bytes->data() + state->offset, length);
  state->offset += length;
}

void png_write_to_string(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void png_flush_noop(png_structp) {}

bool png_write_rows(png_structp png, png_infop info, int width, int height, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

bool png_read_header(png_structp png, png_infop info, png_uint_32* width, png_uint_32* height,
                     png_size_t* rowbytes) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  *width = png_get_image_width(png, info);
  *height = png_get_image_height(png, info);
  *rowbytes = png_get_rowbytes(png, info);
  return true;
}

bool png_read_rows(png_structp png, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

std::string lower_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

unsigned char to_byte(double value) {
  const double scaled = std::floor(std::clamp(value, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0));
}

std::string encode_png(const ImageBuffer& image) {
  const auto rowbytes = static_cast<std::size_t>(image.width()) * kChannels;
  std::vector<unsigned char> pixels(image.values().size());
  std::transform(image.values().begin(), image.values().end(), pixels.begin(), to_byte);
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
  for (std::size_t y = 0; y < rows.size(); ++y) rows[y] = pixels.data() + y * rowbytes;

  std::string out;
  PngErrorState errors{};
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &errors, png_on_error, png_on_warning);
  if (png == nullptr) throw ImageIoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageIoError("png_create_info_struct failed");
  }
  png_set_write_fn(png, &out, png_write_to_string, png_flush_noop);
  const bool ok = png_write_rows(png, info, image.width(), image.height(), rows.data());
  png_destroy_write_struct(&png, &info);
  if (!ok) throw ImageIoError(std::string("PNG encode failed: ") + errors.message);
  return out;
}

ImageBuffer decode_png(const std::string& bytes, const std::string& context) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw ImageIoError(context + ": not a PNG or JPEG file");
  }
  PngErrorState errors{};
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &errors, png_on_error, png_on_warning);
  if (png == nullptr) throw ImageIoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError("png_create_info_struct failed");
  }
  PngReadState state{&bytes, 0};
  png_set_read_fn(png, &state, png_read_from_string);

  png_uint_32 width = 0;
  png_uint_32 height = 0;
  png_size_t rowbytes = 0;
  if (!png_read_header(png, info, &width, &height, &rowbytes)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError(context + ": " + errors.message);
  }
  if (rowbytes != static_cast<std::size_t>(width) * kChannels) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError(context + ": unexpected PNG row layout");
  }
  std::vector<unsigned char> pixels(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (std::size_t y = 0; y < rows.size(); ++y) rows[y] = pixels.data() + y * rowbytes;
  const bool ok = png_read_rows(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw ImageIoError(context + ": " + errors.message);

  std::vector<double> values(pixels.size());
  std::transform(pixels.begin(), pixels.end(), values.begin(),
                 [](unsigned char b) { return b / 255.0; });
  return ImageBuffer(Shape{static_cast<int>(height), static_cast<int>(width)}, std::move(values));
}

ImageBuffer read_image(const std::filesystem::path& path) {
  const std::string bytes = [&] {
    try {
      return read_file(path);
    } catch (const std::runtime_error& e) {
      throw ImageIoError(e.what());
    }
  }();
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8) {
    return decode_jpeg(bytes, path.string());
  }
  return decode_png(bytes, path.string());
}

void write_image(const std::filesystem::path& path, const ImageBuffer& image) {
  if (lower_extension(path) != ".png") {
    throw ImageIoError("refusing to write " + path.string() +
                       ": only lossless .png output is supported");
  }
  write_file_atomic(path, encode_png(image));
}

bool is_image_file(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace vlpoison
