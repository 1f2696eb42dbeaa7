#include "vlpoison/jpeg_codec.hpp"

#include <cstdio>
#include <stdexcept>
#include <csetjmp>
#include <cstdlib>
#include <vector>

// jpeglib.h needs size_t and FILE declared first.
#include <jpeglib.h>

#include "vlpoison/image_io.hpp"

namespace vlpoison {

namespace {

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_on_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

bool compress(JpegErrorManager* err, jpeg_compress_struct* cinfo, const unsigned char* pixels,
              int width, int height, int quality, ChromaSubsampling subsampling,
              unsigned char** out, unsigned long* out_size) {
  if (setjmp(err->jump)) return false;
  jpeg_create_compress(cinfo);
  jpeg_mem_dest(cinfo, out, out_size);
  cinfo->image_width = static_cast<JDIMENSION>(width);
  cinfo->image_height = static_cast<JDIMENSION>(height);
  cinfo->input_components = 3;
  cinfo->in_color_space = JCS_RGB;
  jpeg_set_defaults(cinfo);
  jpeg_set_quality(cinfo, quality, TRUE);
  const int h = subsampling == ChromaSubsampling::s420 ? 2 : 1;
  cinfo->comp_info[0].h_samp_factor = h;
  cinfo->comp_info[0].v_samp_factor = h;
  for (int c = 1; c < 3; ++c) {
    cinfo->comp_info[c].h_samp_factor = 1;
    cinfo->comp_info[c].v_samp_factor = 1;
  }
  cinfo->dct_method = JDCT_ISLOW;
  jpeg_start_compress(cinfo, TRUE);
  const auto stride = static_cast<std::size_t>(width) * 3;
  while (cinfo->next_scanline < cinfo->image_height) {
    auto* row = const_cast<JSAMPROW>(pixels + cinfo->next_scanline * stride);
    jpeg_write_scanlines(cinfo, &row, 1);
  }
  jpeg_finish_compress(cinfo);
  return true;
}

bool read_header(JpegErrorManager* err, jpeg_decompress_struct* cinfo, const unsigned char* data,
                 unsigned long size) {
  if (setjmp(err->jump)) return false;
  jpeg_create_decompress(cinfo);
  jpeg_mem_src(cinfo, data, size);
  jpeg_read_header(cinfo, TRUE);
  cinfo->out_color_space = JCS_RGB;
  cinfo->dct_method = JDCT_ISLOW;
  jpeg_start_decompress(cinfo);
  return true;
}

bool read_pixels(JpegErrorManager* err, jpeg_decompress_struct* cinfo, unsigned char* pixels) {
  if (setjmp(err->jump)) return false;
  const auto stride = static_cast<std::size_t>(cinfo->output_width) * 3;
  while (cinfo->output_scanline < cinfo->output_height) {
    JSAMPROW row = pixels + cinfo->output_scanline * stride;
    jpeg_read_scanlines(cinfo, &row, 1);
  }
  jpeg_finish_decompress(cinfo);
  return true;
}

}  // namespace

std::string encode_jpeg(const ImageBuffer& image, int quality, ChromaSubsampling subsampling) {
  if (quality < 1 || quality > 100) {
    throw std::invalid_argument("JPEG quality must lie in [1, 100], got " + std::to_string(quality));
  }
  std::vector<unsigned char> pixels(image.values().size());
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = to_byte(image.values()[i]);

  jpeg_compress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_on_error;
  err.base.emit_message = jpeg_silent;
  unsigned char* out = nullptr;
  unsigned long out_size = 0;
  const bool ok = compress(&err, &cinfo, pixels.data(), image.width(), image.height(), quality,
                           subsampling, &out, &out_size);
  jpeg_destroy_compress(&cinfo);
  std::string bytes;
  if (ok && out != nullptr) bytes.assign(reinterpret_cast<const char*>(out), out_size);
  std::free(out);
  if (!ok) throw ImageIoError(std::string("JPEG encode failed: ") + err.message);
  return bytes;
}

ImageBuffer decode_jpeg(const std::string& bytes, const std::string& context) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_on_error;
  err.base.emit_message = jpeg_silent;
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (!read_header(&err, &cinfo, data, static_cast<unsigned long>(bytes.size()))) {
    jpeg_destroy_decompress(&cinfo);
    throw ImageIoError(context + ": " + err.message);
  }
  const int width = static_cast<int>(cinfo.output_width);
  const int height = static_cast<int>(cinfo.output_height);
  std::vector<unsigned char> pixels(static_cast<std::size_t>(width) * height * 3);
  const bool ok = read_pixels(&err, &cinfo, pixels.data());
  jpeg_destroy_decompress(&cinfo);
  if (!ok) throw ImageIoError(context + ": " + err.message);
  std::vector<double> values(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) values[i] = pixels[i] / 255.0;
  return ImageBuffer(Shape{height, width}, std::move(values));
}

}  // namespace vlpoison
