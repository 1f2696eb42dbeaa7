#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "vlpoison/image.hpp"

namespace vlpoison {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 8-bit conversion: v -> floor(v * 255 + 0.5), i.e. nearest level with ties up.
unsigned char to_byte(double value);

// Reads PNG (8-bit gray, gray+alpha, RGB, RGBA; 16-bit is reduced) or JPEG,
// chosen by file signature. Alpha is dropped, gray is replicated.
ImageBuffer read_image(const std::filesystem::path& path);

// Lossless 8-bit PNG encoding. Output bytes are deterministic for a given image.
std::string encode_png(const ImageBuffer& image);
ImageBuffer decode_png(const std::string& bytes, const std::string& context);

// Writes a PNG. Any extension other than .png is refused, since lossy storage
// destroys the perturbation.
void write_image(const std::filesystem::path& path, const ImageBuffer& image);

bool is_image_file(const std::filesystem::path& path);

}  // namespace vlpoison
