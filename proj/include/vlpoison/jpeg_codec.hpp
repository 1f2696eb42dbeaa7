#pragma once

#include <string>

#include "vlpoison/image.hpp"

namespace vlpoison {

enum class ChromaSubsampling { s444, s420 };

// Baseline JPEG via libjpeg. Pixels are converted to 8 bits first.
std::string encode_jpeg(const ImageBuffer& image, int quality,
                        ChromaSubsampling subsampling = ChromaSubsampling::s420);
ImageBuffer decode_jpeg(const std::string& bytes, const std::string& context);

}  // namespace vlpoison
