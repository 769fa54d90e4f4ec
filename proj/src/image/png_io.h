#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "image/image.h"

namespace canonify {

// Baseline PNG support: 8-bit gray / gray+alpha / RGB / RGBA, no interlacing.
// Alpha is dropped on load; files are written as 8-bit RGB.
ImageU8 decode_png(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_png(const ImageU8& img);

ImageU8 load_png(const std::string& path);
void save_png(const std::string& path, const ImageU8& img);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace canonify
