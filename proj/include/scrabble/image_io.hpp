#pragma once

#include <filesystem>

#include "scrabble/core_types.hpp"

namespace scrabble {

// 8-bit grayscale PNG <-> [-1, 1] images: pixel / 127.5 - 1 on read,
// round((v + 1) * 127.5) clamped to [0, 255] on write. Colour or 16-bit
// files are converted to 8-bit gray on read.
GrayImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const GrayImage& image);

std::uint8_t to_byte(double v);
double from_byte(std::uint8_t b);

}  // namespace scrabble
