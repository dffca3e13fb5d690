#include "scrabble/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "scrabble/errors.hpp"

namespace scrabble {

std::uint8_t to_byte(double v) {
  const double b = std::round((v + 1.0) * 127.5);
  if (!(b > 0.0)) return 0;
  if (b >= 255.0) return 255;
  return static_cast<std::uint8_t>(b);
}

double from_byte(std::uint8_t b) { return static_cast<double>(b) / 127.5 - 1.0; }

GrayImage read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw UnreadableImage(path.string(), "no such file");
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw UnreadableImage(path.string(), img.message);
  }
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    std::string why = img.message;
    png_image_free(&img);
    throw UnreadableImage(path.string(), why);
  }
  GrayImage out(static_cast<int>(img.height), static_cast<int>(img.width));
  for (std::size_t i = 0; i < buf.size(); ++i) out.pixels[i] = from_byte(buf[i]);
  return out;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  if (image.width <= 0 || image.height <= 0) throw DataError("cannot write an empty image");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::vector<std::uint8_t> buf(image.pixels.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_byte(image.pixels[i]);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

}  // namespace scrabble
