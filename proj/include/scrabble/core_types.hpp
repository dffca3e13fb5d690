#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scrabble/config.hpp"

namespace scrabble {

/// Ordered symbol set plus the CTC blank class, which always sits at index
/// `size()` (after every real symbol).
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::string chars);

  static Alphabet lowercase() { return Alphabet("abcdefghijklmnopqrstuvwxyz"); }

  const std::string& chars() const noexcept { return chars_; }
  int size() const noexcept { return static_cast<int>(chars_.size()); }
  int blank_index() const noexcept { return size(); }
  int class_count() const noexcept { return size() + 1; }

  bool contains(char c) const noexcept { return index_[static_cast<unsigned char>(c)] >= 0; }
  int encode(char c) const;
  char decode(int index) const;

  bool operator==(const Alphabet& other) const noexcept { return chars_ == other.chars_; }

 private:
  std::string chars_;
  std::array<int, 256> index_{};
};

std::vector<int> encode_transcript(std::string_view text, const Alphabet& alphabet);
std::string decode_transcript(const std::vector<int>& indices, const Alphabet& alphabet);

struct UpsampleFactor {
  int height = 1;
  int width = 1;
  bool operator==(const UpsampleFactor&) const = default;
};

/// Spatial and channel contract shared by the three networks.
struct ModelShape {
  int img_height = 32;
  int char_width = 16;
  int filter_rows = 32;
  int filter_cols = 8192;
  int seed_channels = 512;
  int seed_spatial = 4;
  int noise_chunk_dim = 32;
  int n_gen_blocks = 3;
  std::vector<UpsampleFactor> per_block_upsample{{2, 2}, {2, 2}, {2, 1}};

  static ModelShape paper();
  static ModelShape desk();
  // Smallest profile that still satisfies every shape law; used by
  // finite-difference gradient checks.
  static ModelShape tiny();

  // Throws ShapeConfigError naming the first broken identity.
  void validate() const;

  // Channel count entering generator block k; index n_gen_blocks is the
  // count entering the output convolution.
  int generator_channels(int block) const;

  void to_config(KeyValueConfig& cfg, const std::string& prefix = "shape.") const;
  static ModelShape from_config(const KeyValueConfig& cfg, const std::string& prefix = "shape.");

  bool operator==(const ModelShape&) const = default;
};

/// Style code: four chunks, z1 drives the filter bank and z2..z4 modulate
/// the generator blocks in order.
struct NoiseBundle {
  std::array<std::vector<double>, 4> chunks;

  const std::vector<double>& z(int i) const { return chunks.at(static_cast<std::size_t>(i - 1)); }
  std::vector<double>& z(int i) { return chunks.at(static_cast<std::size_t>(i - 1)); }

  static NoiseBundle zeros(int dim);
  static NoiseBundle lerp(const NoiseBundle& a, const NoiseBundle& b, double t);

  bool operator==(const NoiseBundle&) const = default;
};

// Bundle k depends only on (seed, k), so prefixes of longer draws agree.
std::vector<NoiseBundle> sample_noise(std::uint64_t seed, int count, const ModelShape& shape);
NoiseBundle sample_noise_at(std::uint64_t seed, std::uint64_t index, const ModelShape& shape);

/// Row-major grayscale image, values nominally in [-1, 1].
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

struct WordImage {
  GrayImage image;
  int n_chars = 0;
};

struct LabeledSample {
  GrayImage image;
  std::string transcript;
  std::string source_id;
};

/// Has no transcript field: nothing downstream of ingestion can read one.
struct UnlabeledSample {
  GrayImage image;
  std::string source_id;
};

// Deterministic 64-bit seed mixing (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace scrabble
