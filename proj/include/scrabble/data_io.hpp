#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scrabble/core_types.hpp"

namespace scrabble {

enum class Split { Train, Val, Test };

Split parse_split(const std::string& text);
const char* to_string(Split split);

struct ManifestEntry {
  std::string image_path;  // relative paths resolve against the manifest's directory
  std::string transcript;  // empty => unlabeled
  Split split = Split::Train;
};

/// UTF-8 tab-separated manifest: `path <TAB> transcript <TAB> split` per
/// line, `#` comments allowed.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  // Checks that files exist and that no image appears under two splits.
  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::filesystem::path resolve(const ManifestEntry& e) const;
};

struct IngestOptions {
  int img_height = 32;
  int char_width = 16;
  // Force labeled images to char_width px per character (GAN training).
  bool supervised_rescale = false;
};

struct Dataset {
  std::vector<LabeledSample> labeled;
  std::vector<UnlabeledSample> unlabeled;
};

// Loads the entries of `split` (all splits when empty). Entries with a
// transcript become LabeledSamples after alphabet validation; entries
// without one become UnlabeledSamples.
Dataset ingest(const DatasetManifest& manifest, const Alphabet& alphabet,
               const IngestOptions& options, std::optional<Split> split = std::nullopt);

// Treats every entry as unlabeled. Transcripts are not read, so they may
// hold anything, including symbols outside the alphabet.
std::vector<UnlabeledSample> ingest_unlabeled(const DatasetManifest& manifest,
                                              const IngestOptions& options,
                                              std::optional<Split> split = std::nullopt);

// Height-normalizing resize (aspect preserved) of one image.
GrayImage normalize_height(const GrayImage& image, int img_height);
// Bilinear resize with half-pixel centres.
GrayImage resize_bilinear(const GrayImage& image, int height, int width);

struct AffineRanges {
  double rotation_deg = 0.0;  // uniform in [-r, r]
  double shear_deg = 0.0;     // uniform in [-s, s]
  double scale_min = 1.0;
  double scale_max = 1.0;
  double translate_x = 0.0;  // pixels, uniform in [-t, t]
  double translate_y = 0.0;

  static AffineRanges identity() { return {}; }
  static AffineRanges mild() { return {3.0, 10.0, 0.9, 1.1, 2.0, 1.5}; }
};

// One random affine map about the image centre; uncovered pixels are set
// to the +1 background. Deterministic in (seed, ranges).
GrayImage affine_augment(const GrayImage& image, std::uint64_t seed, const AffineRanges& ranges);

}  // namespace scrabble
