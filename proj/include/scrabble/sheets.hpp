#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scrabble/core_types.hpp"

namespace scrabble {

class Generator;

/// A grid of generated words: one row per style code, one column per text.
struct SampleSheet {
  std::vector<std::string> texts;
  std::vector<NoiseBundle> rows;
  std::vector<std::vector<GrayImage>> cells;  // [row][column]
  GrayImage composite;

  // Identifies the text list and noise rows, not the pixels.
  std::uint64_t layout_hash() const;
};

// Lays cells out on a mid-gray canvas with `gutter` px between them. Each
// column is as wide as its widest cell; narrower cells are left-aligned
// on white.
GrayImage compose_grid(const std::vector<std::vector<GrayImage>>& cells, int gutter = 2);

// Evaluation-mode rendering, so the sheet is a pure function of the
// generator parameters, texts and rows.
SampleSheet render_sheet(const Generator& g, const std::vector<std::string>& texts,
                         const std::vector<NoiseBundle>& rows);

// One column per word; row k holds lerp(a, b, k / (steps - 1)).
SampleSheet interpolation_sheet(const Generator& g, const std::vector<std::string>& texts,
                                const NoiseBundle& a, const NoiseBundle& b, int steps);

// Per column, the variance across rows of every pixel, averaged over
// pixels and then over columns. Zero means every row looks the same.
double style_variance(const SampleSheet& sheet);

// Deterministic pick of `count` distinct lexicon words for sheet columns.
std::vector<std::string> pick_sheet_texts(const std::vector<std::string>& lexicon, int count,
                                          std::uint64_t seed);

void write_sheet(const std::filesystem::path& path, const SampleSheet& sheet);

}  // namespace scrabble
