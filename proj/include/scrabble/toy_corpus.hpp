#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scrabble/core_types.hpp"
#include "scrabble/data_io.hpp"

namespace scrabble {

struct ToyCorpusOptions {
  int img_height = 32;
  int char_width = 16;
};

// Random words of length [min_len, max_len] over the alphabet, without
// duplicates (as far as the alphabet allows).
std::vector<std::string> make_lexicon(const Alphabet& alphabet, int count, int min_len, int max_len,
                                      std::uint64_t seed);

// One lexicon word per line; blank lines and surrounding whitespace are
// ignored. Words longer than max_len are rejected with DataError.
std::vector<std::string> load_lexicon(const std::filesystem::path& path, const Alphabet& alphabet,
                                      int max_len = 0);
void save_lexicon(const std::filesystem::path& path, const std::vector<std::string>& words);

// Renders `word` as spline strokes. Glyph skeletons depend only on the
// character, style jitter (thickness, slant, baseline, widths, ink) on
// `style_seed`.
GrayImage render_toy_word(const std::string& word, std::uint64_t style_seed,
                          const ToyCorpusOptions& options = {});

// Writes out_dir/images/NNNNNN.png and out_dir/manifest.tsv. Sample i
// takes lexicon word uniformly at random; the first 80% of samples go to
// train, the next 10% to val and the rest to test.
DatasetManifest make_toy_corpus(const Alphabet& alphabet, int n_samples,
                                const std::vector<std::string>& lexicon, std::uint64_t seed,
                                const std::filesystem::path& out_dir, const ToyCorpusOptions& options = {});

}  // namespace scrabble
