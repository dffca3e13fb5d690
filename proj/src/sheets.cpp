#include "scrabble/sheets.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <random>

#include "scrabble/errors.hpp"
#include "scrabble/generator.hpp"
#include "scrabble/image_io.hpp"

namespace scrabble {

std::uint64_t SampleSheet::layout_hash() const {
  std::uint64_t h = mix_seed(texts.size(), rows.size());
  for (const auto& t : texts) {
    for (char c : t) h = mix_seed(h, static_cast<unsigned char>(c));
    h = mix_seed(h, 0xff);
  }
  for (const auto& r : rows)
    for (const auto& chunk : r.chunks)
      for (double v : chunk) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = mix_seed(h, bits);
      }
  return h;
}

GrayImage compose_grid(const std::vector<std::vector<GrayImage>>& cells, int gutter) {
  if (cells.empty() || cells[0].empty()) throw ConfigError("sample sheet needs at least one cell");
  const std::size_t cols = cells[0].size();
  std::vector<int> col_w(cols, 0);
  std::vector<int> row_h(cells.size(), 0);
  for (std::size_t r = 0; r < cells.size(); ++r) {
    if (cells[r].size() != cols) throw ConfigError("sample sheet rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) {
      col_w[c] = std::max(col_w[c], cells[r][c].width);
      row_h[r] = std::max(row_h[r], cells[r][c].height);
    }
  }
  const int width = std::accumulate(col_w.begin(), col_w.end(), 0) + gutter * static_cast<int>(cols + 1);
  const int height = std::accumulate(row_h.begin(), row_h.end(), 0) + gutter * static_cast<int>(cells.size() + 1);
  GrayImage out(height, width, 0.0);
  int y0 = gutter;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    int x0 = gutter;
    for (std::size_t c = 0; c < cols; ++c) {
      const GrayImage& cell = cells[r][c];
      for (int y = 0; y < row_h[r]; ++y)
        for (int x = 0; x < col_w[c]; ++x)
          out.at(y0 + y, x0 + x) = (y < cell.height && x < cell.width) ? cell.at(y, x) : 1.0;
      x0 += col_w[c] + gutter;
    }
    y0 += row_h[r] + gutter;
  }
  return out;
}

SampleSheet render_sheet(const Generator& g, const std::vector<std::string>& texts,
                         const std::vector<NoiseBundle>& rows) {
  SampleSheet sheet;
  sheet.texts = texts;
  sheet.rows = rows;
  for (const auto& z : rows) {
    std::vector<GrayImage> line;
    for (const auto& t : texts) line.push_back(g.generate(t, z).image);
    sheet.cells.push_back(std::move(line));
  }
  sheet.composite = compose_grid(sheet.cells);
  return sheet;
}

SampleSheet interpolation_sheet(const Generator& g, const std::vector<std::string>& texts,
                                const NoiseBundle& a, const NoiseBundle& b, int steps) {
  if (steps < 2) throw ConfigError("interpolation needs at least 2 steps");
  std::vector<NoiseBundle> rows;
  for (int k = 0; k < steps; ++k) rows.push_back(NoiseBundle::lerp(a, b, static_cast<double>(k) / (steps - 1)));
  return render_sheet(g, texts, rows);
}

double style_variance(const SampleSheet& sheet) {
  if (sheet.cells.size() < 2) return 0.0;
  const std::size_t rows = sheet.cells.size();
  double total = 0.0;
  for (std::size_t c = 0; c < sheet.texts.size(); ++c) {
    const std::size_t n = sheet.cells[0][c].pixels.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mean = 0.0;
      for (std::size_t r = 0; r < rows; ++r) mean += sheet.cells[r][c].pixels[i];
      mean /= static_cast<double>(rows);
      double var = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = sheet.cells[r][c].pixels[i] - mean;
        var += d * d;
      }
      acc += var / static_cast<double>(rows);
    }
    total += n ? acc / static_cast<double>(n) : 0.0;
  }
  return total / static_cast<double>(sheet.texts.size());
}

std::vector<std::string> pick_sheet_texts(const std::vector<std::string>& lexicon, int count,
                                          std::uint64_t seed) {
  std::vector<std::string> words = lexicon;
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  std::mt19937_64 rng(mix_seed(seed, 0x5eed));
  std::shuffle(words.begin(), words.end(), rng);
  if (static_cast<int>(words.size()) > count) words.resize(static_cast<std::size_t>(count));
  return words;
}

void write_sheet(const std::filesystem::path& path, const SampleSheet& sheet) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_png(path, sheet.composite);
}

}  // namespace scrabble
