#include "scrabble/toy_corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "scrabble/config.hpp"
#include "scrabble/errors.hpp"
#include "scrabble/image_io.hpp"

namespace scrabble {
namespace {

struct Point {
  double x, y;
};

using Stroke = std::array<Point, 4>;  // cubic Bezier control points in the unit box

constexpr std::uint64_t kGlyphSalt = 0x91f7a3c5d2e4b608ULL;

std::vector<Stroke> glyph_for(char c) {
  std::mt19937_64 rng(mix_seed(kGlyphSalt, static_cast<unsigned char>(c)));
  std::uniform_real_distribution<double> ux(0.1, 0.9), uy(0.05, 0.95);
  std::vector<Stroke> strokes(2 + (rng() % 2));
  for (auto& s : strokes) {
    for (auto& p : s) p = {ux(rng), uy(rng)};
  }
  return strokes;
}

Point bezier(const Stroke& s, double t) {
  const double u = 1.0 - t;
  const double b0 = u * u * u, b1 = 3 * u * u * t, b2 = 3 * u * t * t, b3 = t * t * t;
  return {b0 * s[0].x + b1 * s[1].x + b2 * s[2].x + b3 * s[3].x,
          b0 * s[0].y + b1 * s[1].y + b2 * s[2].y + b3 * s[3].y};
}

void stamp(GrayImage& img, Point c, double radius, double ink) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - radius - 1)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(c.x + radius + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - radius - 1)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(c.y + radius + 1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d = std::hypot(x - c.x, y - c.y);
      const double cov = std::clamp(radius + 0.5 - d, 0.0, 1.0);
      const double v = 1.0 - cov * (1.0 - ink);
      if (v < img.at(y, x)) img.at(y, x) = v;
    }
  }
}

}  // namespace

std::vector<std::string> make_lexicon(const Alphabet& alphabet, int count, int min_len, int max_len,
                                      std::uint64_t seed) {
  if (alphabet.size() == 0 || count <= 0 || min_len < 1 || max_len < min_len) {
    throw ConfigError("invalid lexicon request");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ulen(min_len, max_len), uch(0, alphabet.size() - 1);
  std::set<std::string> seen;
  std::vector<std::string> words;
  int attempts = 0;
  while (static_cast<int>(words.size()) < count && attempts < 100 * count) {
    ++attempts;
    std::string w(static_cast<std::size_t>(ulen(rng)), ' ');
    for (auto& ch : w) ch = alphabet.decode(uch(rng));
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

std::vector<std::string> load_lexicon(const std::filesystem::path& path, const Alphabet& alphabet,
                                      int max_len) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  std::vector<std::string> words;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string w = trim(line);
    if (w.empty()) continue;
    if (max_len > 0 && static_cast<int>(w.size()) > max_len) {
      throw DataError("lexicon " + path.string() + ":" + std::to_string(lineno) + ": word '" + w +
                      "' is longer than " + std::to_string(max_len));
    }
    encode_transcript(w, alphabet);
    words.push_back(std::move(w));
  }
  if (words.empty()) throw DataError("lexicon " + path.string() + " is empty");
  return words;
}

void save_lexicon(const std::filesystem::path& path, const std::vector<std::string>& words) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write lexicon " + path.string());
  for (const auto& w : words) out << w << '\n';
}

GrayImage render_toy_word(const std::string& word, std::uint64_t style_seed, const ToyCorpusOptions& o) {
  std::mt19937_64 rng(style_seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const double radius = uni(0.8, 1.7);
  const double slant = uni(-0.35, 0.35);
  const double baseline = uni(-2.5, 2.5);
  const double glyph_h = o.img_height * uni(0.45, 0.65);
  const double ink = uni(-1.0, -0.6);
  const double margin = 2.0;

  std::vector<double> widths(word.size());
  double total = 2 * margin;
  for (auto& w : widths) total += (w = o.char_width * uni(0.8, 1.15));
  GrayImage img(o.img_height, std::max(1, static_cast<int>(std::lround(total))), 1.0);

  const double mid = o.img_height / 2.0;
  double x_off = margin;
  for (std::size_t i = 0; i < word.size(); ++i) {
    const double jitter = uni(-1.0, 1.0);
    const double top = mid - glyph_h / 2 + baseline + jitter;
    for (const Stroke& s : glyph_for(word[i])) {
      constexpr int kSamples = 40;
      for (int k = 0; k <= kSamples; ++k) {
        const Point g = bezier(s, static_cast<double>(k) / kSamples);
        const double py = top + g.y * glyph_h;
        const double px = x_off + g.x * widths[i] + slant * (mid - py);
        stamp(img, {px, py}, radius, ink);
      }
    }
    x_off += widths[i];
  }
  return img;
}

DatasetManifest make_toy_corpus(const Alphabet& alphabet, int n_samples, const std::vector<std::string>& lexicon,
                                std::uint64_t seed, const std::filesystem::path& out_dir,
                                const ToyCorpusOptions& options) {
  if (n_samples <= 0) throw ConfigError("toy corpus needs at least one sample");
  if (lexicon.empty()) throw ConfigError("toy corpus needs a non-empty lexicon");
  for (const auto& w : lexicon) encode_transcript(w, alphabet);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, lexicon.size() - 1);
  const int n_train = n_samples * 8 / 10;
  const int n_val = n_samples / 10;

  DatasetManifest m;
  m.base_dir = out_dir;
  std::filesystem::create_directories(out_dir / "images");
  for (int i = 0; i < n_samples; ++i) {
    const std::string& word = lexicon[pick(rng)];
    const std::uint64_t style = rng();
    char name[32];
    std::snprintf(name, sizeof name, "images/%06d.png", i);
    write_png(out_dir / name, render_toy_word(word, style, options));
    const Split split = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
    m.entries.push_back({name, word, split});
  }
  m.save(out_dir / "manifest.tsv");
  return m;
}

}  // namespace scrabble
