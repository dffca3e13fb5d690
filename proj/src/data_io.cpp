#include "scrabble/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "scrabble/config.hpp"
#include "scrabble/errors.hpp"
#include "scrabble/image_io.hpp"

namespace scrabble {

Split parse_split(const std::string& text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  throw DataError("unknown split '" + text + "' (expected train, val or test)");
}

const char* to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::map<std::string, Split> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw DataError("manifest " + path.string() + ":" + std::to_string(lineno) +
                      ": expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    ManifestEntry e{fields[0], fields[1], parse_split(fields[2])};
    if (e.image_path.empty()) {
      throw DataError("manifest " + path.string() + ":" + std::to_string(lineno) + ": empty path");
    }
    auto [it, inserted] = seen.emplace(e.image_path, e.split);
    if (!inserted && it->second != e.split) {
      throw DataError("manifest " + path.string() + ": " + e.image_path + " appears in both " +
                      to_string(it->second) + " and " + to_string(e.split));
    }
    if (!std::filesystem::exists(m.resolve(e))) throw UnreadableImage(m.resolve(e).string(), "no such file");
    m.entries.push_back(std::move(e));
  }
  return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& e : entries) {
    if (e.transcript.find('\t') != std::string::npos || e.transcript.find('\n') != std::string::npos) {
      throw DataError("transcript for " + e.image_path + " contains a tab or newline");
    }
    out << e.image_path << '\t' << e.transcript << '\t' << to_string(e.split) << '\n';
  }
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  std::filesystem::path p(e.image_path);
  return p.is_absolute() ? p : base_dir / p;
}

GrayImage resize_bilinear(const GrayImage& image, int height, int width) {
  if (height <= 0 || width <= 0) throw DataError("resize target must be positive");
  if (image.height == height && image.width == width) return image;
  GrayImage out(height, width);
  const double sy = static_cast<double>(image.height) / height;
  const double sx = static_cast<double>(image.width) / width;
  for (int y = 0; y < height; ++y) {
    double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      const double top = image.at(y0, x0) * (1.0 - wx) + image.at(y0, x1) * wx;
      const double bot = image.at(y1, x0) * (1.0 - wx) + image.at(y1, x1) * wx;
      out.at(y, x) = top * (1.0 - wy) + bot * wy;
    }
  }
  return out;
}

GrayImage normalize_height(const GrayImage& image, int img_height) {
  const int w = std::max(1, static_cast<int>(std::lround(static_cast<double>(image.width) * img_height /
                                                         image.height)));
  return resize_bilinear(image, img_height, w);
}

namespace {

bool wanted(const ManifestEntry& e, std::optional<Split> split) { return !split || e.split == *split; }

GrayImage load_image(const DatasetManifest& m, const ManifestEntry& e) {
  GrayImage img = read_png(m.resolve(e));
  if (img.height <= 0 || img.width <= 0) throw UnreadableImage(m.resolve(e).string(), "empty image");
  return img;
}

}  // namespace

Dataset ingest(const DatasetManifest& manifest, const Alphabet& alphabet, const IngestOptions& options,
               std::optional<Split> split) {
  Dataset ds;
  for (const auto& e : manifest.entries) {
    if (!wanted(e, split)) continue;
    if (e.transcript.empty()) {
      ds.unlabeled.push_back({normalize_height(load_image(manifest, e), options.img_height), e.image_path});
      continue;
    }
    encode_transcript(e.transcript, alphabet);
    GrayImage img = load_image(manifest, e);
    if (options.supervised_rescale) {
      img = resize_bilinear(img, options.img_height,
                            options.char_width * static_cast<int>(e.transcript.size()));
    } else {
      img = normalize_height(img, options.img_height);
    }
    ds.labeled.push_back({std::move(img), e.transcript, e.image_path});
  }
  return ds;
}

std::vector<UnlabeledSample> ingest_unlabeled(const DatasetManifest& manifest, const IngestOptions& options,
                                              std::optional<Split> split) {
  std::vector<UnlabeledSample> out;
  for (const auto& e : manifest.entries) {
    if (!wanted(e, split)) continue;
    out.push_back({normalize_height(load_image(manifest, e), options.img_height), e.image_path});
  }
  return out;
}

GrayImage affine_augment(const GrayImage& image, std::uint64_t seed, const AffineRanges& r) {
  if (r.scale_min <= 0.0 || r.scale_max < r.scale_min || r.rotation_deg < 0.0 || r.shear_deg < 0.0 ||
      r.translate_x < 0.0 || r.translate_y < 0.0) {
    throw ConfigError("invalid affine augmentation ranges");
  }
  std::mt19937_64 rng(seed);
  auto sym = [&](double half) {
    return std::uniform_real_distribution<double>(-half, half)(rng);
  };
  const double deg = std::numbers::pi / 180.0;
  const double rot = sym(r.rotation_deg) * deg;
  const double shear = sym(r.shear_deg) * deg;
  const double scale = std::uniform_real_distribution<double>(r.scale_min, r.scale_max)(rng);
  const double tx = sym(r.translate_x);
  const double ty = sym(r.translate_y);
  if (rot == 0.0 && shear == 0.0 && scale == 1.0 && tx == 0.0 && ty == 0.0) return image;

  // Forward map: p' = c + t + s * R * Sh * (p - c), with Sh a horizontal shear.
  const double c = std::cos(rot), s = std::sin(rot), k = std::tan(shear);
  const double a00 = scale * c, a01 = scale * (c * k - s);
  const double a10 = scale * s, a11 = scale * (s * k + c);
  const double det = a00 * a11 - a01 * a10;
  const double i00 = a11 / det, i01 = -a01 / det, i10 = -a10 / det, i11 = a00 / det;
  const double cx = (image.width - 1) / 2.0, cy = (image.height - 1) / 2.0;

  GrayImage out(image.height, image.width, 1.0);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double dx = x - cx - tx, dy = y - cy - ty;
      const double sx = cx + i00 * dx + i01 * dy;
      const double sy = cy + i10 * dx + i11 * dy;
      if (sx < -0.5 || sy < -0.5 || sx > image.width - 0.5 || sy > image.height - 0.5) continue;
      auto px = [&](int yy, int xx) {
        if (yy < 0 || xx < 0 || yy >= image.height || xx >= image.width) return 1.0;
        return image.at(yy, xx);
      };
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const double wx = sx - x0, wy = sy - y0;
      const double top = px(y0, x0) * (1.0 - wx) + px(y0, x0 + 1) * wx;
      const double bot = px(y0 + 1, x0) * (1.0 - wx) + px(y0 + 1, x0 + 1) * wx;
      out.at(y, x) = top * (1.0 - wy) + bot * wy;
    }
  }
  return out;
}

}  // namespace scrabble
