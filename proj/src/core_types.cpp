#include "scrabble/core_types.hpp"

#include <random>

#include "scrabble/errors.hpp"

namespace scrabble {

Alphabet::Alphabet(std::string chars) : chars_(std::move(chars)) {
  index_.fill(-1);
  if (chars_.empty()) throw ConfigError("alphabet must not be empty");
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    auto slot = static_cast<unsigned char>(chars_[i]);
    if (index_[slot] >= 0) {
      throw ConfigError(std::string("alphabet contains duplicate symbol '") + chars_[i] + "'");
    }
    index_[slot] = static_cast<int>(i);
  }
}

int Alphabet::encode(char c) const {
  int idx = index_[static_cast<unsigned char>(c)];
  if (idx < 0) throw UnknownCharacter(0, c);
  return idx;
}

char Alphabet::decode(int index) const {
  if (index < 0 || index >= size()) {
    throw DataError("class index " + std::to_string(index) + " is not a symbol of the alphabet");
  }
  return chars_[static_cast<std::size_t>(index)];
}

std::vector<int> encode_transcript(std::string_view text, const Alphabet& alphabet) {
  if (text.empty()) throw DataError("transcript must not be empty");
  std::vector<int> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!alphabet.contains(text[i])) throw UnknownCharacter(i, text[i]);
    out.push_back(alphabet.encode(text[i]));
  }
  return out;
}

std::string decode_transcript(const std::vector<int>& indices, const Alphabet& alphabet) {
  std::string out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(alphabet.decode(i));
  return out;
}

ModelShape ModelShape::paper() { return ModelShape{}; }

ModelShape ModelShape::desk() {
  ModelShape s;
  s.filter_rows = 16;
  s.filter_cols = 512;
  s.seed_channels = 32;
  s.noise_chunk_dim = 16;
  return s;
}

ModelShape ModelShape::tiny() {
  ModelShape s;
  s.filter_rows = 4;
  s.filter_cols = 128;
  s.seed_channels = 8;
  s.noise_chunk_dim = 4;
  return s;
}

void ModelShape::validate() const {
  auto fail = [](const std::string& msg) { throw ShapeConfigError("invalid model shape: " + msg); };
  if (img_height <= 0 || char_width <= 0 || filter_rows <= 0 || filter_cols <= 0 ||
      seed_channels <= 0 || seed_spatial <= 0 || noise_chunk_dim <= 0 || n_gen_blocks <= 0) {
    fail("all sizes must be positive");
  }
  if (static_cast<int>(per_block_upsample.size()) != n_gen_blocks) {
    fail("per_block_upsample has " + std::to_string(per_block_upsample.size()) +
         " entries for " + std::to_string(n_gen_blocks) + " blocks");
  }
  long long hprod = 1;
  long long wprod = 1;
  for (const auto& f : per_block_upsample) {
    if (f.height <= 0 || f.width <= 0) fail("upsample factors must be positive");
    hprod *= f.height;
    wprod *= f.width;
  }
  if (img_height != seed_spatial * hprod) {
    fail("img_height " + std::to_string(img_height) + " != seed_spatial * height factors (" +
         std::to_string(seed_spatial * hprod) + ")");
  }
  if (char_width != seed_spatial * wprod) {
    fail("char_width " + std::to_string(char_width) + " != seed_spatial * width factors (" +
         std::to_string(seed_spatial * wprod) + ")");
  }
  if (static_cast<long long>(filter_cols) !=
      static_cast<long long>(seed_channels) * seed_spatial * seed_spatial) {
    fail("filter_cols " + std::to_string(filter_cols) + " != seed_channels * seed_spatial^2 (" +
         std::to_string(seed_channels * seed_spatial * seed_spatial) + ")");
  }
  if (filter_rows != noise_chunk_dim) {
    fail("filter_rows " + std::to_string(filter_rows) + " != noise_chunk_dim " +
         std::to_string(noise_chunk_dim));
  }
  if (seed_channels % (1 << n_gen_blocks) != 0) {
    fail("seed_channels must be divisible by 2^n_gen_blocks for the halving channel schedule");
  }
}

int ModelShape::generator_channels(int block) const { return seed_channels >> block; }

void ModelShape::to_config(KeyValueConfig& cfg, const std::string& prefix) const {
  cfg.set(prefix + "img_height", img_height);
  cfg.set(prefix + "char_width", char_width);
  cfg.set(prefix + "filter_rows", filter_rows);
  cfg.set(prefix + "filter_cols", filter_cols);
  cfg.set(prefix + "seed_channels", seed_channels);
  cfg.set(prefix + "seed_spatial", seed_spatial);
  cfg.set(prefix + "noise_chunk_dim", noise_chunk_dim);
  cfg.set(prefix + "n_gen_blocks", n_gen_blocks);
  std::string ups;
  for (std::size_t i = 0; i < per_block_upsample.size(); ++i) {
    if (i) ups += ',';
    ups += std::to_string(per_block_upsample[i].height) + "x" +
           std::to_string(per_block_upsample[i].width);
  }
  cfg.set(prefix + "per_block_upsample", ups);
}

ModelShape ModelShape::from_config(const KeyValueConfig& cfg, const std::string& prefix) {
  ModelShape base = ModelShape::desk();
  if (auto profile = cfg.find(prefix + "profile")) {
    if (*profile == "paper") {
      base = ModelShape::paper();
    } else if (*profile == "desk") {
      base = ModelShape::desk();
    } else if (*profile == "tiny") {
      base = ModelShape::tiny();
    } else {
      throw ConfigError("unknown shape profile '" + *profile + "'");
    }
  }
  ModelShape s = base;
  auto geti = [&](const char* key, int fallback) {
    return static_cast<int>(cfg.get_int(prefix + key, fallback));
  };
  s.img_height = geti("img_height", base.img_height);
  s.char_width = geti("char_width", base.char_width);
  s.filter_rows = geti("filter_rows", base.filter_rows);
  s.filter_cols = geti("filter_cols", base.filter_cols);
  s.seed_channels = geti("seed_channels", base.seed_channels);
  s.seed_spatial = geti("seed_spatial", base.seed_spatial);
  s.noise_chunk_dim = geti("noise_chunk_dim", base.noise_chunk_dim);
  s.n_gen_blocks = geti("n_gen_blocks", base.n_gen_blocks);
  if (auto ups = cfg.find(prefix + "per_block_upsample")) {
    s.per_block_upsample.clear();
    for (const auto& item : split(*ups, ',')) {
      auto parts = split(trim(item), 'x');
      if (parts.size() != 2) throw ConfigError("bad upsample factor '" + item + "'");
      try {
        s.per_block_upsample.push_back({std::stoi(parts[0]), std::stoi(parts[1])});
      } catch (const std::exception&) {
        throw ConfigError("bad upsample factor '" + item + "'");
      }
    }
  }
  s.validate();
  return s;
}

NoiseBundle NoiseBundle::zeros(int dim) {
  NoiseBundle b;
  for (auto& c : b.chunks) c.assign(static_cast<std::size_t>(dim), 0.0);
  return b;
}

NoiseBundle NoiseBundle::lerp(const NoiseBundle& a, const NoiseBundle& b, double t) {
  NoiseBundle out = a;
  for (std::size_t k = 0; k < 4; ++k) {
    if (a.chunks[k].size() != b.chunks[k].size()) {
      throw ConfigError("cannot interpolate noise bundles of different dimension");
    }
    for (std::size_t i = 0; i < a.chunks[k].size(); ++i) {
      out.chunks[k][i] = (1.0 - t) * a.chunks[k][i] + t * b.chunks[k][i];
    }
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

NoiseBundle sample_noise_at(std::uint64_t seed, std::uint64_t index, const ModelShape& shape) {
  std::mt19937_64 rng(mix_seed(seed, index));
  std::normal_distribution<double> normal(0.0, 1.0);
  NoiseBundle b;
  for (auto& chunk : b.chunks) {
    chunk.resize(static_cast<std::size_t>(shape.noise_chunk_dim));
    for (auto& v : chunk) v = normal(rng);
  }
  return b;
}

std::vector<NoiseBundle> sample_noise(std::uint64_t seed, int count, const ModelShape& shape) {
  if (count < 1) throw ConfigError("sample_noise needs count >= 1");
  std::vector<NoiseBundle> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(sample_noise_at(seed, static_cast<std::uint64_t>(i), shape));
  return out;
}

}  // namespace scrabble
