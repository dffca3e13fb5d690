#include "scrabble/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "scrabble/discriminator.hpp"
#include "scrabble/errors.hpp"
#include "scrabble/generator.hpp"
#include "scrabble/recognizer.hpp"

namespace scrabble {
namespace {

constexpr char kMagic[8] = {'S', 'C', 'R', 'B', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in native order and assumes little-endian hosts");

std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

void check_model(const Checkpoint& ck, const Alphabet& alphabet, const ModelShape& shape,
                 const std::filesystem::path& path) {
  if (ck.alphabet != alphabet.chars()) {
    throw ConfigError("checkpoint " + path.string() + " was trained on alphabet \"" + ck.alphabet +
                      "\", expected \"" + alphabet.chars() + "\"");
  }
  if (!(ck.shape == shape)) {
    throw ConfigError("checkpoint " + path.string() + " has a different model shape");
  }
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : split(s, ',')) out.push_back(std::stoi(part));
  return out;
}

}  // namespace

void Checkpoint::put(const std::vector<const Param*>& params) {
  for (const Param* p : params) tensors[p->name] = Entry{p->shape, p->value};
}

void Checkpoint::get(const std::vector<Param*>& params) const {
  for (Param* p : params) {
    auto it = tensors.find(p->name);
    if (it == tensors.end()) throw ConfigError("checkpoint is missing tensor '" + p->name + "'");
    if (it->second.shape != p->shape) {
      throw ConfigError("checkpoint tensor '" + p->name + "' has shape " + shape_str(it->second.shape) +
                        ", expected " + shape_str(p->shape));
    }
    p->value = it->second.values;
  }
}

void Checkpoint::save(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["version"] = kVersion;
  header["alphabet"] = alphabet;
  KeyValueConfig shape_cfg;
  shape.to_config(shape_cfg, "");
  header["shape"] = shape_cfg.entries();
  header["meta"] = meta;
  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, e] : tensors) {
    table.push_back({{"name", name}, {"shape", e.shape}, {"offset", offset}, {"count", e.values.size()}});
    offset += e.values.size();
  }
  header["tensors"] = table;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, e] : tensors) {
    out.write(reinterpret_cast<const char*>(e.values.data()),
              static_cast<std::streamsize>(e.values.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCheckpoint("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DataError(path.string() + " is not a checkpoint file");
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (version != kVersion) {
    throw DataError("checkpoint " + path.string() + " has unsupported version " + std::to_string(version));
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("truncated checkpoint header in " + path.string());

  Checkpoint ck;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    ck.alphabet = header.at("alphabet").get<std::string>();
    KeyValueConfig shape_cfg;
    for (const auto& [k, v] : header.at("shape").items()) shape_cfg.set(k, v.get<std::string>());
    ck.shape = ModelShape::from_config(shape_cfg, "");
    ck.meta = header.at("meta").get<std::map<std::string, std::string>>();
    for (const auto& t : header.at("tensors")) {
      Entry e;
      e.shape = t.at("shape").get<std::vector<int>>();
      e.values.resize(t.at("count").get<std::size_t>());
      ck.tensors[t.at("name").get<std::string>()] = std::move(e);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw DataError("corrupt checkpoint header in " + path.string() + ": " + ex.what());
  }
  // Payload order matches the (sorted) header order.
  for (auto& [name, e] : ck.tensors) {
    in.read(reinterpret_cast<char*>(e.values.data()),
            static_cast<std::streamsize>(e.values.size() * sizeof(double)));
    if (!in) throw DataError("truncated checkpoint payload in " + path.string());
  }
  return ck;
}

void save_generator(const Generator& g, const std::filesystem::path& path) {
  Checkpoint ck;
  ck.alphabet = g.alphabet().chars();
  ck.shape = g.shape();
  ck.meta["network"] = "G";
  ck.meta["norm"] = to_string(g.norm_mode());
  ck.put(g.params());
  ck.put(g.buffers());
  ck.save(path);
}

Generator load_generator(const std::filesystem::path& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.meta["network"] != "G") throw ConfigError(path.string() + " is not a generator checkpoint");
  Generator g(ck.shape, Alphabet(ck.alphabet), parse_norm_mode(ck.meta["norm"]));
  ck.get(g.params());
  ck.get(g.buffers());
  return g;
}

void load_generator_into(Generator& g, const std::filesystem::path& path) {
  Checkpoint ck = Checkpoint::load(path);
  check_model(ck, g.alphabet(), g.shape(), path);
  if (ck.meta["network"] != "G") throw ConfigError(path.string() + " is not a generator checkpoint");
  ck.get(g.params());
  ck.get(g.buffers());
}

void save_discriminator(const Discriminator& d, const Alphabet& alphabet,
                        const std::filesystem::path& path) {
  Checkpoint ck;
  ck.alphabet = alphabet.chars();
  ck.shape = d.shape();
  ck.meta["network"] = "D";
  ck.put(d.params());
  ck.save(path);
}

void load_discriminator_into(Discriminator& d, const Alphabet& alphabet,
                             const std::filesystem::path& path) {
  Checkpoint ck = Checkpoint::load(path);
  check_model(ck, alphabet, d.shape(), path);
  if (ck.meta["network"] != "D") throw ConfigError(path.string() + " is not a discriminator checkpoint");
  ck.get(d.params());
}

void save_recognizer(const Recognizer& r, const std::filesystem::path& path) {
  Checkpoint ck;
  ck.alphabet = r.alphabet().chars();
  ck.shape = r.shape();
  ck.meta["network"] = "R";
  ck.meta["channels"] = join_ints(r.channels());
  ck.put(r.params());
  ck.save(path);
}

Recognizer load_recognizer(const std::filesystem::path& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.meta["network"] != "R") throw ConfigError(path.string() + " is not a recognizer checkpoint");
  Recognizer r(ck.shape, Alphabet(ck.alphabet), parse_ints(ck.meta["channels"]));
  ck.get(r.params());
  return r;
}

void load_recognizer_into(Recognizer& r, const std::filesystem::path& path) {
  Checkpoint ck = Checkpoint::load(path);
  check_model(ck, r.alphabet(), r.shape(), path);
  if (ck.meta["network"] != "R") throw ConfigError(path.string() + " is not a recognizer checkpoint");
  if (ck.meta["channels"] != join_ints(r.channels())) {
    throw ConfigError("checkpoint " + path.string() + " has different recognizer channels");
  }
  ck.get(r.params());
}

}  // namespace scrabble
