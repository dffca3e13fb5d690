#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scrabble/core_types.hpp"
#include "scrabble/layers.hpp"

namespace scrabble {

class Generator;
class Discriminator;
class Recognizer;

/// Versioned container: an 8-byte magic, a format version, a JSON header
/// (alphabet, model shape, free-form metadata, tensor table) and the raw
/// little-endian float64 payload.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  struct Entry {
    std::vector<int> shape;
    std::vector<double> values;
  };

  std::string alphabet;
  ModelShape shape;
  std::map<std::string, std::string> meta;
  std::map<std::string, Entry> tensors;

  void put(const std::vector<const Param*>& params);
  // Copies stored values into `params`; throws ConfigError when a tensor is
  // missing or its shape differs.
  void get(const std::vector<Param*>& params) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

void save_generator(const Generator& g, const std::filesystem::path& path);
Generator load_generator(const std::filesystem::path& path);
// Refuses (ConfigError) when the alphabet or model shape differ from `g`.
void load_generator_into(Generator& g, const std::filesystem::path& path);

void save_discriminator(const Discriminator& d, const Alphabet& alphabet,
                        const std::filesystem::path& path);
void load_discriminator_into(Discriminator& d, const Alphabet& alphabet,
                             const std::filesystem::path& path);

void save_recognizer(const Recognizer& r, const std::filesystem::path& path);
Recognizer load_recognizer(const std::filesystem::path& path);
void load_recognizer_into(Recognizer& r, const std::filesystem::path& path);

}  // namespace scrabble
