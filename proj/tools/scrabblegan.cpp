// Command-line entry point: toy-corpus | train | synth | eval |
// htr-experiment | ablate-alpha.
//
// Every subcommand takes --config FILE and repeatable --set key=value;
// dedicated flags are shorthands for config keys and win over both. The
// fully materialized configuration is printed before work starts.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "scrabble/checkpoint.hpp"
#include "scrabble/data_io.hpp"
#include "scrabble/errors.hpp"
#include "scrabble/experiments.hpp"
#include "scrabble/generator.hpp"
#include "scrabble/image_io.hpp"
#include "scrabble/recognizer.hpp"
#include "scrabble/sheets.hpp"
#include "scrabble/toy_corpus.hpp"
#include "scrabble/training.hpp"

namespace fs = std::filesystem;
using namespace scrabble;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  // Flag overrides, applied last.
  KeyValueConfig flags;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value configuration file");
  cmd->add_option("--set", c.sets, "override one key (key=value), repeatable");
}

// Registers a flag that overrides `key` when given.
template <typename T>
void flag(CLI::App* cmd, Common& c, const std::string& name, const std::string& key, const std::string& help) {
  cmd->add_option_function<T>(name, [&c, key](const T& v) { c.flags.set(key, v); }, help + " [" + key + "]");
}

KeyValueConfig gather(const Common& c) {
  KeyValueConfig cfg;
  if (!c.config_path.empty()) cfg = KeyValueConfig::load(c.config_path);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got \"" + s + "\"");
    cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  cfg.merge(c.flags);
  return cfg;
}

void dump(const KeyValueConfig& cfg) {
  std::cout << "# effective config\n" << cfg.to_string() << "# end config\n" << std::flush;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Accepts a checkpoint file or a ckpt/step_<N> directory holding `net`.
fs::path checkpoint_file(const std::string& path, const char* net) {
  if (path.empty()) throw ConfigError(std::string("a ") + net + " checkpoint path is required");
  const fs::path p(path);
  if (fs::is_directory(p)) return p / net;
  return p;
}

std::vector<std::string> read_words(const fs::path& path, const Alphabet& alphabet) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open words file " + path.string());
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) {
    const std::string w = trim(line);
    if (w.empty()) continue;
    try {
      encode_transcript(w, alphabet);
    } catch (const UnknownCharacter& e) {
      throw DataError("word \"" + w + "\" (" + path.string() + " line " + std::to_string(words.size() + 1) +
                      "): " + e.what());
    }
    words.push_back(w);
  }
  if (words.empty()) throw DataError("words file " + path.string() + " is empty");
  return words;
}

// ---- toy-corpus ----------------------------------------------------------

struct CorpusSettings {
  std::string alphabet = "abcde";
  std::string lexicon;
  int lexicon_size = 200;
  int min_len = 2;
  int max_len = 6;
  int n = 2000;
  long long seed = 1;
  std::string out = "toy_corpus";
  int img_height = 32;
  int char_width = 16;

  KeyValueConfig to_config() const {
    KeyValueConfig c;
    c.set("corpus.alphabet", alphabet);
    c.set("corpus.lexicon", lexicon);
    c.set("corpus.lexicon_size", lexicon_size);
    c.set("corpus.min_len", min_len);
    c.set("corpus.max_len", max_len);
    c.set("corpus.n", n);
    c.set("corpus.seed", seed);
    c.set("corpus.out", out);
    c.set("corpus.img_height", img_height);
    c.set("corpus.char_width", char_width);
    return c;
  }
  static CorpusSettings from_config(const KeyValueConfig& c) {
    CorpusSettings s;
    s.alphabet = c.get_string("corpus.alphabet", s.alphabet);
    s.lexicon = c.get_string("corpus.lexicon", s.lexicon);
    s.lexicon_size = static_cast<int>(c.get_int("corpus.lexicon_size", s.lexicon_size));
    s.min_len = static_cast<int>(c.get_int("corpus.min_len", s.min_len));
    s.max_len = static_cast<int>(c.get_int("corpus.max_len", s.max_len));
    s.n = static_cast<int>(c.get_int("corpus.n", s.n));
    s.seed = c.get_int("corpus.seed", s.seed);
    s.out = c.get_string("corpus.out", s.out);
    s.img_height = static_cast<int>(c.get_int("corpus.img_height", s.img_height));
    s.char_width = static_cast<int>(c.get_int("corpus.char_width", s.char_width));
    if (s.alphabet.empty()) throw ConfigError("corpus.alphabet must not be empty");
    if (s.n < 1) throw ConfigError("corpus.n must be >= 1");
    if (s.min_len < 1 || s.max_len < s.min_len) throw ConfigError("need 1 <= corpus.min_len <= corpus.max_len");
    if (s.lexicon_size < 1) throw ConfigError("corpus.lexicon_size must be >= 1");
    return s;
  }
};

int cmd_toy_corpus(const Common& common) {
  const CorpusSettings s = CorpusSettings::from_config(gather(common));
  dump(s.to_config());
  const Alphabet alphabet(s.alphabet);
  const auto seed = static_cast<std::uint64_t>(s.seed);
  const std::vector<std::string> lexicon =
      s.lexicon.empty() ? make_lexicon(alphabet, s.lexicon_size, s.min_len, s.max_len, mix_seed(seed, 0x1e))
                        : load_lexicon(s.lexicon, alphabet);
  const fs::path out(s.out);
  ToyCorpusOptions opts;
  opts.img_height = s.img_height;
  opts.char_width = s.char_width;
  const DatasetManifest m = make_toy_corpus(alphabet, s.n, lexicon, seed, out, opts);
  save_lexicon(out / "lexicon.txt", lexicon);
  s.to_config().save(out / "corpus_config.txt");
  std::cout << "wrote " << m.entries.size() << " samples to " << (out / "manifest.tsv").string() << " and "
            << lexicon.size() << " lexicon words to " << (out / "lexicon.txt").string() << "\n";
  return kOk;
}

// ---- train -----------------------------------------------------------------

int cmd_train(const Common& common) {
  const TrainConfig config = TrainConfig::from_config(gather(common));
  dump(config.to_config());
  const TrainData data = load_train_data(config);
  std::cout << "labeled " << data.labeled.size() << ", unlabeled " << data.unlabeled.size() << ", lexicon "
            << data.lexicon.size() << " words\n";
  const TrainResult r = run_training(config, data, [&](long step, const StepLosses& l) {
    if (step % config.log_every == 0 || step == config.steps) {
      std::cout << "step " << step << " d_real " << num(l.d_real) << " d_fake " << num(l.d_fake) << " g "
                << num(l.g) << " r " << num(l.r) << " sigma_ratio " << num(l.sigma_ratio)
                << (l.skipped_fake ? " skipped_fake " + std::to_string(l.skipped_fake) : "") << "\n"
                << std::flush;
    }
  });
  std::cout << "finished at step " << r.state.step << "; metrics in " << r.metrics_csv.string() << "\n";
  return kOk;
}

// ---- synth -----------------------------------------------------------------

int cmd_synth(const Common& common) {
  KeyValueConfig cfg = gather(common);
  KeyValueConfig eff;
  eff.set("synth.ckpt", cfg.get_string("synth.ckpt", ""));
  eff.set("synth.words", cfg.get_string("synth.words", ""));
  eff.set("synth.seed", cfg.get_int("synth.seed", 1));
  eff.set("synth.out", cfg.get_string("synth.out", "synth"));
  eff.set("synth.styles", cfg.get_int("synth.styles", 2));
  eff.set("synth.sheet", cfg.get_bool("synth.sheet", false));
  eff.set("synth.interpolate", cfg.get_string("synth.interpolate", ""));
  eff.set("synth.steps", cfg.get_int("synth.steps", 8));
  dump(eff);

  const auto seed = static_cast<std::uint64_t>(eff.get_int("synth.seed"));
  const int styles = static_cast<int>(eff.get_int("synth.styles"));
  const int steps = static_cast<int>(eff.get_int("synth.steps"));
  if (styles < 1) throw ConfigError("synth.styles must be >= 1");
  if (eff.get_string("synth.words").empty()) throw ConfigError("synth.words (--words) is required");
  const Generator g = load_generator(checkpoint_file(eff.get_string("synth.ckpt"), "G"));
  const std::vector<std::string> words = read_words(eff.get_string("synth.words"), g.alphabet());
  const fs::path out(eff.get_string("synth.out"));
  fs::create_directories(out);

  const std::string interp = eff.get_string("synth.interpolate");
  if (!interp.empty()) {
    const auto dots = interp.find("..");
    if (dots == std::string::npos) throw ConfigError("--interpolate expects A..B style indices, got " + interp);
    std::uint64_t a = 0, b = 0;
    try {
      a = std::stoull(interp.substr(0, dots));
      b = std::stoull(interp.substr(dots + 2));
    } catch (const std::exception&) {
      throw ConfigError("--interpolate expects A..B style indices, got " + interp);
    }
    const NoiseBundle za = sample_noise_at(seed, a, g.shape()), zb = sample_noise_at(seed, b, g.shape());
    for (std::size_t w = 0; w < words.size(); ++w) {
      const SampleSheet sheet = interpolation_sheet(g, {words[w]}, za, zb, steps);
      const fs::path p = out / ("interp_w" + std::to_string(w) + "_" + words[w] + ".png");
      write_sheet(p, sheet);
      std::cout << p.string() << " (" << steps << " rows)\n";
    }
    return kOk;
  }

  std::vector<NoiseBundle> rows;
  for (int k = 0; k < styles; ++k) rows.push_back(sample_noise_at(seed, static_cast<std::uint64_t>(k), g.shape()));
  const SampleSheet sheet = render_sheet(g, words, rows);
  int written = 0;
  for (int k = 0; k < styles; ++k)
    for (std::size_t w = 0; w < words.size(); ++w) {
      const fs::path p = out / ("w" + std::to_string(w) + "_" + words[w] + "_s" + std::to_string(k) + ".png");
      write_png(p, sheet.cells[static_cast<std::size_t>(k)][w]);
      ++written;
    }
  if (eff.get_bool("synth.sheet", false)) write_sheet(out / "sheet.png", sheet);
  std::cout << "wrote " << written << " images to " << out.string() << "\n";
  return kOk;
}

// ---- eval ------------------------------------------------------------------

int cmd_eval(const Common& common) {
  KeyValueConfig cfg = gather(common);
  KeyValueConfig eff;
  eff.set("eval.ckpt", cfg.get_string("eval.ckpt", ""));
  eff.set("eval.manifest", cfg.get_string("eval.manifest", ""));
  eff.set("eval.split", cfg.get_string("eval.split", "test"));
  eff.set("eval.out", cfg.get_string("eval.out", "eval.csv"));
  dump(eff);

  if (eff.get_string("eval.manifest").empty()) throw ConfigError("eval.manifest (--manifest) is required");
  const Recognizer r = load_recognizer(checkpoint_file(eff.get_string("eval.ckpt"), "R"));
  const Split split = parse_split(eff.get_string("eval.split"));
  const DatasetManifest m = DatasetManifest::load(eff.get_string("eval.manifest"));
  for (const auto& e : m.entries) {
    if (e.split == split && e.transcript.empty()) {
      throw DataError("evaluation refuses unlabeled entry " + e.image_path);
    }
  }
  IngestOptions opts;
  opts.img_height = r.shape().img_height;
  opts.char_width = r.shape().char_width;
  const Dataset d = ingest(m, r.alphabet(), opts, split);
  if (d.labeled.empty()) throw DataError("no labeled " + std::string(to_string(split)) + " entries to evaluate");
  const EvalResult ev = evaluate_recognizer(r, d.labeled);
  write_eval_csv(eff.get_string("eval.out"), ev);
  std::cout << "samples " << ev.truths.size() << " WER " << num(ev.wer) << " NED " << num(ev.ned) << "\n";
  return kOk;
}

// ---- experiments -----------------------------------------------------------

int cmd_htr(const Common& common) {
  const HtrConfig config = HtrConfig::from_config(gather(common));
  dump(config.to_config());
  const HtrResult r = run_htr_experiment(config, [](const std::string& s) { std::cout << s << "\n" << std::flush; });
  std::cout << "arm,wer,ned\n";
  for (const auto& row : r.rows) std::cout << to_string(row.arm) << ',' << num(row.wer) << ',' << num(row.ned) << "\n";
  std::cout << "table written to " << r.csv.string() << "\n";
  return kOk;
}

int cmd_ablate(const Common& common) {
  const AblationConfig config = AblationConfig::from_config(gather(common));
  dump(config.to_config());
  const AblationResult r = run_alpha_ablation(config, [](const std::string& s) { std::cout << s << "\n" << std::flush; });
  std::cout << "cell,style_variance,wer,ned\n";
  for (const auto& row : r.rows) {
    std::cout << row.cell.name << ',' << num(row.style_variance) << ',' << (row.has_htr ? num(row.wer) : "")
              << ',' << (row.has_htr ? num(row.ned) : "") << "\n";
  }
  std::cout << "table written to " << r.csv.string() << "; sheets in " << (fs::path(config.out_dir) / "sheets").string()
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ScrabbleGAN: handwritten word synthesis with a generator, discriminator and recognizer"};
  app.require_subcommand(1);

  Common corpus, train, synth, eval, htr, ablate;

  auto* c = app.add_subcommand("toy-corpus", "render a procedural handwriting corpus");
  add_common(c, corpus);
  flag<std::string>(c, corpus, "--alphabet", "corpus.alphabet", "symbols");
  flag<std::string>(c, corpus, "--lexicon", "corpus.lexicon", "word list (random words when absent)");
  flag<int>(c, corpus, "--n", "corpus.n", "number of samples");
  flag<long long>(c, corpus, "--seed", "corpus.seed", "random seed");
  flag<std::string>(c, corpus, "--out", "corpus.out", "output directory");

  auto* t = app.add_subcommand("train", "train G, D and R jointly");
  add_common(t, train);
  flag<std::string>(t, train, "--manifest", "data.manifest", "labeled manifest");
  flag<std::string>(t, train, "--unlabeled", "data.unlabeled_manifest", "unlabeled manifest");
  flag<std::string>(t, train, "--lexicon", "data.lexicon", "fake-text word list");
  flag<std::string>(t, train, "--profile", "shape.profile", "model profile: paper, desk or tiny");
  flag<std::string>(t, train, "--alphabet", "alphabet", "symbols");
  flag<long long>(t, train, "--steps", "train.steps", "total optimization steps");
  flag<int>(t, train, "--batch-size", "train.batch_size", "batch size");
  flag<long long>(t, train, "--seed", "train.seed", "random seed");
  flag<std::string>(t, train, "--out", "train.out_dir", "output directory");
  flag<std::string>(t, train, "--resume", "train.resume", "checkpoint directory to resume from");
  flag<std::string>(t, train, "--gb-mode", "gb.mode", "gradient balancing: none, full or std_only");
  flag<double>(t, train, "--gb-alpha", "gb.alpha", "gradient balancing alpha");

  auto* s = app.add_subcommand("synth", "render words with a trained generator");
  add_common(s, synth);
  flag<std::string>(s, synth, "--ckpt", "synth.ckpt", "G checkpoint or step directory");
  flag<std::string>(s, synth, "--words", "synth.words", "file with one word per line");
  flag<long long>(s, synth, "--seed", "synth.seed", "style seed");
  flag<std::string>(s, synth, "--out", "synth.out", "output directory");
  flag<int>(s, synth, "--styles", "synth.styles", "style rows per word");
  flag<std::string>(s, synth, "--interpolate", "synth.interpolate", "A..B: interpolate between style rows");
  flag<int>(s, synth, "--steps", "synth.steps", "interpolation rows");
  s->add_flag_callback("--sheet", [&] { synth.flags.set("synth.sheet", true); }, "also write sheet.png");

  auto* e = app.add_subcommand("eval", "score a recognizer on a labeled split");
  add_common(e, eval);
  flag<std::string>(e, eval, "--ckpt", "eval.ckpt", "R checkpoint or step directory");
  flag<std::string>(e, eval, "--manifest", "eval.manifest", "labeled manifest");
  flag<std::string>(e, eval, "--split", "eval.split", "train, val or test");
  flag<std::string>(e, eval, "--out", "eval.out", "per-sample CSV path");

  auto* h = app.add_subcommand("htr-experiment", "compare recognizers trained on real, augmented and synthetic data");
  add_common(h, htr);
  flag<std::string>(h, htr, "--manifest", "htr.manifest", "labeled manifest with train/val/test");
  flag<std::string>(h, htr, "--generator", "htr.generator", "G checkpoint for synthetic arms");
  flag<std::string>(h, htr, "--arms", "htr.arms", "comma-separated arms");
  flag<std::string>(h, htr, "--profile", "shape.profile", "model profile");
  flag<std::string>(h, htr, "--alphabet", "alphabet", "symbols");
  flag<long long>(h, htr, "--steps", "htr.steps", "recognizer steps per arm");
  flag<int>(h, htr, "--synthetic", "htr.synthetic_count", "synthetic samples");
  flag<long long>(h, htr, "--seed", "htr.seed", "random seed");
  flag<std::string>(h, htr, "--out", "htr.out_dir", "output directory");

  auto* a = app.add_subcommand("ablate-alpha", "sweep balancing modes and alpha");
  add_common(a, ablate);
  flag<std::string>(a, ablate, "--manifest", "data.manifest", "labeled manifest");
  flag<std::string>(a, ablate, "--profile", "shape.profile", "model profile");
  flag<std::string>(a, ablate, "--alphabet", "alphabet", "symbols");
  flag<long long>(a, ablate, "--steps", "train.steps", "GAN steps per cell");
  flag<long long>(a, ablate, "--htr-steps", "htr.steps", "recognizer steps per cell");
  flag<std::string>(a, ablate, "--alphas", "ablate.alphas", "comma-separated alpha values");
  flag<std::string>(a, ablate, "--modes", "ablate.modes", "comma-separated balancing modes");
  flag<std::string>(a, ablate, "--out", "ablate.out_dir", "output directory");
  a->add_flag_callback("--no-htr", [&] { ablate.flags.set("ablate.htr", false); }, "skip downstream recognizers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kUsage;
  }

  try {
    if (c->parsed()) return cmd_toy_corpus(corpus);
    if (t->parsed()) return cmd_train(train);
    if (s->parsed()) return cmd_synth(synth);
    if (e->parsed()) return cmd_eval(eval);
    if (h->parsed()) return cmd_htr(htr);
    if (a->parsed()) return cmd_ablate(ablate);
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kUsage;
  } catch (const DataError& ex) {
    std::cerr << "data error: " << ex.what() << "\n";
    return kData;
  } catch (const NumericalError& ex) {
    std::cerr << "numerical error: " << ex.what() << "\n";
    return kNumerical;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
