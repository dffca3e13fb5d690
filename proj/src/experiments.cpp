#include "scrabble/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <random>

#include "scrabble/checkpoint.hpp"
#include "scrabble/ctc.hpp"
#include "scrabble/errors.hpp"
#include "scrabble/generator.hpp"
#include "scrabble/metrics.hpp"
#include "scrabble/sheets.hpp"
#include "scrabble/toy_corpus.hpp"

namespace scrabble {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Short decimal form for cell names: 10, 1, 0.1.
std::string short_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> parse_ints(const std::string& s, const std::string& key) {
  std::vector<int> out;
  try {
    for (const auto& part : split(s, ',')) out.push_back(std::stoi(trim(part)));
  } catch (const std::exception&) {
    throw ConfigError(key + " must be a comma-separated list of integers, got \"" + s + "\"");
  }
  return out;
}

GrayImage pad_to_width(const GrayImage& img, int width) {
  if (img.width >= width) return img;
  GrayImage out(img.height, width, 1.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(y, x) = img.at(y, x);
  return out;
}

struct FitOptions {
  long steps = 0;
  long eval_every = 1;
  int batch_size = 1;
  AdamSettings opt;
  std::uint64_t seed = 0;
  bool augment = false;
  double affine_prob = 0.0;
  AffineRanges ranges;
};

struct FitResult {
  Recognizer best;
  double val_wer = 1.0;
  double val_ned = 0.0;
  long best_step = 0;
};

// Mini-batches are padded on the right with background to the widest
// image; CTC then runs over every frame of the padded width.
FitResult fit_recognizer(Recognizer r, const std::vector<const LabeledSample*>& pool,
                         const std::vector<LabeledSample>& val, const FitOptions& o, const LogFn& log) {
  if (pool.empty()) throw DataError("recognizer training pool is empty");
  FitResult best{r, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0};
  Adam adam(r.params(), o.opt);
  const int blank = r.alphabet().blank_index();
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  auto consider = [&](long step) {
    const EvalResult ev = evaluate_recognizer(r, val);
    if (ev.wer < best.val_wer || (ev.wer == best.val_wer && ev.ned < best.val_ned)) {
      best.best = r;
      best.val_wer = ev.wer;
      best.val_ned = ev.ned;
      best.best_step = step;
    }
    if (log) log("  step " + std::to_string(step) + " val wer " + short_num(ev.wer) + " ned " + short_num(ev.ned));
  };

  for (long step = 1; step <= o.steps; ++step) {
    std::mt19937_64 rng(mix_seed(o.seed, static_cast<std::uint64_t>(step), 11));
    std::vector<GrayImage> images;
    std::vector<std::vector<int>> targets;
    int width = r.min_width();
    for (int i = 0; i < o.batch_size; ++i) {
      const LabeledSample& s = *pool[pick(rng)];
      if (o.augment && coin(rng) < o.affine_prob) {
        images.push_back(affine_augment(s.image, rng(), o.ranges));
      } else {
        images.push_back(s.image);
      }
      targets.push_back(encode_transcript(s.transcript, r.alphabet()));
      width = std::max(width, images.back().width);
    }
    Tensor batch(o.batch_size, 1, r.shape().img_height, width);
    for (int i = 0; i < o.batch_size; ++i) {
      const GrayImage p = pad_to_width(images[static_cast<std::size_t>(i)], width);
      std::copy(p.pixels.begin(), p.pixels.end(), batch.sample(i));
    }
    Recognizer::Tape tape;
    const Tensor logits = r.forward(batch, &tape);
    std::vector<std::optional<CtcResult>> res;
    int feasible = 0;
    double loss = 0.0;
    for (int i = 0; i < o.batch_size; ++i) {
      const FrameLogits f = frame_logits(logits, i, width);
      const auto& t = targets[static_cast<std::size_t>(i)];
      if (ctc_min_frames(t) > f.frames()) {
        res.emplace_back();
        continue;
      }
      res.emplace_back(ctc_loss_and_grad(f.scores, t, blank));
      loss += res.back()->loss;
      ++feasible;
    }
    if (feasible > 0) {
      loss /= feasible;
      if (!std::isfinite(loss)) throw NonFiniteLoss(step, "recognizer loss");
      Tensor grad(logits.shape());
      for (int i = 0; i < o.batch_size; ++i) {
        if (!res[static_cast<std::size_t>(i)]) continue;
        Matrix g = res[static_cast<std::size_t>(i)]->grad;
        for (double& v : g.data) v /= feasible;
        scatter_frame_grad(g, i, grad);
      }
      zero_grads(r.params());
      r.backward(tape, grad);
      adam.step(r.params());
    }
    if (step % o.eval_every == 0 || step == o.steps) consider(step);
  }
  if (o.steps == 0) consider(0);
  return best;
}

std::vector<LabeledSample> synthesize(const Generator& g, const std::vector<std::string>& lexicon, int count,
                                      std::uint64_t seed) {
  std::vector<LabeledSample> out;
  if (count == 0) return out;
  if (lexicon.empty()) throw DataError("no words available for synthetic samples");
  std::mt19937_64 rng(mix_seed(seed, 0x5a));
  std::uniform_int_distribution<std::size_t> pick(0, lexicon.size() - 1);
  const std::uint64_t noise_seed = mix_seed(seed, 0x5b);
  for (int i = 0; i < count; ++i) {
    const std::string& w = lexicon[pick(rng)];
    out.push_back({g.generate(w, sample_noise_at(noise_seed, static_cast<std::uint64_t>(i), g.shape())).image, w,
                   "synthetic_" + std::to_string(i)});
  }
  return out;
}

}  // namespace

EvalResult evaluate_recognizer(const Recognizer& r, const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw DataError("evaluation set is empty");
  EvalResult out;
  for (const auto& s : samples) {
    const GrayImage img = pad_to_width(s.image, r.min_width());
    out.truths.push_back(s.transcript);
    out.predictions.push_back(greedy_decode(r.recognize(img), r.alphabet()));
    out.distances.push_back(edit_distance(out.predictions.back(), s.transcript));
  }
  out.wer = wer(out.predictions, out.truths);
  out.ned = ned(out.predictions, out.truths);
  return out;
}

void write_eval_csv(const std::filesystem::path& path, const EvalResult& result) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "truth,prediction,distance,ned\n";
  long total = 0;
  for (std::size_t i = 0; i < result.truths.size(); ++i) {
    total += result.distances[i];
    out << csv_field(result.truths[i]) << ',' << csv_field(result.predictions[i]) << ',' << result.distances[i]
        << ',' << fmt(static_cast<double>(result.distances[i]) / static_cast<double>(result.truths[i].size()))
        << '\n';
  }
  out << "__summary__,wer=" << fmt(result.wer) << ',' << total << ',' << fmt(result.ned) << '\n';
}

HtrArm parse_arm(const std::string& text) {
  if (text == "real") return HtrArm::Real;
  if (text == "real+affine") return HtrArm::RealAffine;
  if (text == "real+synthetic") return HtrArm::RealSynthetic;
  if (text == "real+synthetic+finetune") return HtrArm::RealSyntheticFinetune;
  if (text == "synthetic") return HtrArm::Synthetic;
  throw ConfigError("unknown HTR arm '" + text +
                    "' (expected real, real+affine, real+synthetic, real+synthetic+finetune or synthetic)");
}

const char* to_string(HtrArm arm) {
  switch (arm) {
    case HtrArm::Real: return "real";
    case HtrArm::RealAffine: return "real+affine";
    case HtrArm::RealSynthetic: return "real+synthetic";
    case HtrArm::RealSyntheticFinetune: return "real+synthetic+finetune";
    case HtrArm::Synthetic: return "synthetic";
  }
  return "?";
}

bool needs_generator(HtrArm arm) {
  return arm == HtrArm::RealSynthetic || arm == HtrArm::RealSyntheticFinetune || arm == HtrArm::Synthetic;
}

void HtrConfig::validate() const {
  shape.validate();
  if (alphabet.empty()) throw ConfigError("alphabet must not be empty");
  if (arms.empty()) throw ConfigError("htr.arms must name at least one arm");
  if (steps < 0 || finetune_steps < 0) throw ConfigError("htr.steps and htr.finetune_steps must be >= 0");
  if (eval_every < 1) throw ConfigError("htr.eval_every must be >= 1");
  if (batch_size < 1) throw ConfigError("htr.batch_size must be >= 1");
  if (synthetic_count < 0) throw ConfigError("htr.synthetic_count must be >= 0");
  if (!(affine_prob >= 0.0 && affine_prob <= 1.0)) throw ConfigError("htr.affine_prob must be in [0, 1]");
  if (!(opt.lr > 0.0)) throw ConfigError("htr.lr must be > 0");
}

KeyValueConfig HtrConfig::to_config() const {
  KeyValueConfig cfg;
  shape.to_config(cfg, "shape.");
  cfg.set("alphabet", alphabet);
  cfg.set("htr.r_channels", join_ints(r_channels));
  cfg.set("htr.manifest", manifest);
  cfg.set("htr.generator", generator);
  cfg.set("htr.lexicon", lexicon);
  std::string a;
  for (std::size_t i = 0; i < arms.size(); ++i) a += (i ? "," : "") + std::string(to_string(arms[i]));
  cfg.set("htr.arms", a);
  cfg.set("htr.steps", static_cast<long long>(steps));
  cfg.set("htr.finetune_steps", static_cast<long long>(finetune_steps));
  cfg.set("htr.eval_every", static_cast<long long>(eval_every));
  cfg.set("htr.batch_size", batch_size);
  cfg.set("htr.synthetic_count", synthetic_count);
  cfg.set("htr.affine_prob", affine_prob);
  cfg.set("htr.affine.rotation_deg", affine.rotation_deg);
  cfg.set("htr.affine.shear_deg", affine.shear_deg);
  cfg.set("htr.affine.scale_min", affine.scale_min);
  cfg.set("htr.affine.scale_max", affine.scale_max);
  cfg.set("htr.affine.translate_x", affine.translate_x);
  cfg.set("htr.affine.translate_y", affine.translate_y);
  cfg.set("htr.lr", opt.lr);
  cfg.set("htr.beta1", opt.beta1);
  cfg.set("htr.beta2", opt.beta2);
  cfg.set("htr.eps", opt.eps);
  cfg.set("htr.seed", static_cast<long long>(seed));
  cfg.set("htr.out_dir", out_dir);
  return cfg;
}

HtrConfig HtrConfig::from_config(const KeyValueConfig& cfg) {
  HtrConfig c;
  c.shape = ModelShape::from_config(cfg, "shape.");
  c.alphabet = cfg.get_string("alphabet", c.alphabet);
  if (auto ch = cfg.find("htr.r_channels")) c.r_channels = parse_ints(*ch, "htr.r_channels");
  c.manifest = cfg.get_string("htr.manifest", cfg.get_string("data.manifest", c.manifest));
  c.generator = cfg.get_string("htr.generator", c.generator);
  c.lexicon = cfg.get_string("htr.lexicon", cfg.get_string("data.lexicon", c.lexicon));
  if (auto a = cfg.find("htr.arms")) {
    c.arms.clear();
    for (const auto& part : split(*a, ',')) c.arms.push_back(parse_arm(trim(part)));
  }
  c.steps = cfg.get_int("htr.steps", c.steps);
  c.finetune_steps = cfg.get_int("htr.finetune_steps", c.finetune_steps);
  c.eval_every = cfg.get_int("htr.eval_every", c.eval_every);
  c.batch_size = static_cast<int>(cfg.get_int("htr.batch_size", c.batch_size));
  c.synthetic_count = static_cast<int>(cfg.get_int("htr.synthetic_count", c.synthetic_count));
  c.affine_prob = cfg.get_double("htr.affine_prob", c.affine_prob);
  c.affine.rotation_deg = cfg.get_double("htr.affine.rotation_deg", c.affine.rotation_deg);
  c.affine.shear_deg = cfg.get_double("htr.affine.shear_deg", c.affine.shear_deg);
  c.affine.scale_min = cfg.get_double("htr.affine.scale_min", c.affine.scale_min);
  c.affine.scale_max = cfg.get_double("htr.affine.scale_max", c.affine.scale_max);
  c.affine.translate_x = cfg.get_double("htr.affine.translate_x", c.affine.translate_x);
  c.affine.translate_y = cfg.get_double("htr.affine.translate_y", c.affine.translate_y);
  c.opt.lr = cfg.get_double("htr.lr", c.opt.lr);
  c.opt.beta1 = cfg.get_double("htr.beta1", c.opt.beta1);
  c.opt.beta2 = cfg.get_double("htr.beta2", c.opt.beta2);
  c.opt.eps = cfg.get_double("htr.eps", c.opt.eps);
  c.seed = static_cast<std::uint64_t>(cfg.get_int("htr.seed", static_cast<long long>(c.seed)));
  c.out_dir = cfg.get_string("htr.out_dir", c.out_dir);
  c.validate();
  return c;
}

HtrResult run_htr_experiment(const HtrConfig& config, const LogFn& log) {
  config.validate();
  if (config.manifest.empty()) throw ConfigError("htr.manifest is required");
  const bool want_generator = std::any_of(config.arms.begin(), config.arms.end(), needs_generator);
  if (want_generator && config.generator.empty()) {
    throw MissingCheckpoint("synthetic HTR arms need a generator checkpoint (htr.generator)");
  }
  const Alphabet alphabet(config.alphabet);
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);
  config.to_config().save(out / "config.txt");

  IngestOptions opts;
  opts.img_height = config.shape.img_height;
  opts.char_width = config.shape.char_width;
  const DatasetManifest manifest = DatasetManifest::load(config.manifest);
  const std::vector<LabeledSample> train = ingest(manifest, alphabet, opts, Split::Train).labeled;
  const std::vector<LabeledSample> val = ingest(manifest, alphabet, opts, Split::Val).labeled;
  const std::vector<LabeledSample> test = ingest(manifest, alphabet, opts, Split::Test).labeled;
  if (train.empty() || val.empty() || test.empty()) {
    throw DataError("manifest " + config.manifest + " needs labeled train, val and test entries");
  }

  std::vector<LabeledSample> synthetic;
  if (want_generator) {
    const Generator g = load_generator(config.generator);
    if (!(g.alphabet() == alphabet)) throw ConfigError("generator alphabet differs from the experiment alphabet");
    if (!(g.shape() == config.shape)) throw ConfigError("generator model shape differs from the experiment shape");
    std::vector<std::string> words;
    if (!config.lexicon.empty()) {
      words = load_lexicon(config.lexicon, alphabet);
    } else {
      for (const auto& s : train) words.push_back(s.transcript);
      std::sort(words.begin(), words.end());
      words.erase(std::unique(words.begin(), words.end()), words.end());
    }
    synthetic = synthesize(g, words, config.synthetic_count, config.seed);
    if (log) log("synthesized " + std::to_string(synthetic.size()) + " samples");
  }

  std::vector<const LabeledSample*> real_pool, mixed_pool, synth_pool;
  for (const auto& s : train) real_pool.push_back(&s);
  mixed_pool = real_pool;
  for (const auto& s : synthetic) {
    mixed_pool.push_back(&s);
    synth_pool.push_back(&s);
  }

  Recognizer init(config.shape, alphabet, config.r_channels);
  init.init(mix_seed(config.seed, 0x7e));
  FitOptions base;
  base.steps = config.steps;
  base.eval_every = config.eval_every;
  base.batch_size = config.batch_size;
  base.opt = config.opt;
  base.seed = config.seed;

  std::optional<FitResult> mixed;
  auto run_mixed = [&]() -> const FitResult& {
    if (!mixed) {
      if (log) log("arm real+synthetic");
      mixed = fit_recognizer(init, mixed_pool, val, base, log);
    }
    return *mixed;
  };

  HtrResult result;
  result.csv = out / "htr_results.csv";
  for (HtrArm arm : config.arms) {
    std::optional<FitResult> fit;
    int samples = 0;
    switch (arm) {
      case HtrArm::Real: {
        if (log) log("arm real");
        fit = fit_recognizer(init, real_pool, val, base, log);
        samples = static_cast<int>(real_pool.size());
        break;
      }
      case HtrArm::RealAffine: {
        if (log) log("arm real+affine");
        FitOptions o = base;
        o.augment = true;
        o.affine_prob = config.affine_prob;
        o.ranges = config.affine;
        fit = fit_recognizer(init, real_pool, val, o, log);
        samples = static_cast<int>(real_pool.size());
        break;
      }
      case HtrArm::RealSynthetic: {
        fit = run_mixed();
        samples = static_cast<int>(mixed_pool.size());
        break;
      }
      case HtrArm::RealSyntheticFinetune: {
        const FitResult& start = run_mixed();
        if (log) log("arm real+synthetic+finetune");
        FitOptions o = base;
        o.steps = config.finetune_steps;
        o.seed = mix_seed(config.seed, 0xf1);
        fit = fit_recognizer(start.best, real_pool, val, o, log);
        samples = static_cast<int>(real_pool.size());
        break;
      }
      case HtrArm::Synthetic: {
        if (log) log("arm synthetic");
        fit = fit_recognizer(init, synth_pool, val, base, log);
        samples = static_cast<int>(synth_pool.size());
        break;
      }
    }
    const EvalResult ev = evaluate_recognizer(fit->best, test);
    const auto arm_dir = out / "arms" / to_string(arm);
    save_recognizer(fit->best, arm_dir / "R");
    write_eval_csv(arm_dir / "test_eval.csv", ev);
    result.rows.push_back({arm, ev.wer, ev.ned, fit->val_wer, fit->val_ned, fit->best_step, samples});
    if (log) log(std::string(to_string(arm)) + ": test wer " + short_num(ev.wer) + " ned " + short_num(ev.ned));
  }

  std::ofstream csv(result.csv);
  if (!csv) throw DataError("cannot write " + result.csv.string());
  csv << "arm,wer,ned,val_wer,val_ned,best_step,train_samples\n";
  for (const auto& r : result.rows) {
    csv << to_string(r.arm) << ',' << fmt(r.wer) << ',' << fmt(r.ned) << ',' << fmt(r.val_wer) << ','
        << fmt(r.val_ned) << ',' << r.best_step << ',' << r.train_samples << '\n';
  }
  return result;
}

void AblationConfig::validate() const {
  train.validate();
  if (run_htr) htr.validate();
  if (modes.empty() && !extremes) throw ConfigError("ablation has no cells");
  for (double a : alphas)
    if (!(a > 0.0)) throw ConfigError("ablate.alphas must all be > 0");
  if (!modes.empty() && alphas.empty()) throw ConfigError("ablate.alphas must not be empty");
}

KeyValueConfig AblationConfig::to_config() const {
  KeyValueConfig cfg = train.to_config();
  cfg.merge(htr.to_config());
  std::string m, a;
  for (std::size_t i = 0; i < modes.size(); ++i) m += (i ? "," : "") + std::string(to_string(modes[i]));
  for (std::size_t i = 0; i < alphas.size(); ++i) a += (i ? "," : "") + short_num(alphas[i]);
  cfg.set("ablate.modes", m);
  cfg.set("ablate.alphas", a);
  cfg.set("ablate.extremes", extremes);
  cfg.set("ablate.htr", run_htr);
  cfg.set("ablate.htr_arm", to_string(htr_arm));
  cfg.set("ablate.out_dir", out_dir);
  return cfg;
}

AblationConfig AblationConfig::from_config(const KeyValueConfig& cfg) {
  AblationConfig c;
  c.train = TrainConfig::from_config(cfg);
  c.run_htr = cfg.get_bool("ablate.htr", c.run_htr);
  c.htr = HtrConfig::from_config(cfg);
  if (auto m = cfg.find("ablate.modes")) {
    c.modes.clear();
    for (const auto& part : split(*m, ','))
      if (!trim(part).empty()) c.modes.push_back(parse_balance_mode(trim(part)));
  }
  if (auto a = cfg.find("ablate.alphas")) {
    c.alphas.clear();
    for (const auto& part : split(*a, ',')) {
      if (trim(part).empty()) continue;
      try {
        c.alphas.push_back(std::stod(trim(part)));
      } catch (const std::exception&) {
        throw ConfigError("ablate.alphas must be a comma-separated list of numbers");
      }
    }
  }
  c.extremes = cfg.get_bool("ablate.extremes", c.extremes);
  c.htr_arm = parse_arm(cfg.get_string("ablate.htr_arm", to_string(c.htr_arm)));
  c.out_dir = cfg.get_string("ablate.out_dir", c.out_dir);
  c.validate();
  return c;
}

std::vector<AblationCell> ablation_cells(const AblationConfig& config) {
  std::vector<AblationCell> cells;
  for (BalanceMode mode : config.modes)
    for (double alpha : config.alphas) {
      GradBalanceConfig gb;
      gb.mode = mode;
      gb.alpha = alpha;
      gb.lambda = mode == BalanceMode::None ? alpha : 1.0;
      cells.push_back({std::string(to_string(mode)) + "_a" + short_num(alpha), gb});
    }
  if (config.extremes) {
    GradBalanceConfig r_only;
    r_only.objective = GeneratorObjective::RecognizerOnly;
    GradBalanceConfig d_only;
    d_only.objective = GeneratorObjective::DiscriminatorOnly;
    cells.push_back({"r_only", r_only});
    cells.push_back({"d_only", d_only});
  }
  return cells;
}

AblationResult run_alpha_ablation(const AblationConfig& config, const LogFn& log) {
  config.validate();
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);
  config.to_config().save(out / "config.txt");

  const TrainData data = load_train_data(config.train);
  const std::vector<std::string> texts = sheet_texts_for(config.train, data);
  const std::vector<NoiseBundle> rows = sheet_rows_for(config.train);

  AblationResult result;
  std::vector<std::vector<GrayImage>> grid(1);
  for (const AblationCell& cell : ablation_cells(config)) {
    if (log) log("cell " + cell.name);
    TrainConfig tc = config.train;
    tc.gb = cell.gb;
    tc.resume.clear();
    tc.out_dir = (out / "cells" / cell.name).string();
    ProgressFn progress;
    if (log) {
      progress = [&](long step, const StepLosses& l) {
        if (step % tc.log_every == 0) {
          log("  step " + std::to_string(step) + " d_real " + short_num(l.d_real) + " d_fake " +
              short_num(l.d_fake) + " g " + short_num(l.g) + " r " + short_num(l.r));
        }
      };
    }
    const TrainResult trained = run_training(tc, data, progress);

    AblationRow row;
    row.cell = cell;
    if (!trained.state.history.empty()) row.final_losses = trained.state.history.back();
    const SampleSheet sheet = render_sheet(trained.state.g, texts, rows);
    row.style_variance = style_variance(sheet);
    row.layout_hash = sheet.layout_hash();
    row.sheet = out / "sheets" / (cell.name + ".png");
    write_sheet(row.sheet, sheet);
    grid[0].push_back(sheet.composite);

    if (config.run_htr) {
      HtrConfig hc = config.htr;
      hc.arms = {config.htr_arm};
      hc.generator = (checkpoint_dir(tc.out_dir, trained.state.step) / "G").string();
      hc.out_dir = (out / "cells" / cell.name / "htr").string();
      const HtrResult h = run_htr_experiment(hc, log);
      row.has_htr = true;
      row.wer = h.rows.at(0).wer;
      row.ned = h.rows.at(0).ned;
    }
    result.rows.push_back(std::move(row));
  }

  result.grid = out / "ablation_grid.png";
  SampleSheet all;
  all.composite = compose_grid(grid, 6);
  write_sheet(result.grid, all);

  result.csv = out / "ablation.csv";
  std::ofstream csv(result.csv);
  if (!csv) throw DataError("cannot write " + result.csv.string());
  csv << "cell,mode,alpha,objective,loss_d_real,loss_d_fake,loss_g,loss_r,style_variance,layout_hash,sheet,wer,ned\n";
  for (const auto& r : result.rows) {
    csv << r.cell.name << ',' << to_string(r.cell.gb.mode) << ',' << fmt(r.cell.gb.alpha) << ','
        << to_string(r.cell.gb.objective) << ',' << fmt(r.final_losses.d_real) << ',' << fmt(r.final_losses.d_fake)
        << ',' << fmt(r.final_losses.g) << ',' << fmt(r.final_losses.r) << ',' << fmt(r.style_variance) << ','
        << r.layout_hash << ',' << csv_field(r.sheet.string()) << ',' << (r.has_htr ? fmt(r.wer) : "") << ','
        << (r.has_htr ? fmt(r.ned) : "") << '\n';
  }
  return result;
}

}  // namespace scrabble
