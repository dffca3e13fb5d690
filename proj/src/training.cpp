#include "scrabble/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "scrabble/checkpoint.hpp"
#include "scrabble/ctc.hpp"
#include "scrabble/data_io.hpp"
#include "scrabble/errors.hpp"
#include "scrabble/sheets.hpp"
#include "scrabble/toy_corpus.hpp"

namespace scrabble {
namespace {

enum Purpose : std::uint64_t { kLabeled = 1, kUnlabeled = 2, kFakeText = 3, kFakeNoise = 4 };

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

void adam_to_config(KeyValueConfig& cfg, const std::string& net, const AdamSettings& s) {
  cfg.set("opt." + net + ".lr", s.lr);
  cfg.set("opt." + net + ".beta1", s.beta1);
  cfg.set("opt." + net + ".beta2", s.beta2);
  cfg.set("opt." + net + ".eps", s.eps);
}

AdamSettings adam_from_config(const KeyValueConfig& cfg, const std::string& net) {
  AdamSettings s;
  s.lr = cfg.get_double("opt." + net + ".lr", s.lr);
  s.beta1 = cfg.get_double("opt." + net + ".beta1", s.beta1);
  s.beta2 = cfg.get_double("opt." + net + ".beta2", s.beta2);
  s.eps = cfg.get_double("opt." + net + ".eps", s.eps);
  return s;
}

void check_adam(const AdamSettings& s, const std::string& net) {
  if (!(s.lr > 0.0)) throw ConfigError("opt." + net + ".lr must be > 0");
  if (!(s.beta1 >= 0.0 && s.beta1 < 1.0)) throw ConfigError("opt." + net + ".beta1 must be in [0, 1)");
  if (!(s.beta2 >= 0.0 && s.beta2 < 1.0)) throw ConfigError("opt." + net + ".beta2 must be in [0, 1)");
  if (!(s.eps > 0.0)) throw ConfigError("opt." + net + ".eps must be > 0");
}

GrayImage pad_to_width(const GrayImage& img, int width) {
  if (img.width >= width) return img;
  GrayImage out(img.height, width, 1.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(y, x) = img.at(y, x);
  return out;
}

// Indices of `images` grouped by width, in ascending width order.
std::map<int, std::vector<std::size_t>> group_by_width(const std::vector<const GrayImage*>& images) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < images.size(); ++i) groups[images[i]->width].push_back(i);
  return groups;
}

Tensor stack(const std::vector<const GrayImage*>& images, const std::vector<std::size_t>& idx) {
  const GrayImage& first = *images[idx[0]];
  Tensor t(static_cast<int>(idx.size()), 1, first.height, first.width);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto& px = images[idx[k]]->pixels;
    std::copy(px.begin(), px.end(), t.sample(static_cast<int>(k)));
  }
  return t;
}

double mean_of(const double* p, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += p[i];
  return s / static_cast<double>(n);
}

// Per-sample D score of each equal-width tensor row, with the patch
// gradient d loss / d score / patches backpropagated into D. Returns the
// image gradient.
Tensor score_backprop(Discriminator& d, const Tensor& images, std::vector<double>& scores,
                      const std::function<double(std::size_t, double)>& upstream) {
  Discriminator::Tape tape;
  const Tensor patches = d.forward(images, &tape);
  const std::size_t per = patches.shape().sample();
  Tensor grad(patches.shape());
  for (int i = 0; i < patches.n(); ++i) {
    const double s = mean_of(patches.sample(i), per);
    scores[static_cast<std::size_t>(i)] = s;
    const double g = upstream(static_cast<std::size_t>(i), s) / static_cast<double>(per);
    std::fill(grad.sample(i), grad.sample(i) + per, g);
  }
  return d.backward(tape, grad);
}

struct CtcPass {
  Recognizer::Tape tape;
  std::vector<CtcResult> results;
  std::vector<bool> feasible;
  int width = 0;
};

CtcPass ctc_forward(const Recognizer& r, const Tensor& images,
                    const std::vector<const std::vector<int>*>& targets) {
  CtcPass pass;
  pass.width = images.w();
  const Tensor logits = r.forward(images, &pass.tape);
  const int blank = r.alphabet().blank_index();
  for (int i = 0; i < images.n(); ++i) {
    const FrameLogits f = frame_logits(logits, i, images.w());
    const auto& target = *targets[static_cast<std::size_t>(i)];
    if (ctc_min_frames(target) > f.frames()) {
      pass.results.emplace_back();
      pass.feasible.push_back(false);
      continue;
    }
    pass.results.push_back(ctc_loss_and_grad(f.scores, target, blank));
    pass.feasible.push_back(true);
  }
  return pass;
}

// Backpropagates (1/count) * sum of feasible CTC losses of a pass.
Tensor ctc_backward(Recognizer& r, const CtcPass& pass, double scale) {
  Tensor grad_logits(pass.tape.logits.shape());
  for (std::size_t i = 0; i < pass.results.size(); ++i) {
    if (!pass.feasible[i]) continue;
    Matrix g = pass.results[i].grad;
    for (double& v : g.data) v *= scale;
    scatter_frame_grad(g, static_cast<int>(i), grad_logits);
  }
  return r.backward(pass.tape, grad_logits);
}

void require_finite(double v, long step, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteLoss(step, what);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_slots(Checkpoint& ck, const Adam& opt) {
  ck.put(opt.slots());
  ck.meta["adam_steps"] = std::to_string(opt.steps_taken());
}

void get_slots(const Checkpoint& ck, Adam& opt) {
  ck.get(opt.slots());
  auto it = ck.meta.find("adam_steps");
  opt.set_steps_taken(it == ck.meta.end() ? 0 : std::stol(it->second));
}

}  // namespace

void TrainConfig::validate() const {
  shape.validate();
  if (alphabet.empty()) throw ConfigError("alphabet must not be empty");
  if (steps < 0) throw ConfigError("train.steps must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be >= 1");
  if (sheet_every < 1) throw ConfigError("train.sheet_every must be >= 1");
  if (log_every < 1) throw ConfigError("train.log_every must be >= 1");
  if (max_word_len < 0) throw ConfigError("data.max_word_len must be >= 0");
  if (sheet_rows < 1 || sheet_columns < 1) throw ConfigError("sheet.rows and sheet.columns must be >= 1");
  check_adam(opt_g, "g");
  check_adam(opt_d, "d");
  check_adam(opt_r, "r");
  gb.validate();
}

KeyValueConfig TrainConfig::to_config() const {
  KeyValueConfig cfg;
  shape.to_config(cfg, "shape.");
  cfg.set("alphabet", alphabet);
  cfg.set("model.norm", to_string(norm));
  cfg.set("model.r_channels", join_ints(r_channels));
  cfg.set("data.manifest", manifest);
  cfg.set("data.unlabeled_manifest", unlabeled_manifest);
  cfg.set("data.lexicon", lexicon);
  cfg.set("data.max_word_len", max_word_len);
  cfg.set("train.steps", static_cast<long long>(steps));
  cfg.set("train.batch_size", batch_size);
  cfg.set("train.seed", static_cast<long long>(seed));
  cfg.set("train.checkpoint_every", static_cast<long long>(checkpoint_every));
  cfg.set("train.sheet_every", static_cast<long long>(sheet_every));
  cfg.set("train.log_every", static_cast<long long>(log_every));
  cfg.set("train.out_dir", out_dir);
  cfg.set("train.resume", resume);
  adam_to_config(cfg, "g", opt_g);
  adam_to_config(cfg, "d", opt_d);
  adam_to_config(cfg, "r", opt_r);
  gb.to_config(cfg);
  cfg.set("sheet.columns", sheet_columns);
  cfg.set("sheet.rows", sheet_rows);
  cfg.set("sheet.seed", static_cast<long long>(sheet_seed));
  std::string texts;
  for (std::size_t i = 0; i < sheet_texts.size(); ++i) texts += (i ? "," : "") + sheet_texts[i];
  cfg.set("sheet.texts", texts);
  return cfg;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg) {
  TrainConfig c;
  c.shape = ModelShape::from_config(cfg, "shape.");
  c.alphabet = cfg.get_string("alphabet", c.alphabet);
  c.norm = parse_norm_mode(cfg.get_string("model.norm", to_string(c.norm)));
  if (auto ch = cfg.find("model.r_channels")) c.r_channels = parse_ints(*ch, "model.r_channels");
  c.manifest = cfg.get_string("data.manifest", c.manifest);
  c.unlabeled_manifest = cfg.get_string("data.unlabeled_manifest", c.unlabeled_manifest);
  c.lexicon = cfg.get_string("data.lexicon", c.lexicon);
  c.max_word_len = static_cast<int>(cfg.get_int("data.max_word_len", c.max_word_len));
  c.steps = cfg.get_int("train.steps", c.steps);
  c.batch_size = static_cast<int>(cfg.get_int("train.batch_size", c.batch_size));
  c.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", static_cast<long long>(c.seed)));
  c.checkpoint_every = cfg.get_int("train.checkpoint_every", c.checkpoint_every);
  c.sheet_every = cfg.get_int("train.sheet_every", c.sheet_every);
  c.log_every = cfg.get_int("train.log_every", c.log_every);
  c.out_dir = cfg.get_string("train.out_dir", c.out_dir);
  c.resume = cfg.get_string("train.resume", c.resume);
  c.opt_g = adam_from_config(cfg, "g");
  c.opt_d = adam_from_config(cfg, "d");
  c.opt_r = adam_from_config(cfg, "r");
  c.gb = GradBalanceConfig::from_config(cfg);
  c.sheet_columns = static_cast<int>(cfg.get_int("sheet.columns", c.sheet_columns));
  c.sheet_rows = static_cast<int>(cfg.get_int("sheet.rows", c.sheet_rows));
  c.sheet_seed = static_cast<std::uint64_t>(cfg.get_int("sheet.seed", static_cast<long long>(c.sheet_seed)));
  if (auto t = cfg.find("sheet.texts"); t && !trim(*t).empty()) {
    for (const auto& w : split(*t, ',')) c.sheet_texts.push_back(trim(w));
  }
  c.validate();
  return c;
}

TrainState TrainState::initial(const TrainConfig& config) {
  config.validate();
  const Alphabet alphabet(config.alphabet);
  Generator g(config.shape, alphabet, config.norm);
  Discriminator d(config.shape);
  Recognizer r(config.shape, alphabet, config.r_channels);
  g.init(mix_seed(config.seed, 0x6e));
  d.init(mix_seed(config.seed, 0xde));
  r.init(mix_seed(config.seed, 0x7e));
  Adam opt_g(g.params(), config.opt_g);
  Adam opt_d(d.params(), config.opt_d);
  Adam opt_r(r.params(), config.opt_r);
  return TrainState{0, std::move(g), std::move(d), std::move(r),
                    std::move(opt_g), std::move(opt_d), std::move(opt_r), {}};
}

TrainData load_train_data(const TrainConfig& config) {
  if (config.manifest.empty()) throw ConfigError("data.manifest is required");
  const Alphabet alphabet(config.alphabet);
  IngestOptions labeled_opts;
  labeled_opts.img_height = config.shape.img_height;
  labeled_opts.char_width = config.shape.char_width;
  labeled_opts.supervised_rescale = true;
  const DatasetManifest manifest = DatasetManifest::load(config.manifest);
  Dataset train = ingest(manifest, alphabet, labeled_opts, Split::Train);

  TrainData data;
  data.labeled = std::move(train.labeled);
  data.unlabeled = std::move(train.unlabeled);
  if (data.labeled.empty()) throw DataError("manifest " + config.manifest + " has no labeled train entries");
  if (!config.unlabeled_manifest.empty()) {
    IngestOptions opts = labeled_opts;
    opts.supervised_rescale = false;
    auto extra = ingest_unlabeled(DatasetManifest::load(config.unlabeled_manifest), opts);
    for (auto& u : extra) data.unlabeled.push_back(std::move(u));
  }

  if (!config.lexicon.empty()) {
    data.lexicon = load_lexicon(config.lexicon, alphabet, config.max_word_len);
  } else {
    for (const auto& s : data.labeled) {
      if (config.max_word_len == 0 || static_cast<int>(s.transcript.size()) <= config.max_word_len) {
        data.lexicon.push_back(s.transcript);
      }
    }
    std::sort(data.lexicon.begin(), data.lexicon.end());
    data.lexicon.erase(std::unique(data.lexicon.begin(), data.lexicon.end()), data.lexicon.end());
  }
  data.lexicon.erase(std::remove(data.lexicon.begin(), data.lexicon.end(), std::string()), data.lexicon.end());
  if (data.lexicon.empty()) throw DataError("no words available for fake-text sampling");
  return data;
}

StepBatch draw_batch(const TrainConfig& config, const TrainData& data, long step) {
  if (data.labeled.empty()) throw DataError("labeled batch must not be empty");
  if (data.lexicon.empty()) throw DataError("lexicon must not be empty");
  const auto s = static_cast<std::uint64_t>(step);
  const auto B = static_cast<std::size_t>(config.batch_size);
  StepBatch batch;

  std::mt19937_64 rl(mix_seed(config.seed, s, kLabeled));
  std::uniform_int_distribution<std::size_t> pick_l(0, data.labeled.size() - 1);
  for (std::size_t i = 0; i < B; ++i) batch.labeled.push_back(&data.labeled[pick_l(rl)]);

  if (!data.unlabeled.empty()) {
    std::mt19937_64 ru(mix_seed(config.seed, s, kUnlabeled));
    std::uniform_int_distribution<std::size_t> pick_u(0, data.unlabeled.size() - 1);
    for (std::size_t i = 0; i < B; ++i) batch.unlabeled.push_back(&data.unlabeled[pick_u(ru)]);
  }

  // A uniformly drawn anchor word fixes the length; the rest of the fake
  // batch is drawn uniformly from the words of that length.
  std::mt19937_64 rt(mix_seed(config.seed, s, kFakeText));
  std::uniform_int_distribution<std::size_t> pick_w(0, data.lexicon.size() - 1);
  const std::string& anchor = data.lexicon[pick_w(rt)];
  std::vector<const std::string*> bucket;
  for (const auto& w : data.lexicon)
    if (w.size() == anchor.size()) bucket.push_back(&w);
  batch.fake_texts.push_back(anchor);
  std::uniform_int_distribution<std::size_t> pick_b(0, bucket.size() - 1);
  while (batch.fake_texts.size() < B) batch.fake_texts.push_back(*bucket[pick_b(rt)]);

  batch.fake_noise = sample_noise(mix_seed(config.seed, s, kFakeNoise), config.batch_size, config.shape);
  return batch;
}

IsolationTrace::Snapshot hash_players(const TrainState& state) {
  return {hash_params(state.g.params()), hash_params(state.d.params()), hash_params(state.r.params())};
}

StepLosses train_step(TrainState& state, const StepBatch& batch, const TrainConfig& config,
                      IsolationTrace* trace) {
  if (batch.labeled.empty()) throw DataError("labeled batch must not be empty");
  if (batch.fake_texts.empty() || batch.fake_texts.size() != batch.fake_noise.size()) {
    throw ConfigError("fake batch needs one noise bundle per text");
  }
  const long step = state.step + 1;
  const Alphabet& alphabet = state.g.alphabet();
  StepLosses out;
  if (trace) trace->before = hash_players(state);

  // (1) R on real labeled images only.
  {
    std::vector<const GrayImage*> images;
    std::vector<std::vector<int>> targets;
    for (const LabeledSample* s : batch.labeled) {
      images.push_back(&s->image);
      targets.push_back(encode_transcript(s->transcript, alphabet));
    }
    std::vector<CtcPass> passes;
    std::vector<std::vector<std::size_t>> members;
    int feasible = 0;
    double loss = 0.0;
    for (const auto& [width, idx] : group_by_width(images)) {
      std::vector<const std::vector<int>*> t;
      for (std::size_t i : idx) t.push_back(&targets[i]);
      passes.push_back(ctc_forward(state.r, stack(images, idx), t));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (passes.back().feasible[k]) {
          ++feasible;
          loss += passes.back().results[k].loss;
        } else {
          ++out.skipped_real;
        }
      }
    }
    if (feasible > 0) {
      out.r = loss / feasible;
      require_finite(out.r, step, "loss_r");
      zero_grads(state.r.params());
      for (const auto& p : passes) ctc_backward(state.r, p, 1.0 / feasible);
      state.opt_r.step(state.r.params());
    }
  }
  if (trace) trace->after_r = hash_players(state);

  // (2) D on real pixels against detached fakes.
  std::vector<std::vector<int>> fake_targets;
  for (const auto& t : batch.fake_texts) {
    fake_targets.push_back(encode_transcript(t, alphabet));
    if (t.size() != batch.fake_texts[0].size()) throw ConfigError("fake texts of one batch must share a length");
  }
  Generator::Tape g_tape;
  const Tensor fakes = state.g.forward(fake_targets, batch.fake_noise, true, &g_tape);
  const auto n_fake = static_cast<std::size_t>(fakes.n());
  {
    std::vector<GrayImage> padded;
    std::vector<const GrayImage*> real;
    const int min_w = state.d.min_width();
    for (const LabeledSample* s : batch.labeled) real.push_back(&s->image);
    for (const UnlabeledSample* s : batch.unlabeled) real.push_back(&s->image);
    padded.reserve(real.size());
    for (auto& p : real) {
      if (p->width < min_w) {
        padded.push_back(pad_to_width(*p, min_w));
        p = &padded.back();
      }
    }
    const double n_real = static_cast<double>(real.size());
    zero_grads(state.d.params());
    std::vector<double> real_scores(real.size());
    for (const auto& [width, idx] : group_by_width(real)) {
      std::vector<double> scores(idx.size());
      score_backprop(state.d, stack(real, idx), scores,
                     [&](std::size_t, double s) { return 1.0 - s > 0.0 ? -1.0 / n_real : 0.0; });
      for (std::size_t k = 0; k < idx.size(); ++k) real_scores[idx[k]] = scores[k];
    }
    std::vector<double> fake_scores(n_fake);
    score_backprop(state.d, fakes, fake_scores,
                   [&](std::size_t, double s) { return 1.0 + s > 0.0 ? 1.0 / static_cast<double>(n_fake) : 0.0; });
    // max(0, NaN) is 0, so scores are checked before the hinge.
    for (double s : real_scores) require_finite(s, step, "loss_d_real");
    for (double s : fake_scores) require_finite(s, step, "loss_d_fake");
    for (double s : real_scores) out.d_real += std::max(0.0, 1.0 - s);
    for (double s : fake_scores) out.d_fake += std::max(0.0, 1.0 + s);
    out.d_real /= n_real;
    out.d_fake /= static_cast<double>(n_fake);
    require_finite(out.d_real, step, "loss_d_real");
    require_finite(out.d_fake, step, "loss_d_fake");
    state.opt_d.step(state.d.params());
  }
  if (trace) trace->after_d = hash_players(state);

  // (3) G through the balanced image gradient; D and R only provide
  // gradients here, their parameters are not stepped.
  {
    std::vector<double> scores(n_fake);
    const Tensor grad_d = score_backprop(
        state.d, fakes, scores, [&](std::size_t, double) { return -1.0 / static_cast<double>(n_fake); });
    double sum = 0.0;
    for (double s : scores) sum += s;
    out.g = -sum / static_cast<double>(n_fake);
    require_finite(out.g, step, "loss_g");

    std::vector<const std::vector<int>*> t;
    for (const auto& ft : fake_targets) t.push_back(&ft);
    const CtcPass pass = ctc_forward(state.r, fakes, t);
    int feasible = 0;
    double loss = 0.0;
    for (std::size_t i = 0; i < pass.results.size(); ++i) {
      if (pass.feasible[i]) {
        ++feasible;
        loss += pass.results[i].loss;
      } else {
        ++out.skipped_fake;
      }
    }
    Tensor grad_r(fakes.shape());
    if (feasible > 0) {
      out.r_fake = loss / feasible;
      require_finite(out.r_fake, step, "fake recognizer loss");
      grad_r = ctc_backward(state.r, pass, 1.0 / feasible);
    }
    zero_grads(state.d.params());
    zero_grads(state.r.params());

    CombinedGradient combined = combine_generator_gradient(grad_d.span(), grad_r.span(), config.gb);
    out.sigma_ratio = combined.sigma_ratio;
    out.degenerate = combined.degenerate;
    for (double v : combined.grad) {
      if (!std::isfinite(v)) throw NonFiniteLoss(step, "generator image gradient");
    }
    Tensor grad_img(fakes.shape());
    grad_img.values() = std::move(combined.grad);
    zero_grads(state.g.params());
    state.g.backward(g_tape, grad_img);
    state.opt_g.step(state.g.params());
  }
  if (trace) trace->after_g = hash_players(state);

  state.step = step;
  state.history.push_back(out);
  return out;
}

std::filesystem::path checkpoint_dir(const std::filesystem::path& out_dir, long step) {
  return out_dir / "ckpt" / ("step_" + std::to_string(step));
}

void save_train_checkpoint(const TrainState& state, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string step = std::to_string(state.step);
  {
    Checkpoint ck;
    ck.alphabet = state.g.alphabet().chars();
    ck.shape = state.g.shape();
    ck.meta["network"] = "G";
    ck.meta["norm"] = to_string(state.g.norm_mode());
    ck.meta["step"] = step;
    ck.put(state.g.params());
    ck.put(state.g.buffers());
    put_slots(ck, state.opt_g);
    ck.save(dir / "G");
  }
  {
    Checkpoint ck;
    ck.alphabet = state.g.alphabet().chars();
    ck.shape = state.d.shape();
    ck.meta["network"] = "D";
    ck.meta["step"] = step;
    ck.put(state.d.params());
    put_slots(ck, state.opt_d);
    ck.save(dir / "D");
  }
  {
    Checkpoint ck;
    ck.alphabet = state.r.alphabet().chars();
    ck.shape = state.r.shape();
    ck.meta["network"] = "R";
    ck.meta["channels"] = join_ints(state.r.channels());
    ck.meta["step"] = step;
    ck.put(state.r.params());
    put_slots(ck, state.opt_r);
    ck.save(dir / "R");
  }
}

void load_train_checkpoint(TrainState& state, const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw MissingCheckpoint("no checkpoint directory " + dir.string());
  load_generator_into(state.g, dir / "G");
  load_discriminator_into(state.d, state.g.alphabet(), dir / "D");
  load_recognizer_into(state.r, dir / "R");
  const Checkpoint g = Checkpoint::load(dir / "G");
  const Checkpoint d = Checkpoint::load(dir / "D");
  const Checkpoint r = Checkpoint::load(dir / "R");
  get_slots(g, state.opt_g);
  get_slots(d, state.opt_d);
  get_slots(r, state.opt_r);
  auto step_of = [](const Checkpoint& ck) {
    auto it = ck.meta.find("step");
    return it == ck.meta.end() ? -1L : std::stol(it->second);
  };
  const long step = step_of(g);
  if (step < 0 || step_of(d) != step || step_of(r) != step) {
    throw DataError("checkpoint " + dir.string() + " has missing or inconsistent step records");
  }
  state.step = step;
  state.history.clear();
}

std::vector<std::string> sheet_texts_for(const TrainConfig& config, const TrainData& data) {
  if (!config.sheet_texts.empty()) return config.sheet_texts;
  return pick_sheet_texts(data.lexicon, config.sheet_columns, config.sheet_seed);
}

std::vector<NoiseBundle> sheet_rows_for(const TrainConfig& config) {
  return sample_noise(mix_seed(config.sheet_seed, 0x5ee7), config.sheet_rows, config.shape);
}

TrainResult run_training(const TrainConfig& config, const TrainData& data, const ProgressFn& progress) {
  config.validate();
  const std::filesystem::path out(config.out_dir);
  std::filesystem::create_directories(out);
  config.to_config().save(out / "config.txt");

  TrainResult result{TrainState::initial(config), out / "metrics.csv", {}};
  TrainState& state = result.state;
  if (!config.resume.empty()) load_train_checkpoint(state, config.resume);

  // Keep earlier rows up to the resumed step so the log stays continuous.
  std::vector<std::string> kept;
  if (state.step > 0 && std::filesystem::exists(result.metrics_csv)) {
    std::ifstream in(result.metrics_csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::stol(line.substr(0, line.find(','))) <= state.step) kept.push_back(line);
    }
  }
  std::ofstream csv(result.metrics_csv, std::ios::trunc);
  if (!csv) throw DataError("cannot write " + result.metrics_csv.string());
  csv << kMetricsHeader << '\n';
  for (const auto& line : kept) csv << line << '\n';
  csv.flush();

  if (state.step == 0) save_train_checkpoint(state, checkpoint_dir(out, 0));

  const std::vector<std::string> texts = sheet_texts_for(config, data);
  const std::vector<NoiseBundle> rows = sheet_rows_for(config);
  auto emit_sheet = [&] {
    const auto path = out / "sheets" / ("step_" + std::to_string(state.step) + ".png");
    write_sheet(path, render_sheet(state.g, texts, rows));
    result.sheets.push_back(path);
  };

  while (state.step < config.steps) {
    const StepBatch batch = draw_batch(config, data, state.step + 1);
    StepLosses losses;
    try {
      losses = train_step(state, batch, config);
    } catch (const NonFiniteLoss&) {
      save_train_checkpoint(state, out / "diagnostic" / ("step_" + std::to_string(state.step + 1)));
      throw;
    }
    csv << state.step << ',' << fmt(losses.d_real) << ',' << fmt(losses.d_fake) << ',' << fmt(losses.g)
        << ',' << fmt(losses.r) << ',' << fmt(losses.sigma_ratio) << '\n';
    csv.flush();
    if (progress) progress(state.step, losses);
    const bool last = state.step == config.steps;
    if (state.step % config.checkpoint_every == 0 || last) save_train_checkpoint(state, checkpoint_dir(out, state.step));
    if (state.step % config.sheet_every == 0 || last) emit_sheet();
  }
  return result;
}

}  // namespace scrabble
