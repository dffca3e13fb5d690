#include <doctest.h>

#include <fstream>
#include <limits>

#include "scrabble/checkpoint.hpp"
#include "scrabble/errors.hpp"
#include "scrabble/toy_corpus.hpp"
#include "scrabble/training.hpp"
#include "test_util.hpp"

using namespace scrabble;
using namespace scrabble::testing;

namespace {

const std::vector<int> kTinyChannels{2, 3, 4, 4, 5, 5};

TrainConfig tiny_config(const std::filesystem::path& dir) {
  TrainConfig c;
  c.shape = ModelShape::tiny();
  c.alphabet = "abc";
  c.r_channels = kTinyChannels;
  c.manifest = (dir / "corpus" / "manifest.tsv").string();
  c.batch_size = 3;
  c.steps = 4;
  c.seed = 5;
  c.checkpoint_every = 2;
  c.sheet_every = 2;
  c.sheet_columns = 2;
  c.sheet_rows = 2;
  c.out_dir = (dir / "run").string();
  return c;
}

// A small corpus on disk, built once per directory.
std::filesystem::path corpus_dir(const std::string& name) {
  const auto dir = temp_dir(name);
  const Alphabet ab("abc");
  make_toy_corpus(ab, 40, make_lexicon(ab, 12, 1, 3, 3), 9, dir / "corpus");
  return dir;
}

// Copy of `src` with every transcript replaced.
std::filesystem::path rewrite_transcripts(const std::filesystem::path& src, const std::filesystem::path& dst,
                                          const std::string& replacement) {
  DatasetManifest m = DatasetManifest::load(src);
  for (auto& e : m.entries) {
    e.image_path = m.resolve(e).string();
    e.transcript = replacement;
  }
  m.save(dst);
  return dst;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("config keys round trip and validate") {
    TrainConfig c;
    c.gb.mode = BalanceMode::Full;
    c.gb.alpha = 0.1;
    c.sheet_texts = {"ab", "ba"};
    c.r_channels = {4, 4, 4, 4, 4, 4};
    const TrainConfig back = TrainConfig::from_config(c.to_config());
    CHECK(back.to_config().to_string() == c.to_config().to_string());
    CHECK(back.gb.mode == BalanceMode::Full);
    CHECK(back.sheet_texts == c.sheet_texts);

    KeyValueConfig bad = c.to_config();
    bad.set("train.batch_size", 0);
    CHECK_THROWS_AS(TrainConfig::from_config(bad), ConfigError);
    bad = c.to_config();
    bad.set("opt.r.lr", 0.0);
    CHECK_THROWS_AS(TrainConfig::from_config(bad), ConfigError);
    bad = c.to_config();
    bad.set("model.r_channels", "4,x");
    CHECK_THROWS_AS(TrainConfig::from_config(bad), ConfigError);
  }

  TEST_CASE("batches depend only on seed and step") {
    const auto dir = corpus_dir("batches");
    const TrainConfig c = tiny_config(dir);
    const TrainData data = load_train_data(c);
    CHECK(data.unlabeled.empty());
    for (long step : {1L, 2L, 17L}) {
      const StepBatch a = draw_batch(c, data, step);
      const StepBatch b = draw_batch(c, data, step);
      CHECK(a.labeled == b.labeled);
      CHECK(a.fake_texts == b.fake_texts);
      CHECK(a.fake_noise == b.fake_noise);
      REQUIRE(a.fake_texts.size() == 3);
      for (const auto& t : a.fake_texts) CHECK(t.size() == a.fake_texts[0].size());
    }
    CHECK(draw_batch(c, data, 1).fake_noise != draw_batch(c, data, 2).fake_noise);
  }

  TEST_CASE("each sub-step touches only its own player") {
    const auto dir = corpus_dir("isolation");
    const TrainConfig c = tiny_config(dir);
    const TrainData data = load_train_data(c);
    TrainState s = TrainState::initial(c);
    for (long step = 1; step <= 2; ++step) {
      IsolationTrace t;
      train_step(s, draw_batch(c, data, step), c, &t);
      CHECK(t.after_r.r != t.before.r);
      CHECK(t.after_r.g == t.before.g);
      CHECK(t.after_r.d == t.before.d);
      CHECK(t.after_d.d != t.after_r.d);
      CHECK(t.after_d.g == t.after_r.g);
      CHECK(t.after_d.r == t.after_r.r);
      CHECK(t.after_g.g != t.after_d.g);
      CHECK(t.after_g.d == t.after_d.d);
      CHECK(t.after_g.r == t.after_d.r);
    }
    CHECK(s.step == 2);
    CHECK(s.history.size() == 2);
  }

  TEST_CASE("a step is bit-reproducible") {
    const auto dir = corpus_dir("determinism");
    TrainConfig c = tiny_config(dir);
    c.gb.mode = BalanceMode::StdOnly;
    c.gb.alpha = 1.0;
    const TrainData data = load_train_data(c);
    TrainState a = TrainState::initial(c), b = TrainState::initial(c);
    for (long step = 1; step <= 2; ++step) {
      const StepLosses la = train_step(a, draw_batch(c, data, step), c);
      const StepLosses lb = train_step(b, draw_batch(c, data, step), c);
      CHECK(la.d_real == lb.d_real);
      CHECK(la.d_fake == lb.d_fake);
      CHECK(la.g == lb.g);
      CHECK(la.r == lb.r);
      CHECK(la.sigma_ratio == lb.sigma_ratio);
    }
    CHECK(hash_players(a).g == hash_players(b).g);
    CHECK(hash_players(a).d == hash_players(b).d);
    CHECK(hash_players(a).r == hash_players(b).r);
  }

  TEST_CASE("the recognizer update never sees fake images") {
    const auto dir = corpus_dir("rfake");
    const TrainConfig c = tiny_config(dir);
    const TrainData data = load_train_data(c);
    StepBatch one = draw_batch(c, data, 1);
    StepBatch other = one;
    other.fake_texts.assign(one.fake_texts.size(), "cab");
    other.fake_noise = sample_noise(99, static_cast<int>(one.fake_texts.size()), c.shape);
    TrainState a = TrainState::initial(c), b = TrainState::initial(c);
    const StepLosses la = train_step(a, one, c);
    const StepLosses lb = train_step(b, other, c);
    CHECK(hash_players(a).r == hash_players(b).r);
    CHECK(la.r == lb.r);
    CHECK(hash_players(a).g != hash_players(b).g);
  }

  TEST_CASE("unlabeled transcripts are never read") {
    const auto dir = corpus_dir("semisup");
    const auto manifest = dir / "corpus" / "manifest.tsv";
    TrainConfig c1 = tiny_config(dir);
    c1.unlabeled_manifest = rewrite_transcripts(manifest, dir / "unl_a.tsv", "").string();
    TrainConfig c2 = c1;
    // Symbols outside the alphabet would be rejected if anything decoded them.
    c2.unlabeled_manifest = rewrite_transcripts(manifest, dir / "unl_b.tsv", "#?!~garbage~!?#").string();
    const TrainData d1 = load_train_data(c1), d2 = load_train_data(c2);
    REQUIRE(d1.unlabeled.size() == 40);
    TrainState a = TrainState::initial(c1), b = TrainState::initial(c2);
    for (long step = 1; step <= 3; ++step) {
      const StepLosses la = train_step(a, draw_batch(c1, d1, step), c1);
      const StepLosses lb = train_step(b, draw_batch(c2, d2, step), c2);
      CHECK(la.d_real == lb.d_real);
      CHECK(la.d_fake == lb.d_fake);
      CHECK(la.g == lb.g);
      CHECK(la.r == lb.r);
    }
  }

  TEST_CASE("infeasible real targets are skipped") {
    const auto dir = corpus_dir("infeasible");
    const TrainConfig c = tiny_config(dir);
    const TrainData data = load_train_data(c);
    StepBatch batch = draw_batch(c, data, 1);
    LabeledSample narrow{GrayImage(32, 16, 1.0), "aaaa", "narrow"};  // needs 7 frames, has 4
    batch.labeled.push_back(&narrow);
    TrainState s = TrainState::initial(c);
    const StepLosses l = train_step(s, batch, c);
    CHECK(l.skipped_real == 1);
    CHECK(std::isfinite(l.r));
  }

  TEST_CASE("non-finite losses abort the step") {
    const auto dir = corpus_dir("nonfinite");
    const TrainConfig c = tiny_config(dir);
    const TrainData data = load_train_data(c);
    TrainState s = TrainState::initial(c);
    s.d.head.bias.value[0] = std::numeric_limits<double>::quiet_NaN();
    const std::uint64_t r_before = hash_players(s).r;
    CHECK_THROWS_AS(train_step(s, draw_batch(c, data, 1), c), NonFiniteLoss);
    CHECK(s.step == 0);
    // R's own update ran before D failed; D was never stepped.
    CHECK(hash_players(s).r != r_before);
  }

  TEST_CASE("zero steps leaves only the initial checkpoint") {
    const auto dir = corpus_dir("zero");
    TrainConfig c = tiny_config(dir);
    c.steps = 0;
    const TrainResult r = run_training(c, load_train_data(c));
    CHECK(r.state.step == 0);
    CHECK(hash_players(r.state).g == hash_players(TrainState::initial(c)).g);
    const auto ckpt = std::filesystem::path(c.out_dir) / "ckpt";
    CHECK(std::filesystem::exists(ckpt / "step_0" / "G"));
    CHECK(std::filesystem::exists(ckpt / "step_0" / "D"));
    CHECK(std::filesystem::exists(ckpt / "step_0" / "R"));
    int dirs = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(ckpt)) ++dirs;
    CHECK(dirs == 1);
    CHECK(read_lines(r.metrics_csv) == std::vector<std::string>{kMetricsHeader});
    // The step-0 generator loads as a plain generator checkpoint.
    CHECK(load_generator(ckpt / "step_0" / "G").shape() == c.shape);
  }

  TEST_CASE("resuming reproduces the uninterrupted loss trajectory") {
    const auto dir = corpus_dir("resume");
    TrainConfig full = tiny_config(dir);
    full.steps = 4;
    full.out_dir = (dir / "full").string();
    const TrainData data = load_train_data(full);
    const TrainResult a = run_training(full, data);
    const auto lines_a = read_lines(a.metrics_csv);
    REQUIRE(lines_a.size() == 5);
    CHECK(lines_a[0] == kMetricsHeader);
    CHECK(std::filesystem::exists(checkpoint_dir(full.out_dir, 2) / "G"));
    CHECK(std::filesystem::exists(checkpoint_dir(full.out_dir, 4) / "R"));
    CHECK(a.sheets.size() == 2);

    TrainConfig half = full;
    half.steps = 2;
    half.out_dir = (dir / "half").string();
    run_training(half, data);
    TrainConfig rest = half;
    rest.steps = 4;
    rest.resume = checkpoint_dir(half.out_dir, 2).string();
    const TrainResult b = run_training(rest, data);
    CHECK(read_lines(b.metrics_csv) == lines_a);
    CHECK(hash_players(b.state).g == hash_players(a.state).g);
    CHECK(hash_players(b.state).d == hash_players(a.state).d);
    CHECK(hash_players(b.state).r == hash_players(a.state).r);
  }

  TEST_CASE("missing manifest is reported by path") {
    TrainConfig c;
    c.manifest = "/nonexistent/dir/manifest.tsv";
    try {
      load_train_data(c);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("/nonexistent/dir/manifest.tsv") != std::string::npos);
    }
  }
}
