#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scrabble/config.hpp"
#include "scrabble/core_types.hpp"
#include "scrabble/discriminator.hpp"
#include "scrabble/generator.hpp"
#include "scrabble/grad_balance.hpp"
#include "scrabble/optimizer.hpp"
#include "scrabble/recognizer.hpp"

namespace scrabble {

struct TrainConfig {
  ModelShape shape = ModelShape::desk();
  std::string alphabet = Alphabet::lowercase().chars();
  NormMode norm = NormMode::Conditional;
  std::vector<int> r_channels = Recognizer::desk_channels();

  std::string manifest;            // labeled train split, required
  std::string unlabeled_manifest;  // every entry used as unlabeled, optional
  std::string lexicon;             // fake-text source; train transcripts when empty
  int max_word_len = 0;            // 0: no limit

  long steps = 1000;
  int batch_size = 8;
  std::uint64_t seed = 1;
  long checkpoint_every = 500;
  long sheet_every = 500;
  long log_every = 50;
  std::string out_dir = "run";
  std::string resume;  // a ckpt/step_<N> directory

  AdamSettings opt_g;
  AdamSettings opt_d;
  AdamSettings opt_r;
  GradBalanceConfig gb;

  int sheet_columns = 6;
  int sheet_rows = 4;
  std::uint64_t sheet_seed = 7;
  std::vector<std::string> sheet_texts;  // picked from the lexicon when empty

  void validate() const;
  // Every key with its effective value, defaults included.
  KeyValueConfig to_config() const;
  static TrainConfig from_config(const KeyValueConfig& cfg);
};

struct StepLosses {
  double d_real = 0.0;
  double d_fake = 0.0;
  double g = 0.0;  // hinge generator loss
  double r = 0.0;  // recognizer CTC loss on real labeled images
  double r_fake = 0.0;
  double sigma_ratio = 0.0;
  bool degenerate = false;
  int skipped_real = 0;  // CTC targets infeasible at the image width
  int skipped_fake = 0;
};

struct TrainState {
  long step = 0;
  Generator g;
  Discriminator d;
  Recognizer r;
  Adam opt_g;
  Adam opt_d;
  Adam opt_r;
  std::vector<StepLosses> history;

  static TrainState initial(const TrainConfig& config);
};

struct TrainData {
  std::vector<LabeledSample> labeled;
  std::vector<UnlabeledSample> unlabeled;
  std::vector<std::string> lexicon;
};

// Reads the manifests named by the config. Labeled images are rescaled to
// char_width px per character; the unlabeled pool keeps its aspect ratio.
TrainData load_train_data(const TrainConfig& config);

struct StepBatch {
  std::vector<const LabeledSample*> labeled;
  std::vector<const UnlabeledSample*> unlabeled;
  std::vector<std::string> fake_texts;  // all of one length
  std::vector<NoiseBundle> fake_noise;
};

// Batch for step `step` (1-based). Depends only on (config.seed, step), so
// a resumed run sees the same data as an uninterrupted one.
StepBatch draw_batch(const TrainConfig& config, const TrainData& data, long step);

// Parameter hashes taken around each sub-step of train_step.
struct IsolationTrace {
  struct Snapshot {
    std::uint64_t g = 0;
    std::uint64_t d = 0;
    std::uint64_t r = 0;
  };
  Snapshot before;
  Snapshot after_r;
  Snapshot after_d;
  Snapshot after_g;
};

IsolationTrace::Snapshot hash_players(const TrainState& state);

/// One optimization step: R on real labeled images, then D on real (labeled
/// and unlabeled pixels) against detached fakes, then G through the
/// balanced image gradient. Throws NonFiniteLoss before applying an update
/// whose loss is not finite.
StepLosses train_step(TrainState& state, const StepBatch& batch, const TrainConfig& config,
                      IsolationTrace* trace = nullptr);

void save_train_checkpoint(const TrainState& state, const std::filesystem::path& dir);
// Restores parameters, running statistics, optimizer slots and the step.
void load_train_checkpoint(TrainState& state, const std::filesystem::path& dir);

std::filesystem::path checkpoint_dir(const std::filesystem::path& out_dir, long step);

inline constexpr const char* kMetricsHeader = "step,loss_d_real,loss_d_fake,loss_g,loss_r,sigma_ratio";

struct TrainResult {
  TrainState state;
  std::filesystem::path metrics_csv;
  std::vector<std::filesystem::path> sheets;
};

using ProgressFn = std::function<void(long step, const StepLosses&)>;

/// Runs config.steps steps (continuing from config.resume when set),
/// writing out_dir/metrics.csv, out_dir/ckpt/step_<N>/{G,D,R} and
/// out_dir/sheets/step_<N>.png. The initial state is checkpointed as
/// step_0 on a fresh run.
TrainResult run_training(const TrainConfig& config, const TrainData& data,
                         const ProgressFn& progress = {});

// Fixed sheet layout for a config: its texts and noise rows.
std::vector<std::string> sheet_texts_for(const TrainConfig& config, const TrainData& data);
std::vector<NoiseBundle> sheet_rows_for(const TrainConfig& config);

}  // namespace scrabble
