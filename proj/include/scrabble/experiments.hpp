#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scrabble/config.hpp"
#include "scrabble/core_types.hpp"
#include "scrabble/data_io.hpp"
#include "scrabble/grad_balance.hpp"
#include "scrabble/optimizer.hpp"
#include "scrabble/recognizer.hpp"
#include "scrabble/training.hpp"

namespace scrabble {

struct EvalResult {
  std::vector<std::string> truths;
  std::vector<std::string> predictions;
  std::vector<int> distances;
  double wer = 0.0;
  double ned = 0.0;
};

// Greedy transcription of every sample, scored against its transcript.
EvalResult evaluate_recognizer(const Recognizer& r, const std::vector<LabeledSample>& samples);

// Per-sample rows (truth, prediction, distance, ned) and a final summary
// row whose truth column reads "__summary__".
void write_eval_csv(const std::filesystem::path& path, const EvalResult& result);

/// Training-data recipes for the recognizer comparison. The finetune arm
/// continues the real+synthetic model on real data only; the
/// synthetic-only arm is used by the balancing ablation.
enum class HtrArm { Real, RealAffine, RealSynthetic, RealSyntheticFinetune, Synthetic };

HtrArm parse_arm(const std::string& text);
const char* to_string(HtrArm arm);
bool needs_generator(HtrArm arm);

struct HtrConfig {
  ModelShape shape = ModelShape::desk();
  std::string alphabet = Alphabet::lowercase().chars();
  std::vector<int> r_channels = Recognizer::desk_channels();

  std::string manifest;   // needs train, val and test entries
  std::string generator;  // G checkpoint for synthetic arms
  std::string lexicon;    // synthetic words; train transcripts when empty
  std::vector<HtrArm> arms{HtrArm::Real, HtrArm::RealAffine, HtrArm::RealSynthetic,
                           HtrArm::RealSyntheticFinetune};

  long steps = 1500;
  long finetune_steps = 500;
  long eval_every = 250;
  int batch_size = 16;
  int synthetic_count = 2000;
  double affine_prob = 0.5;
  AffineRanges affine = AffineRanges::mild();
  AdamSettings opt{2e-4, 0.0, 0.999, 1e-8};
  std::uint64_t seed = 1;
  std::string out_dir = "htr";

  void validate() const;
  KeyValueConfig to_config() const;
  // Reads htr.* keys plus the shared shape.* and alphabet keys;
  // htr.manifest falls back to data.manifest.
  static HtrConfig from_config(const KeyValueConfig& cfg);
};

struct HtrRow {
  HtrArm arm = HtrArm::Real;
  double wer = 0.0;  // test split
  double ned = 0.0;
  double val_wer = 0.0;
  double val_ned = 0.0;
  long best_step = 0;
  int train_samples = 0;
};

struct HtrResult {
  std::vector<HtrRow> rows;
  std::filesystem::path csv;
};

using LogFn = std::function<void(const std::string&)>;

// Trains one recognizer per arm, keeps the checkpoint with the best
// validation WER (ties broken by NED), and reports test WER and NED in
// out_dir/htr_results.csv. Throws MissingCheckpoint when a synthetic arm
// has no generator.
HtrResult run_htr_experiment(const HtrConfig& config, const LogFn& log = {});

struct AblationConfig {
  TrainConfig train;
  HtrConfig htr;
  std::vector<BalanceMode> modes{BalanceMode::None, BalanceMode::Full, BalanceMode::StdOnly};
  std::vector<double> alphas{10.0, 1.0, 0.1};
  bool extremes = true;  // add the recognizer-only and discriminator-only objectives
  bool run_htr = true;
  HtrArm htr_arm = HtrArm::RealSynthetic;
  std::string out_dir = "ablation";

  void validate() const;
  KeyValueConfig to_config() const;
  static AblationConfig from_config(const KeyValueConfig& cfg);
};

struct AblationCell {
  std::string name;
  GradBalanceConfig gb;
};

// (mode, alpha) cells in order, then the two single-loss extremes. With
// mode none, alpha weights the recognizer term directly.
std::vector<AblationCell> ablation_cells(const AblationConfig& config);

struct AblationRow {
  AblationCell cell;
  StepLosses final_losses;
  double style_variance = 0.0;
  std::uint64_t layout_hash = 0;
  std::filesystem::path sheet;
  bool has_htr = false;
  double wer = 0.0;
  double ned = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::filesystem::path csv;
  std::filesystem::path grid;
};

// One GAN per cell, each with the same texts and noise rows on its sample
// sheet, plus an optional downstream recognizer per cell.
AblationResult run_alpha_ablation(const AblationConfig& config, const LogFn& log = {});

}  // namespace scrabble
