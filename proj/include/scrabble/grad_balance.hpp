#pragma once

#include <span>
#include <string>
#include <vector>

#include "scrabble/config.hpp"

namespace scrabble {

enum class BalanceMode { None, Full, StdOnly };

BalanceMode parse_balance_mode(const std::string& text);
const char* to_string(BalanceMode mode);

/// Which image gradients reach the generator. The single-loss objectives
/// are the extremes of the balancing ablation.
enum class GeneratorObjective { Joint, RecognizerOnly, DiscriminatorOnly };

GeneratorObjective parse_objective(const std::string& text);
const char* to_string(GeneratorObjective objective);

struct GradBalanceConfig {
  BalanceMode mode = BalanceMode::StdOnly;
  double alpha = 1.0;
  // Weight of the recognizer term; only consulted when mode == None.
  double lambda = 1.0;
  GeneratorObjective objective = GeneratorObjective::Joint;

  void validate() const;
  void to_config(KeyValueConfig& cfg) const;
  static GradBalanceConfig from_config(const KeyValueConfig& cfg);
};

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;  // population convention (divide by N)
};

Moments moments(std::span<const double> values);

// alpha * (sigma_D / sigma_R * (grad_R - mu_R) + mu_D)
std::vector<double> balance_full(std::span<const double> grad_r, std::span<const double> grad_d,
                                 double alpha);
// alpha * sigma_D / sigma_R * grad_R
std::vector<double> balance_std(std::span<const double> grad_r, std::span<const double> grad_d,
                                double alpha);

struct CombinedGradient {
  std::vector<double> grad;
  // sigma(grad_D) / sigma(grad_R); 0 when undefined.
  double sigma_ratio = 0.0;
  // The recognizer gradient was constant, so only grad_D was used.
  bool degenerate = false;
};

/// Gradient injected at the generated image. Scale factors are plain
/// numbers computed from the current gradients, never differentiated.
CombinedGradient combine_generator_gradient(std::span<const double> grad_d,
                                            std::span<const double> grad_r,
                                            const GradBalanceConfig& config);

}  // namespace scrabble
