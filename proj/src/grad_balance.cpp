#include "scrabble/grad_balance.hpp"

#include <cmath>

#include "scrabble/errors.hpp"

namespace scrabble {
namespace {

void check_shapes(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("gradient balancing needs two non-empty arrays of equal size");
  }
}

}  // namespace

BalanceMode parse_balance_mode(const std::string& text) {
  if (text == "none") return BalanceMode::None;
  if (text == "full") return BalanceMode::Full;
  if (text == "std_only") return BalanceMode::StdOnly;
  throw ConfigError("unknown gb.mode '" + text + "' (expected none|full|std_only)");
}

const char* to_string(BalanceMode mode) {
  switch (mode) {
    case BalanceMode::None:
      return "none";
    case BalanceMode::Full:
      return "full";
    case BalanceMode::StdOnly:
      return "std_only";
  }
  return "?";
}

GeneratorObjective parse_objective(const std::string& text) {
  if (text == "joint") return GeneratorObjective::Joint;
  if (text == "r_only") return GeneratorObjective::RecognizerOnly;
  if (text == "d_only") return GeneratorObjective::DiscriminatorOnly;
  throw ConfigError("unknown gb.objective '" + text + "' (expected joint|r_only|d_only)");
}

const char* to_string(GeneratorObjective objective) {
  switch (objective) {
    case GeneratorObjective::Joint:
      return "joint";
    case GeneratorObjective::RecognizerOnly:
      return "r_only";
    case GeneratorObjective::DiscriminatorOnly:
      return "d_only";
  }
  return "?";
}

void GradBalanceConfig::validate() const {
  if (mode != BalanceMode::None && !(alpha > 0.0)) throw ConfigError("gb.alpha must be > 0");
  if (!(lambda >= 0.0)) throw ConfigError("gb.lambda must be >= 0");
}

void GradBalanceConfig::to_config(KeyValueConfig& cfg) const {
  cfg.set("gb.mode", to_string(mode));
  cfg.set("gb.alpha", alpha);
  cfg.set("gb.lambda", lambda);
  cfg.set("gb.objective", to_string(objective));
}

GradBalanceConfig GradBalanceConfig::from_config(const KeyValueConfig& cfg) {
  GradBalanceConfig c;
  c.mode = parse_balance_mode(cfg.get_string("gb.mode", to_string(c.mode)));
  c.alpha = cfg.get_double("gb.alpha", c.alpha);
  c.lambda = cfg.get_double("gb.lambda", c.lambda);
  c.objective = parse_objective(cfg.get_string("gb.objective", to_string(c.objective)));
  c.validate();
  return c;
}

Moments moments(std::span<const double> values) {
  if (values.empty()) return {};
  double s = 0.0;
  for (double v : values) s += v;
  const double mean = s / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

std::vector<double> balance_full(std::span<const double> grad_r, std::span<const double> grad_d,
                                 double alpha) {
  check_shapes(grad_r, grad_d);
  const Moments r = moments(grad_r);
  const Moments d = moments(grad_d);
  if (r.stddev == 0.0) throw DegenerateGradient();
  const double ratio = d.stddev / r.stddev;
  std::vector<double> out(grad_r.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = alpha * (ratio * (grad_r[i] - r.mean) + d.mean);
  }
  return out;
}

std::vector<double> balance_std(std::span<const double> grad_r, std::span<const double> grad_d,
                                double alpha) {
  check_shapes(grad_r, grad_d);
  const Moments r = moments(grad_r);
  const Moments d = moments(grad_d);
  if (r.stddev == 0.0) throw DegenerateGradient();
  const double scale = alpha * (d.stddev / r.stddev);
  std::vector<double> out(grad_r.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * grad_r[i];
  return out;
}

CombinedGradient combine_generator_gradient(std::span<const double> grad_d,
                                            std::span<const double> grad_r,
                                            const GradBalanceConfig& config) {
  check_shapes(grad_r, grad_d);
  CombinedGradient out;
  const double sd_r = moments(grad_r).stddev;
  out.sigma_ratio = sd_r > 0.0 ? moments(grad_d).stddev / sd_r : 0.0;

  if (config.objective == GeneratorObjective::DiscriminatorOnly) {
    out.grad.assign(grad_d.begin(), grad_d.end());
    return out;
  }
  if (config.objective == GeneratorObjective::RecognizerOnly) {
    out.grad.assign(grad_r.begin(), grad_r.end());
    return out;
  }

  out.grad.assign(grad_d.begin(), grad_d.end());
  std::vector<double> term;
  switch (config.mode) {
    case BalanceMode::None:
      for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += config.lambda * grad_r[i];
      return out;
    case BalanceMode::Full:
    case BalanceMode::StdOnly:
      if (sd_r == 0.0) {
        out.degenerate = true;
        return out;
      }
      term = config.mode == BalanceMode::Full ? balance_full(grad_r, grad_d, config.alpha)
                                              : balance_std(grad_r, grad_d, config.alpha);
      break;
  }
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += term[i];
  return out;
}

}  // namespace scrabble
