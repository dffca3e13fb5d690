#pragma once

#include <vector>

#include "scrabble/layers.hpp"

namespace scrabble {

struct AdamSettings {
  double lr = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed list of parameters. Moment slots are kept as Params
/// so they can be checkpointed alongside the weights. The optimizer does not
/// hold on to the parameters; step() receives the same list, in the same
/// order, as the constructor.
class Adam {
 public:
  Adam() = default;
  Adam(const std::vector<Param*>& params, AdamSettings settings);

  void step(const std::vector<Param*>& params);
  long steps_taken() const noexcept { return t_; }
  void set_steps_taken(long t) noexcept { t_ = t; }
  const AdamSettings& settings() const noexcept { return settings_; }

  // first/second moment slots, in parameter order
  std::vector<Param*> slots();
  std::vector<const Param*> slots() const;

 private:
  std::vector<Param> m_;
  std::vector<Param> v_;
  AdamSettings settings_;
  long t_ = 0;
};

}  // namespace scrabble
