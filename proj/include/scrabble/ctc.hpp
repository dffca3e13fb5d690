#pragma once

#include <span>

#include "scrabble/tensor.hpp"

namespace scrabble {

// Smallest frame count that can emit `target`: one frame per symbol plus a
// separating blank between each adjacent repeated pair.
int ctc_min_frames(std::span<const int> target);

struct CtcResult {
  double loss = 0.0;  // negative log-likelihood
  Matrix grad;        // d loss / d logits, T x C
};

/// Connectionist temporal classification loss of T x C unnormalized frame
/// scores against `target`, via the log-space forward-backward recursion.
/// Throws InfeasibleTarget when T < ctc_min_frames(target).
double ctc_loss(const Matrix& logits, std::span<const int> target, int blank);
CtcResult ctc_loss_and_grad(const Matrix& logits, std::span<const int> target, int blank);

// Row-wise log-softmax.
Matrix log_softmax(const Matrix& logits);

}  // namespace scrabble
