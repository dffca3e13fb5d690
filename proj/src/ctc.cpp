#include "scrabble/ctc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "scrabble/errors.hpp"

namespace scrabble {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

void check_target(std::span<const int> target, int classes, int blank) {
  for (int t : target) {
    if (t < 0 || t >= classes || t == blank) {
      throw std::invalid_argument("CTC target index " + std::to_string(t) + " is invalid");
    }
  }
}

struct Lattice {
  std::vector<int> labels;  // blank-extended target, length 2L+1
  Matrix logp;
  Matrix alpha;
  double log_likelihood = kNegInf;
};

Lattice forward(const Matrix& logits, std::span<const int> target, int blank) {
  check_target(target, logits.cols, blank);
  const int frames = logits.rows;
  const int need = ctc_min_frames(target);
  if (frames < need) throw InfeasibleTarget(frames, need);

  Lattice lat;
  lat.labels.reserve(2 * target.size() + 1);
  lat.labels.push_back(blank);
  for (int t : target) {
    lat.labels.push_back(t);
    lat.labels.push_back(blank);
  }
  const int states = static_cast<int>(lat.labels.size());
  lat.logp = log_softmax(logits);
  lat.alpha = Matrix(frames, states, kNegInf);
  lat.alpha(0, 0) = lat.logp(0, lat.labels[0]);
  if (states > 1) lat.alpha(0, 1) = lat.logp(0, lat.labels[1]);
  for (int t = 1; t < frames; ++t) {
    for (int s = 0; s < states; ++s) {
      double a = lat.alpha(t - 1, s);
      if (s >= 1) a = log_add(a, lat.alpha(t - 1, s - 1));
      if (s >= 2 && lat.labels[s] != blank && lat.labels[s] != lat.labels[s - 2]) {
        a = log_add(a, lat.alpha(t - 1, s - 2));
      }
      lat.alpha(t, s) = a == kNegInf ? kNegInf : a + lat.logp(t, lat.labels[s]);
    }
  }
  lat.log_likelihood = lat.alpha(frames - 1, states - 1);
  if (states > 1) lat.log_likelihood = log_add(lat.log_likelihood, lat.alpha(frames - 1, states - 2));
  return lat;
}

}  // namespace

int ctc_min_frames(std::span<const int> target) {
  int repeats = 0;
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++repeats;
  }
  return static_cast<int>(target.size()) + repeats;
}

Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols);
  for (int t = 0; t < logits.rows; ++t) {
    double m = kNegInf;
    for (int c = 0; c < logits.cols; ++c) m = std::max(m, logits(t, c));
    double s = 0.0;
    for (int c = 0; c < logits.cols; ++c) s += std::exp(logits(t, c) - m);
    const double lse = m + std::log(s);
    for (int c = 0; c < logits.cols; ++c) out(t, c) = logits(t, c) - lse;
  }
  return out;
}

double ctc_loss(const Matrix& logits, std::span<const int> target, int blank) {
  return -forward(logits, target, blank).log_likelihood;
}

CtcResult ctc_loss_and_grad(const Matrix& logits, std::span<const int> target, int blank) {
  Lattice lat = forward(logits, target, blank);
  const int frames = logits.rows;
  const int states = static_cast<int>(lat.labels.size());
  const auto& labels = lat.labels;

  // beta(t, s) includes the emission at frame t.
  Matrix beta(frames, states, kNegInf);
  beta(frames - 1, states - 1) = lat.logp(frames - 1, labels[states - 1]);
  if (states > 1) beta(frames - 1, states - 2) = lat.logp(frames - 1, labels[states - 2]);
  for (int t = frames - 2; t >= 0; --t) {
    for (int s = 0; s < states; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < states) b = log_add(b, beta(t + 1, s + 1));
      if (s + 2 < states && labels[s] != blank && labels[s] != labels[s + 2]) {
        b = log_add(b, beta(t + 1, s + 2));
      }
      beta(t, s) = b == kNegInf ? kNegInf : b + lat.logp(t, labels[s]);
    }
  }

  CtcResult res;
  res.loss = -lat.log_likelihood;
  res.grad = Matrix(frames, logits.cols);
  const double ll = lat.log_likelihood;
  std::vector<double> occupancy(static_cast<std::size_t>(logits.cols));
  for (int t = 0; t < frames; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kNegInf);
    for (int s = 0; s < states; ++s) {
      const double ab = lat.alpha(t, s) + beta(t, s);
      if (ab == kNegInf) continue;
      auto& slot = occupancy[static_cast<std::size_t>(labels[s])];
      slot = log_add(slot, ab - lat.logp(t, labels[s]));
    }
    for (int c = 0; c < logits.cols; ++c) {
      const double prob = std::exp(lat.logp(t, c));
      const double occ = occupancy[static_cast<std::size_t>(c)];
      res.grad(t, c) = prob - (occ == kNegInf ? 0.0 : std::exp(occ - ll));
    }
  }
  return res;
}

}  // namespace scrabble
