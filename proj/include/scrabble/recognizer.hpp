#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scrabble/core_types.hpp"
#include "scrabble/ctc.hpp"
#include "scrabble/layers.hpp"
#include "scrabble/receptive_field.hpp"
#include "scrabble/tensor.hpp"

namespace scrabble {

struct FrameLogits {
  Matrix scores;  // T windows x C classes
  int input_width = 0;

  int frames() const noexcept { return scores.rows; }
  int classes() const noexcept { return scores.cols; }
};

/// Pooling after a convolution layer: (height, width) kernel == stride.
struct PoolSpec {
  int height = 1;
  int width = 1;
};

/// Convolution-only text recognizer: six 3x3 conv+ReLU layers with five
/// max pools folding the height to 1, then a per-window linear head. There
/// is no recurrent component, so a frame only sees its receptive field.
class Recognizer {
 public:
  static constexpr int kLayers = 6;

  struct Tape {
    std::vector<Tensor> conv_in;
    std::vector<Tensor> conv_out;  // pre-relu
    std::vector<MaxPoolResult> pools;
    std::vector<Shape4> pool_in;
    Tensor head_in;
    Tensor logits;  // N x C x 1 x T
  };

  Recognizer(const ModelShape& shape, const Alphabet& alphabet, std::vector<int> channels);
  void init(std::uint64_t seed);

  static std::vector<int> desk_channels() { return {8, 16, 32, 32, 48, 48}; }
  // Pool after each conv layer; {1,1} means none.
  static const std::vector<PoolSpec>& pool_schedule();

  const ModelShape& shape() const noexcept { return shape_; }
  const Alphabet& alphabet() const noexcept { return alphabet_; }
  const std::vector<int>& channels() const noexcept { return channels_; }
  int horizontal_stride() const;
  int min_width() const { return horizontal_stride(); }

  FrameLogits recognize(const GrayImage& image) const;
  // N x 1 x H x W -> N x C x 1 x T.
  Tensor forward(const Tensor& images, Tape* tape) const;
  // Accumulates parameter gradients; returns dL/dimages.
  Tensor backward(const Tape& tape, const Tensor& grad_logits);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  std::vector<WidthOp> width_ops() const;

  std::vector<Conv2d> convs;
  Conv2d head;

 private:
  void check_input(int height, int width) const;

  ModelShape shape_;
  Alphabet alphabet_;
  std::vector<int> channels_;
};

// Frame logits of sample n of a forward() result.
FrameLogits frame_logits(const Tensor& logits, int sample, int input_width);
// Scatters T x C gradient rows back into the N x C x 1 x T layout.
void scatter_frame_grad(const Matrix& grad, int sample, Tensor& grad_logits);

std::string greedy_decode(const FrameLogits& logits, const Alphabet& alphabet);

struct ImageGradient {
  double loss = 0.0;
  GrayImage grad;
};

// d ctc_loss(recognize(image), target) / d pixels. Parameter gradients of
// `recognizer` are accumulated as a side effect of the backward pass.
ImageGradient recognizer_image_gradient(const GrayImage& image, std::span<const int> target,
                                        Recognizer& recognizer);

}  // namespace scrabble
