#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scrabble/core_types.hpp"
#include "scrabble/layers.hpp"
#include "scrabble/receptive_field.hpp"
#include "scrabble/tensor.hpp"

namespace scrabble {

// Down-sampling residual block: [relu] -> conv3x3 -> relu -> conv3x3 ->
// avgpool, plus conv1x1 -> avgpool on the skip path.
struct DiscriminatorBlock {
  bool preactivation = true;
  Conv2d conv1;
  Conv2d conv2;
  Conv2d skip;

  struct Tape {
    Tensor input;
    Tensor conv1_in;
    Tensor conv1_out;
    Tensor conv2_in;
    Shape4 pooled_from;
  };
};

struct PatchScore {
  double value = 0.0;  // mean of `patches`
  Matrix patches;      // rows x columns of patch predictions
};

/// Fully convolutional real/fake critic. Four residual blocks halve both
/// dimensions, a 1x1 head scores every remaining position, and the image
/// score is the mean of those patch scores. Transcripts never enter here.
class Discriminator {
 public:
  struct Tape {
    std::vector<DiscriminatorBlock::Tape> blocks;
    Tensor head_in;
    Tensor head_relu;
    Tensor patches;  // N x 1 x H' x W'
  };

  static constexpr int kBlocks = 4;

  explicit Discriminator(const ModelShape& shape);
  void init(std::uint64_t seed);

  const ModelShape& shape() const noexcept { return shape_; }
  // Narrowest image that still yields one patch.
  int min_width() const noexcept { return 1 << kBlocks; }
  int channels(int block) const;

  PatchScore score(const GrayImage& image) const;
  // N x 1 x H x W images of equal width -> N x 1 x H' x W' patch scores.
  Tensor forward(const Tensor& images, Tape* tape) const;
  // Accumulates parameter gradients; returns dL/dimages.
  Tensor backward(const Tape& tape, const Tensor& grad_patches);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;

  std::vector<WidthOp> width_ops() const;

  std::vector<DiscriminatorBlock> blocks;
  Conv2d head;

 private:
  void check_input(int height, int width) const;

  ModelShape shape_;
};

// Tensor view of a single grayscale image (1 x 1 x H x W).
Tensor to_tensor(const GrayImage& image);
GrayImage to_image(const Tensor& t, int sample = 0);

double hinge_d_loss(std::span<const double> real_scores, std::span<const double> fake_scores);
double hinge_g_loss(std::span<const double> fake_scores);

}  // namespace scrabble
