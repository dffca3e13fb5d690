#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "scrabble/core_types.hpp"
#include "scrabble/layers.hpp"
#include "scrabble/receptive_field.hpp"
#include "scrabble/tensor.hpp"

namespace scrabble {

enum class NormMode { Conditional, Plain };

NormMode parse_norm_mode(const std::string& text);
const char* to_string(NormMode mode);

/// Up-sampling residual block: norm -> relu -> upsample -> conv3x3 -> norm ->
/// relu -> conv3x3, plus an upsampled 1x1 projection on the skip path.
struct GeneratorBlock {
  UpsampleFactor up;
  ConditionalNorm norm1;
  Conv2d conv1;
  ConditionalNorm norm2;
  Conv2d conv2;
  Conv2d skip;
  bool has_skip_conv = true;

  struct Tape {
    Tensor input;
    ConditionalNorm::Cache norm1;
    Tensor pre_relu1;
    Tensor conv1_in;
    ConditionalNorm::Cache norm2;
    Tensor pre_relu2;
    Tensor conv2_in;
    Tensor skip_in;
  };
};

struct GeneratedBatch {
  std::vector<WordImage> images;
  // N x 1 x H x max_width; columns past a sample's width hold +1 (background).
  Tensor padded;
  // N x max_width, 1 where the column belongs to the sample.
  Matrix mask;
};

/// Character-conditioned fully convolutional generator. Every character
/// selects a filter from the bank; z1 maps each filter to a
/// seed_channels x seed_spatial x seed_spatial patch, patches are laid side by
/// side, and residual blocks modulated by z2..z4 upsample the seed to an
/// img_height x char_width*n image.
class Generator {
 public:
  struct Tape {
    std::vector<std::vector<int>> encoded;
    std::vector<NoiseBundle> noise;
    std::vector<GeneratorBlock::Tape> blocks;
    Tensor head_in;  // before the final relu
    Tensor head_relu;
    Tensor image;
  };

  Generator(const ModelShape& shape, const Alphabet& alphabet,
            NormMode norm = NormMode::Conditional);

  void init(std::uint64_t seed);

  const ModelShape& shape() const noexcept { return shape_; }
  const Alphabet& alphabet() const noexcept { return alphabet_; }
  NormMode norm_mode() const noexcept { return norm_; }

  // 1 x seed_channels x seed_spatial x seed_spatial*n
  Tensor assemble_seed(std::string_view text, const std::vector<double>& z1) const;
  WordImage generate(std::string_view text, const NoiseBundle& noise) const;
  GeneratedBatch generate_batch(const std::vector<std::string>& texts,
                                const std::vector<NoiseBundle>& noise) const;
  std::vector<WordImage> interpolate_styles(std::string_view text, const NoiseBundle& a,
                                            const NoiseBundle& b, int steps) const;

  // Batched forward over equal-length encoded words. Training mode uses
  // batch statistics in the normalization layers and updates their running
  // averages; evaluation mode is a pure function of the parameters.
  Tensor forward(const std::vector<std::vector<int>>& encoded, const std::vector<NoiseBundle>& noise,
                 bool training, Tape* tape);
  Tensor forward_eval(const std::vector<std::vector<int>>& encoded,
                      const std::vector<NoiseBundle>& noise, Tape* tape) const;
  // Accumulates parameter gradients for dL/dimage.
  void backward(const Tape& tape, const Tensor& grad_image);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  // Running normalization statistics (saved with checkpoints, not trained).
  std::vector<Param*> buffers();
  std::vector<const Param*> buffers() const;

  // Horizontal stages from the seed to the output image.
  std::vector<WidthOp> width_ops() const;
  // Output columns that character `index` of an n-character word can affect.
  ColumnRange influence_band(int index, int n_chars) const;

  Param filter_bank;  // n_chars x filter_rows x filter_cols
  std::vector<GeneratorBlock> blocks;
  Conv2d output_conv;

 private:
  Tensor run(const std::vector<std::vector<int>>& encoded, const std::vector<NoiseBundle>& noise,
             bool training, Tape* tape) const;
  Tensor seed_from_encoded(const std::vector<std::vector<int>>& encoded,
                           const std::vector<NoiseBundle>& noise) const;
  void check_noise(const NoiseBundle& noise) const;

  ModelShape shape_;
  Alphabet alphabet_;
  NormMode norm_;
};

}  // namespace scrabble
