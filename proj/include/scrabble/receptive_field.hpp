#pragma once

#include <vector>

namespace scrabble {

/// One horizontal stage of a convolutional stack, as far as column
/// dependencies are concerned. Pointwise stages (activations, evaluation-mode
/// normalization) do not appear.
struct WidthOp {
  enum class Kind { Conv, Upsample, Pool };
  Kind kind = Kind::Conv;
  int size = 1;  // kernel width for Conv, factor for Upsample, stride for Pool
  bool ceil_mode = false;  // Pool only

  static WidthOp conv(int kernel) { return {Kind::Conv, kernel, false}; }
  static WidthOp upsample(int factor) { return {Kind::Upsample, factor, false}; }
  static WidthOp pool(int stride, bool ceil_mode) { return {Kind::Pool, stride, ceil_mode}; }
};

/// Half-open column interval [begin, end).
struct ColumnRange {
  int begin = 0;
  int end = 0;
  int width() const { return end - begin; }
  bool contains(int x) const { return x >= begin && x < end; }
  bool operator==(const ColumnRange&) const = default;
};

int output_width(const std::vector<WidthOp>& ops, int input_width);

// Columns of the final output that can change when input columns
// `changed` change, clipped to the valid output range.
ColumnRange propagate_influence(const std::vector<WidthOp>& ops, ColumnRange changed,
                                int input_width);

}  // namespace scrabble
