#include "scrabble/receptive_field.hpp"

#include <algorithm>

namespace scrabble {
namespace {

int step_width(const WidthOp& op, int w) {
  switch (op.kind) {
    case WidthOp::Kind::Conv:
      return w;
    case WidthOp::Kind::Upsample:
      return w * op.size;
    case WidthOp::Kind::Pool:
      return op.ceil_mode ? (w + op.size - 1) / op.size : w / op.size;
  }
  return w;
}

}  // namespace

int output_width(const std::vector<WidthOp>& ops, int input_width) {
  int w = input_width;
  for (const auto& op : ops) w = step_width(op, w);
  return w;
}

ColumnRange propagate_influence(const std::vector<WidthOp>& ops, ColumnRange changed,
                                int input_width) {
  int w = input_width;
  ColumnRange r = changed;
  for (const auto& op : ops) {
    const int out_w = step_width(op, w);
    switch (op.kind) {
      case WidthOp::Kind::Conv: {
        // Output x reads inputs [x - pad, x - pad + k).
        const int pad = op.size / 2;
        r = {r.begin - (op.size - 1 - pad), r.end + pad};
        break;
      }
      case WidthOp::Kind::Upsample:
        r = {r.begin * op.size, r.end * op.size};
        break;
      case WidthOp::Kind::Pool:
        r = {r.begin / op.size, (r.end - 1) / op.size + 1};
        break;
    }
    r.begin = std::clamp(r.begin, 0, out_w);
    r.end = std::clamp(r.end, 0, out_w);
    if (r.end < r.begin) r.end = r.begin;
    w = out_w;
  }
  return r;
}

}  // namespace scrabble
