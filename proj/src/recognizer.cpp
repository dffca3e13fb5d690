#include "scrabble/recognizer.hpp"

#include <algorithm>

#include "scrabble/discriminator.hpp"
#include "scrabble/errors.hpp"

namespace scrabble {

const std::vector<PoolSpec>& Recognizer::pool_schedule() {
  // Two 2x2 pools then three height-only pools: height /32, width /4.
  static const std::vector<PoolSpec> pools{{2, 2}, {2, 2}, {1, 1}, {2, 1}, {2, 1}, {2, 1}};
  return pools;
}

Recognizer::Recognizer(const ModelShape& shape, const Alphabet& alphabet, std::vector<int> channels)
    : shape_(shape), alphabet_(alphabet), channels_(std::move(channels)) {
  shape_.validate();
  if (static_cast<int>(channels_.size()) != kLayers) {
    throw ConfigError("recognizer needs exactly " + std::to_string(kLayers) + " channel counts");
  }
  int hprod = 1;
  for (const auto& p : pool_schedule()) hprod *= p.height;
  if (shape_.img_height != hprod) {
    throw ShapeConfigError("recognizer pools fold height " + std::to_string(hprod) +
                           " to one row but img_height is " + std::to_string(shape_.img_height));
  }
  if (shape_.char_width % horizontal_stride() != 0) {
    throw ShapeConfigError("recognizer horizontal stride must divide char_width");
  }
  int in_c = 1;
  for (int i = 0; i < kLayers; ++i) {
    if (channels_[static_cast<std::size_t>(i)] <= 0) throw ConfigError("recognizer channels must be positive");
    convs.emplace_back("R.conv" + std::to_string(i), in_c, channels_[static_cast<std::size_t>(i)], 3);
    in_c = channels_[static_cast<std::size_t>(i)];
  }
  head = Conv2d("R.head", in_c, alphabet_.class_count(), 1);
}

int Recognizer::horizontal_stride() const {
  int s = 1;
  for (const auto& p : pool_schedule()) s *= p.width;
  return s;
}

void Recognizer::init(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0x52));
  for (auto& c : convs) c.init(rng);
  head.init(rng);
}

std::vector<Param*> Recognizer::params() {
  std::vector<Param*> out;
  for (auto& c : convs) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

std::vector<const Param*> Recognizer::params() const {
  auto mut = const_cast<Recognizer*>(this)->params();
  return {mut.begin(), mut.end()};
}

void Recognizer::check_input(int height, int width) const {
  if (height != shape_.img_height) {
    throw DataError("recognizer expects height " + std::to_string(shape_.img_height) + ", got " +
                    std::to_string(height));
  }
  if (width < min_width()) throw WidthTooSmall(width, min_width());
}

Tensor Recognizer::forward(const Tensor& images, Tape* tape) const {
  check_input(images.h(), images.w());
  if (tape) {
    tape->conv_in.assign(kLayers, {});
    tape->conv_out.assign(kLayers, {});
    tape->pools.assign(kLayers, {});
    tape->pool_in.assign(kLayers, {});
  }
  Tensor h = images;
  const auto& pools = pool_schedule();
  for (int i = 0; i < kLayers; ++i) {
    Tensor c = convs[static_cast<std::size_t>(i)].forward(h);
    Tensor r = relu(c);
    const auto& ps = pools[static_cast<std::size_t>(i)];
    Tensor next;
    if (ps.height > 1 || ps.width > 1) {
      MaxPoolResult mp = max_pool(r, ps.height, ps.width);
      next = mp.out;
      if (tape) {
        tape->pool_in[static_cast<std::size_t>(i)] = r.shape();
        tape->pools[static_cast<std::size_t>(i)] = std::move(mp);
      }
    } else {
      next = std::move(r);
    }
    if (tape) {
      tape->conv_in[static_cast<std::size_t>(i)] = std::move(h);
      tape->conv_out[static_cast<std::size_t>(i)] = std::move(c);
    }
    h = std::move(next);
  }
  Tensor logits = head.forward(h);
  if (tape) {
    tape->head_in = std::move(h);
    tape->logits = logits;
  }
  return logits;
}

Tensor Recognizer::backward(const Tape& tape, const Tensor& grad_logits) {
  Tensor g = head.backward(tape.head_in, grad_logits);
  const auto& pools = pool_schedule();
  for (int i = kLayers; i-- > 0;) {
    const auto idx = static_cast<std::size_t>(i);
    const auto& ps = pools[idx];
    if (ps.height > 1 || ps.width > 1) g = max_pool_backward(tape.pools[idx], g, tape.pool_in[idx]);
    g = relu_backward(tape.conv_out[idx], g);
    g = convs[idx].backward(tape.conv_in[idx], g);
  }
  return g;
}

FrameLogits Recognizer::recognize(const GrayImage& image) const {
  check_input(image.height, image.width);
  return frame_logits(forward(to_tensor(image), nullptr), 0, image.width);
}

std::vector<WidthOp> Recognizer::width_ops() const {
  std::vector<WidthOp> ops;
  const auto& pools = pool_schedule();
  for (int i = 0; i < kLayers; ++i) {
    ops.push_back(WidthOp::conv(convs[static_cast<std::size_t>(i)].kernel()));
    const int pw = pools[static_cast<std::size_t>(i)].width;
    if (pw > 1) ops.push_back(WidthOp::pool(pw, true));
  }
  ops.push_back(WidthOp::conv(head.kernel()));
  return ops;
}

FrameLogits frame_logits(const Tensor& logits, int sample, int input_width) {
  FrameLogits out;
  out.input_width = input_width;
  out.scores = Matrix(logits.w(), logits.c());
  for (int c = 0; c < logits.c(); ++c) {
    for (int t = 0; t < logits.w(); ++t) out.scores(t, c) = logits.at(sample, c, 0, t);
  }
  return out;
}

void scatter_frame_grad(const Matrix& grad, int sample, Tensor& grad_logits) {
  for (int c = 0; c < grad.cols; ++c) {
    for (int t = 0; t < grad.rows; ++t) grad_logits.at(sample, c, 0, t) = grad(t, c);
  }
}

std::string greedy_decode(const FrameLogits& logits, const Alphabet& alphabet) {
  std::string out;
  int prev = -1;
  for (int t = 0; t < logits.frames(); ++t) {
    int best = 0;
    for (int c = 1; c < logits.classes(); ++c) {
      if (logits.scores(t, c) > logits.scores(t, best)) best = c;
    }
    if (best != prev && best != alphabet.blank_index()) out.push_back(alphabet.decode(best));
    prev = best;
  }
  return out;
}

ImageGradient recognizer_image_gradient(const GrayImage& image, std::span<const int> target,
                                        Recognizer& recognizer) {
  Recognizer::Tape tape;
  Tensor logits = recognizer.forward(to_tensor(image), &tape);
  FrameLogits fl = frame_logits(logits, 0, image.width);
  CtcResult ctc = ctc_loss_and_grad(fl.scores, target, recognizer.alphabet().blank_index());
  Tensor g(logits.shape());
  scatter_frame_grad(ctc.grad, 0, g);
  Tensor gi = recognizer.backward(tape, g);
  return {ctc.loss, to_image(gi)};
}

}  // namespace scrabble
