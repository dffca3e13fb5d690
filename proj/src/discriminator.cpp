#include "scrabble/discriminator.hpp"

#include <algorithm>

#include "scrabble/errors.hpp"

namespace scrabble {

Tensor to_tensor(const GrayImage& image) {
  Tensor t(1, 1, image.height, image.width);
  std::copy(image.pixels.begin(), image.pixels.end(), t.data());
  return t;
}

GrayImage to_image(const Tensor& t, int sample) {
  GrayImage img(t.h(), t.w());
  std::copy(t.sample(sample), t.sample(sample) + t.shape().plane(), img.pixels.begin());
  return img;
}

Discriminator::Discriminator(const ModelShape& shape) : shape_(shape) {
  shape_.validate();
  int in_c = 1;
  for (int k = 0; k < kBlocks; ++k) {
    const int out_c = channels(k);
    const std::string p = "D.block" + std::to_string(k);
    DiscriminatorBlock b;
    b.preactivation = k > 0;
    b.conv1 = Conv2d(p + ".conv1", in_c, out_c, 3);
    b.conv2 = Conv2d(p + ".conv2", out_c, out_c, 3);
    b.skip = Conv2d(p + ".skip", in_c, out_c, 1);
    blocks.push_back(std::move(b));
    in_c = out_c;
  }
  head = Conv2d("D.head", in_c, 1, 1);
}

int Discriminator::channels(int block) const {
  // Mirror of the generator's halving schedule, ending at seed_channels.
  return std::max(1, shape_.seed_channels >> (kBlocks - 1 - block));
}

void Discriminator::init(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0x44));
  for (auto& b : blocks) {
    b.conv1.init(rng);
    b.conv2.init(rng);
    b.skip.init(rng);
  }
  head.init(rng);
}

std::vector<Param*> Discriminator::params() {
  std::vector<Param*> out;
  for (auto& b : blocks) {
    out.insert(out.end(), {&b.conv1.weight, &b.conv1.bias, &b.conv2.weight, &b.conv2.bias,
                           &b.skip.weight, &b.skip.bias});
  }
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

std::vector<const Param*> Discriminator::params() const {
  auto mut = const_cast<Discriminator*>(this)->params();
  return {mut.begin(), mut.end()};
}

void Discriminator::check_input(int height, int width) const {
  if (height != shape_.img_height) {
    throw DataError("discriminator expects height " + std::to_string(shape_.img_height) + ", got " +
                    std::to_string(height));
  }
  if (width < min_width()) throw WidthTooSmall(width, min_width());
}

Tensor Discriminator::forward(const Tensor& images, Tape* tape) const {
  check_input(images.h(), images.w());
  if (images.c() != 1) throw std::invalid_argument("discriminator expects 1 channel");
  if (tape) tape->blocks.assign(blocks.size(), {});
  Tensor h = images;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    Tensor in1 = b.preactivation ? relu(h) : h;
    Tensor c1 = b.conv1.forward(in1);
    Tensor in2 = relu(c1);
    Tensor main = b.conv2.forward(in2);
    main.add_(b.skip.forward(h));
    Shape4 pre = main.shape();
    Tensor out = avg_pool2(main);
    if (tape) {
      auto& t = tape->blocks[k];
      t.input = std::move(h);
      t.conv1_in = std::move(in1);
      t.conv1_out = std::move(c1);
      t.conv2_in = std::move(in2);
      t.pooled_from = pre;
    }
    h = std::move(out);
  }
  Tensor r = relu(h);
  Tensor patches = head.forward(r);
  if (tape) {
    tape->head_in = std::move(h);
    tape->head_relu = std::move(r);
    tape->patches = patches;
  }
  return patches;
}

Tensor Discriminator::backward(const Tape& tape, const Tensor& grad_patches) {
  Tensor g = head.backward(tape.head_relu, grad_patches);
  g = relu_backward(tape.head_in, g);
  for (std::size_t kk = blocks.size(); kk-- > 0;) {
    auto& b = blocks[kk];
    const auto& t = tape.blocks[kk];
    // Pooling is linear and shared by both paths.
    Tensor g_pre = avg_pool2_backward(g, t.pooled_from);
    Tensor g_in = b.skip.backward(t.input, g_pre);
    Tensor g_c1 = relu_backward(t.conv1_out, b.conv2.backward(t.conv2_in, g_pre));
    Tensor g_in1 = b.conv1.backward(t.conv1_in, g_c1);
    g_in.add_(b.preactivation ? relu_backward(t.input, g_in1) : g_in1);
    g = std::move(g_in);
  }
  return g;
}

PatchScore Discriminator::score(const GrayImage& image) const {
  check_input(image.height, image.width);
  Tensor p = forward(to_tensor(image), nullptr);
  PatchScore out;
  out.patches = Matrix(p.h(), p.w());
  std::copy(p.data(), p.data() + p.size(), out.patches.data.begin());
  double s = 0.0;
  for (double v : out.patches.data) s += v;
  out.value = s / static_cast<double>(out.patches.data.size());
  return out;
}

std::vector<WidthOp> Discriminator::width_ops() const {
  std::vector<WidthOp> ops;
  for (const auto& b : blocks) {
    ops.push_back(WidthOp::conv(b.conv1.kernel()));
    ops.push_back(WidthOp::conv(b.conv2.kernel()));
    ops.push_back(WidthOp::pool(2, false));
  }
  ops.push_back(WidthOp::conv(head.kernel()));
  return ops;
}

double hinge_d_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.empty() || fake_scores.empty()) {
    throw std::invalid_argument("hinge_d_loss needs non-empty score lists");
  }
  double real = 0.0;
  for (double s : real_scores) real += std::max(0.0, 1.0 - s);
  double fake = 0.0;
  for (double s : fake_scores) fake += std::max(0.0, 1.0 + s);
  return real / static_cast<double>(real_scores.size()) +
         fake / static_cast<double>(fake_scores.size());
}

double hinge_g_loss(std::span<const double> fake_scores) {
  if (fake_scores.empty()) throw std::invalid_argument("hinge_g_loss needs a non-empty score list");
  double s = 0.0;
  for (double v : fake_scores) s += v;
  return -s / static_cast<double>(fake_scores.size());
}

}  // namespace scrabble
