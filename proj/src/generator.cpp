#include "scrabble/generator.hpp"

#include <algorithm>
#include <map>

#include "scrabble/errors.hpp"
#include "scrabble/kernels.hpp"

namespace scrabble {
namespace {

std::vector<const std::vector<double>*> chunk_refs(const std::vector<NoiseBundle>& noise, int chunk) {
  std::vector<const std::vector<double>*> out;
  out.reserve(noise.size());
  for (const auto& b : noise) out.push_back(&b.z(chunk));
  return out;
}

}  // namespace

NormMode parse_norm_mode(const std::string& text) {
  if (text == "conditional") return NormMode::Conditional;
  if (text == "plain") return NormMode::Plain;
  throw ConfigError("unknown generator norm mode '" + text + "' (expected conditional|plain)");
}

const char* to_string(NormMode mode) {
  return mode == NormMode::Conditional ? "conditional" : "plain";
}

Generator::Generator(const ModelShape& shape, const Alphabet& alphabet, NormMode norm)
    : shape_(shape), alphabet_(alphabet), norm_(norm) {
  shape_.validate();
  filter_bank = Param("G.filter_bank", {alphabet_.size(), shape_.filter_rows, shape_.filter_cols});
  const bool conditional = norm_ == NormMode::Conditional;
  for (int k = 0; k < shape_.n_gen_blocks; ++k) {
    const int in_c = shape_.generator_channels(k);
    const int out_c = shape_.generator_channels(k + 1);
    const std::string p = "G.block" + std::to_string(k);
    GeneratorBlock b;
    b.up = shape_.per_block_upsample[static_cast<std::size_t>(k)];
    b.norm1 = ConditionalNorm(p + ".norm1", in_c, shape_.noise_chunk_dim, conditional);
    b.conv1 = Conv2d(p + ".conv1", in_c, out_c, 3);
    b.norm2 = ConditionalNorm(p + ".norm2", out_c, shape_.noise_chunk_dim, conditional);
    b.conv2 = Conv2d(p + ".conv2", out_c, out_c, 3);
    b.has_skip_conv = in_c != out_c;
    if (b.has_skip_conv) b.skip = Conv2d(p + ".skip", in_c, out_c, 1);
    blocks.push_back(std::move(b));
  }
  output_conv = Conv2d("G.output", shape_.generator_channels(shape_.n_gen_blocks), 1, 3);
}

void Generator::init(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0x47));
  const std::size_t per_filter = static_cast<std::size_t>(shape_.filter_rows) * shape_.filter_cols;
  for (int c = 0; c < alphabet_.size(); ++c) {
    Param tmp("filter", {shape_.filter_rows, shape_.filter_cols});
    orthogonal_init(tmp, shape_.filter_rows, shape_.filter_cols, rng);
    std::copy(tmp.value.begin(), tmp.value.end(), filter_bank.value.begin() + c * per_filter);
  }
  for (auto& b : blocks) {
    b.norm1.init(rng);
    b.conv1.init(rng);
    b.norm2.init(rng);
    b.conv2.init(rng);
    if (b.has_skip_conv) b.skip.init(rng);
  }
  output_conv.init(rng);
}

std::vector<Param*> Generator::params() {
  std::vector<Param*> out{&filter_bank};
  for (auto& b : blocks) {
    for (Param* p : b.norm1.params()) out.push_back(p);
    out.push_back(&b.conv1.weight);
    out.push_back(&b.conv1.bias);
    for (Param* p : b.norm2.params()) out.push_back(p);
    out.push_back(&b.conv2.weight);
    out.push_back(&b.conv2.bias);
    if (b.has_skip_conv) {
      out.push_back(&b.skip.weight);
      out.push_back(&b.skip.bias);
    }
  }
  out.push_back(&output_conv.weight);
  out.push_back(&output_conv.bias);
  return out;
}

std::vector<const Param*> Generator::params() const {
  auto mut = const_cast<Generator*>(this)->params();
  return {mut.begin(), mut.end()};
}

std::vector<Param*> Generator::buffers() {
  std::vector<Param*> out;
  for (auto& b : blocks) {
    for (Param* p : b.norm1.buffers()) out.push_back(p);
    for (Param* p : b.norm2.buffers()) out.push_back(p);
  }
  return out;
}

std::vector<const Param*> Generator::buffers() const {
  auto mut = const_cast<Generator*>(this)->buffers();
  return {mut.begin(), mut.end()};
}

void Generator::check_noise(const NoiseBundle& noise) const {
  for (int i = 1; i <= 4; ++i) {
    if (static_cast<int>(noise.z(i).size()) != shape_.noise_chunk_dim) {
      throw ShapeConfigError("noise chunk z" + std::to_string(i) + " has dimension " +
                             std::to_string(noise.z(i).size()) + ", expected " +
                             std::to_string(shape_.noise_chunk_dim));
    }
  }
}

Tensor Generator::seed_from_encoded(const std::vector<std::vector<int>>& encoded,
                                    const std::vector<NoiseBundle>& noise) const {
  const auto& kt = kernels::active();
  const int n_chars = static_cast<int>(encoded.front().size());
  const int s = shape_.seed_spatial;
  const int cols = shape_.filter_cols;
  const std::size_t per_filter = static_cast<std::size_t>(shape_.filter_rows) * cols;
  Tensor seed(static_cast<int>(encoded.size()), shape_.seed_channels, s, s * n_chars);
  std::vector<double> row(static_cast<std::size_t>(cols));
  for (std::size_t n = 0; n < encoded.size(); ++n) {
    const auto& z1 = noise[n].z(1);
    for (int i = 0; i < n_chars; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      const double* f = filter_bank.value.data() + static_cast<std::size_t>(encoded[n][i]) * per_filter;
      kt.gemm(1, cols, shape_.filter_rows, z1.data(), shape_.filter_rows, f, cols, row.data(), cols);
      for (int ch = 0; ch < shape_.seed_channels; ++ch) {
        for (int y = 0; y < s; ++y) {
          for (int x = 0; x < s; ++x) {
            seed.at(static_cast<int>(n), ch, y, s * i + x) = row[static_cast<std::size_t>((ch * s + y) * s + x)];
          }
        }
      }
    }
  }
  return seed;
}

Tensor Generator::assemble_seed(std::string_view text, const std::vector<double>& z1) const {
  if (static_cast<int>(z1.size()) != shape_.filter_rows) {
    throw ShapeConfigError("z1 has dimension " + std::to_string(z1.size()) + ", expected " +
                           std::to_string(shape_.filter_rows));
  }
  NoiseBundle nb = NoiseBundle::zeros(shape_.noise_chunk_dim);
  nb.z(1) = z1;
  return seed_from_encoded({encode_transcript(text, alphabet_)}, {nb});
}

Tensor Generator::run(const std::vector<std::vector<int>>& encoded,
                      const std::vector<NoiseBundle>& noise, bool training, Tape* tape) const {
  if (encoded.empty() || encoded.size() != noise.size()) {
    throw std::invalid_argument("generator needs one noise bundle per word");
  }
  const std::size_t len = encoded.front().size();
  if (len == 0) throw DataError("cannot generate an empty word");
  for (const auto& e : encoded) {
    if (e.size() != len) throw std::invalid_argument("batched generation needs equal-length words");
    for (int idx : e) {
      if (idx < 0 || idx >= alphabet_.size()) throw DataError("character index out of range");
    }
  }
  for (const auto& nb : noise) check_noise(nb);

  if (tape) {
    tape->encoded = encoded;
    tape->noise = noise;
    tape->blocks.assign(blocks.size(), {});
  }

  Tensor h = seed_from_encoded(encoded, noise);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    const auto cond = chunk_refs(noise, static_cast<int>(k) + 2);
    GeneratorBlock::Tape local;
    GeneratorBlock::Tape& t = tape ? tape->blocks[k] : local;
    const bool keep = tape != nullptr;

    Tensor a1 = b.norm1.forward(h, cond, training, keep || training ? &t.norm1 : nullptr);
    Tensor u1 = upsample_nearest(relu(a1), b.up.height, b.up.width);
    Tensor c1 = b.conv1.forward(u1);
    Tensor a2 = b.norm2.forward(c1, cond, training, keep || training ? &t.norm2 : nullptr);
    Tensor r2 = relu(a2);
    Tensor out = b.conv2.forward(r2);

    Tensor skip_in = upsample_nearest(h, b.up.height, b.up.width);
    if (b.has_skip_conv) {
      out.add_(b.skip.forward(skip_in));
    } else {
      out.add_(skip_in);
    }
    if (keep) {
      t.input = std::move(h);
      t.pre_relu1 = std::move(a1);
      t.conv1_in = std::move(u1);
      t.pre_relu2 = std::move(a2);
      t.conv2_in = std::move(r2);
      t.skip_in = std::move(skip_in);
    }
    h = std::move(out);
  }
  Tensor r = relu(h);
  Tensor img = tanh_forward(output_conv.forward(r));
  if (tape) {
    tape->head_in = std::move(h);
    tape->head_relu = std::move(r);
    tape->image = img;
  }
  return img;
}

Tensor Generator::forward(const std::vector<std::vector<int>>& encoded,
                          const std::vector<NoiseBundle>& noise, bool training, Tape* tape) {
  if (!training) return run(encoded, noise, false, tape);
  Tape local;
  Tape& t = tape ? *tape : local;
  Tensor img = run(encoded, noise, true, &t);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    blocks[k].norm1.update_running_stats(t.blocks[k].norm1);
    blocks[k].norm2.update_running_stats(t.blocks[k].norm2);
  }
  return img;
}

Tensor Generator::forward_eval(const std::vector<std::vector<int>>& encoded,
                               const std::vector<NoiseBundle>& noise, Tape* tape) const {
  return run(encoded, noise, false, tape);
}

void Generator::backward(const Tape& tape, const Tensor& grad_image) {
  if (!(grad_image.shape() == tape.image.shape())) {
    throw std::invalid_argument("generator backward: gradient shape " + grad_image.shape().str() +
                                " does not match image " + tape.image.shape().str());
  }
  Tensor g = output_conv.backward(tape.head_relu, tanh_backward(tape.image, grad_image));
  g = relu_backward(tape.head_in, g);
  for (std::size_t kk = blocks.size(); kk-- > 0;) {
    auto& b = blocks[kk];
    const auto& t = tape.blocks[kk];
    const auto cond = chunk_refs(tape.noise, static_cast<int>(kk) + 2);

    Tensor g_skip_in = b.has_skip_conv ? b.skip.backward(t.skip_in, g) : g;
    Tensor g_h = upsample_nearest_backward(g_skip_in, b.up.height, b.up.width);

    Tensor g_r2 = b.conv2.backward(t.conv2_in, g);
    Tensor g_c1 = b.norm2.backward(t.norm2, relu_backward(t.pre_relu2, g_r2), cond);
    Tensor g_u1 = b.conv1.backward(t.conv1_in, g_c1);
    Tensor g_a1 = relu_backward(t.pre_relu1, upsample_nearest_backward(g_u1, b.up.height, b.up.width));
    g_h.add_(b.norm1.backward(t.norm1, g_a1, cond));
    g = std::move(g_h);
  }

  // Seed: row_i = z1^T F[c_i], so dF[c_i] += z1 (outer) d(row_i).
  const auto& kt = kernels::active();
  const int s = shape_.seed_spatial;
  const int cols = shape_.filter_cols;
  const std::size_t per_filter = static_cast<std::size_t>(shape_.filter_rows) * cols;
  std::vector<double> drow(static_cast<std::size_t>(cols));
  for (std::size_t n = 0; n < tape.encoded.size(); ++n) {
    const auto& z1 = tape.noise[n].z(1);
    for (std::size_t i = 0; i < tape.encoded[n].size(); ++i) {
      for (int ch = 0; ch < shape_.seed_channels; ++ch) {
        for (int y = 0; y < s; ++y) {
          for (int x = 0; x < s; ++x) {
            drow[static_cast<std::size_t>((ch * s + y) * s + x)] =
                g.at(static_cast<int>(n), ch, y, s * static_cast<int>(i) + x);
          }
        }
      }
      double* df = filter_bank.grad.data() + static_cast<std::size_t>(tape.encoded[n][i]) * per_filter;
      for (int r = 0; r < shape_.filter_rows; ++r) {
        kt.axpy(static_cast<std::size_t>(cols), z1[static_cast<std::size_t>(r)], drow.data(),
                df + static_cast<std::size_t>(r) * cols);
      }
    }
  }
}

WordImage Generator::generate(std::string_view text, const NoiseBundle& noise) const {
  shape_.validate();
  Tensor img = forward_eval({encode_transcript(text, alphabet_)}, {noise}, nullptr);
  WordImage out;
  out.n_chars = static_cast<int>(text.size());
  out.image = GrayImage(img.h(), img.w());
  std::copy(img.data(), img.data() + img.size(), out.image.pixels.begin());
  return out;
}

GeneratedBatch Generator::generate_batch(const std::vector<std::string>& texts,
                                         const std::vector<NoiseBundle>& noise) const {
  if (texts.size() != noise.size()) {
    throw std::invalid_argument("generate_batch: " + std::to_string(texts.size()) + " texts but " +
                                std::to_string(noise.size()) + " noise bundles");
  }
  GeneratedBatch out;
  out.images.resize(texts.size());
  std::vector<std::vector<int>> encoded;
  encoded.reserve(texts.size());
  for (const auto& t : texts) encoded.push_back(encode_transcript(t, alphabet_));

  // Equal-length words share one batched forward.
  std::map<std::size_t, std::vector<std::size_t>> by_length;
  for (std::size_t i = 0; i < texts.size(); ++i) by_length[texts[i].size()].push_back(i);
  for (const auto& [len, idx] : by_length) {
    std::vector<std::vector<int>> enc;
    std::vector<NoiseBundle> nb;
    for (std::size_t i : idx) {
      enc.push_back(encoded[i]);
      nb.push_back(noise[i]);
    }
    Tensor imgs = forward_eval(enc, nb, nullptr);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      WordImage& w = out.images[idx[j]];
      w.n_chars = static_cast<int>(len);
      w.image = GrayImage(imgs.h(), imgs.w());
      const double* src = imgs.sample(static_cast<int>(j));
      std::copy(src, src + imgs.shape().sample(), w.image.pixels.begin());
    }
  }

  int max_w = 0;
  for (const auto& w : out.images) max_w = std::max(max_w, w.image.width);
  const int n = static_cast<int>(texts.size());
  out.padded = Tensor(n, 1, shape_.img_height, max_w, 1.0);
  out.mask = Matrix(n, max_w, 0.0);
  for (int i = 0; i < n; ++i) {
    const GrayImage& im = out.images[static_cast<std::size_t>(i)].image;
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x) out.padded.at(i, 0, y, x) = im.at(y, x);
    for (int x = 0; x < im.width; ++x) out.mask(i, x) = 1.0;
  }
  return out;
}

std::vector<WordImage> Generator::interpolate_styles(std::string_view text, const NoiseBundle& a,
                                                     const NoiseBundle& b, int steps) const {
  if (steps < 2) throw ConfigError("interpolation needs at least 2 steps");
  std::vector<WordImage> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    if (t == 0) {
      out.push_back(generate(text, a));
    } else if (t == steps - 1) {
      out.push_back(generate(text, b));
    } else {
      out.push_back(generate(text, NoiseBundle::lerp(a, b, static_cast<double>(t) / (steps - 1))));
    }
  }
  return out;
}

std::vector<WidthOp> Generator::width_ops() const {
  std::vector<WidthOp> ops;
  for (const auto& b : blocks) {
    // The skip path (upsample + 1x1) reads a subset of the main path's columns.
    ops.push_back(WidthOp::upsample(b.up.width));
    ops.push_back(WidthOp::conv(b.conv1.kernel()));
    ops.push_back(WidthOp::conv(b.conv2.kernel()));
  }
  ops.push_back(WidthOp::conv(output_conv.kernel()));
  return ops;
}

ColumnRange Generator::influence_band(int index, int n_chars) const {
  const int s = shape_.seed_spatial;
  return propagate_influence(width_ops(), {s * index, s * (index + 1)}, s * n_chars);
}

}  // namespace scrabble
