// Acceptance run: one PASS/FAIL line per criterion, each with its wall time
// and budget. Exceeding the budget fails the criterion.
#include <sys/wait.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scrabble/checkpoint.hpp"
#include "scrabble/config.hpp"
#include "scrabble/ctc.hpp"
#include "scrabble/discriminator.hpp"
#include "scrabble/generator.hpp"
#include "scrabble/grad_balance.hpp"
#include "scrabble/image_io.hpp"
#include "scrabble/metrics.hpp"
#include "scrabble/recognizer.hpp"
#include "scrabble/sheets.hpp"
#include "scrabble/training.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace scrabble;
using namespace scrabble::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Collects failed sub-checks; the first few end up in the detail line.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  Outcome outcome(const std::string& summary) const {
    if (failed_ == 0) return {true, summary};
    std::string d = std::to_string(failed_) + " of " + std::to_string(total_) + " checks failed";
    for (const auto& f : failures_) d += "; " + f;
    return {false, d};
  }

 private:
  int total_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
};

std::string fmt(double v, const char* pattern = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- subprocess helpers --------------------------------------------------

struct Run {
  int code = -1;
  std::string output;
};

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Runs the CLI, appending its combined output to `log`.
Run cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SCRABBLEGAN_EXE) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ofstream out(log, std::ios::app);
  out << "$ scrabblegan " << args << "\n" << r.output << "[exit " << r.code << "]\n\n";
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

bool finite_number(const std::string& s, double* out = nullptr) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return false;
    if (out) *out = v;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

// 5-symbol toy corpus with 2000 samples, shared by the end-to-end criteria.
fs::path toy_corpus(const fs::path& work, const fs::path& log) {
  const fs::path dir = work / "toy5";
  const fs::path manifest = dir / "manifest.tsv";
  if (fs::exists(manifest) && fs::exists(dir / "corpus_config.txt")) return manifest;
  fs::remove_all(dir);
  const Run r = cli("toy-corpus --alphabet abcde --n 2000 --seed 1 --out " + q(dir), log);
  if (r.code != 0) throw std::runtime_error("toy-corpus failed with exit " + std::to_string(r.code));
  return manifest;
}

// ---- 1: width law --------------------------------------------------------

Outcome width_law() {
  Checks c;
  for (const ModelShape& shape : {ModelShape::paper(), ModelShape::desk()}) {
    const bool paper = shape.filter_cols == 8192;
    Generator g(shape, Alphabet::lowercase());
    g.init(1);
    const std::size_t params = count_params(g.params());
    const std::string letters = "abcdefghijklmnopqrstuvwxyz";
    for (int n = 1; n <= 40; ++n) {
      std::string text;
      for (int i = 0; i < n; ++i) text += letters[static_cast<std::size_t>((7 * i + n) % 26)];
      const WordImage w = g.generate(text, sample_noise_at(3, static_cast<std::uint64_t>(n), shape));
      const std::string tag = std::string(paper ? "paper" : "desk") + " n=" + std::to_string(n);
      c.expect(w.image.height == 32, tag + " height " + std::to_string(w.image.height));
      c.expect(w.image.width == shape.char_width * n, tag + " width " + std::to_string(w.image.width));
      c.expect(w.image.pixels.size() == static_cast<std::size_t>(32 * shape.char_width * n), tag + " pixel count");
      c.expect(count_params(g.params()) == params, tag + " parameter count changed");
    }
  }
  return c.outcome("widths 16n and height 32 for n=1..40 on paper and desk; parameter counts constant");
}

// ---- 2: seed algebra -----------------------------------------------------

// Each character's filter (filter_rows x filter_cols) is left-multiplied by
// z1, the resulting row is read as seed_channels x S x S, and the patches
// are laid side by side.
Tensor seed_reference(const Generator& g, std::string_view text, const std::vector<double>& z1) {
  const ModelShape& s = g.shape();
  const int S = s.seed_spatial, n = static_cast<int>(text.size());
  Tensor out(1, s.seed_channels, S, S * n);
  for (int i = 0; i < n; ++i) {
    const int ch = g.alphabet().encode(text[static_cast<std::size_t>(i)]);
    for (int k = 0; k < s.seed_channels; ++k)
      for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
          const int col = (k * S + y) * S + x;
          double acc = 0.0;
          for (int r = 0; r < s.filter_rows; ++r) {
            const double f =
                g.filter_bank.value[(static_cast<std::size_t>(ch) * s.filter_rows + r) * s.filter_cols + col];
            acc = std::fma(z1[static_cast<std::size_t>(r)], f, acc);
          }
          out.at(0, k, y, S * i + x) = acc;
        }
  }
  return out;
}

Outcome seed_algebra() {
  Checks c;
  std::mt19937_64 rng(2);
  double worst_linear = 0.0;
  for (const ModelShape& shape : {ModelShape::paper(), ModelShape::desk()}) {
    Generator g(shape, Alphabet::lowercase());
    g.filter_bank.value = random_vector(g.filter_bank.size(), rng);
    c.expect(g.filter_bank.size() == static_cast<std::size_t>(26) * shape.filter_rows * shape.filter_cols,
             "filter bank size");
    c.expect(shape.filter_cols == shape.seed_channels * shape.seed_spatial * shape.seed_spatial,
             "filter columns equal seed volume");
    for (const std::string text : {"a", "meet", "zebra", "supercalifragilistic"}) {
      const auto z1 = random_vector(static_cast<std::size_t>(shape.filter_rows), rng);
      const Tensor seed = g.assemble_seed(text, z1);
      const int n = static_cast<int>(text.size());
      c.expect(seed.shape() == Shape4{1, shape.seed_channels, shape.seed_spatial, shape.seed_spatial * n},
               "seed shape for " + text);
      c.expect(seed == seed_reference(g, text, z1), "bit-exact reshape for " + text);

      // Linearity: zero maps to zero, powers of two scale exactly, and a
      // general combination holds to rounding.
      c.expect(g.assemble_seed(text, std::vector<double>(z1.size(), 0.0)) == Tensor(seed.shape(), 0.0),
               "zero z1 gives a zero seed");
      std::vector<double> twice = z1;
      for (auto& v : twice) v *= 2.0;
      const Tensor s2 = g.assemble_seed(text, twice);
      bool exact = true;
      for (std::size_t i = 0; i < seed.size(); ++i) exact &= s2.values()[i] == 2.0 * seed.values()[i];
      c.expect(exact, "2*z1 doubles the seed exactly for " + text);

      const auto z1b = random_vector(z1.size(), rng);
      const double a = 0.7, b = -1.9;
      std::vector<double> mix(z1.size());
      for (std::size_t i = 0; i < z1.size(); ++i) mix[i] = a * z1[i] + b * z1b[i];
      const Tensor sb = g.assemble_seed(text, z1b), sm = g.assemble_seed(text, mix);
      double peak = 0.0, err = 0.0;
      for (std::size_t i = 0; i < seed.size(); ++i) {
        const double expect = a * seed.values()[i] + b * sb.values()[i];
        peak = std::max(peak, std::abs(expect));
        err = std::max(err, std::abs(sm.values()[i] - expect));
      }
      const double rel = err / peak;
      worst_linear = std::max(worst_linear, rel);
      c.expect(rel <= 64 * std::numeric_limits<double>::epsilon() * shape.filter_rows,
               "linearity error " + fmt(rel) + " for " + text);
    }
  }
  return c.outcome("bit-exact against the index-by-index reshape (paper 512x4x4n, desk); worst linearity error " +
                   fmt(worst_linear) + " relative");
}

// ---- 3: locality ---------------------------------------------------------

Outcome locality() {
  Checks c;
  int perturbations = 0;
  for (const ModelShape& shape : {ModelShape::desk(), ModelShape::paper()}) {
    const bool paper = shape.filter_cols == 8192;
    Generator g(shape, Alphabet::lowercase());
    g.init(paper ? 5 : 21);
    const std::string base = paper ? "wonder" : "abcdefghij";
    const int n = static_cast<int>(base.size());
    const NoiseBundle z = sample_noise_at(9, 0, shape);
    const WordImage ref = g.generate(base, z);
    std::vector<int> positions;
    if (paper) {
      positions = {0, 3, n - 1};
    } else {
      for (int i = 0; i < n; ++i) positions.push_back(i);
    }
    for (int i : positions) {
      const ColumnRange band = g.influence_band(i, n);
      const std::string tag = std::string(paper ? "paper" : "desk") + " char " + std::to_string(i);
      // The band comes from composing the per-stage receptive fields.
      c.expect(band == ColumnRange{std::max(0, 16 * i - 9), std::min(16 * n, 16 * i + 25)},
               tag + " band [" + std::to_string(band.begin) + "," + std::to_string(band.end) + ")");
      for (char repl : {'q', 'x'}) {
        std::string changed = base;
        changed[static_cast<std::size_t>(i)] = repl;
        const WordImage out = g.generate(changed, z);
        bool outside_same = true, inside_changed = false;
        for (int y = 0; y < ref.image.height; ++y)
          for (int x = 0; x < ref.image.width; ++x) {
            const bool same = out.image.at(y, x) == ref.image.at(y, x);
            if (band.contains(x)) {
              inside_changed |= !same;
            } else {
              outside_same &= same;
            }
          }
        c.expect(outside_same, tag + " changed a pixel outside its band");
        c.expect(inside_changed, tag + " did not change its band");
        ++perturbations;
      }
    }
  }
  return c.outcome(std::to_string(perturbations) +
                   " single-character perturbations; pixels outside [16i-9, 16i+25) bit-identical");
}

// ---- 4: CTC oracle -------------------------------------------------------

std::vector<int> collapse(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

double enumerate_alignments(const Matrix& logits, const std::vector<int>& target, int blank) {
  const Matrix lp = log_softmax(logits);
  const int T = logits.rows, C = logits.cols;
  std::vector<int> path(static_cast<std::size_t>(T), 0);
  double total = 0.0;
  while (true) {
    if (collapse(path, blank) == target) {
      double logp = 0.0;
      for (int t = 0; t < T; ++t) logp += lp(t, path[static_cast<std::size_t>(t)]);
      total += std::exp(logp);
    }
    int t = 0;
    while (t < T && ++path[static_cast<std::size_t>(t)] == C) path[static_cast<std::size_t>(t++)] = 0;
    if (t == T) break;
  }
  return total;
}

Outcome ctc_oracle() {
  Checks c;
  std::mt19937_64 rng(4);
  // Every feasible (T, C, target) with T <= 6, C <= 3 (blank included)
  // and |target| <= 3.
  struct Case {
    int T, C;
    std::vector<int> target;
  };
  std::vector<Case> cases;
  for (int C = 1; C <= 3; ++C)
    for (int len = 0; len <= 3; ++len) {
      const int symbols = C - 1;
      if (len > 0 && symbols == 0) continue;
      int combos = 1;
      for (int i = 0; i < len; ++i) combos *= symbols;
      for (int code = 0; code < combos; ++code) {
        std::vector<int> target;
        for (int i = 0, rest = code; i < len; ++i, rest /= symbols) target.push_back(rest % symbols);
        for (int T = 1; T <= 6; ++T)
          if (T >= ctc_min_frames(target)) cases.push_back({T, C, target});
      }
    }
  const int draws = 1000;
  double worst = 0.0;
  long evaluated = 0;
  for (const Case& k : cases) {
    for (int d = 0; d < draws; ++d) {
      Matrix m(k.T, k.C);
      m.data = random_vector(static_cast<std::size_t>(k.T * k.C), rng, 1.5);
      const double p = enumerate_alignments(m, k.target, k.C - 1);
      const double r = std::exp(-ctc_loss(m, k.target, k.C - 1));
      worst = std::max(worst, std::abs(p - r) / p);
      ++evaluated;
    }
  }
  c.expect(worst <= 1e-6, "worst relative error " + fmt(worst));
  return c.outcome(std::to_string(cases.size()) + " feasible (T,C,target) cases x " + std::to_string(draws) +
                   " draws = " + std::to_string(evaluated) + " checks; worst relative error " + fmt(worst));
}

// ---- 5: gradient checks --------------------------------------------------

struct KinkAwareCheck {
  double worst = 0.0;
  int checked = 0;
  int retried = 0;
};

// Central differences at h = 1e-5. A coordinate whose estimate disagrees
// with the analytic value is re-estimated at 1e-6 and 1e-7: if those two
// agree the function is smooth at that scale (the wide step had crossed a
// ReLU kink) and the 1e-7 estimate is used; otherwise the wide one stands.
KinkAwareCheck check_gradient_kinks(std::vector<double>& values, const std::vector<double>& analytic,
                                    const std::function<double()>& loss, std::mt19937_64& rng, int samples) {
  KinkAwareCheck out;
  std::vector<std::size_t> idx(values.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  if (static_cast<int>(idx.size()) > samples) idx.resize(static_cast<std::size_t>(samples));
  auto central = [&](std::size_t i, double h) {
    const double orig = values[i];
    values[i] = orig + h;
    const double lp = loss();
    values[i] = orig - h;
    const double lm = loss();
    values[i] = orig;
    return (lp - lm) / (2 * h);
  };
  auto rel = [](double a, double b) {
    const double d = std::max(std::abs(a), std::abs(b));
    return d < 1e-7 ? 0.0 : std::abs(a - b) / d;
  };
  for (std::size_t i : idx) {
    const double a = analytic[i];
    double numeric = central(i, 1e-5);
    if (std::max(std::abs(a), std::abs(numeric)) < 1e-7) continue;
    if (rel(a, numeric) > 1e-3) {
      const double n6 = central(i, 1e-6), n7 = central(i, 1e-7);
      if (rel(n6, n7) <= 1e-3) {
        numeric = n7;
        ++out.retried;
      }
    }
    out.worst = std::max(out.worst, rel(a, numeric));
    ++out.checked;
  }
  return out;
}

Outcome gradient_checks() {
  Checks c;
  double worst = 0.0;
  int coords = 0, retried = 0;
  std::map<std::string, int> per_network;
  auto record = [&](const KinkAwareCheck& r, const std::string& what) {
    worst = std::max(worst, r.worst);
    coords += r.checked;
    retried += r.retried;
    per_network[what.substr(0, 1)] += r.checked;
    c.expect(r.worst <= 1e-3, what + ": relative error " + fmt(r.worst));
  };

  // Generator parameters in both normalization modes.
  for (bool training : {true, false}) {
    Generator g(ModelShape::tiny(), Alphabet::lowercase());
    g.init(31);
    std::mt19937_64 rng(training ? 41 : 42);
    jitter_biases(g.params(), rng);
    for (Param* b : g.buffers()) {
      if (b->name.find("running_var") != std::string::npos) {
        for (auto& v : b->value) v = 0.5 + std::abs(random_vector(1, rng)[0]);
      } else {
        b->value = random_vector(b->size(), rng, 0.2);
      }
    }
    const std::vector<std::vector<int>> enc{{0, 2, 5}, {1, 0, 3}};
    const std::vector<NoiseBundle> noise = sample_noise(6, 2, g.shape());
    Generator::Tape tape;
    const Tensor img = g.forward(enc, noise, training, &tape);
    const auto w = random_vector(img.size(), rng);
    Tensor gimg(img.shape());
    gimg.values() = w;
    zero_grads(g.params());
    g.backward(tape, gimg);
    auto loss = [&] { return dot(g.forward(enc, noise, training, nullptr).span(), w); };
    for (Param* p : g.params())
      record(check_gradient_kinks(p->value, p->grad, loss, rng, 12),
             std::string("G ") + (training ? "train " : "eval ") + p->name);
  }

  // Discriminator image and parameter gradients.
  {
    Discriminator d(ModelShape::tiny());
    d.init(5);
    std::mt19937_64 rng(6);
    jitter_biases(d.params(), rng);
    Tensor x = random_tensor({2, 1, 32, 48}, rng, 0.6);
    Discriminator::Tape tape;
    const Tensor patches = d.forward(x, &tape);
    const auto w = random_vector(patches.size(), rng);
    Tensor gp(patches.shape());
    gp.values() = w;
    zero_grads(d.params());
    const Tensor dx = d.backward(tape, gp);
    auto loss = [&] { return dot(d.forward(x, nullptr).span(), w); };
    record(check_gradient_kinks(x.values(), dx.values(), loss, rng, 120), "D image");
    for (Param* p : d.params()) record(check_gradient_kinks(p->value, p->grad, loss, rng, 12), "D " + p->name);
  }

  // Recognizer: linear probe of the logits, then the CTC image gradient.
  {
    Recognizer r(ModelShape::tiny(), Alphabet("abc"), {2, 3, 4, 4, 5, 5});
    r.init(2);
    std::mt19937_64 rng(3);
    jitter_biases(r.params(), rng);
    Tensor x = random_tensor({2, 1, 32, 24}, rng, 0.5);
    Recognizer::Tape tape;
    const Tensor logits = r.forward(x, &tape);
    const auto w = random_vector(logits.size(), rng);
    Tensor g(logits.shape());
    g.values() = w;
    zero_grads(r.params());
    const Tensor dx = r.backward(tape, g);
    auto loss = [&] { return dot(r.forward(x, nullptr).span(), w); };
    record(check_gradient_kinks(x.values(), dx.values(), loss, rng, 120), "R image");
    for (Param* p : r.params()) record(check_gradient_kinks(p->value, p->grad, loss, rng, 12), "R " + p->name);

    GrayImage img(32, 16);
    img.pixels = random_vector(img.pixels.size(), rng, 0.5);
    const std::vector<int> target{1, 0};
    zero_grads(r.params());
    const ImageGradient ig = recognizer_image_gradient(img, target, r);
    auto ctc = [&] { return ctc_loss(r.recognize(img).scores, target, 3); };
    record(check_gradient_kinks(img.pixels, ig.grad.pixels, ctc, rng, 120), "R CTC image");
  }
  // Biases feeding a batch-statistics norm and unused filters have zero
  // gradient, so individual tensors may be skipped, but never a network.
  for (const char* net : {"G", "D", "R"})
    c.expect(per_network[net] >= 50, std::string(net) + ": only " + std::to_string(per_network[net]) +
                                         " coordinates above the noise floor");
  return c.outcome(std::to_string(coords) + " coordinates of G (train and eval), D and R; worst relative error " +
                   fmt(worst) + "; " + std::to_string(retried) + " re-estimated at a smaller step after a kink");
}

// ---- 6: balancing algebra ------------------------------------------------

Outcome balancing_algebra() {
  Checks c;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ua(0.05, 20.0), uk(1e-3, 1e3), us(1e-4, 1e2), um(-2.0, 2.0);
  std::uniform_int_distribution<int> un(2, 400);
  double worst_sigma = 0.0, worst_moment = 0.0, worst_scale = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = static_cast<std::size_t>(un(rng));
    auto gr = random_vector(n, rng, us(rng));
    const double shift_r = um(rng);
    for (auto& v : gr) v += shift_r;
    auto gd = random_vector(n, rng, us(rng));
    const double shift_d = um(rng);
    for (auto& v : gd) v += shift_d;
    const double alpha = ua(rng);
    const Moments md = moments(gd);
    const std::string tag = "trial " + std::to_string(trial);

    // Std-only: one positive factor c with sigma(out) = alpha * sigma(gd).
    const auto s = balance_std(gr, gd, alpha);
    const double factor = alpha * md.stddev / moments(gr).stddev;
    bool proportional = factor > 0.0;
    for (std::size_t i = 0; i < n; ++i)
      proportional &= std::abs(s[i] - factor * gr[i]) <= 1e-12 * std::abs(factor * gr[i]) + 1e-300;
    c.expect(proportional, tag + ": std output is not a positive multiple of grad_R");
    const double sig = std::abs(moments(s).stddev - alpha * md.stddev) / (alpha * md.stddev);
    worst_sigma = std::max(worst_sigma, sig);
    c.expect(sig <= 1e-6, tag + ": sigma off by " + fmt(sig));

    // Scale invariance under grad_R -> k grad_R.
    const double k = uk(rng);
    auto kgr = gr;
    for (auto& v : kgr) v *= k;
    const auto sk = balance_std(kgr, gd, alpha);
    double scale_err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      scale_err = std::max(scale_err, std::abs(sk[i] - s[i]) / (alpha * md.stddev));
    worst_scale = std::max(worst_scale, scale_err);
    c.expect(scale_err <= 1e-9, tag + ": scale invariance error " + fmt(scale_err));

    // Full: moments (alpha mu_D, alpha sigma_D).
    const Moments mf = moments(balance_full(gr, gd, alpha));
    const double ref = alpha * (std::abs(md.mean) + md.stddev);
    const double err = std::max(std::abs(mf.mean - alpha * md.mean), std::abs(mf.stddev - alpha * md.stddev)) / ref;
    worst_moment = std::max(worst_moment, err);
    c.expect(err <= 1e-6, tag + ": full-mode moments off by " + fmt(err));
  }
  return c.outcome("1000 random tensors; worst sigma error " + fmt(worst_sigma) + ", moment error " +
                   fmt(worst_moment) + ", scale error " + fmt(worst_scale) + " (relative)");
}

// ---- 7: hinge table ------------------------------------------------------

Outcome hinge_table() {
  Checks c;
  auto d = [](std::vector<double> r, std::vector<double> f) { return hinge_d_loss(r, f); };
  c.expect(d({1.0}, {-1.0}) == 0.0, "d([1],[-1]) = " + fmt(d({1.0}, {-1.0})));
  c.expect(d({0.0}, {0.0}) == 2.0, "d([0],[0]) = " + fmt(d({0.0}, {0.0})));
  c.expect(d({2.0, 0.5}, {-3.0, 1.0}) == 1.25, "d([2,0.5],[-3,1]) = " + fmt(d({2.0, 0.5}, {-3.0, 1.0})));
  const std::vector<double> g0{0.0}, g1{1.0, 3.0};
  c.expect(hinge_g_loss(g0) == 0.0, "g([0]) = " + fmt(hinge_g_loss(g0)));
  c.expect(hinge_g_loss(g1) == -2.0, "g([1,3]) = " + fmt(hinge_g_loss(g1)));
  return c.outcome("5 hand-computed values matched exactly");
}

// ---- 8: metric oracles ---------------------------------------------------

// Minimum over every edit script (each alignment of the two strings as a
// sequence of match/substitute, delete and insert moves), without sharing
// subproblems.
int exhaustive_edit(const std::string& a, std::size_t i, const std::string& b, std::size_t j) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  const int diag = exhaustive_edit(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  const int del = exhaustive_edit(a, i + 1, b, j) + 1;
  const int ins = exhaustive_edit(a, i, b, j + 1) + 1;
  return std::min({diag, del, ins});
}

Outcome metric_oracles() {
  Checks c;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> ul(0, 7), uc(0, 3);
  const std::string sym = "abcd";
  int mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    std::string a(static_cast<std::size_t>(ul(rng)), ' '), b(static_cast<std::size_t>(ul(rng)), ' ');
    for (auto& ch : a) ch = sym[static_cast<std::size_t>(uc(rng))];
    for (auto& ch : b) ch = sym[static_cast<std::size_t>(uc(rng))];
    const int dp = edit_distance(a, b), ex = exhaustive_edit(a, 0, b, 0);
    if (dp != ex) ++mismatches;
    c.expect(dp == ex, "'" + a + "' vs '" + b + "': " + std::to_string(dp) + " != " + std::to_string(ex));
  }
  c.expect(edit_distance("kitten", "sitting") == 3, "kitten/sitting");
  c.expect(exhaustive_edit("kitten", 0, "sitting", 0) == 3, "kitten/sitting exhaustive");
  c.expect(edit_distance("", "abc") == 3, "empty/abc");
  c.expect(edit_distance("abc", "abc") == 0, "abc/abc");
  c.expect(wer({"a", "b", "c", "d"}, {"a", "b", "c", "d"}) == 0.0, "wer all equal");
  c.expect(wer({"x", "y"}, {"a", "b"}) == 1.0, "wer all different");
  c.expect(wer({"a", "b", "x", "d"}, {"a", "b", "c", "d"}) == 0.25, "wer 1 of 4");
  c.expect(ned({"abd"}, {"abc"}) == 1.0 / 3.0, "ned abd/abc");
  c.expect(ned({""}, {"abc"}) == 1.0, "ned empty/abc");
  c.expect(ned({"ab", "xyz"}, {"ab", "xyz"}) == 0.0, "ned identical");
  return c.outcome("500 random pairs (length <= 7) agree with exhaustive edit-script search (" +
                   std::to_string(mismatches) + " mismatches); WER/NED hand counts exact");
}

// ---- 9: semi-supervised contract -----------------------------------------

// Copy of a manifest next to it with every transcript replaced.
fs::path rewrite_manifest(const fs::path& src, const fs::path& dst, const std::function<std::string(int)>& text) {
  std::ifstream in(src);
  std::ofstream out(dst);
  int i = 0;
  for (std::string line; std::getline(in, line); ++i) {
    const auto t1 = line.find('\t'), t2 = line.rfind('\t');
    out << line.substr(0, t1) << '\t' << text(i) << '\t' << line.substr(t2 + 1) << '\n';
  }
  return dst;
}

Outcome semi_supervised(const fs::path& work) {
  Checks c;
  const fs::path dir = work / "semi_supervised";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "log.txt";
  Run r = cli("toy-corpus --alphabet abcde --n 300 --seed 21 --out " + q(dir / "labeled"), log);
  c.expect(r.code == 0, "labeled corpus exit " + std::to_string(r.code));
  r = cli("toy-corpus --alphabet abcde --n 200 --seed 22 --out " + q(dir / "extra"), log);
  c.expect(r.code == 0, "unlabeled corpus exit " + std::to_string(r.code));
  const fs::path orig = dir / "extra" / "manifest.tsv";
  const fs::path garbage = rewrite_manifest(orig, dir / "extra" / "garbage.tsv",
                                            [](int i) { return "#?" + std::to_string(i * 7919) + "~GARBAGE~!"; });

  const std::string common = "train --manifest " + q(dir / "labeled" / "manifest.tsv") +
                             " --profile desk --alphabet abcde --steps 200 --batch-size 8 --seed 3"
                             " --set train.checkpoint_every=100";
  const Run a = cli(common + " --unlabeled " + q(orig) + " --out " + q(dir / "run_original"), log);
  const Run b = cli(common + " --unlabeled " + q(garbage) + " --out " + q(dir / "run_garbage"), log);
  const Run none = cli(common + " --out " + q(dir / "run_without_unlabeled"), log);
  c.expect(a.code == 0, "original run exit " + std::to_string(a.code));
  c.expect(b.code == 0, "garbage run exit " + std::to_string(b.code));
  c.expect(none.code == 0, "reference run exit " + std::to_string(none.code));

  const std::string ma = slurp(dir / "run_original" / "metrics.csv");
  const std::string mb = slurp(dir / "run_garbage" / "metrics.csv");
  const auto rows = read_csv(dir / "run_original" / "metrics.csv");
  c.expect(rows.size() == 201, "metrics rows " + std::to_string(rows.size()));
  c.expect(!ma.empty() && ma == mb, "loss trajectories differ");
  for (const char* net : {"G", "D", "R"}) {
    const fs::path pa = dir / "run_original" / "ckpt" / "step_200" / net;
    const fs::path pb = dir / "run_garbage" / "ckpt" / "step_200" / net;
    c.expect(fs::exists(pa) && slurp(pa) == slurp(pb), std::string("final ") + net + " checkpoints differ");
  }
  // The unlabeled images do reach the discriminator.
  c.expect(slurp(dir / "run_without_unlabeled" / "metrics.csv") != ma,
           "dropping the unlabeled images did not change the trajectory");
  return c.outcome("200 desk steps with 200 unlabeled images: metrics.csv and final G/D/R byte-identical under "
                   "garbage transcripts; the same run without them differs");
}

// ---- 10: end-to-end smoke ------------------------------------------------

Outcome end_to_end(const fs::path& work) {
  Checks c;
  const fs::path dir = work / "end_to_end";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "log.txt";
  const fs::path manifest = toy_corpus(work, log);
  c.expect(read_csv(manifest).size() == 2000, "corpus size");

  const fs::path gan = dir / "gan";
  const Run t = cli("train --manifest " + q(manifest) +
                        " --profile desk --alphabet abcde --steps 2000 --batch-size 8 --seed 1"
                        " --gb-mode std_only --gb-alpha 1 --out " + q(gan),
                    log);
  c.expect(t.code == 0, "train exit " + std::to_string(t.code));
  const auto metrics = read_csv(gan / "metrics.csv");
  c.expect(metrics.size() == 2001, "metrics rows " + std::to_string(metrics.size()));
  bool finite = metrics.size() > 1;
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    finite &= metrics[i].size() == 6;
    for (const auto& cell : metrics[i]) finite &= finite_number(cell);
  }
  c.expect(finite, "non-finite or malformed loss row");

  // Re-render the final sheet from the checkpoint and compare with the PNG.
  double variance = 0.0;
  const fs::path final_g = gan / "ckpt" / "step_2000" / "G";
  if (fs::exists(final_g)) {
    const TrainConfig cfg = TrainConfig::from_config(KeyValueConfig::load(gan / "config.txt"));
    const TrainData data = load_train_data(cfg);
    const Generator g = load_generator(final_g);
    const SampleSheet sheet = render_sheet(g, sheet_texts_for(cfg, data), sheet_rows_for(cfg));
    variance = style_variance(sheet);
    c.expect(variance > 0.0, "style variance across z rows is zero");
    const GrayImage png = read_png(gan / "sheets" / "step_2000.png");
    bool same = png.height == sheet.composite.height && png.width == sheet.composite.width;
    for (std::size_t i = 0; same && i < png.pixels.size(); ++i)
      same = to_byte(png.pixels[i]) == to_byte(sheet.composite.pixels[i]);
    c.expect(same, "written sheet differs from the re-rendered one");
  } else {
    c.expect(false, "final generator checkpoint missing");
  }

  const Run h = cli("htr-experiment --manifest " + q(manifest) + " --generator " + q(final_g) +
                        " --profile desk --alphabet abcde --seed 1 --out " + q(dir / "htr"),
                    log);
  c.expect(h.code == 0, "htr-experiment exit " + std::to_string(h.code));
  const auto table = read_csv(dir / "htr" / "htr_results.csv");
  const std::vector<std::string> arms{"real", "real+affine", "real+synthetic", "real+synthetic+finetune"};
  c.expect(table.size() == 5, "result rows " + std::to_string(table.size()));
  std::string summary;
  for (std::size_t i = 0; i < arms.size() && i + 1 < table.size(); ++i) {
    const auto& row = table[i + 1];
    double w = -1.0, n = -1.0;
    const bool ok = row.size() == 7 && row[0] == arms[i] && finite_number(row[1], &w) && finite_number(row[2], &n) &&
                    w >= 0.0 && w <= 1.0 && n >= 0.0;
    c.expect(ok, "row for " + arms[i] + " missing or malformed");
    summary += "; " + arms[i] + " WER " + fmt(w) + " NED " + fmt(n);
  }
  return c.outcome("2000 std_only steps, all losses finite, final sheet style variance " + fmt(variance) + summary);
}

// ---- 11: ablation harness shape ------------------------------------------

Outcome ablation(const fs::path& work) {
  Checks c;
  const fs::path dir = work / "ablation";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "log.txt";
  const fs::path manifest = toy_corpus(work, log);
  const Run r = cli("ablate-alpha --manifest " + q(manifest) +
                        " --profile desk --alphabet abcde --modes none,full,std_only --alphas 10,1,0.1"
                        " --steps 150 --htr-steps 300 --set htr.synthetic_count=500 --set htr.eval_every=100"
                        " --out " + q(dir / "out"),
                    log);
  c.expect(r.code == 0, "ablate-alpha exit " + std::to_string(r.code));
  const auto table = read_csv(dir / "out" / "ablation.csv");
  const std::vector<std::string> cells{"none_a10",     "none_a1",     "none_a0.1",   "full_a10",
                                       "full_a1",      "full_a0.1",   "std_only_a10", "std_only_a1",
                                       "std_only_a0.1", "r_only",      "d_only"};
  c.expect(table.size() == cells.size() + 1, "table rows " + std::to_string(table.size()));
  std::map<std::string, std::size_t> col;
  if (!table.empty())
    for (std::size_t i = 0; i < table[0].size(); ++i) col[table[0][i]] = i;
  for (const char* needed : {"cell", "layout_hash", "sheet", "style_variance", "wer"})
    c.expect(col.count(needed) == 1, std::string("column ") + needed + " missing");
  std::set<std::string> hashes;
  std::set<std::pair<int, int>> dims;
  int sheets = 0;
  for (std::size_t i = 0; i < cells.size() && i + 1 < table.size() && col.size() >= 5; ++i) {
    const auto& row = table[i + 1];
    if (row.size() != table[0].size()) {
      c.expect(false, "malformed row " + std::to_string(i + 1));
      continue;
    }
    c.expect(row[col["cell"]] == cells[i], "cell " + std::to_string(i) + " is " + row[col["cell"]]);
    hashes.insert(row[col["layout_hash"]]);
    const fs::path sheet = dir / "out" / "sheets" / (cells[i] + ".png");
    c.expect(fs::exists(sheet), "sheet for " + cells[i] + " missing");
    if (fs::exists(sheet)) {
      const GrayImage img = read_png(sheet);
      dims.insert({img.height, img.width});
      ++sheets;
    }
    c.expect(finite_number(row[col["wer"]]), "downstream WER for " + cells[i] + " missing");
  }
  c.expect(hashes.size() == 1, std::to_string(hashes.size()) + " distinct text/noise layouts");
  c.expect(dims.size() == 1, "sheet dimensions differ between cells");
  c.expect(fs::exists(dir / "out" / "ablation_grid.png"), "combined grid missing");
  return c.outcome(std::to_string(sheets) + " sheets (3 modes x 3 alphas + r_only + d_only) sharing one text/noise " +
                   "layout; 150 GAN and 300 recognizer steps per cell");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("acceptance criteria");
  std::string workdir = (fs::temp_directory_path() / "scrabble_acceptance").string();
  std::vector<int> only;
  app.add_option("--workdir", workdir, "scratch directory for CLI runs");
  app.add_option("--only", only, "criterion numbers to run (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const fs::path work(workdir);
  fs::create_directories(work);

  const std::vector<Criterion> criteria{
      {1, "WIDTH LAW", 60, width_law},
      {2, "SEED ALGEBRA", 60, seed_algebra},
      {3, "LOCALITY", 60, locality},
      {4, "CTC ORACLE", 120, ctc_oracle},
      {5, "GRADIENT CHECKS", 300, gradient_checks},
      {6, "BALANCING ALGEBRA", 60, balancing_algebra},
      {7, "HINGE LOSS TABLE", 1, hinge_table},
      {8, "METRIC ORACLES", 60, metric_oracles},
      {9, "SEMI-SUPERVISED CONTRACT", 600, [&] { return semi_supervised(work); }},
      {10, "END-TO-END SMOKE", 2700, [&] { return end_to_end(work); }},
      {11, "ABLATION HARNESS SHAPE", 3600, [&] { return ablation(work); }},
  };

  int failed = 0, ran = 0;
  for (const Criterion& k : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), k.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = k.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double took = seconds_since(t0);
    if (o.pass && took > k.budget_s) {
      o.pass = false;
      o.detail += "; over the time budget";
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %s (%.1f s of %.0f s): %s\n", o.pass ? "PASS" : "FAIL", k.id, k.name, took, k.budget_s,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
