#include <doctest.h>

#include "scrabble/errors.hpp"
#include "scrabble/generator.hpp"
#include "test_util.hpp"

using namespace scrabble;
using namespace scrabble::testing;

namespace {

// Index-by-index construction of the seed tensor: each character's filter
// is left-multiplied by z1, giving a filter_cols row that is read as
// seed_channels x S x S and placed at columns [S*i, S*i + S).
Tensor seed_reference(const Generator& g, std::string_view text, const std::vector<double>& z1) {
  const ModelShape& s = g.shape();
  const int S = s.seed_spatial, n = static_cast<int>(text.size());
  Tensor out(1, s.seed_channels, S, S * n);
  for (int i = 0; i < n; ++i) {
    const int c = g.alphabet().encode(text[static_cast<std::size_t>(i)]);
    for (int ch = 0; ch < s.seed_channels; ++ch)
      for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
          const int col = (ch * S + y) * S + x;
          double acc = 0.0;
          for (int r = 0; r < s.filter_rows; ++r) {
            const double f = g.filter_bank.value[(static_cast<std::size_t>(c) * s.filter_rows + r) * s.filter_cols + col];
            acc = std::fma(z1[static_cast<std::size_t>(r)], f, acc);
          }
          out.at(0, ch, y, S * i + x) = acc;
        }
  }
  return out;
}

Generator make(const ModelShape& shape, std::uint64_t seed = 11, NormMode mode = NormMode::Conditional) {
  Generator g(shape, Alphabet::lowercase(), mode);
  g.init(seed);
  return g;
}

}  // namespace

TEST_SUITE("generator") {
  TEST_CASE("seed assembly matches the reference reshape") {
    const Generator g = make(ModelShape::desk());
    std::mt19937_64 rng(1);
    const auto z1 = random_vector(static_cast<std::size_t>(g.shape().filter_rows), rng);
    for (std::string text : {"a", "meet", "zebra"}) {
      const Tensor seed = g.assemble_seed(text, z1);
      CHECK(seed.shape() == Shape4{1, 32, 4, 4 * static_cast<int>(text.size())});
      CHECK(seed == seed_reference(g, text, z1));
    }
  }

  TEST_CASE("paper profile seed shape") {
    Generator g(ModelShape::paper(), Alphabet::lowercase());
    std::mt19937_64 rng(2);
    g.filter_bank.value = random_vector(g.filter_bank.size(), rng);
    const auto z1 = random_vector(32, rng);
    const Tensor seed = g.assemble_seed("meet", z1);
    CHECK(seed.shape() == Shape4{1, 512, 4, 16});
    CHECK(seed == seed_reference(g, "meet", z1));
  }

  TEST_CASE("seed is linear in z1") {
    const Generator g = make(ModelShape::desk());
    std::mt19937_64 rng(3);
    const auto z1 = random_vector(16, rng);
    CHECK(g.assemble_seed("a", std::vector<double>(16, 0.0)) == Tensor(1, 32, 4, 4, 0.0));
    std::vector<double> z2 = z1;
    for (auto& v : z2) v *= 2.0;
    const Tensor a = g.assemble_seed("meet", z1), b = g.assemble_seed("meet", z2);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b.values()[i] == 2.0 * a.values()[i]);
    std::vector<double> z3 = z1;
    for (auto& v : z3) v *= -0.3;
    const Tensor c = g.assemble_seed("meet", z3);
    double peak = 0.0;
    for (double v : a.values()) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(c.values()[i] + 0.3 * a.values()[i]) <= 1e-13 * peak);
  }

  TEST_CASE("swapping two filters swaps the characters") {
    Generator g = make(ModelShape::desk());
    std::mt19937_64 rng(4);
    const auto z1 = random_vector(16, rng);
    const Tensor ba = g.assemble_seed("ba", z1);
    const std::size_t per = static_cast<std::size_t>(16) * 512;
    std::swap_ranges(g.filter_bank.value.begin(), g.filter_bank.value.begin() + per,
                     g.filter_bank.value.begin() + per);
    CHECK(g.assemble_seed("ab", z1) == ba);
  }

  TEST_CASE("width law on the desk profile") {
    const Generator g = make(ModelShape::desk());
    const std::size_t params = count_params(g.params());
    for (int n : {1, 2, 4, 9, 17}) {
      const WordImage w = g.generate(std::string(static_cast<std::size_t>(n), 'e'), sample_noise_at(1, 0, g.shape()));
      CHECK(w.image.height == 32);
      CHECK(w.image.width == 16 * n);
      CHECK(w.n_chars == n);
      CHECK(count_params(g.params()) == params);
      for (double v : w.image.pixels) CHECK((v >= -1.0 && v <= 1.0));
    }
    const WordImage longw = g.generate("supercalifragilisticexpialidocious", sample_noise_at(1, 1, g.shape()));
    CHECK(longw.image.width == 544);
  }

  TEST_CASE("style varies with noise") {
    const Generator g = make(ModelShape::desk());
    const WordImage a = g.generate("meet", sample_noise_at(5, 0, g.shape()));
    const WordImage b = g.generate("meet", sample_noise_at(5, 1, g.shape()));
    double diff = 0.0;
    for (std::size_t i = 0; i < a.image.pixels.size(); ++i) diff = std::max(diff, std::abs(a.image.pixels[i] - b.image.pixels[i]));
    CHECK(diff > 0.0);
  }

  TEST_CASE("locality: a character only affects its receptive-field band") {
    const Generator g = make(ModelShape::desk(), 21);
    const NoiseBundle z = sample_noise_at(9, 0, g.shape());
    const std::string base = "abcdefgh";
    const int n = static_cast<int>(base.size());
    const WordImage ref = g.generate(base, z);
    for (int i : {0, 3, 7}) {
      std::string changed = base;
      changed[static_cast<std::size_t>(i)] = 'q';
      const WordImage out = g.generate(changed, z);
      const ColumnRange band = g.influence_band(i, n);
      CHECK(band.width() < ref.image.width);
      bool inside_changed = false;
      for (int y = 0; y < ref.image.height; ++y)
        for (int x = 0; x < ref.image.width; ++x) {
          if (band.contains(x)) {
            inside_changed |= out.image.at(y, x) != ref.image.at(y, x);
          } else {
            REQUIRE(out.image.at(y, x) == ref.image.at(y, x));
          }
        }
      CHECK(inside_changed);
    }
    // Adjacent characters' bands overlap: context can influence rendering.
    const ColumnRange b3 = g.influence_band(3, n), b4 = g.influence_band(4, n);
    CHECK(b3.end - b4.begin > 0);
    CHECK(b3 == ColumnRange{16 * 3 - 9, 16 * 3 + 25});
  }

  TEST_CASE("batched generation is consistent with single generation") {
    const Generator g = make(ModelShape::desk());
    const auto z = sample_noise(3, 3, g.shape());
    const GeneratedBatch batch = g.generate_batch({"meet", "a", "deer"}, z);
    REQUIRE(batch.images.size() == 3);
    CHECK(batch.images[0].image.width == 64);
    CHECK(batch.images[1].image.width == 16);
    CHECK(batch.padded.shape() == Shape4{3, 1, 32, 64});
    CHECK(batch.mask(1, 15) == 1.0);
    CHECK(batch.mask(1, 16) == 0.0);
    CHECK(batch.padded.at(1, 0, 5, 40) == 1.0);
    CHECK(batch.images[0].image == g.generate("meet", z[0]).image);
    CHECK(batch.images[1].image == g.generate("a", z[1]).image);
    CHECK(batch.images[2].image == g.generate("deer", z[2]).image);
    const GeneratedBatch perm = g.generate_batch({"deer", "meet", "a"}, {z[2], z[0], z[1]});
    CHECK(perm.images[0].image == batch.images[2].image);
    CHECK(perm.images[1].image == batch.images[0].image);
    CHECK(perm.images[2].image == batch.images[1].image);
  }

  TEST_CASE("style interpolation") {
    const Generator g = make(ModelShape::desk());
    const NoiseBundle a = sample_noise_at(4, 0, g.shape()), b = sample_noise_at(4, 1, g.shape());
    auto two = g.interpolate_styles("ace", a, b, 2);
    CHECK(two[0].image == g.generate("ace", a).image);
    CHECK(two[1].image == g.generate("ace", b).image);
    auto same = g.interpolate_styles("ace", a, a, 3);
    CHECK(same[0].image == same[1].image);
    CHECK(same[1].image == same[2].image);
    auto five = g.interpolate_styles("ace", a, b, 5);
    CHECK(five[2].image == g.generate("ace", NoiseBundle::lerp(a, b, 0.5)).image);
    CHECK_THROWS_AS(g.interpolate_styles("ace", a, b, 1), ConfigError);
  }

  TEST_CASE("gradient check on the tiny profile") {
    for (bool training : {true, false}) {
      Generator g = make(ModelShape::tiny(), 31);
      std::mt19937_64 rng(training ? 41 : 42);
      jitter_biases(g.params(), rng);
      // Move running statistics away from their defaults.
      for (Param* b : g.buffers()) {
        if (b->name.find("running_var") != std::string::npos) {
          for (auto& v : b->value) v = 0.5 + std::abs(random_vector(1, rng)[0]);
        } else {
          b->value = random_vector(b->size(), rng, 0.2);
        }
      }
      const std::vector<std::vector<int>> enc{{0, 2}, {1, 0}};
      const std::vector<NoiseBundle> noise = sample_noise(6, 2, g.shape());
      Generator::Tape tape;
      const Tensor img = g.forward(enc, noise, training, &tape);
      CHECK(img.shape() == Shape4{2, 1, 32, 32});
      const auto w = random_vector(img.size(), rng);
      Tensor gimg(img.shape());
      gimg.values() = w;
      zero_grads(g.params());
      g.backward(tape, gimg);
      auto loss = [&] { return dot(g.forward(enc, noise, training, nullptr).span(), w); };
      for (Param* p : g.params()) {
        INFO("training=" << training << " param " << p->name);
        const GradCheck r = check_gradient(p->value, p->grad, loss, rng, 6);
        CHECK(r.worst <= 1e-3);
      }
    }
  }

  TEST_CASE("plain normalization mode ignores z2..z4") {
    const Generator g = make(ModelShape::desk(), 11, NormMode::Plain);
    NoiseBundle a = sample_noise_at(2, 0, g.shape());
    NoiseBundle b = a;
    b.z(3) = sample_noise_at(2, 1, g.shape()).z(3);
    CHECK(g.generate("abc", a).image == g.generate("abc", b).image);
  }

  TEST_CASE("bad inputs") {
    const Generator g = make(ModelShape::desk());
    CHECK_THROWS_AS(g.generate("ab7", sample_noise_at(1, 0, g.shape())), UnknownCharacter);
    NoiseBundle bad = NoiseBundle::zeros(3);
    CHECK_THROWS_AS(g.generate("ab", bad), ShapeConfigError);
  }
}
