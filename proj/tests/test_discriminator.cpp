#include <doctest.h>

#include "scrabble/discriminator.hpp"
#include "scrabble/errors.hpp"
#include "test_util.hpp"

using namespace scrabble;
using namespace scrabble::testing;

TEST_SUITE("discriminator") {
  TEST_CASE("hinge loss table") {
    CHECK(hinge_d_loss(std::vector<double>{1.0}, std::vector<double>{-1.0}) == 0.0);
    CHECK(hinge_d_loss(std::vector<double>{0.0}, std::vector<double>{0.0}) == 2.0);
    CHECK(hinge_d_loss(std::vector<double>{2.0, 0.5}, std::vector<double>{-3.0, 1.0}) == 1.25);
    CHECK(hinge_g_loss(std::vector<double>{0.0}) == 0.0);
    CHECK(hinge_g_loss(std::vector<double>{1.0, 3.0}) == -2.0);
  }

  TEST_CASE("generator hinge is decreasing in every score") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
      auto s = random_vector(5, rng);
      const double base = hinge_g_loss(s);
      s[static_cast<std::size_t>(trial % 5)] += 0.1;
      CHECK(hinge_g_loss(s) < base);
    }
  }

  TEST_CASE("score is the mean of the patch map and scales with width") {
    Discriminator d(ModelShape::desk());
    d.init(3);
    std::mt19937_64 rng(2);
    GrayImage a(32, 64), b(32, 128);
    a.pixels = random_vector(a.pixels.size(), rng, 0.5);
    b.pixels = random_vector(b.pixels.size(), rng, 0.5);
    const PatchScore sa = d.score(a), sb = d.score(b);
    CHECK(sa.patches.cols * 2 == sb.patches.cols);
    CHECK(sa.patches.cols == 64 / 16);
    double mean = 0.0;
    for (double v : sa.patches.data) mean += v;
    mean /= static_cast<double>(sa.patches.data.size());
    CHECK(sa.value == doctest::Approx(mean).epsilon(1e-14));
    GrayImage narrow(32, 15, 0.0);
    CHECK_THROWS_AS(d.score(narrow), WidthTooSmall);
    GrayImage tall(33, 64, 0.0);
    CHECK_THROWS_AS(d.score(tall), DataError);
  }

  TEST_CASE("channel schedule mirrors the generator") {
    Discriminator d(ModelShape::desk());
    CHECK(d.channels(0) == 4);
    CHECK(d.channels(3) == 32);
    Discriminator p(ModelShape::paper());
    CHECK(p.channels(0) == 64);
    CHECK(p.channels(3) == 512);
  }

  TEST_CASE("gradient check on the tiny profile") {
    Discriminator d(ModelShape::tiny());
    d.init(5);
    std::mt19937_64 rng(6);
    jitter_biases(d.params(), rng);
    Tensor x = random_tensor({2, 1, 32, 48}, rng, 0.6);
    Discriminator::Tape tape;
    const Tensor patches = d.forward(x, &tape);
    CHECK(patches.shape() == Shape4{2, 1, 2, 3});
    const auto w = random_vector(patches.size(), rng);
    Tensor gp(patches.shape());
    gp.values() = w;
    zero_grads(d.params());
    const Tensor dx = d.backward(tape, gp);
    auto loss = [&] { return dot(d.forward(x, nullptr).span(), w); };
    CHECK(check_gradient(x.values(), dx.values(), loss, rng, 40).worst <= 1e-3);
    for (Param* p : d.params()) {
      INFO(p->name);
      CHECK(check_gradient(p->value, p->grad, loss, rng, 8).worst <= 1e-3);
    }
  }

  TEST_CASE("self-concatenation changes the mean only through boundary patches") {
    Discriminator d(ModelShape::desk());
    d.init(8);
    std::mt19937_64 rng(9);
    GrayImage a(32, 64);
    a.pixels = random_vector(a.pixels.size(), rng, 0.5);
    GrayImage aa(32, 128);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 128; ++x) aa.at(y, x) = a.at(y, x % 64);
    const PatchScore s1 = d.score(a), s2 = d.score(aa);
    // The doubled image only differs from `a` (zero padded) at columns
    // >= 64, so patches outside that influence range must agree.
    const auto ops = d.width_ops();
    const ColumnRange seam = propagate_influence(ops, {64, 128}, 128);
    int untouched = 0;
    for (int c = 0; c < s1.patches.cols; ++c) {
      if (seam.contains(c)) continue;
      ++untouched;
      for (int r = 0; r < s1.patches.rows; ++r) CHECK(s2.patches(r, c) == doctest::Approx(s1.patches(r, c)).epsilon(1e-12));
    }
    CHECK(untouched > 0);
  }
}
