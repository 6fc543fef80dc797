#include "doctest.h"
#include "meshrect/error.hpp"
#include "meshrect/features.hpp"
#include "oracles.hpp"

using namespace meshrect;

namespace {

double inner(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

TEST_CASE("pyramid backprop is the adjoint of extract") {
  const PyramidExtractor phi;
  for (auto [w, h, c] : {std::tuple{37, 29, 1}, std::tuple{64, 48, 3}, std::tuple{9, 7, 3}}) {
    const ImageBuffer x = oracle::noise_image(w, h, c, w);
    const std::vector<double> fx = phi.extract(x);
    CHECK(fx.size() == phi.feature_count(w, h));
    meshrect::Rng rng(h);
    std::vector<double> y(fx.size());
    for (double& v : y) v = rng.uniform(-1, 1);
    ImageBuffer g(w, h, c);
    phi.backprop(x, y, g);
    CHECK(inner(fx, y) == doctest::Approx(inner(x.data(), g.data())).epsilon(1e-10));
  }
}

TEST_CASE("pyramid is linear and deterministic") {
  const PyramidExtractor phi;
  const ImageBuffer a = oracle::noise_image(40, 30, 3, 1);
  const ImageBuffer b = oracle::noise_image(40, 30, 3, 2);
  ImageBuffer sum(40, 30, 3);
  for (std::size_t k = 0; k < sum.data().size(); ++k) sum.data()[k] = a.data()[k] + 2.0 * b.data()[k];
  const auto fa = phi.extract(a);
  const auto fb = phi.extract(b);
  const auto fs = phi.extract(sum);
  for (std::size_t k = 0; k < fs.size(); ++k) CHECK(fs[k] == doctest::Approx(fa[k] + 2.0 * fb[k]).epsilon(1e-10));
  CHECK(phi.extract(a) == fa);
}

TEST_CASE("backprop accumulates") {
  const PyramidExtractor phi;
  const ImageBuffer x = oracle::noise_image(20, 16, 1, 3);
  std::vector<double> y(phi.feature_count(20, 16), 1.0);
  ImageBuffer once(20, 16, 1);
  phi.backprop(x, y, once);
  ImageBuffer twice(20, 16, 1);
  phi.backprop(x, y, twice);
  phi.backprop(x, y, twice);
  for (std::size_t k = 0; k < once.data().size(); ++k) CHECK(twice.data()[k] == doctest::Approx(2 * once.data()[k]));
}

TEST_CASE("identity extractor") {
  const IdentityExtractor phi;
  const ImageBuffer x = oracle::noise_image(8, 6, 3, 4);
  const auto f = phi.extract(x);
  CHECK(std::equal(f.begin(), f.end(), x.data().begin()));
  ImageBuffer g(8, 6, 3);
  phi.backprop(x, f, g);
  CHECK(g == x);
  CHECK_THROWS_AS(phi.backprop(x, std::vector<double>(3), g), InvalidArgument);
}

TEST_CASE("pyramid configuration") {
  CHECK_THROWS_AS(PyramidExtractor(std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(PyramidExtractor(std::vector<double>{1.0, -2.0}), InvalidArgument);
  CHECK(default_feature_extractor() != nullptr);
}
