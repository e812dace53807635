#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bld/binae.hpp"
#include "bld/data.hpp"
#include "bld/error.hpp"

using namespace bld;

namespace {

std::vector<std::vector<double>> random_images(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> xs(n, std::vector<double>(dim));
  for (auto& x : xs)
    for (auto& v : x) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
  return xs;
}

void randomize(std::span<double> p, Rng& rng, double sd) {
  for (auto& v : p) v = rng.normal(0.0, sd);
}

// Loss with the latent draw frozen: z~ = z_base + y(w) - y_base.
double frozen_loss(const BinaryAutoencoder& ae, std::span<const std::vector<double>> batch,
                   const std::vector<BitVector>& z_base, const std::vector<ProbVector>& y_base) {
  double total = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto y = ae.encode_probs(batch[n]);
    std::vector<double> zt(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) zt[i] = z_base[n][i] + y[i] - y_base[n][i];
    total += reconstruction_loss(ae.decoder().forward(zt), batch[n], ae.config().loss);
  }
  return ae.config().loss_weight * total / static_cast<double>(batch.size());
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); }

}  // namespace

TEST_CASE("straight-through estimator") {
  const BitVector z{1, 0, 1, 0};
  const ProbVector y{0.9, 0.2, 0.51, 0.0001};
  const auto v = StraightThrough::forward(z, y);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(v[i] == static_cast<double>(z[i]));
  const std::vector<double> g{0.3, -2.0, 0.0, 1e-9};
  CHECK(StraightThrough::backward(g) == g);
  CHECK_THROWS_AS(StraightThrough::forward(z, ProbVector{0.5}), DimensionError);
}

TEST_CASE("reconstruction loss") {
  const std::vector<double> x{1.0, 0.0, 1.0};
  SUBCASE("zero logits give ln 2") {
    CHECK(reconstruction_loss(std::vector<double>(3, 0.0), x, ReconstructionLoss::Bce) ==
          doctest::Approx(std::log(2.0)));
    CHECK(reconstruction_loss(std::vector<double>(3, 0.0), x, ReconstructionLoss::Mse) == doctest::Approx(0.25));
  }
  SUBCASE("gradients match central differences") {
    const std::vector<double> logits{0.7, -1.1, 3.0};
    for (auto kind : {ReconstructionLoss::Bce, ReconstructionLoss::Mse}) {
      std::vector<double> g;
      reconstruction_loss(logits, x, kind, &g);
      for (std::size_t i = 0; i < 3; ++i) {
        auto up = logits, down = logits;
        up[i] += 1e-6;
        down[i] -= 1e-6;
        const double fd = (reconstruction_loss(up, x, kind) - reconstruction_loss(down, x, kind)) / 2e-6;
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
  SUBCASE("large logits stay finite") {
    CHECK(std::isfinite(reconstruction_loss(std::vector<double>{-800, 800, -800}, x, ReconstructionLoss::Bce)));
  }
  CHECK(parse_reconstruction_loss("mse") == ReconstructionLoss::Mse);
  CHECK_THROWS_AS(parse_reconstruction_loss("l1"), ConfigError);
}

TEST_CASE("autoencoder gradients match central differences with a frozen draw") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    AutoencoderConfig cfg{9, 5, 7, seed % 2 ? ReconstructionLoss::Bce : ReconstructionLoss::Mse, 1.0};
    BinaryAutoencoder ae(cfg);
    randomize(ae.encoder().params(), rng, 0.5);
    randomize(ae.decoder().params(), rng, 0.5);
    const auto batch = random_images(3, 9, rng);

    const std::uint64_t draw_seed = 1000 + seed;
    Rng replay(draw_seed);
    std::vector<BitVector> z_base;
    std::vector<ProbVector> y_base;
    for (const auto& x : batch) {
      const auto e = ae.encode(x, replay);
      z_base.push_back(e.z);
      y_base.push_back(e.y);
    }
    Rng draw(draw_seed);
    std::vector<double> ge, gd;
    const double loss = ae.loss_and_gradient(batch, draw, ge, gd);
    CHECK(loss == doctest::Approx(frozen_loss(ae, batch, z_base, y_base)).epsilon(1e-12));

    double worst = 0.0;
    const double h = 1e-5;
    auto check = [&](std::span<double> params, const std::vector<double>& grad) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double o = params[i];
        params[i] = o + h;
        const double up = frozen_loss(ae, batch, z_base, y_base);
        params[i] = o - h;
        const double down = frozen_loss(ae, batch, z_base, y_base);
        params[i] = o;
        worst = std::max(worst, rel_err(grad[i], (up - down) / (2 * h)));
      }
    };
    check(ae.encoder().params(), ge);
    check(ae.decoder().params(), gd);
    CHECK_MESSAGE(worst < 1e-3, "seed " << seed << " worst relative error " << worst);
  }
}

TEST_CASE("zero decoder outputs one half") {
  BinaryAutoencoder ae({16, 8, 12});
  Rng rng(1);
  ae.init(rng);
  std::fill(ae.decoder().params().begin(), ae.decoder().params().end(), 0.0);
  for (double v : ae.decode(BitVector(8, 1))) CHECK(v == 0.5);
  const auto batch = random_images(4, 16, rng);
  std::vector<double> ge, gd;
  CHECK(ae.loss_and_gradient(batch, rng, ge, gd) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("zero loss weight leaves parameters unchanged") {
  AutoencoderConfig cfg{16, 8, 12};
  cfg.loss_weight = 0.0;
  BinaryAutoencoder ae(cfg);
  Rng rng(2);
  ae.init(rng);
  const std::vector<double> enc(ae.encoder().params().begin(), ae.encoder().params().end());
  const std::vector<double> dec(ae.decoder().params().begin(), ae.decoder().params().end());
  const auto batch = random_images(4, 16, rng);
  for (int i = 0; i < 5; ++i) {
    const auto r = ae.train_step(batch, rng);
    CHECK(r.loss == 0.0);
  }
  CHECK(std::equal(enc.begin(), enc.end(), ae.encoder().params().begin()));
  CHECK(std::equal(dec.begin(), dec.end(), ae.decoder().params().begin()));
}

TEST_CASE("encoding produces strict bits") {
  BinaryAutoencoder ae({64, 32, 32});
  Rng rng(3);
  ae.init(rng);
  const auto batch = random_images(10, 64, rng);
  for (const auto& x : batch) {
    const auto e = ae.encode(x, rng);
    CHECK(is_binary(e.z));
    for (double p : e.y) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
  CHECK_THROWS_AS(ae.decode(BitVector(31, 0)), DimensionError);
  CHECK_THROWS_AS(ae.encode(std::vector<double>(63, 0.0), rng), DimensionError);
  std::vector<double> ge, gd;
  CHECK_THROWS_AS(ae.loss_and_gradient({}, rng, ge, gd), ValidationError);
}

TEST_CASE("autoencoder memorizes a small set") {
  Rng data_rng(4);
  const auto shapes = data::to_real(data::make_shapes_dataset(8, data_rng));
  BinaryAutoencoder ae({64, 32, 128});
  Rng rng(5);
  ae.init(rng);
  double first = 0.0, last = 1.0;
  for (int step = 0; step < 2000; ++step) {
    const auto r = ae.train_step(shapes, rng);
    if (step == 0) first = r.loss;
    last = r.loss;
  }
  CHECK(first > 0.3);
  CHECK(last < 0.05);
  CHECK(ae.round_trip_accuracy(shapes, rng) >= 0.99);
}
