#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "odeflow/worlds.hpp"

using namespace odeflow;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

World world_of(WorldVariant v, Eigen::Index d) {
  WorldParams p;
  p.variant = v;
  p.dim = d;
  return make_world(p);
}

const WorldVariant kAll[] = {WorldVariant::Blobs, WorldVariant::Xor, WorldVariant::Ring, WorldVariant::Wheel};

}  // namespace

TEST_CASE("catalog construction") {
  const World blobs = world_of(WorldVariant::Blobs, 8);
  CHECK(blobs.space().cardinalities() == std::vector<int>{2, 2});
  CHECK(world_of(WorldVariant::Xor, 2).space().cardinalities() == std::vector<int>{2, 2});
  CHECK(world_of(WorldVariant::Ring, 3).space().cardinalities() == std::vector<int>{2, 2, 2});
  CHECK(world_of(WorldVariant::Wheel, 2).space().cardinalities() == std::vector<int>{6, 2});

  WorldParams p;
  p.dim = 1;
  CHECK_THROWS_AS(make_world(p), ConstructionError);
  p.dim = 4;
  p.beta = 0.0;
  CHECK_THROWS_AS(make_world(p), ConstructionError);
  p.beta = 5.0;
  p.blob_spread = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(make_world(p), ConstructionError);
  p = WorldParams{};
  p.variant = WorldVariant::Wheel;
  p.sectors = 1;
  CHECK_THROWS_AS(make_world(p), ConstructionError);

  CHECK_THROWS_AS(AttributeSpace({}), ConstructionError);
  CHECK_THROWS_AS(AttributeSpace({2, 1}), ConstructionError);
}

TEST_CASE("variant names") {
  for (WorldVariant v : kAll) CHECK(world_variant_from_string(to_string(v)) == v);
  CHECK(world_variant_from_string("XOR") == WorldVariant::Xor);
  CHECK_THROWS_AS(world_variant_from_string("torus"), InvalidInput);
}

TEST_CASE("soft regress examples") {
  const World blobs = world_of(WorldVariant::Blobs, 4);
  auto l = blobs.soft_regress(vec({0.0, 1.0, 3.0, -2.0}));
  CHECK(l[0](0) == l[0](1));
  CHECK(blobs.hard_label(vec({0.0, 1.0, 3.0, -2.0}), 0) == 0);  // tie goes to the smaller label

  const World ring = world_of(WorldVariant::Ring, 2);
  const double r = ring.params().radius;
  l = ring.soft_regress(vec({2.0 * r * 0.6, 2.0 * r * 0.8}));
  CHECK(l[0](1) - l[0](0) == doctest::Approx(5.0 * r).epsilon(1e-12));

  // near-axis cross: on an axis -> label 1, on the diagonal far out -> label 0
  const World x = world_of(WorldVariant::Xor, 2);
  CHECK(x.hard_label(vec({3.0, 0.0}), 0) == 1);
  CHECK(x.hard_label(vec({0.0, -2.0}), 0) == 1);
  CHECK(x.hard_label(vec({1.0, 1.0}), 0) == 0);
  CHECK(x.hard_label(vec({-1.0, 1.0}), 0) == 0);
  CHECK(x.hard_label(vec({0.0, 0.0}), 0) == 1);
  CHECK(x.hard_label(vec({0.3, 1.0}), 1) == 1);
  CHECK(x.hard_label(vec({0.3, -1.0}), 1) == 0);

  CHECK_THROWS_AS(blobs.soft_regress(vec({1.0, 2.0})), InvalidInput);
}

TEST_CASE("xor near-axis score tracks distance to the nearest axis") {
  // far from the origin q(w) approaches min(|w0|, |w1|)
  const World x = world_of(WorldVariant::Xor, 2);
  const double band = x.params().band;
  CHECK(x.boundary_score(vec({50.0, 0.2}), 0) == doctest::Approx(5.0 * (band - 0.2)).epsilon(1e-3));
  CHECK(x.hard_label(vec({50.0, band - 0.01}), 0) == 1);
  CHECK(x.hard_label(vec({50.0, band + 0.01}), 0) == 0);
}

TEST_CASE("wheel sectors") {
  WorldParams p;
  p.variant = WorldVariant::Wheel;
  p.dim = 2;
  p.sectors = 4;
  const World w = make_world(p);
  CHECK(w.hard_label(vec({1.0, 0.0}), 0) == 0);  // boundary of sectors 3 and 0
  for (int k = 0; k < 4; ++k) {
    const double a = (k + 0.5) * std::numbers::pi / 2;
    CHECK(w.hard_label(vec({std::cos(a), std::sin(a)}), 0) == k);
    const double b = (k + 0.1) * std::numbers::pi / 2;
    CHECK(w.hard_label(vec({3 * std::cos(b), 3 * std::sin(b)}), 0) == k);
  }
  CHECK(w.hard_label(vec({0.0, 0.0}), 0) == 0);
}

TEST_CASE("soft_regress_vjp matches finite differences") {
  Rng rng(12);
  for (WorldVariant v : kAll) {
    const World world = world_of(v, 5);
    for (int trial = 0; trial < 10; ++trial) {
      const Vector w = rng.normal_vector(5);
      AttributeLogits c;
      for (std::size_t j = 0; j < world.num_attributes(); ++j)
        c.push_back(rng.normal_vector(world.space().cardinality(j)));
      const Vector g = world.soft_regress_vjp(w, c);
      auto dot = [&](const Vector& x) {
        const auto l = world.soft_regress(x);
        double s = 0;
        for (std::size_t j = 0; j < l.size(); ++j) s += c[j].dot(l[j]);
        return s;
      };
      for (Eigen::Index k = 0; k < 5; ++k) {
        Vector wp = w, wm = w;
        wp(k) += 1e-6;
        wm(k) -= 1e-6;
        const double fd = (dot(wp) - dot(wm)) / 2e-6;
        CAPTURE(to_string(v));
        CHECK(std::abs(fd - g(k)) <= 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
    AttributeLogits zero;
    for (std::size_t j = 0; j < world.num_attributes(); ++j) zero.push_back(Vector::Zero(world.space().cardinality(j)));
    CHECK(world.soft_regress_vjp(rng.normal_vector(5), zero).norm() == 0.0);
  }

  const World blobs = world_of(WorldVariant::Blobs, 4);
  AttributeLogits c = {vec({0.3, -1.0}), vec({0.0, 0.0})};
  const Vector g = blobs.soft_regress_vjp(vec({0.5, 0.2, 1.0, 1.0}), c);
  CHECK(g(0) != 0.0);
  CHECK(g.tail(3).norm() == 0.0);
}

TEST_CASE("hard labels agree with the soft argmax outside the boundary band") {
  Rng rng(77);
  for (WorldVariant v : kAll) {
    const World world = world_of(v, 4);
    int checked = 0;
    for (int k = 0; k < 10000; ++k) {
      const Vector w = world.sample_latent(rng);
      const auto logits = world.soft_regress(w);
      const auto labels = world.hard_regress(w);
      for (std::size_t j = 0; j < world.num_attributes(); ++j) {
        if (std::abs(world.boundary_score(w, j)) < 1e-3) continue;
        Eigen::Index arg;
        logits[j].maxCoeff(&arg);
        CHECK(labels[j] == arg);
        ++checked;
      }
    }
    CHECK(checked > 9000);
  }
}

TEST_CASE("soft regress is Lipschitz on the ball of radius 10") {
  Rng rng(8);
  for (WorldVariant v : kAll) {
    const World world = world_of(v, 3);
    double worst = 0;
    for (int k = 0; k < 2000; ++k) {
      Vector w = rng.normal_vector(3);
      w *= rng.uniform(0.0, 10.0) / w.norm();
      Vector dw = rng.normal_vector(3);
      dw *= 1e-3 / dw.norm();
      const auto a = world.soft_regress(w);
      const auto b = world.soft_regress(w + dw);
      for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, (a[j] - b[j]).cwiseAbs().maxCoeff());
    }
    CAPTURE(to_string(v));
    CHECK(worst <= 5.0 * 1e-3 * 10.0);
  }
}

TEST_CASE("sampling") {
  Rng rng(5);
  const World blobs = world_of(WorldVariant::Blobs, 3);
  Vector mean = Vector::Zero(3);
  for (int k = 0; k < 100000; ++k) mean += blobs.sample_latent(rng);
  mean /= 100000.0;
  CHECK(mean.norm() <= 0.05 * blobs.params().center);

  const World x = world_of(WorldVariant::Xor, 2);
  for (int k = 0; k < 1000; ++k) {
    const Vector w = x.sample_latent(rng, LabelCondition{0, 1});
    CHECK(x.boundary_score(w, 0) > 0.0);
    CHECK(x.hard_label(x.sample_latent(rng, LabelCondition{0, 0}), 0) == 0);
  }
  CHECK_THROWS_AS(x.sample_latent(rng, LabelCondition{0, 2}), InvalidInput);
  CHECK_THROWS_AS(x.sample_latent(rng, LabelCondition{3, 0}), InvalidInput);

  WorldParams thin;
  thin.variant = WorldVariant::Xor;
  thin.dim = 2;
  thin.band = 1e-12;
  CHECK_THROWS_AS(make_world(thin).sample_latent(rng, LabelCondition{0, 1}), UnsatisfiableCondition);
}

TEST_CASE("sampling is reproducible") {
  const World ring = world_of(WorldVariant::Ring, 6);
  Rng a(3), b(3);
  for (int k = 0; k < 100; ++k) CHECK((ring.sample_latent(a, LabelCondition{0, 0}) - ring.sample_latent(b, LabelCondition{0, 0})).norm() == 0.0);
}
