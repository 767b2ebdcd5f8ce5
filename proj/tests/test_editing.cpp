#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "odeflow/editing.hpp"

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
  return World(p);
}

}  // namespace

TEST_CASE("make_target") {
  const AttributeSpace space({2, 4, 3});
  CHECK(make_target({1, 0, 2}, 1, space) == AttributeLabels{1, 3, 2});
  CHECK(make_target({0, 0, 0}, 0, space) == AttributeLabels{1, 0, 0});
  CHECK(make_target(make_target({1, 2, 0}, 0, space), 0, space) == AttributeLabels{1, 2, 0});
  CHECK_THROWS_AS(make_target({0, 0, 0}, 3, space), InvalidInput);
  CHECK_THROWS_AS(make_target({0, 4, 0}, 0, space), InvalidInput);
  CHECK_THROWS_AS(make_target({0, 0}, 0, space), InvalidInput);
}

TEST_CASE("sample_time") {
  Rng rng(1);
  double sum = 0;
  bool in_range = true;
  for (int k = 0; k < 100000; ++k) {
    const double t = sample_time(rng, 12.0);
    in_range = in_range && t >= 3.0 && t <= 12.0;
    sum += t;
  }
  CHECK(in_range);
  CHECK(std::abs(sum / 100000 - 7.5) <= 0.05);
  for (int k = 0; k < 1000; ++k) {
    const double t = sample_time(rng, 4.0);
    CHECK(t >= 1.0);
    CHECK(t <= 4.0);
  }
}

TEST_CASE("cross entropy values") {
  CHECK(cross_entropy(Vector::Zero(3), 1) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(cross_entropy(vec({0.0, 10.0}), 1) == doctest::Approx(4.5398899216870535e-05).epsilon(1e-12));
  CHECK(cross_entropy(vec({1000.0, 0.0}), 0) == 0.0);
  CHECK(std::isfinite(cross_entropy(vec({1000.0, 0.0}), 1)));
  CHECK_THROWS_AS(cross_entropy(vec({0.0, 0.0}), 2), InvalidInput);
}

TEST_CASE("loss decomposition") {
  Rng rng(6);
  for (WorldVariant v : {WorldVariant::Blobs, WorldVariant::Xor, WorldVariant::Ring, WorldVariant::Wheel}) {
    const World world = world_of(v, 4);
    const VectorField f = VectorField::net_random(NetSpec{4, 2, 4, kLeakySlope}, rng);
    for (int k = 0; k < 20; ++k) {
      const Vector w0 = world.sample_latent(rng, LabelCondition{0, 0});
      const auto target = make_target(world.hard_regress(w0), 0, world.space());
      const LossTerms l = edit_loss(world, f, w0, sample_time(rng, 12.0), target, 0);
      CHECK(l.total == l.control + l.preserve);
      CHECK(l.control >= 0.0);
      CHECK(l.preserve >= 0.0);
    }
  }
}

TEST_CASE("endpoint deep in the target has tiny control loss") {
  // BLOBS attr 0 with logit gap beta * w0 = 10 at w0 = 2
  const World world = world_of(WorldVariant::Blobs, 3);
  const LossTerms l = endpoint_loss(world, vec({2.0, 3.0, 0.0}), {1, 1}, 0);
  CHECK(l.control <= std::log1p(std::exp(-10.0)) * (1 + 1e-12));
}

TEST_CASE("edit_loss_grad matches finite differences") {
  Rng rng(14);
  for (WorldVariant v : {WorldVariant::Blobs, WorldVariant::Xor, WorldVariant::Ring, WorldVariant::Wheel}) {
    const World world = world_of(v, 3);
    const VectorField f = VectorField::net_random(NetSpec{3, 1, 3, kLeakySlope}, rng);
    const Vector w0 = world.sample_latent(rng, LabelCondition{0, 0});
    const auto target = make_target(world.hard_regress(w0), 0, world.space());
    const double T = 4.0;
    Vector g = Vector::Zero(f.param_count());
    edit_loss_grad(world, f, w0, T, target, 0, 64, g);
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      Vector pp = f.params(), pm = f.params();
      pp(k) += 1e-6;
      pm(k) -= 1e-6;
      VectorField fp = f, fm = f;
      fp.set_params(pp);
      fm.set_params(pm);
      const double fd =
          (edit_loss(world, fp, w0, T, target, 0).total - edit_loss(world, fm, w0, T, target, 0).total) / 2e-6;
      CAPTURE(to_string(v));
      CHECK(std::abs(fd - g(k)) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("training is deterministic") {
  const World world = world_of(WorldVariant::Ring, 3);
  TrainConfig cfg;
  cfg.iterations = 15;
  cfg.batch_size = 4;
  Rng a(42), b(42);
  const EditModel m1 = train_edit(world, 0, cfg, a, FieldChoice::net(2));
  const EditModel m2 = train_edit(world, 0, cfg, b, FieldChoice::net(2));
  REQUIRE(m1.history.size() == 15);
  for (std::size_t k = 0; k < 15; ++k) CHECK(m1.history[k].total == m2.history[k].total);
  CHECK((m1.field.params().array() == m2.field.params().array()).all());
  CHECK(m1.source == 0);
  CHECK(m1.target == 1);
  CHECK(m1.world == world.params());
}

TEST_CASE("restarts keep the run with the lowest final loss") {
  const World world = world_of(WorldVariant::Ring, 2);
  TrainConfig cfg;
  cfg.iterations = 20;
  cfg.batch_size = 4;
  auto tail = [](const EditModel& m) {
    double s = 0;
    for (std::size_t k = 18; k < 20; ++k) s += m.history[k].total / 2;
    return s;
  };
  Rng seq(7);
  std::vector<EditModel> runs;
  for (int r = 0; r < 3; ++r) runs.push_back(train_edit(world, 0, cfg, seq, FieldChoice::net(1)));
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (tail(runs[r]) < tail(runs[best])) best = r;
  }
  cfg.restarts = 3;
  Rng joint(7);
  const EditModel m = train_edit(world, 0, cfg, joint, FieldChoice::net(1));
  CHECK((m.field.params().array() == runs[best].field.params().array()).all());
  CHECK(m.history.size() == 20);
  CHECK(joint.next_u64() == seq.next_u64());
}

TEST_CASE("training argument checks") {
  const World world = world_of(WorldVariant::Blobs, 2);
  Rng rng(0);
  TrainConfig cfg;
  cfg.iterations = 0;
  CHECK_THROWS_AS(train_edit(world, 0, cfg, rng, FieldChoice::constant()), InvalidInput);
  cfg.iterations = 1;
  CHECK_THROWS_AS(train_edit(world, 2, cfg, rng, FieldChoice::constant()), InvalidInput);
  cfg.clip_norm = -1.0;
  CHECK_THROWS_AS(train_edit(world, 0, cfg, rng, FieldChoice::constant()), InvalidInput);
  cfg = TrainConfig{};
  cfg.restarts = 0;
  CHECK_THROWS_AS(train_edit(world, 0, cfg, rng, FieldChoice::constant()), InvalidInput);
}

TEST_CASE("BLOBS constant field learns the separating axis") {
  const World world = world_of(WorldVariant::Blobs, 8);
  TrainConfig cfg;
  cfg.iterations = 2000;
  Rng rng(3);
  const EditModel m = train_edit(world, 0, cfg, rng, FieldChoice::constant());
  double tail = 0;
  for (std::size_t k = m.history.size() - 100; k < m.history.size(); ++k) tail += m.history[k].control / 100;
  CHECK(tail <= 0.1);
  const Vector& theta = m.field.params();
  CHECK(std::abs(theta(0)) / theta.norm() >= 0.9);
  CHECK(theta(0) > 0.0);
}

TEST_CASE("compose_edits") {
  const World world = world_of(WorldVariant::Blobs, 3);
  auto model = [&](Vector dir) {
    return EditModel{VectorField::constant(std::move(dir)), 0, 0, 1, 12.0, world.params(), {}};
  };
  const Vector w0 = vec({-1.0, 0.5, 2.0});
  CHECK((compose_edits({}, w0, {}) - w0).norm() == 0.0);

  const std::vector<EditModel> one = {model(vec({1.0, 1.0, 0.0}))};
  const std::vector<double> t1 = {3.0};
  CHECK((compose_edits(one, w0, t1) - flow_endpoint(one[0].field, w0, 3.0, kEvalSteps)).norm() == 0.0);

  const Vector u = vec({3.0, 0.0, 4.0});
  const Vector v = vec({0.0, -2.0, 0.0});
  const std::vector<EditModel> two = {model(u), model(v)};
  const std::vector<double> t2 = {2.0, 5.0};
  const Vector expected = w0 + 2.0 * u / u.norm() + 5.0 * v / v.norm();
  CHECK((compose_edits(two, w0, t2) - expected).norm() <= 1e-12);

  EditModel other = model(u);
  other.world.beta = 2.0;
  const std::vector<EditModel> mixed = {model(u), other};
  CHECK_THROWS_AS(compose_edits(mixed, w0, t2), InvalidInput);
  const std::vector<double> too_long = {2.0, 13.0};
  CHECK_THROWS_AS(compose_edits(two, w0, too_long), InvalidInput);
  CHECK_THROWS_AS(compose_edits(two, w0, t1), InvalidInput);
}
