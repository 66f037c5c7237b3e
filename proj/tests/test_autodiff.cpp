#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "sslspk/adam.hpp"
#include "sslspk/errors.hpp"
#include "sslspk/tape.hpp"
#include "sslspk/tensor.hpp"

using namespace sslspk;

namespace {

// Packs leaf tensors into one flat vector, projects the op output to a scalar
// with fixed random weights, and compares tape gradients against central
// finite differences.
struct GradCheckCase {
  const char* name;
  std::vector<std::vector<std::size_t>> shapes;
  std::function<Var(GradTape&, const std::vector<Var>&)> build;
  double lo = -1.0;
  double hi = 1.0;
  bool away_from_zero = false;  // for relu's kink
};

double run_gradcheck(const GradCheckCase& c, std::uint64_t seed,
                     double* max_err_out) {
  Rng rng(seed);
  std::vector<std::vector<double>> inputs;
  std::size_t total = 0;
  for (const auto& s : c.shapes) {
    std::vector<double> v(s[0] * s[1]);
    for (double& d : v) {
      d = rng.uniform(c.lo, c.hi);
      if (c.away_from_zero && std::fabs(d) < 0.2) d = d >= 0 ? 0.25 : -0.25;
    }
    total += v.size();
    inputs.push_back(std::move(v));
  }

  // probe output shape once to fix projection weights
  Tensor weights;
  {
    GradTape t;
    std::vector<Var> leaves;
    for (std::size_t i = 0; i < c.shapes.size(); ++i) {
      leaves.push_back(t.leaf(
          Tensor(c.shapes[i], inputs[i]).with_grad()));
    }
    Var out = c.build(t, leaves);
    const Tensor& ov = t.value(out);
    weights = oracles::random_tensor(rng, ov.rows(), ov.cols(), -1.0, 1.0);
  }

  auto eval = [&](const std::vector<double>& flat) {
    GradTape t;
    std::vector<Var> leaves;
    std::size_t off = 0;
    for (const auto& s : c.shapes) {
      std::vector<double> v(flat.begin() + off, flat.begin() + off + s[0] * s[1]);
      off += v.size();
      leaves.push_back(t.leaf(Tensor(s, std::move(v)).with_grad()));
    }
    Var out = c.build(t, leaves);
    Var proj = t.mean(t.rowwise_dot(out, t.constant(weights)));
    return t.value(proj).at(0, 0);
  };

  std::vector<double> flat;
  for (const auto& v : inputs) flat.insert(flat.end(), v.begin(), v.end());

  // tape gradients
  std::vector<double> ad(total);
  {
    GradTape t;
    std::vector<Var> leaves;
    std::size_t off = 0;
    for (const auto& s : c.shapes) {
      std::vector<double> v(flat.begin() + off, flat.begin() + off + s[0] * s[1]);
      off += v.size();
      leaves.push_back(t.leaf(Tensor(s, std::move(v)).with_grad()));
    }
    Var out = c.build(t, leaves);
    Var proj = t.mean(t.rowwise_dot(out, t.constant(weights)));
    t.backward(proj);
    std::size_t pos = 0;
    for (Var leaf : leaves) {
      Tensor g = t.grad(leaf);
      for (std::size_t i = 0; i < g.size(); ++i) ad[pos++] = g.data()[i];
    }
  }

  std::vector<double> fd = oracles::finite_difference(eval, flat);
  double err = oracles::max_rel_err(ad, fd);
  if (max_err_out) *max_err_out = err;
  return err;
}

}  // namespace

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor::matrix(2, 2, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(Tensor::matrix(1, 2, {1.0, std::nan("")}), NumericError);
  CHECK_THROWS_AS(Tensor::matrix(1, 2, {1.0, INFINITY}), NumericError);
  Tensor t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 6.0);
  CHECK_THROWS_AS(t.at(2, 0), ShapeError);
}

TEST_CASE("matmul hand examples") {
  GradTape t;
  Var i2 = t.constant(Tensor::identity(2));
  Var prod = t.matmul(i2, t.constant(Tensor::identity(2)));
  CHECK(t.value(prod).at(0, 0) == 1.0);
  CHECK(t.value(prod).at(0, 1) == 0.0);
  CHECK(t.value(prod).at(1, 1) == 1.0);

  Var a = t.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  Var b = t.constant(Tensor::matrix(2, 1, {1, 1}));
  Var c = t.matmul(a, b);
  CHECK(t.value(c).at(0, 0) == 3.0);
  CHECK(t.value(c).at(1, 0) == 7.0);

  CHECK_THROWS_AS(t.matmul(a, t.constant(Tensor::matrix(3, 1, {1, 1, 1}))),
                  ShapeError);
}

TEST_CASE("matmul gradient matches finite differences tightly") {
  GradCheckCase c{"matmul",
                  {{3, 4}, {4, 2}},
                  [](GradTape& t, const std::vector<Var>& v) {
                    return t.matmul(v[0], v[1]);
                  }};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CHECK(run_gradcheck(c, 1000 + seed, nullptr) < 1e-6);
  }
}

TEST_CASE("l2_normalize_rows examples") {
  GradTape t;
  Var v = t.l2_normalize_rows(t.constant(Tensor::matrix(1, 2, {3, 4})));
  CHECK(t.value(v).at(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(t.value(v).at(0, 1) == doctest::Approx(0.8).epsilon(1e-12));

  // idempotence on already-unit rows
  Var again = t.l2_normalize_rows(v);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(t.value(again).at(0, j) ==
          doctest::Approx(t.value(v).at(0, j)).epsilon(1e-14));
  }

  CHECK_THROWS_AS(t.l2_normalize_rows(t.constant(Tensor::zeros(1, 3))),
                  DomainError);
}

TEST_CASE("elementwise op examples") {
  GradTape t;
  // softmax of a constant row is uniform
  Var sm = t.softmax_rows(t.constant(Tensor::filled(1, 5, 0.73)));
  for (std::size_t j = 0; j < 5; ++j) CHECK(t.value(sm).at(0, j) == 0.2);

  // exp . log = identity on positive tensors
  Rng rng(7);
  Tensor x = oracles::random_tensor(rng, 3, 4, 0.1, 5.0);
  Var xi = t.constant(x);
  Var round_trip = t.exp(t.log(xi));
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(t.value(round_trip).data()[i] ==
          doctest::Approx(x.data()[i]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(t.log(t.constant(Tensor::matrix(1, 2, {1.0, -0.5}))),
                  DomainError);
  CHECK_THROWS_AS(t.log(t.constant(Tensor::matrix(1, 1, {0.0}))), DomainError);
}

TEST_CASE("every primitive gradient matches finite differences over 100 seeds") {
  std::vector<GradCheckCase> cases;
  cases.push_back({"add", {{3, 4}, {3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.add(v[0], v[1]);
                   }});
  cases.push_back({"add_broadcast", {{3, 4}, {1, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.add(v[0], v[1]);
                   }});
  cases.push_back({"sub", {{3, 4}, {3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.sub(v[0], v[1]);
                   }});
  cases.push_back({"sub_broadcast", {{3, 4}, {1, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.sub(v[0], v[1]);
                   }});
  cases.push_back({"scale", {{3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.scale(v[0], -2.7);
                   }});
  cases.push_back({"exp", {{3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.exp(v[0]);
                   }});
  cases.push_back({"log", {{3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.log(v[0]);
                   },
                   0.1, 3.0});
  cases.push_back({"tanh", {{3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.tanh(v[0]);
                   }});
  cases.push_back({"relu", {{3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.relu(v[0]);
                   },
                   -1.0, 1.0, true});
  cases.push_back({"softmax_rows", {{3, 5}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.softmax_rows(v[0]);
                   }});
  cases.push_back({"mean", {{3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.mean(v[0]);
                   }});
  cases.push_back({"matmul", {{3, 4}, {4, 2}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.matmul(v[0], v[1]);
                   }});
  cases.push_back({"transpose", {{3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.transpose(v[0]);
                   }});
  cases.push_back({"l2_normalize_rows", {{4, 6}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.l2_normalize_rows(v[0]);
                   },
                   0.3, 1.5});
  cases.push_back({"concat_rows", {{2, 4}, {3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.concat_rows(v[0], v[1]);
                   }});
  cases.push_back({"concat_cols", {{3, 2}, {3, 4}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.concat_cols(v[0], v[1]);
                   }});
  cases.push_back({"gather_cols", {{4, 5}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.gather_cols(v[0], {1, 0, 4, 2});
                   }});
  cases.push_back({"rowwise_dot", {{4, 5}, {4, 5}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.rowwise_dot(v[0], v[1]);
                   }});
  cases.push_back({"logsumexp_rows", {{4, 5}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.logsumexp_rows(v[0]);
                   },
                   -3.0, 3.0});
  static Tensor lse_mask = Tensor::matrix(
      4, 5, {1, 0, 1, 1, 1, 1, 1, 0, 1, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 0});
  cases.push_back({"logsumexp_rows_masked", {{4, 5}},
                   [](GradTape& t, const std::vector<Var>& v) {
                     return t.logsumexp_rows(v[0], &lse_mask);
                   },
                   -3.0, 3.0});

  for (const auto& c : cases) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      double err = run_gradcheck(c, seed * 37 + 5, nullptr);
      worst = std::max(worst, err);
    }
    INFO("op: " << c.name << " worst rel err " << worst);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("composite chain gradient (l2_normalize after matmul)") {
  GradCheckCase c{"composite",
                  {{3, 4}, {4, 6}},
                  [](GradTape& t, const std::vector<Var>& v) {
                    return t.l2_normalize_rows(
                        t.tanh(t.matmul(v[0], v[1])));
                  },
                  0.2, 1.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(run_gradcheck(c, 900 + seed, nullptr) < 1e-4);
  }
}

TEST_CASE("gradient of masked logsumexp ignores masked entries") {
  Tensor mask = Tensor::matrix(1, 3, {1, 0, 1});
  GradTape t;
  Var x = t.leaf(Tensor::matrix(1, 3, {0.5, 100.0, -0.5}).with_grad());
  Var lse = t.logsumexp_rows(x, &mask);
  // the huge masked entry is invisible to the value
  CHECK(t.value(lse).at(0, 0) ==
        doctest::Approx(std::log(std::exp(0.5) + std::exp(-0.5))).epsilon(1e-12));
  t.backward(t.mean(lse));
  CHECK(t.grad(x).at(0, 1) == 0.0);
}

TEST_CASE("backward of a sum of losses equals the sum of backwards") {
  Rng rng(42);
  Tensor a = oracles::random_tensor(rng, 3, 3);
  Tensor b = oracles::random_tensor(rng, 3, 3);

  auto grads_of = [&](int which) {
    GradTape t;
    Var va = t.leaf(a.with_grad());
    Var vb = t.leaf(b.with_grad());
    Var l1 = t.mean(t.tanh(t.matmul(va, vb)));
    Var l2 = t.mean(t.exp(t.scale(t.rowwise_dot(va, vb), 0.3)));
    Var root = which == 0 ? l1 : which == 1 ? l2 : t.add(l1, l2);
    t.backward(root);
    return std::pair{t.grad(va), t.grad(vb)};
  };

  auto [ga1, gb1] = grads_of(0);
  auto [ga2, gb2] = grads_of(1);
  auto [gas, gbs] = grads_of(2);
  for (std::size_t i = 0; i < ga1.size(); ++i) {
    CHECK(gas.data()[i] ==
          doctest::Approx(ga1.data()[i] + ga2.data()[i]).epsilon(1e-12));
    CHECK(gbs.data()[i] ==
          doctest::Approx(gb1.data()[i] + gb2.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("replaying a tape twice without reset is rejected") {
  GradTape t;
  Var x = t.leaf(Tensor::scalar(2.0).with_grad());
  Var y = t.mean(t.exp(x));
  t.backward(y);
  CHECK_THROWS_AS(t.backward(y), NumericError);
  t.reset();
  Var x2 = t.leaf(Tensor::scalar(2.0).with_grad());
  CHECK_NOTHROW(t.backward(t.mean(t.exp(x2))));
}

TEST_CASE("gradients accumulate additively on fan-out") {
  GradTape t;
  Var x = t.leaf(Tensor::scalar(1.5).with_grad());
  Var y = t.add(x, x);  // dy/dx = 2
  t.backward(t.mean(y));
  CHECK(t.grad(x).at(0, 0) == 2.0);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor p = Tensor::matrix(2, 2, {1, 2, 3, 4});
  AdamState s = AdamState::init_like({&p}, 0.01);
  for (int i = 0; i < 10; ++i) {
    adam_step({&p}, {Tensor::zeros(2, 2)}, s);
  }
  CHECK(p.at(0, 0) == 1.0);
  CHECK(p.at(1, 1) == 4.0);
  CHECK(s.step == 10);
}

TEST_CASE("adam: first step magnitude equals lr up to epsilon scale") {
  Tensor p = Tensor::scalar(0.0);
  AdamState s = AdamState::init_like({&p}, 0.001);
  adam_step({&p}, {Tensor::scalar(1.0)}, s);
  // m_hat = 1, v_hat = 1 -> step = -lr / (1 + eps)
  CHECK(p.at(0, 0) == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(std::fabs(p.at(0, 0)) == doctest::Approx(0.001).epsilon(1e-6));
}

TEST_CASE("adam: quadratic bowl converges") {
  Tensor x = Tensor::scalar(1.0);
  AdamState s = AdamState::init_like({&x}, 0.01);
  for (int i = 0; i < 500; ++i) {
    adam_step({&x}, {Tensor::scalar(2.0 * x.at(0, 0))}, s);
  }
  CHECK(std::fabs(x.at(0, 0)) < 1e-2);
}

TEST_CASE("adam: non-finite gradient aborts naming the parameter") {
  Tensor p = Tensor::scalar(0.0);
  AdamState s = AdamState::init_like({&p}, 0.001);
  std::vector<std::string> names{"frame1.weight"};
  Tensor bad = Tensor::scalar(0.0);
  bad.data()[0] = INFINITY;  // bypass construction check on purpose
  try {
    adam_step({&p}, {bad}, s, &names);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("frame1.weight") != std::string::npos);
  }
}

TEST_CASE("lr schedule: 5% decay every 5 epochs") {
  CHECK(lr_schedule(0, 0.001) == 0.001);
  CHECK(lr_schedule(4, 0.001) == 0.001);
  CHECK(lr_schedule(5, 0.001) == doctest::Approx(0.00095).epsilon(1e-15));
  CHECK(lr_schedule(10, 0.001) == doctest::Approx(0.0009025).epsilon(1e-15));
  CHECK_THROWS_AS(lr_schedule(-1, 0.001), ConfigError);
}
