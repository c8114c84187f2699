// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>

#include "arnse/adam.hpp"

using namespace arnse;

namespace {

// Scalar Adam written out longhand.
struct ScalarAdam {
  double m = 0, v = 0;
  long t = 0;
  double Step(double p, double g, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    return p - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

}  // namespace

TEST_CASE("matches a longhand scalar Adam over many steps") {
  ParamSet<double> params{{"w", Eigen::MatrixXd::Constant(1, 1, 0.7)}};
  AdamState<double> state;
  ScalarAdam oracle;
  double p = 0.7;
  for (int i = 0; i < 50; ++i) {
    const double g = std::sin(0.3 * i) + 0.1;
    AdamStep(&params, {{"w", Eigen::MatrixXd::Constant(1, 1, g)}}, &state, 1e-2);
    p = oracle.Step(p, g, 1e-2);
    CHECK(params["w"](0, 0) == doctest::Approx(p).epsilon(1e-14));
  }
  CHECK(state.step == 50);
}

TEST_CASE("first step moves every coordinate by about lr") {
  ParamSet<double> params{{"w", Eigen::MatrixXd::Zero(2, 3)}};
  Eigen::MatrixXd g(2, 3);
  g << 1, -2, 3, -0.5, 0.25, 10;
  AdamState<double> state;
  AdamStep(&params, {{"w", g}}, &state, 1e-3);
  const Eigen::MatrixXd expected = -1e-3 * g.array().sign().matrix();
  CHECK((params["w"] - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("invalid gradients leave parameters untouched") {
  ParamSet<double> params{{"a", Eigen::MatrixXd::Ones(2, 2)}, {"b", Eigen::MatrixXd::Ones(1, 2)}};
  const ParamSet<double> before = params;
  AdamState<double> state;
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(1, 2);
  bad(0, 1) = INFINITY;
  CHECK_THROWS_AS(AdamStep(&params, {{"a", Eigen::MatrixXd::Ones(2, 2)}, {"b", bad}}, &state, 0.1),
                  NumericError);
  CHECK_THROWS_AS(AdamStep(&params, {{"a", Eigen::MatrixXd::Ones(2, 2)}}, &state, 0.1), DataError);
  CHECK_THROWS_AS(
      AdamStep(&params, {{"a", Eigen::MatrixXd::Ones(2, 1)}, {"b", Eigen::MatrixXd::Ones(1, 2)}}, &state, 0.1),
      DataError);
  CHECK(params == before);
  CHECK(state.step == 0);
}

TEST_CASE("global norm clipping") {
  GradSet<double> g{{"a", Eigen::MatrixXd::Constant(1, 1, 3.0)}, {"b", Eigen::MatrixXd::Constant(1, 1, 4.0)}};
  CHECK(GlobalNorm(g) == doctest::Approx(5.0));
  ClipByGlobalNorm(&g, 10.0);
  CHECK(g["a"](0, 0) == 3.0);
  ClipByGlobalNorm(&g, 1.0);
  CHECK(GlobalNorm(g) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g["a"](0, 0) / g["b"](0, 0) == doctest::Approx(0.75));
}
