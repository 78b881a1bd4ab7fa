#include <doctest.h>

#include <Eigen/Cholesky>

#include "spsiv/errors.hpp"
#include "spsiv/estimators.hpp"
#include "spsiv/sps.hpp"
#include "support.hpp"

using namespace spsiv;
using spsiv::testing::gaussian_matrix;
using spsiv::testing::gaussian_vector;
using spsiv::testing::random_problem;

namespace {

// ||S_i||^2 = x_i^T H^{-1} x_i with x_i = (1/n) sum alpha psi eps, via an LDLT
// solve rather than the principal inverse root.
std::vector<double> oracle_sums(const Dataset& data, const Perturbation& pert, const Vector& theta) {
  const double n = static_cast<double>(data.n());
  const Matrix& psi = data.instruments();
  const Matrix h = psi.transpose() * psi / n;
  const Eigen::LDLT<Matrix> ldlt(h);
  std::vector<double> out;
  for (int i = 0; i < pert.m(); ++i) {
    Vector x = Vector::Zero(data.d());
    for (Eigen::Index t = 0; t < data.n(); ++t) {
      const double a = i == 0 ? 1.0 : pert.signs(i - 1, t);
      const double eps = data.outputs()(t) - data.regressors().row(t).dot(theta);
      x += a * eps * psi.row(t).transpose();
    }
    x /= n;
    out.push_back(x.dot(ldlt.solve(x)));
  }
  return out;
}

Perturbation manual(const std::vector<std::vector<int>>& rows, std::vector<int> pi) {
  Perturbation p;
  p.signs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t t = 0; t < rows[i].size(); ++t) {
      p.signs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
          static_cast<signed char>(rows[i][t]);
    }
  }
  p.permutation = std::move(pi);
  return p;
}

Dataset tiny_dataset() {
  Vector y(2), phi(2), psi(2);
  y << 2.0, 3.0;
  phi << 1.0, 1.0;
  psi << 1.0, 2.0;
  return Dataset(y, phi, psi);
}

}  // namespace

TEST_CASE("prediction_errors") {
  Vector y(2), phi(2);
  y << 3.0, 5.0;
  phi << 1.0, 2.0;
  const Dataset data(y, phi, phi);
  const Vector e = prediction_errors(data, Vector::Ones(1));
  CHECK(e(0) == 2.0);
  CHECK(e(1) == 3.0);
  CHECK(prediction_errors(data, Vector::Zero(1)) == y);
  CHECK_THROWS_AS(prediction_errors(data, Vector::Zero(2)), InputError);
}

TEST_CASE("sums_at hand instance") {
  const Dataset data = tiny_dataset();
  const SpsState state = build_state(data);
  const Perturbation pert = manual({{1, -1}}, {0, 1});
  const SumsAt s = sums_at(state, pert, data, Vector::Zero(1));
  CHECK(s.values[0] == doctest::Approx(6.4).epsilon(1e-12));
  CHECK(s.values[1] == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("sums_at agrees with a direct-summation oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(4));
    const auto p = random_problem(rng, 20 + 3 * d, d);
    const SpsState state = build_state(p.data);
    const Perturbation pert = draw_perturbation(SpsConfig(8, 1, rng.next_u64()), p.data.n());
    const Vector theta = gaussian_vector(rng, d);
    const SumsAt s = sums_at(state, pert, p.data, theta);
    const std::vector<double> oracle = oracle_sums(p.data, pert, theta);
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      CHECK(s.values[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("reference sum vanishes at the IV estimate") {
  Rng rng(102);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(4));
    const auto p = random_problem(rng, 30, d);
    const SpsState state = build_state(p.data);
    const Perturbation pert = draw_perturbation(SpsConfig(5, 1, 1), p.data.n());
    const double scale = sums_at(state, pert, p.data, Vector::Zero(d)).values[0];
    CHECK(sums_at(state, pert, p.data, state.theta_iv).values[0] <= 1e-16 * std::max(1.0, scale));
    CHECK(indicator(state, pert, p.data, state.theta_iv, 1));
    CHECK(indicator(state, pert, p.data, state.theta_iv, 4));
  }
}

TEST_CASE("all-plus sign row reproduces the reference sum exactly") {
  Rng rng(103);
  const auto p = random_problem(rng, 12, 2);
  const SpsState state = build_state(p.data);
  std::vector<int> plus(12, 1), mixed(12, 1);
  mixed[3] = -1;
  const Perturbation pert = manual({mixed, plus}, {2, 0, 1});
  const SumsAt s = sums_at(state, pert, p.data, gaussian_vector(rng, 2));
  CHECK(s.values[2] == s.values[0]);
  CHECK(s.values[1] != s.values[0]);
}

TEST_CASE("rank_s0 examples") {
  const std::vector<int> any{3, 0, 1, 2};
  CHECK(rank_s0(SumsAt{{5.0, 1.0, 2.0, 3.0}}, any) == 4);
  CHECK(rank_s0(SumsAt{{0.5, 1.0, 2.0, 3.0}}, any) == 1);
  const std::vector<int> swap{1, 0};
  CHECK(rank_s0(SumsAt{{1.0, 1.0}}, swap) == 2);
  const std::vector<int> ident{0, 1};
  CHECK(rank_s0(SumsAt{{1.0, 1.0}}, ident) == 1);

  // All tied: rank is one plus the number of pi values below pi(0).
  const std::vector<std::vector<int>> perms{{0, 1, 2}, {1, 0, 2}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1}};
  for (const auto& pi : perms) {
    int below = 0;
    for (std::size_t i = 1; i < pi.size(); ++i) below += pi[i] < pi[0] ? 1 : 0;
    CHECK(rank_s0(SumsAt{{0.0, 0.0, 0.0}}, pi) == below + 1);
  }
  CHECK_THROWS_AS(rank_s0(SumsAt{{0.0, 0.0}}, any), InputError);
}

TEST_CASE("acceptance rule at the threshold") {
  CHECK(rank_accepted(95, 100, 5));
  CHECK_FALSE(rank_accepted(96, 100, 5));
  CHECK(rank_accepted(1, 2, 1));
  CHECK_FALSE(rank_accepted(2, 2, 1));
}

TEST_CASE("affine evaluator agrees with direct summation") {
  Rng rng(104);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(3));
    const auto p = random_problem(rng, 25, d);
    const SpsState state = build_state(p.data);
    const int m = 10 + static_cast<int>(rng.below(30));
    const int q = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - 1)));
    const Perturbation pert = draw_perturbation(SpsConfig(m, q, rng.next_u64()), p.data.n());
    const SpsEvaluator eval(state, pert, p.data, q);
    CHECK(eval.m() == m);
    CHECK(eval.q() == q);
    for (int k = 0; k < 25; ++k) {
      const double spread = std::pow(10.0, -2.0 + 3.0 * rng.uniform());
      const Vector theta = state.theta_iv + spread * gaussian_vector(rng, d);
      const SumsAt direct = sums_at(state, pert, p.data, theta);
      const SumsAt fast = eval.sums(theta);
      for (int i = 0; i < m; ++i) {
        CHECK(fast.values[static_cast<std::size_t>(i)] ==
              doctest::Approx(direct.values[static_cast<std::size_t>(i)]).epsilon(1e-8).scale(1e-20));
      }
      const int r = rank_s0(direct, pert.permutation);
      CHECK(eval.rank(theta) == r);
      CHECK(eval.contains(theta) == rank_accepted(r, m, q));
      CHECK(indicator(state, pert, p.data, theta, q) == rank_accepted(r, m, q));
    }
  }
}

TEST_CASE("sums are invariant under invertible transforms of the instruments") {
  Rng rng(105);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(3));
    const auto p = random_problem(rng, 20, d);
    Vector flips(d);
    for (Eigen::Index k = 0; k < d; ++k) flips(k) = rng.sign();
    const Matrix t = spsiv::testing::random_spd(rng, d, 20.0).matrix() * flips.asDiagonal();
    const Dataset moved(p.data.outputs(), p.data.regressors(), p.data.instruments() * t.transpose());
    const Perturbation pert = draw_perturbation(SpsConfig(12, 3, rng.next_u64()), 20);
    const Vector theta = gaussian_vector(rng, d);
    const SumsAt a = sums_at(build_state(p.data), pert, p.data, theta);
    const SumsAt b = sums_at(build_state(moved), pert, moved, theta);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      CHECK(b.values[i] == doctest::Approx(a.values[i]).epsilon(1e-8));
    }
  }
}

TEST_CASE("GridSpec geometry") {
  GridSpec g{Vector::Zero(2), Vector::Ones(2), {4, 2}};
  CHECK_NOTHROW(g.validate(2));
  CHECK(g.cell_count() == 8u);
  const Vector c = g.cell_center(5);  // axis 0 fastest: (1, 1)
  CHECK(c(0) == doctest::Approx(0.375));
  CHECK(c(1) == doctest::Approx(0.75));
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    CHECK(g.cell_of(g.cell_center(k)) == static_cast<std::int64_t>(k));
  }
  CHECK(g.cell_of(Vector::Constant(2, 1.5)) == -1);
  CHECK(g.cell_of(Vector::Ones(2)) == 7);

  CHECK_THROWS_AS((GridSpec{Vector::Zero(2), Vector::Ones(2), {0, 2}}.validate(2)), InputError);
  CHECK_THROWS_AS((GridSpec{Vector::Ones(2), Vector::Zero(2), {2, 2}}.validate(2)), InputError);
  CHECK_THROWS_AS((GridSpec{Vector::Zero(4), Vector::Ones(4), {2, 2, 2, 2}}.validate(4)), InputError);
  CHECK_THROWS_AS(g.validate(3), InputError);
}

TEST_CASE("traced region contains the IV estimate") {
  Rng rng(106);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_problem(rng, 25, 2);
    const SpsState state = build_state(p.data);
    const SpsConfig cfg(100, 5, rng.next_u64());
    const Perturbation pert = draw_perturbation(cfg, 25);
    // theta_iv sits exactly at the center of cell (10, 10).
    const GridSpec g{state.theta_iv.array() - 1.05, state.theta_iv.array() + 1.05, {21, 21}};
    const GridRegion region = trace_region(state, pert, p.data, cfg, g);
    CHECK(region.mask.size() == 441u);
    CHECK(region.mask[static_cast<std::size_t>(g.cell_of(state.theta_iv))] == 1);
    CHECK(region.accepted() < region.mask.size());
  }
}

TEST_CASE("degenerate m = 2 region matches direct comparison") {
  Rng rng(107);
  const auto p = random_problem(rng, 15, 2);
  const SpsState state = build_state(p.data);
  const SpsConfig cfg(2, 1, 9);
  const Perturbation pert = draw_perturbation(cfg, 15);
  const GridSpec g{state.theta_iv.array() - 3.0, state.theta_iv.array() + 3.0, {40, 40}};
  const GridRegion region = trace_region(state, pert, p.data, cfg, g);
  std::size_t accepted = 0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const SumsAt s = sums_at(state, pert, p.data, g.cell_center(c));
    const bool s0_above = s.values[0] > s.values[1] ||
                          (s.values[0] == s.values[1] && pert.permutation[0] > pert.permutation[1]);
    CHECK(region.mask[c] == (s0_above ? 0 : 1));
    accepted += region.mask[c];
  }
  CHECK(accepted > 0);
  CHECK(accepted < g.cell_count());
}

TEST_CASE("noiseless data rejects a grid away from the true parameter") {
  Rng rng(108);
  const Matrix phi = gaussian_matrix(rng, 50, 2);
  Vector theta(2);
  theta << 0.7, 1.0;
  const Dataset data(phi * theta, phi, phi);
  const SpsState state = build_state(data);
  const SpsConfig cfg(20, 2, 3);
  const Perturbation pert = draw_perturbation(cfg, 50);
  const GridSpec g{Vector::Constant(2, 2.0), Vector::Constant(2, 3.0), {30, 30}};
  CHECK(trace_region(state, pert, data, cfg, g).accepted() == 0u);
  CHECK(indicator(state, pert, data, theta, 2));
}

TEST_CASE("mismatched perturbations are rejected") {
  const Dataset data = tiny_dataset();
  const SpsState state = build_state(data);
  const Perturbation pert = draw_perturbation(SpsConfig(3, 1, 1), 3);
  CHECK_THROWS_AS(sums_at(state, pert, data, Vector::Zero(1)), InputError);
  const Perturbation ok = draw_perturbation(SpsConfig(3, 1, 1), 2);
  CHECK_THROWS_AS(SpsEvaluator(state, ok, data, 3), InputError);
  const GridSpec g{Vector::Zero(1), Vector::Ones(1), {4}};
  CHECK_THROWS_AS(trace_region(state, ok, data, SpsConfig(4, 1, 1), g), InputError);
}

TEST_CASE("rank is invariant under joint scaling of outputs and parameter") {
  Rng rng(109);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(3));
    const auto p = random_problem(rng, 20, d);
    const double c = std::pow(10.0, -3.0 + 6.0 * rng.uniform()) * (rng.sign() > 0 ? 1.0 : -1.0);
    const Dataset scaled(c * p.data.outputs(), p.data.regressors(), p.data.instruments());
    const SpsState s1 = build_state(p.data);
    const SpsState s2 = build_state(scaled);
    const Perturbation pert = draw_perturbation(SpsConfig(15, 2, rng.next_u64()), 20);
    for (int k = 0; k < 20; ++k) {
      const Vector theta = s1.theta_iv + gaussian_vector(rng, d);
      CHECK(rank_s0(sums_at(s1, pert, p.data, theta), pert.permutation) ==
            rank_s0(sums_at(s2, pert, scaled, c * theta), pert.permutation));
    }
  }
}
