#include <doctest.h>

#include <cmath>
#include <random>

#include "mcq/harness.hpp"
#include "mcq/metrics.hpp"
#include "mcq/vsbl.hpp"

using namespace mcq;
using doctest::Approx;

namespace {

FactorState scalar_state() {
  FactorState s = initialize_factors(1, 1, 1, 1);
  s.u(0, 0) = 0.0;
  s.v(0, 0) = 1.0;
  s.sigma_u[0](0, 0) = 1.0;
  s.sigma_v[0](0, 0) = 0.0;
  s.gamma(0) = 1.0;
  return s;
}

HeteroObservations scalar_obs(cd y) {
  HeteroObservations obs;
  obs.m = 1;
  obs.n = 1;
  obs.omega = {{0, 0}};
  obs.y = Eigen::VectorXcd::Constant(1, y);
  obs.beta = Eigen::VectorXd::Constant(1, 1.0);
  return obs;
}

Eigen::MatrixXcd random_hpd(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = {g(rng), g(rng)};
  return a * a.adjoint() / k + 0.1 * Eigen::MatrixXcd::Identity(k, k);
}

}  // namespace

TEST_CASE("scalar row update") {
  auto s = scalar_state();
  const auto obs = scalar_obs(2.0);
  const ObservationLayout layout(1, 1, obs.omega);
  update_rows_u(s, obs, layout);
  CHECK(s.sigma_u[0](0, 0).real() == Approx(0.5));
  CHECK(std::abs(s.u(0, 0) - cd(1.0, 0.0)) < 1e-14);

  // Mirror on the V side: u = 1 with zero covariance, y = 2j gives v^ = conj(y) / 2.
  auto t = scalar_state();
  t.u(0, 0) = 1.0;
  t.sigma_u[0](0, 0) = 0.0;
  const auto obs_j = scalar_obs(cd(0.0, 2.0));
  update_rows_v(t, obs_j, layout);
  CHECK(t.sigma_v[0](0, 0).real() == Approx(0.5));
  CHECK(std::abs(t.v(0, 0) - cd(0.0, -1.0)) < 1e-14);
}

TEST_CASE("unobserved rows fall back to the prior") {
  auto s = initialize_factors(3, 2, 2, 4);
  s.gamma << 2.0, 5.0;
  HeteroObservations obs;
  obs.m = 3;
  obs.n = 2;
  obs.omega = {{0, 0}, {0, 1}};
  obs.y = Eigen::VectorXcd::Ones(2);
  obs.beta = Eigen::VectorXd::Ones(2);
  const ObservationLayout layout(3, 2, obs.omega);
  update_rows_u(s, obs, layout);
  for (int r = 1; r < 3; ++r) {
    CHECK(s.u.row(r).norm() == 0.0);
    CHECK(s.sigma_u[static_cast<std::size_t>(r)](0, 0).real() == Approx(0.5));
    CHECK(s.sigma_u[static_cast<std::size_t>(r)](1, 1).real() == Approx(0.2));
    CHECK(std::abs(s.sigma_u[static_cast<std::size_t>(r)](0, 1)) < 1e-15);
  }
}

TEST_CASE("precision update") {
  FactorState s = initialize_factors(2, 3, 2, 1);
  s.u.setZero();
  s.v.setZero();
  // Column 0: denominators sum to m + n = 5, so gamma = 1.
  s.u(0, 0) = 2.0;
  for (auto& c : s.sigma_u) c = Eigen::MatrixXcd::Identity(2, 2) * 0.25;
  for (auto& c : s.sigma_v) c = Eigen::MatrixXcd::Identity(2, 2) * 0.0;
  s.v(0, 0) = cd(0.0, std::sqrt(0.5));
  // Column 1: only covariance mass 2 * 0.25 = 0.5, gamma = 5 / 0.5 = 10.
  update_gamma(s);
  CHECK(s.gamma(0) == Approx(5.0 / (4.0 + 0.5 + 0.5)));
  CHECK(s.gamma(1) == Approx(10.0));

  // A vanished column is capped.
  for (auto& c : s.sigma_u) c.setZero();
  s.u.col(1).setZero();
  s.v.col(1).setZero();
  update_gamma(s);
  CHECK(s.gamma(1) == kGammaMax);
}

TEST_CASE("posterior variance against Monte Carlo") {
  std::mt19937_64 rng(17);
  const int k = 2;
  FactorState s = initialize_factors(1, 1, k, 3);
  s.u << cd(0.7, -0.2), cd(0.1, 0.4);
  s.v << cd(-0.3, 0.5), cd(1.1, 0.2);
  s.sigma_u[0] = random_hpd(k, rng);
  s.sigma_v[0] = random_hpd(k, rng);
  const Eigen::MatrixXcd lu = s.sigma_u[0].llt().matrixL();
  const Eigen::MatrixXcd lv = s.sigma_v[0].llt().matrixL();
  const cd z_mean = (s.u.row(0) * s.v.row(0).adjoint())(0, 0);

  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  const int samples = 1000000;
  double acc = 0.0;
  Eigen::RowVectorXcd wu(k), wv(k);
  for (int t = 0; t < samples; ++t) {
    for (int p = 0; p < k; ++p) {
      wu(p) = {g(rng), g(rng)};
      wv(p) = {g(rng), g(rng)};
    }
    // E[x^H x] = L L^H for x = w L^H.
    const Eigen::RowVectorXcd u = s.u.row(0) + wu * lu.adjoint();
    const Eigen::RowVectorXcd v = s.v.row(0) + wv * lv.adjoint();
    acc += std::norm((u * v.adjoint())(0, 0) - z_mean);
  }
  CHECK(posterior_var(s, 0, 0) == Approx(acc / samples).epsilon(1e-2));

  const auto all = posterior_vars(s, {{0, 0}});
  CHECK(all(0) == posterior_var(s, 0, 0));
}

TEST_CASE("posterior_vars agrees with posterior_var entrywise") {
  std::mt19937_64 rng(2);
  FactorState s = initialize_factors(4, 5, 3, 8);
  for (auto& c : s.sigma_u) c = random_hpd(3, rng);
  for (auto& c : s.sigma_v) c = random_hpd(3, rng);
  const IndexSet omega{{0, 0}, {1, 4}, {3, 2}, {2, 1}};
  const auto all = posterior_vars(s, omega);
  for (std::size_t e = 0; e < omega.size(); ++e) {
    CHECK(all(static_cast<Eigen::Index>(e)) == posterior_var(s, omega[e].first, omega[e].second));
  }
  const auto zm = posterior_moments_Z(s);
  CHECK(zm.var(3, 2) == posterior_var(s, 3, 2));
  CHECK((zm.mean - s.u * s.v.adjoint()).norm() < 1e-14);
}

TEST_CASE("noiseless rank-one completion") {
  Eigen::VectorXcd a(10), b(10);
  for (int i = 0; i < 10; ++i) {
    a(i) = std::polar(1.0 + 0.1 * i, 0.3 * i);
    b(i) = std::polar(2.0 - 0.1 * i, -0.7 * i);
  }
  const Eigen::MatrixXcd z = a * b.adjoint();
  HeteroObservations obs;
  obs.m = 10;
  obs.n = 10;
  for (int j = 0; j < 10; ++j)
    for (int i = 0; i < 10; ++i) obs.omega.emplace_back(i, j);
  obs.y.resize(100);
  for (int e = 0; e < 100; ++e) obs.y(e) = z(obs.omega[static_cast<std::size_t>(e)].first, obs.omega[static_cast<std::size_t>(e)].second);
  obs.beta = Eigen::VectorXd::Constant(100, 1e8);
  VsblOptions opt;
  opt.k = 4;
  opt.max_iters = 500;
  opt.tol = 1e-10;
  const auto res = vsbl_solve(obs, opt);
  CHECK(nmse_db(res.state.mean_z(), z) < -60.0);
  CHECK(res.rank == 1);
}

TEST_CASE("zero data gives zero estimate and valid covariances") {
  HeteroObservations obs;
  obs.m = 6;
  obs.n = 5;
  obs.omega = sample_omega(6, 5, 0.7, 3);
  obs.y = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(obs.omega.size()));
  obs.beta = Eigen::VectorXd::Constant(obs.y.size(), 10.0);
  VsblOptions opt;
  opt.k = 3;
  opt.max_iters = 50;
  const auto res = vsbl_solve(obs, opt);
  CHECK(res.state.mean_z().norm() < 1e-6);
  for (const auto& c : res.state.sigma_u) {
    CHECK((c - c.adjoint()).norm() < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(c).eigenvalues().minCoeff() > 0.0);
  }
  for (const auto& c : res.state.sigma_v) {
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(c).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("rank estimate from precisions") {
  Eigen::VectorXd g(5);
  g << 1.0, 2.0, 9.9, 10.0, 1e6;
  CHECK(estimate_rank(g) == 3);
  g << 3.0, 3.0, 3.0, 3.0, 3.0;
  CHECK(estimate_rank(g) == 5);
  CHECK(estimate_rank(Eigen::VectorXd()) == 0);
  g << 5.0, 1.0, 4.0, 100.0, 2.0;
  const auto idx = strongest_columns(g, 3);
  REQUIRE(idx.size() == 3);
  CHECK(idx[0] == 1);
  CHECK(idx[1] == 4);
  CHECK(idx[2] == 2);
}

TEST_CASE("bad observations are rejected") {
  auto obs = scalar_obs(1.0);
  obs.beta(0) = 0.0;
  CHECK_THROWS_AS(obs.validate(), std::invalid_argument);
  obs = scalar_obs(1.0);
  obs.omega[0] = {1, 0};
  CHECK_THROWS_AS(obs.validate(), std::invalid_argument);
  CHECK_THROWS_AS(initialize_factors(2, 2, 0, 1), std::invalid_argument);
}

TEST_CASE("precision update is stationary for its objective") {
  std::mt19937_64 rng(12);
  FactorState s = initialize_factors(4, 4, 2, 6);
  for (auto& c : s.sigma_u) c = random_hpd(2, rng);
  for (auto& c : s.sigma_v) c = random_hpd(2, rng);
  update_gamma(s);
  for (int c = 0; c < 2; ++c) {
    // Independent recomputation of the denominator, then Q(g) = (m+n) log g - g d.
    double d = 0.0;
    for (int i = 0; i < 4; ++i) d += std::norm(s.u(i, c)) + s.sigma_u[static_cast<std::size_t>(i)](c, c).real();
    for (int j = 0; j < 4; ++j) d += std::norm(s.v(j, c)) + s.sigma_v[static_cast<std::size_t>(j)](c, c).real();
    CHECK(s.gamma(c) == Approx(8.0 / d).epsilon(1e-13));
    auto q = [&](double g) { return 8.0 * std::log(g) - g * d; };
    const double h = 1e-5 * s.gamma(c);
    CHECK(std::abs((q(s.gamma(c) + h) - q(s.gamma(c) - h)) / (2.0 * h)) < 1e-6);
  }
}

TEST_CASE("scalar factorization matches an independent coordinate ascent") {
  for (int size : {2, 4}) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(size));
    std::normal_distribution<double> g;
    HeteroObservations obs;
    obs.m = size;
    obs.n = size;
    for (int j = 0; j < size; ++j)
      for (int i = 0; i < size; ++i) obs.omega.emplace_back(i, j);
    // Rank-one signal plus noise, so the fixed point is not the zero one.
    Eigen::VectorXcd a(size), b(size);
    for (int l = 0; l < size; ++l) {
      a(l) = cd(g(rng), g(rng));
      b(l) = cd(g(rng), g(rng));
    }
    obs.y = (a * b.adjoint()).reshaped();
    for (auto& y : obs.y) y += 0.1 * cd(g(rng), g(rng));
    obs.beta = Eigen::VectorXd::Constant(size * size, 50.0);

    VsblOptions opt;
    opt.k = 1;
    opt.max_iters = 400;
    opt.tol = 0.0;
    opt.seed = 3;
    const auto res = vsbl_solve(obs, opt);

    // Plain scalar recursion from the same starting point.
    const auto init = initialize_factors(size, size, 1, 3);
    std::vector<cd> u(static_cast<std::size_t>(size)), v(static_cast<std::size_t>(size));
    std::vector<double> su(static_cast<std::size_t>(size), 1.0), sv(static_cast<std::size_t>(size), 1.0);
    for (int i = 0; i < size; ++i) {
      u[static_cast<std::size_t>(i)] = init.u(i, 0);
      v[static_cast<std::size_t>(i)] = init.v(i, 0);
    }
    double gamma = 1.0;
    auto y = [&](int i, int j) { return obs.y(j * size + i); };
    for (int it = 0; it < 400; ++it) {
      for (int i = 0; i < size; ++i) {
        double prec = gamma;
        cd acc = 0.0;
        for (int j = 0; j < size; ++j) {
          prec += 50.0 * (std::norm(v[static_cast<std::size_t>(j)]) + sv[static_cast<std::size_t>(j)]);
          acc += 50.0 * y(i, j) * v[static_cast<std::size_t>(j)];
        }
        su[static_cast<std::size_t>(i)] = 1.0 / prec;
        u[static_cast<std::size_t>(i)] = acc / prec;
      }
      for (int j = 0; j < size; ++j) {
        double prec = gamma;
        cd acc = 0.0;
        for (int i = 0; i < size; ++i) {
          prec += 50.0 * (std::norm(u[static_cast<std::size_t>(i)]) + su[static_cast<std::size_t>(i)]);
          acc += 50.0 * std::conj(y(i, j)) * u[static_cast<std::size_t>(i)];
        }
        sv[static_cast<std::size_t>(j)] = 1.0 / prec;
        v[static_cast<std::size_t>(j)] = acc / prec;
      }
      double d = 0.0;
      for (int l = 0; l < size; ++l) {
        d += std::norm(u[static_cast<std::size_t>(l)]) + su[static_cast<std::size_t>(l)] +
             std::norm(v[static_cast<std::size_t>(l)]) + sv[static_cast<std::size_t>(l)];
      }
      gamma = 2.0 * size / d;
    }
    for (int i = 0; i < size; ++i) {
      CHECK(std::abs(res.state.u(i, 0) - u[static_cast<std::size_t>(i)]) < 1e-8);
      CHECK(std::abs(res.state.v(i, 0) - v[static_cast<std::size_t>(i)]) < 1e-8);
      CHECK(std::abs(res.state.sigma_u[static_cast<std::size_t>(i)](0, 0).real() - su[static_cast<std::size_t>(i)]) < 1e-8);
    }
    CHECK(res.state.gamma(0) == Approx(gamma).epsilon(1e-8));
  }
}

TEST_CASE("high precision full observation approaches the truncated SVD") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(8, 2), b(8, 2), noise(8, 8);
  for (int i = 0; i < 8; ++i) {
    for (int c = 0; c < 2; ++c) {
      a(i, c) = {g(rng), g(rng)};
      b(i, c) = {g(rng), g(rng)};
    }
    for (int j = 0; j < 8; ++j) noise(i, j) = cd(g(rng), g(rng)) * 0.05;
  }
  const Eigen::MatrixXcd y = a * b.adjoint() + noise;
  HeteroObservations obs;
  obs.m = 8;
  obs.n = 8;
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 8; ++i) obs.omega.emplace_back(i, j);
  obs.y = y.reshaped();
  obs.beta = Eigen::VectorXd::Constant(64, 1e6);
  VsblOptions opt;
  opt.k = 2;
  opt.max_iters = 1000;
  opt.tol = 1e-10;
  const auto res = vsbl_solve(obs, opt);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(y, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXcd best = svd.matrixU().leftCols(2) * svd.singularValues().head(2).cast<cd>().asDiagonal() *
                                svd.matrixV().leftCols(2).adjoint();
  CHECK(std::abs(nmse_db(res.state.mean_z(), y) - nmse_db(best, y)) < 1.0);
}

TEST_CASE("excess columns keep shrinking") {
  const auto draw = gen_random_lowrank(12, 12, 2, 40);
  HeteroObservations obs;
  obs.m = 12;
  obs.n = 12;
  obs.omega = sample_omega(12, 12, 0.9, 41);
  obs.y.resize(static_cast<Eigen::Index>(obs.omega.size()));
  const auto unit = unit_noise(obs.omega, 42);
  for (std::size_t e = 0; e < obs.omega.size(); ++e) {
    obs.y(static_cast<Eigen::Index>(e)) = draw.z(obs.omega[e].first, obs.omega[e].second) + 0.1 * unit(static_cast<Eigen::Index>(e));
  }
  obs.beta = Eigen::VectorXd::Constant(obs.y.size(), 100.0);
  const ObservationLayout layout(12, 12, obs.omega);
  auto s = initialize_factors(12, 12, 5, 43);
  std::vector<Eigen::VectorXd> energy;
  for (int it = 0; it < 200; ++it) {
    vb_sweep(s, obs, layout);
    if (it >= 190) {
      energy.push_back((s.u.colwise().squaredNorm() + s.v.colwise().squaredNorm()).transpose());
    }
  }
  const auto keep = strongest_columns(s.gamma, 2);
  for (int c = 0; c < 5; ++c) {
    if (std::find(keep.begin(), keep.end(), c) != keep.end()) continue;
    for (std::size_t t = 1; t < energy.size(); ++t) CHECK(energy[t](c) <= energy[t - 1](c));
  }
}
