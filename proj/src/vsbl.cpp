#include "mcq/vsbl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace mcq {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::RowVectorXcd;

void HeteroObservations::validate() const {
  const auto size = static_cast<Index>(omega.size());
  if (y.size() != size || beta.size() != size) {
    throw std::invalid_argument("HeteroObservations: y/beta must align with omega");
  }
  for (Index e = 0; e < size; ++e) {
    const auto [i, j] = omega[static_cast<std::size_t>(e)];
    if (i < 0 || i >= m || j < 0 || j >= n) throw std::invalid_argument("index out of range");
    if (!(beta(e) > 0.0)) throw std::invalid_argument("beta must be positive");
  }
}

ObservationLayout::ObservationLayout(Index m, Index n, const IndexSet& omega)
    : by_row_(static_cast<std::size_t>(m)), by_col_(static_cast<std::size_t>(n)) {
  for (std::size_t e = 0; e < omega.size(); ++e) {
    const auto [i, j] = omega[e];
    by_row_[static_cast<std::size_t>(i)].push_back({j, static_cast<Index>(e)});
    by_col_[static_cast<std::size_t>(j)].push_back({i, static_cast<Index>(e)});
  }
}

FactorState initialize_factors(Index m, Index n, Index k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  std::mt19937_64 rng(seed);
  // CN(0, 1/k): each real component has variance 1 / (2k).
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5 / static_cast<double>(k)));
  auto draw = [&](Index rows) {
    MatrixXcd x(rows, k);
    for (Index c = 0; c < k; ++c) {
      for (Index r = 0; r < rows; ++r) {
        const double re = normal(rng);
        const double im = normal(rng);
        x(r, c) = cd(re, im);
      }
    }
    return x;
  };

  FactorState s;
  s.m = m;
  s.n = n;
  s.k = k;
  s.u = draw(m);
  s.v = draw(n);
  s.sigma_u.assign(static_cast<std::size_t>(m), MatrixXcd::Identity(k, k));
  s.sigma_v.assign(static_cast<std::size_t>(n), MatrixXcd::Identity(k, k));
  s.gamma = Eigen::VectorXd::Ones(k);
  return s;
}

namespace {

// Second moments E[x^H x] = x^^H x^ + Sigma for every row.
std::vector<MatrixXcd> second_moments(const MatrixXcd& mean, const std::vector<MatrixXcd>& cov) {
  std::vector<MatrixXcd> out(cov.size());
  for (std::size_t r = 0; r < cov.size(); ++r) {
    const auto row = mean.row(static_cast<Index>(r));
    out[r] = row.adjoint() * row + cov[r];
  }
  return out;
}

// Shared row update. `conjugate_y` selects the V side: columns of Omega and
// the form beta Y* u.
void update_side(MatrixXcd& mean, std::vector<MatrixXcd>& cov, const MatrixXcd& other_mean,
                 const std::vector<MatrixXcd>& other_second, const Eigen::VectorXd& gamma,
                 const HeteroObservations& obs, const ObservationLayout& layout,
                 bool conjugate_y) {
  const Index k = gamma.size();
  const MatrixXcd prior = gamma.cast<cd>().asDiagonal();
  const MatrixXcd eye = MatrixXcd::Identity(k, k);
  MatrixXcd precision(k, k);
  RowVectorXcd rhs(k);
  for (Index r = 0; r < mean.rows(); ++r) {
    precision = prior;
    rhs.setZero();
    for (const auto& link : conjugate_y ? layout.col(r) : layout.row(r)) {
      const double b = obs.beta(link.entry);
      const cd y = conjugate_y ? std::conj(obs.y(link.entry)) : obs.y(link.entry);
      precision.noalias() += b * other_second[static_cast<std::size_t>(link.other)];
      rhs.noalias() += (b * y) * other_mean.row(link.other);
    }
    Eigen::LLT<MatrixXcd> llt(precision);
    MatrixXcd sigma = llt.solve(eye);
    sigma = 0.5 * (sigma + sigma.adjoint()).eval();
    mean.row(r) = rhs * sigma;
    cov[static_cast<std::size_t>(r)] = std::move(sigma);
  }
}

}  // namespace

void update_rows_u(FactorState& state, const HeteroObservations& obs,
                   const ObservationLayout& layout) {
  const auto ev = second_moments(state.v, state.sigma_v);
  update_side(state.u, state.sigma_u, state.v, ev, state.gamma, obs,
              layout, false);
}

void update_rows_v(FactorState& state, const HeteroObservations& obs,
                   const ObservationLayout& layout) {
  const auto eu = second_moments(state.u, state.sigma_u);
  update_side(state.v, state.sigma_v, state.u, eu, state.gamma, obs,
              layout, true);
}

void update_gamma(FactorState& state) {
  const double dof = static_cast<double>(state.m + state.n);
  for (Index c = 0; c < state.k; ++c) {
    double denom = state.u.col(c).squaredNorm() + state.v.col(c).squaredNorm();
    for (const auto& s : state.sigma_u) denom += s(c, c).real();
    for (const auto& s : state.sigma_v) denom += s(c, c).real();
    state.gamma(c) = denom * kGammaMax > dof ? dof / denom : kGammaMax;
  }
}

void vb_sweep(FactorState& state, const HeteroObservations& obs, const ObservationLayout& layout) {
  update_rows_u(state, obs, layout);
  update_rows_v(state, obs, layout);
  update_gamma(state);
}

double posterior_var(const FactorState& state, Index i, Index j) {
  const auto& su = state.sigma_u[static_cast<std::size_t>(i)];
  const auto& sv = state.sigma_v[static_cast<std::size_t>(j)];
  const auto u = state.u.row(i);
  const auto v = state.v.row(j);
  const Index k = state.k;
  // Both covariances are Hermitian: tr(Su Sv) = sum Re(Su) Re(Sv) + Im(Su) Im(Sv),
  // a real dot product over the raw storage.
  const Eigen::Map<const Eigen::VectorXd> su_raw(reinterpret_cast<const double*>(su.data()), 2 * k * k);
  const Eigen::Map<const Eigen::VectorXd> sv_raw(reinterpret_cast<const double*>(sv.data()), 2 * k * k);
  double acc = su_raw.dot(sv_raw);
  for (Index q = 0; q < k; ++q) {
    cd a(0.0, 0.0);
    cd b(0.0, 0.0);
    for (Index p = 0; p < k; ++p) {
      a += v(p) * su(p, q);
      b += u(p) * sv(p, q);
    }
    acc += (a * std::conj(v(q))).real() + (b * std::conj(u(q))).real();
  }
  return std::max(acc, 0.0);
}

Eigen::VectorXd posterior_vars(const FactorState& state, const IndexSet& omega) {
  Eigen::VectorXd out(static_cast<Index>(omega.size()));
  for (std::size_t e = 0; e < omega.size(); ++e) {
    out(static_cast<Index>(e)) = posterior_var(state, omega[e].first, omega[e].second);
  }
  return out;
}

ZMoments posterior_moments_Z(const FactorState& state) {
  ZMoments out;
  out.mean = state.mean_z();
  out.var.resize(state.m, state.n);
  for (Index j = 0; j < state.n; ++j) {
    for (Index i = 0; i < state.m; ++i) out.var(i, j) = posterior_var(state, i, j);
  }
  return out;
}

int estimate_rank(const Eigen::VectorXd& gamma) {
  if (gamma.size() == 0) return 0;
  const double floor = gamma.minCoeff();
  int r = 0;
  for (Index c = 0; c < gamma.size(); ++c) {
    if (gamma(c) < kGammaPrune * floor && gamma(c) < kGammaMax) ++r;
  }
  return r;
}

std::vector<Index> strongest_columns(const Eigen::VectorXd& gamma, int count) {
  std::vector<Index> idx(static_cast<std::size_t>(gamma.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return gamma(a) < gamma(b); });
  idx.resize(static_cast<std::size_t>(std::clamp<Index>(count, 0, gamma.size())));
  return idx;
}

VsblResult vsbl_solve(const HeteroObservations& obs, const VsblOptions& options) {
  obs.validate();
  const ObservationLayout layout(obs.m, obs.n, obs.omega);
  VsblResult result;
  result.state = initialize_factors(obs.m, obs.n, options.k, options.seed);
  MatrixXcd previous = result.state.mean_z();
  for (int it = 0; it < options.max_iters; ++it) {
    vb_sweep(result.state, obs, layout);
    ++result.iterations;
    MatrixXcd current = result.state.mean_z();
    const double scale = previous.norm();
    const double change = (current - previous).norm();
    previous = std::move(current);
    if (change <= options.tol * scale || change == 0.0) {
      result.converged = true;
      break;
    }
  }
  result.rank = estimate_rank(result.state.gamma);
  return result;
}

HeteroObservations as_linear_observations(const ObservedMatrix& obs, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  HeteroObservations out;
  out.m = obs.m;
  out.n = obs.n;
  const auto size = static_cast<Index>(obs.entries.size());
  out.omega.reserve(obs.entries.size());
  out.y.resize(size);
  out.beta = Eigen::VectorXd::Constant(size, 1.0 / sigma2);
  for (Index e = 0; e < size; ++e) {
    const auto& entry = obs.entries[static_cast<std::size_t>(e)];
    out.omega.emplace_back(entry.row, entry.col);
    out.y(e) = entry.value;
  }
  return out;
}

}  // namespace mcq
