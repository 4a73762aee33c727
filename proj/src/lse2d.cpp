#include "mcq/lse2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mcq/numerics.hpp"

namespace mcq {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

Eigen::VectorXcd steering(Index m, double theta) {
  VectorXcd a(m);
  for (Index l = 0; l < m; ++l) a(l) = std::polar(1.0, static_cast<double>(l) * theta);
  return a;
}

Eigen::MatrixXcd steering_matrix(Index m, const std::vector<double>& thetas) {
  MatrixXcd a(m, static_cast<Index>(thetas.size()));
  for (std::size_t i = 0; i < thetas.size(); ++i) a.col(static_cast<Index>(i)) = steering(m, thetas[i]);
  return a;
}

Eigen::MatrixXcd LineSpectralScene::synthesize() const {
  const MatrixXcd am = steering_matrix(m, theta);
  const MatrixXcd an = steering_matrix(n, phi);
  VectorXcd gv(static_cast<Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) gv(static_cast<Index>(i)) = g[i];
  return am * gv.asDiagonal() * an.adjoint();
}

namespace {

// a(w)^H P a(w) for a Hermitian P, as the trigonometric polynomial
// c_0 + 2 Re sum_{d>0} c_d e^{j d w}, c_d = sum_l P(l, l + d).
class NoiseSpectrum {
 public:
  explicit NoiseSpectrum(const MatrixXcd& projector) {
    const Index m = projector.rows();
    coeff_.assign(static_cast<std::size_t>(m), cd(0.0, 0.0));
    for (Index d = 0; d < m; ++d) {
      cd acc(0.0, 0.0);
      for (Index l = 0; l + d < m; ++l) acc += projector(l, l + d);
      coeff_[static_cast<std::size_t>(d)] = acc;
    }
  }

  double operator()(double w) const {
    const cd step = std::polar(1.0, w);
    cd rot = step;
    double acc = 0.0;
    for (std::size_t d = 1; d < coeff_.size(); ++d) {
      acc += (coeff_[d] * rot).real();
      rot *= step;
    }
    return coeff_[0].real() + 2.0 * acc;
  }

 private:
  std::vector<cd> coeff_;
};

double golden_minimize(const NoiseSpectrum& f, double lo, double hi) {
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

MusicResult music_1d(const MatrixXcd& factor, int order, int grid_size) {
  const Index m = factor.rows();
  if (order < 0 || order >= m) {
    throw std::invalid_argument("music_1d: order must satisfy 0 <= order < rows");
  }
  if (grid_size < 8) throw std::invalid_argument("music_1d: grid too small");
  MusicResult out;
  if (order == 0) return out;

  const auto eig = numerics::hermitian_eig(factor * factor.adjoint());
  const MatrixXcd noise = eig.vectors.rightCols(m - order);
  const NoiseSpectrum spectrum(noise * noise.adjoint());

  const double two_pi = 2.0 * std::numbers::pi;
  const double spacing = two_pi / grid_size;
  std::vector<double> d(static_cast<std::size_t>(grid_size));
  for (int g = 0; g < grid_size; ++g) d[static_cast<std::size_t>(g)] = spectrum(-std::numbers::pi + g * spacing);

  // Local minima of the noise-subspace projection = local maxima of P(w).
  std::vector<int> peaks;
  for (int g = 0; g < grid_size; ++g) {
    const double prev = d[static_cast<std::size_t>((g + grid_size - 1) % grid_size)];
    const double next = d[static_cast<std::size_t>((g + 1) % grid_size)];
    const double cur = d[static_cast<std::size_t>(g)];
    if (cur < prev && cur <= next) peaks.push_back(g);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](int a, int b) {
    return d[static_cast<std::size_t>(a)] < d[static_cast<std::size_t>(b)];
  });
  if (static_cast<int>(peaks.size()) < order) out.degraded = true;
  peaks.resize(std::min<std::size_t>(peaks.size(), static_cast<std::size_t>(order)));

  for (int g : peaks) {
    const double centre = -std::numbers::pi + g * spacing;
    const double w = golden_minimize(spectrum, centre - spacing, centre + spacing);
    out.freqs.push_back(numerics::wrap_angle(w));
  }
  return out;
}

namespace {

void check_distinct(const std::vector<double>& freqs) {
  for (std::size_t a = 0; a < freqs.size(); ++a) {
    for (std::size_t b = a + 1; b < freqs.size(); ++b) {
      if (std::abs(numerics::wrap_angle(freqs[a] - freqs[b])) <= 1e-6) {
        throw std::invalid_argument("frequencies must be pairwise separated by more than 1e-6");
      }
    }
  }
}

VectorXcd kron(const VectorXcd& a, const VectorXcd& b) {
  VectorXcd out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

constexpr double kIllConditioned = 1e8;

}  // namespace

PowerFit ls_powers(const MatrixXcd& factor, const std::vector<double>& freqs) {
  check_distinct(freqs);
  const Index m = factor.rows();
  const auto r = static_cast<Index>(freqs.size());
  PowerFit out;
  if (r == 0) return out;
  MatrixXcd design(m * m, r);
  for (Index i = 0; i < r; ++i) {
    const VectorXcd a = steering(m, freqs[static_cast<std::size_t>(i)]);
    design.col(i) = kron(a.conjugate(), a);
  }
  const MatrixXcd gram = factor * factor.adjoint();
  const VectorXcd b = gram.reshaped();
  const VectorXcd x = numerics::least_squares(design, b);
  out.ill_conditioned = numerics::condition_number(design) > kIllConditioned;
  for (Index i = 0; i < r; ++i) out.powers.push_back(std::max(x(i).real(), 0.0));
  return out;
}

UnitaryEstimate estimate_unitary(const MatrixXcd& u, const std::vector<double>& theta,
                                 const std::vector<double>& f) {
  if (theta.size() != f.size()) throw std::invalid_argument("estimate_unitary: size mismatch");
  MatrixXcd basis = steering_matrix(u.rows(), theta);
  for (std::size_t i = 0; i < f.size(); ++i) basis.col(static_cast<Index>(i)) *= f[i];
  UnitaryEstimate out;
  out.gamma = numerics::pinv(basis) * u;
  out.rank_deficient = numerics::condition_number(basis) > 1e10;
  return out;
}

Eigen::MatrixXd binarize_generalized_permutation(const MatrixXcd& estimate) {
  const Index r = estimate.rows();
  if (estimate.cols() != r) throw std::invalid_argument("pairing matrix must be square");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r, r);
  std::vector<char> row_used(static_cast<std::size_t>(r), 0);
  std::vector<char> col_used(static_cast<std::size_t>(r), 0);
  for (Index step = 0; step < r; ++step) {
    Index best_row = -1;
    Index best_col = -1;
    double best = -1.0;
    for (Index i = 0; i < r; ++i) {
      if (row_used[static_cast<std::size_t>(i)]) continue;
      for (Index j = 0; j < r; ++j) {
        if (col_used[static_cast<std::size_t>(j)]) continue;
        const double mag = std::abs(estimate(i, j));
        if (mag > best) {
          best = mag;
          best_row = i;
          best_col = j;
        }
      }
    }
    // |x - 1| <= |x + 1|  <=>  Re x >= 0
    out(best_row, best_col) = estimate(best_row, best_col).real() >= 0.0 ? 1.0 : -1.0;
    row_used[static_cast<std::size_t>(best_row)] = 1;
    col_used[static_cast<std::size_t>(best_col)] = 1;
  }
  return out;
}

bool is_generalized_permutation(const Eigen::MatrixXd& j) {
  if (j.rows() != j.cols()) return false;
  for (Index i = 0; i < j.rows(); ++i) {
    int row_nz = 0;
    int col_nz = 0;
    for (Index c = 0; c < j.cols(); ++c) {
      const double x = j(i, c);
      if (x != 0.0 && x != 1.0 && x != -1.0) return false;
      row_nz += x != 0.0;
      col_nz += j(c, i) != 0.0;
    }
    if (row_nz != 1 || col_nz != 1) return false;
  }
  return true;
}

PairingResult resolve_pairing(const MatrixXcd& v, const MatrixXcd& gamma,
                              const std::vector<double>& phi, const std::vector<double>& h_abs) {
  const auto r = static_cast<Index>(phi.size());
  if (static_cast<Index>(h_abs.size()) != r || gamma.rows() != r || gamma.cols() != r ||
      v.cols() != r) {
    throw std::invalid_argument("resolve_pairing: inconsistent dimensions");
  }
  const Index n = v.rows();
  PairingResult out;
  if (r == 0) return out;

  // V G^H G^* V^T = A_n diag(|h|^2 e^{j 2 angle h}) A_n^T.
  const MatrixXcd vg = v * gamma.adjoint();
  const MatrixXcd t = vg * vg.transpose();
  MatrixXcd design(n * n, r);
  for (Index i = 0; i < r; ++i) {
    const VectorXcd a = steering(n, phi[static_cast<std::size_t>(i)]);
    const double h2 = h_abs[static_cast<std::size_t>(i)] * h_abs[static_cast<std::size_t>(i)];
    design.col(i) = h2 * kron(a, a);
  }
  const VectorXcd rhs = t.reshaped();
  const VectorXcd doubled = numerics::least_squares(design, rhs);

  VectorXcd root(r);
  for (Index i = 0; i < r; ++i) {
    const double angle = std::abs(doubled(i)) > 0.0 ? std::arg(doubled(i)) : 0.0;
    root(i) = std::polar(1.0, 0.5 * angle);
  }

  MatrixXcd basis = steering_matrix(n, phi);
  for (Index i = 0; i < r; ++i) basis.col(i) *= h_abs[static_cast<std::size_t>(i)] * root(i);
  const MatrixXcd j_ls = numerics::least_squares(basis, vg);
  out.j_pi = binarize_generalized_permutation(j_ls);

  out.permutation.assign(static_cast<std::size_t>(r), -1);
  out.signs.assign(static_cast<std::size_t>(r), 1);
  out.phases.assign(static_cast<std::size_t>(r), 0.0);
  for (Index l = 0; l < r; ++l) {
    for (Index i = 0; i < r; ++i) {
      if (out.j_pi(l, i) == 0.0) continue;
      out.permutation[static_cast<std::size_t>(i)] = static_cast<int>(l);
      out.signs[static_cast<std::size_t>(l)] = out.j_pi(l, i) > 0.0 ? 1 : -1;
    }
    const double base = std::arg(root(l));
    out.phases[static_cast<std::size_t>(l)] =
        numerics::wrap_angle(out.signs[static_cast<std::size_t>(l)] > 0 ? base : base + std::numbers::pi);
  }
  return out;
}

Lse2dResult lse2d_from_factors(const GrSblResult& solver, int grid_size) {
  const FactorState& fs = solver.factors;
  Lse2dResult out;
  out.solver = solver;
  out.estimate.m = fs.m;
  out.estimate.n = fs.n;
  out.z_hat = MatrixXcd::Zero(fs.m, fs.n);

  int order = std::min<int>(solver.rank, static_cast<int>(std::min(fs.m, fs.n)) - 1);
  if (order <= 0) return out;

  const auto cols = strongest_columns(fs.gamma, order);
  MatrixXcd u(fs.m, order);
  MatrixXcd v(fs.n, order);
  for (int c = 0; c < order; ++c) {
    u.col(c) = fs.u.col(cols[static_cast<std::size_t>(c)]);
    v.col(c) = fs.v.col(cols[static_cast<std::size_t>(c)]);
  }

  auto theta = music_1d(u, order, grid_size);
  auto phi = music_1d(v, order, grid_size);
  out.degraded = theta.degraded || phi.degraded;
  const auto found = std::min(theta.freqs.size(), phi.freqs.size());
  if (found < static_cast<std::size_t>(order)) {
    order = static_cast<int>(found);
    theta.freqs.resize(found);
    phi.freqs.resize(found);
    u.conservativeResize(Eigen::NoChange, order);
    v.conservativeResize(Eigen::NoChange, order);
  }
  if (order == 0) return out;

  const auto pu = ls_powers(u, theta.freqs);
  const auto pv = ls_powers(v, phi.freqs);
  out.ill_conditioned = pu.ill_conditioned || pv.ill_conditioned;
  std::vector<double> f(pu.powers.size());
  std::vector<double> h(pv.powers.size());
  std::transform(pu.powers.begin(), pu.powers.end(), f.begin(), [](double x) { return std::sqrt(x); });
  std::transform(pv.powers.begin(), pv.powers.end(), h.begin(), [](double x) { return std::sqrt(x); });

  const auto unitary = estimate_unitary(u, theta.freqs, f);
  out.ill_conditioned = out.ill_conditioned || unitary.rank_deficient;
  const auto pairing = resolve_pairing(v, unitary.gamma, phi.freqs, h);

  out.rank = order;
  out.estimate.theta = theta.freqs;
  for (int i = 0; i < order; ++i) {
    const auto l = static_cast<std::size_t>(pairing.permutation[static_cast<std::size_t>(i)]);
    out.estimate.phi.push_back(phi.freqs[l]);
    out.estimate.g.push_back(f[static_cast<std::size_t>(i)] * h[l] * std::polar(1.0, -pairing.phases[l]));
  }
  out.z_hat = out.estimate.synthesize();
  return out;
}

Lse2dResult run_lse2d(const ObservedMatrix& obs, const Lse2dConfig& cfg,
                      const Eigen::MatrixXcd* reference) {
  return lse2d_from_factors(run_mc_grsbl(obs, cfg.solver, reference), cfg.grid_size);
}

}  // namespace mcq
