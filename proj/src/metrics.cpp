#include "mcq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mcq/numerics.hpp"

namespace mcq {

namespace {

double to_db20(double ratio) {
  if (!(ratio > 0.0)) return kDbFloor;
  return std::max(20.0 * std::log10(ratio), kDbFloor);
}

}  // namespace

double nmse_db(const Eigen::MatrixXcd& z_hat, const Eigen::MatrixXcd& z) {
  if (z_hat.rows() != z.rows() || z_hat.cols() != z.cols()) {
    throw std::invalid_argument("nmse: shape mismatch");
  }
  const double ref = z.norm();
  if (ref == 0.0) throw std::invalid_argument("nmse: reference matrix is zero");
  return to_db20((z_hat - z).norm() / ref);
}

double debiased_nmse_db(const Eigen::MatrixXcd& z_hat, const Eigen::MatrixXcd& z) {
  const double energy = z_hat.squaredNorm();
  if (energy == 0.0) return nmse_db(z_hat, z);
  // <z_hat, z> = sum conj(z_hat) z
  const cd c = z_hat.cwiseProduct(z.conjugate()).sum();
  return nmse_db((std::conj(c) / energy) * z_hat, z);
}

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  // Hungarian algorithm, potentials form, 1-based internally.
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("assignment needs a square cost matrix");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) out[p[j] - 1] = j - 1;
  }
  return out;
}

std::vector<int> match_frequencies(const std::vector<double>& est_theta,
                                   const std::vector<double>& est_phi,
                                   const std::vector<double>& theta,
                                   const std::vector<double>& phi) {
  const auto r = theta.size();
  if (est_theta.size() != r || est_phi.size() != r || phi.size() != r) {
    throw std::invalid_argument("match_frequencies: sizes differ");
  }
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t e = 0; e < r; ++e) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e)) =
          std::abs(numerics::wrap_angle(est_theta[e] - theta[i])) +
          std::abs(numerics::wrap_angle(est_phi[e] - phi[i]));
    }
  }
  return min_cost_assignment(cost);
}

double mse_freq_db(const std::vector<double>& est, const std::vector<double>& truth,
                   const std::vector<int>& assignment) {
  if (est.size() != truth.size() || assignment.size() != truth.size()) {
    throw std::invalid_argument("mse_freq: sizes differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = numerics::wrap_angle(est.at(static_cast<std::size_t>(assignment[i])) - truth[i]);
    acc += d * d;
  }
  if (!(acc > 0.0)) return kDbFloor;
  return std::max(10.0 * std::log10(acc), kDbFloor);
}

}  // namespace mcq
