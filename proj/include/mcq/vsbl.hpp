#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mcq/numerics.hpp"
#include "mcq/quantizer.hpp"

namespace mcq {

// Linear surrogate Y~_ij = Z_ij + N~_ij, N~_ij ~ CN(0, 1 / beta_ij), on Omega.
struct HeteroObservations {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  IndexSet omega;
  Eigen::VectorXcd y;     // aligned with omega
  Eigen::VectorXd beta;   // aligned with omega, all > 0

  void validate() const;
};

// Row/column adjacency of Omega, built once per observation pattern.
class ObservationLayout {
 public:
  struct Link {
    Eigen::Index other;  // column for by_row, row for by_col
    Eigen::Index entry;  // position in omega
  };

  ObservationLayout(Eigen::Index m, Eigen::Index n, const IndexSet& omega);

  const std::vector<Link>& row(Eigen::Index i) const { return by_row_[static_cast<std::size_t>(i)]; }
  const std::vector<Link>& col(Eigen::Index j) const { return by_col_[static_cast<std::size_t>(j)]; }

 private:
  std::vector<std::vector<Link>> by_row_;
  std::vector<std::vector<Link>> by_col_;
};

// Variational posterior over the factors. Rows of u/v are the means of
// q(u_i.) and q(v_j.); sigma_u[i], sigma_v[j] their k x k covariances in the
// row-vector convention E[(u - u^)^H (u - u^)].
struct FactorState {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  Eigen::MatrixXcd u;
  Eigen::MatrixXcd v;
  std::vector<Eigen::MatrixXcd> sigma_u;
  std::vector<Eigen::MatrixXcd> sigma_v;
  Eigen::VectorXd gamma;

  Eigen::MatrixXcd mean_z() const { return u * v.adjoint(); }
};

inline constexpr double kGammaMax = 1e12;
// Excess columns drift away from the signal ones only like sqrt(iterations)
// once their means vanish, so the ratio has to be modest.
inline constexpr double kGammaPrune = 10.0;

// Cold start: means i.i.d. CN(0, 1/k), unit covariances, unit precisions.
FactorState initialize_factors(Eigen::Index m, Eigen::Index n, Eigen::Index k,
                               std::uint64_t seed);

void update_rows_u(FactorState& state, const HeteroObservations& obs,
                   const ObservationLayout& layout);
void update_rows_v(FactorState& state, const HeteroObservations& obs,
                   const ObservationLayout& layout);
void update_gamma(FactorState& state);

// One sweep: U rows, V rows, then gamma.
void vb_sweep(FactorState& state, const HeteroObservations& obs, const ObservationLayout& layout);

// Posterior variance of Z_ij = u_i. v_j.^H under the factorized posterior.
double posterior_var(const FactorState& state, Eigen::Index i, Eigen::Index j);

// posterior_var for every entry of omega.
Eigen::VectorXd posterior_vars(const FactorState& state, const IndexSet& omega);

struct ZMoments {
  Eigen::MatrixXcd mean;
  Eigen::MatrixXd var;
};

ZMoments posterior_moments_Z(const FactorState& state);

// Number of columns with gamma_i < kGammaPrune * min(gamma).
int estimate_rank(const Eigen::VectorXd& gamma);

// Indices of the `count` columns with smallest gamma, ascending in gamma.
std::vector<Eigen::Index> strongest_columns(const Eigen::VectorXd& gamma, int count);

struct VsblOptions {
  int k = 10;
  int max_iters = 200;
  double tol = 1e-4;
  std::uint64_t seed = 1;
};

struct VsblResult {
  FactorState state;
  int iterations = 0;
  bool converged = false;
  int rank = 0;
};

VsblResult vsbl_solve(const HeteroObservations& obs, const VsblOptions& options);

// VSBL on the observed values (codewords, or raw data for the identity
// channel) with uniform precision 1 / sigma2.
HeteroObservations as_linear_observations(const ObservedMatrix& obs, double sigma2);

}  // namespace mcq
