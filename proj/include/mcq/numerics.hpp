#pragma once

#include <complex>
#include <limits>
#include <optional>

#include <Eigen/Dense>

namespace mcq {

using cd = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Half-open interval [lo, hi) on the real line. Either end may be infinite.
struct GaussInterval {
  double lo = -kInf;
  double hi = kInf;

  bool valid() const { return lo < hi; }
  bool bounded_below() const { return lo > -kInf; }
  bool bounded_above() const { return hi < kInf; }
};

struct TruncatedMoments {
  double mean = 0.0;
  double var = 0.0;
  double log_mass = 0.0;
};

namespace numerics {

// log of the standard normal density.
double log_normal_pdf(double x);

// log Phi(x), accurate far into both tails.
double log_normal_cdf(double x);

// Upper-tail Mills ratio Q(x) / phi(x) for x >= 0.
double mills_ratio(double x);

// Mean, variance and log probability mass of N(mu, v) restricted to the
// interval. Returns nullopt when the mass underflows (empty cell); the caller
// decides how to clamp. Throws std::invalid_argument on v <= 0 or an invalid
// interval.
std::optional<TruncatedMoments> trunc_gauss_moments(const GaussInterval& interval,
                                                    double mu, double v);

struct HermitianEig {
  Eigen::VectorXd values;    // descending
  Eigen::MatrixXcd vectors;  // columns match values
};

// Eigendecomposition of a Hermitian matrix. The input is symmetrized first,
// so small asymmetries from accumulated round-off are tolerated.
HermitianEig hermitian_eig(const Eigen::MatrixXcd& m);

// Minimum-norm least-squares solution of A x = b. Singular values below
// 1e-10 * sigma_max are treated as zero.
Eigen::VectorXcd least_squares(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b);
Eigen::MatrixXcd least_squares(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

// Moore-Penrose pseudoinverse with the same cutoff as least_squares.
Eigen::MatrixXcd pinv(const Eigen::MatrixXcd& a);

// Condition number sigma_max / sigma_min (infinite when rank deficient).
double condition_number(const Eigen::MatrixXcd& a);

// Wrap an angle into [-pi, pi).
double wrap_angle(double x);

}  // namespace numerics
}  // namespace mcq
