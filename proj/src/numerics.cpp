#include "mcq/numerics.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mcq::numerics {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
constexpr double kTailSwitch = 8.0;

// Backward evaluation of the Mills-ratio continued fraction
//   R(x) = 1 / (x + 1 / (x + 2 / (x + 3 / (x + ...))))
// Returns K1 and K2 where K_n = n / (x + K_{n+1}), so R = 1 / (x + K1).
struct MillsTail {
  double k1;
  double k2;
};

MillsTail mills_tail(double x) {
  constexpr int kDepth = 200;
  double k = 0.0;
  double k2 = 0.0;
  for (int n = kDepth; n >= 1; --n) {
    if (n == 1) k2 = k;
    k = n / (x + k);
  }
  return {k, k2};
}

// Standardized moments (mean, variance) of N(0,1) restricted to [a, inf),
// a >= kTailSwitch, plus log Q(a). Written in terms of the continued-fraction
// tails so nothing cancels when a is large.
struct Standardized {
  double mean;
  double var;
  double log_mass;
};

Standardized upper_tail(double a) {
  const MillsTail t = mills_tail(a);
  const double denom = a + t.k2;
  const double var = (a * t.k2 + t.k2 * t.k2 - 1.0) / (denom * denom);
  return {a + t.k1, var, log_normal_pdf(a) - std::log(a + t.k1)};
}

// [a, b) with kTailSwitch <= a < b < inf: difference of the two upper tails,
// moments taken about a.
Standardized upper_band(double a, double b) {
  const Standardized ta = upper_tail(a);
  const Standardized tb = upper_tail(b);
  const double rho = std::exp(tb.log_mass - ta.log_mass);
  const double w = b - a;
  const double ca = ta.mean - a;
  const double cb = tb.mean - b;
  const double ea2 = ta.var + ca * ca;
  const double eb1 = w + cb;
  const double eb2 = tb.var + eb1 * eb1;
  const double one_minus = 1.0 - rho;
  const double mean_y = (ca - rho * eb1) / one_minus;
  const double var_y = (ea2 - rho * eb2) / one_minus - mean_y * mean_y;
  return {a + mean_y, var_y, ta.log_mass + std::log1p(-rho)};
}

// Gauss-Legendre nodes/weights on [-1, 1] via Newton iteration on P_n.
template <int N>
struct GaussLegendre {
  std::array<double, N> x{};
  std::array<double, N> w{};

  GaussLegendre() {
    for (int i = 0; i < N; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = z;
        for (int k = 2; k <= N; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = N * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

// Narrow finite interval: the density barely changes across the cell, so a
// fixed Gauss-Legendre rule about the midpoint is exact to round-off.
Standardized narrow_band(double a, double b) {
  static const GaussLegendre<16> rule;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double m0 = 0.0;
  double m1 = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double t = h * rule.x[i];
    const double f = rule.w[i] * std::exp(-c * t - 0.5 * t * t);
    m0 += f;
    m1 += f * t;
  }
  const double mean_t = m1 / m0;
  double m2 = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double t = h * rule.x[i];
    const double f = rule.w[i] * std::exp(-c * t - 0.5 * t * t);
    m2 += f * (t - mean_t) * (t - mean_t);
  }
  return {c + mean_t, m2 / m0, log_normal_pdf(c) + std::log(h * m0)};
}

double log_diff_exp(double la, double lb) {
  // log(exp(la) - exp(lb)), la >= lb
  if (lb == -kInf) return la;
  return la + std::log1p(-std::exp(lb - la));
}

std::optional<Standardized> general_band(double a, double b) {
  double log_z;
  if (a >= 0.0) {
    log_z = log_diff_exp(log_normal_cdf(-a), log_normal_cdf(-b));
  } else if (b <= 0.0) {
    log_z = log_diff_exp(log_normal_cdf(b), log_normal_cdf(a));
  } else {
    const double z = 0.5 * std::erfc(-b / std::numbers::sqrt2) -
                     0.5 * std::erfc(-a / std::numbers::sqrt2);
    log_z = std::log(z);
  }
  if (!std::isfinite(log_z)) return std::nullopt;

  const double ra = std::isfinite(a) ? std::exp(log_normal_pdf(a) - log_z) : 0.0;
  const double rb = std::isfinite(b) ? std::exp(log_normal_pdf(b) - log_z) : 0.0;
  const double m1 = ra - rb;
  const double t2 = (std::isfinite(a) ? a * ra : 0.0) - (std::isfinite(b) ? b * rb : 0.0);
  const double var = 1.0 + t2 - m1 * m1;
  return Standardized{m1, var, log_z};
}

}  // namespace

double log_normal_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double mills_ratio(double x) {
  if (x < kTailSwitch) {
    return 0.5 * std::erfc(x / std::numbers::sqrt2) / std::exp(log_normal_pdf(x));
  }
  return 1.0 / (x + mills_tail(x).k1);
}

double log_normal_cdf(double x) {
  if (x == kInf) return 0.0;
  if (x == -kInf) return -kInf;
  if (x < -kTailSwitch) return log_normal_pdf(x) + std::log(mills_ratio(-x));
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
}

std::optional<TruncatedMoments> trunc_gauss_moments(const GaussInterval& interval,
                                                    double mu, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument("trunc_gauss_moments: variance must be positive");
  }
  if (!interval.valid()) {
    throw std::invalid_argument("trunc_gauss_moments: empty interval");
  }
  if (!interval.bounded_below() && !interval.bounded_above()) {
    return TruncatedMoments{mu, v, 0.0};
  }

  const double s = std::sqrt(v);
  double a = (interval.lo - mu) / s;
  double b = (interval.hi - mu) / s;
  if (!(a < b)) return std::nullopt;

  // Work in the upper half-line; mirror back at the end.
  const bool mirrored = b <= -kTailSwitch;
  if (mirrored) {
    const double na = -b;
    b = -a;
    a = na;
  }

  std::optional<Standardized> z;
  const bool finite = std::isfinite(a) && std::isfinite(b);
  if (finite && (b - a) * (1.0 + std::abs(0.5 * (a + b))) <= 1.0) {
    z = narrow_band(a, b);
  } else if (a >= kTailSwitch) {
    z = std::isfinite(b) ? upper_band(a, b) : upper_tail(a);
  } else {
    z = general_band(a, b);
  }
  if (!z || !std::isfinite(z->log_mass) || !std::isfinite(z->mean)) return std::nullopt;

  double var = z->var;
  if (!(var > 0.0)) var = std::numeric_limits<double>::min();
  var = std::min(var, 1.0);

  TruncatedMoments out;
  out.mean = mu + s * (mirrored ? -z->mean : z->mean);
  out.var = v * var;
  out.log_mass = std::min(z->log_mass, 0.0);
  return out;
}

HermitianEig hermitian_eig(const Eigen::MatrixXcd& m) {
  const Eigen::MatrixXcd sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym);
  HermitianEig out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

namespace {

constexpr double kSvdCutoff = 1e-10;

Eigen::JacobiSVD<Eigen::MatrixXcd> thin_svd(const Eigen::MatrixXcd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kSvdCutoff);
  return svd;
}

}  // namespace

Eigen::VectorXcd least_squares(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b) {
  return thin_svd(a).solve(b);
}

Eigen::MatrixXcd least_squares(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return thin_svd(a).solve(b);
}

Eigen::MatrixXcd pinv(const Eigen::MatrixXcd& a) {
  const auto svd = thin_svd(a);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cut = s.size() > 0 ? kSvdCutoff * s(0) : 0.0;
  Eigen::VectorXd inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > cut ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

double condition_number(const Eigen::MatrixXcd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double lo = s(s.size() - 1);
  return lo > 0.0 ? s(0) / lo : kInf;
}

double wrap_angle(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double y = std::fmod(x + std::numbers::pi, two_pi);
  if (y < 0.0) y += two_pi;
  y -= std::numbers::pi;
  if (y >= std::numbers::pi) y -= two_pi;
  return y;
}

}  // namespace mcq::numerics
