#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mcq {

// Reported in place of -inf for exact matches.
inline constexpr double kDbFloor = -300.0;

// 20 log10(||z_hat - z||_F / ||z||_F).
double nmse_db(const Eigen::MatrixXcd& z_hat, const Eigen::MatrixXcd& z);

// NMSE of c z_hat minimized over the complex scalar c, same 20 log10 scale.
double debiased_nmse_db(const Eigen::MatrixXcd& z_hat, const Eigen::MatrixXcd& z);

// Minimum-cost assignment for a square cost matrix; result[i] is the column
// assigned to row i.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

// Pairs estimated (theta, phi) with the truth by minimum total wrapped
// distance |d theta| + |d phi|. result[i] = estimate index matched to truth i.
std::vector<int> match_frequencies(const std::vector<double>& est_theta,
                                   const std::vector<double>& est_phi,
                                   const std::vector<double>& theta,
                                   const std::vector<double>& phi);

// 10 log10(sum_i wrap(est[assignment[i]] - truth[i])^2).
double mse_freq_db(const std::vector<double>& est, const std::vector<double>& truth,
                   const std::vector<int>& assignment);

}  // namespace mcq
