#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mcq/grsbl.hpp"

namespace mcq {

// Z = A_m(theta) diag(g) A_n(phi)^H.
struct LineSpectralScene {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  std::vector<double> theta;
  std::vector<double> phi;
  std::vector<cd> g;

  int order() const { return static_cast<int>(theta.size()); }
  Eigen::MatrixXcd synthesize() const;
};

// a_m(theta)_l = exp(j l theta), l = 0..m-1.
Eigen::VectorXcd steering(Eigen::Index m, double theta);
Eigen::MatrixXcd steering_matrix(Eigen::Index m, const std::vector<double>& thetas);

struct MusicResult {
  std::vector<double> freqs;  // strongest peak first
  bool degraded = false;      // fewer peaks than requested
};

inline constexpr int kDefaultMusicGrid = 1 << 14;

// MUSIC on the Gram matrix F F^H: pseudospectrum 1 / ||E_noise^H a(w)||^2 on a
// uniform grid over [-pi, pi), strongest local maxima refined by
// golden-section search. Throws std::invalid_argument unless 0 <= order < rows.
MusicResult music_1d(const Eigen::MatrixXcd& factor, int order, int grid_size = kDefaultMusicGrid);

struct PowerFit {
  std::vector<double> powers;
  bool ill_conditioned = false;
};

// Least-squares fit of vec(F F^H) onto conj(a_i) (x) a_i; real parts floored
// at zero. Throws std::invalid_argument on coincident frequencies.
PowerFit ls_powers(const Eigen::MatrixXcd& factor, const std::vector<double>& freqs);

struct UnitaryEstimate {
  Eigen::MatrixXcd gamma;
  bool rank_deficient = false;
};

// (A_m(theta) diag(f))^+ U.
UnitaryEstimate estimate_unitary(const Eigen::MatrixXcd& u, const std::vector<double>& theta,
                                 const std::vector<double>& f);

// Greedy projection of a least-squares estimate onto generalized permutation
// matrices: repeatedly take the largest-magnitude remaining entry, snap it to
// the nearer of +1 / -1 and remove its row and column.
Eigen::MatrixXd binarize_generalized_permutation(const Eigen::MatrixXcd& estimate);

bool is_generalized_permutation(const Eigen::MatrixXd& j);

struct PairingResult {
  // permutation[i]: phi index paired with theta index i.
  std::vector<int> permutation;
  // Per phi index: sign chosen for the square-root branch and the resulting
  // phase of h in [-pi, pi).
  std::vector<int> signs;
  std::vector<double> phases;
  Eigen::MatrixXd j_pi;
};

PairingResult resolve_pairing(const Eigen::MatrixXcd& v, const Eigen::MatrixXcd& gamma,
                              const std::vector<double>& phi, const std::vector<double>& h_abs);

struct Lse2dConfig {
  GrSblConfig solver;
  int grid_size = kDefaultMusicGrid;
};

struct Lse2dResult {
  LineSpectralScene estimate;  // phi and g already ordered to match theta
  int rank = 0;
  Eigen::MatrixXcd z_hat;      // A_m diag(g) A_n^H
  GrSblResult solver;
  bool degraded = false;
  bool ill_conditioned = false;
};

// Frequencies, amplitudes and order from the factors of a finished solver run.
Lse2dResult lse2d_from_factors(const GrSblResult& solver, int grid_size = kDefaultMusicGrid);

Lse2dResult run_lse2d(const ObservedMatrix& obs, const Lse2dConfig& cfg,
                      const Eigen::MatrixXcd* reference = nullptr);

}  // namespace mcq
