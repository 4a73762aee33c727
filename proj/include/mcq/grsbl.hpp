#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mcq/quantizer.hpp"
#include "mcq/vsbl.hpp"

namespace mcq {

struct VarianceBounds {
  double floor = 1e-11;
  double ceiling = 1e11;
};

enum class NoiseLearning { kAuto, kOn, kOff };

struct GrSblConfig {
  int t_outer = 100;
  int k = 10;
  int inner_sweeps = 1;
  NoiseLearning learn_noise = NoiseLearning::kAuto;
  // <= 0: unknown, start from half the prior variance.
  double sigma2_init = 0.0;
  // <= 0: sigma_z^2 of the observation, or k when that is unset.
  double prior_var = 0.0;
  VarianceBounds bounds;
  double damping = 0.7;
  // Stop early once the relative change of Z_A^post falls below this (0: never).
  double tol = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// Per-entry EP messages on Omega (aligned with ObservedMatrix::entries).
struct ExtrinsicState {
  Eigen::VectorXcd za_ext, zb_ext, za_post, zb_post;
  Eigen::VectorXd va_ext, vb_ext, va_post, vb_post;
  double sigma2 = 1.0;

  explicit ExtrinsicState(Eigen::Index size = 0);
};

struct GaussMessage {
  cd mean;
  double var;
  bool clamped = false;
};

// Divide a Gaussian posterior by its cavity. Non-positive or out-of-range
// variances are clamped into the bounds and the mean falls back to the
// posterior mean.
GaussMessage extrinsic(cd post_mean, double post_var, cd cav_mean, double cav_var,
                       const VarianceBounds& bounds = {});

struct ComponentPosterior {
  double mean;
  double var;
  bool empty;  // the cell had no mass; moments are the clamped fallback
};

// One real component: z ~ N(mu, v), w = z + n with n ~ N(0, s2), w observed
// in `cell`. Posterior moments of z.
ComponentPosterior mmse_component(const GaussInterval& cell, double mu, double v, double s2);

struct MmseOutput {
  Eigen::VectorXcd mean;
  Eigen::VectorXd var;
  int empty_cells = 0;
};

// Componentwise posterior of Z_ij given the prior CN(prior_mean, prior_var)
// and the observation of Z_ij + N_ij, N_ij ~ CN(0, sigma2), through the
// channel in `obs`.
MmseOutput mmse_refine(const ObservedMatrix& obs, const Eigen::VectorXcd& prior_mean,
                       const Eigen::VectorXd& prior_var, double sigma2,
                       const VarianceBounds& bounds = {});

// Noise EM: mean over Omega of |Z_B^ext - Z_A^post|^2 + V_A^post.
double update_noise_variance(const ExtrinsicState& state);

struct GrSblResult {
  Eigen::MatrixXcd z_hat;
  int rank = 0;
  Eigen::VectorXd gamma;
  double sigma2 = 0.0;
  std::vector<double> nmse_trace;    // filled when a reference is supplied
  std::vector<double> change_trace;  // relative change of Z_A^post per iteration
  int iterations = 0;
  bool stagnated = false;
  FactorState factors;
};

// MC-Gr-SBL. `reference`, when non-null, is used only to record the NMSE trace.
GrSblResult run_mc_grsbl(const ObservedMatrix& obs, const GrSblConfig& cfg,
                         const Eigen::MatrixXcd* reference = nullptr);

bool learns_noise(const GrSblConfig& cfg, const ObservedMatrix& obs);

}  // namespace mcq
