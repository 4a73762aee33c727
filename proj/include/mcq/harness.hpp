#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcq/grsbl.hpp"
#include "mcq/lse2d.hpp"
#include "mcq/quantizer.hpp"

namespace mcq {

std::uint64_t splitmix64(std::uint64_t x);

// Seed of trial t: splitmix64(seed ^ t). Independent sub-streams of a trial
// are splitmix64(trial_seed + stream).
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial);
std::uint64_t stream_seed(std::uint64_t trial_seed, std::uint64_t stream);

struct LowRankDraw {
  Eigen::MatrixXcd z;
  double sigma_z2 = 0.0;
};

// Z = U V^H with i.i.d. CN(0, 1) factors; sigma_z2 = r.
LowRankDraw gen_random_lowrank(Eigen::Index m, Eigen::Index n, int r, std::uint64_t seed);

struct LineSpectralDraw {
  Eigen::MatrixXcd z;
  LineSpectralScene scene;
  double sigma_z2 = 0.0;
};

// Uniform frequencies with wrapped pairwise separation >= min_sep in each
// coordinate (min_sep <= 0 selects 4 pi / max(m, n)); |g| ~ N(1, 0.2)
// truncated to positive values, arg g uniform. Throws std::runtime_error
// after 1e4 rejected draws.
LineSpectralDraw gen_line_spectral(Eigen::Index m, Eigen::Index n, int r, std::uint64_t seed,
                                   double min_sep = 0.0);

// round(p m n) distinct entries, sorted row-major.
IndexSet sample_omega(Eigen::Index m, Eigen::Index n, double p, std::uint64_t seed);

// sigma^2 = sigma_z2 10^(-snr_db / 10); snr_db = +inf gives sigma^2 = 0.
double noise_variance(double sigma_z2, double snr_db);

// Standard complex Gaussian draws on omega; scaled by sigma they are the
// noise of add_noise_and_quantize.
Eigen::VectorXcd unit_noise(const IndexSet& omega, std::uint64_t seed);

// Y = Q(Z + N) on omega with N ~ CN(0, sigma^2). An empty spec gives the
// unquantized channel.
ObservedMatrix add_noise_and_quantize(const Eigen::MatrixXcd& z, double sigma_z2, double snr_db,
                                      const std::optional<QuantizerSpec>& spec,
                                      const IndexSet& omega, std::uint64_t seed);

// Same, from pre-drawn unit noise (common random numbers across SNR and B).
ObservedMatrix observe(const Eigen::MatrixXcd& z, double sigma_z2, double sigma2,
                       const std::optional<QuantizerSpec>& spec, const IndexSet& omega,
                       const Eigen::VectorXcd& unit);

enum class Scenario { kRandomLowRank, kLse2d };

struct ExperimentConfig {
  Scenario scenario = Scenario::kRandomLowRank;
  int m = 100;
  int n = 100;
  int r = 5;
  int k = 0;  // 0: 2r, capped at min(m, n) / 2
  double p = 0.8;
  std::vector<double> snr_db{10.0};
  std::vector<int> bits{3};  // 0 = unquantized
  int trials = 1;
  std::uint64_t seed = 1;
  int t_outer = 100;
  double damping = 0.7;
  NoiseLearning learn_noise = NoiseLearning::kAuto;

  int effective_k() const;
  void validate() const;
};

// Throws std::invalid_argument on unknown keys or bad values.
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string to_string(Scenario s);

struct MetricRow {
  Scenario scenario = Scenario::kRandomLowRank;
  int m = 0, n = 0, r = 0, k = 0;
  double p = 0.0;
  double snr_db = 0.0;
  int bits = 0;
  int trial = 0;
  std::string solver;
  double nmse_db = 0.0;
  double debiased_nmse_db = 0.0;
  bool rank_correct = false;
  std::optional<double> mse_theta_db;
  std::optional<double> mse_phi_db;
  int iters = 0;
  double wall_ms = 0.0;
  bool failed = false;
  std::string error;
  std::vector<double> nmse_trace;  // per outer iteration, MC-Gr-SBL rows only
};

inline constexpr const char* kCsvHeader =
    "scenario,m,n,r,k,p,snr_db,bits,trial,solver,nmse_db,debiased_nmse_db,rank_correct,"
    "mse_theta_db,mse_phi_db,iters,wall_ms";

// Solvers run per (SNR, B, trial): "mc-gr-sbl" and "vsbl" always,
// "mc-gr-sbl-music" for the lse2d scenario.
std::vector<MetricRow> run_trial(const ExperimentConfig& cfg, double snr_db, int bits, int trial);

struct RunOptions {
  int threads = 1;
  bool timing = true;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

// Rows ordered by (SNR, B, trial, solver) regardless of scheduling.
std::vector<MetricRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

void write_csv(std::ostream& os, const std::vector<MetricRow>& rows);

// Medians per (SNR, B, solver) as JSON text.
std::string summarize_json(const ExperimentConfig& cfg, const std::vector<MetricRow>& rows);

double median(std::vector<double> values);

}  // namespace mcq
