#include "mcq/grsbl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcq/metrics.hpp"
#include "mcq/numerics.hpp"

namespace mcq {

using Eigen::Index;

void GrSblConfig::validate() const {
  if (t_outer < 1) throw std::invalid_argument("T_outer must be at least 1");
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (inner_sweeps < 1) throw std::invalid_argument("inner_sweeps must be at least 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must be in (0, 1]");
  if (!(bounds.floor > 0.0 && bounds.floor < bounds.ceiling)) {
    throw std::invalid_argument("variance bounds must satisfy 0 < floor < ceiling");
  }
}

ExtrinsicState::ExtrinsicState(Index size)
    : za_ext(Eigen::VectorXcd::Zero(size)),
      zb_ext(Eigen::VectorXcd::Zero(size)),
      za_post(Eigen::VectorXcd::Zero(size)),
      zb_post(Eigen::VectorXcd::Zero(size)),
      va_ext(Eigen::VectorXd::Ones(size)),
      vb_ext(Eigen::VectorXd::Ones(size)),
      va_post(Eigen::VectorXd::Ones(size)),
      vb_post(Eigen::VectorXd::Ones(size)) {}

GaussMessage extrinsic(cd post_mean, double post_var, cd cav_mean, double cav_var,
                       const VarianceBounds& bounds) {
  const double precision = 1.0 / post_var - 1.0 / cav_var;
  if (!(precision > 0.0) || !std::isfinite(precision)) {
    return {post_mean, bounds.ceiling, true};
  }
  const double var = 1.0 / precision;
  if (var > bounds.ceiling) return {post_mean, bounds.ceiling, true};
  if (var < bounds.floor) return {post_mean, bounds.floor, true};
  return {var * (post_mean / post_var - cav_mean / cav_var), var, false};
}

ComponentPosterior mmse_component(const GaussInterval& cell, double mu, double v, double s2) {
  const double total = v + s2;
  const double c = v / total;
  const auto w = numerics::trunc_gauss_moments(cell, mu, total);
  if (!w) {
    // Cell carries no mass under the prior: pull the mean to the nearest
    // point of the cell and keep the prior spread, narrowed to the cell.
    const double target = std::clamp(mu, cell.lo, cell.hi);
    double var_w = total;
    if (cell.bounded_below() && cell.bounded_above()) {
      var_w = std::min(total, (cell.hi - cell.lo) * (cell.hi - cell.lo) / 12.0);
    }
    return {mu + c * (target - mu), v - c * v + c * c * var_w, true};
  }
  return {mu + c * (w->mean - mu), v - c * v + c * c * w->var, false};
}

MmseOutput mmse_refine(const ObservedMatrix& obs, const Eigen::VectorXcd& prior_mean,
                       const Eigen::VectorXd& prior_var, double sigma2,
                       const VarianceBounds& bounds) {
  const auto size = static_cast<Index>(obs.entries.size());
  if (prior_mean.size() != size || prior_var.size() != size) {
    throw std::invalid_argument("mmse_refine: prior must align with the observations");
  }
  const double noise = std::max(sigma2, bounds.floor);
  MmseOutput out;
  out.mean.resize(size);
  out.var.resize(size);
  for (Index e = 0; e < size; ++e) {
    const auto& entry = obs.entries[static_cast<std::size_t>(e)];
    const double pv = prior_var(e);
    if (!(pv > 0.0)) throw std::invalid_argument("mmse_refine: prior variance must be positive");
    if (!obs.quantizer) {
      const double var = 1.0 / (1.0 / pv + 1.0 / noise);
      out.mean(e) = var * (prior_mean(e) / pv + entry.value / noise);
      out.var(e) = var;
      continue;
    }
    const auto& q = *obs.quantizer;
    const double half_v = 0.5 * pv;
    const double half_s = 0.5 * noise;
    const auto re = mmse_component(q.interval(entry.re_bin), prior_mean(e).real(), half_v, half_s);
    const auto im = mmse_component(q.interval(entry.im_bin), prior_mean(e).imag(), half_v, half_s);
    out.mean(e) = cd(re.mean, im.mean);
    out.var(e) = std::max(re.var + im.var, bounds.floor);
    out.empty_cells += static_cast<int>(re.empty) + static_cast<int>(im.empty);
  }
  return out;
}

double update_noise_variance(const ExtrinsicState& state) {
  const Index size = state.zb_ext.size();
  if (size == 0) throw std::invalid_argument("noise update needs at least one observation");
  double acc = 0.0;
  for (Index e = 0; e < size; ++e) {
    acc += std::norm(state.zb_ext(e) - state.za_post(e)) + state.va_post(e);
  }
  return acc / static_cast<double>(size);
}

bool learns_noise(const GrSblConfig& cfg, const ObservedMatrix& obs) {
  switch (cfg.learn_noise) {
    case NoiseLearning::kOn:
      return true;
    case NoiseLearning::kOff:
      return false;
    case NoiseLearning::kAuto:
      break;
  }
  return obs.bits() != 1;
}

namespace {

// Convex damping of means, geometric damping of variances.
void damp(Eigen::VectorXcd& mean, Eigen::VectorXd& var, const Eigen::VectorXcd& old_mean,
          const Eigen::VectorXd& old_var, double factor) {
  if (factor >= 1.0) return;
  mean = factor * mean + (1.0 - factor) * old_mean;
  for (Index e = 0; e < var.size(); ++e) {
    var(e) = std::exp(factor * std::log(var(e)) + (1.0 - factor) * std::log(old_var(e)));
  }
}

// Extrinsic of every entry; returns the number of clamped entries.
int extrinsic_all(const Eigen::VectorXcd& post_mean, const Eigen::VectorXd& post_var,
                  const Eigen::VectorXcd& cav_mean, const Eigen::VectorXd& cav_var,
                  const VarianceBounds& bounds, Eigen::VectorXcd& ext_mean,
                  Eigen::VectorXd& ext_var) {
  int clamped = 0;
  for (Index e = 0; e < post_mean.size(); ++e) {
    const auto msg = extrinsic(post_mean(e), post_var(e), cav_mean(e), cav_var(e), bounds);
    ext_mean(e) = msg.mean;
    ext_var(e) = msg.var;
    clamped += static_cast<int>(msg.clamped);
  }
  return clamped;
}

}  // namespace

GrSblResult run_mc_grsbl(const ObservedMatrix& obs, const GrSblConfig& cfg,
                         const Eigen::MatrixXcd* reference) {
  cfg.validate();
  obs.validate();
  if (obs.entries.empty()) throw std::invalid_argument("run_mc_grsbl: no observations");

  const auto size = static_cast<Index>(obs.entries.size());
  double prior_var = cfg.prior_var;
  if (!(prior_var > 0.0)) {
    prior_var = obs.sigma_z > 0.0 ? obs.sigma_z * obs.sigma_z : static_cast<double>(cfg.k);
  }
  const bool learn = learns_noise(cfg, obs);
  // Module A holds the prior on Z, so its extrinsic is never broader than it.
  VarianceBounds a_bounds = cfg.bounds;
  a_bounds.ceiling = std::clamp(prior_var, a_bounds.floor, a_bounds.ceiling);

  ExtrinsicState st(size);
  st.va_ext.setConstant(prior_var);
  st.sigma2 = cfg.sigma2_init > 0.0 ? cfg.sigma2_init : 0.5 * prior_var;

  auto mmse = mmse_refine(obs, st.za_ext, st.va_ext, st.sigma2, cfg.bounds);
  st.zb_post = std::move(mmse.mean);
  st.vb_post = std::move(mmse.var);
  extrinsic_all(st.zb_post, st.vb_post, st.za_ext, st.va_ext, cfg.bounds, st.zb_ext, st.vb_ext);

  HeteroObservations pseudo;
  pseudo.m = obs.m;
  pseudo.n = obs.n;
  pseudo.omega.reserve(obs.entries.size());
  for (const auto& e : obs.entries) pseudo.omega.emplace_back(e.row, e.col);
  const ObservationLayout layout(obs.m, obs.n, pseudo.omega);

  GrSblResult result;
  result.factors = initialize_factors(obs.m, obs.n, cfg.k, cfg.seed);
  Eigen::MatrixXcd z_prev = result.factors.mean_z();
  Eigen::VectorXcd old_mean(size);
  Eigen::VectorXd old_var(size);

  for (int t = 1; t <= cfg.t_outer; ++t) {
    pseudo.y = st.zb_ext;
    pseudo.beta = st.vb_ext.cwiseInverse();
    for (int s = 0; s < cfg.inner_sweeps; ++s) vb_sweep(result.factors, pseudo, layout);

    for (Index e = 0; e < size; ++e) {
      const auto [i, j] = pseudo.omega[static_cast<std::size_t>(e)];
      // u_i v_j^H; Eigen's dot conjugates its left operand.
      st.za_post(e) = result.factors.v.row(j).dot(result.factors.u.row(i));
    }
    st.va_post = posterior_vars(result.factors, pseudo.omega);
    if (learn) st.sigma2 = std::max(update_noise_variance(st), cfg.bounds.floor);

    old_mean = st.za_ext;
    old_var = st.va_ext;
    const int clamped_a = extrinsic_all(st.za_post, st.va_post, st.zb_ext, st.vb_ext, a_bounds,
                                        st.za_ext, st.va_ext);
    if (t > 1) damp(st.za_ext, st.va_ext, old_mean, old_var, cfg.damping);

    mmse = mmse_refine(obs, st.za_ext, st.va_ext, st.sigma2, cfg.bounds);
    st.zb_post = std::move(mmse.mean);
    st.vb_post = std::move(mmse.var);

    old_mean = st.zb_ext;
    old_var = st.vb_ext;
    const int clamped_b = extrinsic_all(st.zb_post, st.vb_post, st.za_ext, st.va_ext, cfg.bounds,
                                        st.zb_ext, st.vb_ext);
    damp(st.zb_ext, st.vb_ext, old_mean, old_var, cfg.damping);

    if (clamped_a == size || clamped_b == size) result.stagnated = true;

    Eigen::MatrixXcd z = result.factors.mean_z();
    const double scale = z_prev.norm();
    const double change = scale > 0.0 ? (z - z_prev).norm() / scale : (z.norm() > 0.0 ? 1.0 : 0.0);
    result.change_trace.push_back(change);
    if (reference) result.nmse_trace.push_back(nmse_db(z, *reference));
    z_prev = std::move(z);
    result.iterations = t;
    if (cfg.tol > 0.0 && change < cfg.tol) break;
  }

  result.z_hat = std::move(z_prev);
  result.gamma = result.factors.gamma;
  result.rank = estimate_rank(result.gamma);
  result.sigma2 = st.sigma2;
  return result;
}

}  // namespace mcq
