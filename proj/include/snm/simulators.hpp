#pragma once

// Data generation for the closed-loop polynomial task and the heat-transfer
// chain. Trajectories keep the realized noise so test oracles can rebuild s_t
// and the true estimation error.

#include <string>
#include <utility>
#include <vector>

#include "snm/estimator.hpp"
#include "snm/rng.hpp"

namespace snm {

/// Cubic g(u; θ) = θ₀ + θ₁u + θ₂u² + θ₃u³ identified under the feedback law
/// u_t = clip(r_t − Σ_{k≤t} y_k), r_t = 2·sin(0.1t + φ), with y_0 := 0.
struct PolyClosedLoop {
  Vector theta_true = (Vector(4) << 0.0, 1.0, 0.0, -1.0).finished();
  double c_w = 0.2;
  std::size_t horizon = 20;
};

/// n_x thermal nodes driven by ϑ⁰_t = ϑ_max(1 + sin 0.1t) and a constant ϑ_ext.
struct HeatChain {
  double alpha_true = 0.5;
  double beta_true = 0.1;
  Eigen::Index n_x = 5;
  double theta_ext = 25.0;
  double theta_max = 100.0;
  double theta_init = 20.0;
  std::size_t horizon = 1000;
  /// Half-width of the uniform per-node noise; 0 gives a noiseless run.
  double noise_half_width = 1.0;
};

struct SimulatedTrajectory {
  std::vector<Observation> observations;  ///< (M_t, y_{t+1}), t = 0..T−1
  std::vector<Vector> lti_phis;           ///< φ_t = (x_t, u_t); heat chain only
  std::vector<Vector> noises;             ///< w_t
  std::vector<Vector> states;             ///< x_0..x_T; heat chain only
  std::vector<Vector> inputs;             ///< u_t
  double phase = 0.0;                     ///< reference phase; polynomial task only
};

/// Monomial row (1, u, u², u³).
Matrix poly_regressor(double u);
double poly_eval(const Vector& theta, double u);

/// Gram matrix of the monomials under ∫_{-1}^{1}: P[i][j] = 2/(i+j+1) for even i+j.
SymMatrix poly_l2_gram();

SimulatedTrajectory simulate_poly(const PolyClosedLoop& sys, RngStream rng);
SimulatedTrajectory simulate_heat(const HeatChain& sys, RngStream rng);

struct LtiMatrices {
  Matrix a;
  Matrix b;
};

/// (A★, B★) of the heat chain; B is n_x × 0 when include_inputs is false.
LtiMatrices lti_true_matrices(double alpha, double beta, Eigen::Index n_x, bool include_inputs = true);

/// [A B].
Matrix lti_theta(const LtiMatrices& ab);

/// n_x × 2 matrix with columns (ϑ^{[i−1]} − ϑ^{[i]})_i and (ϑ_ext − ϑ^{[i]})_i,
/// where u = (ϑ⁰, ϑ_ext).
Matrix structured_regressor(const Vector& x, const Vector& u);

/// One-step prediction x + M(x, u)·θ.
Vector heat_drift(const Vector& x, const Vector& u, const Vector& theta);

struct StateInput {
  Vector x;
  Vector u;
};

/// `count` pairs with every coordinate uniform on [0, theta_max]; u has 2 entries.
std::vector<StateInput> sample_eval_set(RngStream rng, std::size_t count, Eigen::Index n_x,
                                        double theta_max);

/// CSV with columns t, x0.., u0.., y0.., w0..; row t holds x_t, u_t, y_{t+1}, w_t.
std::string trajectory_csv(const SimulatedTrajectory& traj);

/// Writes the CSV atomically and a `<path>.meta.json` sidecar holding `config`
/// (a JSON object serialized by the caller) and the stream.
void write_trajectory(const SimulatedTrajectory& traj, const std::string& path,
                      const std::string& config_json, RngStream rng);

}  // namespace snm
