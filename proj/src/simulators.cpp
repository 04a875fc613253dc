#include "snm/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace snm {

Matrix poly_regressor(double u) {
  Matrix m(1, 4);
  m << 1.0, u, u * u, u * u * u;
  return m;
}

double poly_eval(const Vector& theta, double u) {
  require_dims(theta.size() == 4, "cubic coefficients");
  return theta(0) + u * (theta(1) + u * (theta(2) + u * theta(3)));
}

SymMatrix poly_l2_gram() {
  Matrix p = Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if ((i + j) % 2 == 0) p(i, j) = 2.0 / (i + j + 1);
    }
  }
  return SymMatrix(p);
}

SimulatedTrajectory simulate_poly(const PolyClosedLoop& sys, RngStream rng) {
  require_dims(sys.theta_true.size() == 4, "cubic coefficients");
  RandomGenerator gen(rng);
  SimulatedTrajectory traj;
  traj.phase = 2.0 * std::numbers::pi * gen.uniform01();

  double output_sum = 0.0;  // Σ_{k≤t} y_k with y_0 := 0
  for (std::size_t t = 0; t < sys.horizon; ++t) {
    const double r = 2.0 * std::sin(0.1 * static_cast<double>(t) + traj.phase);
    const double u = std::clamp(r - output_sum, -1.0, 1.0);
    const double w = sys.c_w * gen.normal();
    Matrix m = poly_regressor(u);
    const double y = (m * sys.theta_true)(0) + w;
    output_sum += y;

    traj.inputs.push_back(Vector::Constant(1, u));
    traj.noises.push_back(Vector::Constant(1, w));
    traj.observations.push_back({std::move(m), Vector::Constant(1, y)});
  }
  return traj;
}

Matrix structured_regressor(const Vector& x, const Vector& u) {
  require_dims(u.size() == 2, "heat-chain input is (theta_0, theta_ext)");
  const Eigen::Index n = x.size();
  Matrix m(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double upstream = i == 0 ? u(0) : x(i - 1);
    m(i, 0) = upstream - x(i);
    m(i, 1) = u(1) - x(i);
  }
  return m;
}

Vector heat_drift(const Vector& x, const Vector& u, const Vector& theta) {
  return x + structured_regressor(x, u) * theta;
}

SimulatedTrajectory simulate_heat(const HeatChain& sys, RngStream rng) {
  RandomGenerator gen(rng);
  SimulatedTrajectory traj;
  const Vector theta = (Vector(2) << sys.alpha_true, sys.beta_true).finished();

  Vector x = Vector::Constant(sys.n_x, sys.theta_init);
  traj.states.push_back(x);
  for (std::size_t t = 0; t < sys.horizon; ++t) {
    Vector u(2);
    u << sys.theta_max * (1.0 + std::sin(0.1 * static_cast<double>(t))), sys.theta_ext;
    const Vector w = gen.uniform_vector(sys.n_x, -sys.noise_half_width, sys.noise_half_width);
    Matrix m = structured_regressor(x, u);
    const Vector increment = m * theta + w;
    const Vector x_next = x + increment;

    Vector phi(sys.n_x + 2);
    phi << x, u;
    traj.lti_phis.push_back(std::move(phi));
    traj.inputs.push_back(u);
    traj.noises.push_back(w);
    traj.observations.push_back({std::move(m), increment});
    traj.states.push_back(x_next);
    x = x_next;
  }
  return traj;
}

LtiMatrices lti_true_matrices(double alpha, double beta, Eigen::Index n_x, bool include_inputs) {
  if (n_x < 1) throw Error(ErrorCode::ParamOutOfRange, "n_x must be >= 1");
  LtiMatrices ab;
  ab.a = Matrix::Zero(n_x, n_x);
  for (Eigen::Index i = 0; i < n_x; ++i) {
    ab.a(i, i) = 1.0 - alpha - beta;
    if (i > 0) ab.a(i, i - 1) = alpha;
  }
  if (include_inputs) {
    ab.b = Matrix::Zero(n_x, 2);
    ab.b(0, 0) = alpha;
    ab.b.col(1).setConstant(beta);
  } else {
    ab.b = Matrix::Zero(n_x, 0);
  }
  return ab;
}

Matrix lti_theta(const LtiMatrices& ab) {
  Matrix theta(ab.a.rows(), ab.a.cols() + ab.b.cols());
  theta << ab.a, ab.b;
  return theta;
}

std::vector<StateInput> sample_eval_set(RngStream rng, std::size_t count, Eigen::Index n_x,
                                        double theta_max) {
  if (count < 1) throw Error(ErrorCode::ParamOutOfRange, "eval set needs at least one point");
  RandomGenerator gen(rng);
  std::vector<StateInput> set;
  set.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vector x = gen.uniform_vector(n_x, 0.0, theta_max);
    Vector u = gen.uniform_vector(2, 0.0, theta_max);
    set.push_back({std::move(x), std::move(u)});
  }
  return set;
}

}  // namespace snm
