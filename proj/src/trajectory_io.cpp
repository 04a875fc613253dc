#include <sstream>

#include <json.hpp>

#include "snm/io.hpp"
#include "snm/simulators.hpp"

namespace snm {
namespace {

Eigen::Index width(const std::vector<Vector>& seq) { return seq.empty() ? 0 : seq.front().size(); }

void append_values(std::ostringstream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << format_double(v(i));
}

}  // namespace

std::string trajectory_csv(const SimulatedTrajectory& traj) {
  const std::size_t steps = traj.observations.size();
  const bool has_states = traj.states.size() > steps;
  const Eigen::Index nx = has_states ? width(traj.states) : 0;
  const Eigen::Index nu = width(traj.inputs);
  const Eigen::Index ny = steps ? traj.observations.front().y_next.size() : 0;
  const Eigen::Index nw = width(traj.noises);

  std::ostringstream out;
  out << 't';
  for (Eigen::Index i = 0; i < nx; ++i) out << ",x" << i;
  for (Eigen::Index i = 0; i < nu; ++i) out << ",u" << i;
  for (Eigen::Index i = 0; i < ny; ++i) out << ",y" << i;
  for (Eigen::Index i = 0; i < nw; ++i) out << ",w" << i;
  out << '\n';
  for (std::size_t t = 0; t < steps; ++t) {
    out << t;
    if (has_states) append_values(out, traj.states[t]);
    append_values(out, traj.inputs[t]);
    append_values(out, traj.observations[t].y_next);
    append_values(out, traj.noises[t]);
    out << '\n';
  }
  return out.str();
}

void write_trajectory(const SimulatedTrajectory& traj, const std::string& path,
                      const std::string& config_json, RngStream rng) {
  nlohmann::json meta;
  meta["config"] = nlohmann::json::parse(config_json);
  meta["seed"] = rng.seed;
  meta["stream_index"] = rng.stream_index;
  meta["phase"] = traj.phase;
  write_file_atomic(path, trajectory_csv(traj));
  write_file_atomic(path + ".meta.json", meta.dump(2) + "\n");
}

}  // namespace snm
