#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdpc/model.hpp"

namespace sdpc::catalog {

/// Known answers for the dual-form reading of an instance.
struct Entry {
  std::string name;
  SdpProblem problem;
  FeasStatus status;
  std::optional<ExtendedReal> value;  // empty when not known in closed form
  std::optional<Attainment> attained;
  std::string note;
};

/// maximize -y1 - y2 - y3 s.t. [[y1,1,y2],[1,y2,1],[y2,1,y1+y2+y3]] PSD.
/// Value 0, not attained.
SdpProblem worked_example();

/// Slacks [[y,1],[1,0]] up to scaling and rotation: never PSD, but within
/// any distance of the cone.
SdpProblem weak_infeasible_2x2(double scale = 1.0, double angle = 0.0);

/// Slack set whose PSD members all live on a face of rank k (0 <= k <= n),
/// hidden by a random rotation and a random change of the y coordinates.
/// Recovering the face takes n - k reduction steps when k >= 1.
struct PlantedFace {
  SdpProblem problem;
  int rank = 0;
  Eigen::MatrixXd face_basis;  // n x k, spans the planted face
};
PlantedFace planted_face(std::uint32_t seed, int n, int k);

/// Slack diag-blocks [[0,y1],[y1,y2]], g + y1, v - y3 with objective -y1 + y3.
/// The dual value is v (attained with y1 = 0); the primal value is v + g.
SdpProblem duality_gap(double g, double v);

/// Slacks I + y * w w^T for a random unit w, objective y: value +inf.
SdpProblem unbounded(std::uint32_t seed, int n);

/// All named instances; planted families use fixed seeds.
std::vector<Entry> all();

/// Throws Parse when the name is unknown.
Entry find(const std::string& name);

}  // namespace sdpc::catalog
