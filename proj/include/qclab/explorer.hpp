#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qclab/body.hpp"
#include "qclab/csv.hpp"
#include "qclab/rng.hpp"

namespace qclab {

enum class ExperimentKind {
  section_diameter,
  projection_containment,
  global_form,
  l1_compare,
  fact_check,
  jl,
  cover,
};

// Declarative run description. One struct serves every experiment; each
// runner validates the fields it reads.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::section_diameter;
  std::string body;   // descriptor; for cover, the covered body
  std::string body2;  // cover: covering body; estimate MKB: the reference body
  std::vector<int> n_list{16, 64, 256, 1024};  // l1_compare dimensions
  int ambient_n = 200;                         // jl ambient dimension
  double lambda = 0.5;
  std::int64_t samples = 10000;  // direction samples per trial / MC budget
  int trials = 20;
  std::int64_t cloud_size = 100000;
  std::uint64_t seed = 0;
  std::string output;  // CSV path; empty writes to stdout
  double t = 0.5;      // cover radius
  int k = 0;           // fact: projection rank; 0 = pick inside the stated range
  std::vector<int> k_list{50};                 // jl ranks
  std::vector<double> epsilons{0.5};           // jl
  std::vector<int> num_points{10};             // jl N values
  double delta = 0.05;                         // radial cone half-width, radians
  double center_shrink = 1.0;                  // cover: centers = shrink * cloud point
  std::string functional;                      // estimate: M|Mstar|Mtilde|MKB|ctheta
  double theta = 1.0;                          // estimate ctheta
  std::string centers_out;                     // cover: optional points dump

  // Range checks shared by every runner; throws std::invalid_argument.
  void validate() const;
};

struct ExperimentReport {
  CsvTable table;
  std::string summary;  // one line for the CLI
};

ExperimentReport run_section_diameter(const ExperimentConfig& cfg);
ExperimentReport run_projection_containment(const ExperimentConfig& cfg);
ExperimentReport run_global_form(const ExperimentConfig& cfg);
ExperimentReport run_l1_compare(const ExperimentConfig& cfg);
ExperimentReport run_fact_check(const ExperimentConfig& cfg);
ExperimentReport run_jl(const ExperimentConfig& cfg);
ExperimentReport run_cover(const ExperimentConfig& cfg);
ExperimentReport run_estimate(const ExperimentConfig& cfg);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Radial-cone containment: cloud rows approximate a star body, direction rows
// are unit vectors; rho(u) = max |<z,u>| over cloud points within angular
// distance delta of the +-u axis, and the result is max_u 1/rho(u) — the
// smallest C with the unit ball inside C * body along the probed directions.
// Throws when some cone catches no cloud point.
double radial_containment_factor(const Eigen::MatrixXd& cloud,
                                 const Eigen::MatrixXd& directions, double delta);

// One global-form trial with an explicit orthogonal map: smallest C with
// D inside C(K + UK), cloud/direction budgets drawn from rng. Exposed so the
// U vs U^T invariance is testable.
double global_form_factor(const Body& body, const MatrixXd& u_map, std::int64_t cloud_size,
                          std::int64_t num_directions, double delta, const RngStream& rng);

// Full CLI: subcommands {estimate, cover, jl, section, project, global, l1,
// fact}; returns 0 on success, 2 on config errors, 1 on runtime errors.
int run_cli(int argc, char** argv);

}  // namespace qclab
