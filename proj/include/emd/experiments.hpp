#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emd/linalg.hpp"
#include "emd/solvers.hpp"

namespace emd {

enum class SingularLaw { HalfNormal, AbsNormal };
std::string_view to_string(SingularLaw law);

struct InstanceSpec {
  std::size_t m = 60;
  std::size_t n = 100;
  std::optional<std::size_t> sparsity = 10;  // nullopt: dense planted solution
  SingularLaw singular_law = SingularLaw::HalfNormal;
  std::uint64_t seed = 0;
};

struct GeneratedInstance {
  ProblemInstance instance;
  Vector singular_values;  // the min(m, n) drawn values, in draw order
};

/// A = U·Σ·Vᵀ with Haar U, V and |N(0,1)| singular values; planted z has
/// uniform random support and U[0,1] values; b = Az. Draw order is U, V, Σ,
/// support, values, so two specs differing only in sparsity share A.
GeneratedInstance gen_instance_with_spectrum(const InstanceSpec& spec);
ProblemInstance gen_instance(const InstanceSpec& spec);

struct ExperimentConfig {
  InstanceSpec spec;
  /// MdConstant with alpha = 0 requests the grid-optimal constant stepsize.
  std::vector<Method> methods;
  int iters = 5000;
  int limit_extra_iters = 5000;
  std::vector<double> init_scales = {1e-4};
  /// Output directory; nothing is written when empty.
  std::filesystem::path out_path;
};

struct MethodRun {
  std::string label;
  Method method;  // resolved: grid choice or backtracking alpha0 filled in
  SolveStatus status = SolveStatus::MaxIters;
  Vector cummin_f;     // entry k-1 is min_{s ≤ k} f(x_s), k = 1..iters
  Vector d_h_to_limit;  // entry k-1 is D_h(limit, x_k)
  Vector limit;
};

struct Experiment1Result {
  ProblemInstance instance;
  std::vector<MethodRun> runs;
};

/// Log-spaced constant stepsizes searched for the MdConstant baseline.
std::vector<double> constant_stepsize_grid(const ProblemInstance& p);

/// Cumulative minimum of the trace f values, padded to `length` rows with the
/// last value; row k-1 covers iterates 0..k.
Vector cumulative_min_f(const Trace& trace, int length);

Experiment1Result run_experiment1(const ExperimentConfig& cfg);

struct ScaleRun {
  double scale = 0.0;
  SolveStatus status = SolveStatus::MaxIters;
  Vector cummin_f;
};

struct Experiment2Result {
  ProblemInstance instance;
  std::vector<ScaleRun> runs;
};

/// MdPolyak from scale·𝟙 for every scale in cfg.init_scales (one panel).
Experiment2Result run_experiment2(const ExperimentConfig& cfg);

/// First k ≥ 1 with cummin_f[k-1] ≤ threshold, or nullopt.
std::optional<int> iterations_to_threshold(const Vector& cummin_f, double threshold);

/// CSV with header `iter,<labels>` and rows k = 1..rows, values as %.17g.
std::string format_csv(const std::vector<std::string>& labels, const std::vector<Vector>& columns);

void write_experiment1(const Experiment1Result& res, const ExperimentConfig& cfg);
void write_experiment2(const Experiment2Result& res, const ExperimentConfig& cfg, const std::string& panel);

}  // namespace emd
