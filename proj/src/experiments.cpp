#include "emd/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "emd/error.hpp"

namespace emd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string method_spec(const Method& m) {
  return std::visit(overloaded{
                        [](const method::MdConstant& c) { return fmt::format("md-const:{:.17g}", c.alpha); },
                        [](const method::MdBacktracking& b) {
                          return fmt::format("md-backtracking:{:.17g}:{:.17g}", b.alpha0, b.shrink);
                        },
                        [&](const auto&) { return method_label(m); },
                    },
                    m);
}

std::string join_scales(const std::vector<double>& scales) {
  std::string out;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (i) out += ';';
    out += fmt::format("{:.17g}", scales[i]);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::string metadata(const ExperimentConfig& cfg, const std::string& experiment,
                     const std::vector<std::string>& methods) {
  const InstanceSpec& s = cfg.spec;
  std::string out;
  out += fmt::format("experiment={}\n", experiment);
  out += fmt::format("version={}\n", EMD_VERSION);
  out += fmt::format("m={}\nn={}\n", s.m, s.n);
  out += fmt::format("sparsity={}\n", s.sparsity ? std::to_string(*s.sparsity) : std::string("dense"));
  out += fmt::format("singular_law={}\n", to_string(s.singular_law));
  out += fmt::format("seed={}\n", s.seed);
  out += fmt::format("iters={}\n", cfg.iters);
  out += fmt::format("limit_extra_iters={}\n", cfg.limit_extra_iters);
  out += fmt::format("init_scales={}\n", join_scales(cfg.init_scales));
  std::string joined;
  for (std::size_t i = 0; i < methods.size(); ++i) joined += (i ? ";" : "") + methods[i];
  out += fmt::format("methods={}\n", joined);
  return out;
}

void check_config(const ExperimentConfig& cfg) {
  if (cfg.iters < 1) throw Error(ErrorKind::InvalidArgument, "experiment: iters must be >= 1");
  if (cfg.limit_extra_iters < 1) throw Error(ErrorKind::InvalidArgument, "experiment: limit_extra_iters must be >= 1");
  if (cfg.init_scales.empty()) throw Error(ErrorKind::InvalidArgument, "experiment: no initialization scales");
  for (double s : cfg.init_scales)
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidArgument, "experiment: scales must be positive");
  if (cfg.spec.m == 0 || cfg.spec.n == 0) throw Error(ErrorKind::InvalidArgument, "experiment: empty instance");
}

Vector padded_column(const Trace& trace, int length, bool d_h) {
  Vector out(static_cast<std::size_t>(length));
  double last = 0.0;
  for (int k = 1; k <= length; ++k) {
    if (static_cast<std::size_t>(k) < trace.size()) {
      const TraceRecord& rec = trace[static_cast<std::size_t>(k)];
      last = d_h ? rec.d_h_to_ref.value_or(std::numeric_limits<double>::quiet_NaN()) : rec.f_value;
    } else if (k == 1 && !trace.empty()) {
      last = d_h ? trace.front().d_h_to_ref.value_or(0.0) : trace.front().f_value;
    }
    out[static_cast<std::size_t>(k - 1)] = last;
  }
  return out;
}

SolveResult run_method(const ProblemInstance& p, const Method& m, const Vector& x0, int iters,
                       std::optional<Vector> reference) {
  SolveConfig cfg;
  cfg.method = m;
  cfg.x0 = x0;
  cfg.max_iters = iters;
  cfg.f_tol = 0.0;
  cfg.trace_reference = std::move(reference);
  cfg.certify_descent = false;
  return solve(p, cfg);
}

Method resolve_constant(const ProblemInstance& p, const Vector& x0, int iters) {
  double best_alpha = 0.0;
  double best_score = std::numeric_limits<double>::infinity();
  for (double alpha : constant_stepsize_grid(p)) {
    const SolveResult r = run_method(p, method::MdConstant{alpha}, x0, iters, std::nullopt);
    if (r.status == SolveStatus::NumericalBreakdown) continue;
    const double score = cumulative_min_f(r.trace, iters).back();
    if (score < best_score) {
      best_score = score;
      best_alpha = alpha;
    }
  }
  if (best_alpha == 0.0) throw Error(ErrorKind::NonConvergence, "every constant stepsize in the grid diverged");
  return method::MdConstant{best_alpha};
}

}  // namespace

std::string_view to_string(SingularLaw law) {
  switch (law) {
    case SingularLaw::HalfNormal: return "half-normal";
    case SingularLaw::AbsNormal: return "abs-normal";
  }
  return "unknown";
}

GeneratedInstance gen_instance_with_spectrum(const InstanceSpec& spec) {
  const std::size_t m = spec.m;
  const std::size_t n = spec.n;
  if (m == 0 || n == 0) throw Error(ErrorKind::InvalidArgument, "gen_instance: m and n must be positive");
  if (spec.sparsity && (*spec.sparsity < 1 || *spec.sparsity > n)) {
    throw Error(ErrorKind::InvalidArgument, "gen_instance: sparsity must lie in [1, n]");
  }
  RngState rng(spec.seed);
  const DenseMatrix u = random_orthogonal(m, rng);
  const DenseMatrix v = random_orthogonal(n, rng);
  const std::size_t k = std::min(m, n);
  Vector sigma(k);
  // Both laws draw |N(0,1)|.
  for (double& s : sigma) s = std::abs(rng.normal());

  DenseMatrix a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += u(i, l) * sigma[l] * v(j, l);
      a(i, j) = s;
    }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const std::size_t support = spec.sparsity.value_or(n);
  for (std::size_t i = 0; i < support; ++i) {
    const std::size_t j = i + rng.index_below(n - i);
    std::swap(perm[i], perm[j]);
  }
  Vector z(n, 0.0);
  for (std::size_t i = 0; i < support; ++i) z[perm[i]] = rng.uniform();

  Vector b = matvec(a, z);
  return GeneratedInstance{ProblemInstance{std::move(a), std::move(b), std::move(z)}, std::move(sigma)};
}

ProblemInstance gen_instance(const InstanceSpec& spec) { return gen_instance_with_spectrum(spec).instance; }

std::vector<double> constant_stepsize_grid(const ProblemInstance& p) {
  const double scale = max_col_norm_sq(p.a);
  if (!(scale > 0.0)) throw Error(ErrorKind::RankZero, "constant_stepsize_grid: zero matrix");
  constexpr int kPoints = 25;
  std::vector<double> grid(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    const double e = -3.0 + 5.0 * i / (kPoints - 1.0);
    grid[static_cast<std::size_t>(i)] = std::pow(10.0, e) / scale;
  }
  return grid;
}

Vector cumulative_min_f(const Trace& trace, int length) {
  Vector out = padded_column(trace, length, false);
  double running = trace.empty() ? std::numeric_limits<double>::infinity() : trace.front().f_value;
  for (double& v : out) {
    running = std::min(running, v);
    v = running;
  }
  return out;
}

Experiment1Result run_experiment1(const ExperimentConfig& cfg) {
  check_config(cfg);
  if (cfg.methods.empty()) throw Error(ErrorKind::InvalidArgument, "experiment 1: no methods");
  Experiment1Result res;
  res.instance = gen_instance(cfg.spec);
  const ProblemInstance& p = res.instance;
  const Vector x0(p.cols(), cfg.init_scales.front());

  for (const Method& requested : cfg.methods) {
    if (std::holds_alternative<method::EgPm>(requested)) {
      throw Error(ErrorKind::InvalidArgument, "experiment 1: eg-pm does not apply to nonnegative systems");
    }
    MethodRun run;
    run.label = method_label(requested);
    run.method = requested;
    if (auto* c = std::get_if<method::MdConstant>(&run.method); c && c->alpha == 0.0) {
      run.method = resolve_constant(p, x0, cfg.iters);
    }
    if (auto* bt = std::get_if<method::MdBacktracking>(&run.method); bt && bt->alpha0 == 0.0) {
      bt->alpha0 = default_backtracking_alpha0(p, x0);
    }

    const SolveResult long_run = run_method(p, run.method, x0, cfg.iters + cfg.limit_extra_iters, std::nullopt);
    run.limit = long_run.x_final;
    const SolveResult traced = run_method(p, run.method, x0, cfg.iters, run.limit);
    run.status = traced.status;
    run.cummin_f = cumulative_min_f(traced.trace, cfg.iters);
    run.d_h_to_limit = padded_column(traced.trace, cfg.iters, true);
    res.runs.push_back(std::move(run));
  }
  if (!cfg.out_path.empty()) write_experiment1(res, cfg);
  return res;
}

Experiment2Result run_experiment2(const ExperimentConfig& cfg) {
  check_config(cfg);
  Experiment2Result res;
  res.instance = gen_instance(cfg.spec);
  for (double scale : cfg.init_scales) {
    const SolveResult r =
        run_method(res.instance, method::MdPolyak{}, Vector(res.instance.cols(), scale), cfg.iters, std::nullopt);
    res.runs.push_back(ScaleRun{scale, r.status, cumulative_min_f(r.trace, cfg.iters)});
  }
  return res;
}

std::optional<int> iterations_to_threshold(const Vector& cummin_f, double threshold) {
  for (std::size_t i = 0; i < cummin_f.size(); ++i)
    if (cummin_f[i] <= threshold) return static_cast<int>(i + 1);
  return std::nullopt;
}

std::string format_csv(const std::vector<std::string>& labels, const std::vector<Vector>& columns) {
  if (labels.size() != columns.size()) throw Error(ErrorKind::DimensionMismatch, "format_csv: labels vs columns");
  std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const Vector& c : columns)
    if (c.size() != rows) throw Error(ErrorKind::DimensionMismatch, "format_csv: ragged columns");
  std::string out = "iter";
  for (const std::string& l : labels) out += "," + l;
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    out += std::to_string(r + 1);
    for (const Vector& c : columns) out += fmt::format(",{:.17g}", c[r]);
    out += '\n';
  }
  return out;
}

void write_experiment1(const Experiment1Result& res, const ExperimentConfig& cfg) {
  ensure_directory(cfg.out_path);
  std::vector<std::string> labels;
  std::vector<std::string> specs;
  std::vector<Vector> f_cols;
  std::vector<Vector> d_cols;
  std::string status = "method,status\n";
  for (const MethodRun& r : res.runs) {
    labels.push_back(r.label);
    specs.push_back(method_spec(r.method));
    f_cols.push_back(r.cummin_f);
    d_cols.push_back(r.d_h_to_limit);
    status += fmt::format("{},{}\n", r.label, to_string(r.status));
  }
  write_text(cfg.out_path / "exp1_cummin_f.csv", format_csv(labels, f_cols));
  write_text(cfg.out_path / "exp1_bregman_to_limit.csv", format_csv(labels, d_cols));
  write_text(cfg.out_path / "exp1_status.csv", status);
  write_text(cfg.out_path / "exp1.meta", metadata(cfg, "1", specs));
}

void write_experiment2(const Experiment2Result& res, const ExperimentConfig& cfg, const std::string& panel) {
  ensure_directory(cfg.out_path);
  std::vector<std::string> labels;
  std::vector<Vector> cols;
  std::string status = "scale,status\n";
  for (const ScaleRun& r : res.runs) {
    labels.push_back(fmt::format("x0={:g}", r.scale));
    cols.push_back(r.cummin_f);
    status += fmt::format("{:g},{}\n", r.scale, to_string(r.status));
  }
  const std::string stem = "exp2_" + panel;
  write_text(cfg.out_path / (stem + ".csv"), format_csv(labels, cols));
  write_text(cfg.out_path / (stem + "_status.csv"), status);
  write_text(cfg.out_path / (stem + ".meta"), metadata(cfg, "2-" + panel, {"md-polyak"}));
}

}  // namespace emd
