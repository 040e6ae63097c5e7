#include "emd/cli.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "emd/analysis.hpp"
#include "emd/bregman.hpp"
#include "emd/error.hpp"
#include "emd/experiments.hpp"
#include "emd/instance_io.hpp"
#include "json.hpp"

namespace emd::cli {

namespace {

enum class Format { KeyValue, Json };

class Report {
 public:
  void add(const std::string& key, double v) { items_.emplace_back(key, Value{v}); }
  void add(const std::string& key, long long v) { items_.emplace_back(key, Value{v}); }
  void add(const std::string& key, int v) { add(key, static_cast<long long>(v)); }
  void add(const std::string& key, std::size_t v) { add(key, static_cast<long long>(v)); }
  void add(const std::string& key, bool v) { items_.emplace_back(key, Value{v}); }
  void add(const std::string& key, std::string v) { items_.emplace_back(key, Value{std::move(v)}); }
  void add(const std::string& key, std::string_view v) { add(key, std::string(v)); }
  void add(const std::string& key, const char* v) { add(key, std::string(v)); }
  void add(const std::string& key, const Vector& v) { items_.emplace_back(key, Value{v}); }

  void print(std::ostream& os, Format format) const {
    if (format == Format::Json) {
      nlohmann::ordered_json doc = nlohmann::ordered_json::object();
      for (const auto& [key, value] : items_) {
        std::visit([&](const auto& v) { doc[key] = v; }, value);
      }
      os << doc.dump() << '\n';
      return;
    }
    for (const auto& [key, value] : items_) {
      os << key << '=';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              os << fmt::format("{:.17g}", v);
            } else if constexpr (std::is_same_v<T, bool>) {
              os << (v ? "true" : "false");
            } else if constexpr (std::is_same_v<T, Vector>) {
              for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << fmt::format("{:.17g}", v[i]);
            } else {
              os << v;
            }
          },
          value);
      os << '\n';
    }
  }

 private:
  using Value = std::variant<double, long long, bool, std::string, Vector>;
  std::vector<std::pair<std::string, Value>> items_;
};

struct InitOptions {
  std::optional<double> eta;
  std::optional<double> scale;

  void attach(CLI::App* sub) {
    auto* e = sub->add_option("--eta", eta, "Initialize at exp(-eta)·1");
    auto* s = sub->add_option("--x0-scale", scale, "Initialize at scale·1");
    e->excludes(s);
  }

  Vector make(std::size_t n, double default_scale) const {
    if (eta) return exp_init(n, *eta);
    const double s = scale.value_or(default_scale);
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidArgument, "--x0-scale must be positive");
    return Vector(n, s);
  }
};

Method parse_experiment_method(const std::string& token) {
  if (token == "md-const") return method::MdConstant{0.0};
  return parse_method(token);
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void write_trace_csv(const std::string& path, const Trace& trace) {
  const bool with_ref = !trace.empty() && trace.front().d_h_to_ref.has_value();
  std::string text = with_ref ? "iter,f,stepsize,l1_norm,d_h_to_ref\n" : "iter,f,stepsize,l1_norm\n";
  for (const TraceRecord& r : trace) {
    text += fmt::format("{},{:.17g},{:.17g},{:.17g}", r.iter, r.f_value, r.stepsize, r.l1_norm);
    if (with_ref) text += fmt::format(",{:.17g}", r.d_h_to_ref.value_or(std::nan("")));
    text += '\n';
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  os << text;
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path);
}

int exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return 0;
    case SolveStatus::MaxIters: return 2;
    case SolveStatus::NumericalBreakdown: return 3;
  }
  return 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropic mirror descent with Polyak stepsizes for nonnegative linear systems"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_path;
  std::string format_name = "kv";
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out_path, "Output file (solve, project) or directory (exp1, exp2)");
  app.add_option("--format", format_name, "Summary format")->check(CLI::IsMember({"kv", "json"}));

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Run a solver on an instance file");
  std::string solve_file;
  std::string method_name = "md-polyak";
  int solve_iters = 1000;
  double solve_tol = 1e-20;
  std::string trace_path;
  InitOptions solve_init;
  solve_cmd->add_option("instance", solve_file, "Instance JSON file")->required();
  solve_cmd->add_option("--method", method_name, "md-polyak, hd-plus-polyak, hd-polyak, eg-pm, md-const:<a>, md-backtracking[:a0[:shrink]]");
  solve_cmd->add_option("--iters", solve_iters, "Iteration budget")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--f-tol", solve_tol, "Stop when f <= f-tol");
  solve_cmd->add_option("--trace", trace_path, "Write the per-iteration trace CSV here");
  solve_init.attach(solve_cmd);

  // project
  auto* project_cmd = app.add_subcommand("project", "Bregman projection of x0 onto the solution set");
  std::string project_file;
  int project_iters = 200000;
  double project_tol = 1e-24;
  InitOptions project_init;
  project_cmd->add_option("instance", project_file, "Instance JSON file")->required();
  project_cmd->add_option("--iters", project_iters, "Iteration budget")->check(CLI::PositiveNumber);
  project_cmd->add_option("--f-tol", project_tol, "Projection accuracy in f");
  project_init.attach(project_cmd);

  // bias
  auto* bias_cmd = app.add_subcommand("bias", "Implicit-bias report for x0 = exp(-eta)·1");
  std::string bias_file;
  std::optional<double> bias_eta;
  std::vector<double> construct;
  int samples = 64;
  bias_cmd->add_option("instance", bias_file, "Instance JSON file");
  bias_cmd->add_option("--eta", bias_eta, "Initialization exponent");
  auto* construct_opt =
      bias_cmd->add_option("--construct", construct, "Use the worst-case instance for (n, eta)")->expected(2);
  bias_cmd->add_option("--samples", samples, "Random kernel directions")->check(CLI::PositiveNumber);
  construct_opt->excludes(bias_cmd->get_option("instance"));

  // rate-cert
  auto* rate_cmd = app.add_subcommand("rate-cert", "Linear-rate certificate around the planted solution");
  std::string rate_file;
  InitOptions rate_init;
  rate_cmd->add_option("instance", rate_file, "Instance JSON file with a strictly positive z")->required();
  rate_init.attach(rate_cmd);

  // instability
  auto* inst_cmd = app.add_subcommand("instability", "Unstable fixed point of constant-stepsize MD");
  std::string inst_file;
  double inst_alpha = 0.0;
  int inst_iters = 10000;
  double perturbation = 1e-6;
  inst_cmd->add_option("instance", inst_file, "Instance JSON file with z")->required();
  inst_cmd->add_option("--alpha", inst_alpha, "Constant stepsize")->required();
  inst_cmd->add_option("--iters", inst_iters, "Iterations of constant-stepsize MD")->check(CLI::PositiveNumber);
  inst_cmd->add_option("--perturbation", perturbation, "Relative perturbation of the start");

  // exp1 / exp2
  ExperimentConfig exp_cfg;
  std::size_t sparsity = 10;
  std::string law_name = "half-normal";
  bool full_scale = false;

  auto* exp1_cmd = app.add_subcommand("exp1", "Convergence comparison of five methods");
  std::string methods_text = "md-const,md-backtracking,md-polyak,hd-polyak,hd-plus-polyak";
  double exp1_scale = 1e-4;
  exp1_cmd->add_option("--m", exp_cfg.spec.m, "Rows")->check(CLI::PositiveNumber);
  exp1_cmd->add_option("--n", exp_cfg.spec.n, "Columns")->check(CLI::PositiveNumber);
  exp1_cmd->add_option("--sparsity", sparsity, "Planted nonzeros (0 for dense)");
  exp1_cmd->add_option("--iters", exp_cfg.iters, "Iterations per method")->check(CLI::PositiveNumber);
  exp1_cmd->add_option("--limit-extra", exp_cfg.limit_extra_iters, "Extra iterations for the limit estimate")
      ->check(CLI::PositiveNumber);
  exp1_cmd->add_option("--scale", exp1_scale, "Initialization x0 = scale·1");
  exp1_cmd->add_option("--methods", methods_text, "Comma-separated methods; bare md-const searches a stepsize grid");
  exp1_cmd->add_option("--law", law_name, "Singular value law")->check(CLI::IsMember({"half-normal", "abs-normal"}));
  exp1_cmd->add_flag("--full-scale", full_scale, "300x500, 30 nonzeros, 25000 + 25000 iterations");

  auto* exp2_cmd = app.add_subcommand("exp2", "Effect of the initialization scale");
  std::vector<double> scales = {1e-2, 1e-4, 1e-8, 1e-16, 1e-32};
  std::string panel = "both";
  double threshold = 1e-10;
  exp2_cmd->add_option("--m", exp_cfg.spec.m, "Rows")->check(CLI::PositiveNumber);
  exp2_cmd->add_option("--n", exp_cfg.spec.n, "Columns")->check(CLI::PositiveNumber);
  exp2_cmd->add_option("--sparsity", sparsity, "Nonzeros of the sparse panel")->check(CLI::PositiveNumber);
  exp2_cmd->add_option("--iters", exp_cfg.iters, "Iterations per scale")->check(CLI::PositiveNumber);
  exp2_cmd->add_option("--scales", scales, "Initialization scales")->delimiter(',');
  exp2_cmd->add_option("--panel", panel, "sparse, dense or both")->check(CLI::IsMember({"sparse", "dense", "both"}));
  exp2_cmd->add_option("--threshold", threshold, "Report iterations until cumulative-min f <= threshold");
  exp2_cmd->add_flag("--full-scale", full_scale, "300x500, 30 nonzeros, 25000 iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  }

  const Format format = format_name == "json" ? Format::Json : Format::KeyValue;
  Report report;

  try {
    if (solve_cmd->parsed()) {
      const ProblemInstance p = load_instance(solve_file);
      SolveConfig cfg;
      cfg.method = parse_method(method_name);
      cfg.x0 = solve_init.make(p.cols(), 1.0);
      cfg.max_iters = solve_iters;
      cfg.f_tol = solve_tol;
      const bool signed_system = std::holds_alternative<method::EgPm>(cfg.method);
      if (signed_system) cfg.v0 = cfg.x0;
      if (p.planted && !signed_system) cfg.trace_reference = p.planted;
      const SolveResult res = solve(p, cfg);
      report.add("method", method_label(cfg.method));
      report.add("status", to_string(res.status));
      report.add("iters", res.iters_run);
      report.add("f_final", res.trace.back().f_value);
      report.add("l1_norm", norm1(res.x_final));
      report.add("heuristic", res.heuristic);
      if (!res.breakdown_reason.empty()) report.add("breakdown_reason", res.breakdown_reason);
      report.add("x", res.x_final);
      if (!trace_path.empty()) write_trace_csv(trace_path, res.trace);
      if (!out_path.empty()) {
        std::ofstream os(out_path, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(ErrorKind::Io, "cannot open " + out_path);
        report.print(os, format);
      }
      report.print(out, format);
      return exit_code(res.status);
    }

    if (project_cmd->parsed()) {
      const ProblemInstance p = load_instance(project_file);
      const Vector x0 = project_init.make(p.cols(), 1.0);
      const Vector x = bregman_projection(p, x0, project_tol, project_iters);
      report.add("f_final", objective(p, x));
      report.add("l1_norm", norm1(x));
      report.add("d_h_from_x0", bregman_divergence(x, x0));
      report.add("x", x);
    } else if (bias_cmd->parsed()) {
      RngState rng(seed);
      if (!construct.empty()) {
        const double n_real = construct[0];
        if (!(n_real >= 2.0) || n_real != std::floor(n_real)) {
          throw Error(ErrorKind::InvalidArgument, "--construct needs an integer n >= 2");
        }
        const auto n = static_cast<std::size_t>(n_real);
        const double eta = construct[1];
        const WorstCaseInstance w = worst_case_construction(n, eta);
        const BiasReport rep = bias_report(w.instance, eta, samples, rng, w.z);
        const double lower = near_sharp_lower_bound(n, rep.limit_l1, eta, rep.z_l1);
        report.add("n", n);
        report.add("eta", eta);
        report.add("t_star", w.t_star);
        report.add("lambda", w.lambda);
        report.add("expected_gap", w.expected_gap);
        report.add("exact_gap", rep.exact_gap);
        report.add("lower_bound", lower);
        if (rep.improved_bound) report.add("improved_bound", *rep.improved_bound);
        report.add("sandwich_holds", rep.improved_bound && lower <= rep.exact_gap + 1e-8 &&
                                         rep.exact_gap <= *rep.improved_bound + 1e-12);
        report.add("orthogonality_residual", rep.orthogonality_residual);
        if (rep.identity_residual) report.add("identity_residual", *rep.identity_residual);
      } else {
        if (bias_file.empty()) throw CLI::RequiredError("instance or --construct");
        if (!bias_eta) throw CLI::RequiredError("--eta");
        const ProblemInstance p = load_instance(bias_file);
        const BiasReport rep = bias_report(p, *bias_eta, samples, rng);
        report.add("eta", rep.eta);
        report.add("orthogonality_residual", rep.orthogonality_residual);
        report.add("kernel_trivial", rep.kernel_trivial);
        report.add("limit_l1", rep.limit_l1);
        report.add("z_l1", rep.z_l1);
        report.add("exact_gap", rep.exact_gap);
        if (rep.slow_bound) report.add("slow_bound", *rep.slow_bound);
        if (rep.improved_bound) report.add("improved_bound", *rep.improved_bound);
        if (rep.identity_residual) report.add("identity_residual", *rep.identity_residual);
        report.add("limit", rep.limit);
      }
    } else if (rate_cmd->parsed()) {
      const ProblemInstance p = load_instance(rate_file);
      if (!p.planted) throw Error(ErrorKind::InvalidArgument, "rate-cert: the instance needs a field 'z'");
      const RateCertificate c = rate_certificate(p, *p.planted);
      const Vector x0 = rate_init.make(p.cols(), 1.0);
      const double d0 = bregman_divergence(*p.planted, x0);
      report.add("lambda_min_plus", c.lambda_min_plus);
      report.add("z_min", c.z_min);
      report.add("max_col_sq", c.max_col_sq);
      report.add("z_l1", c.z_l1);
      report.add("local_factor", c.local_factor);
      report.add("d_h_z_x0", d0);
      report.add("global_factor", c.global_factor(d0));
      report.add("stepsize_floor", polyak_stepsize_floor(p, *p.planted, x0));
    } else if (inst_cmd->parsed()) {
      const ProblemInstance p = load_instance(inst_file);
      const InstabilityInstance inst = instability_construction(p, inst_alpha);
      const InstabilityRun run = run_perturbed_constant_md(inst, inst_iters, perturbation);
      SolveConfig cfg;
      cfg.method = method::MdPolyak{};
      cfg.x0 = Vector(p.cols(), 1.0);
      cfg.max_iters = inst_iters;
      cfg.f_tol = 1e-16;
      const SolveResult polyak = solve(inst.scaled, cfg);
      report.add("alpha", inst.alpha);
      report.add("lambda_max", inst.lambda_max);
      report.add("t_scale", inst.t_scale);
      report.add("jacobian_spectral_radius", inst.jacobian_spectrum_bound);
      report.add("solution_norm", run.solution_norm);
      report.add("max_distance", run.max_distance);
      report.add("relative_max_distance", run.max_distance / run.solution_norm);
      report.add("constant_status", to_string(run.status));
      report.add("constant_iters", run.iters);
      report.add("polyak_status", to_string(polyak.status));
      report.add("polyak_f_final", polyak.trace.back().f_value);
      report.add("polyak_iters", polyak.iters_run);
    } else if (exp1_cmd->parsed() || exp2_cmd->parsed()) {
      const bool first = exp1_cmd->parsed();
      exp_cfg.spec.seed = seed;
      exp_cfg.out_path = out_path.empty() ? std::filesystem::path("results") : std::filesystem::path(out_path);
      if (full_scale) {
        exp_cfg.spec.m = 300;
        exp_cfg.spec.n = 500;
        sparsity = 30;
        exp_cfg.iters = 25000;
        exp_cfg.limit_extra_iters = 25000;
      }
      if (sparsity > exp_cfg.spec.n) throw Error(ErrorKind::InvalidArgument, "--sparsity exceeds n");
      if (first) {
        exp_cfg.spec.sparsity = sparsity == 0 ? std::nullopt : std::optional<std::size_t>(sparsity);
        exp_cfg.spec.singular_law = law_name == "abs-normal" ? SingularLaw::AbsNormal : SingularLaw::HalfNormal;
        exp_cfg.init_scales = {exp1_scale};
        for (const std::string& token : split_commas(methods_text)) {
          exp_cfg.methods.push_back(parse_experiment_method(token));
        }
        const Experiment1Result res = run_experiment1(exp_cfg);
        report.add("out", exp_cfg.out_path.string());
        for (const MethodRun& r : res.runs) {
          report.add(r.label + ".status", to_string(r.status));
          report.add(r.label + ".final_cummin_f", r.cummin_f.back());
        }
      } else {
        exp_cfg.spec.singular_law = SingularLaw::AbsNormal;
        exp_cfg.init_scales = scales;
        report.add("out", exp_cfg.out_path.string());
        for (const std::string which : {"sparse", "dense"}) {
          if (panel != "both" && panel != which) continue;
          exp_cfg.spec.sparsity = which == "sparse" ? std::optional<std::size_t>(sparsity) : std::nullopt;
          const Experiment2Result res = run_experiment2(exp_cfg);
          write_experiment2(res, exp_cfg, which);
          for (const ScaleRun& r : res.runs) {
            const auto hit = iterations_to_threshold(r.cummin_f, threshold);
            report.add(fmt::format("{}.x0={:g}.iters_to_threshold", which, r.scale),
                       hit ? static_cast<long long>(*hit) : -1LL);
          }
        }
      }
    }
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  if (!out_path.empty() && project_cmd->parsed()) {
    std::ofstream os(out_path, std::ios::binary | std::ios::trunc);
    if (!os) {
      err << "error: io: cannot open " << out_path << '\n';
      return 1;
    }
    report.print(os, format);
  }
  report.print(out, format);
  return 0;
}

}  // namespace emd::cli
