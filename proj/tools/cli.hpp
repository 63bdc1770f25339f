#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime
// failure.

#include "dpcp/datagen.hpp"
#include "dpcp/dpcp.hpp"
#include "dpcp/eval.hpp"
#include "dpcp/io.hpp"
#include "dpcp/parallel.hpp"
#include "dpcp/ransac.hpp"
#include "dpcp/theory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dpcp::cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::filesystem::path basis_path_for(const std::filesystem::path& data_path) {
  std::filesystem::path p = data_path;
  if (p.extension() == ".csv") p.replace_extension();
  p += ".basis.csv";
  return p;
}

struct GenArgs {
  Index D = 10, d = 5, N = 200, M = 200;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

inline int run_gen(const GenArgs& a, std::ostream& out, std::ostream& err) {
  const Dataset ds = synthesize(a.D, a.d, a.N, a.M, a.sigma, a.seed);
  if (!ds.meets_outlier_assumption()) {
    err << "note: M=" << a.M << " is below D-d=" << a.D - a.d << "\n";
  }
  write_file_atomic(a.out, dataset_csv(ds.data, ds.labels));
  const auto basis = basis_path_for(a.out);
  write_file_atomic(basis, basis_csv(ds.true_basis));
  out << "wrote " << ds.data.cols() << " points to " << a.out << " and basis to " << basis.string() << "\n";
  return 0;
}

struct FitArgs {
  std::string method;
  Index codim = 1;
  std::optional<Index> d;
  double eps = 1e-3;
  std::optional<Index> tmax;
  double delta = 1e-6;
  std::optional<double> tau;
  double sigma = 0.0;
  double thresh = 1e-3;
  std::optional<Index> trials;
  double success_prob = 0.99;
  double ratio_hint = 0.5;
  std::uint64_t seed = 0;
  std::string input, output, signal;
};

inline int run_fit(const FitArgs& a, std::ostream& out) {
  const LabeledData in = read_dataset(a.input);
  const Index dim = in.data.rows();
  Matrix basis;
  Index iterations = 0;
  if (a.method == "ransac") {
    RansacConfig rc;
    rc.dim = a.d ? *a.d : dim - a.codim;
    rc.threshold = a.thresh;
    rc.success_prob = a.success_prob;
    rc.outlier_ratio_hint = a.ratio_hint;
    rc.trials = a.trials;
    rc.seed = a.seed;
    const RansacResult r = ransac(in.data, rc);
    basis = r.estimate.complement_basis;
    iterations = r.trials;
    out << "consensus " << r.consensus << " of " << in.data.cols() << "\n";
  } else {
    SolverConfig sc = a.method == "dpcp-lp"     ? SolverConfig::lp()
                      : a.method == "dpcp-irls" ? SolverConfig::irls()
                                                : SolverConfig::denoised();
    sc.epsilon = a.eps;
    if (a.tmax) sc.t_max = *a.tmax;
    sc.delta = a.delta;
    sc.tau = a.tau;
    sc.sigma = a.sigma;
    const SubspaceEstimate e = a.method == "dpcp-lp"     ? dpcp_lp(in.data, a.codim, sc)
                               : a.method == "dpcp-irls" ? dpcp_irls(in.data, a.codim, sc)
                                                         : dpcp_d_subspace(in.data, a.codim, sc);
    basis = e.complement_basis;
    iterations = e.total_iterations();
    for (std::size_t i = 0; i < e.objective_trace.size(); ++i) {
      out << "component " << i + 1 << ": " << e.iterations_per_component[i] << " iterations, objective "
          << format_double(e.objective_trace[i].back()) << (e.converged[i] ? "" : " (t_max reached)") << "\n";
    }
  }
  write_file_atomic(a.output, basis_csv(basis));
  out << "wrote " << basis.cols() << " basis vectors to " << a.output << " (" << iterations
      << " iterations)\n";
  if (!a.signal.empty()) {
    const Signal sig = distance_signal(in.data, basis, in.labels);
    write_file_atomic(a.signal, signal_csv(sig));
  }
  return 0;
}

inline GridConfig parse_grid_config(const std::string& path, std::string& out_csv) {
  if (!std::filesystem::exists(path)) throw UsageError("config not found: " + path);
  std::ifstream f(path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + path + " is not valid JSON: " + e.what());
  }
  static const std::set<std::string> keys{"D",      "d_list", "N",    "ratio_list", "sigma_list", "trials",
                                          "methods", "seed",  "out_csv", "ransac_budget"};
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw UsageError("config: unknown key '" + k + "'");
  }
  GridConfig g;
  try {
    g.D = j.at("D").get<Index>();
    g.d_list = j.at("d_list").get<std::vector<Index>>();
    g.N = j.at("N").get<Index>();
    g.ratio_list = j.at("ratio_list").get<std::vector<double>>();
    if (j.contains("sigma_list")) g.sigma_list = j.at("sigma_list").get<std::vector<double>>();
    g.trials = j.at("trials").get<Index>();
    g.methods = j.at("methods").get<std::vector<std::string>>();
    g.seed = j.value("seed", std::uint64_t{0});
    out_csv = j.value("out_csv", std::string());
    if (j.contains("ransac_budget")) g.ransac_budget = j.at("ransac_budget").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return g;
}

struct GridArgs {
  std::string config;
  unsigned jobs = default_jobs();
  std::optional<std::uint64_t> seed;
  std::string out;
};

inline int run_grid_command(const GridArgs& a, std::ostream& out, std::ostream& err) {
  std::string out_csv;
  GridConfig g = parse_grid_config(a.config, out_csv);
  if (a.seed) g.seed = *a.seed;
  if (!a.out.empty()) out_csv = a.out;
  if (out_csv.empty()) throw UsageError("no output: set out_csv in the config or pass --out");
  const auto records = run_grid(g, a.jobs, [&](const std::string& line) { err << line << "\n"; });
  write_file_atomic(out_csv, grid_csv(records));
  out << "wrote " << records.size() << " records to " << out_csv << "\n";
  return 0;
}

struct TheoryArgs {
  TheoryCheckConfig cfg;
  unsigned jobs = default_jobs();
  std::string out;
};

inline int run_theory_command(const TheoryArgs& a, std::ostream& out) {
  const auto records = run_theory_check(a.cfg, a.jobs);
  write_file_atomic(a.out, theory_csv(records));
  out << "wrote " << records.size() << " records to " << a.out << "\n";
  return 0;
}

struct RocArgs {
  std::string input, output;
  std::uint64_t seed = 0;
};

inline int run_roc_command(const RocArgs& a, std::ostream& out) {
  const Signal sig = read_signal(a.input);
  const RocResult r = roc(sig);
  if (!a.output.empty()) write_file_atomic(a.output, roc_csv(r));
  out << "area_above " << format_double(r.area_above) << "\n"
      << "perfect_separation " << (perfect_separation(sig) ? 1 : 0) << "\n";
  return 0;
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Dual principal component pursuit: robust subspace recovery", "dpcp"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic inlier/outlier dataset");
  gen_cmd->add_option("--D", gen.D, "Ambient dimension")->capture_default_str();
  gen_cmd->add_option("--d", gen.d, "Inlier subspace dimension")->capture_default_str();
  gen_cmd->add_option("--N", gen.N, "Number of inliers")->capture_default_str();
  gen_cmd->add_option("--M", gen.M, "Number of outliers")->capture_default_str();
  gen_cmd->add_option("--sigma", gen.sigma, "Noise std per coordinate, orthogonal to the subspace")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output CSV; the basis goes to <stem>.basis.csv")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate the orthogonal complement of the inlier subspace");
  fit_cmd->add_option("--method", fit.method, "Solver")
      ->required()
      ->check(CLI::IsMember({"dpcp-lp", "dpcp-irls", "dpcp-d", "ransac"}));
  fit_cmd->add_option("--codim", fit.codim, "Number of complement directions c")->capture_default_str();
  fit_cmd->add_option("--d", fit.d, "RANSAC subspace dimension (default D - codim)");
  fit_cmd->add_option("--eps", fit.eps, "Relative objective decrease tolerance")->capture_default_str();
  fit_cmd->add_option("--tmax", fit.tmax,
                      "Maximum iterations (default 10 for dpcp-lp, 100 for dpcp-irls, 1000 for dpcp-d)");
  fit_cmd->add_option("--delta", fit.delta, "IRLS weight floor / Cholesky regularizer")->capture_default_str();
  fit_cmd->add_option("--tau", fit.tau, "dpcp-d threshold (default max(sigma, 1/sqrt(L)))");
  fit_cmd->add_option("--sigma", fit.sigma, "Noise level hint for the default tau")->capture_default_str();
  fit_cmd->add_option("--thresh", fit.thresh, "RANSAC inlier distance threshold")->capture_default_str();
  fit_cmd->add_option("--trials", fit.trials, "RANSAC trial budget (default from --success-prob)");
  fit_cmd->add_option("--success-prob", fit.success_prob, "RANSAC success probability")->capture_default_str();
  fit_cmd->add_option("--ratio-hint", fit.ratio_hint, "RANSAC outlier ratio assumed for the budget")
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Random seed (RANSAC sampling)")->capture_default_str();
  fit_cmd->add_option("--input", fit.input, "Dataset CSV")->required();
  fit_cmd->add_option("--output", fit.output, "Basis CSV, one complement vector per row")->required();
  fit_cmd->add_option("--signal", fit.signal, "Optional label,alpha CSV of distances to the subspace");

  GridArgs grid;
  std::uint64_t grid_seed_value = 0;
  auto* grid_cmd = app.add_subcommand("grid", "Run a synthetic experiment grid from a JSON config");
  grid_cmd->add_option("--config", grid.config, "JSON config")->required();
  grid_cmd->add_option("--jobs", grid.jobs, "Worker threads")->capture_default_str();
  auto* grid_seed_opt = grid_cmd->add_option("--seed", grid_seed_value, "Override the config seed");
  grid_cmd->add_option("--out", grid.out, "Override the config out_csv");

  TheoryArgs theory;
  theory.cfg.d_list = {2, 5, 8, 9};
  theory.cfg.N_list = {200};
  theory.cfg.ratio_list = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  theory.cfg.trials = 10;
  auto* th_cmd = app.add_subcommand("theory-check", "Estimate the recovery conditions on synthetic data");
  th_cmd->add_option("--D", theory.cfg.D, "Ambient dimension")->capture_default_str();
  th_cmd->add_option("--d", theory.cfg.d_list, "Subspace dimensions")->delimiter(',')->capture_default_str();
  th_cmd->add_option("--N", theory.cfg.N_list, "Inlier counts")->delimiter(',')->capture_default_str();
  th_cmd->add_option("--ratios", theory.cfg.ratio_list, "Outlier ratios M/(N+M)")
      ->delimiter(',')
      ->capture_default_str();
  th_cmd->add_option("--trials", theory.cfg.trials, "Trials per cell")->capture_default_str();
  th_cmd->add_option("--probes", theory.cfg.estimate.probes, "Random probes per uniformity estimate")
      ->capture_default_str();
  th_cmd->add_option("--circum-budget", theory.cfg.estimate.circumradius_budget,
                     "Work budget per circumradius estimate")
      ->capture_default_str();
  th_cmd->add_option("--seed", theory.cfg.seed, "Random seed")->capture_default_str();
  th_cmd->add_option("--jobs", theory.jobs, "Worker threads")->capture_default_str();
  th_cmd->add_option("--out", theory.out, "Output CSV")->required();

  RocArgs roc_args;
  auto* roc_cmd = app.add_subcommand("roc", "ROC curve and area above it for a label,alpha signal");
  roc_cmd->add_option("--input", roc_args.input, "Signal CSV with columns label,alpha")->required();
  roc_cmd->add_option("--output", roc_args.output, "Optional fpr,tpr CSV");
  roc_cmd->add_option("--seed", roc_args.seed, "Accepted for uniformity; unused")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  try {
    if (*gen_cmd) return run_gen(gen, out, err);
    if (*fit_cmd) return run_fit(fit, out);
    if (*grid_cmd) {
      if (*grid_seed_opt) grid.seed = grid_seed_value;
      return run_grid_command(grid, out, err);
    }
    if (*th_cmd) return run_theory_command(theory, out);
    if (*roc_cmd) return run_roc_command(roc_args, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace dpcp::cli
