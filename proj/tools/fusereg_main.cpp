// Command-line front end: simulate / fit / cv / compare / weights.
// Configuration comes from an optional "--config FILE" of key = value lines
// plus --key value flags; flags win. Exit codes: 0 success, 1 validation
// error, 2 I/O error, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "fusereg/fusereg.hpp"

namespace {

using namespace fusereg;

void print_usage(std::ostream& os) {
  os << "usage: fusereg <command> [--config FILE] [--key value ...]\n"
        "commands:\n"
        "  simulate   generate a synthetic grouped dataset and its ground truth\n"
        "  fit        fit one model on a data CSV and write coefficients\n"
        "  cv         k-fold cross-validation over a (lambda, gamma) grid\n"
        "  compare    replicated method comparison over a K0 or n sweep\n"
        "  weights    compute a fusion weight matrix and write it as CSV\n";
}

std::string out_path(const RunConfig& cfg, const std::string& key,
                     const std::string& fallback) {
  const std::filesystem::path dir = cfg.get_string("out_dir", ".");
  return (dir / cfg.get_string(key, fallback)).string();
}

double require_double(const RunConfig& cfg, const std::string& key) {
  return parse_double(cfg.require_string(key), "key '" + key + "'");
}

SolverOptions solver_options(const RunConfig& cfg, int default_max_iter,
                             double default_tol) {
  SolverOptions opts;
  opts.max_iter = cfg.get_int("max_iter", default_max_iter);
  opts.tol = cfg.get_double("tol", default_tol);
  opts.seed = cfg.get_seed("seed", 1);
  opts.validate();
  return opts;
}

SimulationConfig simulation_config(const RunConfig& cfg) {
  SimulationConfig sim;
  sim.K = cfg.get_int("K", 9);
  sim.K0 = cfg.get_int("K0", 1);
  sim.p = cfg.get_int("p", 200);
  sim.n_total = cfg.get_int("n_total", 250);
  sim.group_proportions = cfg.get_double_list("proportions", {});
  sim.sparsity = cfg.get_double("sparsity", 0.1);
  sim.trunc_halfwidth = cfg.get_double("trunc_halfwidth", 0.1);
  sim.noise_sd = cfg.get_double("noise_sd", 1.0);
  sim.seed = cfg.get_seed("seed", 1);
  sim.validate();
  return sim;
}

std::vector<std::string> group_ids(const GroupedDataset& data) {
  std::vector<std::string> ids;
  ids.reserve(data.groups().size());
  for (const auto& g : data.groups()) ids.push_back(g.id);
  return ids;
}

Matrix full_distance_matrix(
    const std::vector<std::string>& ids,
    const std::vector<std::tuple<std::string, std::string, double>>& entries) {
  const int K = static_cast<int>(ids.size());
  auto index_of = [&](const std::string& id) {
    for (int k = 0; k < K; ++k)
      if (ids[static_cast<std::size_t>(k)] == id) return k;
    throw ValidationError("unknown group id '" + id + "' in distance entries");
  };
  Matrix d = Matrix::Constant(K, K, -1.0);
  d.diagonal().setZero();
  for (const auto& [a, b, v] : entries) {
    const int ka = index_of(a);
    const int kb = index_of(b);
    if (ka == kb) throw ValidationError("distance entries must name distinct groups");
    if (d(ka, kb) >= 0.0)
      throw ValidationError("duplicate distance entry for pair (" + a + ", " + b + ")");
    if (!(v >= 0.0)) throw ValidationError("distances must be nonnegative");
    d(ka, kb) = d(kb, ka) = v;
  }
  for (int k = 0; k < K; ++k)
    for (int l = k + 1; l < K; ++l)
      if (d(k, l) < 0.0)
        throw ValidationError("distance entries must cover every group pair; missing (" +
                              ids[static_cast<std::size_t>(k)] + ", " +
                              ids[static_cast<std::size_t>(l)] + ")");
  return d;
}

FusionWeights tau_from_config(const RunConfig& cfg, const GroupedDataset& data) {
  const std::string scheme = cfg.get_string("tau_scheme", "uniform");
  if (scheme == "manual") {
    const auto entries = read_pair_entries_csv(cfg.require_string("tau_file"));
    if (cfg.get_bool("tau_entries_are_distances", false))
      return tau_from_distances(full_distance_matrix(group_ids(data), entries));
    return tau_manual(group_ids(data), entries);
  }
  return compute_tau(parse_tau_scheme(scheme), data, cfg.get_double("tau_alpha", 0.1));
}

int cmd_simulate(const RunConfig& cfg) {
  const SimulationConfig sim = simulation_config(cfg);
  auto [data, truth] = simulate_dataset(sim);
  write_dataset_csv(data, out_path(cfg, "data_out", "data.csv"));
  write_coefficients_csv(data.covariate_names(), group_ids(data), truth.B_true,
                         out_path(cfg, "truth_out", "truth.csv"));
  std::cout << "K = " << sim.K << "\nK0 = " << sim.K0 << "\np = " << sim.p
            << "\nn_total = " << data.total_n() << "\n";
  std::cout << "group sizes:";
  for (const auto& g : data.groups()) std::cout << " " << g.id << "=" << g.n();
  std::cout << "\nshared subset:";
  for (int k : truth.V0) std::cout << " " << data.group(k).id;
  std::cout << "\n";
  return 0;
}

int cmd_fit(const RunConfig& cfg) {
  const GroupedDataset data = read_dataset_csv(cfg.require_string("data"));
  const Method method = parse_method(cfg.require_string("method"));
  const double lambda = require_double(cfg, "lambda");
  const double gamma = cfg.get_double("gamma", 0.0);
  const double epsilon = cfg.get_double("epsilon", 1e-3);
  const SolverOptions opts = solver_options(cfg, 5000, 1e-10);
  const FusionWeights tau = tau_from_config(cfg, data);
  const StandardizedData std_data = standardize_by_group(data);

  const FitResult fit = fit_method(method, std_data.data, lambda, gamma, tau, opts, epsilon);
  write_coefficients_csv(data.covariate_names(), group_ids(data), fit.B,
                         out_path(cfg, "coef_out", "coefficients.csv"));
  std::cout << "method = " << method_name(method) << "\nlambda = " << format_double(lambda)
            << "\ngamma = " << format_double(gamma)
            << "\nobjective = " << format_double(fit.objective_trace.back())
            << "\niterations = " << fit.iterations
            << "\nconverged = " << (fit.converged ? "true" : "false") << "\n";
  return 0;
}

int cmd_cv(const RunConfig& cfg) {
  const GroupedDataset data = read_dataset_csv(cfg.require_string("data"));
  const Method method = parse_method(cfg.require_string("method"));
  const FusionWeights tau = tau_from_config(cfg, data);
  const SolverOptions opts = solver_options(cfg, 2000, 1e-9);
  const double epsilon = cfg.get_double("epsilon", 1e-3);

  CvGrid grid;
  grid.folds = cfg.get_int("folds", 10);
  grid.seed = cfg.get_seed("seed", 1);
  grid.stratify_by_group = cfg.get_bool("stratify", true);
  grid.lambdas = cfg.get_double_list("lambdas", {});
  if (grid.lambdas.empty()) {
    const StandardizedData std_data = standardize_by_group(data);
    grid.lambdas = make_lambda_grid(std_data.data, cfg.get_int("n_lambda", 30),
                                    cfg.get_double("lambda_min_ratio", 0.001));
  }
  grid.gammas = cfg.get_double_list("gammas", {});
  if (grid.gammas.empty()) {
    const double scale = static_cast<double>(data.total_n()) / data.K();
    for (double f : cfg.get_double_list("gamma_factors", {0.0, 0.01, 0.1, 1.0, 10.0}))
      grid.gammas.push_back(f * scale);
  }

  const int threads = cfg.get_int("threads", detail::default_threads());
  const CvResult cv = kfold_cv(data, method, grid, tau, opts, epsilon, threads);
  write_cv_table_csv(cv, out_path(cfg, "cv_out", "cv_table.csv"));
  std::cout << "selected_lambda = " << format_double(cv.best_lambda)
            << "\nselected_gamma = " << format_double(cv.best_gamma) << "\n";
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  SimulationConfig sim = simulation_config(cfg);

  ComparisonSettings settings;
  settings.methods.clear();
  for (const auto& name : cfg.get_string_list(
           "methods", {"fused_l2", "pooled", "subgroupwise"}))
    settings.methods.push_back(parse_method(name));
  settings.replicates = cfg.get_int("replicates", 20);
  settings.folds = cfg.get_int("folds", 10);
  settings.n_lambda = cfg.get_int("n_lambda", 30);
  settings.lambda_min_ratio = cfg.get_double("lambda_min_ratio", 0.001);
  settings.gamma_factors =
      cfg.get_double_list("gamma_factors", {0.0, 0.01, 0.1, 1.0, 10.0});
  settings.train_fraction = cfg.get_double("train_fraction", 0.8);
  settings.tau_scheme = parse_tau_scheme(cfg.get_string("tau_scheme", "uniform"));
  settings.tau_alpha = cfg.get_double("tau_alpha", 0.1);
  settings.epsilon = cfg.get_double("epsilon", 1e-3);
  settings.solver.max_iter = cfg.get_int("max_iter", 500);
  settings.solver.tol = cfg.get_double("tol", 1e-7);
  settings.threads = cfg.get_int("threads", detail::default_threads());

  const std::string sweep = cfg.get_string("sweep", "k0");
  std::vector<double> values;
  if (sweep == "k0") {
    std::vector<double> all;
    for (int v = 1; v <= sim.K; ++v) all.push_back(v);
    values = cfg.get_double_list("k0_values", all);
  } else if (sweep == "n") {
    values = cfg.get_double_list("n_values", {});
    if (values.empty()) throw ValidationError("sweep = n requires n_values");
  } else {
    throw ValidationError("sweep must be 'k0' or 'n'");
  }

  std::vector<std::pair<std::string, ComparisonReport>> sweeps;
  for (double v : values) {
    SimulationConfig point = sim;
    if (sweep == "k0")
      point.K0 = static_cast<int>(v);
    else
      point.n_total = static_cast<int>(v);
    point.validate();
    ComparisonReport report = run_comparison(point, settings);
    const std::string label =
        std::to_string(static_cast<long long>(v));
    for (const MethodSummary& s : summarize(report, settings.methods)) {
      std::cout << sweep << "=" << label << " " << method_name(s.method)
                << ": weighted_rmse " << format_double(s.mean_wrmse) << " +- "
                << format_double(s.sd_wrmse) << ", auroc " << format_double(s.mean_auroc)
                << ", runtime " << format_double(s.mean_runtime) << "s, ok "
                << s.n_ok << "/" << settings.replicates << "\n";
    }
    sweeps.emplace_back(label, std::move(report));
  }
  write_report_csv(sweeps, out_path(cfg, "report_out", "report.csv"),
                   cfg.get_bool("report_runtime", false));
  return 0;
}

int cmd_weights(const RunConfig& cfg) {
  const GroupedDataset data = read_dataset_csv(cfg.require_string("data"));
  const std::string scheme = cfg.require_string("scheme");
  FusionWeights tau = FusionWeights::uniform(data.K());
  if (scheme == "manual") {
    const auto entries = read_pair_entries_csv(cfg.require_string("tau_file"));
    if (cfg.get_bool("tau_entries_are_distances", false))
      tau = tau_from_distances(full_distance_matrix(group_ids(data), entries));
    else
      tau = tau_manual(group_ids(data), entries);
  } else {
    tau = compute_tau(parse_tau_scheme(scheme), data, cfg.get_double("tau_alpha", 0.1));
  }
  write_tau_csv(group_ids(data), tau.tau(), out_path(cfg, "weights_out", "tau.csv"));
  std::cout << "groups = " << data.K() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    print_usage(std::cerr);
    return 1;
  }
  const std::string command = argv[1];
  try {
    const RunConfig cfg = RunConfig::from_args(argc, argv, 2);
    if (command == "simulate") return cmd_simulate(cfg);
    if (command == "fit") return cmd_fit(cfg);
    if (command == "cv") return cmd_cv(cfg);
    if (command == "compare") return cmd_compare(cfg);
    if (command == "weights") return cmd_weights(cfg);
    std::cerr << "error: unknown command '" << command << "'\n";
    print_usage(std::cerr);
    return 1;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
