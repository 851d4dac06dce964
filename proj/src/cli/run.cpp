#include "kolmo/cli/run.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "kolmo/bsde/model_io.hpp"
#include "kolmo/eval/convergence.hpp"
#include "kolmo/eval/metrics.hpp"
#include "kolmo/eval/sweeps.hpp"
#include "kolmo/linear_fk/linear_fk.hpp"
#include "kolmo/problems/registry.hpp"
#include "kolmo/util/errors.hpp"
#include "kolmo/util/files.hpp"

namespace kolmo::cli {
namespace {

namespace fs = std::filesystem;
using bsde::TrainConfig;
using problems::PdeProblem;
using sde::Scheme;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

const std::vector<std::string>& commands() {
  static const std::vector<std::string> kCommands = {"train",       "evaluate", "sweep",
                                                     "convergence", "linear",   "list-problems"};
  return kCommands;
}

std::string commented(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string out;
  while (std::getline(in, line)) out += "# " + line + "\n";
  return out;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

// Writes files into the run directory with the config echo attached.
class RunOutput {
 public:
  RunOutput(fs::path dir, std::string echo) : dir_(std::move(dir)), echo_(std::move(echo)) {
    util::write_file_atomic(dir_ / "config.echo", echo_);
  }

  const fs::path& dir() const { return dir_; }

  void csv(const std::string& name, const std::string& body) const {
    util::write_file_atomic(dir_ / name, commented(echo_) + body);
  }
  // Model readers stop after the last network, so the echo can trail it.
  void model(const std::string& name, const std::string& body) const {
    util::write_file_atomic(dir_ / name, body + commented(echo_));
  }
  void report(const std::string& body) const {
    util::write_file_atomic(dir_ / "report.txt", body + "\n[config]\n" + echo_);
  }

 private:
  fs::path dir_;
  std::string echo_;
};

nn::InitScaling parse_init(const std::string& name) {
  if (name == "fanin") return nn::InitScaling::kFanIn;
  if (name == "unit") return nn::InitScaling::kUnit;
  throw ConfigError("key 'init' must be fanin or unit, got '" + name + "'");
}

Scheme scheme_of(const RunConfig& config) {
  try {
    return sde::parse_scheme(config.get_string("scheme"));
  } catch (const ContractError& e) {
    throw ConfigError(std::string("key 'scheme': ") + e.what());
  }
}

std::string curve_text(const bsde::ExperimentReport& report) {
  std::ostringstream s;
  bsde::write_curve_csv(report, s);
  return s.str();
}

void add_reference_lines(std::ostringstream& report, const PdeProblem& problem, const Vector& probe,
                         double estimate) {
  for (const problems::ReferenceValue& ref : problem.references) {
    if (ref.time != 0.0 || ref.point.size() != probe.size() || !ref.point.isApprox(probe)) continue;
    report << "reference: " << fmt(ref.value) << " (" << ref.source << ")\n";
    report << "relative_error: " << fmt(std::abs(estimate - ref.value) / std::abs(ref.value)) << '\n';
  }
  if (problem.has_exact()) {
    const double exact = problem.exact(probe, 0.0);
    report << "exact: " << fmt(exact) << '\n';
    if (exact != 0.0) report << "relative_error: " << fmt(std::abs(estimate - exact) / std::abs(exact)) << '\n';
  }
}

Vector probe_of(const TrainConfig& config, const PdeProblem& problem) {
  return config.probe.size() > 0 ? config.probe : problem.x0;
}

int cmd_list_problems(std::ostream& out) {
  out << problems::registry_table();
  return kExitOk;
}

int cmd_train(const RunConfig& config, const RunOutput& output, std::ostream& out) {
  const Scheme scheme = scheme_of(config);
  const PdeProblem problem = make_problem(config);
  const TrainConfig train = make_train_config(config, problem, scheme);
  const int repeats = config.get_int("repeats");
  const Vector probe = probe_of(train, problem);

  std::vector<bsde::TrainResult> results;
  try {
    results = bsde::train_seeds(problem, scheme, train, repeats, config.get_int("jobs"));
  } catch (const bsde::TrainingAborted& e) {
    const bsde::TrainResult& partial = e.partial();
    output.csv("curve.csv", curve_text(partial.report));
    output.model("model.bin", bsde::serialize_model(partial.model));
    std::ostringstream report;
    report << "status: diverged\nstep: " << e.step() << "\nseed: " << partial.report.seed << "\nmessage: " << e.what()
           << "\nlast_estimate: " << fmt(partial.report.final_estimate) << '\n';
    output.report(report.str());
    throw;
  }

  std::vector<double> finals;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const bsde::ExperimentReport& r = results[k].report;
    finals.push_back(r.final_estimate);
    output.csv(k == 0 ? "curve.csv" : "curve." + std::to_string(r.seed) + ".csv", curve_text(r));
  }
  output.model("model.bin", bsde::serialize_model(results.front().model));
  const bsde::RepeatSummary summary = bsde::summarize(finals);

  std::ostringstream report;
  report << "status: ok\nproblem: " << problem.name << "\nscheme: " << sde::scheme_name(scheme) << '\n';
  for (const bsde::TrainResult& r : results) {
    report << "seed " << r.report.seed << ": final_estimate " << fmt(r.report.final_estimate) << " wall_s "
           << fmt(r.report.wall_s) << '\n';
  }
  report << "final_estimate: " << fmt(summary.mean) << '\n';
  if (repeats > 1) report << "std: " << fmt(summary.std) << "\nsem: " << fmt(summary.sem) << '\n';
  add_reference_lines(report, problem, probe, summary.mean);
  output.report(report.str());

  out << "final_estimate " << fmt(summary.mean);
  if (repeats > 1) out << " +- " << fmt(summary.std) << " (" << repeats << " seeds)";
  out << '\n';
  return kExitOk;
}

int cmd_evaluate(const RunConfig& config, const RunOutput& output, std::ostream& out) {
  if (!config.has_value("model")) throw ConfigError("key 'model' is required for evaluate");
  const bsde::DeepBsdeModel model = bsde::load_model(config.get_string("model"));
  const PdeProblem problem = make_problem(config, model.spec().dim);
  const TrainConfig train = make_train_config(config, problem, model.spec().scheme);
  const Vector probe = probe_of(train, problem);
  const double g0 = model.predict_g0(probe);

  std::ostringstream report;
  report << "problem: " << problem.name << "\nscheme: " << sde::scheme_name(model.spec().scheme)
         << "\nestimate: " << fmt(g0) << '\n';
  add_reference_lines(report, problem, probe, g0);
  if (problem.has_exact()) {
    const Matrix probes = eval::uniform_probes(config.get_int("probes"), problem.dim, problem.domain_lo,
                                               problem.domain_hi, train.seed);
    const eval::ErrorSummary err =
        eval::avg_relative_error(model.predict_g0_batch(probes), eval::exact_reference(problem, probes));
    report << "avg_relative_error: " << fmt(err.mean) << " over " << err.probes << " probes\n";
    out << "avg_relative_error " << fmt(err.mean) << '\n';
  }
  output.report(report.str());
  out << "estimate " << fmt(g0) << '\n';
  return kExitOk;
}

int cmd_sweep(const RunConfig& config, const RunOutput& output, std::ostream& out) {
  const std::vector<int> dims = config.get_int_list("dims");
  if (dims.empty()) throw ConfigError("key 'dims' needs at least one dimension");
  const std::string kind = config.get_string("kind");

  if (kind == "walltime") {
    const std::vector<std::string> names = split_names(config.get_string("walltime_problems"));
    std::vector<eval::ProblemFactory> factories;
    for (const std::string& name : names) {
      problems::build_problem(name);
      factories.push_back([name, &config](int d) {
        RunConfig c = config;
        c.set("problem", name);
        return make_problem(c, d);
      });
    }
    RunConfig first = config;
    first.set("problem", names.empty() ? config.get_string("problem") : names.front());
    const PdeProblem probe_problem = make_problem(first, dims.front());
    TrainConfig train = make_train_config(first, probe_problem, Scheme::kEm);
    if (train.points == 0) train.points = 4096;
    if (config.is_default("steps")) train.steps = 15000;
    const eval::WallTimeResult result = eval::wall_time_scaling(factories, names, dims, train);
    std::ostringstream csv;
    csv << "problem,d,wall_s\n";
    for (const eval::WallTimeRow& r : result.rows) csv << r.problem << ',' << r.d << ',' << fmt(r.wall_s) << '\n';
    output.csv("walltime.csv", csv.str());
    std::ostringstream report;
    if (result.fit) {
      std::ostringstream fit;
      eval::write_fit_csv(*result.fit, fit);
      output.csv("fit.csv", fit.str());
      report << "slope: " << fmt(result.fit->slope) << '\n';
      out << "walltime_slope " << fmt(result.fit->slope) << '\n';
    } else {
      report << "fit_refused: " << result.fit_refusal << '\n';
      out << "fit refused: " << result.fit_refusal << '\n';
    }
    output.report(report.str());
    return kExitOk;
  }
  if (kind != "complexity") throw ConfigError("key 'kind' must be complexity or walltime, got '" + kind + "'");

  const Scheme scheme = scheme_of(config);
  const PdeProblem first = make_problem(config, dims.front());
  if (!first.has_exact()) {
    throw ConfigError("problem '" + first.name +
                      "' has no exact solution, so key 'problem' cannot drive a complexity sweep");
  }
  eval::SweepConfig sweep;
  sweep.train = make_train_config(config, first, scheme);
  sweep.probes = config.get_int("probes");
  sweep.repeats = config.get_int("repeats");
  std::vector<int> counts = config.get_int_list("point_counts");
  if (counts.empty() || !std::is_sorted(counts.begin(), counts.end())) {
    throw ConfigError("key 'point_counts' must be a non-empty ascending list");
  }
  auto factory = [&config](int d) { return make_problem(config, d); };
  const eval::SweepResult result = eval::complexity_sweep(factory, scheme, dims, counts,
                                                          config.get_double("eps_target"), sweep,
                                                          config.get_int("jobs"));
  std::ostringstream csv;
  eval::write_sweep_csv(result, csv);
  output.csv("sweep.csv", csv.str());

  std::ostringstream report;
  for (std::size_t k = 0; k < result.dims.size(); ++k) {
    report << "d " << result.dims[k] << ": P* " << (result.p_star[k] ? std::to_string(result.p_star[k]) : "censored")
           << '\n';
  }
  if (result.fit) {
    std::ostringstream fit;
    eval::write_fit_csv(*result.fit, fit);
    output.csv("fit.csv", fit.str());
    report << "slope: " << fmt(result.fit->slope) << "\nintercept: " << fmt(result.fit->intercept) << '\n';
    out << "complexity_slope " << fmt(result.fit->slope) << '\n';
  } else {
    report << "fit_refused: " << result.fit_refusal << '\n';
    out << "fit refused: " << result.fit_refusal << '\n';
  }
  output.report(report.str());
  if (!result.censored_dims.empty()) {
    out << "eps_target not reached for " << result.censored_dims.size() << " dimension(s)\n";
    return kExitTargetUnreached;
  }
  return kExitOk;
}

int cmd_convergence(const RunConfig& config, const RunOutput& output, std::ostream& out) {
  const std::string target = config.get_string("target");
  const std::uint64_t seed = static_cast<std::uint64_t>(config.get_int("seed"));
  std::vector<double> taus = config.get_double_list("taus");
  std::ostringstream report;

  if (target == "gbm") {
    if (taus.empty()) taus = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
    const Scheme scheme = scheme_of(config);
    eval::StrongOrderResult result;
    try {
      result = eval::strong_order_fit(eval::Gbm1d{}, scheme, taus, config.get_int("paths"), seed);
    } catch (const FitRefused& e) {
      throw ConfigError(std::string("key 'taus': ") + e.what());
    }
    std::ostringstream csv;
    csv.precision(17);
    csv << "tau,rms_error\n";
    for (std::size_t k = 0; k < result.taus.size(); ++k) csv << result.taus[k] << ',' << result.rms_errors[k] << '\n';
    output.csv("convergence.csv", csv.str());
    std::ostringstream fit;
    eval::write_fit_csv(result.fit, fit);
    output.csv("fit.csv", fit.str());
    report << "scheme: " << sde::scheme_name(scheme) << "\nslope: " << fmt(result.fit.slope) << '\n';
    out << "strong_order_slope " << fmt(result.fit.slope) << '\n';
  } else if (target == "ou") {
    if (taus.empty()) taus = {0.4, 0.2, 0.1, 0.05};
    eval::StationaryConfig sc;
    sc.n_steps = config.get_int("n_steps");
    sc.burn_in = config.get_int("burn_in");
    sc.chains = config.get_int("chains");
    const eval::StationaryFit result = eval::lm_stationary_fit(taus, sc, seed);
    std::ostringstream csv;
    csv.precision(17);
    csv << "scheme,tau,variance,error,std_error,dropped\n";
    auto rows = [&csv](const char* name, const std::vector<eval::StationaryPoint>& points) {
      for (const eval::StationaryPoint& p : points) {
        csv << name << ',' << p.tau << ',' << p.variance << ',' << p.error << ',' << p.std_error << ','
            << (p.dropped ? 1 : 0) << '\n';
      }
    };
    rows("lm", result.lm_points);
    rows("em", result.em_points);
    output.csv("convergence.csv", csv.str());
    auto fit_line = [&](const char* name, const std::optional<eval::ScalingFit>& fit, const std::string& refusal) {
      if (fit) {
        report << name << "_slope: " << fmt(fit->slope) << '\n';
        out << name << "_slope " << fmt(fit->slope) << '\n';
      } else {
        report << name << "_fit_refused: " << refusal << '\n';
        out << name << " fit refused: " << refusal << '\n';
      }
    };
    fit_line("lm", result.lm_fit, result.lm_refusal);
    fit_line("em", result.em_fit, result.em_refusal);
    for (const std::string& w : result.warnings) report << "warning: " << w << '\n';
  } else {
    throw ConfigError("key 'target' must be gbm or ou, got '" + target + "'");
  }
  output.report(report.str());
  return kExitOk;
}

int cmd_linear(const RunConfig& config, const RunOutput& output, std::ostream& out) {
  const PdeProblem problem = make_problem(config);
  linear_fk::LinearFkConfig lc = linear_fk::default_linear_config(problem);
  lc.scheme = scheme_of(config);
  lc.seed = static_cast<std::uint64_t>(config.get_int("seed"));
  lc.batch = config.get_int("batch");
  lc.checkpoint_every = config.get_int("checkpoint_every");
  lc.init = parse_init(config.get_string("init"));
  lc.pilot_init = config.get_bool("pilot_init");
  if (config.has_value("schedule")) {
    if (config.has_value("lr")) throw ConfigError("keys 'lr' and 'schedule' are mutually exclusive");
    lc.schedule = parse_schedule(config.get_string("schedule"), lc.scheme);
  }

  linear_fk::LinearResult result;
  result = linear_fk::train_linear(problem, lc);
  result.report.config_echo = config.echo();
  output.csv("curve.csv", curve_text(result.report));
  output.model("model.bin", linear_fk::serialize_linear_model(result.model));

  const Matrix probes = eval::uniform_probes(config.get_int("eval_probes"), problem.dim, lc.lo, lc.hi, lc.seed);
  Vector reference(probes.rows());
  std::string source;
  if (problem.has_exact()) {
    reference = eval::exact_reference(problem, probes);
    source = "exact";
  } else if (problem.name == "gbm") {
    const linear_fk::GbmParams gp = linear_fk::GbmParams::from_problem(problem);
    const long n_mc = config.get_int("n_mc");
    std::ostringstream key;
    key.precision(17);
    key << "gbm d=" << problem.dim << " r=" << gp.r << " strike=" << problem.params.at("strike") << " T=" << gp.horizon;
    const std::vector<double> values = linear_fk::cached_references(
        config.get_string("cache_dir"), key.str(), probes, n_mc, lc.seed,
        [&gp, n_mc](const Vector& x, std::uint64_t s) { return linear_fk::gbm_reference(x, 0.0, gp, n_mc, s).value; });
    reference = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    source = "monte-carlo n_mc=" + std::to_string(n_mc);
  } else {
    throw ConfigError("problem '" + problem.name + "' has no reference for the linear solver");
  }
  const eval::ErrorSummary err = eval::avg_relative_error(result.model.predict_batch(probes), reference);
  const double at_x0 = result.model.predict(problem.x0);

  std::ostringstream report;
  report << "problem: " << problem.name << "\nestimate_at_x0: " << fmt(at_x0) << "\navg_relative_error: "
         << fmt(err.mean) << "\nprobes: " << err.probes << "\nrejected: " << err.rejected << "\nreference: " << source
         << "\nwall_s: " << fmt(result.report.wall_s) << '\n';
  output.report(report.str());
  out << "avg_relative_error " << fmt(err.mean) << "\nestimate_at_x0 " << fmt(at_x0) << '\n';
  return kExitOk;
}

// Rejects bad keys before a run directory is created.
void preflight(const RunConfig& config, const std::string& command) {
  if (command == "evaluate") {
    if (!config.has_value("model")) throw ConfigError("key 'model' is required for evaluate");
    return;
  }
  if (command == "convergence" || (command == "sweep" && config.get_string("kind") == "walltime")) return;
  const Scheme scheme = scheme_of(config);
  const PdeProblem problem = make_problem(config);
  if (command == "train" || command == "sweep") make_train_config(config, problem, scheme);
}

int dispatch(const RunConfig& config, std::ostream& out) {
  const std::string& command = config.get_string("command");
  if (command == "list-problems") return cmd_list_problems(out);
  if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
    throw ConfigError(command.empty() ? "no command given; expected one of train, evaluate, sweep, convergence, "
                                        "linear, list-problems"
                                      : "key 'command' has unknown value '" + command + "'");
  }
  preflight(config, command);
  const RunOutput output(make_run_dir(config.get_string("out"), command, config.get_int("seed")), config.echo());
  int code = kExitOk;
  try {
    if (command == "train") code = cmd_train(config, output, out);
    if (command == "evaluate") code = cmd_evaluate(config, output, out);
    if (command == "sweep") code = cmd_sweep(config, output, out);
    if (command == "convergence") code = cmd_convergence(config, output, out);
    if (command == "linear") code = cmd_linear(config, output, out);
  } catch (...) {
    out << "output " << output.dir().string() << '\n';
    throw;
  }
  out << "output " << output.dir().string() << '\n';
  return code;
}

}  // namespace

RunConfig resolve_config(const std::vector<std::string>& args) {
  CLI::App app{"Deep BSDE solvers for high-dimensional parabolic PDEs", "kolmo"};
  app.set_help_all_flag("--help-all", "Print help for every subcommand");
  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key = value file with [section] headers");
  app.add_option("--set", sets, "problem parameter override key=value (repeatable)");
  std::map<std::string, std::string> flag_values;
  for (const KeySpec& spec : config_schema()) {
    if (spec.key == "command") continue;
    app.add_option("--" + spec.key, flag_values[spec.key], spec.help)->type_name(type_name(spec.type));
  }
  std::vector<CLI::App*> subcommands;
  for (const std::string& name : commands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->fallthrough();
    sub->allow_extras();
    subcommands.push_back(sub);
  }
  app.require_subcommand(0, 1);
  app.allow_extras();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  std::vector<std::string> extras = app.remaining();
  for (CLI::App* sub : subcommands) {
    for (const std::string& e : sub->remaining()) extras.push_back(e);
  }
  for (const std::string& e : extras) {
    if (e.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + e + "'");
    const std::string key = e.substr(2, e.find('=') == std::string::npos ? std::string::npos : e.find('=') - 2);
    std::string msg = "unknown key '" + key + "'";
    if (auto s = suggest_key(key)) msg += "; did you mean '" + *s + "'?";
    throw ConfigError(msg);
  }

  RunConfig config;
  if (!config_path.empty()) load_config(config_path, config);
  apply_environment(config);
  for (const KeySpec& spec : config_schema()) {
    if (spec.key != "command" && app.count("--" + spec.key) > 0) config.set(spec.key, flag_values[spec.key]);
  }
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    config.set_problem_param(s.substr(0, eq), s.substr(eq + 1));
  }
  for (CLI::App* sub : subcommands) {
    if (sub->parsed()) config.set("command", sub->get_name());
  }
  if (config.get_bool("entropy_seed")) {
    std::random_device entropy;
    config.set("seed", std::to_string(entropy() & 0x7fffffff));
    config.set("entropy_seed", "false");
  }
  if (config.get_int("jobs") < 1) throw ConfigError("key 'jobs' must be >= 1");
  if (config.get_int("repeats") < 1) throw ConfigError("key 'repeats' must be >= 1");
  if (config.get_int("seed") < 0) throw ConfigError("key 'seed' must be >= 0");
  return config;
}

PdeProblem make_problem(const RunConfig& config, int dim_override) {
  problems::Overrides overrides = config.problem_params();
  const std::map<std::string, std::string> mapped = {{"N", "N"},   {"T", "T"},   {"steps", "steps"},
                                                     {"lr", "lr"}, {"lo", "lo"}, {"hi", "hi"}};
  for (const auto& [key, param] : mapped) {
    if (config.has_value(key)) overrides[param] = config.get_double(key);
  }
  if (dim_override > 0) overrides["d"] = dim_override;
  try {
    return problems::build_problem(config.get_string("problem"), overrides);
  } catch (const RegistryError& e) {
    throw ConfigError(std::string("key 'problem': ") + e.what());
  }
}

std::vector<bsde::LrSegment> parse_schedule(const std::string& text, Scheme scheme) {
  if (text == "long") return bsde::long_run_schedule(scheme);
  std::vector<bsde::LrSegment> out;
  for (const std::string& item : split_names(text)) {
    const auto colon = item.find(':');
    char* end_step = nullptr;
    char* end_lr = nullptr;
    if (colon == std::string::npos) throw ConfigError("key 'schedule' expects start:lr pairs, got '" + item + "'");
    const std::string step_text = item.substr(0, colon);
    const std::string lr_text = item.substr(colon + 1);
    const long start = std::strtol(step_text.c_str(), &end_step, 10);
    const double lr = std::strtod(lr_text.c_str(), &end_lr);
    if (step_text.empty() || *end_step != '\0' || lr_text.empty() || *end_lr != '\0') {
      throw ConfigError("key 'schedule' expects start:lr pairs, got '" + item + "'");
    }
    out.push_back({static_cast<int>(start), lr});
  }
  if (out.empty()) throw ConfigError("key 'schedule' is empty");
  return out;
}

TrainConfig make_train_config(const RunConfig& config, const PdeProblem& problem, Scheme scheme) {
  TrainConfig t = bsde::default_train_config(problem);
  t.seed = static_cast<std::uint64_t>(config.get_int("seed"));
  t.batch = config.get_int("batch");
  if (config.has_value("schedule")) {
    if (config.has_value("lr")) throw ConfigError("keys 'lr' and 'schedule' are mutually exclusive");
    t.schedule = parse_schedule(config.get_string("schedule"), scheme);
  }
  try {
    t.sampler = bsde::parse_sampler(config.get_string("sampler"));
    t.milstein_mode = bsde::parse_milstein_mode(config.get_string("milstein_mode"));
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  t.points = config.get_int("points");
  t.checkpoint_every = config.get_int("checkpoint_every");
  t.init = parse_init(config.get_string("init"));
  t.pilot_init = config.get_bool("pilot_init");
  const std::vector<double> probe = config.get_double_list("probe");
  if (probe.size() == 1) {
    t.probe = Vector::Constant(problem.dim, probe.front());
  } else if (static_cast<int>(probe.size()) == problem.dim) {
    t.probe = Eigen::Map<const Vector>(probe.data(), problem.dim);
  } else if (!probe.empty()) {
    throw ConfigError("key 'probe' needs 1 or " + std::to_string(problem.dim) + " values, got " +
                      std::to_string(probe.size()));
  }
  t.validate();
  return t;
}

fs::path make_run_dir(const fs::path& out, const std::string& command, std::uint64_t seed) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream stamp;
  stamp << std::put_time(&utc, "%Y%m%dT%H%M%SZ");
  const std::string base = command + "-" + stamp.str() + "-" + std::to_string(seed);
  fs::create_directories(out);
  fs::path dir = out / base;
  for (int k = 2; !fs::create_directory(dir); ++k) dir = out / (base + "-" + std::to_string(k));
  return dir;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig config = resolve_config(args);
    return dispatch(config, out);
  } catch (const HelpRequested& help) {
    out << help.text;
    return kExitOk;
  } catch (const TrainingDiverged& e) {
    err << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const BlowUpError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const NonFiniteGradient& e) {
    err << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const RegistryError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CapabilityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidGrid& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace kolmo::cli
