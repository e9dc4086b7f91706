// nitrom: data generation, training, baselines and evaluation.
//
// Exit codes: 0 success, 2 usage/config error, 3 numerical failure.

#include "nitrom/evaluation.hpp"
#include "nitrom/io.hpp"
#include "nitrom/trainer.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>

using namespace nitrom;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct GenerateArgs {
  ProtocolSpec spec;
  std::string out;
  bool no_states = false;
};

struct TrainArgs {
  std::string config, data, out, log;
};

struct BaselineArgs {
  std::string method, data, out, benchmark, order, preset;
  Index r = 0;
  double lambda = -1.0;
};

struct EvaluateArgs {
  std::vector<std::string> models;
  std::string data, out, traces;
  int substeps = 10;
};

std::string normalize_protocol(const std::string &benchmark, const std::string &protocol) {
  const std::string prefix = benchmark + "-";
  if (protocol.rfind(prefix, 0) == 0) return protocol.substr(prefix.size());
  return protocol;
}

int run_generate(GenerateArgs a) {
  a.spec.protocol = normalize_protocol(a.spec.benchmark, a.spec.protocol);
  if (a.spec.protocol != "train" && a.spec.protocol != "test" && a.spec.protocol != "sinusoid")
    throw ConfigError("unknown protocol '" + a.spec.protocol + "'");
  a.spec.record_states = !a.no_states;
  const Dataset ds = generate_dataset(a.spec);
  save_dataset(a.out, ds);
  std::cerr << "wrote " << ds.trajectories.size() << " trajectories to " << a.out << "\n";
  return 0;
}

void write_log(const std::string &path, const std::vector<IterationRecord> &log) {
  std::ostringstream os;
  write_log_csv(os, log);
  write_text(path, os.str());
}

int run_train(const TrainArgs &a) {
  const TrainingConfig cfg = load_config(a.config);
  const std::string data_text = read_text(a.data);
  const Dataset ds = dataset_from(parse_json(data_text, a.data));
  if (ds.benchmark != cfg.benchmark)
    throw ConfigError("config benchmark '" + cfg.benchmark + "' does not match the data ('" +
                      ds.benchmark + "')");
  std::unique_ptr<FullOrderSystem> sys;
  if (cfg.init == "pod-galerkin")
    sys = make_system(ds.benchmark, ds.preset.empty() ? cfg.preset : ds.preset);

  std::vector<IterationRecord> progress;
  TrainingResult res;
  try {
    res = train(cfg, {ds.trajectories, ds.c, ds.b}, sys.get(), &progress);
  } catch (const std::runtime_error &) {
    write_log(a.log, progress);
    throw;
  }
  ModelFile mf;
  mf.point = res.point;
  mf.c_r = res.c_r;
  mf.kind = "nitrom";
  mf.benchmark = ds.benchmark;
  mf.config_hash = config_hash(cfg);
  mf.data_hash = hex64(fnv1a64(data_text));
  mf.unstable = res.unstable;
  save_model(a.out, mf);
  write_log(a.log, res.log);
  std::cerr << "initial cost " << format_double(res.initial_cost) << ", final cost "
            << format_double(res.final_cost) << ", " << res.log.size() << " log rows\n";
  if (res.unstable) std::cerr << "warning: trained model is linearly unstable\n";
  return 0;
}

int run_baseline(const BaselineArgs &a) {
  const std::string data_text = read_text(a.data);
  const Dataset ds = dataset_from(parse_json(data_text, a.data));
  const std::string benchmark = a.benchmark.empty() ? ds.benchmark : a.benchmark;
  TrainingConfig defaults = TrainingConfig::defaults_for(benchmark);
  const PolyOrder order = a.order.empty() ? defaults.order : parse_order(a.order);
  const Matrix snaps = weighted_snapshots(ds.trajectories);
  if (a.r < 1 || a.r > std::min(snaps.rows(), snaps.cols()))
    throw ConfigError("--r must lie in [1, min(n, snapshots)]");
  Eigen::BDCSVD<Matrix> svd(snaps);
  const Vector &sv = svd.singularValues();
  if (sv(a.r - 1) <= std::max(snaps.rows(), snaps.cols()) * sv(0) * 1e-14)
    throw ConfigError("--r exceeds the snapshot rank");
  const PodResult pod = compute_pod(snaps, a.r);

  ModelFile mf;
  mf.point.phi = pod.modes;
  mf.point.psi = pod.modes;
  mf.kind = a.method;
  mf.benchmark = benchmark;
  mf.data_hash = hex64(fnv1a64(data_text));
  Json settings;
  settings["method"] = a.method;
  settings["r"] = a.r;
  settings["order"] = to_string(order);
  if (a.method == "pod-galerkin") {
    if (a.benchmark.empty()) throw ConfigError("pod-galerkin requires --benchmark");
    const std::string preset = !a.preset.empty() ? a.preset : !ds.preset.empty() ? ds.preset : "ci";
    const auto sys = make_system(benchmark, preset);
    if (sys->state_dim() != pod.modes.rows())
      throw ConfigError("--benchmark/preset state dimension does not match the data");
    GalerkinResult g = petrov_galerkin_project(*sys, pod.modes, pod.modes);
    mf.point.rom = std::move(g.rom);
    settings["preset"] = preset;
  } else if (a.method == "opinf") {
    const double lambda = a.lambda >= 0.0 ? a.lambda : defaults.lambda;
    OpInfResult fit =
        operator_inference(reduce_for_opinf(ds.trajectories, pod.modes), order, lambda);
    bool forced = false;
    for (const auto &t : ds.trajectories) forced = forced || !is_unforced(t.input);
    if (!forced && ds.b.size() > 0) fit.rom.b = pod.modes.transpose() * ds.b;
    if (fit.rank_deficient)
      std::cerr << "note: regression is rank deficient (rank " << fit.rank << " of "
                << fit.unknowns << "); minimum-norm solution used\n";
    mf.point.rom = std::move(fit.rom);
    settings["lambda"] = lambda;
  } else {
    throw ConfigError("unknown --method '" + a.method + "'");
  }
  mf.c_r = ds.c * pod.modes;
  mf.config_hash = hex64(fnv1a64(settings.dump()));
  save_model(a.out, mf);
  return 0;
}

int run_evaluate(const EvaluateArgs &a) {
  const Dataset ds = load_dataset(a.data);
  if (a.substeps < 1) throw ConfigError("--substeps must be >= 1");
  std::vector<std::string> names;
  std::vector<ErrorTrace> traces;
  std::map<std::string, int> seen;
  for (const auto &path : a.models) {
    const ModelFile mf = load_model(path);
    if (mf.point.n() != ds.c.cols() || mf.c_r.rows() != ds.c.rows() ||
        mf.point.m() != input_dim(ds.trajectories.front().input))
      throw DimensionError("model '" + path + "' is incompatible with the data dimensions");
    std::string name = std::filesystem::path(path).stem().string();
    if (seen[name]++ > 0) name += "_" + std::to_string(seen[name]);
    names.push_back(name);
    traces.push_back(error_trace(mf.point, mf.c_r, ds.trajectories, a.substeps));
  }
  std::ostringstream os;
  os << "t";
  for (const auto &n : names) os << ",e_" << n;
  os << "\n";
  const Vector &times = traces.front().times;
  for (Index i = 0; i < times.size(); ++i) {
    os << format_double(times(i));
    for (const auto &tr : traces) os << ',' << format_double(tr.e(i));
    os << "\n";
  }
  os << "mean";
  for (const auto &tr : traces) os << ',' << format_double(tr.mean);
  os << "\n";
  write_text(a.out, os.str());

  if (!a.traces.empty()) {
    const Index p = ds.c.rows();
    std::ostringstream ts;
    ts << "trajectory,t";
    for (Index k = 0; k < p; ++k) ts << ",y" << k << "_truth";
    for (const auto &n : names)
      for (Index k = 0; k < p; ++k) ts << ",y" << k << '_' << n;
    ts << "\n";
    for (std::size_t j = 0; j < ds.trajectories.size(); ++j) {
      const Trajectory &t = ds.trajectories[j];
      for (Index i = 0; i < t.samples(); ++i) {
        ts << j << ',' << format_double(t.times(i));
        for (Index k = 0; k < p; ++k) ts << ',' << format_double(t.y(k, i));
        for (const auto &tr : traces)
          for (Index k = 0; k < p; ++k) ts << ',' << format_double(tr.predictions[j](k, i));
        ts << "\n";
      }
    }
    write_text(a.traces, ts.str());
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Non-intrusive trajectory-based optimization of reduced-order models"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto *g = app.add_subcommand("generate-data", "Simulate a benchmark protocol");
  g->add_option("--benchmark", gen.spec.benchmark, "toy | cgl")->required();
  g->add_option("--protocol", gen.spec.protocol, "train | test | sinusoid")->required();
  g->add_option("--seed", gen.spec.seed, "PRNG seed")->required();
  g->add_option("--out", gen.out, "Dataset JSON path")->required();
  g->add_option("--preset", gen.spec.preset, "cgl grid: ci | full")->capture_default_str();
  g->add_option("--count", gen.spec.count, "Number of test trajectories");
  g->add_option("--t-final", gen.spec.t_final, "Final time");
  g->add_option("--samples", gen.spec.samples, "Samples per trajectory");
  g->add_option("--substeps", gen.spec.substeps, "RK4 steps per sample interval");
  g->add_option("--harmonic", gen.spec.harmonic, "Sinusoid frequency multiple k");
  g->add_option("--omega", gen.spec.omega, "Sinusoid base frequency");
  g->add_option("--amplitude", gen.spec.amplitude, "Sinusoid amplitude");
  g->add_flag("--no-states", gen.no_states, "Store outputs only");

  TrainArgs tr;
  auto *t = app.add_subcommand("train", "Train a NiTROM model");
  t->add_option("--config", tr.config, "Training config JSON")->required();
  t->add_option("--data", tr.data, "Training dataset JSON")->required();
  t->add_option("--out", tr.out, "Model JSON path")->required();
  t->add_option("--log", tr.log, "Iteration log CSV path")->required();

  BaselineArgs bl;
  auto *b = app.add_subcommand("baseline", "Fit a POD-Galerkin or OpInf model");
  b->add_option("--method", bl.method, "opinf | pod-galerkin")->required();
  b->add_option("--r", bl.r, "Model order")->required();
  b->add_option("--lambda", bl.lambda, "OpInf regularization");
  b->add_option("--data", bl.data, "Training dataset JSON")->required();
  b->add_option("--out", bl.out, "Model JSON path")->required();
  b->add_option("--benchmark", bl.benchmark, "toy | cgl (needed by pod-galerkin)");
  b->add_option("--order", bl.order, "linear | quadratic | cubic");
  b->add_option("--preset", bl.preset, "cgl grid for pod-galerkin");

  EvaluateArgs ev;
  auto *e = app.add_subcommand("evaluate", "Normalized testing error of models");
  e->add_option("--model", ev.models, "Model JSON path(s)")->required()->expected(1, -1);
  e->add_option("--data", ev.data, "Test dataset JSON")->required();
  e->add_option("--out", ev.out, "Error CSV path")->required();
  e->add_option("--traces", ev.traces, "Optional CSV of true and predicted outputs");
  e->add_option("--substeps", ev.substeps, "RK4 steps per sample interval")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &err) {
    return app.exit(err);
  } catch (const CLI::ParseError &err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (*g) return run_generate(gen);
    if (*t) return run_train(tr);
    if (*b) return run_baseline(bl);
    if (*e) return run_evaluate(ev);
  } catch (const std::invalid_argument &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error &err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
