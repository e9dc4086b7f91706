#pragma once

// JSON persistence for datasets, models and training configs; FNV-1a hashes
// for provenance; CSV helpers.

#include "nitrom/trainer.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace nitrom {

using Json = nlohmann::ordered_json;

inline constexpr const char *kToolVersion = "nitrom 1.0.0";
inline constexpr int kFormatVersion = 1;

/// Malformed or inconsistent file contents.
class FormatError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

inline Json parse_json(const std::string &text, const std::string &what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception &e) {
    throw FormatError(what + ": invalid JSON (" + e.what() + ")");
  }
}

inline std::string dump(const Json &j) { return j.dump() + "\n"; }

// ---------------------------------------------------------------------------
// Arrays

inline Json to_json(const Vector &v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const Matrix &m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline double as_double(const Json &j, const char *what) {
  if (!j.is_number()) throw FormatError(std::string(what) + ": expected a number");
  return j.get<double>();
}

inline Vector vector_from(const Json &j, const char *what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = as_double(j[i], what);
  return v;
}

/// Row-major nested list; `cols` is needed when there are no rows.
inline Matrix matrix_from(const Json &j, const char *what, Index cols = -1) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": expected a nested array");
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix::Zero(0, std::max<Index>(cols, 0));
  const Index c = static_cast<Index>(j[0].size());
  Matrix m(rows, c);
  for (Index i = 0; i < rows; ++i) {
    const Json &row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c)
      throw FormatError(std::string(what) + ": ragged rows");
    for (Index k = 0; k < c; ++k) m(i, k) = as_double(row[static_cast<std::size_t>(k)], what);
  }
  return m;
}

/// r x r^k unfolding <-> nested r x r x ... x r list.
inline Json tensor_to_json(const Matrix &unfolding, Index r, int modes) {
  std::function<Json(Index, Index, int)> rec = [&](Index row, Index offset, int depth) -> Json {
    Json out = Json::array();
    for (Index k = 0; k < r; ++k) {
      const Index idx = offset * r + k;
      if (depth == 1) out.push_back(unfolding(row, idx));
      else out.push_back(rec(row, idx, depth - 1));
    }
    return out;
  };
  Json out = Json::array();
  for (Index i = 0; i < unfolding.rows(); ++i) out.push_back(rec(i, 0, modes));
  return out;
}

inline Matrix tensor_from(const Json &j, Index r, int modes, const char *what) {
  Index cols = 1;
  for (int k = 0; k < modes; ++k) cols *= r;
  Matrix out(r, cols);
  std::function<void(const Json &, Index, Index, int)> rec = [&](const Json &node, Index row,
                                                                Index offset, int depth) {
    if (!node.is_array() || static_cast<Index>(node.size()) != r)
      throw FormatError(std::string(what) + ": expected extent r at every level");
    for (Index k = 0; k < r; ++k) {
      const Json &child = node[static_cast<std::size_t>(k)];
      const Index idx = offset * r + k;
      if (depth == 1) out(row, idx) = as_double(child, what);
      else rec(child, row, idx, depth - 1);
    }
  };
  if (!j.is_array() || static_cast<Index>(j.size()) != r)
    throw FormatError(std::string(what) + ": expected r rows");
  for (Index i = 0; i < r; ++i) rec(j[static_cast<std::size_t>(i)], i, 0, modes);
  return out;
}

// ---------------------------------------------------------------------------
// Input descriptors

inline Json to_json(const InputSignal &s) {
  return std::visit(
      [](const auto &v) -> Json {
        using T = std::decay_t<decltype(v)>;
        Json j;
        if constexpr (std::is_same_v<T, signal::Zero>) {
          j["type"] = "zero";
          j["m"] = v.m;
        } else if constexpr (std::is_same_v<T, signal::Step>) {
          j["type"] = "step";
          j["amplitude"] = to_json(v.amplitude);
          j["start"] = v.start;
        } else if constexpr (std::is_same_v<T, signal::Impulse>) {
          j["type"] = "impulse";
          j["vector"] = to_json(v.vector);
        } else if constexpr (std::is_same_v<T, signal::Sinusoid>) {
          j["type"] = "sinusoid";
          j["amplitude"] = v.amplitude;
          j["frequency"] = v.frequency;
          j["phase"] = v.phase;
          j["direction"] = to_json(v.direction);
        } else {
          j["type"] = "sampled";
          j["times"] = to_json(v.times);
          j["values"] = to_json(v.values);
        }
        return j;
      },
      s);
}

inline InputSignal input_from(const Json &j) {
  if (!j.is_object() || !j.contains("type")) throw FormatError("input: missing type");
  const std::string type = j.at("type").get<std::string>();
  if (type == "zero") return signal::Zero{j.at("m").get<Index>()};
  if (type == "step")
    return signal::Step{vector_from(j.at("amplitude"), "step amplitude"),
                        as_double(j.at("start"), "step start")};
  if (type == "impulse") return signal::Impulse{vector_from(j.at("vector"), "impulse vector")};
  if (type == "sinusoid")
    return signal::Sinusoid{as_double(j.at("amplitude"), "amplitude"),
                            as_double(j.at("frequency"), "frequency"),
                            as_double(j.at("phase"), "phase"),
                            vector_from(j.at("direction"), "direction")};
  if (type == "sampled")
    return signal::Sampled{vector_from(j.at("times"), "sampled times"),
                           matrix_from(j.at("values"), "sampled values")};
  throw FormatError("input: unknown type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Datasets

inline Json to_json(const Dataset &ds) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["benchmark"] = ds.benchmark;
  j["protocol"] = ds.protocol;
  j["preset"] = ds.preset;
  j["seed"] = ds.seed;
  j["substeps"] = ds.substeps;
  j["C"] = to_json(ds.c);
  j["B"] = to_json(ds.b);
  Json trajs = Json::array();
  for (const auto &t : ds.trajectories) {
    Json tj;
    tj["alpha"] = t.alpha;
    tj["input"] = to_json(t.input);
    tj["times"] = to_json(t.times);
    tj["x0"] = to_json(t.x0);
    tj["Y"] = to_json(t.y);
    if (t.has_states()) tj["X"] = to_json(t.x);
    if (t.has_derivatives()) tj["dX"] = to_json(t.dx);
    trajs.push_back(std::move(tj));
  }
  j["trajectories"] = std::move(trajs);
  return j;
}

inline Dataset dataset_from(const Json &j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw FormatError("dataset: unsupported format_version");
    Dataset ds;
    ds.benchmark = j.at("benchmark").get<std::string>();
    ds.protocol = j.at("protocol").get<std::string>();
    ds.preset = j.value("preset", std::string());
    ds.seed = j.value("seed", std::uint64_t{0});
    ds.substeps = j.value("substeps", 10);
    const Json &traj_json = j.at("trajectories");
    if (!traj_json.is_array() || traj_json.empty())
      throw FormatError("dataset: trajectories must be a non-empty array");
    for (const auto &tj : traj_json) {
      Trajectory t;
      t.alpha = as_double(tj.at("alpha"), "alpha");
      t.input = input_from(tj.at("input"));
      t.times = vector_from(tj.at("times"), "times");
      t.x0 = vector_from(tj.at("x0"), "x0");
      t.y = matrix_from(tj.at("Y"), "Y", t.times.size());
      if (tj.contains("X")) t.x = matrix_from(tj.at("X"), "X");
      if (tj.contains("dX")) t.dx = matrix_from(tj.at("dX"), "dX");
      t.validate();
      if (t.has_states() && t.x.rows() != t.x0.size())
        throw FormatError("dataset: X rows != x0 size");
      ds.trajectories.push_back(std::move(t));
    }
    const Index n = ds.trajectories.front().x0.size();
    const Index p = ds.trajectories.front().y.rows();
    const Index m = input_dim(ds.trajectories.front().input);
    ds.c = matrix_from(j.at("C"), "C", n);
    ds.b = matrix_from(j.at("B"), "B", m);
    if (ds.c.rows() != p || ds.c.cols() != n) throw FormatError("dataset: C shape mismatch");
    if (ds.b.size() > 0 && (ds.b.rows() != n || ds.b.cols() != m))
      throw FormatError("dataset: B shape mismatch");
    for (const auto &t : ds.trajectories)
      if (t.x0.size() != n || t.y.rows() != p || input_dim(t.input) != m)
        throw FormatError("dataset: trajectories have inconsistent dimensions");
    return ds;
  } catch (const Json::exception &e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
}

inline void save_dataset(const std::string &path, const Dataset &ds) {
  write_text(path, dump(to_json(ds)));
}

inline Dataset load_dataset(const std::string &path) {
  return dataset_from(parse_json(read_text(path), path));
}

// ---------------------------------------------------------------------------
// Models

struct ModelFile {
  ModelPoint point;
  Matrix c_r;
  std::string kind = "nitrom"; // nitrom | opinf | pod-galerkin
  std::string benchmark;
  std::string config_hash;
  std::string data_hash;
  std::string created = kToolVersion;
  bool unstable = false;
};

inline Json to_json(const ModelFile &mf) {
  const ModelPoint &x = mf.point;
  const Index r = x.r();
  Json j;
  j["format_version"] = kFormatVersion;
  j["n"] = x.n();
  j["r"] = r;
  j["m"] = x.m();
  j["p"] = mf.c_r.rows();
  j["order"] = to_string(x.rom.order);
  j["Phi"] = to_json(x.phi);
  j["Psi"] = to_json(x.psi);
  j["A_r"] = to_json(x.rom.a);
  j["B_r"] = to_json(x.rom.b);
  j["H_r"] = tensor_to_json(x.rom.h, r, 2);
  if (has_cubic(x.rom.order)) j["G_r"] = tensor_to_json(x.rom.g, r, 3);
  j["C_r"] = to_json(mf.c_r);
  Json meta;
  meta["kind"] = mf.kind;
  meta["benchmark"] = mf.benchmark;
  meta["config_hash"] = mf.config_hash;
  meta["data_hash"] = mf.data_hash;
  meta["created"] = mf.created;
  meta["unstable"] = mf.unstable;
  j["metadata"] = std::move(meta);
  return j;
}

inline ModelFile model_from(const Json &j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw FormatError("model: unsupported format_version");
    const Index n = j.at("n").get<Index>();
    const Index r = j.at("r").get<Index>();
    const Index m = j.at("m").get<Index>();
    if (n < 1 || r < 1 || r > n || m < 0) throw FormatError("model: invalid n, r, m");
    ModelFile mf;
    const PolyOrder order = parse_order(j.at("order").get<std::string>());
    Matrix phi = matrix_from(j.at("Phi"), "Phi", r);
    Matrix psi = matrix_from(j.at("Psi"), "Psi", r);
    check_shape("model Phi", phi.rows(), phi.cols(), n, r);
    check_shape("model Psi", psi.rows(), psi.cols(), n, r);
    Matrix a = matrix_from(j.at("A_r"), "A_r", r);
    Matrix b = matrix_from(j.at("B_r"), "B_r", m);
    if (b.rows() == 0) b = Matrix::Zero(r, m);
    Matrix h = tensor_from(j.at("H_r"), r, 2, "H_r");
    Matrix g = has_cubic(order) ? tensor_from(j.at("G_r"), r, 3, "G_r") : Matrix(r, 0);
    mf.point.phi = std::move(phi);
    mf.point.psi = std::move(psi);
    mf.point.rom = PolynomialROM::make(order, a, b, h, g);
    mf.c_r = matrix_from(j.at("C_r"), "C_r", r);
    if (mf.c_r.cols() != r) throw FormatError("model: C_r columns != r");
    if (j.contains("p") && j.at("p").get<Index>() != mf.c_r.rows())
      throw FormatError("model: p != C_r rows");
    const Json &meta = j.at("metadata");
    mf.kind = meta.value("kind", std::string("nitrom"));
    mf.benchmark = meta.value("benchmark", std::string());
    mf.config_hash = meta.value("config_hash", std::string());
    mf.data_hash = meta.value("data_hash", std::string());
    mf.created = meta.value("created", std::string());
    mf.unstable = meta.value("unstable", false);
    return mf;
  } catch (const Json::exception &e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

inline void save_model(const std::string &path, const ModelFile &mf) {
  write_text(path, dump(to_json(mf)));
}

inline ModelFile load_model(const std::string &path) {
  return model_from(parse_json(read_text(path), path));
}

// ---------------------------------------------------------------------------
// Training configs

inline Json to_json(const TrainingConfig &c) {
  Json j;
  j["benchmark"] = c.benchmark;
  j["r"] = c.r;
  j["order"] = to_string(c.order);
  j["init"] = c.init;
  j["lambda"] = c.lambda;
  Json o;
  o["max_iterations"] = c.optimizer.max_iterations;
  o["gradient_tolerance"] = c.optimizer.gradient_tolerance;
  o["initial_step"] = c.optimizer.initial_step;
  o["backtracking"] = c.optimizer.backtracking;
  o["sufficient_decrease"] = c.optimizer.sufficient_decrease;
  o["max_backtracks"] = c.optimizer.max_backtracks;
  o["cg_restart_period"] = c.optimizer.cg_restart_period;
  o["conjugate"] = c.optimizer.conjugate;
  j["optimizer"] = std::move(o);
  j["schedule"] = c.schedule;
  j["alternations"] = c.alternations;
  j["horizons"] = c.horizons;
  Json p;
  p["mu"] = c.penalty.weight;
  p["t_f"] = c.penalty.t_final;
  p["seed"] = c.penalty.seed;
  j["penalty"] = std::move(p);
  j["preproject_rank"] = c.preproject_rank;
  j["substeps"] = c.substeps;
  j["preset"] = c.preset;
  return j;
}

namespace detail {

inline void reject_unknown(const Json &j, std::initializer_list<const char *> known,
                           const std::string &where) {
  std::set<std::string> names(known.begin(), known.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!names.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

} // namespace detail

/// Benchmark defaults overridden by the keys present in `j`.
inline TrainingConfig config_from(const Json &j) {
  try {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    detail::reject_unknown(j,
                           {"benchmark", "r", "order", "init", "lambda", "optimizer", "schedule",
                            "alternations", "horizons", "penalty", "preproject_rank",
                            "substeps", "preset"},
                           "config");
    TrainingConfig c = TrainingConfig::defaults_for(j.value("benchmark", std::string("toy")));
    if (j.contains("r")) c.r = j.at("r").get<Index>();
    if (j.contains("order")) c.order = parse_order(j.at("order").get<std::string>());
    if (j.contains("init")) c.init = j.at("init").get<std::string>();
    if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
    if (j.contains("optimizer")) {
      const Json &o = j.at("optimizer");
      detail::reject_unknown(o,
                             {"max_iterations", "gradient_tolerance", "initial_step",
                              "backtracking", "sufficient_decrease", "max_backtracks",
                              "cg_restart_period", "conjugate"},
                             "config.optimizer");
      auto &op = c.optimizer;
      op.max_iterations = o.value("max_iterations", op.max_iterations);
      op.gradient_tolerance = o.value("gradient_tolerance", op.gradient_tolerance);
      op.initial_step = o.value("initial_step", op.initial_step);
      op.backtracking = o.value("backtracking", op.backtracking);
      op.sufficient_decrease = o.value("sufficient_decrease", op.sufficient_decrease);
      op.max_backtracks = o.value("max_backtracks", op.max_backtracks);
      op.cg_restart_period = o.value("cg_restart_period", op.cg_restart_period);
      op.conjugate = o.value("conjugate", op.conjugate);
    }
    if (j.contains("schedule")) c.schedule = j.at("schedule").get<std::string>();
    if (j.contains("alternations")) c.alternations = j.at("alternations").get<int>();
    if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<double>>();
    if (j.contains("penalty")) {
      const Json &p = j.at("penalty");
      detail::reject_unknown(p, {"mu", "t_f", "seed"}, "config.penalty");
      c.penalty.weight = p.value("mu", c.penalty.weight);
      c.penalty.t_final = p.value("t_f", c.penalty.t_final);
      c.penalty.seed = p.value("seed", c.penalty.seed);
    }
    if (j.contains("preproject_rank")) c.preproject_rank = j.at("preproject_rank").get<Index>();
    if (j.contains("substeps")) c.substeps = j.at("substeps").get<int>();
    if (j.contains("preset")) c.preset = j.at("preset").get<std::string>();
    c.validate();
    return c;
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline TrainingConfig load_config(const std::string &path) {
  return config_from(parse_json(read_text(path), path));
}

/// Hash of the fully resolved config (defaults filled in).
inline std::string config_hash(const TrainingConfig &c) {
  return hex64(fnv1a64(to_json(c).dump()));
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace nitrom
