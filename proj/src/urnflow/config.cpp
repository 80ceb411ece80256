#include "urnflow/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "urnflow/error.hpp"

namespace urnflow::experiment {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::config, path + ": " + msg);
}

// Object reader that remembers which keys were consumed so leftovers can be
// reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string at(const std::string& key) const { return path_ + "." + key; }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) fail(at(key), "missing required key");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const json& v = raw(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      fail(at(key), "wrong type (" + std::string(v.type_name()) + ")");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    return get<T>(key);
  }

  template <class T>
  std::optional<T> maybe(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return get<T>(key);
  }

  Reader child(const std::string& key) {
    used_.insert(key);
    static const json empty = json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, at(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) fail(at(key), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Matrix read_matrix(Reader& r, const std::string& key, int k) {
  auto rows = r.get<std::vector<std::vector<double>>>(key);
  if (static_cast<int>(rows.size()) != k) fail(r.at(key), "expected " + std::to_string(k) + " rows");
  Matrix M(k, k);
  for (int i = 0; i < k; ++i) {
    if (static_cast<int>(rows[i].size()) != k)
      fail(r.at(key) + "[" + std::to_string(i) + "]", "expected " + std::to_string(k) + " entries");
    for (int j = 0; j < k; ++j) M(i, j) = rows[i][j];
  }
  return M;
}

json write_matrix(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

ModelSpec read_model(Reader r) {
  ModelSpec m;
  const auto kind = r.get<std::string>("kind");
  if (kind == "replicator") {
    m.kind = ModelSpec::Kind::replicator;
    m.preset = r.get<std::string>("preset", "");
    m.k = r.get<int>("k");
    m.b = r.get<double>("b");
    m.d = r.get<double>("d");
    m.nu = r.get<double>("nu");
    if (m.preset == "hypercycle") {
      if (m.k < 2) fail(r.at("k"), "hypercycle needs k >= 2");
    } else if (m.preset.empty()) {
      if (m.k < 1) fail(r.at("k"), "k must be positive");
      m.B = read_matrix(r, "B", m.k);
      m.D = read_matrix(r, "D", m.k);
    } else {
      fail(r.at("preset"), "unknown replicator preset '" + m.preset + "'");
    }
  } else if (kind == "selection_mutation") {
    m.kind = ModelSpec::Kind::selection_mutation;
    m.preset = r.get<std::string>("preset", "");
    m.d = r.get<double>("d");
    m.nu = r.get<double>("nu");
    if (m.preset == "cyclic") {
      m.k = 3;
      m.f = r.get<double>("f");
      m.s = r.get<double>("s");
      m.mu1 = r.get<double>("mu1");
      m.mu2 = r.get<double>("mu2");
    } else if (m.preset.empty()) {
      m.k = r.get<int>("k");
      if (m.k < 1) fail(r.at("k"), "k must be positive");
      m.F = read_matrix(r, "F", m.k);
      m.Mu = read_matrix(r, "Mu", m.k);
      m.offspring = r.get<std::vector<std::vector<std::vector<double>>>>("offspring", {});
    } else {
      fail(r.at("preset"), "unknown selection_mutation preset '" + m.preset + "'");
    }
  } else if (kind == "custom") {
    m.kind = ModelSpec::Kind::custom;
    m.k = r.get<int>("k");
    if (m.k < 1) fail(r.at("k"), "k must be positive");
    m.name = r.get<std::string>("name", "custom");
    const json& rules = r.raw("rules");
    if (!rules.is_array() || rules.empty()) fail(r.at("rules"), "expected a nonempty array");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      Reader rr(rules[i], r.at("rules") + "[" + std::to_string(i) + "]");
      models::MonomialRule rule;
      rule.move.w = rr.get<std::vector<int>>("move");
      rule.coef = rr.get<double>("coef", 1.0);
      rule.factors = rr.get<std::vector<int>>("factors", {});
      rr.finish();
      m.rules.push_back(std::move(rule));
    }
  } else {
    fail(r.at("kind"), "unknown model kind '" + kind + "'");
  }
  r.finish();
  return m;
}

json write_model(const ModelSpec& m) {
  json j;
  switch (m.kind) {
    case ModelSpec::Kind::replicator:
      j["kind"] = "replicator";
      if (!m.preset.empty()) j["preset"] = m.preset;
      j["k"] = m.k;
      j["b"] = m.b;
      j["d"] = m.d;
      j["nu"] = m.nu;
      if (m.preset.empty()) {
        j["B"] = write_matrix(m.B);
        j["D"] = write_matrix(m.D);
      }
      break;
    case ModelSpec::Kind::selection_mutation:
      j["kind"] = "selection_mutation";
      if (!m.preset.empty()) j["preset"] = m.preset;
      j["d"] = m.d;
      j["nu"] = m.nu;
      if (m.preset == "cyclic") {
        j["f"] = m.f;
        j["s"] = m.s;
        j["mu1"] = m.mu1;
        j["mu2"] = m.mu2;
      } else {
        j["k"] = m.k;
        j["F"] = write_matrix(m.F);
        j["Mu"] = write_matrix(m.Mu);
        if (!m.offspring.empty()) j["offspring"] = m.offspring;
      }
      break;
    case ModelSpec::Kind::custom: {
      j["kind"] = "custom";
      j["k"] = m.k;
      j["name"] = m.name;
      json rules = json::array();
      for (const auto& r : m.rules)
        rules.push_back({{"move", r.move.w}, {"coef", r.coef}, {"factors", r.factors}});
      j["rules"] = rules;
      break;
    }
  }
  return j;
}

void check_size(const Reader& r, const std::string& key, std::size_t got, int k) {
  if (static_cast<int>(got) != k)
    fail(r.at(key), "expected " + std::to_string(k) + " entries");
}

RunSpec read_run(Reader r, int k) {
  RunSpec run;
  run.command = r.get<std::string>("command", run.command);
  static const std::set<std::string> commands{"simulate", "ode", "ensemble", "analyze", "verify"};
  if (!commands.count(run.command)) fail(r.at("command"), "unknown command '" + run.command + "'");
  run.seed = r.get<std::uint64_t>("seed", run.seed);

  {
    Reader s = r.child("simulate");
    auto& sp = run.simulate;
    sp.z0 = s.get<std::vector<std::int64_t>>("z0", std::vector<std::int64_t>(k, 20));
    check_size(s, "z0", sp.z0.size(), k);
    for (auto v : sp.z0)
      if (v < 0) fail(s.at("z0"), "counts must be nonnegative");
    sp.max_steps = s.get<std::uint64_t>("max_steps", sp.max_steps);
    sp.max_tau = s.maybe<double>("max_tau");
    sp.min_population = s.maybe<std::int64_t>("min_population");
    s.finish();
  }
  {
    Reader o = r.child("ode");
    auto& op = run.ode;
    op.x0 = o.get<Vec>("x0", default_start(k));
    check_size(o, "x0", op.x0.size(), k);
    op.T = o.get<double>("T", op.T);
    if (!(op.T > 0.0)) fail(o.at("T"), "must be positive");
    op.h = o.get<double>("h", op.h);
    if (!(op.h > 0.0)) fail(o.at("h"), "must be positive");
    op.analysis = o.get<bool>("analysis", op.analysis);
    op.orbit_t_max = o.get<double>("orbit_t_max", op.orbit_t_max);
    o.finish();
  }
  {
    Reader e = r.child("ensemble");
    auto& ep = run.ensemble;
    ep.z0 = e.get<std::vector<std::int64_t>>("z0", std::vector<std::int64_t>(k, 20));
    check_size(e, "z0", ep.z0.size(), k);
    ep.replicates = e.get<std::size_t>("replicates", ep.replicates);
    if (ep.replicates < 1) fail(e.at("replicates"), "must be at least 1");
    ep.survival_threshold = e.get<std::int64_t>("survival_threshold", ep.survival_threshold);
    ep.max_steps = e.get<std::uint64_t>("max_steps", ep.max_steps);
    ep.checkpoints = e.get<std::vector<std::uint64_t>>("checkpoints", {});
    ep.attractor = e.get<std::string>("attractor", ep.attractor);
    if (ep.attractor != "none" && ep.attractor != "interior" && ep.attractor != "orbit")
      fail(e.at("attractor"), "expected none, interior or orbit");
    ep.orbit_x0 = e.get<Vec>("orbit_x0", default_start(k));
    check_size(e, "orbit_x0", ep.orbit_x0.size(), k);
    ep.orbit_t_max = e.get<double>("orbit_t_max", ep.orbit_t_max);
    e.finish();
  }
  {
    Reader a = r.child("analyze");
    auto& ap = run.analyze;
    ap.p = a.get<Vec>("p", {});
    if (!ap.p.empty()) check_size(a, "p", ap.p.size(), k);
    for (double v : ap.p)
      if (!(v > 0.0)) fail(a.at("p"), "weights must be positive");
    ap.x0 = a.get<Vec>("x0", default_start(k));
    check_size(a, "x0", ap.x0.size(), k);
    ap.orbit_t_max = a.get<double>("orbit_t_max", ap.orbit_t_max);
    a.finish();
  }
  {
    Reader v = r.child("verify");
    run.verify_filter = v.get<std::string>("filter", run.verify_filter);
    v.finish();
  }
  r.finish();
  return run;
}

json write_run(const RunSpec& run) {
  json j;
  j["command"] = run.command;
  j["seed"] = run.seed;
  json s;
  s["z0"] = run.simulate.z0;
  s["max_steps"] = run.simulate.max_steps;
  if (run.simulate.max_tau) s["max_tau"] = *run.simulate.max_tau;
  if (run.simulate.min_population) s["min_population"] = *run.simulate.min_population;
  j["simulate"] = s;
  j["ode"] = {{"x0", run.ode.x0},
              {"T", run.ode.T},
              {"h", run.ode.h},
              {"analysis", run.ode.analysis},
              {"orbit_t_max", run.ode.orbit_t_max}};
  j["ensemble"] = {{"z0", run.ensemble.z0},
                   {"replicates", run.ensemble.replicates},
                   {"survival_threshold", run.ensemble.survival_threshold},
                   {"max_steps", run.ensemble.max_steps},
                   {"checkpoints", run.ensemble.checkpoints},
                   {"attractor", run.ensemble.attractor},
                   {"orbit_x0", run.ensemble.orbit_x0},
                   {"orbit_t_max", run.ensemble.orbit_t_max}};
  j["analyze"] = {{"p", run.analyze.p}, {"x0", run.analyze.x0}, {"orbit_t_max", run.analyze.orbit_t_max}};
  j["verify"] = {{"filter", run.verify_filter}};
  return j;
}

OutputSpec read_output(Reader r) {
  OutputSpec out;
  out.directory = r.get<std::string>("directory", out.directory);
  auto formats = r.get<std::vector<std::string>>("formats", {"csv"});
  out.csv = out.svg = false;
  for (const auto& f : formats) {
    if (f == "csv") out.csv = true;
    else if (f == "svg") out.svg = true;
    else fail(r.at("formats"), "unknown format '" + f + "'");
  }
  out.thin = r.get<std::uint64_t>("thin", out.thin);
  if (out.thin < 1) fail(r.at("thin"), "must be at least 1");
  r.finish();
  return out;
}

json write_output(const OutputSpec& out) {
  json formats = json::array();
  if (out.csv) formats.push_back("csv");
  if (out.svg) formats.push_back("svg");
  return {{"directory", out.directory}, {"formats", formats}, {"thin", out.thin}};
}

}  // namespace

Vec default_start(int k) {
  Vec x(k);
  const double total = 0.5 * k * (k + 1);
  for (int i = 0; i < k; ++i) x[i] = (i + 1) / total;
  return x;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line/column pair.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::config, "syntax error at line " + std::to_string(line) + ", column " +
                                       std::to_string(col) + ": " + e.what());
  }
  Reader root(j, "$");
  ExperimentConfig cfg;
  cfg.model = read_model(root.child("model"));
  cfg.run = read_run(root.child("run"), cfg.model.k);
  cfg.output = read_output(root.child("output"));
  root.finish();
  try {
    build_model(cfg.model);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::config, "$.model: " + std::string(e.what()));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["model"] = write_model(cfg.model);
  j["run"] = write_run(cfg.run);
  j["output"] = write_output(cfg.output);
  return j.dump(2) + "\n";
}

BuiltModel build_model(const ModelSpec& spec) {
  BuiltModel built;
  switch (spec.kind) {
    case ModelSpec::Kind::replicator: {
      models::ReplicatorParams params;
      if (spec.preset == "hypercycle") {
        params = models::hypercycle(spec.k, spec.b, spec.d, spec.nu);
      } else {
        params.k = spec.k;
        params.b = spec.b;
        params.d = spec.d;
        params.nu = spec.nu;
        params.B = spec.B;
        params.D = spec.D;
      }
      auto rep = models::build_replicator(params);
      built.derived = derive_system(rep.model.rules());
      built.closed_form = std::move(rep.closed_form);
      built.payoff = std::move(rep.A);
      built.replicator = params;
      built.model.emplace(std::move(rep.model));
      break;
    }
    case ModelSpec::Kind::selection_mutation: {
      models::SelectionMutationParams params;
      if (spec.preset == "cyclic") {
        params = models::cyclic_mutation_example(spec.f, spec.s, spec.mu1, spec.mu2, spec.nu, spec.d);
      } else {
        params.k = spec.k;
        params.d = spec.d;
        params.nu = spec.nu;
        params.F = spec.F;
        params.Mu = spec.Mu;
        params.offspring.assign(spec.k, std::vector<models::OffspringDistribution>(spec.k));
        for (int i = 0; i < spec.k; ++i)
          for (int j = 0; j < spec.k; ++j)
            params.offspring[i][j] = spec.offspring.empty()
                                         ? models::default_offspring(spec.F(i, j))
                                         : models::OffspringDistribution{spec.offspring.at(i).at(j)};
      }
      auto sm = models::build_selection_mutation(params);
      built.derived = derive_system(sm.model.rules());
      built.closed_form = std::move(sm.closed_form);
      built.payoff = params.F;
      built.model.emplace(std::move(sm.model));
      break;
    }
    case ModelSpec::Kind::custom: {
      auto model = models::build_monomial(spec.name, spec.k, spec.rules);
      built.derived = derive_system(model.rules());
      built.model.emplace(std::move(model));
      break;
    }
  }
  return built;
}

}  // namespace urnflow::experiment
