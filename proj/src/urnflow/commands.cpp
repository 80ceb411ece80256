#include "urnflow/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "urnflow/csv.hpp"
#include "urnflow/ensemble.hpp"
#include "urnflow/error.hpp"
#include "urnflow/svg.hpp"

namespace urnflow::experiment {

namespace fs = std::filesystem;

namespace {

fs::path prepare_dir(const OutputSpec& out) {
  fs::path dir(out.directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCode::io, "cannot create output directory '" + out.directory + "'");
  return dir;
}

std::string write_file(const fs::path& dir, const std::string& name, const std::string& body) {
  const auto path = dir / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  os << body;
  if (!os) throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
  return path.string();
}

std::string support_label(const std::vector<int>& support) {
  std::string s;
  for (int i : support) s += (s.empty() ? "" : "|") + std::to_string(i + 1);
  return s;
}

/// Growth value at the interior equilibrium, used as the dashed reference.
std::optional<double> growth_reference(const BuiltModel& built) {
  if (!built.replicator) return std::nullopt;
  auto interior = analysis::interior_equilibrium(*built.payoff);
  if (!interior.point) return std::nullopt;
  return built.derived.growth(*interior.point);
}

std::string fmt3(double v) { return format_fixed(v, 3); }

struct AnalysisRow {
  std::string kind;
  std::string support;
  Vec x;
  double value = std::nan("");
};

std::string analysis_csv(int k, const std::vector<AnalysisRow>& rows) {
  std::ostringstream os;
  io::CsvWriter csv(os);
  std::vector<std::string> head{"kind", "support"};
  for (auto& n : io::indexed("x", k)) head.push_back(n);
  head.push_back("value");
  csv.header(head);
  for (const auto& r : rows) {
    csv.field(r.kind).field(r.support);
    for (int i = 0; i < k; ++i) {
      if (r.x.empty()) csv.field(std::string());
      else csv.field(r.x[i]);
    }
    csv.field(r.value).end_row();
  }
  return os.str();
}

std::string orbit_csv(const MeanLimitSystem& sys, const analysis::AttractorSpec& orbit) {
  std::ostringstream os;
  io::CsvWriter csv(os);
  csv.comment("period=" + format_double(orbit.period));
  csv.comment("closure_gap=" + format_double(orbit.closure_gap));
  std::vector<std::string> head{"t"};
  for (auto& n : io::indexed("x", sys.k)) head.push_back(n);
  head.push_back("f");
  csv.header(head);
  const double dt = orbit.period / static_cast<double>(orbit.points.size());
  for (std::size_t i = 0; i < orbit.points.size(); ++i) {
    csv.field(dt * static_cast<double>(i));
    for (double v : orbit.points[i]) csv.field(v);
    csv.field(sys.growth(orbit.points[i])).end_row();
  }
  return os.str();
}

// Equilibria, permanence, growth condition and (optionally) orbit statistics.
struct AnalysisOutcome {
  std::vector<AnalysisRow> rows;
  std::optional<analysis::AttractorSpec> orbit;
};

AnalysisOutcome analyze_model(const BuiltModel& built, const Vec& x0, double orbit_t_max,
                              const Vec& weights, const CommandContext& ctx) {
  AnalysisOutcome out;
  const int k = built.derived.k;
  if (built.replicator) {
    const auto& A = *built.payoff;
    auto eqs = analysis::boundary_equilibria(A);
    for (const auto& e : eqs.points)
      out.rows.push_back({"equilibrium", support_label(e.support), e.x, built.derived.growth(e.x)});
    for (const auto& s : eqs.singular_supports) out.rows.push_back({"singular_face", support_label(s), {}});
    auto interior = analysis::interior_equilibrium(A);
    if (interior.point) {
      std::vector<int> all(k);
      for (int i = 0; i < k; ++i) all[i] = i;
      out.rows.push_back({"interior", support_label(all), *interior.point,
                          built.derived.growth(*interior.point)});
      const double g = analysis::growth_condition_value(*built.replicator);
      out.rows.push_back({"growth_condition", "", {}, g});
      ctx.say("interior equilibrium growth value " + format_double(g));
    } else {
      ctx.say(interior.singular ? "interior equilibrium: singular system" : "no interior equilibrium");
    }
    Vec p = weights.empty() ? Vec(k, 1.0) : weights;
    auto perm = analysis::check_permanence(A, p, eqs);
    out.rows.push_back({"permanence_min", "", {}, perm.minimum});
    ctx.say("permanence minimum " + format_double(perm.minimum) + (perm.holds ? " (holds)" : " (fails)") +
            (perm.vacuous ? " [no boundary equilibria]" : ""));
    ctx.say(std::to_string(eqs.points.size()) + " boundary equilibria, " +
            std::to_string(eqs.singular_supports.size()) + " singular faces");
  }
  if (orbit_t_max > 0.0) {
    out.orbit = analysis::detect_periodic_orbit(built.derived, x0, orbit_t_max);
    if (out.orbit) {
      out.rows.push_back({"orbit_period", "", {}, out.orbit->period});
      out.rows.push_back({"orbit_closure_gap", "", {}, out.orbit->closure_gap});
      out.rows.push_back({"orbit_growth_average", "", {}, analysis::orbit_average(built.derived.growth, *out.orbit)});
      auto range = analysis::check_uniform_growth(built.derived, out.orbit->points);
      out.rows.push_back({"orbit_growth_inf", "", {}, range.inf});
      out.rows.push_back({"orbit_growth_sup", "", {}, range.sup});
      ctx.say("periodic orbit: period " + format_double(out.orbit->period));
    } else {
      out.rows.push_back({"orbit_none", "", {}});
      ctx.say("no periodic orbit detected");
    }
  }
  return out;
}

}  // namespace

CommandResult cmd_simulate(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto built = build_model(cfg.model);
  const auto& sp = cfg.run.simulate;
  const auto dir = prepare_dir(cfg.output);
  UrnState z0{sp.z0};
  if (z0.extinct()) ctx.say("warning: initial state is extinct; the path has a single entry");

  auto stop = StopCondition::max_steps(sp.max_steps);
  if (sp.max_tau) stop = stop || StopCondition::max_tau(*sp.max_tau);
  if (sp.min_population) stop = stop || StopCondition::min_population(*sp.min_population);
  const auto path = simulate(built.urn(), z0, stop, cfg.run.seed, cfg.output.thin);
  const int k = built.derived.k;

  CommandResult result;
  if (cfg.output.csv) {
    std::ostringstream os;
    io::CsvWriter csv(os);
    std::vector<std::string> head{"n", "tau"};
    for (auto& n : io::indexed("z", k)) head.push_back(n);
    for (auto& n : io::indexed("x", k)) head.push_back(n);
    head.push_back("pop");
    csv.header(head);
    for (const auto& e : path.steps) {
      csv.field(e.n).field(e.tau);
      for (auto c : e.z.counts) csv.field(c);
      for (double v : e.x) csv.field(v);
      csv.field(e.z.size()).end_row();
    }
    result.files.push_back(write_file(dir, "path.csv", os.str()));
  }
  if (cfg.output.svg) {
    io::Panel freq{"frequencies", "tau", {}, {}, false, std::nullopt};
    io::Panel pop{"population size (log scale)", "tau", {}, {}, true, std::nullopt};
    io::Panel growth{"growth f along the path", "tau", {}, {}, false, growth_reference(built)};
    for (int i = 0; i < k; ++i) freq.series.push_back({"x_" + std::to_string(i + 1), {}});
    pop.series.push_back({"|z|", {}});
    growth.series.push_back({"f(x)", {}});
    for (const auto& e : path.steps) {
      freq.x.push_back(e.tau);
      for (int i = 0; i < k; ++i) freq.series[i].y.push_back(e.x[i]);
      pop.series[0].y.push_back(static_cast<double>(e.z.size()));
      growth.series[0].y.push_back(e.z.extinct() ? std::nan("") : built.derived.growth(e.x));
    }
    pop.x = freq.x;
    growth.x = freq.x;
    std::vector<io::Panel> panels{freq, pop, growth};
    result.files.push_back(write_file(dir, "path.svg", io::render_svg(panels)));
  }
  const auto& last = path.back();
  ctx.say("simulated " + std::to_string(last.n) + " steps; final |z| = " + std::to_string(last.z.size()) +
          ", tau = " + format_double(last.tau));
  return result;
}

CommandResult cmd_ode(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto built = build_model(cfg.model);
  const auto& op = cfg.run.ode;
  const auto dir = prepare_dir(cfg.output);
  const int k = built.derived.k;
  MeanLimitSystem sys = built.derived;
  sys.integrator.step = op.h;
  const auto sample = flow(sys, op.x0, op.T, op.h);
  const auto thin = cfg.output.thin;
  const std::size_t n = sample.times.size();

  CommandResult result;
  if (cfg.output.csv) {
    std::ostringstream os;
    io::CsvWriter csv(os);
    std::vector<std::string> head{"t"};
    for (auto& name : io::indexed("x", k)) head.push_back(name);
    head.push_back("f");
    csv.header(head);
    for (std::size_t i = 0; i < n; ++i) {
      if (i % thin != 0 && i + 1 != n) continue;
      csv.field(sample.times[i]);
      for (double v : sample.points[i]) csv.field(v);
      csv.field(sys.growth(sample.points[i])).end_row();
    }
    result.files.push_back(write_file(dir, "flow.csv", os.str()));
  }
  if (cfg.output.svg) {
    io::Panel freq{"mean-limit flow", "t", {}, {}, false, std::nullopt};
    io::Panel growth{"growth f along the flow", "t", {}, {}, false, growth_reference(built)};
    for (int i = 0; i < k; ++i) freq.series.push_back({"x_" + std::to_string(i + 1), {}});
    growth.series.push_back({"f(x)", {}});
    for (std::size_t i = 0; i < n; ++i) {
      if (i % thin != 0 && i + 1 != n) continue;
      freq.x.push_back(sample.times[i]);
      for (int j = 0; j < k; ++j) freq.series[j].y.push_back(sample.points[i][j]);
      growth.series[0].y.push_back(sys.growth(sample.points[i]));
    }
    growth.x = freq.x;
    std::vector<io::Panel> panels{freq, growth};
    result.files.push_back(write_file(dir, "flow.svg", io::render_svg(panels)));
  }
  if (op.analysis || op.orbit_t_max > 0.0) {
    auto outcome = analyze_model(built, op.x0, op.orbit_t_max, {}, ctx);
    if (op.analysis) result.files.push_back(write_file(dir, "analysis.csv", analysis_csv(k, outcome.rows)));
    if (outcome.orbit) result.files.push_back(write_file(dir, "orbit.csv", orbit_csv(sys, *outcome.orbit)));
  }
  std::string last;
  for (double v : sample.final_point()) last += (last.empty() ? "" : ", ") + format_fixed(v, 6);
  ctx.say("x(" + format_double(op.T) + ") = (" + last + ")");
  return result;
}

CommandResult cmd_analyze(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto built = build_model(cfg.model);
  const auto& ap = cfg.run.analyze;
  const auto dir = prepare_dir(cfg.output);
  auto outcome = analyze_model(built, ap.x0, ap.orbit_t_max, ap.p, ctx);
  CommandResult result;
  result.files.push_back(write_file(dir, "analysis.csv", analysis_csv(built.derived.k, outcome.rows)));
  if (outcome.orbit) result.files.push_back(write_file(dir, "orbit.csv", orbit_csv(built.derived, *outcome.orbit)));
  return result;
}

CommandResult cmd_ensemble(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto built = build_model(cfg.model);
  const auto& ep = cfg.run.ensemble;
  const auto dir = prepare_dir(cfg.output);

  ensemble::EnsembleConfig ec;
  ec.replicates = ep.replicates;
  ec.master_seed = cfg.run.seed;
  ec.z0 = UrnState{ep.z0};
  ec.survival_threshold = ep.survival_threshold;
  ec.max_steps = ep.max_steps;
  ec.distance_checkpoints = ep.checkpoints;
  ec.jobs = std::max(1u, ctx.jobs);
  if (ep.attractor == "interior") {
    if (!built.payoff) throw Error(ErrorCode::config, "interior attractor needs a replicator or selection-mutation model");
    auto interior = analysis::interior_equilibrium(*built.payoff);
    if (!interior.point) throw Error(ErrorCode::runtime, "model has no interior equilibrium");
    ec.attractor = analysis::AttractorSpec::point_at(*interior.point);
  } else if (ep.attractor == "orbit") {
    auto orbit = analysis::detect_periodic_orbit(built.derived, ep.orbit_x0, ep.orbit_t_max);
    if (!orbit) throw Error(ErrorCode::runtime, "no periodic orbit found for the attractor");
    ctx.say("attractor: periodic orbit with period " + format_double(orbit->period));
    ec.attractor = std::move(*orbit);
  }
  const auto result = ensemble::run_ensemble(built.urn(), ec);
  CommandResult out;
  out.files.push_back(write_file(dir, "ensemble.csv", ensemble::to_csv(result)));

  const auto p = ensemble::establishment_probability(result);
  ctx.say("establishment " + fmt3(p.estimate) + " [" + fmt3(p.lower) + ", " + fmt3(p.upper) + "]");
  ctx.say("established " + std::to_string(result.count(ensemble::Outcome::established)) + ", extinct " +
          std::to_string(result.count(ensemble::Outcome::extinct)) + ", censored " +
          std::to_string(result.count(ensemble::Outcome::censored)) + ", failed " +
          std::to_string(result.count(ensemble::Outcome::failed)));
  if (ec.attractor) {
    auto table = ensemble::convergence_statistics(result, *ec.attractor);
    std::ostringstream os;
    io::CsvWriter csv(os);
    csv.header({"checkpoint", "count", "min", "q25", "median", "q75", "max"});
    for (const auto& r : table.rows)
      csv.field(r.label).field(static_cast<std::uint64_t>(r.count)).field(r.min).field(r.q25)
          .field(r.median).field(r.q75).field(r.max).end_row();
    csv.comment("decreasing_fraction=" + format_double(table.decreasing_fraction));
    if (table.empty) csv.comment("no established runs");
    out.files.push_back(write_file(dir, "convergence.csv", os.str()));
    if (table.empty) ctx.say("no established runs; convergence table empty");
  }
  return out;
}

CommandResult run_command(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto& c = cfg.run.command;
  if (c == "simulate") return cmd_simulate(cfg, ctx);
  if (c == "ode") return cmd_ode(cfg, ctx);
  if (c == "ensemble") return cmd_ensemble(cfg, ctx);
  if (c == "analyze") return cmd_analyze(cfg, ctx);
  throw Error(ErrorCode::config, "command '" + c + "' cannot be run from a config");
}

}  // namespace urnflow::experiment
