#include "urnflow/urnflow.h"

#include <cstring>
#include <string>

#include "urnflow/commands.hpp"
#include "urnflow/config.hpp"
#include "urnflow/ensemble.hpp"
#include "urnflow/error.hpp"
#include "urnflow/verify.hpp"

struct urnflow_config {
  urnflow::experiment::ExperimentConfig cfg;
};

struct urnflow_model {
  urnflow::experiment::BuiltModel built;
};

struct urnflow_path {
  urnflow::PathRecord record;
};

namespace {

thread_local std::string last_error;

urnflow_status to_status(urnflow::ErrorCode code) {
  switch (code) {
    case urnflow::ErrorCode::invalid_argument: return URNFLOW_ERR_INVALID_ARGUMENT;
    case urnflow::ErrorCode::config: return URNFLOW_ERR_CONFIG;
    case urnflow::ErrorCode::runtime: return URNFLOW_ERR_RUNTIME;
    case urnflow::ErrorCode::io: return URNFLOW_ERR_IO;
  }
  return URNFLOW_ERR_RUNTIME;
}

template <class F>
urnflow_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const urnflow::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return URNFLOW_ERR_RUNTIME;
  } catch (const std::exception& e) {
    last_error = e.what();
    return URNFLOW_ERR_RUNTIME;
  }
}

urnflow_status null_argument(const char* what) {
  last_error = std::string("null argument: ") + what;
  return URNFLOW_ERR_INVALID_ARGUMENT;
}

std::function<void(const std::string&)> forward(urnflow_message_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& line) { fn(line.c_str(), user); };
}

}  // namespace

extern "C" {

const char* urnflow_version(void) { return "1.0.0"; }

const char* urnflow_last_error(void) { return last_error.c_str(); }

const char* urnflow_status_name(urnflow_status status) {
  switch (status) {
    case URNFLOW_OK: return "ok";
    case URNFLOW_ERR_INVALID_ARGUMENT: return "invalid argument";
    case URNFLOW_ERR_CONFIG: return "config error";
    case URNFLOW_ERR_RUNTIME: return "runtime error";
    case URNFLOW_ERR_IO: return "i/o error";
    case URNFLOW_ERR_VERIFY_FAILED: return "verification failed";
  }
  return "unknown";
}

urnflow_status urnflow_config_load(const char* path, urnflow_config** out) {
  if (!path || !out) return null_argument("path/out");
  return guarded([&] {
    *out = new urnflow_config{urnflow::experiment::load_config(path)};
    return URNFLOW_OK;
  });
}

urnflow_status urnflow_config_parse(const char* json, urnflow_config** out) {
  if (!json || !out) return null_argument("json/out");
  return guarded([&] {
    *out = new urnflow_config{urnflow::experiment::parse_config(json)};
    return URNFLOW_OK;
  });
}

urnflow_status urnflow_config_serialize(const urnflow_config* cfg, char** out) {
  if (!cfg || !out) return null_argument("cfg/out");
  return guarded([&] {
    const auto text = urnflow::experiment::serialize_config(cfg->cfg);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
    return URNFLOW_OK;
  });
}

urnflow_status urnflow_config_set_seed(urnflow_config* cfg, uint64_t seed) {
  if (!cfg) return null_argument("cfg");
  cfg->cfg.run.seed = seed;
  return URNFLOW_OK;
}

urnflow_status urnflow_config_set_thin(urnflow_config* cfg, uint64_t thin) {
  if (!cfg) return null_argument("cfg");
  if (thin < 1) {
    last_error = "thinning must be at least 1";
    return URNFLOW_ERR_INVALID_ARGUMENT;
  }
  cfg->cfg.output.thin = thin;
  return URNFLOW_OK;
}

urnflow_status urnflow_config_set_output_dir(urnflow_config* cfg, const char* dir) {
  if (!cfg || !dir) return null_argument("cfg/dir");
  cfg->cfg.output.directory = dir;
  return URNFLOW_OK;
}

urnflow_status urnflow_config_set_command(urnflow_config* cfg, const char* command) {
  if (!cfg || !command) return null_argument("cfg/command");
  const std::string c = command;
  if (c != "simulate" && c != "ode" && c != "ensemble" && c != "analyze" && c != "verify") {
    last_error = "unknown command '" + c + "'";
    return URNFLOW_ERR_INVALID_ARGUMENT;
  }
  cfg->cfg.run.command = c;
  return URNFLOW_OK;
}

const char* urnflow_config_command(const urnflow_config* cfg) {
  return cfg ? cfg->cfg.run.command.c_str() : nullptr;
}

void urnflow_config_free(urnflow_config* cfg) { delete cfg; }

void urnflow_string_free(char* s) { delete[] s; }

urnflow_status urnflow_run(const urnflow_config* cfg, unsigned jobs, urnflow_message_fn message, void* user) {
  if (!cfg) return null_argument("cfg");
  return guarded([&] {
    urnflow::experiment::CommandContext ctx{jobs, forward(message, user)};
    urnflow::experiment::run_command(cfg->cfg, ctx);
    return URNFLOW_OK;
  });
}

urnflow_status urnflow_model_from_config(const urnflow_config* cfg, urnflow_model** out) {
  if (!cfg || !out) return null_argument("cfg/out");
  return guarded([&] {
    *out = new urnflow_model{urnflow::experiment::build_model(cfg->cfg.model)};
    return URNFLOW_OK;
  });
}

urnflow_status urnflow_model_hypercycle(int k, double b, double d, double nu, urnflow_model** out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    urnflow::experiment::ModelSpec spec;
    spec.kind = urnflow::experiment::ModelSpec::Kind::replicator;
    spec.preset = "hypercycle";
    spec.k = k;
    spec.b = b;
    spec.d = d;
    spec.nu = nu;
    *out = new urnflow_model{urnflow::experiment::build_model(spec)};
    return URNFLOW_OK;
  });
}

int urnflow_model_dimension(const urnflow_model* model) { return model ? model->built.derived.k : 0; }

size_t urnflow_model_num_moves(const urnflow_model* model) { return model ? model->built.urn().num_moves() : 0; }

urnflow_status urnflow_model_drift(const urnflow_model* model, const double* x, double* out) {
  if (!model || !x || !out) return null_argument("model/x/out");
  return guarded([&] {
    const auto k = static_cast<std::size_t>(model->built.derived.k);
    model->built.derived.drift(std::span<const double>(x, k), std::span<double>(out, k));
    return URNFLOW_OK;
  });
}

urnflow_status urnflow_model_growth(const urnflow_model* model, const double* x, double* out) {
  if (!model || !x || !out) return null_argument("model/x/out");
  return guarded([&] {
    const auto k = static_cast<std::size_t>(model->built.derived.k);
    *out = model->built.derived.growth(std::span<const double>(x, k));
    return URNFLOW_OK;
  });
}

urnflow_status urnflow_model_kernel(const urnflow_model* model, const int64_t* z, double* out) {
  if (!model || !z || !out) return null_argument("model/z/out");
  return guarded([&] {
    const auto k = static_cast<std::size_t>(model->built.derived.k);
    urnflow::UrnState state{std::vector<std::int64_t>(z, z + k)};
    const auto& urn = model->built.urn();
    urn.kernel_probabilities(state, std::span<double>(out, urn.num_moves()));
    return URNFLOW_OK;
  });
}

void urnflow_model_free(urnflow_model* model) { delete model; }

urnflow_status urnflow_simulate(const urnflow_model* model, const int64_t* z0, uint64_t max_steps, uint64_t seed,
                                 uint64_t thin, urnflow_path** out) {
  if (!model || !z0 || !out) return null_argument("model/z0/out");
  return guarded([&] {
    const auto k = static_cast<std::size_t>(model->built.derived.k);
    urnflow::UrnState start{std::vector<std::int64_t>(z0, z0 + k)};
    for (auto c : start.counts) urnflow::require(c >= 0, "initial counts must be nonnegative");
    auto record = urnflow::simulate(model->built.urn(), start, urnflow::StopCondition::max_steps(max_steps), seed,
                                    thin == 0 ? 1 : thin);
    *out = new urnflow_path{std::move(record)};
    return URNFLOW_OK;
  });
}

size_t urnflow_path_length(const urnflow_path* path) { return path ? path->record.size() : 0; }

urnflow_status urnflow_path_entry(const urnflow_path* path, size_t index, uint64_t* n, double* tau, int64_t* z) {
  if (!path) return null_argument("path");
  if (index >= path->record.size()) {
    last_error = "path index out of range";
    return URNFLOW_ERR_INVALID_ARGUMENT;
  }
  const auto& e = path->record.steps[index];
  if (n) *n = e.n;
  if (tau) *tau = e.tau;
  if (z) std::copy(e.z.counts.begin(), e.z.counts.end(), z);
  return URNFLOW_OK;
}

void urnflow_path_free(urnflow_path* path) { delete path; }

urnflow_status urnflow_wilson_interval(size_t successes, size_t trials, double out[3]) {
  if (!out) return null_argument("out");
  if (successes > trials) {
    last_error = "successes exceed trials";
    return URNFLOW_ERR_INVALID_ARGUMENT;
  }
  const auto p = urnflow::ensemble::wilson_interval(successes, trials);
  out[0] = p.estimate;
  out[1] = p.lower;
  out[2] = p.upper;
  return URNFLOW_OK;
}

urnflow_status urnflow_verify(const char* filter, unsigned jobs, const char* out_dir, unsigned flags,
                              urnflow_message_fn message, void* user) {
  return guarded([&] {
    urnflow::verify::Options options;
    options.jobs = jobs == 0 ? 1 : jobs;
    options.out_dir = out_dir ? out_dir : "";
    options.tamper_drift = (flags & URNFLOW_VERIFY_TAMPER_DRIFT) != 0;
    auto say = forward(message, user);
    options.progress = say;
    const auto report = urnflow::verify::run(filter ? filter : "all", options);
    if (say) {
      std::size_t passed = 0;
      for (const auto& r : report.results) passed += r.passed;
      say(std::to_string(passed) + "/" + std::to_string(report.results.size()) + " criteria passed");
    }
    if (!report.all_passed()) {
      std::string failed;
      for (const auto& r : report.results)
        if (!r.passed) failed += (failed.empty() ? "" : ", ") + std::to_string(r.id) + " " + r.name;
      last_error = "failed: " + failed;
      return URNFLOW_ERR_VERIFY_FAILED;
    }
    return URNFLOW_OK;
  });
}

}  // extern "C"
