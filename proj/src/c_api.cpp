#include "somb/somb.h"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <new>
#include <string>

#include "somb/error.hpp"
#include "somb/io.hpp"
#include "somb/oracle.hpp"
#include "somb/scenarios.hpp"

struct somb_config {
  somb::ScenarioConfig cfg;
  std::string scenario_name;
};

struct somb_result {
  somb::Bundle bundle;
  std::vector<std::string> scalar_names;
  std::vector<double> scalar_values;
};

struct somb_field {
  somb::SnapshotData data;
};

namespace {

thread_local std::string g_last_error;

somb_status status_of(somb::ErrorKind k) {
  using somb::ErrorKind;
  switch (k) {
    case ErrorKind::Contract: return SOMB_ERR_CONTRACT;
    case ErrorKind::Setup: return SOMB_ERR_SETUP;
    case ErrorKind::Singular: return SOMB_ERR_SINGULAR;
    case ErrorKind::Numeric: return SOMB_ERR_NUMERIC;
    case ErrorKind::Monitor: return SOMB_ERR_MONITOR;
    case ErrorKind::Degenerate: return SOMB_ERR_DEGENERATE;
    case ErrorKind::Undersampled: return SOMB_ERR_UNDERSAMPLED;
    case ErrorKind::Geodesic: return SOMB_ERR_GEODESIC;
    case ErrorKind::Parse: return SOMB_ERR_PARSE;
    case ErrorKind::Format: return SOMB_ERR_FORMAT;
    case ErrorKind::Length: return SOMB_ERR_LENGTH;
    case ErrorKind::Io: return SOMB_ERR_IO;
  }
  return SOMB_ERR_INTERNAL;
}

template <class F>
somb_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return SOMB_OK;
  } catch (const somb::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SOMB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SOMB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SOMB_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw somb::Error(somb::ErrorKind::Contract, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

somb_config* wrap(somb::ScenarioConfig cfg) {
  auto* c = new somb_config{std::move(cfg), {}};
  c->scenario_name = somb::to_string(c->cfg.id);
  return c;
}

}  // namespace

extern "C" {

const char* somb_version(void) { return SOMB_VERSION; }

const char* somb_status_name(somb_status status) {
  switch (status) {
    case SOMB_OK: return "ok";
    case SOMB_ERR_CONTRACT: return "contract";
    case SOMB_ERR_SETUP: return "setup";
    case SOMB_ERR_SINGULAR: return "singular";
    case SOMB_ERR_NUMERIC: return "numeric";
    case SOMB_ERR_MONITOR: return "monitor";
    case SOMB_ERR_DEGENERATE: return "degenerate";
    case SOMB_ERR_UNDERSAMPLED: return "undersampled";
    case SOMB_ERR_GEODESIC: return "geodesic";
    case SOMB_ERR_PARSE: return "parse";
    case SOMB_ERR_FORMAT: return "format";
    case SOMB_ERR_LENGTH: return "length";
    case SOMB_ERR_IO: return "io";
    case SOMB_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* somb_last_error(void) { return g_last_error.c_str(); }

void somb_string_free(char* text) { delete[] text; }

somb_status somb_info(char** json) {
  return guarded([&] {
    require(json, "json");
    nlohmann::json j;
    j["name"] = "somb";
    j["version"] = SOMB_VERSION;
    j["compiler"] = __VERSION__;
    j["fourier"] = {{"forward", "Phi(p) = (1/2pi) int exp(-i p.r) psi(r) d^2r"},
                    {"inverse", "psi(r) = (1/2pi) int exp(+i p.r) Phi(p) d^2p"},
                    {"plane_wave_sign", somb::kPlaneWaveSign},
                    {"initial_mean_momentum", "<p> = +(px0, py0)"},
                    {"momentum_ordering", "FFT wrap-around, Nyquist at -pi/dx"}};
    j["bloch"] = "rho = [[P1, C], [C*, P2]], C = <psi1|psi2>, r = (2 Re C, -2 Im C, P1 - P2)";
    j["units"] = {{"time", "1/omega"}, {"length", "sqrt(hbar / m omega)"}};
    j["defaults"] = {{"split", "strang"}, {"dt", 1e-3}, {"density", "frozen"}};
    j["fft"] = "FFTW3, double precision";
    j["threads"] = somb::scenario_threads();
    const char* out = std::getenv("SOMB_OUT");
    j["output_root"] = out != nullptr ? out : "somb_out";
    *json = dup_string(j.dump(2));
  });
}

somb_status somb_config_parse(const char* text, somb_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = wrap(somb::parse_config(text));
  });
}

somb_status somb_config_load(const char* path, somb_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(somb::load_config(path));
  });
}

somb_status somb_config_default(const char* scenario, somb_config** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(out, "out");
    *out = wrap(somb::default_config(somb::scenario_from_string(scenario)));
  });
}

somb_status somb_config_echo(const somb_config* cfg, char** text) {
  return guarded([&] {
    require(cfg, "cfg");
    require(text, "text");
    *text = dup_string(somb::echo_config(cfg->cfg));
  });
}

somb_status somb_config_validate(const somb_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.validate();
  });
}

somb_status somb_config_set_output_dir(somb_config* cfg, const char* dir) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.output_dir = dir != nullptr ? dir : "";
  });
}

somb_status somb_config_set_strict(somb_config* cfg, int strict) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.scheme.strict = strict != 0;
  });
}

somb_status somb_config_scenario(const somb_config* cfg, const char** name) {
  return guarded([&] {
    require(cfg, "cfg");
    require(name, "name");
    *name = cfg->scenario_name.c_str();
  });
}

void somb_config_free(somb_config* cfg) { delete cfg; }

somb_status somb_run(const somb_config* cfg, somb_result** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    auto* r = new somb_result{somb::run_scenario(cfg->cfg), {}, {}};
    for (const auto& [k, v] : r->bundle.scalars) {
      r->scalar_names.push_back(k);
      r->scalar_values.push_back(v);
    }
    *out = r;
  });
}

somb_status somb_result_write(const somb_result* result, const char* dir, char** written_dir) {
  return guarded([&] {
    require(result, "result");
    const std::filesystem::path target =
        dir != nullptr ? std::filesystem::path(dir) : somb::output_directory(result->bundle.config);
    somb::write_bundle(result->bundle, target);
    if (written_dir != nullptr) *written_dir = dup_string(target.string());
  });
}

size_t somb_result_scalar_count(const somb_result* result) {
  return result != nullptr ? result->scalar_names.size() : 0;
}

somb_status somb_result_scalar(const somb_result* result, size_t index, const char** name,
                               double* value) {
  return guarded([&] {
    require(result, "result");
    if (index >= result->scalar_names.size())
      throw somb::Error(somb::ErrorKind::Contract, "scalar index out of range");
    if (name != nullptr) *name = result->scalar_names[index].c_str();
    if (value != nullptr) *value = result->scalar_values[index];
  });
}

somb_status somb_result_scalar_by_name(const somb_result* result, const char* name, double* value) {
  return guarded([&] {
    require(result, "result");
    require(name, "name");
    require(value, "value");
    const auto it = result->bundle.scalars.find(name);
    if (it == result->bundle.scalars.end())
      throw somb::Error(somb::ErrorKind::Contract, std::string("no scalar named ") + name);
    *value = it->second;
  });
}

size_t somb_result_series_count(const somb_result* result) {
  return result != nullptr ? result->bundle.series.size() : 0;
}

somb_status somb_result_series_label(const somb_result* result, size_t index, const char** label,
                                     size_t* rows) {
  return guarded([&] {
    require(result, "result");
    if (index >= result->bundle.series.size())
      throw somb::Error(somb::ErrorKind::Contract, "series index out of range");
    if (label != nullptr) *label = result->bundle.series[index].label.c_str();
    if (rows != nullptr) *rows = result->bundle.series[index].rows.size();
  });
}

unsigned somb_result_monitor_flags(const somb_result* result) {
  unsigned flags = 0;
  if (result != nullptr)
    for (const auto& m : result->bundle.monitors) flags |= m.flags;
  return flags;
}

void somb_result_free(somb_result* result) { delete result; }

somb_status somb_oracle_compare(const somb_config* cfg, somb_oracle_report* out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    const auto& c = cfg->cfg;
    const double tau = c.duration.value_or(1.0);
    const auto initial = somb::make_initial(c.initial, c.grid);
    const somb::DenseOracle oracle(c.grid, c.model);
    const auto exact = oracle.evolve(initial, tau);
    auto split = [&](double dt) {
      somb::StepScheme sc = c.scheme;
      sc.dt = dt;
      somb::Propagator prop(somb::Engine::Full, c.grid, c.model, sc);
      auto st = prop.start(initial);
      prop.advance(st, sc.steps_for(tau));
      return somb::l2_distance(st.field, exact);
    };
    out->tau = tau;
    out->dt = c.scheme.dt;
    out->l2_distance = split(c.scheme.dt);
    out->l2_distance_half = split(0.5 * c.scheme.dt);
    out->ratio = out->l2_distance / out->l2_distance_half;
    out->nx = c.grid.nx();
    out->ny = c.grid.ny();
  });
}

somb_status somb_snapshot_read(const char* path, somb_field** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new somb_field{somb::read_snapshot(path)};
  });
}

somb_status somb_snapshot_write(const somb_field* field, const char* path) {
  return guarded([&] {
    require(field, "field");
    require(path, "path");
    somb::write_snapshot(field->data.field, field->data.tau, path);
  });
}

somb_status somb_field_info_get(const somb_field* field, somb_field_info* info) {
  return guarded([&] {
    require(field, "field");
    require(info, "info");
    const auto& f = field->data.field;
    info->nx = f.grid().nx();
    info->ny = f.grid().ny();
    info->components = f.components();
    info->momentum = f.rep() == somb::Rep::Momentum ? 1 : 0;
    info->Lx = f.grid().Lx();
    info->Ly = f.grid().Ly();
    info->tau = field->data.tau;
  });
}

const double* somb_field_data(const somb_field* field) {
  if (field == nullptr) return nullptr;
  return reinterpret_cast<const double*>(field->data.field.data().data());
}

somb_status somb_field_create(const somb_field_info* info, const double* data, somb_field** out) {
  return guarded([&] {
    require(info, "info");
    require(data, "data");
    require(out, "out");
    if (info->components != 1 && info->components != 2)
      throw somb::Error(somb::ErrorKind::Contract, "components must be 1 or 2");
    auto* f = new somb_field;
    try {
      f->data.tau = info->tau;
      f->data.field = somb::SpinorField(somb::GridSpec(info->nx, info->ny, info->Lx, info->Ly),
                                        info->components,
                                        info->momentum ? somb::Rep::Momentum : somb::Rep::Position);
      auto dst = f->data.field.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = {data[2 * k], data[2 * k + 1]};
    } catch (...) {
      delete f;
      throw;
    }
    *out = f;
  });
}

void somb_field_free(somb_field* field) { delete field; }

}  // extern "C"
