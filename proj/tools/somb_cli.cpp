// Command-line front end. Talks to the simulator only through the C API.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "somb/somb.h"

namespace {

constexpr double kOracleTolerance = 1e-4;

int fail(somb_status status, const std::string& message) {
  nlohmann::json j{{"error", somb_status_name(status)}, {"code", static_cast<int>(status)},
                   {"message", message}};
  std::cerr << j.dump() << "\n";
  return static_cast<int>(status);
}

int fail(somb_status status) { return fail(status, somb_last_error()); }

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct ConfigHandle {
  somb_config* p = nullptr;
  ~ConfigHandle() { somb_config_free(p); }
};

int cmd_run(const std::string& path, const std::string& out_dir, bool strict) {
  ConfigHandle cfg;
  if (auto s = somb_config_load(path.c_str(), &cfg.p); s != SOMB_OK) return fail(s);
  if (strict) somb_config_set_strict(cfg.p, 1);
  if (!out_dir.empty()) somb_config_set_output_dir(cfg.p, out_dir.c_str());
  somb_result* result = nullptr;
  if (auto s = somb_run(cfg.p, &result); s != SOMB_OK) return fail(s);
  char* written = nullptr;
  const auto ws = somb_result_write(result, nullptr, &written);
  if (ws != SOMB_OK) {
    somb_result_free(result);
    return fail(ws);
  }
  const char* scenario = nullptr;
  somb_config_scenario(cfg.p, &scenario);
  std::cout << "scenario = " << scenario << "\n" << "output = " << written << "\n";
  for (std::size_t k = 0; k < somb_result_scalar_count(result); ++k) {
    const char* name = nullptr;
    double value = 0.0;
    somb_result_scalar(result, k, &name, &value);
    std::cout << name << " = " << fmt(value) << "\n";
  }
  const unsigned flags = somb_result_monitor_flags(result);
  if (flags != 0) std::cout << "warning = monitor flags " << flags << " (see metadata.json)\n";
  somb_string_free(written);
  somb_result_free(result);
  return 0;
}

int cmd_validate(const std::string& path, bool echo) {
  ConfigHandle cfg;
  if (auto s = somb_config_load(path.c_str(), &cfg.p); s != SOMB_OK) return fail(s);
  if (auto s = somb_config_validate(cfg.p); s != SOMB_OK) return fail(s);
  if (echo) {
    char* text = nullptr;
    if (auto s = somb_config_echo(cfg.p, &text); s != SOMB_OK) return fail(s);
    std::cout << text;
    somb_string_free(text);
  } else {
    const char* scenario = nullptr;
    somb_config_scenario(cfg.p, &scenario);
    std::cout << "ok " << scenario << "\n";
  }
  return 0;
}

int cmd_oracle(const std::string& path) {
  ConfigHandle cfg;
  if (auto s = somb_config_load(path.c_str(), &cfg.p); s != SOMB_OK) return fail(s);
  somb_oracle_report rep{};
  if (auto s = somb_oracle_compare(cfg.p, &rep); s != SOMB_OK) return fail(s);
  std::cout << "grid = " << rep.nx << "x" << rep.ny << "\n"
            << "tau = " << fmt(rep.tau) << "\n"
            << "dt = " << fmt(rep.dt) << "\n"
            << "l2_distance = " << fmt(rep.l2_distance) << "\n"
            << "l2_distance_half_dt = " << fmt(rep.l2_distance_half) << "\n"
            << "ratio = " << fmt(rep.ratio) << "\n";
  if (!(rep.l2_distance < kOracleTolerance))
    return fail(SOMB_ERR_NUMERIC, "split-operator deviation " + fmt(rep.l2_distance) +
                                      " exceeds " + fmt(kOracleTolerance));
  return 0;
}

int cmd_info() {
  char* text = nullptr;
  if (auto s = somb_info(&text); s != SOMB_OK) return fail(s);
  std::cout << text << "\n";
  somb_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split-operator simulator for a spin-orbit coupled two-component condensate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", somb_version());
  bool strict = false;
  app.add_flag("--strict", strict, "Treat monitor warnings (norm drift, edge mass) as errors");

  std::string run_path, out_dir, validate_path, oracle_path;
  bool echo = false;
  auto* run = app.add_subcommand("run", "Execute the scenario described by a config file");
  run->add_option("config", run_path, "Config file")->required();
  run->add_option("-o,--out", out_dir, "Output directory (overrides [output] dir)");
  auto* validate = app.add_subcommand("validate", "Parse and check a config without running it");
  validate->add_option("config", validate_path, "Config file")->required();
  validate->add_flag("--echo", echo, "Print the fully resolved config");
  auto* oracle = app.add_subcommand("oracle", "Compare the split operator with exact diagonalization");
  oracle->add_option("config", oracle_path, "Config file")->required();
  app.add_subcommand("info", "Print build, version and convention report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(SOMB_ERR_PARSE, e.what());
  }

  if (*run) return cmd_run(run_path, out_dir, strict);
  if (*validate) return cmd_validate(validate_path, echo);
  if (*oracle) return cmd_oracle(oracle_path);
  return cmd_info();
}
