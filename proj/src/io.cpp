#include "somb/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "somb/error.hpp"
#include "somb/model.hpp"

namespace somb {

namespace {

constexpr double kPi = std::numbers::pi;

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_plain_double(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty number");
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return x;
}

/// Number, optionally scaled by pi: "16pi", "16*pi", "-pi", "pi/8".
double parse_real(const std::string& raw) {
  const std::string s = lower(trim(raw));
  if (s.rfind("pi/", 0) == 0) return kPi / parse_plain_double(trim(s.substr(3)));
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    std::string prefix = trim(s.substr(0, s.size() - 2));
    if (!prefix.empty() && prefix.back() == '*') prefix = trim(prefix.substr(0, prefix.size() - 1));
    if (prefix.empty() || prefix == "+") return kPi;
    if (prefix == "-") return -kPi;
    return parse_plain_double(prefix) * kPi;
  }
  return parse_plain_double(s);
}

long parse_integer(const std::string& raw) {
  const std::string s = trim(raw);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& raw) {
  const std::string s = lower(trim(raw));
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw std::invalid_argument("not a boolean: '" + raw + "'");
}

/// "x" or "(re, im)".
cplx parse_complex(const std::string& raw) {
  const std::string s = trim(raw);
  if (!s.empty() && s.front() == '(') {
    if (s.back() != ')') throw std::invalid_argument("unbalanced parenthesis");
    const std::string inner = s.substr(1, s.size() - 2);
    const auto comma = inner.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("expected (re, im)");
    return {parse_real(inner.substr(0, comma)), parse_real(inner.substr(comma + 1))};
  }
  return {parse_real(s), 0.0};
}

std::vector<double> parse_list(const std::string& raw) {
  std::vector<double> out;
  const std::string s = trim(raw);
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(item));
  return out;
}

Engine parse_engine(const std::string& raw) {
  const std::string s = lower(trim(raw));
  for (Engine e : {Engine::Full, Engine::SingleSurface, Engine::FreeFlight})
    if (s == to_string(e)) return e;
  throw std::invalid_argument("unknown engine '" + raw + "'");
}

SplitKind parse_split(const std::string& raw) {
  const std::string s = lower(trim(raw));
  if (s == "strang") return SplitKind::Strang;
  if (s == "lie") return SplitKind::Lie;
  throw std::invalid_argument("unknown split '" + raw + "'");
}

DensityUpdate parse_density(const std::string& raw) {
  const std::string s = lower(trim(raw));
  if (s == "frozen") return DensityUpdate::Frozen;
  if (s == "midpoint") return DensityUpdate::Midpoint;
  throw std::invalid_argument("unknown density update '" + raw + "'");
}

FftPlanner parse_planner(const std::string& raw) {
  const std::string s = lower(trim(raw));
  if (s == "measure") return FftPlanner::Measure;
  if (s == "estimate") return FftPlanner::Estimate;
  throw std::invalid_argument("unknown fft planner '" + raw + "'");
}

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

[[noreturn]] void parse_fail(const Entry& e, const std::string& what) {
  throw Error(ErrorKind::Parse, "line " + std::to_string(e.line) + ": [" + e.section + "] " + e.key +
                                    ": " + what);
}

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto grid = [](auto update) {
      return [update](ScenarioConfig& c, const std::string& v) {
        int nx = c.grid.nx(), ny = c.grid.ny();
        double Lx = c.grid.Lx(), Ly = c.grid.Ly();
        update(nx, ny, Lx, Ly, v);
        c.grid = GridSpec(nx, ny, Lx, Ly);
      };
    };
    t["grid.nx"] = grid([](int& nx, int&, double&, double&, const std::string& v) { nx = static_cast<int>(parse_integer(v)); });
    t["grid.ny"] = grid([](int&, int& ny, double&, double&, const std::string& v) { ny = static_cast<int>(parse_integer(v)); });
    t["grid.n"] = grid([](int& nx, int& ny, double&, double&, const std::string& v) { nx = ny = static_cast<int>(parse_integer(v)); });
    t["grid.lx"] = grid([](int&, int&, double& Lx, double&, const std::string& v) { Lx = parse_real(v); });
    t["grid.ly"] = grid([](int&, int&, double&, double& Ly, const std::string& v) { Ly = parse_real(v); });
    t["grid.l"] = grid([](int&, int&, double& Lx, double& Ly, const std::string& v) { Lx = Ly = parse_real(v); });

    auto model = [](auto update) {
      return [update](ScenarioConfig& c, const std::string& v) {
        update(c.model, v);
        c.model.validate();
      };
    };
    t["model.v0"] = model([](ModelParams& m, const std::string& v) { m.v0 = parse_real(v); });
    t["model.v1"] = model([](ModelParams& m, const std::string& v) { m.v1 = parse_real(v); });
    t["model.v"] = model([](ModelParams& m, const std::string& v) { m.v0 = m.v1 = parse_real(v); });
    t["model.g11"] = model([](ModelParams& m, const std::string& v) { m.g11 = parse_real(v); });
    t["model.g22"] = model([](ModelParams& m, const std::string& v) { m.g22 = parse_real(v); });
    t["model.g12"] = model([](ModelParams& m, const std::string& v) { m.g12 = parse_real(v); });
    t["model.g"] = model([](ModelParams& m, const std::string& v) { m.g11 = m.g22 = parse_real(v); });
    t["model.trap_on"] = model([](ModelParams& m, const std::string& v) { m.trap_on = parse_bool(v); });
    t["model.born_huang"] = model([](ModelParams& m, const std::string& v) { m.born_huang_on = parse_bool(v); });

    // Checked after the amplitudes have been renormalized.
    auto initial = [](auto update) {
      return [update](ScenarioConfig& c, const std::string& v) { update(c.initial, v); };
    };
    t["initial.a1"] = initial([](GaussianSpec& s, const std::string& v) { s.a1 = parse_complex(v); });
    t["initial.a2"] = initial([](GaussianSpec& s, const std::string& v) { s.a2 = parse_complex(v); });
    t["initial.x0"] = initial([](GaussianSpec& s, const std::string& v) { s.x0 = parse_real(v); });
    t["initial.y0"] = initial([](GaussianSpec& s, const std::string& v) { s.y0 = parse_real(v); });
    t["initial.px0"] = initial([](GaussianSpec& s, const std::string& v) { s.px0 = parse_real(v); });
    t["initial.py0"] = initial([](GaussianSpec& s, const std::string& v) { s.py0 = parse_real(v); });
    t["initial.width"] = initial([](GaussianSpec& s, const std::string& v) { s.width = parse_real(v); });

    auto scheme = [](auto update) {
      return [update](ScenarioConfig& c, const std::string& v) {
        update(c.scheme, v);
        c.scheme.validate();
      };
    };
    t["scheme.split"] = scheme([](StepScheme& s, const std::string& v) { s.kind = parse_split(v); });
    t["scheme.dt"] = scheme([](StepScheme& s, const std::string& v) { s.dt = parse_real(v); });
    t["scheme.density"] = scheme([](StepScheme& s, const std::string& v) { s.density = parse_density(v); });
    t["scheme.monitor_every"] = scheme([](StepScheme& s, const std::string& v) { s.monitor_every = static_cast<int>(parse_integer(v)); });
    t["scheme.norm_tol"] = scheme([](StepScheme& s, const std::string& v) { s.norm_tol = parse_real(v); });
    t["scheme.edge_tol"] = scheme([](StepScheme& s, const std::string& v) { s.edge_tol = parse_real(v); });
    t["scheme.strict"] = scheme([](StepScheme& s, const std::string& v) { s.strict = parse_bool(v); });
    t["scheme.fft_plan"] = [](ScenarioConfig& c, const std::string& v) { c.fft_plan = parse_planner(v); };

    t["scenario.id"] = [](ScenarioConfig&, const std::string&) {};
    t["scenario.duration"] = [](ScenarioConfig& c, const std::string& v) {
      if (lower(trim(v)) == "auto") {
        c.duration.reset();
      } else {
        c.duration = parse_real(v);
        if (!(*c.duration > 0.0)) throw std::invalid_argument("must be positive");
      }
    };
    auto positive = [](double ScenarioConfig::*field) {
      return [field](ScenarioConfig& c, const std::string& v) {
        const double x = parse_real(v);
        if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("must be positive");
        c.*field = x;
      };
    };
    t["scenario.period_cap"] = positive(&ScenarioConfig::period_cap);
    t["scenario.sample_every"] = positive(&ScenarioConfig::sample_every);
    // Zero is the echo of an unused field; the time-of-flight check is in validate().
    auto non_negative = [](double ScenarioConfig::*field) {
      return [field](ScenarioConfig& c, const std::string& v) {
        const double x = parse_real(v);
        if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("must be non-negative");
        c.*field = x;
      };
    };
    t["scenario.tau_tof"] = non_negative(&ScenarioConfig::tau_tof);
    t["scenario.tof_dt"] = non_negative(&ScenarioConfig::tof_dt);
    t["scenario.tau_release"] = [](ScenarioConfig& c, const std::string& v) {
      c.tau_release = parse_real(v);
      if (!(c.tau_release >= 0.0)) throw std::invalid_argument("must be non-negative");
    };
    t["scenario.snapshot_times"] = [](ScenarioConfig& c, const std::string& v) { c.snapshot_times = parse_list(v); };
    t["scenario.g_sweep"] = [](ScenarioConfig& c, const std::string& v) { c.g_sweep = parse_list(v); };
    t["scenario.compare_single_surface"] = [](ScenarioConfig& c, const std::string& v) {
      c.compare_single_surface = parse_bool(v);
    };
    t["scenario.engine"] = [](ScenarioConfig& c, const std::string& v) { c.engine = parse_engine(v); };
    t["scenario.tof_pad"] = [](ScenarioConfig& c, const std::string& v) {
      const long p = parse_integer(v);
      if (p < 1 || p > 64 || !is_power_of_two(static_cast<int>(p)))
        throw std::invalid_argument("must be a power of two in [1, 64]");
      c.tof_pad = static_cast<int>(p);
    };
    t["scenario.tof_keep_interaction"] = [](ScenarioConfig& c, const std::string& v) {
      c.tof_keep_interaction = parse_bool(v);
    };

    t["output.dir"] = [](ScenarioConfig& c, const std::string& v) { c.output_dir = trim(v); };
    t["output.write_snapshots"] = [](ScenarioConfig& c, const std::string& v) { c.write_snapshots = parse_bool(v); };
    return t;
  }();
  return table;
}

const char* const kSections[] = {"grid", "model", "initial", "scheme", "scenario", "output"};

// Little-endian byte packing --------------------------------------------------

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<unsigned char>(v >> (8 * k)));
}

void put_f64(std::vector<unsigned char>& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<unsigned char>(bits >> (8 * k)));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  return std::bit_cast<double>(v);
}

nlohmann::json json_number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

std::string sanitize(const std::string& label) {
  std::string s = label;
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return s;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ScenarioConfig parse_config(const std::string& text) {
  std::vector<Entry> entries;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find_first_of("#;");
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": malformed section header");
      section = lower(trim(s.substr(1, s.size() - 2)));
      if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections))
        throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": expected key = value");
    if (section.empty())
      throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": key outside any section");
    Entry e{section, lower(trim(s.substr(0, eq))), trim(s.substr(eq + 1)), line};
    if (e.key.empty()) throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": empty key");
    for (const auto& prev : entries)
      if (prev.section == e.section && prev.key == e.key)
        parse_fail(e, "duplicate key (first set on line " + std::to_string(prev.line) + ")");
    if (setters().count(e.section + "." + e.key) == 0) parse_fail(e, "unknown key");
    entries.push_back(std::move(e));
  }

  const auto id_entry = std::find_if(entries.begin(), entries.end(), [](const Entry& e) {
    return e.section == "scenario" && e.key == "id";
  });
  if (id_entry == entries.end()) throw Error(ErrorKind::Parse, "missing [scenario] id");
  ScenarioConfig cfg;
  try {
    cfg = default_config(scenario_from_string(lower(id_entry->value)));
  } catch (const Error& err) {
    parse_fail(*id_entry, err.what());
  }

  for (const auto& e : entries) {
    try {
      setters().at(e.section + "." + e.key)(cfg, e.value);
    } catch (const Error& err) {
      parse_fail(e, err.what());
    } catch (const std::exception& err) {
      parse_fail(e, err.what());
    }
  }
  const double n = std::norm(cfg.initial.a1) + std::norm(cfg.initial.a2);
  if (!(n > 0.0) || !std::isfinite(n))
    throw Error(ErrorKind::Parse, "[initial] a1, a2: amplitudes must not both vanish");
  if (std::abs(n - 1.0) > 1e-15) cfg.initial.normalize_amplitudes();
  try {
    cfg.initial.validate();
  } catch (const Error& err) {
    throw Error(ErrorKind::Parse, std::string("[initial]: ") + err.what());
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

std::string echo_config(const ScenarioConfig& c) {
  std::ostringstream o;
  auto d = [](double x) { return format_double(x); };
  auto b = [](bool x) { return x ? "true" : "false"; };
  auto z = [&](cplx x) { return "(" + d(x.real()) + ", " + d(x.imag()) + ")"; };
  auto list = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + d(v[k]);
    return s;
  };
  o << "[scenario]\n"
    << "id = " << to_string(c.id) << "\n"
    << "duration = " << (c.duration ? d(*c.duration) : std::string("auto")) << "\n"
    << "period_cap = " << d(c.period_cap) << "\n"
    << "sample_every = " << d(c.sample_every) << "\n"
    << "snapshot_times = " << list(c.snapshot_times) << "\n"
    << "g_sweep = " << list(c.g_sweep) << "\n"
    << "compare_single_surface = " << b(c.compare_single_surface) << "\n"
    << "engine = " << to_string(c.engine) << "\n"
    << "tau_release = " << d(c.tau_release) << "\n"
    << "tau_tof = " << d(c.tau_tof) << "\n"
    << "tof_dt = " << d(c.tof_dt) << "\n"
    << "tof_pad = " << c.tof_pad << "\n"
    << "tof_keep_interaction = " << b(c.tof_keep_interaction) << "\n\n"
    << "[grid]\n"
    << "nx = " << c.grid.nx() << "\n"
    << "ny = " << c.grid.ny() << "\n"
    << "Lx = " << d(c.grid.Lx()) << "\n"
    << "Ly = " << d(c.grid.Ly()) << "\n\n"
    << "[model]\n"
    << "v0 = " << d(c.model.v0) << "\n"
    << "v1 = " << d(c.model.v1) << "\n"
    << "g11 = " << d(c.model.g11) << "\n"
    << "g22 = " << d(c.model.g22) << "\n"
    << "g12 = " << d(c.model.g12) << "\n"
    << "trap_on = " << b(c.model.trap_on) << "\n"
    << "born_huang = " << b(c.model.born_huang_on) << "\n\n"
    << "[initial]\n"
    << "a1 = " << z(c.initial.a1) << "\n"
    << "a2 = " << z(c.initial.a2) << "\n"
    << "x0 = " << d(c.initial.x0) << "\n"
    << "y0 = " << d(c.initial.y0) << "\n"
    << "px0 = " << d(c.initial.px0) << "\n"
    << "py0 = " << d(c.initial.py0) << "\n"
    << "width = " << d(c.initial.width) << "\n\n"
    << "[scheme]\n"
    << "split = " << (c.scheme.kind == SplitKind::Strang ? "strang" : "lie") << "\n"
    << "dt = " << d(c.scheme.dt) << "\n"
    << "density = " << (c.scheme.density == DensityUpdate::Frozen ? "frozen" : "midpoint") << "\n"
    << "monitor_every = " << c.scheme.monitor_every << "\n"
    << "norm_tol = " << d(c.scheme.norm_tol) << "\n"
    << "edge_tol = " << d(c.scheme.edge_tol) << "\n"
    << "strict = " << b(c.scheme.strict) << "\n"
    << "fft_plan = " << (c.fft_plan == FftPlanner::Measure ? "measure" : "estimate") << "\n\n"
    << "[output]\n"
    << "dir = " << c.output_dir << "\n"
    << "write_snapshots = " << b(c.write_snapshots) << "\n";
  return o.str();
}

std::vector<unsigned char> encode_snapshot(const SpinorField& f, double tau) {
  std::vector<unsigned char> out;
  const auto& g = f.grid();
  out.reserve(kSnapshotHeaderBytes + f.data().size() * 16);
  out.insert(out.end(), std::begin(kSnapshotMagic), std::end(kSnapshotMagic));
  put_u32(out, kEndianMarker);
  out.push_back(f.rep() == Rep::Position ? 0 : 1);
  put_u32(out, static_cast<std::uint32_t>(g.nx()));
  put_u32(out, static_cast<std::uint32_t>(g.ny()));
  put_f64(out, g.Lx());
  put_f64(out, g.Ly());
  put_f64(out, tau);
  put_u32(out, static_cast<std::uint32_t>(f.components()));
  for (const cplx& c : f.data()) {
    put_f64(out, c.real());
    put_f64(out, c.imag());
  }
  return out;
}

SnapshotData decode_snapshot(std::span<const unsigned char> bytes) {
  if (bytes.size() < kSnapshotHeaderBytes)
    throw Error(ErrorKind::Length, "snapshot header truncated: expected " +
                                       std::to_string(kSnapshotHeaderBytes) + " bytes, got " +
                                       std::to_string(bytes.size()));
  const unsigned char* p = bytes.data();
  if (std::memcmp(p, kSnapshotMagic, sizeof kSnapshotMagic) != 0)
    throw Error(ErrorKind::Format, "bad snapshot magic");
  if (get_u32(p + 5) != kEndianMarker) throw Error(ErrorKind::Format, "bad endianness marker");
  const unsigned rep = p[9];
  if (rep > 1) throw Error(ErrorKind::Format, "bad representation flag " + std::to_string(rep));
  const std::uint32_t nx = get_u32(p + 10);
  const std::uint32_t ny = get_u32(p + 14);
  const double Lx = get_f64(p + 18);
  const double Ly = get_f64(p + 26);
  const double tau = get_f64(p + 34);
  const std::uint32_t comps = get_u32(p + 42);
  auto pow2 = [](std::uint32_t n) { return n >= 8 && n <= (1u << 16) && (n & (n - 1)) == 0; };
  if (!pow2(nx) || !pow2(ny))
    throw Error(ErrorKind::Format, "bad grid shape " + std::to_string(nx) + "x" + std::to_string(ny));
  if (!(std::isfinite(Lx) && Lx > 0.0 && std::isfinite(Ly) && Ly > 0.0))
    throw Error(ErrorKind::Format, "bad domain half-extent");
  if (!std::isfinite(tau)) throw Error(ErrorKind::Format, "bad time stamp");
  if (comps != 1 && comps != 2)
    throw Error(ErrorKind::Format, "bad component count " + std::to_string(comps));
  const std::uint64_t expected =
      kSnapshotHeaderBytes + 16ull * comps * static_cast<std::uint64_t>(nx) * ny;
  if (bytes.size() != expected)
    throw Error(ErrorKind::Length, "snapshot size mismatch: expected " + std::to_string(expected) +
                                       " bytes, got " + std::to_string(bytes.size()));
  SnapshotData s;
  s.tau = tau;
  s.field = SpinorField(GridSpec(static_cast<int>(nx), static_cast<int>(ny), Lx, Ly),
                        static_cast<int>(comps), rep == 0 ? Rep::Position : Rep::Momentum);
  const unsigned char* q = p + kSnapshotHeaderBytes;
  for (cplx& c : s.field.data()) {
    c = cplx(get_f64(q), get_f64(q + 8));
    q += 16;
  }
  return s;
}

void write_snapshot(const SpinorField& f, double tau, const std::filesystem::path& path) {
  const auto bytes = encode_snapshot(f, tau);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

SnapshotData read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

std::string format_series(const std::vector<SeriesRow>& rows) {
  std::string out;
  for (std::size_t k = 0; k < std::size(kSeriesColumns); ++k) {
    out += k ? "\t" : "";
    out += kSeriesColumns[k];
  }
  out += "\n";
  for (const auto& r : rows) {
    for (double x : {r.tau, r.p1, r.p2, r.u, r.v, r.w, r.r, r.gamma, r.gamma_unwrapped, r.nx, r.ny,
                     r.norm, r.energy}) {
      out += format_double(x);
      out += '\t';
    }
    out += std::to_string(r.flags);
    out += '\n';
  }
  return out;
}

std::vector<SeriesRow> parse_series(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Format, "empty series file");
  {
    std::istringstream hs(line);
    std::string name;
    std::size_t k = 0;
    while (std::getline(hs, name, '\t')) {
      if (k >= std::size(kSeriesColumns) || name != kSeriesColumns[k])
        throw Error(ErrorKind::Format, "unexpected series header column '" + name + "'");
      ++k;
    }
    if (k != std::size(kSeriesColumns)) throw Error(ErrorKind::Format, "series header is incomplete");
  }
  std::vector<SeriesRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    if (cells.size() != std::size(kSeriesColumns))
      throw Error(ErrorKind::Format, "line " + std::to_string(lineno) + ": expected " +
                                         std::to_string(std::size(kSeriesColumns)) + " columns, got " +
                                         std::to_string(cells.size()));
    double v[13];
    try {
      for (int k = 0; k < 13; ++k) v[k] = parse_plain_double(cells[k]);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Format, "line " + std::to_string(lineno) + ": " + e.what());
    }
    long flags = 0;
    try {
      flags = parse_integer(cells[13]);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Format, "line " + std::to_string(lineno) + ": " + e.what());
    }
    SeriesRow r{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11], v[12],
                static_cast<unsigned>(flags)};
    if (!rows.empty() && !(r.tau > rows.back().tau))
      throw Error(ErrorKind::Format, "line " + std::to_string(lineno) + ": tau is not increasing");
    rows.push_back(r);
  }
  return rows;
}

void write_series(const std::vector<SeriesRow>& rows, const std::filesystem::path& path) {
  write_text_file(path, format_series(rows));
}

std::vector<SeriesRow> read_series(const std::filesystem::path& path) {
  return parse_series(read_text_file(path));
}

std::filesystem::path output_directory(const ScenarioConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  const char* root = std::getenv("SOMB_OUT");
  const std::filesystem::path base = root != nullptr && *root != '\0' ? root : "somb_out";
  return base / to_string(cfg.id);
}

std::string bundle_metadata(const Bundle& b) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["scenario"] = to_string(b.config.id);
  j["conventions"] = {
      {"forward_transform", "Phi(p) = (1/2pi) int exp(-i p.r) psi(r) d^2r"},
      {"plane_wave_sign", kPlaneWaveSign},
      {"momentum_ordering", "FFT wrap-around in snapshots; Nyquist at -pi/dx"},
      {"time_unit", "1/omega"},
  };
  nlohmann::json scalars = nlohmann::json::object();
  for (const auto& [k, v] : b.scalars) scalars[k] = json_number(v);
  j["scalars"] = scalars;
  j["notes"] = b.notes;
  nlohmann::json mons = nlohmann::json::array();
  for (std::size_t k = 0; k < b.monitors.size(); ++k) {
    const auto& m = b.monitors[k];
    mons.push_back({{"label", b.monitor_labels[k]},
                    {"norm0", json_number(m.norm0)},
                    {"energy0", json_number(m.energy0)},
                    {"max_norm_drift", json_number(m.max_norm_drift)},
                    {"max_rel_energy_drift", json_number(m.max_rel_energy_drift)},
                    {"max_edge_mass", json_number(m.max_edge_mass)},
                    {"max_momentum_edge_mass", json_number(m.max_momentum_edge_mass)},
                    {"checks", m.checks},
                    {"flags", m.flags}});
  }
  j["monitors"] = mons;
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : b.series)
    series.push_back({{"label", s.label}, {"engine", to_string(s.engine)}, {"g", s.g},
                      {"file", "series_" + sanitize(s.label) + ".tsv"}, {"rows", s.rows.size()}});
  j["series"] = series;
  nlohmann::json snaps = nlohmann::json::array();
  for (const auto& s : b.snapshots)
    snaps.push_back({{"label", s.label}, {"tau", s.tau}, {"rep", to_string(s.field.rep())},
                     {"file", b.config.write_snapshots ? "snapshot_" + sanitize(s.label) + ".somb" : ""}});
  j["snapshots"] = snaps;
  j["config"] = echo_config(b.config);
  j["flags"] = {{"norm_drift", kFlagNormDrift}, {"edge_mass", kFlagEdgeMass},
                {"momentum_edge_mass", kFlagMomentumEdge}, {"degenerate", kBerryDegenerate}};
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> write_bundle(const Bundle& b, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  written.push_back(dir / "config.ini");
  write_text_file(written.back(), echo_config(b.config));
  for (const auto& s : b.series) {
    written.push_back(dir / ("series_" + sanitize(s.label) + ".tsv"));
    write_series(s.rows, written.back());
  }
  if (b.config.write_snapshots)
    for (const auto& s : b.snapshots) {
      written.push_back(dir / ("snapshot_" + sanitize(s.label) + ".somb"));
      write_snapshot(s.field, s.tau, written.back());
    }
  written.push_back(dir / "metadata.json");
  write_text_file(written.back(), bundle_metadata(b));
  return written;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace somb
