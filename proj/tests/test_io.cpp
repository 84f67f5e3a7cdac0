#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "helpers.hpp"
#include "somb/error.hpp"
#include "somb/io.hpp"

using namespace somb;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Contract;
}

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("somb_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

bool same_bits(double a, double b) {
  std::uint64_t x, y;
  std::memcpy(&x, &a, 8);
  std::memcpy(&y, &b, 8);
  return x == y;
}

}  // namespace

TEST_CASE("empty model section picks the scenario defaults") {
  const auto c = parse_config("[scenario]\nid = self_interference\n[model]\n");
  CHECK(c.model.v0 == 8.0);
  CHECK(c.model.v1 == 8.0);
  CHECK(c.model.g11 == 0.0);
  CHECK(c.model.g22 == 0.0);
  CHECK(c.initial.px0 == 8.0);
  CHECK(c.duration.value() == doctest::Approx(16.0 * std::numbers::pi));
  CHECK(c.snapshot_times.size() == 3);
}

TEST_CASE("amplitudes are renormalized") {
  const auto c = parse_config(
      "[scenario]\nid = berry_trace\n[initial]\na1 = 0.7071\na2 = -0.7071\n");
  CHECK(std::abs(std::norm(c.initial.a1) + std::norm(c.initial.a2) - 1.0) < 1e-15);
  CHECK(c.initial.a1.real() == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(c.initial.a2.real() == doctest::Approx(-1.0 / std::sqrt(2.0)));
}

TEST_CASE("config errors name the key and line") {
  const std::string dup = "[scenario]\nid = custom\n[model]\nv = 1\nv = 2\n";
  CHECK(kind_of([&] { parse_config(dup); }) == ErrorKind::Parse);
  const auto msg = error_text([&] { parse_config(dup); });
  CHECK(msg.find("line 5") != std::string::npos);
  CHECK(msg.find("v") != std::string::npos);
  CHECK(msg.find("duplicate") != std::string::npos);

  const auto typo = error_text([] { parse_config("[scenario]\nid = custom\n[model]\nvv = 1\n"); });
  CHECK(typo.find("line 4") != std::string::npos);
  CHECK(typo.find("vv") != std::string::npos);

  CHECK(kind_of([] { parse_config("[grid]\nnx = 64\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_config("[scenario]\nid = nonsense\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_config("[bogus]\n"); }) == ErrorKind::Parse);
  const auto grid = error_text([] { parse_config("[scenario]\nid = custom\n[grid]\nnx = 100\n"); });
  CHECK(grid.find("nx") != std::string::npos);
  CHECK(grid.find("line 4") != std::string::npos);
  CHECK(kind_of([] { parse_config("[scenario]\nid = custom\n[scheme]\ndt = abc\n"); }) ==
        ErrorKind::Parse);
}

TEST_CASE("pi-scaled values and lists parse") {
  const auto c = parse_config(
      "[scenario]\nid = time_of_flight\ntau_release = 16*pi\ntau_tof = pi\ntof_dt = pi/8\n"
      "snapshot_times = 2pi, 0.5\n");
  CHECK(c.tau_release == 16.0 * std::numbers::pi);
  CHECK(c.tau_tof == std::numbers::pi);
  CHECK(c.tof_dt == std::numbers::pi / 8.0);
  REQUIRE(c.snapshot_times.size() == 2);
  CHECK(c.snapshot_times[1] == 0.5);
}

TEST_CASE("config echo re-parses to the identical config") {
  for (auto id : {ScenarioId::BerryTrace, ScenarioId::SelfInterference, ScenarioId::TimeOfFlight,
                  ScenarioId::PhononSwap, ScenarioId::NonabelianRoundtrip, ScenarioId::Custom}) {
    const auto c = default_config(id);
    const auto back = parse_config(echo_config(c));
    CAPTURE(std::string(to_string(id)));
    CHECK(back == c);
    CHECK(echo_config(back) == echo_config(c));
  }
  auto c = parse_config(
      "[scenario]\nid = custom\nengine = single_surface\nduration = 0.3\n"
      "[initial]\na1 = (0.3, 0.1)\na2 = (0.2, -0.9)\nwidth = 1.25\n"
      "[model]\nv0 = 2.5\nv1 = 1.5\ng12 = 0.1\n[scheme]\nsplit = lie\ndensity = midpoint\n"
      "fft_plan = estimate\n[output]\ndir = /tmp/x y\n");
  const auto back = parse_config(echo_config(c));
  CHECK(back == c);
  CHECK(back.output_dir == "/tmp/x y");
}

TEST_CASE("snapshot round trip is bit-exact") {
  const GridSpec g(16, 32, 3.0, 5.0);
  for (int comps : {1, 2}) {
    auto f = test::random_field(g, comps, 11 + comps);
    f.comp(0)[3] = cplx(-0.0, std::numeric_limits<double>::denorm_min());
    const auto bytes = encode_snapshot(f, 1.2345678901234567);
    CHECK(bytes.size() == kSnapshotHeaderBytes + 16u * comps * g.size());
    const auto back = decode_snapshot(bytes);
    CHECK(back.tau == 1.2345678901234567);
    CHECK(back.field.grid() == g);
    CHECK(back.field.rep() == f.rep());
    REQUIRE(back.field.components() == comps);
    bool identical = true;
    for (std::size_t k = 0; k < f.data().size(); ++k)
      identical = identical && same_bits(f.data()[k].real(), back.field.data()[k].real()) &&
                  same_bits(f.data()[k].imag(), back.field.data()[k].imag());
    CHECK(identical);
  }
  const auto dir = scratch_dir("snap");
  const auto f = to_momentum(test::random_field(g, 2, 5));
  write_snapshot(f, 3.0, dir / "a.somb");
  const auto back = read_snapshot(dir / "a.somb");
  CHECK(back.field.rep() == Rep::Momentum);
  CHECK(encode_snapshot(back.field, back.tau) == encode_snapshot(f, 3.0));
  std::filesystem::remove_all(dir);
}

TEST_CASE("snapshot reader rejects damaged files") {
  const GridSpec g(8, 8, 1.0, 1.0);
  const auto bytes = encode_snapshot(test::random_field(g, 2, 3), 0.5);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(kind_of([&] { decode_snapshot(bad_magic); }) == ErrorKind::Format);

  auto bad_endian = bytes;
  std::swap(bad_endian[5], bad_endian[8]);
  CHECK(kind_of([&] { decode_snapshot(bad_endian); }) == ErrorKind::Format);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 10);
  CHECK(kind_of([&] { decode_snapshot(truncated); }) == ErrorKind::Length);
  const auto msg = error_text([&] { decode_snapshot(truncated); });
  CHECK(msg.find(std::to_string(bytes.size())) != std::string::npos);
  CHECK(msg.find(std::to_string(truncated.size())) != std::string::npos);

  auto extra = bytes;
  extra.push_back(0);
  CHECK(kind_of([&] { decode_snapshot(extra); }) == ErrorKind::Length);

  std::vector<unsigned char> tiny(bytes.begin(), bytes.begin() + 20);
  CHECK(kind_of([&] { decode_snapshot(tiny); }) == ErrorKind::Length);
}

TEST_CASE("fuzzed snapshot headers only raise errors") {
  const GridSpec g(8, 8, 1.0, 1.0);
  const auto bytes = encode_snapshot(test::random_field(g, 1, 9), 0.25);
  std::mt19937 rng(1234);
  std::uniform_int_distribution<int> pos(0, static_cast<int>(kSnapshotHeaderBytes) - 1);
  std::uniform_int_distribution<int> val(0, 255);
  int errors = 0;
  int accepted = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    auto b = bytes;
    const int flips = 1 + trial % 4;
    for (int k = 0; k < flips; ++k) b[static_cast<std::size_t>(pos(rng))] = static_cast<unsigned char>(val(rng));
    if (trial % 7 == 0) b.resize(static_cast<std::size_t>(val(rng)) % b.size());
    try {
      decode_snapshot(b);
      ++accepted;
    } catch (const Error& e) {
      CHECK((e.kind() == ErrorKind::Format || e.kind() == ErrorKind::Length));
      ++errors;
    }
  }
  CHECK(errors + accepted == 3000);
  CHECK(errors > 0);
}

TEST_CASE("series files re-parse to identical doubles") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<SeriesRow> rows;
  for (int k = 0; k < 50; ++k) {
    SeriesRow r;
    r.tau = 0.05 * k + 1e-17 * k;
    r.p1 = u(rng);
    r.p2 = std::exp(u(rng) * 30.0);
    r.u = u(rng) * 1e-300;
    r.v = u(rng);
    r.w = -0.0;
    r.r = u(rng);
    r.gamma = k % 3 == 0 ? std::numeric_limits<double>::quiet_NaN() : u(rng);
    r.gamma_unwrapped = u(rng);
    r.nx = u(rng);
    r.ny = u(rng);
    r.norm = 1.0 + 1e-16 * k;
    r.energy = std::numeric_limits<double>::infinity();
    r.flags = static_cast<unsigned>(k % 16);
    rows.push_back(r);
  }
  const auto text = format_series(rows);
  const auto back = parse_series(text);
  REQUIRE(back.size() == rows.size());
  bool identical = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& a = rows[k];
    const auto& b = back[k];
    for (auto [x, y] : {std::pair{a.tau, b.tau}, {a.p1, b.p1}, {a.p2, b.p2}, {a.u, b.u}, {a.v, b.v},
                        {a.w, b.w}, {a.r, b.r}, {a.gamma_unwrapped, b.gamma_unwrapped}, {a.nx, b.nx},
                        {a.ny, b.ny}, {a.norm, b.norm}, {a.energy, b.energy}})
      identical = identical && same_bits(x, y);
    identical = identical && (std::isnan(a.gamma) ? std::isnan(b.gamma) : same_bits(a.gamma, b.gamma));
    identical = identical && a.flags == b.flags;
  }
  CHECK(identical);
  CHECK(format_series(back) == text);
}

TEST_CASE("series reader rejects malformed input") {
  std::vector<SeriesRow> rows(3);
  rows[1].tau = 1.0;
  rows[2].tau = 2.0;
  const auto text = format_series(rows);
  CHECK(kind_of([] { parse_series(""); }) == ErrorKind::Format);
  CHECK(kind_of([] { parse_series("tau\tP1\n"); }) == ErrorKind::Format);
  auto ragged = text + "3\t1\n";
  CHECK(kind_of([&] { parse_series(ragged); }) == ErrorKind::Format);
  std::vector<SeriesRow> back_in_time = rows;
  back_in_time[2].tau = 0.5;
  CHECK(kind_of([&] { parse_series(format_series(back_in_time)); }) == ErrorKind::Format);
  auto garbage = text;
  garbage.replace(garbage.rfind("2\t"), 1, "x");
  CHECK(kind_of([&] { parse_series(garbage); }) == ErrorKind::Format);
}

TEST_CASE("bundle writer lays out the run directory") {
  Bundle b;
  b.config = default_config(ScenarioId::Custom);
  Series s;
  s.label = "full g0.25";
  s.rows.resize(2);
  s.rows[1].tau = 0.1;
  b.series.push_back(s);
  b.snapshots.push_back({"final", test::random_field(GridSpec(8, 8, 1.0, 1.0), 2, 1), 0.1});
  b.scalars["x"] = 1.5;
  b.scalars["undefined"] = std::numeric_limits<double>::quiet_NaN();
  b.notes["n"] = "note";
  const auto dir = scratch_dir("bundle");
  const auto files = write_bundle(b, dir);
  CHECK(files.size() == 4);
  CHECK(std::filesystem::exists(dir / "config.ini"));
  CHECK(std::filesystem::exists(dir / "series_full_g0.25.tsv"));
  CHECK(std::filesystem::exists(dir / "snapshot_final.somb"));
  CHECK(parse_config(read_text_file(dir / "config.ini")) == b.config);
  CHECK(read_series(dir / "series_full_g0.25.tsv").size() == 2);
  const auto meta = read_text_file(dir / "metadata.json");
  CHECK(meta.find("\"undefined\": null") != std::string::npos);
  CHECK(meta.find("\"plane_wave_sign\": 1") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("output directory resolution") {
  auto c = default_config(ScenarioId::BerryTrace);
  c.output_dir = "/tmp/explicit";
  CHECK(output_directory(c) == std::filesystem::path("/tmp/explicit"));
  c.output_dir.clear();
  const auto p = output_directory(c);
  CHECK(p.filename() == "berry_trace");
}
