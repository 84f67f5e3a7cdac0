#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "somb/scenarios.hpp"

namespace somb {

/// Parses the sectioned key = value config format.
///
/// Sections: [grid] [model] [initial] [scheme] [scenario] [output]. The
/// scenario id (`[scenario] id`) selects the defaults every other key
/// overrides. Unknown or duplicate keys are Parse errors naming the key and
/// line; values that break a type invariant are reported with their key.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Every field of the resolved config, with 17 significant digits;
/// parse_config(echo_config(c)) == c.
std::string echo_config(const ScenarioConfig& cfg);

// Field snapshots ------------------------------------------------------------

inline constexpr char kSnapshotMagic[5] = {'S', 'O', 'M', 'B', '1'};
inline constexpr std::uint32_t kEndianMarker = 0x01020304u;
inline constexpr std::size_t kSnapshotHeaderBytes = 46;

struct SnapshotData {
  SpinorField field;
  double tau = 0.0;
};

/// Header: magic "SOMB1", u32 endianness marker, u8 rep (0 position,
/// 1 momentum), u32 nx, u32 ny, f64 Lx, f64 Ly, f64 tau, u32 components; all
/// little-endian. Payload: (re, im) f64 pairs, component-major, row-major.
std::vector<unsigned char> encode_snapshot(const SpinorField& f, double tau);
/// Throws Error(Format) for a bad header and Error(Length) when the payload
/// size differs from the header's promise.
SnapshotData decode_snapshot(std::span<const unsigned char> bytes);

void write_snapshot(const SpinorField& f, double tau, const std::filesystem::path& path);
SnapshotData read_snapshot(const std::filesystem::path& path);

// Series files ---------------------------------------------------------------

inline constexpr const char* kSeriesColumns[] = {
    "tau", "P1", "P2", "u", "v", "w", "r", "gamma", "gamma_unwrapped",
    "nx", "ny", "norm", "energy", "flags"};

/// Tab-separated, one header row, %.17g numbers, "nan" where a column does
/// not apply.
std::string format_series(const std::vector<SeriesRow>& rows);
/// Throws Error(Format) on a wrong header, a ragged row, a bad number or a
/// non-increasing tau.
std::vector<SeriesRow> parse_series(const std::string& text);

void write_series(const std::vector<SeriesRow>& rows, const std::filesystem::path& path);
std::vector<SeriesRow> read_series(const std::filesystem::path& path);

// Bundles --------------------------------------------------------------------

/// cfg.output_dir if set, else $SOMB_OUT/<scenario>, else ./somb_out/<scenario>.
std::filesystem::path output_directory(const ScenarioConfig& cfg);

/// metadata.json contents for a bundle.
std::string bundle_metadata(const Bundle& b);

/// Writes config.ini, metadata.json, series_<label>.tsv and (unless disabled)
/// snapshot_<label>.somb into `dir`. Returns the written paths.
std::vector<std::filesystem::path> write_bundle(const Bundle& b, const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// %.17g, with "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double x);

}  // namespace somb
