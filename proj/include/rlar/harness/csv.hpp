#pragma once

#include <rlar/trainer/trainer.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace rlar::harness {

/// Shortest text that reads back to the same double ("%.17g", trimmed by
/// round-trip check). Non-finite values print as nan/inf/-inf.
std::string format_number(double value);

/// In-memory table with a fixed header; cells are already formatted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  /// Column index by name; ConfigError when missing.
  std::size_t column(const std::string& name) const;
  std::string to_string() const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// Parses files written by write_csv (no quoting is ever needed there).
CsvTable read_csv(const std::filesystem::path& path);

/// Columns shared by every run artifact.
struct RunTag {
  std::uint64_t seed = 0;
  std::string config_hash;
};

CsvTable episodes_table(const RunTag& tag, const std::vector<trainer::EpisodeRecord>& episodes);
CsvTable trajectory_table(const RunTag& tag, const std::vector<trainer::TrajectoryRow>& rows,
                          const std::vector<std::string>& state_names, const std::vector<std::string>& obs_names);
/// Per-step focus weights.
CsvTable beta_table(const RunTag& tag, const std::vector<trainer::TrajectoryRow>& rows);

}  // namespace rlar::harness
