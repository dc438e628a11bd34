#include <rlar/harness/csv.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rlar::harness {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header.size())
    throw ConfigError("csv row has " + std::to_string(row.size()) + " cells, header has " +
                      std::to_string(header.size()));
  rows.push_back(std::move(row));
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ConfigError("csv has no column '" + name + "'");
}

std::string CsvTable::to_string() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << table.to_string();
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) t.add(split(line));
  return t;
}

namespace {

std::vector<std::string> indexed(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

void append(std::vector<std::string>& row, const Vecd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(format_number(v[i]));
}

void append_names(std::vector<std::string>& header, const std::vector<std::string>& names) {
  header.insert(header.end(), names.begin(), names.end());
}

std::vector<std::string> tag_cells(const RunTag& tag) { return {std::to_string(tag.seed), tag.config_hash}; }

}  // namespace

CsvTable episodes_table(const RunTag& tag, const std::vector<trainer::EpisodeRecord>& episodes) {
  CsvTable t;
  t.header = {"seed", "config_hash", "episode", "steps", "return", "normalized_return", "failed"};
  const Eigen::Index dims = episodes.empty() ? 0 : episodes.front().mean_beta.size();
  append_names(t.header, indexed("mean_beta_", dims));
  append_names(t.header, {"mpc_iterations", "mpc_solves", "mpc_nonconverged", "mpc_cache_hits", "max_mpc_violation"});
  for (const auto& e : episodes) {
    auto row = tag_cells(tag);
    row.insert(row.end(), {std::to_string(e.episode), std::to_string(e.steps), format_number(e.episode_return),
                           format_number(e.normalized_return), e.failed ? "1" : "0"});
    append(row, e.mean_beta);
    row.insert(row.end(), {std::to_string(e.mpc_iterations), std::to_string(e.mpc_solves),
                           std::to_string(e.mpc_nonconverged), std::to_string(e.mpc_cache_hits),
                           format_number(e.max_mpc_violation)});
    t.add(std::move(row));
  }
  return t;
}

CsvTable trajectory_table(const RunTag& tag, const std::vector<trainer::TrajectoryRow>& rows,
                          const std::vector<std::string>& state_names, const std::vector<std::string>& obs_names) {
  CsvTable t;
  t.header = {"seed", "config_hash", "episode", "step", "t"};
  for (const auto& n : state_names) t.header.push_back("state_" + n);
  for (const auto& n : obs_names) t.header.push_back("obs_" + n);
  const Eigen::Index na = rows.empty() ? 0 : rows.front().action.size();
  append_names(t.header, indexed("action_", na));
  append_names(t.header, indexed("a_reg_", na));
  append_names(t.header, indexed("a_rl_", na));
  append_names(t.header, {"reward", "done", "failed"});
  for (const auto& r : rows) {
    auto row = tag_cells(tag);
    row.insert(row.end(), {std::to_string(r.episode), std::to_string(r.step), format_number(r.t)});
    append(row, r.state);
    append(row, r.obs);
    append(row, r.action);
    append(row, r.a_reg);
    append(row, r.a_rl);
    row.insert(row.end(), {format_number(r.reward), r.done ? "1" : "0", r.failed ? "1" : "0"});
    t.add(std::move(row));
  }
  return t;
}

CsvTable beta_table(const RunTag& tag, const std::vector<trainer::TrajectoryRow>& rows) {
  CsvTable t;
  t.header = {"seed", "config_hash", "episode", "step"};
  append_names(t.header, indexed("beta_", rows.empty() ? 0 : rows.front().beta.size()));
  for (const auto& r : rows) {
    auto row = tag_cells(tag);
    row.insert(row.end(), {std::to_string(r.episode), std::to_string(r.step)});
    append(row, r.beta);
    t.add(std::move(row));
  }
  return t;
}

}  // namespace rlar::harness
