#include "synsem/parcellation.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_map>

namespace synsem {
namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<int> ParcellationTable::assignment(Index target_count) const {
  std::vector<int> out(static_cast<std::size_t>(target_count), -1);
  for (const auto& [target, region] : target_region) {
    if (target < 0 || target >= target_count) {
      throw ValidationError("parcellation maps target " + std::to_string(target) +
                            " but only " + std::to_string(target_count) + " targets exist");
    }
    out[static_cast<std::size_t>(target)] = region;
  }
  return out;
}

ParcellationTable load_parcellation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open parcellation: " + path.string(), path.string());
  ParcellationTable table;
  std::unordered_map<std::string, int> index;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected two columns");
    }
    const std::string first = trim(line.substr(0, comma));
    const std::string label = trim(line.substr(comma + 1));
    if (lineno == 1 && first == "target_index") continue;
    long long target = 0;
    const auto [ptr, ec] = std::from_chars(first.data(), first.data() + first.size(), target);
    if (ec != std::errc() || ptr != first.data() + first.size() || target < 0) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad target index '" +
                        first + "'");
    }
    if (label.empty()) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": empty region label");
    }
    auto [it, inserted] = index.emplace(label, static_cast<int>(table.regions.size()));
    if (inserted) table.regions.push_back(label);
    if (!table.target_region.emplace(static_cast<Index>(target), it->second).second) {
      throw ValidationError(path.string() + ": target " + first + " listed twice");
    }
  }
  return table;
}

void write_parcellation(const std::filesystem::path& path, const ParcellationTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string(), path.string());
  out << "target_index,region_label\n";
  for (const auto& [target, region] : table.target_region) {
    out << target << ',' << table.regions[static_cast<std::size_t>(region)] << '\n';
  }
}

const RelabelTable& brodmann_relabel_preset() {
  static const RelabelTable table = {
      {"A1", {"BA41", "BA42"}},
      {"Fusiform", {"BA37"}},
      {"Angular", {"BA39"}},
      {"aSTG", {"BA22-anterior"}},
      {"mSTG", {"BA22-middle"}},
      {"pSTG", {"BA22-posterior"}},
      {"M1", {"BA4"}},
      {"Supramarginal", {"BA40"}},
      {"IFG (Op)", {"BA44"}},
      {"IFG (Tri)", {"BA45"}},
      {"IFG (Orb)", {"BA47"}},
      {"Middle-frontal", {"BA46"}},
      {"V1", {"BA17"}},
      {"Fronto-polar", {"BA10"}},
      {"Temporo-polar", {"BA38"}},
      {"Precuneus", {"BA7"}},
      {"Cingulate", {"BA23", "BA26", "BA29", "BA30", "BA31"}},
  };
  return table;
}

RelabelTable load_relabel_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open relabel table: " + path.string(), path.string());
  RelabelTable out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected two columns");
    }
    std::string label = trim(line.substr(0, comma));
    std::string rest = trim(line.substr(comma + 1));
    if (lineno == 1 && label == "label") continue;
    if (rest.size() >= 2 && rest.front() == '"' && rest.back() == '"') {
      rest = rest.substr(1, rest.size() - 2);
    }
    std::vector<std::string> areas;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto slash = rest.find('/', pos);
      const auto piece = trim(rest.substr(pos, slash == std::string::npos ? std::string::npos
                                                                         : slash - pos));
      if (!piece.empty()) areas.push_back(piece);
      if (slash == std::string::npos) break;
      pos = slash + 1;
    }
    out.emplace_back(std::move(label), std::move(areas));
  }
  return out;
}

ParcellationTable relabel(const ParcellationTable& table, const RelabelTable& relabel) {
  std::unordered_map<std::string, std::string> display;
  for (const auto& [label, areas] : relabel) {
    for (const auto& a : areas) display.emplace(a, label);
  }
  ParcellationTable out;
  std::unordered_map<std::string, int> index;
  std::vector<int> remap(table.regions.size());
  for (std::size_t r = 0; r < table.regions.size(); ++r) {
    const auto it = display.find(table.regions[r]);
    const std::string& name = it == display.end() ? table.regions[r] : it->second;
    auto [pos, inserted] = index.emplace(name, static_cast<int>(out.regions.size()));
    if (inserted) out.regions.push_back(name);
    remap[r] = pos->second;
  }
  for (const auto& [target, region] : table.target_region) {
    out.target_region.emplace(target, remap[static_cast<std::size_t>(region)]);
  }
  return out;
}

}  // namespace synsem
