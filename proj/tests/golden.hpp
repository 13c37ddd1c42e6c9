#pragma once

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

// key=value fixture written by tools/golden_oracle.
inline std::map<std::string, double> read_golden(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("missing fixture " + path);
  std::map<std::string, double> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
  }
  return out;
}

inline std::string golden_path() { return std::string(SNPP_TEST_DATA_DIR) + "/golden_cell_r025.txt"; }
