#pragma once

#include <string>
#include <vector>

namespace entroflow::io {

// 17 significant digits: round-trips IEEE doubles exactly
std::string fmt(double x);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const Table& t);
std::string to_csv(const Table& t);
Table read_csv(const std::string& path);

// two-column "r,value" profiles
void write_profile(const std::string& path, const std::vector<double>& r,
                   const std::vector<double>& v);
void read_profile(const std::string& path, std::vector<double>& r, std::vector<double>& v);

}
