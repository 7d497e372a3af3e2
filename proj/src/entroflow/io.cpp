#include "entroflow/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace entroflow::io {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    if (j) os << ',';
    os << t.columns[j];
  }
  os << '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw std::invalid_argument("to_csv: ragged row");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) os << ',';
      os << fmt(row[j]);
    }
    os << '\n';
  }
  return os.str();
}

void write_csv(const std::string& path, const Table& t) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_csv: cannot open " + path);
  f << to_csv(t);
  if (!f) throw std::runtime_error("write_csv: write failed for " + path);
}

Table read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_csv: cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("read_csv: empty file " + path);
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
  }
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream rs(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(rs, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("read_csv: non-numeric cell '" + cell + "' in " + path);
      }
    }
    if (row.size() != t.columns.size())
      throw std::runtime_error("read_csv: ragged row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_profile(const std::string& path, const std::vector<double>& r,
                   const std::vector<double>& v) {
  if (r.size() != v.size()) throw std::invalid_argument("write_profile: size mismatch");
  Table t;
  t.columns = {"r", "value"};
  t.rows.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) t.rows.push_back({r[i], v[i]});
  write_csv(path, t);
}

void read_profile(const std::string& path, std::vector<double>& r, std::vector<double>& v) {
  Table t = read_csv(path);
  if (t.columns.size() != 2 || t.columns[0] != "r")
    throw std::runtime_error("read_profile: expected header r,value in " + path);
  r.clear();
  v.clear();
  for (const auto& row : t.rows) {
    r.push_back(row[0]);
    v.push_back(row[1]);
  }
}

}
