#pragma once

#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkde/detail/format.hpp"

namespace rkde {

// n points in [0,1]^d, row-major. Containment in the closed unit cube is an
// invariant: add() rejects anything outside.
class SampleSet {
 public:
  explicit SampleSet(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("SampleSet: dim must be >= 1");
  }

  int dim() const { return dim_; }
  std::size_t size() const { return data_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return data_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_),
            static_cast<std::size_t>(dim_)};
  }

  std::span<const double> data() const { return data_; }

  void add(std::span<const double> x) {
    if (static_cast<int>(x.size()) != dim_)
      throw std::invalid_argument("SampleSet: point has wrong dimension");
    for (double c : x) {
      if (!(c >= 0.0 && c <= 1.0))
        throw std::invalid_argument("SampleSet: coordinate outside [0,1]");
    }
    data_.insert(data_.end(), x.begin(), x.end());
  }

  void reserve(std::size_t n) { data_.reserve(n * static_cast<std::size_t>(dim_)); }

  // CSV with shortest round-trip doubles; header row x1,...,xd optional.
  void save_csv(const std::string& path, bool with_header = true) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    if (with_header) {
      for (int j = 0; j < dim_; ++j) out << (j ? ",x" : "x") << (j + 1);
      out << '\n';
    }
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = point(i);
      for (int j = 0; j < dim_; ++j) {
        if (j) out << ',';
        out << detail::format_double(p[static_cast<std::size_t>(j)]);
      }
      out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
  }

  // Accepts files with or without a header row; every data row must have the
  // same width and every value must parse and land in [0,1].
  static SampleSet load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      bool numeric = true;
      while (std::getline(ss, cell, ',')) {
        try {
          std::size_t used = 0;
          const double v = std::stod(cell, &used);
          if (used != cell.size()) throw std::invalid_argument(cell);
          row.push_back(v);
        } catch (const std::exception&) {
          numeric = false;
          break;
        }
      }
      if (!numeric) {
        if (lineno == 1) continue;  // header row
        throw std::invalid_argument(path + ": non-numeric value at line " +
                                    std::to_string(lineno));
      }
      if (row.empty()) continue;
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument(path + ": no data rows");
    const std::size_t d = rows.front().size();
    SampleSet set(static_cast<int>(d));
    set.reserve(rows.size());
    for (const auto& row : rows) {
      if (row.size() != d) throw std::invalid_argument(path + ": ragged row widths");
      set.add(row);
    }
    return set;
  }

 private:
  int dim_;
  std::vector<double> data_;
};

}  // namespace rkde
