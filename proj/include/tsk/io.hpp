#pragma once

// Output plumbing for experiment runs: CSV at full precision, spectrum JSON,
// atomic file replacement.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "tsk/continuation.hpp"
#include "tsk/newton.hpp"
#include "tsk/spectrum.hpp"

namespace tsk {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double x) { return put(format_double(x)); }
    Row& operator<<(std::size_t x) { return put(std::to_string(x)); }
    Row& operator<<(int x) { return put(std::to_string(x)); }
    Row& operator<<(bool x) { return put(x ? "1" : "0"); }
    Row& operator<<(const std::string& s) { return put(s); }
    Row& operator<<(const char* s) { return put(s); }

   private:
    friend class CsvTable;
    explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
    Row& put(std::string s) {
      cells_.push_back(std::move(s));
      return *this;
    }
    std::vector<std::string>& cells_;
  };

  Row row() {
    rows_.emplace_back();
    return Row(rows_.back());
  }

  std::size_t size() const noexcept { return rows_.size(); }

  std::string str() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(header_);
    for (const auto& r : rows_) {
      if (r.size() != header_.size()) throw std::logic_error("CsvTable: row width differs from header");
      line(r);
    }
    return out.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes to a sibling temporary and renames over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

/// One row per Newton iterate: the axes of a convergence plot plus the
/// inner work behind each step.
inline CsvTable history_table(const NewtonOutcome& o) {
  CsvTable t({"step", "cumulative_fevals", "f_norm", "inner_iterations", "eta"});
  for (std::size_t k = 0; k < o.f_norms.size(); ++k)
    t.row() << k << o.cumulative_fevals[k] << o.f_norms[k] << o.inner_iterations[k] << o.etas[k];
  return t;
}

inline CsvTable branch_table(const std::vector<BranchPoint>& pts) {
  CsvTable t({"s", "lambda", "norm2_u", "norminf_u", "outer_iterations", "total_inner_iterations", "total_fevals"});
  for (const auto& p : pts)
    t.row() << p.s << p.lambda << norm2(p.u) << norm_inf(p.u) << p.stats.outer << p.stats.total_inner()
            << p.stats.fevals;
  return t;
}

inline nlohmann::json spectrum_json(const SpectrumReport& r) {
  nlohmann::json eig = nlohmann::json::array();
  for (const auto& z : r.eigenvalues) eig.push_back({z.real(), z.imag()});
  nlohmann::json j{{"eigenvalues", eig}, {"cluster", {r.cluster_lo, r.cluster_hi}}, {"n_outside", r.n_outside}};
  j["T"] = r.horizon ? nlohmann::json(*r.horizon) : nlohmann::json(nullptr);
  j["lambda"] = r.lambda ? nlohmann::json(*r.lambda) : nlohmann::json(nullptr);
  if (r.multipliers) j["multipliers"] = *r.multipliers;
  return j;
}

}  // namespace tsk
