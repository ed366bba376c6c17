#include "formctl/trace_csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "formctl/errors.hpp"

namespace formctl {
namespace {

void put(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += ',';
  line += buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& s, long row) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorCode::kParseError,
                "row " + std::to_string(row) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  const int m = trace.m;
  std::string header = "t,agent,role,px,py,pz";
  for (int k = 1; k < m; ++k) {
    for (const char* a : {"x", "y", "z"}) header += ",d" + std::to_string(k) + a;
  }
  for (int k = 0; k < kDim * m; ++k) header += ",eta" + std::to_string(k);
  for (int k = 0; k < 2 * kDim * m; ++k) header += ",e" + std::to_string(k);
  header += ",ux,uy,uz,err_norm\n";
  out << header;
  std::string line;
  for (int s = 0; s < trace.samples(); ++s) {
    for (int i = 0; i < trace.n; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", trace.times[s]);
      line = buf;
      line += ',' + std::to_string(i + 1);
      line += i < trace.n_leaders ? ",leader" : ",follower";
      for (int k = 0; k < kDim * m; ++k) put(line, trace.x[s](k, i));
      for (int k = 0; k < kDim * m; ++k) put(line, trace.eta[s](k, i));
      for (int k = 0; k < 2 * kDim * m; ++k) put(line, trace.err[s](k, i));
      for (int k = 0; k < kDim; ++k) put(line, trace.u[s](k, i));
      put(line, trace.err_norm(s, i));
      line += '\n';
      out << line;
    }
  }
}

void write_trace_csv(const std::filesystem::path& path, const SimTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
  }
  write_trace_csv(out, trace);
}

SimTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "empty trace");
  const auto header = split(line);
  int eta_cols = 0;
  for (const auto& h : header) eta_cols += h.rfind("eta", 0) == 0;
  if (eta_cols == 0 || eta_cols % kDim != 0) {
    throw Error(ErrorCode::kParseError, "trace header lacks estimate columns");
  }
  SimTrace trace;
  trace.m = eta_cols / kDim;
  const int d = kDim * trace.m;
  const std::size_t cols = 3 + d + d + 2 * d + kDim + 1;
  if (header.size() != cols) {
    throw Error(ErrorCode::kParseError, "trace header has " +
                                            std::to_string(header.size()) +
                                            " columns, expected " +
                                            std::to_string(cols));
  }
  struct Row {
    double t;
    int agent;
    bool leader;
    std::vector<double> v;
  };
  std::vector<Row> rows;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != cols) {
      throw Error(ErrorCode::kParseError, "row " + std::to_string(row) +
                                              " has " + std::to_string(f.size()) +
                                              " columns");
    }
    Row r;
    r.t = to_double(f[0], row);
    r.agent = static_cast<int>(to_double(f[1], row)) - 1;
    if (f[2] != "leader" && f[2] != "follower") {
      throw Error(ErrorCode::kParseError, "row " + std::to_string(row) + ": bad role");
    }
    r.leader = f[2] == "leader";
    for (std::size_t k = 3; k < cols; ++k) r.v.push_back(to_double(f[k], row));
    rows.push_back(std::move(r));
  }
  int n = 0;
  for (const auto& r : rows) n = std::max(n, r.agent + 1);
  if (n == 0 || rows.size() % n != 0) {
    throw Error(ErrorCode::kParseError, "row count is not a multiple of the agent count");
  }
  trace.n = n;
  for (int i = 0; i < n; ++i) trace.n_leaders += rows[i].leader;
  const std::size_t samples = rows.size() / n;
  for (std::size_t s = 0; s < samples; ++s) {
    Matrix x(d, n), eta(d, n), err(2 * d, n), u(kDim, n);
    for (int i = 0; i < n; ++i) {
      const Row& r = rows[s * n + i];
      if (r.agent != i || r.t != rows[s * n].t) {
        throw Error(ErrorCode::kParseError, "rows are not grouped by sample");
      }
      std::size_t k = 0;
      for (int j = 0; j < d; ++j) x(j, i) = r.v[k++];
      for (int j = 0; j < d; ++j) eta(j, i) = r.v[k++];
      for (int j = 0; j < 2 * d; ++j) err(j, i) = r.v[k++];
      for (int j = 0; j < kDim; ++j) u(j, i) = r.v[k++];
    }
    if (s > 0 && !(rows[s * n].t > trace.times.back())) {
      throw Error(ErrorCode::kParseError, "times are not strictly increasing");
    }
    trace.times.push_back(rows[s * n].t);
    trace.x.push_back(std::move(x));
    trace.eta.push_back(std::move(eta));
    trace.err.push_back(std::move(err));
    trace.u.push_back(std::move(u));
  }
  return trace;
}

SimTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path.string());
  return read_trace_csv(in);
}

}  // namespace formctl
