#include "partly/data.hpp"
#include "partly/format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace partly {

std::string format_double(double x) {
  if (x == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Dataset make_dataset(Vector times, std::vector<int> status, Matrix z, Index p,
                     std::vector<std::string> names) {
  const Index n = times.size();
  if (n == 0) throw InputError("dataset has no subjects");
  if (static_cast<Index>(status.size()) != n || z.rows() != n) {
    throw InputError("times, status and covariates disagree in length");
  }
  if (z.cols() < 1) throw InputError("at least one covariate column is required");
  if (p < 0 || p > z.cols()) throw InputError("parametric block size out of range");
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(times(i)) || times(i) <= 0.0) {
      throw InputError("nonpositive time for subject " + std::to_string(i + 1));
    }
    if (status[i] != 0 && status[i] != 1) {
      throw InputError("status must be 0 or 1 (subject " + std::to_string(i + 1) + ")");
    }
  }
  if (!z.allFinite()) throw InputError("covariates contain missing or non-finite values");
  if (names.empty()) {
    for (Index j = 0; j < z.cols(); ++j) names.push_back("z" + std::to_string(j + 1));
  }
  if (static_cast<Index>(names.size()) != z.cols()) {
    throw InputError("covariate names disagree with column count");
  }
  Dataset ds;
  ds.times = std::move(times);
  ds.status = std::move(status);
  ds.z = std::move(z);
  ds.p = p;
  ds.names = std::move(names);
  return ds;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_row(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

Dataset load_dataset(std::string_view csv_text, const Schema& schema) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_no;
  std::size_t start = 0, count = 0;
  while (start <= csv_text.size()) {
    auto pos = csv_text.find('\n', start);
    auto line = csv_text.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                     : pos - start);
    ++count;
    if (!trim(line).empty()) {
      rows.push_back(split_row(line));
      line_no.push_back(count);
    }
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (rows.empty()) throw InputError("missing header row");
  const auto header = rows.front();
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (!index.emplace(header[j], j).second) {
      throw InputError("duplicate column '" + header[j] + "'");
    }
  }
  auto locate = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw InputError("column '" + name + "' not found in header");
    return it->second;
  };
  const std::size_t tcol = locate(schema.time_column);
  const std::size_t scol = locate(schema.status_column);

  std::vector<std::string> order = schema.parametric;
  std::set<std::string> used(order.begin(), order.end());
  if (used.size() != order.size()) throw InputError("parametric columns repeated");
  if (schema.nonparametric.empty()) {
    for (const auto& h : header) {
      if (h != schema.time_column && h != schema.status_column && !used.count(h)) {
        order.push_back(h);
      }
    }
  } else {
    for (const auto& h : schema.nonparametric) {
      if (!used.insert(h).second) throw InputError("column '" + h + "' listed twice");
      order.push_back(h);
    }
    const std::size_t covariates = header.size() - 2;
    if (order.size() != covariates) {
      throw InputError("p + q = " + std::to_string(order.size()) + " does not match the " +
                       std::to_string(covariates) + " covariate columns");
    }
  }
  std::vector<std::size_t> cols;
  for (const auto& name : order) {
    const auto c = locate(name);
    if (c == tcol || c == scol) throw InputError("time/status column used as covariate");
    cols.push_back(c);
  }

  const Index n = static_cast<Index>(rows.size()) - 1;
  Vector times(n);
  std::vector<int> status(static_cast<std::size_t>(n));
  Matrix z(n, static_cast<Index>(cols.size()));
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i) + 1];
    const std::string where = " on line " + std::to_string(line_no[static_cast<std::size_t>(i) + 1]);
    if (row.size() != header.size()) throw InputError("wrong number of fields" + where);
    double v = 0.0;
    if (!parse_number(row[tcol], v)) throw InputError("nonnumeric time" + where);
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("nonpositive time" + where);
    times(i) = v;
    if (!parse_number(row[scol], v) || (v != 0.0 && v != 1.0)) {
      throw InputError("status outside {0,1}" + where);
    }
    status[static_cast<std::size_t>(i)] = static_cast<int>(v);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (!parse_number(row[cols[j]], v)) {
        throw InputError("missing or nonnumeric covariate '" + order[j] + "'" + where);
      }
      z(i, static_cast<Index>(j)) = v;
    }
  }
  return make_dataset(std::move(times), std::move(status), std::move(z),
                      static_cast<Index>(schema.parametric.size()), order);
}

Dataset read_dataset_file(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_dataset(buf.str(), schema);
}

std::string serialize_dataset(const Dataset& ds) {
  std::ostringstream out;
  out << "time,status";
  for (const auto& name : ds.names) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < ds.n(); ++i) {
    out << format_double(ds.times(i)) << ',' << ds.status[static_cast<std::size_t>(i)];
    for (Index j = 0; j < ds.r(); ++j) out << ',' << format_double(ds.z(i, j));
    out << '\n';
  }
  return out.str();
}

Index TimeGrid::interval_of(double s) const {
  if (s <= 0.0) return 0;
  auto it = std::lower_bound(knots.begin(), knots.end(), s);
  if (it == knots.end()) return intervals();
  return static_cast<Index>(it - knots.begin());
}

Index TimeGrid::knot_at_or_before(double s) const {
  auto it = std::upper_bound(knots.begin(), knots.end(), s);
  if (it == knots.begin()) return 0;
  return static_cast<Index>(it - knots.begin()) - 1;
}

TimeGrid build_time_grid(const Dataset& ds, std::optional<double> tau) {
  double last_event = -1.0;
  for (Index i = 0; i < ds.n(); ++i) {
    if (ds.status[static_cast<std::size_t>(i)] == 1) last_event = std::max(last_event, ds.times(i));
  }
  if (last_event < 0.0) throw InputError("no events");
  TimeGrid grid;
  if (tau) {
    if (!(*tau > 0.0) || !std::isfinite(*tau)) throw InputError("tau must be positive");
    grid.tau = *tau;
  } else {
    grid.tau = last_event;
  }
  std::vector<std::pair<double, bool>> pts;
  pts.reserve(static_cast<std::size_t>(ds.n()));
  bool any_event = false;
  for (Index i = 0; i < ds.n(); ++i) {
    const double t = ds.times(i);
    if (t > grid.tau) continue;
    const bool ev = ds.status[static_cast<std::size_t>(i)] == 1;
    any_event = any_event || ev;
    pts.emplace_back(t, ev);
  }
  if (!any_event) throw InputError("no events at or before tau");
  std::sort(pts.begin(), pts.end());
  grid.knots.push_back(0.0);
  grid.event.push_back(false);
  for (const auto& [t, ev] : pts) {
    if (t == grid.knots.back()) {
      if (ev) grid.event.back() = true;
    } else {
      grid.knots.push_back(t);
      grid.event.push_back(ev);
    }
  }
  if (grid.knots.back() < grid.tau) {
    grid.knots.push_back(grid.tau);
    grid.event.push_back(false);
  }
  return grid;
}

Matrix at_risk_moment(const Dataset& ds, double s, const WeightFn& weights,
                      const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Matrix out = Matrix::Zero(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (Index i = 0; i < ds.n(); ++i) {
    if (ds.times(i) < s) continue;
    const double w = weights ? weights(i, s) : 1.0;
    for (std::size_t a = 0; a < rows.size(); ++a) {
      const double za = w * ds.z(i, rows[a]);
      for (std::size_t b = 0; b < cols.size(); ++b) {
        out(static_cast<Index>(a), static_cast<Index>(b)) += za * ds.z(i, cols[b]);
      }
    }
  }
  return out / static_cast<double>(ds.n());
}

std::vector<Index> all_columns(const Dataset& ds) {
  std::vector<Index> v(static_cast<std::size_t>(ds.r()));
  for (Index j = 0; j < ds.r(); ++j) v[static_cast<std::size_t>(j)] = j;
  return v;
}

std::vector<Index> parametric_columns(const Dataset& ds) {
  std::vector<Index> v;
  for (Index j = 0; j < ds.p; ++j) v.push_back(j);
  return v;
}

std::vector<Index> nonparametric_columns(const Dataset& ds) {
  std::vector<Index> v;
  for (Index j = ds.p; j < ds.r(); ++j) v.push_back(j);
  return v;
}

std::string step_path_csv(const StepPath<Vector>& path, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "time";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t k = 0; k < path.size(); ++k) {
    out << format_double(path.knots()[k]);
    const Vector& v = path.values()[k];
    for (Index j = 0; j < v.size(); ++j) out << ',' << format_double(v(j));
    out << '\n';
  }
  return out.str();
}

}  // namespace partly
