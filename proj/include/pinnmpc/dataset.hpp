// Copyright 2026 The pinnmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pinnmpc/errors.hpp"
#include "pinnmpc/quad_dynamics.hpp"
#include "pinnmpc/quaternion.hpp"

namespace pinnmpc {

/// Physics sample: the network's time derivative at (x, u, t) is trained
/// towards `target` = f̄(x, u) + f̂.
struct CollocationPoint {
  State x;
  Control u;
  double t = 0.0;
  StateDerivative target;
};

/// Measured transition: `y` is the state reached from `x` after holding `u`
/// for one network horizon.
struct FlightSample {
  State x;
  Control u;
  State y;
};

struct Dataset {
  std::vector<CollocationPoint> collocation;
  std::vector<FlightSample> flight;
  double horizon = 0.1;
  std::uint64_t seed = 0;

  double skew() const {
    return collocation.empty()
               ? 0.0
               : static_cast<double>(flight.size()) / collocation.size();
  }

  void validate() const {
    if (collocation.empty()) throw ConfigError("dataset has no collocation points");
    if (!(horizon > 0.0)) throw ConfigError("dataset horizon must be positive");
    for (const auto& p : collocation) {
      if (!(p.t >= 0.0 && p.t <= horizon)) {
        throw ConfigError("collocation time outside [0, horizon]");
      }
      if (!p.target.to_vector().allFinite()) {
        throw NonFiniteError("collocation target is not finite");
      }
      require_finite(p.x);
      require_finite(p.u);
    }
    for (const auto& s : flight) {
      require_valid_state(s.x);
      require_valid_state(s.y);
      require_finite(s.u);
    }
  }
};

/// Sample counts for a total budget and skew |D|/|P| = num/den, rounding
/// toward the collocation set.
struct SplitCounts {
  std::size_t collocation = 0;
  std::size_t flight = 0;
};

inline SplitCounts split_counts(std::size_t total, std::uint64_t skew_num,
                                std::uint64_t skew_den) {
  if (skew_den == 0) throw ConfigError("skew denominator must be positive");
  const std::size_t flight = static_cast<std::size_t>(
      (static_cast<unsigned __int128>(total) * skew_num) / (skew_num + skew_den));
  SplitCounts c{total - flight, flight};
  if (c.collocation == 0) throw ConfigError("skew leaves no collocation points");
  return c;
}

/// Box of states and controls from which collocation points are drawn.
struct SamplingRanges {
  Eigen::Vector3d position_min{-5.0, -5.0, 0.0};
  Eigen::Vector3d position_max{5.0, 5.0, 3.0};
  double max_attitude_angle = 0.5;  // rad, rotation from level
  Eigen::Vector3d velocity_max{3.0, 3.0, 3.0};
  Eigen::Vector3d omega_max{3.0, 3.0, 3.0};
  double thrust_min = 0.5;
  double thrust_max = 3.5;

  void validate() const {
    if (!((position_max - position_min).array() > 0.0).all() ||
        !(max_attitude_angle > 0.0) || !(velocity_max.array() > 0.0).all() ||
        !(omega_max.array() > 0.0).all() || !(thrust_max > thrust_min) ||
        !(thrust_min >= 0.0)) {
      throw ConfigError("sampling ranges must be non-empty");
    }
  }
};

/// Draws points sequentially from one generator seeded by `seed`, so the
/// first k points do not depend on n. Attitudes are rotations about a
/// uniformly distributed axis by an angle uniform in [0, max_attitude_angle].
/// The uncertainty draw of point i uses counter i of ucfg.seed.
inline std::vector<CollocationPoint> sample_collocation(
    std::size_t n, const SamplingRanges& ranges, double horizon,
    const QuadParams& params, const UncertaintyConfig& ucfg,
    std::uint64_t seed) {
  ranges.validate();
  ucfg.validate();
  params.validate();
  if (n == 0) throw ConfigError("sample_collocation needs n >= 1");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(gen); };

  std::vector<CollocationPoint> points;
  points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    CollocationPoint p;
    for (int i = 0; i < 3; ++i) {
      p.x.p[i] = uniform(ranges.position_min[i], ranges.position_max[i]);
    }
    Eigen::Vector3d axis(normal(gen), normal(gen), normal(gen));
    axis /= axis.norm();
    p.x.q = quat_from_axis_angle(axis, uniform(0.0, ranges.max_attitude_angle));
    for (int i = 0; i < 3; ++i) {
      p.x.v[i] = uniform(-ranges.velocity_max[i], ranges.velocity_max[i]);
    }
    for (int i = 0; i < 3; ++i) {
      p.x.omega[i] = uniform(-ranges.omega_max[i], ranges.omega_max[i]);
    }
    for (int i = 0; i < kControlDim; ++i) {
      p.u.thrust[i] = uniform(ranges.thrust_min, ranges.thrust_max);
    }
    p.t = uniform(0.0, horizon);
    const StateVector target =
        nominal_derivative(p.x, p.u, params).to_vector() +
        sample_parametric_uncertainty(p.x, p.u, ucfg, k).to_vector();
    p.target = StateDerivative::from_vector(target);
    points.push_back(p);
  }
  return points;
}

// ---------------------------------------------------------------------------
// CSV files

inline const std::vector<std::string>& state_column_names() {
  static const std::vector<std::string> names{
      "px", "py", "pz", "qw", "qx", "qy", "qz",
      "vx", "vy", "vz", "wx", "wy", "wz"};
  return names;
}

inline std::vector<std::string> input_column_names() {
  std::vector<std::string> cols = state_column_names();
  for (const char* c : {"T0", "T1", "T2", "T3", "t"}) cols.emplace_back(c);
  return cols;
}

inline std::vector<std::string> prefixed_state_columns(const std::string& prefix) {
  std::vector<std::string> cols;
  for (const auto& c : state_column_names()) cols.push_back(prefix + c);
  return cols;
}

struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const CsvTable& table) {
  for (const auto& c : table.comments) os << "# " << c << '\n';
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    os << (i ? "," : "") << table.header[i];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw ConfigError("csv row width does not match header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << (i ? "," : "") << format_double(row[i]);
    }
    os << '\n';
  }
}

inline CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      table.comments.push_back(line.size() > 2 ? line.substr(2) : "");
      continue;
    }
    auto cells = split(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ConfigError("csv row has " + std::to_string(cells.size()) +
                        " cells, header has " +
                        std::to_string(table.header.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::size_t used = 0;
      try {
        row[i] = std::stod(cells[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[i].size()) {
        throw ConfigError("csv cell is not a number: '" + cells[i] + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ConfigError("csv file has no header row");
  return table;
}

inline void write_csv_file(const std::string& path, const CsvTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  write_csv(os, table);
  if (!os) throw ConfigError("failed writing " + path);
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path);
  return read_csv(is);
}

namespace detail {

inline void append_state(std::vector<double>& row, const State& x) {
  const StateVector v = x.to_vector();
  row.insert(row.end(), v.data(), v.data() + kStateDim);
}

inline StateVector read_state(const std::vector<double>& row, std::size_t at) {
  StateVector v;
  for (int i = 0; i < kStateDim; ++i) v[i] = row[at + i];
  return v;
}

inline void require_header(const CsvTable& t, const std::vector<std::string>& expected) {
  if (t.header != expected) throw ConfigError("unexpected csv header");
}

}  // namespace detail

inline std::vector<std::string> collocation_header() {
  auto h = input_column_names();
  for (auto& c : prefixed_state_columns("d")) h.push_back(c);
  return h;
}

inline std::vector<std::string> flight_header() {
  auto h = input_column_names();
  for (auto& c : prefixed_state_columns("y_")) h.push_back(c);
  return h;
}

inline CsvTable collocation_table(const std::vector<CollocationPoint>& points,
                                  std::vector<std::string> comments = {}) {
  CsvTable t{std::move(comments), collocation_header(), {}};
  for (const auto& p : points) {
    std::vector<double> row;
    row.reserve(t.header.size());
    detail::append_state(row, p.x);
    row.insert(row.end(), p.u.thrust.data(), p.u.thrust.data() + kControlDim);
    row.push_back(p.t);
    const StateVector d = p.target.to_vector();
    row.insert(row.end(), d.data(), d.data() + kStateDim);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable flight_table(const std::vector<FlightSample>& samples,
                             double horizon,
                             std::vector<std::string> comments = {}) {
  CsvTable t{std::move(comments), flight_header(), {}};
  for (const auto& s : samples) {
    std::vector<double> row;
    row.reserve(t.header.size());
    detail::append_state(row, s.x);
    row.insert(row.end(), s.u.thrust.data(), s.u.thrust.data() + kControlDim);
    row.push_back(horizon);
    detail::append_state(row, s.y);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::vector<CollocationPoint> collocation_from_table(const CsvTable& t) {
  detail::require_header(t, collocation_header());
  std::vector<CollocationPoint> points;
  points.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    CollocationPoint p;
    p.x = State::from_vector(detail::read_state(row, 0));
    for (int i = 0; i < kControlDim; ++i) p.u.thrust[i] = row[kStateDim + i];
    p.t = row[kStateDim + kControlDim];
    p.target = StateDerivative::from_vector(
        detail::read_state(row, kStateDim + kControlDim + 1));
    points.push_back(p);
  }
  return points;
}

/// Returns the samples; `horizon` receives the common t column (0 if empty).
inline std::vector<FlightSample> flight_from_table(const CsvTable& t,
                                                   double* horizon = nullptr) {
  detail::require_header(t, flight_header());
  std::vector<FlightSample> samples;
  samples.reserve(t.rows.size());
  double h = 0.0;
  for (const auto& row : t.rows) {
    FlightSample s;
    s.x = State::from_vector(detail::read_state(row, 0));
    for (int i = 0; i < kControlDim; ++i) s.u.thrust[i] = row[kStateDim + i];
    const double ti = row[kStateDim + kControlDim];
    if (!samples.empty() && ti != h) {
      throw ConfigError("flight samples have differing horizons");
    }
    h = ti;
    s.y = State::from_vector(detail::read_state(row, kStateDim + kControlDim + 1));
    samples.push_back(s);
  }
  if (horizon) *horizon = h;
  return samples;
}

}  // namespace pinnmpc
