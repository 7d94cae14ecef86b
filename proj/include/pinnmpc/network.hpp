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

namespace pinnmpc {

/// Network input layout: [x (13), u (4), t (1)].
inline constexpr int kNetworkInputs = kStateDim + kControlDim + 1;
inline constexpr int kTimeInput = kNetworkInputs - 1;

/// Per-component affine map. Inputs are standardized as (raw - shift) / scale;
/// outputs are produced as shift + scale * o.
struct AffineScaling {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  static AffineScaling identity(Eigen::Index n) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
  }

  void validate(Eigen::Index n, const char* what) const {
    if (shift.size() != n || scale.size() != n) {
      throw ConfigError(std::string(what) + " has the wrong length");
    }
    if (!shift.allFinite() || !scale.allFinite() ||
        (scale.array() == 0.0).any()) {
      throw ConfigError(std::string(what) +
                        " must be finite with nonzero scale");
    }
  }
};

/// Carrier for dL/dθ, aligned with Network::parameters().
struct Gradient {
  Eigen::VectorXd values;
};

/// Intermediate values of one batched forward pass, consumed by backward().
struct Trace {
  bool recorded = false;
  bool has_tangent = false;
  std::vector<Eigen::MatrixXd> h;   // h[0]: scaled input, h[l]: hidden layer l
  std::vector<Eigen::MatrixXd> da;  // d(pre-activation)/dt per hidden layer
  std::vector<Eigen::MatrixXd> dh;  // d(activation)/dt per hidden layer

  Eigen::Index batch_size() const { return h.empty() ? 0 : h[0].cols(); }
};

struct BackwardResult {
  Gradient gradient;
  Eigen::MatrixXd input_gradient;  // empty unless requested
};

namespace detail {

template <class Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& a) {
  // exp() is vectorized for doubles, tanh() is not
  return 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
}

}  // namespace detail

/// Fully connected tanh network. Parameters are stored in one flat vector:
/// for every layer the column-major weight matrix followed by the bias.
///
/// With `state_passthrough` set the first output_size() raw inputs are added
/// to the scaled output, so the network learns an increment.
class Network {
 public:
  Network() = default;

  explicit Network(std::vector<int> layer_sizes)
      : layer_sizes_(std::move(layer_sizes)) {
    if (layer_sizes_.size() < 2) {
      throw ConfigError("network needs at least an input and output layer");
    }
    Eigen::Index count = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
      if (layer_sizes_[l] < 1 || layer_sizes_[l + 1] < 1) {
        throw ConfigError("layer sizes must be positive");
      }
      weight_offsets_.push_back(count);
      count += static_cast<Eigen::Index>(layer_sizes_[l]) * layer_sizes_[l + 1];
      bias_offsets_.push_back(count);
      count += layer_sizes_[l + 1];
    }
    params_ = Eigen::VectorXd::Zero(count);
    input_scaling = AffineScaling::identity(input_size());
    output_scaling = AffineScaling::identity(output_size());
  }

  static std::vector<int> default_layer_sizes() {
    return {kNetworkInputs, 128, 128, 128, 128, kStateDim};
  }

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int num_layers() const { return static_cast<int>(layer_sizes_.size()) - 1; }
  int input_size() const { return layer_sizes_.front(); }
  int output_size() const { return layer_sizes_.back(); }
  int time_input_index() const { return input_size() - 1; }
  Eigen::Index parameter_count() const { return params_.size(); }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> weight(int l) {
    return {params_.data() + weight_offsets_[l], layer_sizes_[l + 1],
            layer_sizes_[l]};
  }
  Eigen::Map<const Eigen::MatrixXd> weight(int l) const {
    return {params_.data() + weight_offsets_[l], layer_sizes_[l + 1],
            layer_sizes_[l]};
  }
  Eigen::Map<Eigen::VectorXd> bias(int l) {
    return {params_.data() + bias_offsets_[l], layer_sizes_[l + 1]};
  }
  Eigen::Map<const Eigen::VectorXd> bias(int l) const {
    return {params_.data() + bias_offsets_[l], layer_sizes_[l + 1]};
  }
  Eigen::Index weight_offset(int l) const { return weight_offsets_[l]; }
  Eigen::Index bias_offset(int l) const { return bias_offsets_[l]; }

  /// Glorot-uniform weights, zero biases.
  void initialize_glorot(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    for (int l = 0; l < num_layers(); ++l) {
      const double limit =
          std::sqrt(6.0 / (layer_sizes_[l] + layer_sizes_[l + 1]));
      std::uniform_real_distribution<double> dist(-limit, limit);
      auto w = weight(l);
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(gen);
      }
      bias(l).setZero();
    }
  }

  void validate() const {
    if (layer_sizes_.empty()) throw ConfigError("network is empty");
    input_scaling.validate(input_size(), "input_scaling");
    output_scaling.validate(output_size(), "output_scaling");
    if (state_passthrough && input_size() < output_size()) {
      throw ConfigError("passthrough needs input_size >= output_size");
    }
  }

  /// Batched evaluation; each column of `inputs` is one raw input vector.
  /// When `with_tangent` is set, `out_dot` receives d(out)/d(time input).
  void forward(const Eigen::MatrixXd& inputs, bool with_tangent, Trace* trace,
               Eigen::MatrixXd& out, Eigen::MatrixXd* out_dot = nullptr) const {
    if (inputs.rows() != input_size()) {
      throw ConfigError("network input has the wrong number of rows");
    }
    if (!inputs.allFinite()) throw NonFiniteError("network input is not finite");
    Trace local;
    Trace& tr = trace ? *trace : local;
    const int layers = num_layers();
    const int t_idx = time_input_index();
    const double t_scale = 1.0 / input_scaling.scale[t_idx];
    tr.recorded = false;
    tr.has_tangent = with_tangent;
    tr.h.resize(layers);
    tr.da.resize(with_tangent ? layers : 0);
    tr.dh.resize(with_tangent ? layers : 0);

    tr.h[0] = (inputs.colwise() - input_scaling.shift)
                  .array()
                  .colwise() / input_scaling.scale.array();
    Eigen::MatrixXd a;
    Eigen::MatrixXd tangent;  // d(pre-activation)/dt of the current layer
    for (int l = 0; l < layers; ++l) {
      const auto w = weight(l);
      a.noalias() = w * tr.h[l];
      a.colwise() += bias(l);
      if (with_tangent) {
        if (l == 0) {
          tangent = (w.col(t_idx) * t_scale).replicate(1, inputs.cols());
        } else {
          tangent.noalias() = w * tr.dh[l];
        }
      }
      if (l + 1 < layers) {
        tr.h[l + 1] = detail::fast_tanh(a.array()).matrix();
        if (with_tangent) {
          tr.dh[l + 1] =
              (1.0 - tr.h[l + 1].array().square()) * tangent.array();
          tr.da[l + 1] = std::move(tangent);
          tangent = Eigen::MatrixXd();
        }
      }
    }
    out = (a.array().colwise() * output_scaling.scale.array()).colwise() +
          output_scaling.shift.array();
    if (state_passthrough) out += inputs.topRows(output_size());
    if (with_tangent && out_dot) {
      *out_dot = tangent.array().colwise() * output_scaling.scale.array();
    }
    tr.recorded = trace != nullptr;
  }

  /// Reverse sweep for a scalar loss with dL/d(out) = `grad_out` and
  /// dL/d(out_dot) = `grad_out_dot` (requires a tangent trace).
  BackwardResult backward(const Trace& trace, const Eigen::MatrixXd& grad_out,
                          const Eigen::MatrixXd* grad_out_dot = nullptr,
                          bool want_input_gradient = false) const {
    if (!trace.recorded) {
      throw UsageError("backward() called without a recorded forward trace");
    }
    if (grad_out_dot && !trace.has_tangent) {
      throw UsageError("time-derivative gradient needs a tangent trace");
    }
    const int layers = num_layers();
    const int t_idx = time_input_index();
    const double t_scale = 1.0 / input_scaling.scale[t_idx];
    BackwardResult result;
    result.gradient.values = Eigen::VectorXd::Zero(parameter_count());
    Eigen::VectorXd& g = result.gradient.values;

    Eigen::MatrixXd ga =
        grad_out.array().colwise() * output_scaling.scale.array();
    Eigen::MatrixXd gda;
    const bool tangent = grad_out_dot != nullptr;
    if (tangent) {
      gda = grad_out_dot->array().colwise() * output_scaling.scale.array();
    }
    Eigen::MatrixXd gh, gdh;
    for (int l = layers - 1; l >= 0; --l) {
      if (l < layers - 1) {
        const auto& hl = trace.h[l + 1];
        const Eigen::ArrayXXd s = 1.0 - hl.array().square();
        if (tangent) {
          // dh = s * da, s = 1 - h^2, ds/da = -2 h s
          const Eigen::ArrayXXd gs = gdh.array() * trace.da[l + 1].array();
          ga = (gh.array() * s - 2.0 * gs * hl.array() * s).matrix();
          gda = (gdh.array() * s).matrix();
        } else {
          ga = (gh.array() * s).matrix();
        }
      }
      Eigen::Map<Eigen::MatrixXd> gw(g.data() + weight_offsets_[l],
                                     layer_sizes_[l + 1], layer_sizes_[l]);
      gw.noalias() += ga * trace.h[l].transpose();
      Eigen::Map<Eigen::VectorXd>(g.data() + bias_offsets_[l],
                                  layer_sizes_[l + 1]) += ga.rowwise().sum();
      if (tangent) {
        if (l == 0) {
          gw.col(t_idx) += gda.rowwise().sum() * t_scale;
        } else {
          gw.noalias() += gda * trace.dh[l].transpose();
        }
      }
      const auto w = weight(l);
      if (l > 0) {
        gh.noalias() = w.transpose() * ga;
        if (tangent) gdh.noalias() = w.transpose() * gda;
      } else if (want_input_gradient) {
        result.input_gradient.noalias() = w.transpose() * ga;
        result.input_gradient =
            result.input_gradient.array().colwise() /
            input_scaling.scale.array();
        if (state_passthrough) {
          result.input_gradient.topRows(output_size()) += grad_out;
        }
      }
    }
    return result;
  }

  // Text serialization with hex-float values for exact round trips.
  void save(std::ostream& os, const std::vector<std::string>& comments = {}) const {
    for (const auto& c : comments) os << "# " << c << '\n';
    os << "pinnmpc-network 1\n";
    os << "layers " << layer_sizes_.size();
    for (int s : layer_sizes_) os << ' ' << s;
    os << "\nactivation tanh\npassthrough " << (state_passthrough ? 1 : 0)
       << '\n';
    write_vector(os, "input_shift", input_scaling.shift);
    write_vector(os, "input_scale", input_scaling.scale);
    write_vector(os, "output_shift", output_scaling.shift);
    write_vector(os, "output_scale", output_scaling.scale);
    write_vector(os, "parameters", params_);
  }

  static Network load(std::istream& is) {
    std::string line;
    std::string magic;
    int version = 0;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream(line) >> magic >> version;
      break;
    }
    if (magic != "pinnmpc-network" || version != 1) {
      throw ConfigError("not a version 1 network file");
    }
    std::string key;
    std::size_t n = 0;
    is >> key >> n;
    if (key != "layers") throw ConfigError("network file: expected 'layers'");
    std::vector<int> sizes(n);
    for (auto& s : sizes) is >> s;
    Network net(sizes);
    std::string activation;
    is >> key >> activation;
    if (key != "activation" || activation != "tanh") {
      throw ConfigError("network file: unsupported activation");
    }
    int passthrough = 0;
    is >> key >> passthrough;
    if (key != "passthrough") throw ConfigError("network file: expected 'passthrough'");
    net.state_passthrough = passthrough != 0;
    net.input_scaling.shift = read_vector(is, "input_shift");
    net.input_scaling.scale = read_vector(is, "input_scale");
    net.output_scaling.shift = read_vector(is, "output_shift");
    net.output_scaling.scale = read_vector(is, "output_scale");
    Eigen::VectorXd p = read_vector(is, "parameters");
    if (p.size() != net.parameter_count()) {
      throw ConfigError("network file: parameter count mismatch");
    }
    net.params_ = std::move(p);
    net.validate();
    return net;
  }

  void save_file(const std::string& path,
                 const std::vector<std::string>& comments = {}) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write network file " + path);
    save(os, comments);
  }

  static Network load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read network file " + path);
    return load(is);
  }

 private:
  static void write_vector(std::ostream& os, const char* name,
                           const Eigen::VectorXd& v) {
    os << name << ' ' << v.size() << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%a", v[i]);
      os << buf << '\n';
    }
  }

  static Eigen::VectorXd read_vector(std::istream& is, const char* name) {
    std::string key;
    Eigen::Index n = 0;
    is >> key >> n;
    if (key != name) {
      throw ConfigError(std::string("network file: expected '") + name + "'");
    }
    Eigen::VectorXd v(n);
    std::string tok;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(is >> tok)) throw ConfigError("network file truncated");
      v[i] = std::strtod(tok.c_str(), nullptr);
    }
    return v;
  }

  std::vector<int> layer_sizes_;
  std::vector<Eigen::Index> weight_offsets_;
  std::vector<Eigen::Index> bias_offsets_;
  Eigen::VectorXd params_;

 public:
  AffineScaling input_scaling;
  AffineScaling output_scaling;
  bool state_passthrough = false;
};

/// Raw network input for a held control `u` applied from state `x` for `t`.
inline Eigen::VectorXd network_input(const State& x, const Control& u, double t) {
  Eigen::VectorXd in(kNetworkInputs);
  in << x.to_vector(), u.thrust, t;
  return in;
}

inline void require_finite_input(const State& x, const Control& u, double t) {
  require_finite(x);
  require_finite(u);
  if (!std::isfinite(t)) throw NonFiniteError("time input is not finite");
}

/// φ(t, x, u): predicted state vector after holding u for t seconds.
inline Eigen::VectorXd forward(const Network& net, const State& x,
                               const Control& u, double t,
                               Trace* trace = nullptr) {
  require_finite_input(x, u, t);
  Eigen::MatrixXd out;
  net.forward(network_input(x, u, t), false, trace, out);
  return out.col(0);
}

/// ∂φ/∂t by forward-mode propagation of the time input.
inline Eigen::VectorXd time_derivative(const Network& net, const State& x,
                                       const Control& u, double t,
                                       Trace* trace = nullptr) {
  require_finite_input(x, u, t);
  Eigen::MatrixXd out, out_dot;
  net.forward(network_input(x, u, t), true, trace, out, &out_dot);
  return out_dot.col(0);
}

/// Parameter gradient of a scalar loss given its gradient with respect to
/// the recorded outputs (and time derivatives, if traced with a tangent).
inline Gradient backward(const Network& net, const Trace& trace,
                         const Eigen::MatrixXd& upstream,
                         const Eigen::MatrixXd* upstream_dot = nullptr) {
  return net.backward(trace, upstream, upstream_dot).gradient;
}

/// Network prediction as a State with the quaternion block renormalized.
inline State predict_state(const Network& net, const State& x,
                           const Control& u, double t) {
  StateVector y = forward(net, x, u, t);
  y.segment<4>(3) /= y.segment<4>(3).norm();
  return State::from_vector(y);
}

}  // namespace pinnmpc
