#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/numeric/mat.hpp"

namespace graphshield {

/// Trainable tensor with its gradient and Adam moments.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat first_moment;
  Mat second_moment;
  std::int64_t step = 0;

  Param(std::string n, Mat v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.rows(), value.cols()),
        first_moment(value.rows(), value.cols()),
        second_moment(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

/// Owns parameters by name. Addresses stay stable for the store's lifetime;
/// iteration follows insertion order.
class ParamStore {
 public:
  Param& add(const std::string& name, Mat value) {
    if (index_.count(name)) throw ConfigError(name, "duplicate parameter name");
    params_.push_back(std::make_unique<Param>(name, std::move(value)));
    index_[name] = params_.size() - 1;
    return *params_.back();
  }

  Param& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError(name, "unknown parameter");
    return *params_[it->second];
  }
  const Param& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError(name, "unknown parameter");
    return *params_[it->second];
  }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  Param& operator[](std::size_t i) { return *params_[i]; }
  const Param& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Mat& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so the node vector is already a topological order.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Mat& out_grad)>;

  Var constant(Mat value) { return push(std::move(value), false, nullptr, {}); }

  Var param(Param& p) { return push(p.value, true, &p, {}); }

  /// Record an op result. `backward` is only kept when some input needs a gradient.
  Var record(const char* op, Mat value, bool requires_grad, Backward backward) {
    if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite result");
    return push(std::move(value), requires_grad, nullptr, requires_grad ? std::move(backward) : Backward{});
  }

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Adjoint accumulated so far. Empty until something flows into it.
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }

  void accumulate(Var v, const Mat& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (!g.same_shape(n.value))
      throw ShapeError("accumulate: gradient " + g.shape_str() + " for value " + n.value.shape_str());
    if (n.grad.empty()) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  /// Mutable adjoint buffer, zero-allocated on first touch.
  Mat& grad_buffer(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty()) n.grad = Mat(n.value.rows(), n.value.cols());
    return n.grad;
  }

  /// Propagate d(loss)/d(node) back to every recorded node and add the
  /// leaf adjoints into their Params. The tape is cleared afterwards.
  void backward(Var loss) {
    const Mat& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be scalar, got " + lv.shape_str());
    if (nodes_[loss.id].requires_grad) {
      nodes_[loss.id].grad = Mat::scalar(1.0);
      for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.empty()) continue;
        if (n.backward) {
          const Mat g = std::move(n.grad);
          n.grad = Mat();
          n.backward(*this, g);
        } else if (n.param) {
          n.param->grad += n.grad;
        }
      }
    }
    clear();
  }

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    Param* param = nullptr;
    Backward backward;
  };

  Var push(Mat value, bool requires_grad, Param* p, Backward backward) {
    nodes_.push_back(Node{std::move(value), Mat(), requires_grad, p, std::move(backward)});
    return Var{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

inline const Mat& Var::value() const { return tape->value(*this); }

inline double Var::scalar() const {
  const Mat& v = value();
  if (v.size() != 1) throw ShapeError("scalar(): value is " + v.shape_str());
  return v[0];
}

}  // namespace graphshield
