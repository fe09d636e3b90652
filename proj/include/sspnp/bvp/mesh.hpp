#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sspnp/errors.hpp"

namespace sspnp::bvp {

/// Ordered abscissae on [-1, 1]. Both endpoints are always present and every
/// registered interface abscissa is an exact node.
template <typename Scalar>
class Mesh {
 public:
  Mesh() : nodes_{Scalar(-1), Scalar(1)} {}

  explicit Mesh(std::vector<Scalar> nodes, std::vector<Scalar> interfaces = {})
      : nodes_(std::move(nodes)), interfaces_(std::move(interfaces)) {
    std::sort(interfaces_.begin(), interfaces_.end());
    for (Scalar x : interfaces_) insert_node(x);
    validate();
  }

  /// `intervals` equal intervals on [-1, 1], then interfaces inserted.
  static Mesh uniform(std::size_t intervals, std::span<const Scalar> interfaces = {}) {
    if (intervals == 0) throw OutOfDomain("Mesh::uniform: need at least one interval");
    std::vector<Scalar> nodes(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k) {
      nodes[k] = Scalar(-1) + Scalar(2) * Scalar(k) / Scalar(intervals);
    }
    nodes.back() = Scalar(1);
    return Mesh(std::move(nodes), std::vector<Scalar>(interfaces.begin(), interfaces.end()));
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t intervals() const { return nodes_.size() - 1; }
  Scalar operator[](std::size_t k) const { return nodes_[k]; }
  Scalar width(std::size_t interval) const { return nodes_[interval + 1] - nodes_[interval]; }
  const std::vector<Scalar>& nodes() const { return nodes_; }
  const std::vector<Scalar>& interfaces() const { return interfaces_; }

  bool is_interface(Scalar x) const {
    return std::binary_search(interfaces_.begin(), interfaces_.end(), x);
  }

  /// Index of the interval containing x (right-closed on the last interval).
  std::size_t locate(Scalar x) const {
    if (!(x >= nodes_.front() && x <= nodes_.back())) {
      throw OutOfDomain("abscissa outside [-1, 1]");
    }
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    std::size_t k = static_cast<std::size_t>(it - nodes_.begin());
    return k == 0 ? 0 : std::min(k - 1, intervals() - 1);
  }

 private:
  void insert_node(Scalar x) {
    if (!(x > Scalar(-1) && x < Scalar(1))) {
      throw OutOfDomain("interface abscissa must lie strictly inside (-1, 1)");
    }
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x);
    if (it == nodes_.end() || *it != x) nodes_.insert(it, x);
  }

  void validate() const {
    if (nodes_.size() < 2 || nodes_.front() != Scalar(-1) || nodes_.back() != Scalar(1)) {
      throw OutOfDomain("mesh must start at -1 and end at +1");
    }
    for (std::size_t k = 1; k < nodes_.size(); ++k) {
      if (!(nodes_[k] > nodes_[k - 1])) throw OutOfDomain("mesh nodes must be strictly increasing");
    }
  }

  std::vector<Scalar> nodes_;
  std::vector<Scalar> interfaces_;
};

}  // namespace sspnp::bvp
