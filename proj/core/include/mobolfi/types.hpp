#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mobolfi/error.hpp"

namespace mobolfi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Seed = std::uint64_t;

/// Axis-aligned parameter box; doubles as the support of uniform priors and
/// as the search region for acquisition optimization.
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    require(lower.size() == upper.size(), "Box: bound dimensions differ");
    require((lower.array() < upper.array()).all(), "Box: lower must be < upper");
    require(lower.allFinite() && upper.allFinite(), "Box: bounds must be finite");
  }

  static Box cube(std::size_t dim, double lo, double hi) {
    return Box(Vector::Constant(static_cast<Eigen::Index>(dim), lo),
               Vector::Constant(static_cast<Eigen::Index>(dim), hi));
  }

  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
  Vector width() const { return upper - lower; }
  bool contains(const Vector& x) const {
    return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
           (x.array() <= upper.array()).all();
  }
  Vector clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

}  // namespace mobolfi
