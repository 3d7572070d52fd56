#pragma once

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <vector>

#include "liesim/group.hpp"

namespace liesim {

struct JumpRecord {
  std::size_t index;  // grid index where the jump lands
  Matrix left_limit;  // Z_{t-}; the post-jump value lives in nodes[index]
};

// Grid-sampled cadlag path on a matrix Lie group. The grid is jump-adapted:
// every jump time is a grid point, nodes hold post-jump values and jump
// records carry the left limits. Immutable by convention once built.
struct CadlagPath {
  GroupPtr group;
  std::vector<double> times;
  std::vector<Matrix> nodes;
  std::vector<JumpRecord> jumps;  // sorted by index

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  double horizon() const { return times.empty() ? 0.0 : times.back(); }

  const JumpRecord* jump_at(std::size_t index) const {
    auto it = std::lower_bound(
        jumps.begin(), jumps.end(), index,
        [](const JumpRecord& r, std::size_t i) { return r.index < i; });
    if (it != jumps.end() && it->index == index) return &*it;
    return nullptr;
  }

  // Left limit at grid index i (equals the node unless a jump lands there).
  const Matrix& left_limit(std::size_t i) const {
    if (const JumpRecord* j = jump_at(i)) return j->left_limit;
    return nodes[i];
  }

  // Node closest from the left to time t (last index with times[i] <= t).
  std::size_t index_at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0;
    return static_cast<std::size_t>(it - times.begin()) - 1;
  }

  // Grid/jump consistency: Z_0 = 1_N, jump factors differ from the identity,
  // non-jump left limits coincide with nodes, membership everywhere.
  void validate(double tol = 1e-9) const {
    if (times.size() != nodes.size() || times.empty())
      throw GroupError("path: times/nodes size mismatch");
    if ((nodes[0] - group->identity()).cwiseAbs().maxCoeff() > tol)
      throw GroupError("path: Z_0 != 1_N");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw GroupError("path: grid not strictly increasing");
    for (const auto& z : nodes)
      if (group->membership_residual(z) > tol)
        throw GroupError("path: node leaves the group");
    std::size_t prev = 0;
    bool first = true;
    for (const auto& j : jumps) {
      if (!first && j.index <= prev) throw GroupError("path: jumps unsorted");
      if (j.index == 0 || j.index >= nodes.size())
        throw GroupError("path: jump index out of range");
      const Matrix delta = group->mul(nodes[j.index], group->inv(j.left_limit));
      if ((delta - group->identity()).cwiseAbs().maxCoeff() <= 1e-14)
        throw GroupError("path: trivial jump record");
      prev = j.index;
      first = false;
    }
  }
};

// Per-step decomposition: node i-1 -> left limit (continuous factor) -> node i
// (jump factor, if a jump lands at i). Composing all factors in order
// reproduces the nodes.
struct StepIncrement {
  double t0 = 0.0;
  double t1 = 0.0;
  Matrix continuous;              // Z_{i-} * Z_{i-1}^{-1}
  const JumpRecord* jump = nullptr;  // non-null iff a jump lands at index i
  Matrix jump_delta;              // Z_i * Z_{i-}^{-1} when jump != nullptr
};

inline std::vector<StepIncrement> increments(const CadlagPath& p) {
  std::vector<StepIncrement> out;
  out.reserve(p.steps());
  for (std::size_t i = 1; i < p.times.size(); ++i) {
    StepIncrement s;
    s.t0 = p.times[i - 1];
    s.t1 = p.times[i];
    const Matrix& left = p.left_limit(i);
    s.continuous = p.group->mul(left, p.group->inv(p.nodes[i - 1]));
    if (const JumpRecord* j = p.jump_at(i)) {
      s.jump = j;
      s.jump_delta = p.group->mul(p.nodes[i], p.group->inv(j->left_limit));
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Embeds discrete samples Z_0=1_N, Z_1, ..., Z_m as the piecewise-constant
// cadlag path Z_t = Z_n on [n, n+1), jumping exactly at the integer times.
inline CadlagPath discrete_to_cadlag(const GroupPtr& group,
                                     const std::vector<Matrix>& samples) {
  if (samples.empty()) throw GroupError("discrete_to_cadlag: empty sample");
  CadlagPath p;
  p.group = group;
  p.times.resize(samples.size());
  p.nodes = samples;
  for (std::size_t i = 0; i < samples.size(); ++i)
    p.times[i] = static_cast<double>(i);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const Matrix delta =
        group->mul(samples[i], group->inv(samples[i - 1]));
    if ((delta - group->identity()).cwiseAbs().maxCoeff() > 1e-14)
      p.jumps.push_back({i, samples[i - 1]});
  }
  return p;
}

// CSV rows: path id, time, algebra coordinates of the node, jump flag and
// jump coordinates (zeros when the grid point carries no jump).
inline void write_csv_header(std::ostream& os, int n) {
  os << "path,t";
  for (int i = 0; i < n; ++i) os << ",x" << i;
  os << ",jump";
  for (int i = 0; i < n; ++i) os << ",dx" << i;
  os << "\n";
}

inline void write_csv_rows(std::ostream& os, const CadlagPath& p,
                           std::size_t path_id) {
  const int n = p.group->algebra_dim();
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    os << path_id << "," << p.times[i];
    Vector x;
    try {
      x = p.group->log(p.nodes[i]);
    } catch (const OutOfDomainError&) {
      x = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
    }
    for (int c = 0; c < n; ++c) os << "," << x(c);
    const JumpRecord* j = p.jump_at(i);
    os << "," << (j != nullptr ? 1 : 0);
    Vector dx = Vector::Zero(n);
    if (j != nullptr) {
      dx = p.group->log(p.group->mul(p.nodes[i], p.group->inv(j->left_limit)));
    }
    for (int c = 0; c < n; ++c) os << "," << dx(c);
    os << "\n";
  }
}

}  // namespace liesim
