#pragma once

// The 24-element single-qubit Clifford group, held exactly as signed axis
// permutations of the Bloch sphere. Unitaries are derived views.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "transmon/gates.hpp"
#include "transmon/rng.hpp"

namespace transmon::clifford {

/// 3x3 integer rotation acting on Bloch vectors (x, y, z), z = +1 is |0>.
using AxisMap = std::array<std::array<int, 3>, 3>;
using Unitary = Eigen::Matrix2cd;

inline AxisMap multiply(const AxisMap& a, const AxisMap& b) {
  AxisMap c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      int s = 0;
      for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
      c[i][j] = s;
    }
  return c;
}

inline constexpr AxisMap kIdentityMap{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

/// Bloch rotation of a physical gate (right-handed, angle from rotation_of).
inline AxisMap axis_map_of(PhysicalGate g) {
  const auto rot = rotation_of(g);
  const int c = static_cast<int>(std::lround(std::cos(rot.angle)));
  const int s = static_cast<int>(std::lround(std::sin(rot.angle)));
  if (rot.phase == 0.0) return AxisMap{{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
  return AxisMap{{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
}

/// exp(-i angle sigma/2) about the gate's axis.
inline Unitary unitary_of(PhysicalGate g) {
  const auto rot = rotation_of(g);
  const double c = std::cos(rot.angle / 2.0);
  const double s = std::sin(rot.angle / 2.0);
  const std::complex<double> i(0.0, 1.0);
  Unitary u;
  if (rot.phase == 0.0) {
    u << c, -i * s, -i * s, c;
  } else {
    u << c, -s, s, c;
  }
  return u;
}

/// Bloch rotation matrix R_ij = Tr(sigma_i U sigma_j U^dag) / 2.
inline Eigen::Matrix3d bloch_rotation(const Unitary& u) {
  const std::complex<double> i(0.0, 1.0);
  std::array<Unitary, 3> pauli;
  pauli[0] << 0, 1, 1, 0;
  pauli[1] << 0, -i, i, 0;
  pauli[2] << 1, 0, 0, -1;
  Eigen::Matrix3d r;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      r(a, b) = 0.5 * (pauli[a] * u * pauli[b] * u.adjoint()).trace().real();
  return r;
}

struct CliffordElement {
  int index = 0;
  friend bool operator==(CliffordElement, CliffordElement) = default;
};

inline constexpr CliffordElement kIdentity{0};

/// Immutable group tables, built once.
class CliffordGroup {
public:
  static constexpr int kOrder = 24;

  static const CliffordGroup& instance() {
    static const CliffordGroup g;
    return g;
  }

  const AxisMap& axis_map(CliffordElement e) const { return maps_.at(static_cast<std::size_t>(e.index)); }
  const std::vector<PhysicalGate>& decompose(CliffordElement e) const {
    return decompositions_.at(static_cast<std::size_t>(e.index));
  }
  const Unitary& unitary(CliffordElement e) const { return unitaries_.at(static_cast<std::size_t>(e.index)); }

  /// a then b.
  CliffordElement compose(CliffordElement a, CliffordElement b) const {
    return {table_[static_cast<std::size_t>(a.index)][static_cast<std::size_t>(b.index)]};
  }

  CliffordElement inverse(CliffordElement a) const {
    return {inverses_[static_cast<std::size_t>(a.index)]};
  }

  CliffordElement from_gate(PhysicalGate g) const { return lookup(axis_map_of(g)); }

  CliffordElement lookup(const AxisMap& m) const {
    auto it = index_.find(m);
    if (it == index_.end()) throw std::logic_error("clifford: matrix is not a group element");
    return {it->second};
  }

  /// Product of a sequence applied in order (first element acts first).
  CliffordElement product(std::span<const CliffordElement> seq) const {
    CliffordElement acc = kIdentity;
    for (auto e : seq) acc = compose(acc, e);
    return acc;
  }

  /// Lowest-index C such that C after the sequence sends |0> to |1>.
  CliffordElement recovery_gate(std::span<const CliffordElement> seq) const {
    const AxisMap net = axis_map(product(seq));
    for (int k = 0; k < kOrder; ++k) {
      const AxisMap total = multiply(maps_[static_cast<std::size_t>(k)], net);
      if (total[2][2] == -1) return {k};
    }
    throw std::logic_error("clifford: no recovery element found");
  }

  CliffordElement random(rng::Stream& stream) const {
    return {static_cast<int>(stream.below(kOrder))};
  }

private:
  CliffordGroup() {
    // Breadth-first closure over the native gates gives every element a
    // shortest decomposition; the discovery order fixes canonical indices.
    constexpr std::array<PhysicalGate, 6> generators = {
        PhysicalGate::X_pi, PhysicalGate::X_pi2, PhysicalGate::X_mpi2,
        PhysicalGate::Y_pi, PhysicalGate::Y_pi2, PhysicalGate::Y_mpi2};
    add(kIdentityMap, {PhysicalGate::I});
    std::deque<int> frontier{0};
    while (!frontier.empty()) {
      const int cur = frontier.front();
      frontier.pop_front();
      for (auto g : generators) {
        const AxisMap next = multiply(axis_map_of(g), maps_[static_cast<std::size_t>(cur)]);
        if (index_.count(next)) continue;
        std::vector<PhysicalGate> path;
        if (cur != 0) path = decompositions_[static_cast<std::size_t>(cur)];
        path.push_back(g);
        add(next, path);
        frontier.push_back(static_cast<int>(maps_.size()) - 1);
      }
    }
    if (maps_.size() != kOrder) throw std::logic_error("clifford: closure did not yield 24 elements");

    for (std::size_t a = 0; a < kOrder; ++a) {
      for (std::size_t b = 0; b < kOrder; ++b) {
        table_[a][b] = lookup(multiply(maps_[b], maps_[a])).index;
        if (table_[a][b] == 0) inverses_[a] = static_cast<int>(b);
      }
    }
    for (std::size_t k = 0; k < kOrder; ++k) {
      if (decompositions_[k].size() > 3) throw std::logic_error("clifford: decomposition longer than 3");
      Unitary u = Unitary::Identity();
      for (auto g : decompositions_[k]) u = unitary_of(g) * u;
      unitaries_.push_back(u);
    }
  }

  void add(const AxisMap& m, std::vector<PhysicalGate> gates) {
    index_[m] = static_cast<int>(maps_.size());
    maps_.push_back(m);
    decompositions_.push_back(std::move(gates));
  }

  std::vector<AxisMap> maps_;
  std::vector<std::vector<PhysicalGate>> decompositions_;
  std::vector<Unitary> unitaries_;
  std::map<AxisMap, int> index_;
  std::array<std::array<int, kOrder>, kOrder> table_{};
  std::array<int, kOrder> inverses_{};
};

inline CliffordElement compose(CliffordElement a, CliffordElement b) {
  return CliffordGroup::instance().compose(a, b);
}
inline CliffordElement inverse(CliffordElement a) { return CliffordGroup::instance().inverse(a); }
inline CliffordElement recovery_gate(std::span<const CliffordElement> seq) {
  return CliffordGroup::instance().recovery_gate(seq);
}
inline CliffordElement random_clifford(rng::Stream& stream) {
  return CliffordGroup::instance().random(stream);
}
inline const std::vector<PhysicalGate>& decompose(CliffordElement e) {
  return CliffordGroup::instance().decompose(e);
}
inline CliffordElement element_of(PhysicalGate g) { return CliffordGroup::instance().from_gate(g); }

/// Native gates realizing a Clifford sequence; identities are dropped unless
/// the sequence itself is just identities.
inline std::vector<PhysicalGate> compile(std::span<const CliffordElement> seq) {
  std::vector<PhysicalGate> out;
  for (auto e : seq) {
    for (auto g : decompose(e)) {
      if (g != PhysicalGate::I) out.push_back(g);
    }
  }
  return out;
}

/// Expected excited-state readout c1 + c2 p^N under a symmetric depolarizing
/// channel with assignment errors eps0, eps1.
inline double depolarizing_prediction(double p, int n, double eps0, double eps1) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("depolarizing_prediction: p outside [0, 1]");
  const double c1 = 0.5 * (1.0 + eps0 - eps1);
  const double c2 = 0.5 * (1.0 - eps0 - eps1);
  return c1 + c2 * std::pow(p, n);
}

/// "index:gate gate ..." per element, one line each.
inline void write_sequence(std::ostream& os, std::span<const CliffordElement> seq) {
  for (auto e : seq) {
    os << e.index << ':';
    bool first = true;
    for (auto g : decompose(e)) {
      os << (first ? "" : " ") << to_string(g);
      first = false;
    }
    os << '\n';
  }
}

} // namespace transmon::clifford
