#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mgi::wick {

using Complex = std::complex<double>;

enum class OpKind : std::uint8_t { Annihilation = 0, Creation = 1 };

/// One bosonic ladder operator acting on a physical mode.
struct LadderOp {
  int mode = 0;
  OpKind kind = OpKind::Annihilation;

  friend bool operator==(const LadderOp&, const LadderOp&) = default;
};

inline LadderOp annihilate(int mode) { return {mode, OpKind::Annihilation}; }
inline LadderOp create(int mode) { return {mode, OpKind::Creation}; }
inline LadderOp dagger(const LadderOp& op) {
  return {op.mode, op.kind == OpKind::Creation ? OpKind::Annihilation
                                               : OpKind::Creation};
}

std::string to_string(const LadderOp& op);

/// A perfect matching of string positions 0..2n-1. Invariants: i < j within
/// each pair and first elements strictly increase across pairs, so every
/// matching is produced exactly once.
struct Pairing {
  std::vector<std::pair<int, int>> pairs;
};

inline constexpr int kDefaultPairingCap = 12;

/// All (n_ops-1)!! pair contractions of an n_ops operator string, in a
/// deterministic order. Rejects odd lengths and lengths above `cap` (the
/// count grows as a double factorial).
std::vector<Pairing> enumerate_pairings(int n_ops,
                                        int cap = kDefaultPairingCap);

/// Second moments <XY> of operator pairs. A table built with grouped()
/// semantics returns zero for in-range pairs that carry no entry (modes in
/// distinct independent groups); a plain table treats a missing entry as an
/// error so that incomplete setups fail loudly.
class PairMomentTable {
 public:
  PairMomentTable() = default;

  static PairMomentTable grouped(int mode_count);

  void set(const LadderOp& x, const LadderOp& y, Complex value);
  Complex get(const LadderOp& x, const LadderOp& y) const;
  bool has(const LadderOp& x, const LadderOp& y) const;
  std::size_t entry_count() const { return entries_.size(); }

  /// Largest |value(X,Y) - conj(value(Y^, X^))| over stored entries whose
  /// flipped partner is also stored.
  double hermiticity_residual() const;

 private:
  static std::uint64_t key(const LadderOp& x, const LadderOp& y);

  std::unordered_map<std::uint64_t, Complex> entries_;
  bool zero_when_absent_ = false;
  int mode_bound_ = 0;
};

/// Vacuum contraction: <x y> = 1 iff x annihilates and y creates the same
/// mode, else 0.
Complex vacuum_pair_moment(const LadderOp& x, const LadderOp& y);

/// Table of vacuum_pair_moment over modes 0..mode_count-1.
PairMomentTable vacuum_table(int mode_count);

/// Wick expectation of an ordered operator string over a zero-mean Gaussian
/// state given by its pair moments. Odd strings vanish, the empty string
/// is 1.
Complex gaussian_moment(std::span<const LadderOp> ops,
                        const PairMomentTable& table,
                        int cap = kDefaultPairingCap);

}  // namespace mgi::wick
