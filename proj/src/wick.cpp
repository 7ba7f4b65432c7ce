#include "mgi/wick.hpp"

#include <array>
#include <stdexcept>

namespace mgi::wick {

std::string to_string(const LadderOp& op) {
  std::string s = "a";
  if (op.kind == OpKind::Creation) s += "^";
  s += "(" + std::to_string(op.mode) + ")";
  return s;
}

namespace {

void enumerate_recursive(unsigned used_mask, int n_ops,
                         std::vector<std::pair<int, int>>& current,
                         std::vector<Pairing>& out) {
  if (static_cast<int>(current.size()) * 2 == n_ops) {
    out.push_back(Pairing{current});
    return;
  }
  // Always pair the smallest unused position next: condition (a) holds by
  // i < j below, condition (b) because successive first elements are the
  // successive minima of the remaining positions.
  int first = 0;
  while (used_mask & (1u << first)) ++first;
  used_mask |= 1u << first;
  for (int second = first + 1; second < n_ops; ++second) {
    if (used_mask & (1u << second)) continue;
    current.emplace_back(first, second);
    enumerate_recursive(used_mask | (1u << second), n_ops, current, out);
    current.pop_back();
  }
}

std::vector<Pairing> enumerate_uncached(int n_ops) {
  std::vector<Pairing> out;
  std::vector<std::pair<int, int>> current;
  current.reserve(n_ops / 2);
  enumerate_recursive(0u, n_ops, current, out);
  return out;
}

}  // namespace

std::vector<Pairing> enumerate_pairings(int n_ops, int cap) {
  if (n_ops <= 0 || n_ops % 2 != 0) {
    throw std::invalid_argument("enumerate_pairings: operator count must be "
                                "a positive even number, got " +
                                std::to_string(n_ops));
  }
  if (n_ops > cap) {
    throw std::invalid_argument(
        "enumerate_pairings: " + std::to_string(n_ops) +
        " operators exceed the cap of " + std::to_string(cap) +
        " (double-factorial growth)");
  }
  if (n_ops <= kDefaultPairingCap) {
    static const auto cache = [] {
      std::array<std::vector<Pairing>, kDefaultPairingCap / 2> c;
      for (int n = 2; n <= kDefaultPairingCap; n += 2)
        c[n / 2 - 1] = enumerate_uncached(n);
      return c;
    }();
    return cache[n_ops / 2 - 1];
  }
  return enumerate_uncached(n_ops);
}

PairMomentTable PairMomentTable::grouped(int mode_count) {
  PairMomentTable t;
  t.zero_when_absent_ = true;
  t.mode_bound_ = mode_count;
  return t;
}

std::uint64_t PairMomentTable::key(const LadderOp& x, const LadderOp& y) {
  auto half = [](const LadderOp& op) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(op.mode))
            << 1) |
           static_cast<std::uint64_t>(op.kind);
  };
  return (half(x) << 32) | half(y);
}

void PairMomentTable::set(const LadderOp& x, const LadderOp& y,
                          Complex value) {
  entries_[key(x, y)] = value;
}

bool PairMomentTable::has(const LadderOp& x, const LadderOp& y) const {
  return entries_.contains(key(x, y));
}

Complex PairMomentTable::get(const LadderOp& x, const LadderOp& y) const {
  auto it = entries_.find(key(x, y));
  if (it != entries_.end()) return it->second;
  if (zero_when_absent_ && x.mode < mode_bound_ && y.mode < mode_bound_)
    return Complex{0.0, 0.0};
  throw std::out_of_range("PairMomentTable: no moment for <" + to_string(x) +
                          " " + to_string(y) + ">");
}

double PairMomentTable::hermiticity_residual() const {
  double worst = 0.0;
  for (const auto& [k, v] : entries_) {
    LadderOp y{static_cast<int>((k >> 1) & 0x7fffffffu),
               static_cast<OpKind>(k & 1u)};
    LadderOp x{static_cast<int>((k >> 33) & 0x7fffffffu),
               static_cast<OpKind>((k >> 32) & 1u)};
    auto it = entries_.find(key(dagger(y), dagger(x)));
    if (it == entries_.end()) continue;
    worst = std::max(worst, std::abs(v - std::conj(it->second)));
  }
  return worst;
}

Complex vacuum_pair_moment(const LadderOp& x, const LadderOp& y) {
  const bool antinormal = x.kind == OpKind::Annihilation &&
                          y.kind == OpKind::Creation && x.mode == y.mode;
  return antinormal ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
}

PairMomentTable vacuum_table(int mode_count) {
  PairMomentTable t = PairMomentTable::grouped(mode_count);
  for (int m = 0; m < mode_count; ++m)
    t.set(annihilate(m), create(m), Complex{1.0, 0.0});
  return t;
}

Complex gaussian_moment(std::span<const LadderOp> ops,
                        const PairMomentTable& table, int cap) {
  const int n = static_cast<int>(ops.size());
  if (n == 0) return Complex{1.0, 0.0};
  if (n % 2 != 0) return Complex{0.0, 0.0};
  Complex sum{0.0, 0.0};
  for (const Pairing& pairing : enumerate_pairings(n, cap)) {
    Complex term{1.0, 0.0};
    for (const auto& [i, j] : pairing.pairs) {
      term *= table.get(ops[i], ops[j]);
      if (term == Complex{0.0, 0.0}) break;
    }
    sum += term;
  }
  return sum;
}

}  // namespace mgi::wick
