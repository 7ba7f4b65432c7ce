#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "mgi/wick.hpp"

using namespace mgi::wick;

namespace {

std::vector<LadderOp> ops_of(std::initializer_list<LadderOp> list) {
  return {list};
}

// Arbitrary dense table over mode pairs; values need no physical meaning
// for the algebraic properties below.
PairMomentTable random_table(int modes, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  PairMomentTable t;
  for (int mx = 0; mx < modes; ++mx)
    for (int my = 0; my < modes; ++my)
      for (int kx = 0; kx < 2; ++kx)
        for (int ky = 0; ky < 2; ++ky)
          t.set({mx, static_cast<OpKind>(kx)}, {my, static_cast<OpKind>(ky)},
                {dist(rng), dist(rng)});
  return t;
}

}  // namespace

TEST_CASE("pairing counts follow the double factorial") {
  CHECK(enumerate_pairings(2).size() == 1);
  CHECK(enumerate_pairings(4).size() == 3);
  CHECK(enumerate_pairings(6).size() == 15);
  CHECK(enumerate_pairings(8).size() == 105);
  CHECK(enumerate_pairings(10).size() == 945);
  CHECK(enumerate_pairings(12).size() == 10395);
}

TEST_CASE("two operators give the single pair (0,1)") {
  const auto pairings = enumerate_pairings(2);
  REQUIRE(pairings.size() == 1);
  CHECK(pairings[0].pairs ==
        std::vector<std::pair<int, int>>{{0, 1}});
}

TEST_CASE("four operators give the three matchings") {
  // Brute-force expectation: all permutations of {0,1,2,3} filtered by the
  // ordering conditions collapse to these three matchings.
  std::set<std::vector<std::pair<int, int>>> expected = {
      {{0, 1}, {2, 3}}, {{0, 2}, {1, 3}}, {{0, 3}, {1, 2}}};
  std::set<std::vector<std::pair<int, int>>> got;
  for (const auto& p : enumerate_pairings(4)) got.insert(p.pairs);
  CHECK(got == expected);
}

TEST_CASE("pairings satisfy both ordering conditions and are unique") {
  for (int n = 2; n <= 10; n += 2) {
    const auto pairings = enumerate_pairings(n);
    std::set<std::vector<std::pair<int, int>>> seen;
    for (const auto& pairing : pairings) {
      REQUIRE(static_cast<int>(pairing.pairs.size()) == n / 2);
      std::vector<bool> used(n, false);
      int previous_first = -1;
      for (const auto& [i, j] : pairing.pairs) {
        CHECK(i < j);                 // condition (a)
        CHECK(i > previous_first);    // condition (b)
        previous_first = i;
        REQUIRE(!used[i]);
        REQUIRE(!used[j]);
        used[i] = used[j] = true;
      }
      CHECK(std::all_of(used.begin(), used.end(), [](bool b) { return b; }));
      CHECK(seen.insert(pairing.pairs).second);
    }
  }
}

TEST_CASE("enumeration rejects odd and oversized inputs") {
  CHECK_THROWS_AS(enumerate_pairings(3), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_pairings(0), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_pairings(-2), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_pairings(14), std::invalid_argument);
  // The cap is a guard, not a hard limit.
  CHECK(enumerate_pairings(14, 14).size() == 135135);
}

TEST_CASE("a product of two four-operator averages expands to 9 terms") {
  CHECK(enumerate_pairings(4).size() * enumerate_pairings(4).size() == 9);
}

TEST_CASE("vacuum pair moments keep only antinormal same-mode pairs") {
  CHECK(vacuum_pair_moment(annihilate(0), create(0)) == Complex{1.0, 0.0});
  CHECK(vacuum_pair_moment(create(0), annihilate(0)) == Complex{0.0, 0.0});
  CHECK(vacuum_pair_moment(annihilate(0), create(1)) == Complex{0.0, 0.0});
  CHECK(vacuum_pair_moment(annihilate(0), annihilate(0)) == Complex{0.0, 0.0});
  CHECK(vacuum_pair_moment(create(0), create(0)) == Complex{0.0, 0.0});
}

TEST_CASE("gaussian_moment handles the trivial string lengths") {
  const auto table = vacuum_table(2);
  CHECK(gaussian_moment({}, table) == Complex{1.0, 0.0});
  const auto one = ops_of({annihilate(0)});
  CHECK(gaussian_moment(one, table) == Complex{0.0, 0.0});
  const auto three = ops_of({annihilate(0), create(0), annihilate(1)});
  CHECK(gaussian_moment(three, table) == Complex{0.0, 0.0});
  const auto two = ops_of({annihilate(0), create(0)});
  CHECK(gaussian_moment(two, table) == Complex{1.0, 0.0});
}

TEST_CASE("vacuum four-operator moment reproduces the commutator square") {
  const auto table = vacuum_table(1);
  // <a a^ a a^> = 1 on vacuum: only the (0,1)(2,3) pairing survives.
  const auto ops =
      ops_of({annihilate(0), create(0), annihilate(0), create(0)});
  CHECK(gaussian_moment(ops, table) == Complex{1.0, 0.0});
}

TEST_CASE("scaling one entry scales exactly the terms containing it") {
  PairMomentTable table = random_table(2, 42);
  // Exactly one a^(0) in the string, so any pairing holds the entry
  // <a^(0) a(1)> at most once and the moment is affine in it.
  const auto ops = ops_of({create(0), annihilate(1), annihilate(0), create(1),
                           annihilate(0), annihilate(1)});
  const LadderOp x = create(0);
  const LadderOp y = annihilate(1);
  const Complex base = table.get(x, y);
  std::array<Complex, 3> values;
  for (int k = 0; k < 3; ++k) {
    table.set(x, y, base * static_cast<double>(k));
    values[k] = gaussian_moment(ops, table);
  }
  CHECK(std::abs((values[2] - values[1]) - (values[1] - values[0])) < 1e-12);
  // lambda = 0 removes the containing terms; the affine slope restores them.
  CHECK(std::abs(values[2] - 2.0 * values[1] + values[0]) < 1e-12);
}

TEST_CASE("independent mode groups factorize") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  PairMomentTable table = PairMomentTable::grouped(4);
  // In-group entries only: modes {0,1} and {2,3}.
  for (int base : {0, 2})
    for (int mx = base; mx < base + 2; ++mx)
      for (int my = base; my < base + 2; ++my)
        for (int kx = 0; kx < 2; ++kx)
          for (int ky = 0; ky < 2; ++ky)
            table.set({mx, static_cast<OpKind>(kx)},
                      {my, static_cast<OpKind>(ky)}, {dist(rng), dist(rng)});

  // Interleaved string; the group substrings keep their relative order.
  const auto whole = ops_of({create(0), annihilate(2), create(3), annihilate(1),
                             create(1), annihilate(3), create(2), annihilate(0)});
  const auto group_a = ops_of({create(0), annihilate(1), create(1), annihilate(0)});
  const auto group_b = ops_of({annihilate(2), create(3), annihilate(3), create(2)});
  const Complex lhs = gaussian_moment(whole, table);
  const Complex rhs = gaussian_moment(group_a, table) *
                      gaussian_moment(group_b, table);
  CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(rhs)));
}

TEST_CASE("missing strict-table entries fail loudly and name the pair") {
  PairMomentTable table;
  table.set(annihilate(0), create(0), {1.0, 0.0});
  const auto ops = ops_of({annihilate(0), create(1)});
  try {
    gaussian_moment(ops, table);
    FAIL("expected an exception");
  } catch (const std::out_of_range& e) {
    CHECK(std::string(e.what()).find("a^(1)") != std::string::npos);
  }
}

TEST_CASE("grouped tables treat absent in-range pairs as zero") {
  PairMomentTable table = PairMomentTable::grouped(2);
  table.set(annihilate(0), create(0), {2.0, 0.0});
  CHECK(table.get(annihilate(0), create(1)) == Complex{0.0, 0.0});
  CHECK_THROWS_AS(table.get(annihilate(0), create(5)), std::out_of_range);
}

TEST_CASE("hermiticity residual flags asymmetric tables") {
  // value(X,Y) must equal conj(value(Y^, X^)); <a a> pairs with <a^ a^>.
  PairMomentTable table;
  table.set(annihilate(0), annihilate(0), {1.0, 2.0});
  table.set(create(0), create(0), {1.0, -2.0});
  CHECK(table.hermiticity_residual() < 1e-15);
  table.set(create(0), create(0), {1.0, 2.0});
  CHECK(table.hermiticity_residual() == doctest::Approx(4.0));
}
