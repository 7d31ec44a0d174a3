#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "equikernel/audit.hpp"
#include "equikernel/graph.hpp"

using namespace equikernel;

TEST_CASE("single hydrogen at the origin") {
  AtomicStructure s = parse_xyz("1\n\nH 0 0 0\n");
  CHECK(s.size() == 1);
  CHECK(s.species[0] == 1);
  CHECK(s.positions[0].norm() == 0.0);
}

TEST_CASE("water fixture") {
  const std::string xyz =
      "3\nwater\n"
      "O 0.000 0.000 0.117\n"
      "H 0.000 0.757 -0.470\n"
      "H 0.000 -0.757 -0.470\n";
  AtomicStructure s = parse_xyz(xyz);
  CHECK(s.size() == 3);
  CHECK(s.species == std::vector<int>{8, 1, 1});
  CHECK(s.positions[1].y == doctest::Approx(0.757));
  CHECK(s.comment == "water");
}

TEST_CASE("count mismatch reports the line where parsing stopped") {
  const std::string xyz = "4\ncomment\nH 0 0 0\nH 1 0 0\nH 2 0 0\n";
  try {
    parse_xyz(xyz);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
}

TEST_CASE("unknown elements and malformed numbers carry line numbers") {
  try {
    parse_xyz("2\n\nH 0 0 0\nQq 1 0 0\n");
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find("line 4") != std::string::npos);
    CHECK(what.find("Qq") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_xyz("1\n\nH zero 0 0\n"), std::runtime_error);
}

TEST_CASE("xyz round trip") {
  AtomicStructure s;
  s.species = {29, 8};
  s.positions = {{0.25, -1.5, 3.0}, {1.0, 2.0, -0.125}};
  s.comment = "fixture";
  AtomicStructure t = parse_xyz(write_xyz(s));
  CHECK(t.species == s.species);
  for (int i = 0; i < 2; ++i)
    CHECK((t.positions[static_cast<std::size_t>(i)] - s.positions[static_cast<std::size_t>(i)])
              .norm() < 1e-10);
}

TEST_CASE("atoms beyond the cutoff are not connected") {
  AtomicStructure s;
  s.species = {1, 1};
  s.positions = {{0, 0, 0}, {13.0, 0, 0}};
  AtomGraph g = build_graph(s, 12.0, 20);
  CHECK(g.edges.empty());
}

TEST_CASE("a close pair gives two opposite directed edges") {
  AtomicStructure s;
  s.species = {1, 8};
  s.positions = {{0, 0, 0}, {1.0, 0, 0}};
  AtomGraph g = build_graph(s, 12.0, 20);
  REQUIRE(g.edges.size() == 2);
  const Edge& a = g.edges[0];
  const Edge& b = g.edges[1];
  CHECK(a.target == 0);
  CHECK(a.source == 1);
  CHECK(b.target == 1);
  CHECK(b.source == 0);
  CHECK((a.rel + b.rel).norm() == 0.0);
  CHECK(a.rel.x == 1.0);  // r = pos(source) - pos(target)
  CHECK(a.dist == 1.0);
}

TEST_CASE("neighbor cap keeps the nearest twenty on a chain") {
  AtomicStructure s;
  for (int i = 0; i < 25; ++i) {
    s.species.push_back(6);
    s.positions.push_back({static_cast<double>(i), 0.0, 0.0});
  }
  AtomGraph g = build_graph(s, 12.0, 20);
  const int i = 12;  // interior node
  CHECK(g.n_edges_of(i) == 20);
  // brute-force oracle: the 20 nearest within 12 A, ties by source index
  std::vector<std::pair<double, int>> cand;
  for (int j = 0; j < 25; ++j) {
    if (j == i) continue;
    const double d = std::abs(j - i);
    if (d <= 12.0) cand.push_back({d, j});
  }
  std::sort(cand.begin(), cand.end());
  std::set<int> want;
  for (int k = 0; k < 20; ++k) want.insert(cand[static_cast<std::size_t>(k)].second);
  std::set<int> got;
  for (int k = g.first_edge[static_cast<std::size_t>(i)];
       k < g.first_edge[static_cast<std::size_t>(i + 1)]; ++k)
    got.insert(g.edges[static_cast<std::size_t>(k)].source);
  CHECK(got == want);
}

TEST_CASE("coincident atoms raise a degenerate-edge error") {
  AtomicStructure s;
  s.species = {1, 1};
  s.positions = {{1, 2, 3}, {1, 2, 3}};
  CHECK_THROWS_AS(build_graph(s, 5.0, 10), std::domain_error);
}

TEST_CASE("argument validation") {
  AtomicStructure s;
  s.species = {1};
  s.positions = {{0, 0, 0}};
  CHECK_THROWS_AS(build_graph(s, -1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(build_graph(s, 5.0, 0), std::invalid_argument);
}

TEST_CASE("translation leaves relative vectors bitwise identical") {
  Rng rng(3);
  AtomicStructure s = random_structure(rng, 12, 3.0, 0.7);
  // quantized positions so the translation is exact in floating point
  for (Vec3& p : s.positions) {
    p.x = std::round(p.x * 65536.0) / 65536.0;
    p.y = std::round(p.y * 65536.0) / 65536.0;
    p.z = std::round(p.z * 65536.0) / 65536.0;
  }
  AtomicStructure t = s;
  const Vec3 shift{5.0, -3.25, 100.5};
  for (Vec3& p : t.positions) p = p + shift;
  AtomGraph ga = build_graph(s, 6.0, 10);
  AtomGraph gb = build_graph(t, 6.0, 10);
  REQUIRE(ga.edges.size() == gb.edges.size());
  for (std::size_t e = 0; e < ga.edges.size(); ++e) {
    CHECK(ga.edges[e].source == gb.edges[e].source);
    CHECK(ga.edges[e].target == gb.edges[e].target);
    CHECK(ga.edges[e].rel.x == gb.edges[e].rel.x);
    CHECK(ga.edges[e].rel.y == gb.edges[e].rel.y);
    CHECK(ga.edges[e].rel.z == gb.edges[e].rel.z);
  }
}

TEST_CASE("rotation carries relative vectors along") {
  Rng rng(4);
  AtomicStructure s = random_structure(rng, 10, 3.0, 0.7);
  const Rotation r = Rotation::random(rng);
  AtomicStructure t = s;
  for (Vec3& p : t.positions) p = r * p;
  AtomGraph ga = build_graph(s, 20.0, 30);  // everything connected, no cap effects
  AtomGraph gb = build_graph(t, 20.0, 30);
  REQUIRE(ga.edges.size() == gb.edges.size());
  double err = 0.0;
  for (std::size_t e = 0; e < ga.edges.size(); ++e) {
    CHECK(ga.edges[e].source == gb.edges[e].source);
    err = std::max(err, (r * ga.edges[e].rel - gb.edges[e].rel).norm());
  }
  CHECK(err < 1e-12);
}

TEST_CASE("permutation relabels edges without changing the distance multiset") {
  Rng rng(5);
  AtomicStructure s = random_structure(rng, 9, 3.0, 0.7);
  std::vector<int> perm(9);
  for (int i = 0; i < 9; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (int i = 8; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)], perm[rng.index(static_cast<std::uint64_t>(i + 1))]);

  AtomicStructure t;
  t.species.resize(9);
  t.positions.resize(9);
  for (int i = 0; i < 9; ++i) {
    t.species[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        s.species[static_cast<std::size_t>(i)];
    t.positions[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        s.positions[static_cast<std::size_t>(i)];
  }
  AtomGraph ga = build_graph(s, 6.0, 8);
  AtomGraph gb = build_graph(t, 6.0, 8);
  REQUIRE(ga.edges.size() == gb.edges.size());

  auto key = [](const AtomicStructure& st, const Edge& e) {
    return std::make_tuple(e.dist, st.species[static_cast<std::size_t>(e.source)],
                           st.species[static_cast<std::size_t>(e.target)]);
  };
  std::multiset<std::tuple<double, int, int>> ka, kb;
  for (const Edge& e : ga.edges) ka.insert(key(s, e));
  for (const Edge& e : gb.edges) kb.insert(key(t, e));
  CHECK(ka == kb);
}

TEST_CASE("graph construction is deterministic") {
  Rng rng(6);
  AtomicStructure s = random_structure(rng, 14, 3.0, 0.7);
  AtomGraph a = build_graph(s, 6.0, 10);
  AtomGraph b = build_graph(s, 6.0, 10);
  REQUIRE(a.edges.size() == b.edges.size());
  for (std::size_t e = 0; e < a.edges.size(); ++e) {
    CHECK(a.edges[e].source == b.edges[e].source);
    CHECK(a.edges[e].target == b.edges[e].target);
    CHECK(a.edges[e].dist == b.edges[e].dist);
  }
}

TEST_CASE("brute-force neighbor oracle agreement on random structures") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    AtomicStructure s = random_structure(rng, 30, 4.0, 0.6);
    const double cutoff = 3.5;
    const int cap = 6;
    AtomGraph g = build_graph(s, cutoff, cap);
    for (int i = 0; i < 30; ++i) {
      struct C {
        double d;
        int j;
      };
      std::vector<C> cand;
      for (int j = 0; j < 30; ++j) {
        if (j == i) continue;
        const double d =
            (s.positions[static_cast<std::size_t>(j)] - s.positions[static_cast<std::size_t>(i)])
                .norm();
        if (d <= cutoff) cand.push_back({d, j});
      }
      std::sort(cand.begin(), cand.end(), [](const C& a, const C& b) {
        if (a.d != b.d) return a.d < b.d;
        return a.j < b.j;
      });
      if (static_cast<int>(cand.size()) > cap) cand.resize(static_cast<std::size_t>(cap));
      REQUIRE(g.n_edges_of(i) == static_cast<int>(cand.size()));
      for (int k = 0; k < static_cast<int>(cand.size()); ++k) {
        const Edge& e =
            g.edges[static_cast<std::size_t>(g.first_edge[static_cast<std::size_t>(i)] + k)];
        CHECK(e.source == cand[static_cast<std::size_t>(k)].j);
        CHECK(e.dist == doctest::Approx(cand[static_cast<std::size_t>(k)].d).epsilon(1e-15));
      }
    }
  }
}
