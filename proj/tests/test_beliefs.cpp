#include <cmath>

#include "doctest.h"
#include "scoutsim/beliefs.hpp"

using namespace scoutsim;

namespace {

CityMap open_map(double world) {
  CityMap map;
  map.bounds = Rect{0, 0, world, world};
  map.altitude_cap = 100;
  return map;
}

// Dense transition-matrix oracle: column i holds where node i's mass goes
// under the kernel with the reflecting rule.
std::vector<std::vector<double>> transition_matrix(const GroundGraph& g,
                                                   const MotionKernel& k) {
  const size_t n = g.size();
  std::vector<std::vector<double>> T(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) {
    const auto [ix, iy] = g.lattice[i];
    for (int dy = -k.radius; dy <= k.radius; ++dy) {
      for (int dx = -k.radius; dx <= k.radius; ++dx) {
        const double kk = k.at(dx, dy);
        if (kk == 0) continue;
        const int j = g.id_at(ix + dx, iy + dy);
        T[j >= 0 ? j : i][i] += kk;
      }
    }
  }
  return T;
}

}  // namespace

TEST_CASE("uniform prior") {
  const GroundGraph g = build_ground_graph(open_map(100), 10.0);
  REQUIRE(g.size() == 121);
  const GridFilter f = init_uniform(g);
  for (double w : f.w) CHECK(w == doctest::Approx(1.0 / 121).epsilon(1e-12));
  CHECK(f.sum() == doctest::Approx(1.0).epsilon(1e-12));

  CityMap map = open_map(100);
  map.buildings.push_back(Building{{{35, 35}, {65, 35}, {65, 65}, {35, 65}}, 20});
  const GroundGraph g2 = build_ground_graph(map, 10.0);
  const GridFilter f2 = init_uniform(g2);
  for (double w : f2.w) CHECK(w == doctest::Approx(1.0 / g2.size()).epsilon(1e-12));
}

TEST_CASE("corner-escape kernel shape") {
  const MotionKernel k = MotionKernel::corner_escape();
  CHECK(k.at(0, 0) == doctest::Approx(0.6));
  for (int sx : {-1, 1})
    for (int sy : {-1, 1}) CHECK(k.at(2 * sx, 2 * sy) == doctest::Approx(0.1));
  CHECK(k.at(1, 0) == doctest::Approx(0.0));
  double sum = 0;
  for (double v : k.k) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("predict: delta reproduces the kernel stencil on open interior") {
  const GroundGraph g = build_ground_graph(open_map(100), 10.0);
  const MotionKernel k = MotionKernel::corner_escape();
  GridFilter f;
  f.w.assign(g.size(), 0.0);
  const int c = g.id_at(5, 5);
  f.w[c] = 1.0;
  predict(f, k, g);
  for (int dy = -2; dy <= 2; ++dy)
    for (int dx = -2; dx <= 2; ++dx)
      CHECK(f.w[g.id_at(5 + dx, 5 + dy)] == doctest::Approx(k.at(dx, dy)).epsilon(1e-12));
}

TEST_CASE("predict: uniformity is preserved away from the boundary") {
  const GroundGraph g = build_ground_graph(open_map(120), 10.0);  // 13x13
  GridFilter f = init_uniform(g);
  predict(f, MotionKernel::corner_escape(), g);
  for (size_t i = 0; i < g.size(); ++i) {
    const auto [ix, iy] = g.lattice[i];
    if (ix >= 2 && iy >= 2 && ix <= g.nx - 3 && iy <= g.ny - 3)
      CHECK(f.w[i] == doctest::Approx(1.0 / g.size()).epsilon(1e-9));
  }
}

TEST_CASE("predict matches the dense transition-matrix oracle") {
  CityMap map = open_map(140);  // 15x15 lattice
  map.buildings.push_back(Building{{{52, 38}, {88, 38}, {88, 72}, {52, 72}}, 20});
  const GroundGraph g = build_ground_graph(map, 10.0);
  REQUIRE(g.size() <= 15 * 15);
  const MotionKernel k = MotionKernel::corner_escape();
  const auto T = transition_matrix(g, k);

  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    GridFilter f;
    f.w.resize(g.size());
    double sum = 0;
    for (double& w : f.w) {
      w = rng.uniform();
      sum += w;
    }
    for (double& w : f.w) w /= sum;
    std::vector<double> expected(g.size(), 0.0);
    for (size_t j = 0; j < g.size(); ++j)
      for (size_t i = 0; i < g.size(); ++i) expected[j] += T[j][i] * f.w[i];
    predict(f, k, g);
    for (size_t j = 0; j < g.size(); ++j)
      CHECK(f.w[j] == doctest::Approx(expected[j]).epsilon(1e-12));
  }
}

TEST_CASE("predict with the identity kernel is the identity") {
  const GroundGraph g = build_ground_graph(open_map(60), 10.0);
  GridFilter f = init_uniform(g);
  f.w[3] += 0.2;
  f.normalize();
  const std::vector<double> before = f.w;
  predict(f, MotionKernel::identity(), g);
  for (size_t i = 0; i < f.w.size(); ++i) CHECK(f.w[i] == doctest::Approx(before[i]));
}

TEST_CASE("detection update") {
  const GroundGraph g = build_ground_graph(open_map(100), 10.0);

  SUBCASE("uniform prior peaks at the detected node with the bump shape") {
    GridFilter f = init_uniform(g);
    const int c = g.id_at(5, 5);
    update_detection(f, g.nodes[c], g);
    // Prior cancels: posterior equals the normalized bump.
    double bump_sum = 0;
    for (size_t j = 0; j < g.size(); ++j) {
      const double d2 = (g.nodes[j] - g.nodes[c]).squaredNorm();
      if (d2 <= 900.0) bump_sum += std::exp(-0.5 * d2 / 100.0);
    }
    for (size_t j = 0; j < g.size(); ++j) {
      const double d2 = (g.nodes[j] - g.nodes[c]).squaredNorm();
      const double expect = d2 <= 900.0 ? std::exp(-0.5 * d2 / 100.0) / bump_sum : 0.0;
      CHECK(f.w[j] == doctest::Approx(expect).epsilon(1e-9));
    }
    CHECK(f.w[c] > f.w[g.id_at(6, 5)]);
  }

  SUBCASE("delta prior at the detected node is unchanged") {
    GridFilter f;
    f.w.assign(g.size(), 0.0);
    const int c = g.id_at(4, 7);
    f.w[c] = 1.0;
    update_detection(f, g.nodes[c], g);
    CHECK(f.w[c] == doctest::Approx(1.0));
  }

  SUBCASE("matches brute-force Bayes on a 9-node toy graph") {
    const GroundGraph toy = build_ground_graph(open_map(20), 10.0);  // 3x3
    REQUIRE(toy.size() == 9);
    GridFilter f;
    f.w = {0.05, 0.1, 0.15, 0.2, 0.05, 0.05, 0.1, 0.1, 0.2};
    const Vec2 z = toy.nodes[4];
    std::vector<double> lik(9);
    for (size_t j = 0; j < 9; ++j) {
      const double d2 = (toy.nodes[j] - z).squaredNorm();
      lik[j] = d2 <= 900.0 ? std::exp(-0.5 * d2 / 100.0) : 0.0;
    }
    double Z = 0;
    for (size_t j = 0; j < 9; ++j) Z += f.w[j] * lik[j];
    std::vector<double> expected(9);
    for (size_t j = 0; j < 9; ++j) expected[j] = f.w[j] * lik[j] / Z;
    update_detection(f, z, toy);
    for (size_t j = 0; j < 9; ++j) CHECK(f.w[j] == doctest::Approx(expected[j]).epsilon(1e-12));
  }

  SUBCASE("zero prior mass under the bump reinitializes to the bump") {
    GridFilter f;
    f.w.assign(g.size(), 0.0);
    f.w[g.id_at(0, 0)] = 1.0;
    update_detection(f, g.nodes[g.id_at(10, 10)], g);  // far corner
    CHECK(f.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(f.w[g.id_at(10, 10)] > 0.1);
    CHECK(f.w[g.id_at(0, 0)] == 0.0);
  }
}

TEST_CASE("no-detection update") {
  const GroundGraph g = build_ground_graph(open_map(10), 10.0);  // 2x2 = 4 nodes
  REQUIRE(g.size() == 4);

  SUBCASE("nothing visible leaves the filter unchanged") {
    GridFilter f = init_uniform(g);
    update_no_detection(f, {0, 0, 0, 0}, 0.95);
    for (double w : f.w) CHECK(w == doctest::Approx(0.25));
  }
  SUBCASE("two of four visible at p_d 0.95 matches brute-force Bayes") {
    GridFilter f = init_uniform(g);
    update_no_detection(f, {1, 1, 0, 0}, 0.95);
    // visible: 0.25*0.05, hidden: 0.25; Z = 2*0.0125 + 2*0.25 = 0.525
    CHECK(f.w[0] == doctest::Approx(0.0125 / 0.525).epsilon(1e-12));
    CHECK(f.w[1] == doctest::Approx(0.0125 / 0.525).epsilon(1e-12));
    CHECK(f.w[2] == doctest::Approx(0.25 / 0.525).epsilon(1e-12));
    CHECK(f.w[3] == doctest::Approx(0.25 / 0.525).epsilon(1e-12));
    CHECK(f.w[0] == doctest::Approx(0.023809524).epsilon(1e-6));
    CHECK(f.w[2] == doctest::Approx(0.476190476).epsilon(1e-6));
  }
  SUBCASE("p_d 0 is the identity for any mask") {
    GridFilter f = init_uniform(g);
    f.w = {0.4, 0.3, 0.2, 0.1};
    update_no_detection(f, {1, 0, 1, 1}, 0.0);
    CHECK(f.w[0] == doctest::Approx(0.4));
    CHECK(f.w[3] == doctest::Approx(0.1));
  }
  SUBCASE("all visible at p_d 1 restarts over the hidden set or uniformly") {
    GridFilter f = init_uniform(g);
    update_no_detection(f, {1, 1, 1, 1}, 1.0);
    for (double w : f.w) CHECK(w == doctest::Approx(0.25));
    GridFilter f2 = init_uniform(g);
    f2.w = {0.5, 0.5, 0.0, 0.0};
    update_no_detection(f2, {1, 1, 0, 1}, 1.0);
    CHECK(f2.w[2] == doctest::Approx(1.0));
  }
}

TEST_CASE("estimate") {
  const GroundGraph g = build_ground_graph(open_map(40), 10.0);  // 5x5
  SUBCASE("delta gives the node position") {
    GridFilter f;
    f.w.assign(g.size(), 0.0);
    const int c = g.id_at(2, 3);
    f.w[c] = 1.0;
    CHECK(estimate(f, g) == g.nodes[c]);
  }
  SUBCASE("equal mass on two nodes gives the midpoint") {
    GridFilter f;
    f.w.assign(g.size(), 0.0);
    f.w[g.id_at(0, 0)] = 0.5;
    f.w[g.id_at(4, 0)] = 0.5;
    CHECK(estimate(f, g) == Vec2(20, 0));
  }
  SUBCASE("uniform over a symmetric lattice gives the centroid") {
    const GridFilter f = init_uniform(g);
    const Vec2 e = estimate(f, g);
    CHECK(e.x() == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(e.y() == doctest::Approx(20.0).epsilon(1e-12));
  }
}

TEST_CASE("filter bank life cycle") {
  const GroundGraph g = build_ground_graph(open_map(200), 10.0);
  FilterBank bank(g);
  CHECK(bank.size() == 1);  // just the spare

  Detection d;
  d.target_id = 3;
  d.ground_point = g.nodes[17];
  bank.observe({d}, g);
  CHECK(bank.size() == 2);
  CHECK(bank.filter_for(3) != nullptr);
  CHECK(bank.filters().back().target_id == -1);  // fresh spare

  bank.observe({d}, g);  // known id: count unchanged
  CHECK(bank.size() == 2);

  // 20 distinct targets -> 21 filters.
  FilterBank big(g);
  for (int id = 0; id < 20; ++id) {
    Detection det;
    det.target_id = id;
    det.ground_point = g.nodes[id * 7 % g.size()];
    big.observe({det}, g);
  }
  CHECK(big.size() == 21);
}

TEST_CASE("normalization and non-negativity survive 10^4 random operations") {
  CityMap map = open_map(100);
  map.buildings.push_back(Building{{{42, 18}, {68, 18}, {68, 44}, {42, 44}}, 30});
  const GroundGraph g = build_ground_graph(map, 10.0);
  const MotionKernel k = MotionKernel::corner_escape();
  GridFilter f = init_uniform(g);
  Rng rng(8);
  for (int it = 0; it < 10000; ++it) {
    const int op = static_cast<int>(rng.uniform_int(3));
    if (op == 0) {
      predict(f, k, g);
    } else if (op == 1) {
      update_detection(f, g.nodes[rng.uniform_int(static_cast<uint32_t>(g.size()))], g);
    } else {
      std::vector<uint8_t> mask(g.size());
      for (auto& m : mask) m = rng.uniform() < 0.3;
      update_no_detection(f, mask, 0.95);
    }
    if (it % 97 == 0) {
      CHECK(f.sum() == doctest::Approx(1.0).epsilon(1e-9));
      for (double w : f.w) CHECK(w >= 0.0);
    }
  }
  CHECK(f.sum() == doctest::Approx(1.0).epsilon(1e-9));
}
