#include <cmath>

#include "doctest.h"
#include "scoutsim/flight.hpp"

using namespace scoutsim;

namespace {

CityMap open_map(double world, double cap = 150) {
  CityMap map;
  map.bounds = Rect{-world / 2, -world / 2, world / 2, world / 2};
  map.altitude_cap = cap;
  return map;
}

// Independent snap-cost oracle for arbitrary-degree coefficient vectors:
// differentiate four times symbolically, integrate the square analytically.
double snap_cost_oracle(std::vector<double> c, double T) {
  for (int d = 0; d < 4; ++d) {
    std::vector<double> dc(c.size() > 1 ? c.size() - 1 : 1, 0.0);
    for (size_t k = 1; k < c.size(); ++k) dc[k - 1] = c[k] * static_cast<double>(k);
    c = dc;
  }
  // integral of (sum c_k t^k)^2 over [0, T]
  double cost = 0;
  for (size_t j = 0; j < c.size(); ++j)
    for (size_t k = 0; k < c.size(); ++k)
      cost += c[j] * c[k] * std::pow(T, j + k + 1) / static_cast<double>(j + k + 1);
  return cost;
}

bool segment_free_sampled(const CityMap& map, const Vec3& a, const Vec3& b) {
  for (int i = 0; i <= 1000; ++i) {
    const double t = i / 1000.0;
    if (point_in_prism(map, a + t * (b - a))) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rest-to-rest unit translation is the classic degree-7 interpolant") {
  AxisBC start, end;
  start.pos = 0;
  end.pos = 1;
  const auto c = min_snap_axis(start, end, 1.0);
  const double expect[8] = {0, 0, 0, 0, 35, -84, 70, -20};
  for (int k = 0; k < 8; ++k) CHECK(std::abs(c[k] - expect[k]) < 1e-9);
}

TEST_CASE("identical rest endpoints give zero motion and zero snap") {
  AxisBC bc;
  bc.pos = 3.5;
  const auto c = min_snap_axis(bc, bc, 2.0);
  CHECK(std::abs(c[0] - 3.5) < 1e-12);
  for (int k = 1; k < 8; ++k) CHECK(std::abs(c[k]) < 1e-9);
  CHECK(snap_cost(c, 2.0) < 1e-12);
}

TEST_CASE("time scaling: the T=2 solution is the T=1 solution at t/2") {
  AxisBC start, end;
  start.pos = -1;
  end.pos = 4;
  const auto c1 = min_snap_axis(start, end, 1.0);
  const auto c2 = min_snap_axis(start, end, 2.0);
  for (int k = 0; k < 8; ++k)
    CHECK(c2[k] == doctest::Approx(c1[k] / std::pow(2.0, k)).epsilon(1e-9));
}

TEST_CASE("boundary residuals below 1e-6 for random boundary conditions") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<AxisBC, 4> bc0{}, bc1{};
    for (int a = 0; a < 4; ++a) {
      bc0[a] = AxisBC{rng.uniform(-50, 50), rng.uniform(-5, 5), rng.uniform(-2, 2),
                      rng.uniform(-1, 1)};
      bc1[a] = AxisBC{rng.uniform(-50, 50), rng.uniform(-5, 5), rng.uniform(-2, 2),
                      rng.uniform(-1, 1)};
    }
    const double T = rng.uniform(0.5, 6.0);
    const Poly7Segment seg = min_snap_segment(bc0, bc1, T);
    for (int a = 0; a < 4; ++a) {
      const AxisBC& s = bc0[a];
      const AxisBC& e = bc1[a];
      CHECK(std::abs(seg.eval(a, 0, 0) - s.pos) < 1e-6);
      CHECK(std::abs(seg.eval(a, 0, 1) - s.vel) < 1e-6);
      CHECK(std::abs(seg.eval(a, 0, 2) - s.acc) < 1e-6);
      CHECK(std::abs(seg.eval(a, 0, 3) - s.jerk) < 1e-6);
      CHECK(std::abs(seg.eval(a, T, 0) - e.pos) < 1e-6);
      CHECK(std::abs(seg.eval(a, T, 1) - e.vel) < 1e-6);
      CHECK(std::abs(seg.eval(a, T, 2) - e.acc) < 1e-6);
      CHECK(std::abs(seg.eval(a, T, 3) - e.jerk) < 1e-6);
    }
  }
}

TEST_CASE("snap cost matches the oracle and is optimal among feasible rivals") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    AxisBC start{rng.uniform(-10, 10), rng.uniform(-3, 3), rng.uniform(-1, 1),
                 rng.uniform(-1, 1)};
    AxisBC end{rng.uniform(-10, 10), rng.uniform(-3, 3), rng.uniform(-1, 1),
               rng.uniform(-1, 1)};
    const double T = rng.uniform(0.5, 4.0);
    const auto c = min_snap_axis(start, end, T);
    const double cost = snap_cost(c, T);
    CHECK(cost == doctest::Approx(snap_cost_oracle({c.begin(), c.end()}, T)).epsilon(1e-9));

    // Any degree-9 rival q(t) = p(t) + t^4 (T-t)^4 (a + b t) satisfies the
    // same eight boundary conditions; the interpolant must not lose.
    for (int rival = 0; rival < 10; ++rival) {
      const double a = rng.uniform(-2, 2);
      const double b = rng.uniform(-2, 2);
      // expand t^4 (T-t)^4 (a + b t)
      std::vector<double> bump(10, 0.0);
      // (T-t)^4 = sum_m binom(4,m) T^(4-m) (-t)^m
      const double binom[5] = {1, 4, 6, 4, 1};
      for (int m = 0; m <= 4; ++m) {
        const double coef = binom[m] * std::pow(T, 4 - m) * ((m % 2) ? -1.0 : 1.0);
        bump[4 + m] += coef * a;
        bump[5 + m] += coef * b;
      }
      std::vector<double> rival_c(c.begin(), c.end());
      rival_c.resize(10, 0.0);
      for (int k = 0; k < 10; ++k) rival_c[k] += bump[k];
      CHECK(snap_cost_oracle(rival_c, T) >= cost - 1e-9);
    }
  }
}

TEST_CASE("3D routing") {
  SUBCASE("free straight line shortcuts to two waypoints") {
    const CityMap map = open_map(200);
    FlightLattice lattice(map, 10.0, 10.0);
    const auto route = lattice.route(Vec3(-80, -80, 20), Vec3(70, 60, 40));
    REQUIRE(route.has_value());
    CHECK(route->size() == 2);
  }
  SUBCASE("start equals goal") {
    const CityMap map = open_map(100);
    FlightLattice lattice(map, 10.0, 10.0);
    const auto route = lattice.route(Vec3(5, 5, 20), Vec3(5, 5, 20));
    REQUIRE(route.has_value());
    CHECK(route->size() == 1);
  }
  SUBCASE("routes around or over an obstacle with collision-free edges") {
    CityMap map = open_map(200, 60);
    map.buildings.push_back(Building{{{-20, -60}, {20, -60}, {20, 60}, {-20, 60}}, 55});
    FlightLattice lattice(map, 10.0, 10.0);
    const Vec3 start(-60, 0, 20), goal(60, 0, 20);
    const auto route = lattice.route(start, goal);
    REQUIRE(route.has_value());
    CHECK(route->size() >= 3);  // cannot be straight
    for (size_t i = 1; i < route->size(); ++i)
      CHECK(segment_free_sampled(map, (*route)[i - 1], (*route)[i]));
    CHECK(((*route)[0] - start).norm() < 1e-9);
    CHECK((route->back() - goal).norm() < 1e-9);
  }
}

TEST_CASE("plan sampling") {
  const CityMap map = open_map(300);
  FlightLattice lattice(map, 10.0, 10.0);
  FlightParams params;

  SUBCASE("trivial route: every step is scan, yaw sweeps a full turn") {
    PoseSE3 here;
    here.position = Vec3(0, 0, 50);
    here.yaw = 1.0;
    here.pitch = -0.4;
    PoseSE3 goal = here;
    const TrajectoryPlan plan = plan_to_waypoint(lattice, here, goal, params);
    const auto poses = sample_plan(plan, 30);
    REQUIRE(poses.size() == 30);
    for (const PoseSE3& p : poses) CHECK((p.position - here.position).norm() < 1e-9);
    // Yaw returns to the start after exactly one revolution.
    CHECK(std::abs(wrap_angle(poses.back().yaw - goal.yaw)) < 1e-9);
    double swept = 0;
    double prev = goal.yaw;
    for (const PoseSE3& p : poses) {
      double d = wrap_angle(p.yaw - prev);
      if (d < -1e-9) d += kTwoPi;
      swept += d;
      prev = p.yaw;
    }
    CHECK(swept == doctest::Approx(kTwoPi).epsilon(1e-6));
  }

  SUBCASE("straight transit: positions move monotonically, then the scan holds") {
    PoseSE3 here;
    here.position = Vec3(-100, 0, 40);
    PoseSE3 goal;
    goal.position = Vec3(80, 0, 40);
    goal.yaw = 0.5;
    goal.pitch = -0.8;
    const TrajectoryPlan plan = plan_to_waypoint(lattice, here, goal, params);
    const auto poses = sample_plan(plan, 30);
    double prev_x = here.position.x();
    for (const PoseSE3& p : poses) {
      CHECK(p.position.x() >= prev_x - 1e-9);
      prev_x = p.position.x();
    }
    CHECK((poses.back().position - goal.position).norm() < 1e-9);
    CHECK(poses.back().pitch == doctest::Approx(goal.pitch).epsilon(1e-9));
  }

  SUBCASE("consecutive samples respect the speed cap") {
    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      PoseSE3 here, goal;
      here.position = Vec3(rng.uniform(-120, 120), rng.uniform(-120, 120), rng.uniform(15, 80));
      goal.position = Vec3(rng.uniform(-120, 120), rng.uniform(-120, 120), rng.uniform(15, 80));
      goal.yaw = rng.uniform(0, kTwoPi);
      const TrajectoryPlan plan = plan_to_waypoint(lattice, here, goal, params);
      const int n = 30;
      const auto poses = sample_plan(plan, n);
      const double dt = plan.total_time() / n;
      Vec3 prev = here.position;
      for (const PoseSE3& p : poses) {
        CHECK((p.position - prev).norm() <= params.v_max * dt + 1e-6);
        prev = p.position;
      }
    }
  }

  SUBCASE("planning is deterministic") {
    PoseSE3 here, goal;
    here.position = Vec3(-50, 30, 25);
    goal.position = Vec3(90, -40, 55);
    goal.yaw = 2.0;
    const auto a = sample_plan(plan_to_waypoint(lattice, here, goal, params), 30);
    const auto b = sample_plan(plan_to_waypoint(lattice, here, goal, params), 30);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].position == b[i].position);
      CHECK(a[i].yaw == b[i].yaw);
      CHECK(a[i].pitch == b[i].pitch);
    }
  }

  SUBCASE("segment chain is continuous through jerk at every junction") {
    CityMap blocked = open_map(200, 60);
    blocked.buildings.push_back(Building{{{-15, -80}, {15, -80}, {15, 80}, {-15, 80}}, 55});
    FlightLattice lat2(blocked, 10.0, 10.0);
    PoseSE3 here, goal;
    here.position = Vec3(-70, 0, 20);
    goal.position = Vec3(70, 0, 20);
    const TrajectoryPlan plan = plan_to_waypoint(lat2, here, goal, params);
    REQUIRE(plan.segments.size() >= 2);
    for (size_t s = 1; s < plan.segments.size(); ++s) {
      const Poly7Segment& a = plan.segments[s - 1];
      const Poly7Segment& b = plan.segments[s];
      for (int axis = 0; axis < 4; ++axis) {
        for (int d = 0; d <= 3; ++d)
          CHECK(std::abs(a.eval(axis, a.duration, d) - b.eval(axis, 0, d)) < 1e-6);
      }
    }
  }
}
