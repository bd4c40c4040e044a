#include "doctest.h"
#include "trext/linear.hpp"

using namespace trext;

namespace {

Box box1(double a, double b) {
  Box bx;
  bx.lo = Vec{a};
  bx.hi = Vec{b};
  return bx;
}

BoundaryMap step_map(int n = 128) {
  auto S1 = TargetManifold::circle();
  return vortex_map(S1, winding_map(S1, 1), 0, 2, box1(-2, 2), n);
}

}  // namespace

TEST_CASE("extension reproduces constants and affine data") {
  Mollifier phi(1);
  auto S1 = TargetManifold::circle();
  BoundaryMap uc = constant_map(S1, Vec{0.0, 1.0}, 2, box1(-2, 2), 64);
  for (double t : {0.05, 0.3, 1.0}) {
    Vec V = extension_eval(uc, phi, Vec{0.2, t});
    CHECK(norm2(V - Vec{0.0, 1.0}) < 1e-13);
  }

  // affine R^nu-valued data and an even mollifier: odd moments cancel
  BoundaryMap ua;
  ua.d = 1;
  ua.target = S1;
  ua.domain = box1(-2, 2);
  ua.n[0] = 64;
  ua.analytic = [](const Vec& x) { return Vec{0.25 + 0.5 * x[0], -1.0 * x[0]}; };
  for (double t : {0.1, 0.7}) {
    Vec V = extension_eval(ua, phi, Vec{0.3, t});
    CHECK(V[0] == doctest::Approx(0.25 + 0.5 * 0.3).epsilon(1e-12));
    CHECK(V[1] == doctest::Approx(-0.3).epsilon(1e-12));
  }

  // the chord midpoint of the step map sits deep inside the disk
  BoundaryMap us = step_map();
  Vec V0 = extension_eval(us, phi, Vec{0.0, 1.0});
  CHECK(norm2(V0) < 1.0 - us.target.delta());

  CHECK_THROWS_AS(extension_eval(us, phi, Vec{1.5, 1.0}), TentError);
}

TEST_CASE("extension gradient") {
  Mollifier phi(1);
  auto S1 = TargetManifold::circle();

  BoundaryMap uc = constant_map(S1, Vec{1.0, 0.0}, 2, box1(-2, 2), 64);
  auto g = extension_gradient(uc, phi, Vec{0.0, 0.5});
  CHECK(g.frobenius() < 1e-12);

  BoundaryMap ua;
  ua.d = 1;
  ua.target = S1;
  ua.domain = box1(-2, 2);
  ua.n[0] = 64;
  ua.analytic = [](const Vec& x) { return Vec{0.5 * x[0], 0.0}; };
  g = extension_gradient(ua, phi, Vec{0.1, 0.4});
  CHECK(g.rows[0][0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::abs(g.rows[1][0]) < 1e-9);

  // pointwise bound |DV| <= C_phi diam(N)/x_m with C_phi from the mollifier
  BoundaryMap us = step_map();
  const double c_phi = (1 + us.d + 1) * phi.gradient_l1();
  Rng rng(17);
  for (int it = 0; it < 1000; ++it) {
    double t = rng.uniform(0.05, 1.0);
    double x = rng.uniform(-0.8, 0.8);
    auto gg = extension_gradient(us, phi, Vec{x, t});
    CHECK(gg.frobenius() <= c_phi * us.target.diam() / t);
  }
}

TEST_CASE("mean oscillation") {
  auto S1 = TargetManifold::circle();
  BoundaryMap uc = constant_map(S1, Vec{1.0, 0.0}, 2, box1(-2, 2), 64);
  CHECK(mean_oscillation(uc, Vec{0.0, 0.5}, 0.0) == doctest::Approx(0.0));

  BoundaryMap us = step_map();
  CHECK(mean_oscillation(us, Vec{0.3, 0.2}, M_PI) == doctest::Approx(0.0));

  // the step map at (0, r): for r -> 0 the average pairwise distance of the
  // two-point uniform measure is pi/2; Monte-Carlo oracle over the ball pair
  double mo = mean_oscillation(us, Vec{0.0, 0.05}, 0.0, 24);
  Rng rng(29);
  double mc = 0;
  const int trials = 200000;
  for (int i = 0; i < trials; ++i) {
    double y = rng.uniform(-0.05, 0.05), z = rng.uniform(-0.05, 0.05);
    mc += us.target.geodesic(us.eval(Vec{y}), us.eval(Vec{z}));
  }
  mc /= trials;
  CHECK(mo == doctest::Approx(M_PI / 2).epsilon(0.02));
  CHECK(mo == doctest::Approx(mc).epsilon(0.02));
}

TEST_CASE("classification and bad size") {
  auto D = DyadicDecomposition::build(2, -5, 0);
  Mollifier phi(1);
  auto S1 = TargetManifold::circle();
  Box bounds = box1(-2, 2);
  DomainSpec dom = DomainSpec::box_domain(box1(-2, 2));

  BoundaryMap uc = constant_map(S1, Vec{1.0, 0.0}, 2, box1(-2, 2), 128);
  auto cc = classify(D, uc, phi, S1.delta(), 3, dom, bounds);
  CHECK(cc.bad_count() == 0);

  BoundaryMap us = step_map();
  auto cs = classify(D, us, phi, S1.delta(), 3, dom, bounds);
  CHECK(cs.bad_count() > 0);
  // every bad witness sits close to the column above the jump point
  for (auto& [q, w] : cs.witness) {
    CHECK(std::abs(w.first[0]) <= 4.0 * w.first[1]);
  }
  // doubling the sample density flips no flag on this converged setup
  auto cs2 = classify(D, us, phi, S1.delta(), 6, dom, bounds);
  for (const CubeId& q : cs.cubes) CHECK(cs.is_bad(q) == cs2.is_bad(q));

  // monotonicity: enlarging delta never turns a good cube bad
  auto cl = classify(D, us, phi, S1.delta() * 1.3, 3, dom, bounds);
  for (const CubeId& q : cs.cubes)
    if (!cs.is_bad(q)) CHECK(!cl.is_bad(q));

  auto bs = bad_size(cs, 1.5);
  CHECK(bs.weighted_count > 0);
  CHECK(bs.hardy_integral > 0);

  // single synthetic bad cube: the weighted count is the single term
  Classification one;
  one.D = &D;
  one.bad_per_level[-2] = 1;
  CHECK(bad_size(one, 1.5).weighted_count == doctest::Approx(std::pow(2.0, -2 * 0.5)));
  Classification none;
  none.D = &D;
  CHECK(bad_size(none, 1.5).weighted_count == doctest::Approx(0.0));
}

TEST_CASE("mean oscillation controls the manifold distance") {
  // calibrate C_MO on the step map, then check the sandwich on a smooth map
  Mollifier phi(1);
  BoundaryMap us = step_map();
  const double dstar = us.target.delta() / 4;
  Rng rng(31);
  double c_mo = 0;
  for (int it = 0; it < 300; ++it) {
    double t = rng.uniform(0.05, 1.0);
    double x = rng.uniform(-0.9, 0.9);
    Vec X{x, t};
    double dist = us.target.dist_to_manifold(extension_eval(us, phi, X));
    double mo = mean_oscillation(us, X, dstar);
    c_mo = std::max(c_mo, dist / (dstar + mo));
  }
  CHECK(c_mo > 0);
  BoundaryMap sm = smooth_circle_map(7, 2, box1(-2, 2), 128, 1.2);
  for (int it = 0; it < 300; ++it) {
    double t = rng.uniform(0.05, 1.0);
    double x = rng.uniform(-0.9, 0.9);
    Vec X{x, t};
    double dist = sm.target.dist_to_manifold(extension_eval(sm, phi, X));
    double mo = mean_oscillation(sm, X, dstar);
    CHECK(dist <= c_mo * (dstar + mo) * 1.0 + 1e-12);
  }
}

TEST_CASE("bad set Hardy bound") {
  // int_{bad} x_m^-p <= (p/(p-1))^p delta^-p int |DV|^p, both sides sampled
  // on the tent, with quadrature slack 1.5
  Mollifier phi(1);
  BoundaryMap us = step_map();
  const double p = 1.5, delta = us.target.delta();
  double lhs = 0, rhs = 0;
  const int nx = 60, nt = 40;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nt; ++j) {
      double x = -0.9 + 1.8 * (i + 0.5) / nx;
      double t = 0.05 + 0.95 * (j + 0.5) / nt;
      double w = (1.8 / nx) * (0.95 / nt);
      Vec X{x, t};
      double dist = us.target.dist_to_manifold(extension_eval(us, phi, X));
      if (dist > delta) lhs += w / std::pow(t, p);
      rhs += w * std::pow(extension_gradient(us, phi, X).frobenius(), p);
    }
  rhs *= std::pow(p / (p - 1), p) / std::pow(delta, p);
  CHECK(lhs <= 1.5 * rhs);
}
