#include <set>

#include "doctest.h"
#include "trext/fuzz.hpp"

using namespace trext;

TEST_CASE("slab retraction closed form") {
  // identity on the enclosing boundary
  Vec hw{1.0, 1.0};
  Rng rng(3);
  for (int it = 0; it < 200; ++it) {
    Vec x{rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0};
    auto r = slab_retraction_box(hw, x);  // bottom points stay
    CHECK(norm2(r.point - x) < 1e-12);
    Vec w{1.0, rng.uniform(-1, 1), rng.uniform(0, 1)};  // wall points stay
    auto rw = slab_retraction_box(hw, w);
    CHECK(norm2(rw.point - w) < 1e-12);
  }
  // the axis maps to the cone tip
  for (double t : {0.0, 0.3, 1.0}) {
    auto r = slab_retraction_box(hw, Vec{0.0, 0.0, t});
    CHECK(r.hit_bottom);
    CHECK(norm2(r.point) < 1e-12);
  }
  // worked example on [-1,1]^2 x [0,1]
  auto r = slab_retraction_box(hw, Vec{0.9, 0.0, 0.8});
  CHECK_FALSE(r.hit_bottom);
  CHECK(r.point[0] == doctest::Approx(1.0));
  CHECK(r.point[1] == doctest::Approx(0.0));
  CHECK(r.point[2] == doctest::Approx(2.0 - 1.2 / 0.9));
  // continuity across the branch boundary
  for (int it = 0; it < 100; ++it) {
    double h = rng.uniform(0, 1);
    double g = 1 - h / 2;
    Vec a{g - 1e-9, 0.0, h}, b{g + 1e-9, 0.0, h};
    CHECK(norm2(slab_retraction_box(hw, a).point - slab_retraction_box(hw, b).point) < 1e-6);
  }
}

TEST_CASE("supercritical propagation: examples") {
  auto D = DyadicDecomposition::build(2, 0, 6);
  auto empty = supercritical_propagate(D, {}, 0);
  CHECK(empty.sing.empty());
  Rng rng(5);
  for (int it = 0; it < 50; ++it) {
    Vec x{rng.uniform(-3, 3), rng.uniform(1.0, 127.0)};
    CHECK(norm2(empty.psi(x) - x) < 1e-12);
  }

  // a single bad cube generates exactly one singular cube per level
  CubeId b0{0, IVec(1)};
  b0.zeta[0] = 3;
  auto one = supercritical_propagate(D, {b0}, 0);
  for (int k = 0; k <= 6; ++k) CHECK(one.sing_per_level.at(k) == 1);
  // oracle: the chain is the geometric parent chain
  CubeId q = b0;
  for (int k = 0; k < 6; ++k) {
    Box child = D.cube_box(q);
    q = D.parent(q);
    Box par = D.cube_box(q);
    CHECK(par.lo[0] <= child.lo[0] + 1e-12);
    CHECK(par.hi[0] >= child.hi[0] - 1e-12);
    CHECK(one.sing.count(q) == 1);
  }
}

TEST_CASE("supercritical fuzz: exact counting and equality cases") {
  Rng rng(101);
  for (int it = 0; it < 100; ++it) {
    int m = it % 2 == 0 ? 2 : 3;
    auto inst = make_super_instance(rng, m, 100, 8);
    CHECK(check_super_counting(inst));
    // equality in the summed bound holds iff no two chains merged
    std::int64_t sing_total = 0, bad_prefix_total = 0, bad_running = 0;
    for (int k = inst.k0; k <= inst.D.k_max; ++k) {
      auto itb = inst.complex.bad_per_level.find(k);
      if (itb != inst.complex.bad_per_level.end()) bad_running += itb->second;
      auto its = inst.complex.sing_per_level.find(k);
      sing_total += its == inst.complex.sing_per_level.end() ? 0 : its->second;
      bad_prefix_total += bad_running;
    }
    CHECK((sing_total == bad_prefix_total) == !inst.merged);
    CHECK(check_super_series(inst, m + 0.5));
    CHECK(check_super_series(inst, m + 1.0));
  }
}

TEST_CASE("supercritical psi contracts") {
  Rng rng(202);
  for (int it = 0; it < 12; ++it) {
    int m = it % 2 == 0 ? 2 : 3;
    auto inst = make_super_instance(rng, m, 60, 6);
    auto pc = check_super_psi(inst, rng, 250);
    CHECK(pc.descending);
    CHECK(pc.identity_on_regular);
    CHECK(pc.avoids_bad);
  }
}

TEST_CASE("spawning cubes") {
  Rng rng(7);
  Box bounds;
  bounds.lo = Vec{-4.0, -4.0};
  bounds.hi = Vec{4.0, 4.0};

  // empty singular set: no singular cubes, identity retraction
  SingularSet empty_sigma;
  auto sp0 = spawn_over_singular_set(empty_sigma, 2.0, 1, 3, -3, 2, bounds, rng);
  CHECK(sp0.sing_inf.empty());
  CHECK(sp0.M == doctest::Approx(0.0));
  Vec x{0.3, -0.2, 1.7};
  CHECK(norm2(sp0.psi(x) - x) < 1e-12);

  // a point singular set in m=3 with l=1: per-level counts bounded by a
  // constant (the exponent m-l-2 vanishes)
  SingularSet pt;
  SingularPiece piece;
  piece.dim = 0;
  piece.a = Vec{0.2, -0.3};
  pt.pieces.push_back(piece);
  auto sp = spawn_over_singular_set(pt, 2.0, 1, 3, -3, 2, bounds, rng);
  CHECK(sp.clearance > 0);
  for (auto& [k, count] : sp.per_level) {
    CHECK(static_cast<double>(count) <=
          sp.M * std::pow(2.0, -k * (3 - 1 - 2)) + 1e-9);  // assertion (iii) shape
    double width_bound = std::pow(2 * (2 * sp.kappa + 2) + 2, 2.0);
    if (std::ldexp(1.0, k + 1) * (sp.kappa + 1) < 4.0)  // fully inside the window
      CHECK(static_cast<double>(count) <= width_bound);
  }
  // the retraction lands in the cone-complement set and descends
  for (int it = 0; it < 300; ++it) {
    Vec y{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.2, 7.9)};
    Vec z = sp.psi(y);
    CHECK(in_sigma_check(pt, 2.0, z));
    CHECK(z[2] <= y[2] + 1e-12);
    CHECK(z[0] == doctest::Approx(y[0]));
    CHECK(z[1] == doctest::Approx(y[1]));
  }

  // dimension budget: m=2 with l=1 admits only the empty singular set
  SingularSet pt1;
  SingularPiece p1;
  p1.dim = 0;
  p1.a = Vec{0.0};
  pt1.pieces.push_back(p1);
  Box b1;
  b1.lo = Vec{-4.0};
  b1.hi = Vec{4.0};
  CHECK_THROWS_AS(spawn_over_singular_set(pt1, 2.0, 1, 2, -3, 2, b1, rng),
                  std::invalid_argument);
}

TEST_CASE("propagation and decay: dome fixture") {
  // a horizontal run of 2^j bad cubes at level k; the construction must stay
  // within the closed-form geometric series bound
  const int k = 0, j = 4;
  auto D = DyadicDecomposition::build(2, -1, 7);
  SingInfinity none;
  none.psi = [](const Vec& x) { return x; };
  std::vector<Box> bad;
  Box run;
  run.lo = Vec{0.01, 1.1};
  run.hi = Vec{16.0 - 0.01, 1.9};
  bad.push_back(run);

  auto c = propagate_and_decay(D, none, bad, 1, k, ShiftPolicy::Averaged);
  CHECK(c.n_bad.at(0) == 16);
  CHECK(c.n_T_bad.at(0) == 15);  // the interior edges
  const double p = 1.5;
  double weighted = 0;
  for (auto& [lev, cnt] : c.n_sing) weighted += std::pow(2.0, lev * (2 - p)) * cnt;
  double series_bound = 4.0 * std::pow(2.0, j + k * (2 - p)) / (1 - std::pow(2.0, -(p - 1)));
  CHECK(weighted >= std::pow(2.0, j + k * (2 - p)));  // at least the bad cubes
  CHECK(weighted <= series_bound);
  // the dome dies out geometrically
  CHECK(c.n_sing.at(5) <= 2);

  // empty input gives an empty complex
  auto c0 = propagate_and_decay(D, none, {}, 1, k, ShiftPolicy::Averaged);
  CHECK(c0.sing.empty());
}

TEST_CASE("propagation and decay: fuzz with exact bounds") {
  Rng rng(303);
  for (int it = 0; it < 100; ++it) {
    int m = it % 2 == 0 ? 2 : 3;
    int ell = 1 + static_cast<int>(rng.uniform_int(std::max(1, m - 1)));
    auto inst = make_sub_instance(rng, m, ell, 8);
    CHECK(check_sub_counting(inst));
    CHECK(check_sub_face_decay(inst));
    // bad cubes are singular
    for (const CubeId& q : inst.complex.bad_cubes) CHECK(inst.complex.sing.count(q) == 1);
  }
}

TEST_CASE("propagation and decay: psi contracts") {
  Rng rng(404);
  for (int it = 0; it < 10; ++it) {
    int m = it % 2 == 0 ? 2 : 3;
    int ell = 1 + static_cast<int>(rng.uniform_int(std::max(1, m - 1)));
    auto inst = make_sub_instance(rng, m, ell, 6);
    auto pc = check_sub_psi(inst, rng, 250);
    CHECK(pc.descending);
    CHECK(pc.identity_on_regular);
    CHECK(pc.avoids_bad);
  }
}

TEST_CASE("neat cone") {
  auto S1 = TargetManifold::circle();
  Box dom;
  dom.lo = Vec{-2.0};
  dom.hi = Vec{2.0};
  // constant map with an attached descriptor: the formula value comes back
  BoundaryMap uc = constant_map(S1, Vec{1.0, 0.0}, 2, dom, 64);
  SingularSet s;
  SingularPiece piece;
  piece.dim = 0;
  piece.a = Vec{0.0};
  s.pieces.push_back(piece);
  uc.sigma = s;
  uc.sigma->deriv_bound = verify_r1_class(uc).bound;
  auto nc = neat_cone_kappa(uc, 1.0, 0.125, {}, 0.01);
  CHECK(nc.doublings == 0);
  CHECK(nc.kappa == doctest::Approx(1.0 + 1.0 * std::max(uc.sigma->deriv_bound, 1e-9) / 0.125));

  // step-map cross check against the classification
  BoundaryMap us = vortex_map(S1, winding_map(S1, 1), 0, 2, dom, 128);
  auto D = DyadicDecomposition::build(2, -5, 0);
  Mollifier phi(1);
  auto cls = classify(D, us, phi, S1.delta(), 3, DomainSpec::box_domain(dom), dom);
  REQUIRE(!cls.bad_points.empty());
  double dil = 0.0;
  auto nc2 = neat_cone_kappa(us, 2.0, 0.125, cls.bad_points, dil);
  for (const Vec& b : cls.bad_points) CHECK_FALSE(in_sigma_check(*us.sigma, nc2.kappa, b));
}
