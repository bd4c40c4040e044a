#include <cstdio>

#include "doctest.h"
#include "trext/boundary.hpp"

using namespace trext;

namespace {

Box box1(double a, double b) {
  Box bx;
  bx.lo = Vec{a};
  bx.hi = Vec{b};
  return bx;
}
Box box2(double a, double b) {
  Box bx;
  bx.lo = Vec{a, a};
  bx.hi = Vec{b, b};
  return bx;
}

// independent quadrature for the Gagliardo double integral of the sampled
// map: cell-pair integrals of the kernel with recursive refinement of the
// near-diagonal pairs (the map is treated as constant per cell, which is
// exactly the nearest-sample semantics of the estimator under test)
double kernel_cell_pair(int d, const Vec& ylo, const Vec& zlo, double hy, double expo,
                        int depth) {
  Vec yc = ylo, zc = zlo;
  for (int e = 0; e < d; ++e) {
    yc[e] += hy / 2;
    zc[e] += hy / 2;
  }
  double r = norm2(yc - zc);
  if (depth > 0 && r < 4 * hy * std::sqrt(static_cast<double>(d))) {
    double acc = 0;
    const double hh = hy / 2;
    for (int a = 0; a < (1 << d); ++a)
      for (int b = 0; b < (1 << d); ++b) {
        Vec yl = ylo, zl = zlo;
        for (int e = 0; e < d; ++e) {
          yl[e] += ((a >> e) & 1) * hh;
          zl[e] += ((b >> e) & 1) * hh;
        }
        acc += kernel_cell_pair(d, yl, zl, hh, expo, depth - 1);
      }
    return acc;
  }
  if (r < 1e-14) return 0.0;
  double cell = std::pow(hy, d);
  return cell * cell / std::pow(r, expo);
}

double gagliardo_oracle(const BoundaryMap& u, double p, double s) {
  const std::size_t N = u.node_count();
  const double expo = u.d + s * p;
  const double hy = u.h(0);
  double acc = 0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      if (i == j) continue;
      double dd = u.target.geodesic(u.node_value(i), u.node_value(j));
      if (dd == 0) continue;
      Vec ylo = u.node_point(i), zlo = u.node_point(j);
      for (int e = 0; e < u.d; ++e) {
        ylo[e] -= hy / 2;
        zlo[e] -= hy / 2;
      }
      acc += std::pow(dd, p) * kernel_cell_pair(u.d, ylo, zlo, hy, expo, 3);
    }
  return acc;
}

}  // namespace

TEST_CASE("vortex fixtures") {
  auto S1 = TargetManifold::circle();
  // constant f gives a constant map
  auto fconst = [](const Vec&) { return Vec{0.0, 1.0}; };
  BoundaryMap uc = vortex_map(S1, fconst, 0, 2, box1(-1, 1), 64);
  for (std::size_t i = 0; i < uc.node_count(); i += 7)
    CHECK(norm2(uc.node_value(i) - Vec{0.0, 1.0}) < 1e-12);

  // m=2: step map along the axis
  BoundaryMap ustep = vortex_map(S1, winding_map(S1, 1), 0, 2, box1(-1, 1), 64);
  CHECK(norm2(ustep.eval(Vec{0.5}) - Vec{1.0, 0.0}) < 1e-12);
  CHECK(norm2(ustep.eval(Vec{-0.5}) - Vec{-1.0, 0.0}) < 1e-12);
  REQUIRE(ustep.sigma.has_value());
  CHECK(ustep.sigma->pieces[0].dim == 0);

  // m=3: identity winding, recorded bound close to the analytic value 1
  BoundaryMap uv = vortex_map(S1, winding_map(S1, 1), 1, 3, box2(-1, 1), 48);
  REQUIRE(uv.sigma.has_value());
  CHECK(uv.sigma->deriv_bound == doctest::Approx(1.0).epsilon(0.08));
  // no sample sits on the singular set thanks to the half-spacing offset
  for (std::size_t i = 0; i < uv.node_count(); ++i)
    CHECK(uv.sigma->distance(uv.node_point(i)) > 1e-12);

  CHECK_THROWS_AS(vortex_map(S1, fconst, 2, 2, box1(-1, 1), 8), std::invalid_argument);
}

TEST_CASE("r1 class report") {
  auto S1 = TargetManifold::circle();
  BoundaryMap uc = constant_map(S1, Vec{1.0, 0.0}, 2, box1(-1, 1), 32);
  CHECK(verify_r1_class(uc).bound == doctest::Approx(0.0));

  BoundaryMap us = smooth_circle_map(5, 2, box1(-1, 1), 64, 0.5);
  auto rep = verify_r1_class(us);
  CHECK(rep.sup_grad > 0);
  CHECK(rep.excluded == 0);
}

TEST_CASE("gagliardo seminorm") {
  auto S1 = TargetManifold::circle();
  const double p = 1.5, s = 1 - 1 / p;

  BoundaryMap uc = constant_map(S1, Vec{1.0, 0.0}, 2, box1(-1, 1), 32);
  auto e0 = gagliardo_seminorm(uc, p, s, 0.0);
  CHECK(e0.value == doctest::Approx(0.0));
  CHECK(e0.truncated_value == doctest::Approx(0.0));

  BoundaryMap u = vortex_map(S1, winding_map(S1, 1), 0, 2, box1(-1, 1), 128);
  auto est = gagliardo_seminorm(u, p, s, 0.0);
  CHECK(est.value > 0);
  CHECK(std::isfinite(est.value));

  // truncation is monotone in delta and vanishes past the diameter
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {0.0, 0.1, 0.5, 1.0, 3.2}) {
    auto et = gagliardo_seminorm(u, p, s, delta);
    CHECK(et.truncated_value <= prev + 1e-12);
    prev = et.truncated_value;
    if (delta > 0)  // (t - delta)_+ <= t^p / delta^{p-1}
      CHECK(et.truncated_value <= est.value / std::pow(delta, p - 1) + 1e-12);
  }
  CHECK(gagliardo_seminorm(u, p, s, M_PI).truncated_value == doctest::Approx(0.0));

  // independent adaptive-quadrature oracle on the same samples
  BoundaryMap u64 = vortex_map(S1, winding_map(S1, 1), 0, 2, box1(-1, 1), 64);
  double oracle = gagliardo_oracle(u64, p, s);
  auto est64 = gagliardo_seminorm(u64, p, s, 0.0);
  CHECK(est64.value == doctest::Approx(oracle).epsilon(0.01));

  // scaling u_lambda(x) = u(x / lambda): the double integral scales by
  // lambda^{m-p} at matched resolution
  for (double lam : {0.5, 2.0}) {
    BoundaryMap ul = rescale(u, lam);
    auto el = gagliardo_seminorm(ul, p, s, 0.0);
    CHECK(el.value == doctest::Approx(est.value * std::pow(lam, 2 - p)).epsilon(0.02));
  }

  // reflection symmetry for the symmetric step data
  BoundaryMap ur = u;
  ur.analytic = [&u](const Vec& x) {
    Vec v = u.analytic(Vec{-x[0]});
    return v;
  };
  ur.fill_from_analytic();
  auto er = gagliardo_seminorm(ur, p, s, 0.0);
  CHECK(er.value == doctest::Approx(est.value).epsilon(1e-9));

  CHECK_THROWS_AS(gagliardo_seminorm(u, p, 1.5, 0.0), std::invalid_argument);
}

TEST_CASE("grid file round trips") {
  auto S1 = TargetManifold::circle();
  BoundaryMap u = smooth_circle_map(11, 3, box2(-1, 1), 12, 0.8, S1);
  u.analytic = nullptr;  // file round trips compare raw samples

  write_grid_text(u, "grid_rt.txt");
  BoundaryMap v = read_grid_text("grid_rt.txt", S1);
  REQUIRE(v.node_count() == u.node_count());
  CHECK(v.domain.lo[0] == u.domain.lo[0]);
  CHECK(v.domain.hi[1] == u.domain.hi[1]);
  for (std::size_t i = 0; i < u.samples.size(); ++i) CHECK(v.samples[i] == u.samples[i]);

  write_grid_binary(u, "grid_rt.bin");
  BoundaryMap w = read_grid_binary("grid_rt.bin", S1);
  REQUIRE(w.samples.size() == u.samples.size());
  for (std::size_t i = 0; i < u.samples.size(); ++i) CHECK(w.samples[i] == u.samples[i]);
  std::remove("grid_rt.txt");
  std::remove("grid_rt.bin");
}

TEST_CASE("rescale consistency") {
  auto S1 = TargetManifold::circle();
  BoundaryMap u = smooth_circle_map(3, 2, box1(-2, 2), 32, 0.7);
  BoundaryMap u2 = rescale(u, 2.0);
  Rng rng(9);
  for (int it = 0; it < 50; ++it) {
    double x = rng.uniform(-1.9, 1.9);
    CHECK(norm2(u2.eval(Vec{2 * x}) - u.eval(Vec{x})) < 1e-12);
  }
}
