#pragma once

#include "trext/core.hpp"

namespace trext {

// Target manifolds with an explicitly computable nearest-point retraction:
// the circle S^1 in R^2 and round spheres S^n in R^{n+1}. The retraction
// radius delta is the collar width on which projection is applied; the
// default 1/2 keeps the projection derivative bounded by 2 on the collar.
class TargetManifold {
 public:
  enum class Kind { Circle, Sphere };

  static TargetManifold circle(double delta = 0.5) { return TargetManifold(Kind::Circle, 1, delta); }
  static TargetManifold sphere(int n, double delta = 0.5) {
    if (n < 1 || n + 1 > kMaxDim) throw std::invalid_argument("unsupported sphere dimension");
    return TargetManifold(n == 1 ? Kind::Circle : Kind::Sphere, n, delta);
  }

  Kind kind() const { return kind_; }
  int n() const { return n_; }            // manifold dimension
  int nu() const { return n_ + 1; }       // ambient dimension
  double delta() const { return delta_; }
  double diam() const { return M_PI; }    // geodesic diameter of the unit sphere

  double dist_to_manifold(const Vec& y) const { return std::abs(1.0 - norm2(y)); }

  // Nearest-point retraction. Errors outside the delta-collar: that signals
  // a good/bad misclassification upstream.
  Vec project(const Vec& y) const {
    double r = norm2(y);
    if (r < 1e-9)
      throw ProjectionError("nearest-point retraction undefined at the centre");
    if (std::abs(1.0 - r) > delta_ + 1e-9)
      throw ProjectionError(format("distance %.6g to the target exceeds the retraction radius %.3g",
                                   std::abs(1.0 - r), delta_));
    Vec out = y;
    out *= 1.0 / r;
    return out;
  }

  bool on_manifold(const Vec& y, double tol = 1e-9) const {
    return std::abs(1.0 - norm2(y)) <= tol;
  }

  double geodesic(const Vec& a, const Vec& b) const {
    double ca = dot(a, b) / (norm2(a) * norm2(b));
    return std::acos(std::clamp(ca, -1.0, 1.0));
  }

  // pi_j(S^n) is trivial iff j < n (for j >= 1); used to gate the
  // constructive fills.
  bool pi_trivial(int j) const { return j >= 1 && j < n_; }

  // Finiteness of pi_j(S^n) for the desk-scale range n <= 3, j <= 4.
  // pi_n = Z and pi_3(S^2) = Z are infinite; the listed higher groups are
  // finite.
  bool pi_finite(int j) const {
    if (j < 1) return true;
    if (j < n_) return true;
    if (j == n_) return false;
    if (n_ == 2 && j == 3) return false;
    return true;
  }

  Vec base_point() const {
    Vec b = Vec::zero(nu());
    b[0] = 1.0;
    return b;
  }

 private:
  TargetManifold(Kind k, int n, double delta) : kind_(k), n_(n), delta_(delta) {}
  Kind kind_;
  int n_;
  double delta_;
};

// Shortest-arc interpolation on the sphere; deterministic perpendicular
// tie-break for antipodal endpoints.
Vec slerp(const TargetManifold& M, const Vec& a, const Vec& b, double t);

// Stereographic chart from the pole q (unit vector): S^n \ {q} -> R^n
// expressed in an orthonormal frame of q^perp.
struct StereoChart {
  Vec q;
  std::array<Vec, kMaxDim> frame;  // n vectors
  int n = 0;

  static StereoChart at(const Vec& q);
  Vec to_chart(const Vec& y) const;    // n-dim
  Vec from_chart(const Vec& z) const;  // (n+1)-dim unit vector
};

}  // namespace trext
