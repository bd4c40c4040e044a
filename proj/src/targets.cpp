#include "trext/targets.hpp"

namespace trext {

Vec slerp(const TargetManifold& M, const Vec& a, const Vec& b, double t) {
  double ang = M.geodesic(a, b);
  if (ang < 1e-14) return a;
  if (ang > M_PI - 1e-9) {
    // antipodal: route through a deterministic midpoint orthogonal to a
    int axis = 0;
    double best = std::abs(a[0]);
    for (int i = 1; i < a.n; ++i)
      if (std::abs(a[i]) < best) {
        best = std::abs(a[i]);
        axis = i;
      }
    Vec e = Vec::zero(a.n);
    e[axis] = 1.0;
    Vec mid = normalized(e - dot(e, a) * a);
    if (t <= 0.5) return slerp(M, a, mid, 2 * t);
    return slerp(M, mid, b, 2 * t - 1);
  }
  double s = std::sin(ang);
  Vec out = (std::sin((1 - t) * ang) / s) * a + (std::sin(t * ang) / s) * b;
  return normalized(out);
}

StereoChart StereoChart::at(const Vec& q) {
  StereoChart ch;
  ch.q = normalized(q);
  ch.n = q.n - 1;
  // Gram-Schmidt the coordinate axes against q
  int filled = 0;
  for (int i = 0; i < q.n && filled < ch.n; ++i) {
    Vec e = Vec::zero(q.n);
    e[i] = 1.0;
    Vec v = e - dot(e, ch.q) * ch.q;
    for (int k = 0; k < filled; ++k) v -= dot(v, ch.frame[static_cast<std::size_t>(k)]) * ch.frame[static_cast<std::size_t>(k)];
    double r = norm2(v);
    if (r > 1e-8) ch.frame[static_cast<std::size_t>(filled++)] = (1.0 / r) * v;
  }
  if (filled != ch.n) throw std::runtime_error("failed to build a frame for the chart");
  return ch;
}

Vec StereoChart::to_chart(const Vec& y) const {
  double d = 1.0 - dot(y, q);
  if (d < 1e-12) throw std::runtime_error("chart pole hit by a boundary value");
  Vec z = Vec::zero(n);
  for (int i = 0; i < n; ++i) z[i] = dot(y, frame[static_cast<std::size_t>(i)]) / d;
  return z;
}

Vec StereoChart::from_chart(const Vec& z) const {
  double r2 = dot(z, z);
  Vec y = ((r2 - 1.0) / (r2 + 1.0)) * q;
  for (int i = 0; i < n; ++i) y += (2.0 * z[i] / (r2 + 1.0)) * frame[static_cast<std::size_t>(i)];
  return y;
}

}  // namespace trext
