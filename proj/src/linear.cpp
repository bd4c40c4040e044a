#include "trext/linear.hpp"

#include <algorithm>
#include <fstream>

namespace trext {

Mollifier::Mollifier(int d) : d_(d) {
  if (d < 1 || d > 2) throw std::invalid_argument("mollifier dimension out of range");
  // normalize on a fine lattice of the unit ball
  const int n = d == 1 ? 20001 : 1201;
  const double s = 2.0 / n;
  double sum = 0, gsum = 0;
  double maxg = 0;
  auto raw = [](double r2) { return r2 >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - r2)); };
  if (d == 1) {
    for (int i = 0; i < n; ++i) {
      double y = -1.0 + (i + 0.5) * s;
      double r2 = y * y;
      sum += raw(r2) * s;
      if (r2 < 1.0) {
        double g = std::abs(2 * y / ((1 - r2) * (1 - r2)) * raw(r2));
        maxg = std::max(maxg, g);
        gsum += g * s;
      }
    }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double y0 = -1.0 + (i + 0.5) * s, y1 = -1.0 + (j + 0.5) * s;
        double r2 = y0 * y0 + y1 * y1;
        sum += raw(r2) * s * s;
        if (r2 < 1.0) {
          double g = 2 * std::sqrt(r2) / ((1 - r2) * (1 - r2)) * raw(r2);
          maxg = std::max(maxg, g);
          gsum += g * s * s;
        }
      }
  }
  norm_const_ = 1.0 / sum;
  deriv_bound_ = maxg * norm_const_;
  grad_l1_ = gsum * norm_const_;
}

namespace {

void check_tent(const BoundaryMap& u, const Vec& x) {
  const int d = u.d;
  const double t = x[d];
  if (!(t > 0)) throw TentError("nonpositive height");
  for (int e = 0; e < d; ++e)
    if (!(u.domain.lo[e] < x[e] - t && x[e] + t < u.domain.hi[e]))
      throw TentError(format("ball of radius %.6g exits the data domain", t));
}

}  // namespace

Vec extension_eval(const BoundaryMap& u, const Mollifier& phi, const Vec& x) {
  check_tent(u, x);
  const int d = u.d;
  const double t = x[d];
  const double s = std::min(u.h_min(), t / 8);
  const auto range = static_cast<std::int64_t>(std::floor(t / s));
  Vec acc = Vec::zero(u.target.nu());
  double wsum = 0;

  if (d == 1) {
    for (std::int64_t z = -range; z <= range; ++z) {
      Vec y{static_cast<double>(z) * s / t};
      double w = phi(y);
      if (w == 0) continue;
      acc += w * u.eval(Vec{x[0] - static_cast<double>(z) * s});
      wsum += w;
    }
  } else {
    for (std::int64_t z0 = -range; z0 <= range; ++z0)
      for (std::int64_t z1 = -range; z1 <= range; ++z1) {
        Vec y{static_cast<double>(z0) * s / t, static_cast<double>(z1) * s / t};
        double w = phi(y);
        if (w == 0) continue;
        acc += w * u.eval(Vec{x[0] - static_cast<double>(z0) * s,
                              x[1] - static_cast<double>(z1) * s});
        wsum += w;
      }
  }
  return (1.0 / wsum) * acc;
}

GradientSample extension_gradient(const BoundaryMap& u, const Mollifier& phi, const Vec& x) {
  const int m = u.d + 1;
  const double step = x[u.d] / 16;
  GradientSample g;
  g.m = m;
  for (int e = 0; e < m; ++e) {
    Vec xp = x, xm = x;
    xp[e] += step;
    xm[e] -= step;
    g.rows[static_cast<std::size_t>(e)] =
        (1.0 / (2 * step)) * (extension_eval(u, phi, xp) - extension_eval(u, phi, xm));
  }
  return g;
}

double mean_oscillation(const BoundaryMap& u, const Vec& x, double delta, int nodes_per_radius) {
  check_tent(u, x);
  const int d = u.d;
  const double t = x[d];
  const double s = t / nodes_per_radius;
  std::vector<Vec> vals;
  if (d == 1) {
    for (int z = -nodes_per_radius; z <= nodes_per_radius; ++z) {
      double y = x[0] + z * s;
      if (std::abs(z * s) <= t) vals.push_back(u.eval(Vec{y}));
    }
  } else {
    for (int z0 = -nodes_per_radius; z0 <= nodes_per_radius; ++z0)
      for (int z1 = -nodes_per_radius; z1 <= nodes_per_radius; ++z1) {
        double r = std::hypot(z0 * s, z1 * s);
        if (r <= t) vals.push_back(u.eval(Vec{x[0] + z0 * s, x[1] + z1 * s}));
      }
  }
  const std::size_t N = vals.size();
  double acc = reduce_blocks(N, 32, [&](std::size_t lo, std::size_t hi) {
    double a = 0;
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = 0; j < N; ++j)
        a += std::max(u.target.geodesic(vals[i], vals[j]) - delta, 0.0);
    return a;
  });
  return acc / (static_cast<double>(N) * static_cast<double>(N));
}

int Classification::lowest_bad_level() const {
  if (bad_per_level.empty()) return D->k_max + 1;
  for (auto& [k, v] : bad_per_level)
    if (v > 0) return k;
  return D->k_max + 1;
}

Classification classify(const DyadicDecomposition& D, const BoundaryMap& u, const Mollifier& phi,
                        double delta_N, int samples_per_axis, const DomainSpec& dom,
                        const Box& bounds) {
  if (samples_per_axis < 2) throw std::invalid_argument("need at least 2 samples per axis");
  Classification c;
  c.D = &D;
  c.delta_N = delta_N;
  c.samples_per_axis = samples_per_axis;
  c.cubes = cubes_over_domain(D, dom, bounds);
  std::sort(c.cubes.begin(), c.cubes.end());

  const int m = D.m;
  for (const CubeId& q : c.cubes) {
    Box b = D.cube_box(q);
    bool bad = false;
    Vec wx;
    double wd = 0;
    std::array<int, 3> idx{};
    const int spp = samples_per_axis;
    std::int64_t total = 1;
    for (int e = 0; e < m; ++e) total *= spp;
    for (std::int64_t lin = 0; lin < total; ++lin) {
      std::int64_t rem = lin;
      Vec x = Vec::zero(m);
      for (int e = 0; e < m; ++e) {
        idx[static_cast<std::size_t>(e)] = static_cast<int>(rem % spp);
        rem /= spp;
        x[e] = b.lo[e] + (idx[static_cast<std::size_t>(e)] + 0.5) / spp * (b.hi[e] - b.lo[e]);
      }
      Vec V = extension_eval(u, phi, x);
      double dist = u.target.dist_to_manifold(V);
      if (dist > delta_N) {
        bad = true;
        c.bad_points.push_back(x);
        if (dist > wd) {
          wd = dist;
          wx = x;
        }
      }
    }
    c.flags[q] = bad ? CubeFlag::Bad : CubeFlag::Good;
    if (bad) {
      c.witness[q] = {wx, wd};
      c.bad_per_level[q.level]++;
    }
  }
  return c;
}

double cube_hardy_weight(int m, int k, double p) {
  const double edge = std::ldexp(1.0, k);
  const double horiz = std::pow(edge, m - 1);
  if (p == 1.0) return horiz * std::log(2.0);
  double lo = std::pow(edge, 1 - p), hi = std::pow(2 * edge, 1 - p);
  return horiz * (lo - hi) / (p - 1);
}

BadSize bad_size(const Classification& c, double p) {
  BadSize out;
  const int m = c.D->m;
  for (auto& [k, count] : c.bad_per_level) {
    out.weighted_count += std::pow(2.0, k * (m - p)) * static_cast<double>(count);
    out.hardy_integral += static_cast<double>(count) * cube_hardy_weight(m, k, p);
  }
  return out;
}

void write_classification_csv(const Classification& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  const int m = c.D->m;
  out << "level";
  for (int e = 0; e < m - 1; ++e) out << ",zeta" << e;
  out << ",flag";
  for (int e = 0; e < m; ++e) out << ",witness_x" << e;
  out << ",witness_dist\n";
  for (const CubeId& q : c.cubes) {
    out << q.level;
    for (int e = 0; e < m - 1; ++e) out << "," << q.zeta[e];
    bool bad = c.is_bad(q);
    out << "," << (bad ? "BAD" : "GOOD");
    if (bad) {
      auto& [wx, wd] = c.witness.at(q);
      for (int e = 0; e < m; ++e) out << "," << format("%.17g", wx[e]);
      out << "," << format("%.17g", wd);
    } else {
      for (int e = 0; e <= m; ++e) out << ",";
    }
    out << "\n";
  }
}

}  // namespace trext
