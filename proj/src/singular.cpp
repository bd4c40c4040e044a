#include "trext/singular.hpp"

#include <algorithm>
#include <fstream>

namespace trext {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
bool on_lattice(std::int64_t a, std::int64_t shift, std::int64_t E) {
  std::int64_t r = (a - shift) % E;
  return r == 0;
}

// exact distance from a horizontal box to a singular piece (segment distance
// via ternary search; the map t -> dist(box, a + t ab) is convex)
double box_piece_distance(const Box& b, const SingularPiece& p) {
  auto point_dist = [&](const Vec& y) {
    double s = 0;
    for (int e = 0; e < b.dim(); ++e) {
      double c = std::clamp(y[e], b.lo[e], b.hi[e]);
      s += (y[e] - c) * (y[e] - c);
    }
    return std::sqrt(s);
  };
  if (p.dim == 0) return point_dist(p.a);
  double lo = 0, hi = 1;
  for (int it = 0; it < 200; ++it) {
    double t1 = lo + (hi - lo) / 3, t2 = hi - (hi - lo) / 3;
    if (point_dist(p.a + t1 * (p.b - p.a)) <= point_dist(p.a + t2 * (p.b - p.a)))
      hi = t2;
    else
      lo = t1;
  }
  return point_dist(p.a + 0.5 * (lo + hi) * (p.b - p.a));
}

double box_sigma_distance(const Box& b, const SingularSet& sigma) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : sigma.pieces) best = std::min(best, box_piece_distance(b, p));
  return best;
}

}  // namespace

SlabResult slab_retraction_box(const Vec& halfwidths, const Vec& x) {
  const int d = halfwidths.n;
  SlabResult out;
  out.point = x;
  double h = std::clamp(x[d], 0.0, 1.0);
  // Minkowski gauge of the box
  double gamma = 0;
  int axis = -1;
  for (int e = 0; e < d; ++e) {
    if (halfwidths[e] <= 0) throw std::invalid_argument("degenerate retraction base");
    double g = std::abs(x[e]) / halfwidths[e];
    if (g > gamma) {
      gamma = g;
      axis = e;
    }
  }
  if (gamma <= 1.0 - h / 2) {
    for (int e = 0; e < d; ++e) out.point[e] = 2 * x[e] / (2 - h);
    out.point[d] = 0;
    out.hit_bottom = true;
    return out;
  }
  for (int e = 0; e < d; ++e) out.point[e] = x[e] / gamma;
  out.point[d] = 2 - (2 - h) / gamma;
  out.hit_bottom = false;
  out.wall_axis = axis;
  return out;
}

// ---------------------------------------------------------------------------
// shared retraction step on a vertical face of the complex

namespace {

// A vertical face at level k spanning the horizontal axes in `axes` with the
// given unit anchor. Applies the slab retraction to the global point p.
// Returns the landing point; reports the wall axis/side or bottom.
struct StepResult {
  Vec p;
  bool bottom = false;
  int wall_axis = -1;
  bool wall_hi = false;
};

StepResult retraction_step(const DyadicDecomposition& D, int level, std::uint8_t axes,
                           const IVec& anchor, const Vec& p) {
  StepResult r;
  r.p = p;
  const double E = D.edge(level);
  const double base = E;  // slab bottom height 2^k
  std::array<int, 3> span{};
  int ns = 0;
  for (int e = 0; e < D.m - 1; ++e)
    if ((axes >> e) & 1) span[static_cast<std::size_t>(ns++)] = e;

  if (ns == 0) {
    // vertical edge: everything retracts to the bottom endpoint
    r.p[D.m - 1] = base;
    r.bottom = true;
    return r;
  }
  Vec local = Vec::zero(ns + 1);
  Vec centers = Vec::zero(ns);
  const double halfw = E / 2;
  for (int i = 0; i < ns; ++i) {
    int e = span[static_cast<std::size_t>(i)];
    centers[i] = D.coord(anchor[e], e) + halfw;
    local[i] = (p[e] - centers[i]) / halfw;
  }
  local[ns] = std::clamp((p[D.m - 1] - base) / E, 0.0, 1.0);
  Vec hw = Vec::zero(ns);
  for (int i = 0; i < ns; ++i) hw[i] = 1.0;
  SlabResult s = slab_retraction_box(hw, local);
  for (int i = 0; i < ns; ++i) {
    int e = span[static_cast<std::size_t>(i)];
    r.p[e] = centers[i] + halfw * s.point[i];
  }
  if (s.hit_bottom) {
    r.p[D.m - 1] = base;
    r.bottom = true;
  } else {
    r.p[D.m - 1] = base + E * s.point[ns];
    r.wall_axis = span[static_cast<std::size_t>(s.wall_axis)];
    r.wall_hi = s.point[s.wall_axis] > 0;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// supercritical construction

SupercriticalComplex supercritical_propagate(const DyadicDecomposition& D,
                                             const std::vector<CubeId>& bad, int k0) {
  SupercriticalComplex c;
  c.D = &D;
  c.k0 = k0;
  std::map<int, std::vector<CubeId>> by_level;
  for (const CubeId& q : bad) {
    if (q.level < k0) throw std::invalid_argument("bad cube below k0");
    if (c.bad.insert(q).second) {
      c.bad_per_level[q.level]++;
      by_level[q.level].push_back(q);
    }
  }
  std::vector<CubeId> prev;
  for (int k = k0; k <= D.k_max; ++k) {
    std::vector<CubeId> cur;
    for (const CubeId& q : by_level[k])
      if (c.sing.insert(q).second) cur.push_back(q);
    for (const CubeId& r : prev) {
      CubeId p = D.parent(r);
      if (c.sing.insert(p).second) cur.push_back(p);
    }
    c.sing_per_level[k] = static_cast<std::int64_t>(cur.size());
    prev = std::move(cur);
  }
  return c;
}

bool SupercriticalComplex::face_processed(const FaceId& f) const {
  auto incident = D->cubes_containing_face(f);
  if (incident.empty()) return false;
  for (const CubeId& q : incident)
    if (!is_singular(q)) return false;
  return true;
}

Vec SupercriticalComplex::psi(const Vec& x) const {
  Vec p = x;
  auto q = D->locate(p);
  int guard = 0;
  while (q && q->level >= D->k_min) {
    if (++guard > 16 * (D->levels() + 2) * D->m) throw std::runtime_error("retraction did not terminate");
    if (!is_singular(*q)) return p;
    // retract through the cube and its walls
    int level = q->level;
    IVec anchor = D->cube_lo_units(*q);
    std::uint8_t axes = static_cast<std::uint8_t>((1u << (D->m - 1)) - 1);
    int dim = D->m;
    bool descended = false;
    while (true) {
      if (dim < D->m) {
        FaceId f;
        f.level = level;
        f.dim = dim;
        f.orient = FaceOrientation::Vertical;
        f.anchor = anchor;
        f.anchor[D->m - 1] = D->edge_units(level);
        f.axes = axes;
        if (!face_processed(f)) return p;
      }
      StepResult r = retraction_step(*D, level, axes, anchor, p);
      p = r.p;
      if (r.bottom) {
        descended = true;
        break;
      }
      // move to the wall face
      if (r.wall_hi) anchor[r.wall_axis] += D->edge_units(level);
      axes = static_cast<std::uint8_t>(axes & ~(1u << r.wall_axis));
      --dim;
    }
    (void)descended;
    if (level - 1 < D->k_min) return p;
    Vec probe = p;
    probe[D->m - 1] = 0.75 * p[D->m - 1];
    q = D->locate(probe);
  }
  return p;
}

// ---------------------------------------------------------------------------
// spawning

bool in_sigma_check(const SingularSet& sigma, double kappa, const Vec& x) {
  if (sigma.empty()) return true;
  Vec xp = Vec::zero(x.n - 1);
  for (int e = 0; e < xp.n; ++e) xp[e] = x[e];
  return sigma.distance(xp) >= kappa * x[x.n - 1];
}

SpawnResult spawn_over_singular_set(const SingularSet& sigma, double kappa, int ell, int m,
                                    int k_min, int k_max, const Box& bounds, Rng rng) {
  if (sigma.dim() > m - ell - 2)
    throw std::invalid_argument(
        format("singular set of dimension %d violates the transversality budget %d", sigma.dim(),
               m - ell - 2));
  SpawnResult out;
  out.kappa = kappa;

  // pick a translate whose l-faces stay clear of Sigma x (0,inf); the face
  // projections are cells of the level lattices, so it is enough to keep
  // every Sigma point away from the axis lattice planes at all levels.
  const int d = m - 1;
  auto clearance = [&](const Vec& xi) {
    if (sigma.empty()) return std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
      double E = std::ldexp(1.0, k);
      for (const auto& piece : sigma.pieces) {
        int nsamp = piece.dim == 0 ? 1 : 33;
        for (int i = 0; i < nsamp; ++i) {
          Vec pt = piece.dim == 0
                       ? piece.a
                       : piece.a + (static_cast<double>(i) / (nsamp - 1)) * (piece.b - piece.a);
          for (int e = 0; e < d; ++e) {
            double rel = (pt[e] - xi[e]) / E;
            double fr = rel - std::floor(rel);
            best = std::min(best, std::min(fr, 1 - fr) * E);
          }
        }
      }
    }
    return best;
  };
  Vec best_xi = Vec::zero(d);
  double best_clear = clearance(best_xi);
  for (int trial = 0; trial < 64; ++trial) {
    Vec xi = Vec::zero(d);
    for (int e = 0; e < d; ++e) xi[e] = rng.uniform(0.0, std::ldexp(1.0, k_min));
    double c = clearance(xi);
    if (c > best_clear) {
      best_clear = c;
      best_xi = xi;
    }
  }
  if (!sigma.empty() && !(best_clear > 0))
    throw std::runtime_error("failed to find a transversal translate");
  out.clearance = best_clear;

  out.D = DyadicDecomposition::build(m, k_min, k_max);
  out.D.origin = best_xi;

  if (!sigma.empty()) {
    for (int k = k_min; k <= k_max; ++k) {
      // enumerate level-k cubes in bounds and keep those not inside the
      // cone-complement set: min dist(Q', Sigma) < kappa * 2^{k+1}
      const double E = out.D.edge(k);
      std::int64_t count = 0;
      // cells overlapping the bounds
      std::array<std::int64_t, 2> zlo{}, zhi{};
      for (int e = 0; e < d; ++e) {
        zlo[static_cast<std::size_t>(e)] =
            static_cast<std::int64_t>(std::floor((bounds.lo[e] - best_xi[e]) / E));
        zhi[static_cast<std::size_t>(e)] =
            static_cast<std::int64_t>(std::ceil((bounds.hi[e] - best_xi[e]) / E));
      }
      IVec z(d);
      std::function<void(int)> rec = [&](int e) {
        if (e == d) {
          CubeId q{k, z};
          if (!out.D.in_horizontal_bounds(q, bounds)) return;
          Box b = out.D.cube_box(q);
          Box horiz;
          horiz.lo = Vec::zero(d);
          horiz.hi = Vec::zero(d);
          for (int i = 0; i < d; ++i) {
            horiz.lo[i] = b.lo[i];
            horiz.hi[i] = b.hi[i];
          }
          if (box_sigma_distance(horiz, sigma) < kappa * b.hi[m - 1]) {
            out.sing_inf.insert(q);
            ++count;
          }
          return;
        }
        for (std::int64_t v = zlo[static_cast<std::size_t>(e)];
             v <= zhi[static_cast<std::size_t>(e)]; ++v) {
          z[e] = v;
          rec(e + 1);
        }
      };
      rec(0);
      out.per_level[k] = count;
      out.M = std::max(out.M, static_cast<double>(count) * std::pow(2.0, k * (m - ell - 2)));
    }
  }

  SingularSet sig = sigma;
  const int mm = m;
  out.psi = [sig, kappa, mm](const Vec& x) {
    if (sig.empty()) return x;
    Vec xp = Vec::zero(mm - 1);
    for (int e = 0; e < mm - 1; ++e) xp[e] = x[e];
    double dist = sig.distance(xp);
    if (dist >= kappa * x[mm - 1]) return x;
    Vec y = x;
    y[mm - 1] = dist / kappa;
    return y;
  };
  return out;
}

// ---------------------------------------------------------------------------
// subcritical propagation and decay

SubcriticalComplex propagate_and_decay(const DyadicDecomposition& Dinf,
                                       const SingInfinity& sing_inf,
                                       const std::vector<Box>& bad_region, int ell, int k0,
                                       ShiftPolicy policy) {
  const int m = Dinf.m;
  if (ell < 1 || ell > m) throw std::invalid_argument("skeleton dimension out of range");
  if (k0 <= Dinf.k_min || k0 > Dinf.k_max)
    throw std::invalid_argument("k0 must leave one seed level inside the range");
  for (const CubeId& q : sing_inf.cubes)
    if (q.level >= k0) throw std::invalid_argument("sing-infinity cubes must lie below k0");

  SubcriticalComplex c;
  c.D = Dinf;
  c.ell = ell;
  c.k0 = k0;
  c.bad_region = bad_region;
  c.psi_inf = sing_inf.psi;
  c.sing_below = sing_inf.cubes;

  // hypothesis: the bad region below the k0 slab stays inside the
  // sing-infinity cubes (heights under the truncated range carry no cubes)
  for (const Box& b : bad_region) {
    if (!(b.lo[m - 1] < Dinf.edge(k0))) continue;
    for (int k = Dinf.k_min; k < k0; ++k) {
      double lo_h = Dinf.edge(k), hi_h = Dinf.edge(k + 1);
      if (!(b.lo[m - 1] < hi_h && lo_h < b.hi[m - 1])) continue;
      const std::int64_t E = Dinf.edge_units(k);
      const IVec& xi = Dinf.shift(k);
      std::array<std::int64_t, 2> zlo{}, zhi{};
      for (int e = 0; e < m - 1; ++e) {
        zlo[static_cast<std::size_t>(e)] = floor_div(Dinf.to_units(b.lo[e], e) - xi[e], E);
        zhi[static_cast<std::size_t>(e)] = floor_div(Dinf.to_units(b.hi[e], e) - xi[e], E) + 1;
      }
      IVec z(m - 1);
      std::function<void(int)> rec = [&](int e) {
        if (e == m - 1) {
          CubeId q{k, z};
          Box qb = Dinf.cube_box(q);
          if (!b.meets_closed(qb)) return;
          if (!sing_inf.contains(q))
            throw std::invalid_argument("bad region outside the singular cubes below k0");
          return;
        }
        for (std::int64_t v = zlo[static_cast<std::size_t>(e)];
             v <= zhi[static_cast<std::size_t>(e)]; ++v) {
          z[e] = v;
          rec(e + 1);
        }
      };
      rec(0);
    }
  }

  for (auto& q : c.sing_below) c.n_sing[q.level]++;

  // seeds: vertical ell-faces at level k0-1 all of whose incident cubes are
  // singular at infinity
  std::vector<FaceId> T_prev;
  {
    FaceSet seen;
    for (const CubeId& q : sing_inf.cubes) {
      if (q.level != k0 - 1) continue;
      ++c.n_sing_inf_seed;
      for (const FaceId& f : Dinf.cube_faces(q, ell, FaceOrientation::Vertical)) {
        if (seen.count(f)) continue;
        bool all_sing = true;
        for (const CubeId& r : Dinf.cubes_containing_face(f))
          if (!sing_inf.contains(r)) {
            all_sing = false;
            break;
          }
        if (all_sing) {
          seen.insert(f);
          T_prev.push_back(f);
          c.T_sing.insert(f);
        }
      }
    }
  }
  c.n_T_sing[k0 - 1] = static_cast<std::int64_t>(T_prev.size());

  IVec cum(m - 1);
  auto face_meets_bad = [&](const Box& fb) {
    for (const Box& b : bad_region)
      if (b.meets_closed(fb)) return true;
    return false;
  };

  for (int k = k0; k <= c.D.k_max; ++k) {
    const std::int64_t E = c.D.edge_units(k);
    const std::int64_t half = E / 2;
    const int d = m - 1;

    // choose the shift: lexicographically smallest among the minimisers of
    // the propagated-face count
    IVec best_zeta(d);
    std::vector<FaceId> best_prop;
    bool have_best = false;
    for (int mask = 0; mask < (1 << d); ++mask) {
      IVec zeta(d);
      for (int e = 0; e < d; ++e) zeta[e] = ((mask >> e) & 1) ? half : 0;
      if (policy == ShiftPolicy::Zero && mask != 0) continue;
      IVec shift_cand(d);
      for (int e = 0; e < d; ++e) shift_cand[e] = Dinf.shift(k)[e] + cum[e] + zeta[e];
      FaceSet props;
      std::vector<FaceId> prop_list;
      for (const FaceId& tau : T_prev) {
        bool grid_ok = true;
        for (int e = 0; e < d && grid_ok; ++e) {
          if ((tau.axes >> e) & 1) continue;
          grid_ok = on_lattice(tau.anchor[e] - shift_cand[e], 0, E);
        }
        if (!grid_ok) continue;
        FaceId s;
        s.level = k;
        s.dim = ell;
        s.orient = FaceOrientation::Vertical;
        s.axes = tau.axes;
        s.anchor = IVec(m);
        for (int e = 0; e < d; ++e) {
          if ((tau.axes >> e) & 1)
            s.anchor[e] = shift_cand[e] + floor_div(tau.anchor[e] - shift_cand[e], E) * E;
          else
            s.anchor[e] = tau.anchor[e];
        }
        s.anchor[m - 1] = E;
        if (props.insert(s).second) prop_list.push_back(s);
      }
      if (!have_best || prop_list.size() < best_prop.size()) {
        have_best = true;
        best_zeta = zeta;
        best_prop = std::move(prop_list);
      }
    }
    c.zeta_units.push_back(best_zeta);
    for (int e = 0; e < d; ++e) cum[e] += best_zeta[e];
    for (int e = 0; e < d; ++e) c.D.shift(k)[e] = Dinf.shift(k)[e] + cum[e];
    c.n_T_prop[k] = static_cast<std::int64_t>(best_prop.size());

    // propagated cubes: every level-k cube containing the top of a singular
    // face of the previous generation
    {
      CubeSet seen;
      for (const FaceId& tau : T_prev) {
        // per axis: spanned -> the unique covering cell; unspanned -> both
        // cells when the anchor sits on the level-k lattice
        std::array<std::vector<std::int64_t>, 2> opts;
        for (int e = 0; e < d; ++e) {
          std::int64_t a = tau.anchor[e] - c.D.shift(k)[e];
          if ((tau.axes >> e) & 1) {
            opts[static_cast<std::size_t>(e)] = {floor_div(a, E)};
          } else if (on_lattice(a, 0, E)) {
            opts[static_cast<std::size_t>(e)] = {a / E - 1, a / E};
          } else {
            opts[static_cast<std::size_t>(e)] = {floor_div(a, E)};
          }
        }
        std::array<std::size_t, 2> idx{};
        while (true) {
          CubeId q{k, IVec(d)};
          for (int e = 0; e < d; ++e)
            q.zeta[e] = opts[static_cast<std::size_t>(e)][idx[static_cast<std::size_t>(e)]];
          if (seen.insert(q).second) {
            c.prop_cubes.insert(q);
          }
          int e = 0;
          while (e < d) {
            if (++idx[static_cast<std::size_t>(e)] < opts[static_cast<std::size_t>(e)].size())
              break;
            idx[static_cast<std::size_t>(e)] = 0;
            ++e;
          }
          if (e == d) break;
        }
      }
      std::int64_t cnt = 0;
      for (const CubeId& q : c.prop_cubes)
        if (q.level == k) ++cnt;
      c.n_prop[k] = cnt;
    }

    // bad cubes and bad faces at level k from the open bad region
    {
      const double lo_h = c.D.edge(k), hi_h = c.D.edge(k + 1);
      for (const Box& b : bad_region) {
        if (!(b.lo[m - 1] < hi_h && lo_h < b.hi[m - 1])) continue;
        std::array<std::int64_t, 2> zlo{}, zhi{};
        for (int e = 0; e < d; ++e) {
          zlo[static_cast<std::size_t>(e)] =
              floor_div(c.D.to_units(b.lo[e], e) - c.D.shift(k)[e], E) - 1;
          zhi[static_cast<std::size_t>(e)] =
              floor_div(c.D.to_units(b.hi[e], e) - c.D.shift(k)[e], E) + 1;
        }
        IVec z(d);
        std::function<void(int)> rec = [&](int e) {
          if (e == d) {
            CubeId q{k, z};
            if (b.meets_closed(c.D.cube_box(q))) c.bad_cubes.insert(q);
            return;
          }
          for (std::int64_t v = zlo[static_cast<std::size_t>(e)];
               v <= zhi[static_cast<std::size_t>(e)]; ++v) {
            z[e] = v;
            rec(e + 1);
          }
        };
        rec(0);
      }
      std::int64_t cnt = 0;
      FaceSet bad_faces;
      for (const CubeId& q : c.bad_cubes) {
        if (q.level != k) continue;
        ++cnt;
        for (const FaceId& f : c.D.cube_faces(q, ell, FaceOrientation::Vertical))
          if (!bad_faces.count(f) && face_meets_bad(c.D.face_box(f))) bad_faces.insert(f);
      }
      c.n_bad[k] = cnt;
      c.n_T_bad[k] = static_cast<std::int64_t>(bad_faces.size());
      for (const FaceId& f : bad_faces) c.T_sing.insert(f);
      for (const FaceId& f : best_prop) c.T_sing.insert(f);
      FaceSet level_sing;
      for (const FaceId& f : best_prop) level_sing.insert(f);
      for (const FaceId& f : bad_faces) level_sing.insert(f);
      c.n_T_sing[k] = static_cast<std::int64_t>(level_sing.size());
      T_prev.assign(level_sing.begin(), level_sing.end());
      std::sort(T_prev.begin(), T_prev.end(), [](const FaceId& a, const FaceId& b) {
        if (a.anchor.n != b.anchor.n) return a.anchor.n < b.anchor.n;
        if (!(a.anchor == b.anchor)) return a.anchor < b.anchor;
        return a.axes < b.axes;
      });
    }

    std::int64_t cnt = 0;
    for (const CubeId& q : c.bad_cubes)
      if (q.level == k) ++cnt;
    for (const CubeId& q : c.prop_cubes)
      if (q.level == k && !c.bad_cubes.count(q)) ++cnt;
    c.n_sing[k] = cnt;
  }

  c.sing = c.sing_below;
  for (const CubeId& q : c.bad_cubes) c.sing.insert(q);
  for (const CubeId& q : c.prop_cubes) c.sing.insert(q);
  return c;
}

bool SubcriticalComplex::vertical_face_identity(const FaceId& f) const {
  // identity iff some containing ell-face is non-singular
  const int d = D.m - 1;
  const std::int64_t E = D.edge_units(f.level);
  std::vector<int> free_axes;
  for (int e = 0; e < d; ++e)
    if (!((f.axes >> e) & 1)) free_axes.push_back(e);
  const int need = ell - f.dim;
  const int nf = static_cast<int>(free_axes.size());
  if (need == 0) return !face_is_T_sing(f);
  for (int mask = 0; mask < (1 << nf); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != need) continue;
    std::vector<int> added;
    for (int i = 0; i < nf; ++i)
      if ((mask >> i) & 1) added.push_back(free_axes[static_cast<std::size_t>(i)]);
    for (int sides = 0; sides < (1 << need); ++sides) {
      FaceId g = f;
      g.dim = ell;
      for (int i = 0; i < need; ++i) {
        int e = added[static_cast<std::size_t>(i)];
        g.axes = static_cast<std::uint8_t>(g.axes | (1u << e));
        if ((sides >> i) & 1) g.anchor[e] -= E;
      }
      if (!face_is_T_sing(g)) return true;
    }
  }
  return false;
}

bool SubcriticalComplex::top_face_identity(const FaceId& f) const {
  // identity iff some containing top ell-face has all its boundary walls
  // non-singular and does not meet the bad region
  const int d = D.m - 1;
  const std::int64_t E = D.edge_units(f.level);
  std::vector<int> free_axes;
  for (int e = 0; e < d; ++e)
    if (!((f.axes >> e) & 1)) free_axes.push_back(e);
  const int need = ell - f.dim;
  const int nf = static_cast<int>(free_axes.size());
  if (need < 0) return false;

  auto qualified = [&](const FaceId& g) {
    Box gb = D.face_box(g);
    for (const Box& b : bad_region)
      if (b.meets_closed(gb)) return false;
    // walls: the vertical ell-faces below the (ell-1)-cells of the boundary
    for (int e = 0; e < d; ++e) {
      if (!((g.axes >> e) & 1)) continue;
      for (int side = 0; side < 2; ++side) {
        FaceId w;
        w.level = g.level;
        w.dim = ell;
        w.orient = FaceOrientation::Vertical;
        w.axes = static_cast<std::uint8_t>(g.axes & ~(1u << e));
        w.anchor = g.anchor;
        if (side) w.anchor[e] += E;
        w.anchor[D.m - 1] = E;
        if (face_is_T_sing(w)) return false;
      }
    }
    if (ell - 1 >= 0 && g.dim == 0) {
      // a lone vertex: its wall is the vertical edge below (ell = 1 case is
      // covered above when g spans an axis; for safety check the edge)
    }
    return true;
  };

  if (need == 0) return qualified(f);
  for (int mask = 0; mask < (1 << nf); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != need) continue;
    std::vector<int> added;
    for (int i = 0; i < nf; ++i)
      if ((mask >> i) & 1) added.push_back(free_axes[static_cast<std::size_t>(i)]);
    for (int sides = 0; sides < (1 << need); ++sides) {
      FaceId g = f;
      g.dim = ell;
      for (int i = 0; i < need; ++i) {
        int e = added[static_cast<std::size_t>(i)];
        g.axes = static_cast<std::uint8_t>(g.axes | (1u << e));
        if ((sides >> i) & 1) g.anchor[e] -= E;
      }
      if (qualified(g)) return true;
    }
  }
  return false;
}

Vec SubcriticalComplex::psi(const Vec& x) const {
  const int m = D.m;
  Vec p = x;
  int guard = 0;
  while (true) {
    if (++guard > 64 * (D.levels() + 2) * (ell + 2))
      throw std::runtime_error("skeleton retraction did not terminate");
    double t = p[m - 1];
    if (!(t > 0)) return p;
    int k = D.level_of_height(t);
    const double tol = 1e-9;
    bool interface = std::abs(t - D.edge(k)) <= tol * D.edge(k);
    if (!interface && k > D.k_max) return p;

    if (interface) {
      // top-plane point at height 2^k: the complex face lives at level k-1
      int kk = k - 1;
      if (kk < D.k_min) return p;
      if (kk <= k0 - 2) return psi_inf ? psi_inf(p) : p;
      // minimal top face at level kk
      const std::int64_t E = D.edge_units(kk);
      FaceId rho;
      rho.level = kk;
      rho.orient = FaceOrientation::Top;
      rho.anchor = IVec(m);
      rho.axes = 0;
      int jdim = 0;
      for (int e = 0; e < m - 1; ++e) {
        double units = (p[e] - (e < m - 1 ? D.origin[e] : 0.0)) / D.unit();
        double rel = units - static_cast<double>(D.shift(kk)[e]);
        double cell = rel / static_cast<double>(E);
        double snapped = std::round(cell);
        if (std::abs(cell - snapped) <= 1e-9) {
          rho.anchor[e] = D.shift(kk)[e] + static_cast<std::int64_t>(snapped) * E;
        } else {
          rho.axes = static_cast<std::uint8_t>(rho.axes | (1u << e));
          rho.anchor[e] = D.shift(kk)[e] + static_cast<std::int64_t>(std::floor(cell)) * E;
          ++jdim;
        }
      }
      rho.dim = jdim;
      rho.anchor[m - 1] = 2 * E;
      if (jdim > ell) throw std::runtime_error("point off the skeleton");
      if (top_face_identity(rho)) return p;
      // tau-retraction of the vertical (j+1)-face below the top face
      StepResult r = retraction_step(D, kk, rho.axes, rho.anchor, p);
      p = r.p;
      continue;  // bottom -> interface at 2^kk; wall -> vertical at level kk
    }

    // interior of a slab: vertical face at level k
    if (k < D.k_min) return p;
    if (k < k0) return psi_inf ? psi_inf(p) : p;
    const std::int64_t E = D.edge_units(k);
    FaceId f;
    f.level = k;
    f.orient = FaceOrientation::Vertical;
    f.anchor = IVec(m);
    f.axes = 0;
    int jh = 0;
    for (int e = 0; e < m - 1; ++e) {
      double units = (p[e] - D.origin[e]) / D.unit();
      double rel = units - static_cast<double>(D.shift(k)[e]);
      double cell = rel / static_cast<double>(E);
      double snapped = std::round(cell);
      if (std::abs(cell - snapped) <= 1e-9) {
        f.anchor[e] = D.shift(k)[e] + static_cast<std::int64_t>(snapped) * E;
      } else {
        f.axes = static_cast<std::uint8_t>(f.axes | (1u << e));
        f.anchor[e] = D.shift(k)[e] + static_cast<std::int64_t>(std::floor(cell)) * E;
        ++jh;
      }
    }
    f.dim = jh + 1;
    f.anchor[m - 1] = E;
    if (f.dim > ell) throw std::runtime_error("point off the skeleton");
    if (vertical_face_identity(f)) return p;
    StepResult r = retraction_step(D, k, f.axes, f.anchor, p);
    p = r.p;
  }
}

// ---------------------------------------------------------------------------

NeatCone neat_cone_kappa(const BoundaryMap& u, double c_mo, double delta_star,
                         const std::vector<Vec>& bad_samples, double dilation) {
  if (!u.sigma || u.sigma->empty())
    throw std::invalid_argument("neat cone requires a singular-set descriptor");
  NeatCone nc;
  nc.margin = dilation;
  const double bound = u.sigma->deriv_bound;
  double kappa = 1.0 + c_mo * std::max(bound, 1e-9) / delta_star;
  const int d = u.d;
  for (int attempt = 0; attempt <= 8; ++attempt) {
    bool ok = true;
    for (const Vec& x : bad_samples) {
      Vec xp = Vec::zero(d);
      for (int e = 0; e < d; ++e) xp[e] = x[e];
      double dist = u.sigma->distance(xp);
      double worst = dist + dilation * std::sqrt(static_cast<double>(d));
      if (!(worst < kappa * (x[d] - dilation))) {
        ok = false;
        break;
      }
    }
    if (ok) {
      nc.kappa = kappa;
      nc.doublings = attempt;
      return nc;
    }
    kappa *= 2;
  }
  throw std::runtime_error("neat cone verification failed after 8 doublings");
}

void write_complex_csv(const SubcriticalComplex& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  const int m = c.D.m;
  out << "level";
  for (int e = 0; e < m - 1; ++e) out << ",zeta" << e;
  out << ",flag\n";
  std::vector<CubeId> rows(c.sing.begin(), c.sing.end());
  std::sort(rows.begin(), rows.end());
  for (const CubeId& q : rows) {
    out << q.level;
    for (int e = 0; e < m - 1; ++e) out << "," << q.zeta[e];
    const char* flag = c.bad_cubes.count(q) ? "BAD" : (c.prop_cubes.count(q) ? "PROP" : "SING");
    out << "," << flag << "\n";
  }
}

void write_shifts_csv(const SubcriticalComplex& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  const int m = c.D.m;
  out << "level";
  for (int e = 0; e < m - 1; ++e) out << ",zeta" << e;
  out << "\n";
  for (std::size_t i = 0; i < c.zeta_units.size(); ++i) {
    out << c.k0 + static_cast<int>(i);
    for (int e = 0; e < m - 1; ++e)
      out << "," << format("%.17g", static_cast<double>(c.zeta_units[i][e]) * c.D.unit());
    out << "\n";
  }
}

}  // namespace trext
