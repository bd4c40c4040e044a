#include "trext/fuzz.hpp"

#include <algorithm>

namespace trext {

namespace {

DyadicDecomposition random_decomposition(Rng& rng, int m, int k_min, int k_max) {
  std::vector<Vec> inc(static_cast<std::size_t>(k_max - k_min + 1), Vec::zero(m - 1));
  for (int k = k_min; k <= k_max; ++k) {
    for (int e = 0; e < m - 1; ++e)
      inc[static_cast<std::size_t>(k - k_min)][e] =
          static_cast<double>(rng.uniform_int(5) - 2) * std::ldexp(1.0, k - 1);
  }
  return DyadicDecomposition::build(m, k_min, k_max, inc);
}

}  // namespace

SuperFuzzInstance make_super_instance(Rng& rng, int m, int max_cubes, int levels) {
  SuperFuzzInstance inst;
  const int k0 = static_cast<int>(rng.uniform_int(5)) - 3;
  inst.D = random_decomposition(rng, m, k0, k0 + levels - 1);
  inst.k0 = k0;
  const std::int64_t n = 1 + rng.uniform_int(max_cubes);
  CubeSet seen;
  for (std::int64_t i = 0; i < n; ++i) {
    CubeId q;
    q.level = k0 + static_cast<int>(rng.uniform_int(levels));
    q.zeta = IVec(m - 1);
    for (int e = 0; e < m - 1; ++e) q.zeta[e] = rng.uniform_int(17) - 8;
    if (seen.insert(q).second) inst.bad.push_back(q);
  }
  inst.complex = supercritical_propagate(inst.D, inst.bad, k0);

  // merge detection: two chains collide when the parents of the previous
  // generation plus the level's bad cubes are not pairwise distinct
  CubeSet prev;
  for (int k = k0; k <= inst.D.k_max; ++k) {
    CubeSet cur;
    std::int64_t pushed = 0;
    for (const CubeId& q : inst.bad)
      if (q.level == k) {
        ++pushed;
        if (!cur.insert(q).second) inst.merged = true;
      }
    for (const CubeId& r : prev) {
      ++pushed;
      if (!cur.insert(inst.D.parent(r)).second) inst.merged = true;
    }
    (void)pushed;
    prev = std::move(cur);
  }
  return inst;
}

bool check_super_counting(const SuperFuzzInstance& inst) {
  std::int64_t bad_prefix = 0;
  std::int64_t sing_total = 0, bad_total = 0;
  for (auto& [k, v] : inst.complex.bad_per_level) bad_total += v;
  for (int k = inst.k0; k <= inst.D.k_max; ++k) {
    auto itb = inst.complex.bad_per_level.find(k);
    if (itb != inst.complex.bad_per_level.end()) bad_prefix += itb->second;
    auto its = inst.complex.sing_per_level.find(k);
    std::int64_t sk = its == inst.complex.sing_per_level.end() ? 0 : its->second;
    sing_total += sk;
    if (sk > bad_prefix) return false;
  }
  return sing_total >= bad_total;  // sanity: singular cubes contain the bad ones
}

bool check_super_series(const SuperFuzzInstance& inst, double p) {
  const int m = inst.D.m;
  double lhs = 0, rhs = 0;
  for (auto& [k, v] : inst.complex.sing_per_level)
    lhs += std::pow(2.0, k * (m - p)) * static_cast<double>(v);
  for (auto& [k, v] : inst.complex.bad_per_level)
    rhs += std::pow(2.0, k * (m - p)) * static_cast<double>(v);
  rhs /= 1.0 - std::pow(2.0, -(p - m));
  return lhs <= rhs * (1 + 1e-12);
}

SubFuzzInstance make_sub_instance(Rng& rng, int m, int ell, int levels) {
  SubFuzzInstance inst;
  inst.ell = ell;
  const int k_min = static_cast<int>(rng.uniform_int(5)) - 4;
  const int k_max = k_min + levels - 1;
  const int k0 = k_min + 1 + static_cast<int>(rng.uniform_int(3));
  inst.k0 = k0;
  const int d = m - 1;

  // keep the horizontal extent proportional to the seed scale so cube
  // enumeration at fine levels stays cheap
  const double W = 8 * std::ldexp(1.0, k0);
  inst.window = W;
  Box window;
  window.lo = Vec::zero(d);
  window.hi = Vec::zero(d);
  for (int e = 0; e < d; ++e) {
    window.lo[e] = -W;
    window.hi[e] = W;
  }

  inst.cone_based = (m - ell - 2 >= 0) && rng.u01() < 0.5;
  if (inst.cone_based) {
    // spawning instance over a random point set
    SingularSet sigma;
    int npts = 1 + static_cast<int>(rng.uniform_int(2));
    for (int i = 0; i < npts; ++i) {
      SingularPiece piece;
      piece.dim = 0;
      piece.a = Vec::zero(d);
      for (int e = 0; e < d; ++e)
        piece.a[e] = rng.uniform(window.lo[e] / 4, window.hi[e] / 4);
      sigma.pieces.push_back(piece);
    }
    inst.sigma = sigma;
    inst.kappa = rng.uniform(1.5, 4.0);
    SpawnResult sp = spawn_over_singular_set(sigma, inst.kappa, ell, m, k_min, k_max, window,
                                             rng.fork("spawn"));
    inst.Dinf = sp.D;
    for (const CubeId& q : sp.sing_inf)
      if (q.level < k0) inst.sing_inf.cubes.insert(q);
    inst.sing_inf.psi = sp.psi;

    // bad boxes strictly inside the cone over Sigma
    int nboxes = 1 + static_cast<int>(rng.uniform_int(6));
    for (int b = 0; b < nboxes; ++b) {
      const auto& piece = sigma.pieces[static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(sigma.pieces.size())))];
      double t = std::ldexp(1.0, k_min) * std::pow(2.0, rng.uniform(0.2, levels - 0.2));
      double rad = 0.4 * inst.kappa * t;
      Vec c = Vec::zero(m);
      for (int e = 0; e < d; ++e) c[e] = piece.a[e] + rng.uniform(-rad, rad) / 2;
      c[d] = t;
      double half = 0.05 * t;
      // shrink until the box stays inside the open cone over Sigma
      bool fits = false;
      for (int it = 0; it < 30 && !fits; ++it) {
        Vec cp = Vec::zero(d);
        for (int e = 0; e < d; ++e) cp[e] = c[e];
        double dist = sigma.distance(cp);
        fits = dist + half * std::sqrt(static_cast<double>(d)) < inst.kappa * (t - half);
        if (!fits) half /= 2;
      }
      if (!fits) continue;
      Box bx;
      bx.lo = Vec::zero(m);
      bx.hi = Vec::zero(m);
      for (int e = 0; e < m; ++e) {
        bx.lo[e] = c[e] - half;
        bx.hi[e] = c[e] + half;
      }
      inst.bad_boxes.push_back(bx);
    }
  } else {
    // clamp instance: every cube of the levels [j0, k0-1] inside the window
    // is singular at infinity and the map clamps heights to 2^{j0}
    inst.Dinf = random_decomposition(rng, m, k_min, k_max);
    const int j0 = std::max(k_min, k0 - 1 - static_cast<int>(rng.uniform_int(2)));
    auto window_cubes = cubes_over_domain(inst.Dinf, DomainSpec::all(), window);
    for (const CubeId& q : window_cubes)
      if (q.level >= j0 && q.level < k0) inst.sing_inf.cubes.insert(q);
    const double clamp_h = std::ldexp(1.0, j0);
    const int mm = m;
    inst.sing_inf.psi = [clamp_h, mm](const Vec& x) {
      Vec y = x;
      y[mm - 1] = std::min(y[mm - 1], clamp_h);
      return y;
    };
    int nboxes = 1 + static_cast<int>(rng.uniform_int(6));
    for (int b = 0; b < nboxes; ++b) {
      double t = clamp_h * std::pow(2.0, rng.uniform(0.35, k_max - j0 - 0.2));
      Vec c = Vec::zero(m);
      for (int e = 0; e < d; ++e) c[e] = rng.uniform(-W / 2, W / 2);
      c[d] = t;
      double half = std::min(0.2 * t, 0.45 * (t - clamp_h));
      Box bx;
      bx.lo = Vec::zero(m);
      bx.hi = Vec::zero(m);
      for (int e = 0; e < m; ++e) {
        bx.lo[e] = c[e] - half;
        bx.hi[e] = c[e] + half;
      }
      inst.bad_boxes.push_back(bx);
    }
  }

  inst.complex = propagate_and_decay(inst.Dinf, inst.sing_inf, inst.bad_boxes, ell, k0,
                                     ShiftPolicy::Averaged);
  return inst;
}

namespace {
std::int64_t binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}
}  // namespace

bool check_sub_counting(const SubFuzzInstance& inst) {
  const auto& c = inst.complex;
  const int m = c.D.m, ell = c.ell, k0 = c.k0;
  const std::int64_t B = binom(m - 1, ell - 1);
  const int shift = m - ell;
  for (int k = k0; k <= c.D.k_max; ++k) {
    auto get = [](const std::map<int, std::int64_t>& mp, int key) {
      auto it = mp.find(key);
      return it == mp.end() ? std::int64_t{0} : it->second;
    };
    // multiply the bound through by 2^{(k-k0)(m-l)}
    std::int64_t lhs = get(c.n_sing, k) << static_cast<unsigned>((k - k0) * shift);
    std::int64_t rhs = c.n_sing_inf_seed;
    for (int i = k0; i <= k; ++i)
      rhs += get(c.n_bad, i) << static_cast<unsigned>((i - k0 + 1) * shift);
    rhs *= B;
    if (lhs > rhs) return false;
  }
  return true;
}

bool check_sub_face_decay(const SubFuzzInstance& inst) {
  const auto& c = inst.complex;
  const int shift = c.D.m - c.ell;
  for (int k = c.k0; k <= c.D.k_max; ++k) {
    auto itp = c.n_T_prop.find(k);
    auto its = c.n_T_sing.find(k - 1);
    std::int64_t propk = itp == c.n_T_prop.end() ? 0 : itp->second;
    std::int64_t singp = its == c.n_T_sing.end() ? 0 : its->second;
    if ((propk << static_cast<unsigned>(shift)) > singp) return false;
  }
  return true;
}

Vec random_point_on_face(const DyadicDecomposition& D, const FaceId& f, Rng& rng) {
  Box b = D.face_box(f);
  Vec x = Vec::zero(D.m);
  for (int e = 0; e < D.m; ++e)
    x[e] = b.lo[e] == b.hi[e] ? b.lo[e] : rng.uniform(b.lo[e], b.hi[e]);
  return x;
}

PsiCheck check_super_psi(const SuperFuzzInstance& inst, Rng& rng, int n_samples) {
  PsiCheck out;
  const auto& D = inst.D;
  const int m = D.m;
  std::vector<Vec> samples;
  for (int i = 0; i < n_samples; ++i) {
    Vec x = Vec::zero(m);
    for (int e = 0; e < m - 1; ++e)
      x[e] = rng.uniform(-10 * D.edge(D.k_max), 10 * D.edge(D.k_max));
    x[m - 1] = rng.uniform(D.edge(D.k_min), D.edge(D.k_max + 1) * 0.999);
    samples.push_back(x);
  }
  auto psi = [&](const Vec& x) { return inst.complex.psi(x); };
  out.descending = validate_descending(psi, D, samples, 1e-9).ok;

  // identity on the faces of non-singular cubes
  for (int i = 0; i < n_samples / 4; ++i) {
    CubeId q;
    q.level = D.k_min + static_cast<int>(rng.uniform_int(D.levels()));
    q.zeta = IVec(m - 1);
    for (int e = 0; e < m - 1; ++e) q.zeta[e] = rng.uniform_int(21) - 10;
    if (inst.complex.is_singular(q)) continue;
    int l = 1 + static_cast<int>(rng.uniform_int(m));
    auto fs = D.cube_faces(q, l, FaceOrientation::Vertical);
    const FaceId& f = fs[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(fs.size())))];
    Vec x = random_point_on_face(D, f, rng);
    Vec y = inst.complex.psi(x);
    if (norm2(y - x) > 1e-9 * std::max(1.0, norm_inf(x))) out.identity_on_regular = false;
  }

  // the image avoids the open bad cubes
  for (const Vec& x : samples) {
    Vec y = inst.complex.psi(x);
    for (const CubeId& q : inst.bad) {
      Box b = D.cube_box(q);
      bool inside = true;
      for (int e = 0; e < m; ++e)
        if (!(y[e] > b.lo[e] + 1e-12 && y[e] < b.hi[e] - 1e-12)) inside = false;
      if (inside) out.avoids_bad = false;
    }
  }
  return out;
}

PsiCheck check_sub_psi(const SubFuzzInstance& inst, Rng& rng, int n_samples) {
  PsiCheck out;
  const auto& c = inst.complex;
  const auto& D = c.D;
  const int m = D.m;

  // samples on the ell-skeleton: random faces of random cubes
  std::vector<Vec> samples;
  auto random_cube = [&](int lo_level) {
    CubeId q;
    q.level = lo_level + static_cast<int>(rng.uniform_int(D.k_max - lo_level + 1));
    q.zeta = IVec(m - 1);
    for (int e = 0; e < m - 1; ++e) q.zeta[e] = rng.uniform_int(17) - 8;
    return q;
  };
  for (int i = 0; i < n_samples; ++i) {
    CubeId q = random_cube(D.k_min);
    bool vertical = rng.u01() < 0.6;
    int l = vertical ? 1 + static_cast<int>(rng.uniform_int(c.ell))
                     : static_cast<int>(rng.uniform_int(c.ell + 1));
    auto fs = D.cube_faces(q, l, vertical ? FaceOrientation::Vertical : FaceOrientation::Top);
    if (fs.empty()) continue;
    const FaceId& f = fs[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(fs.size())))];
    samples.push_back(random_point_on_face(D, f, rng));
  }
  auto psi = [&](const Vec& x) { return c.psi(x); };
  out.descending = validate_descending(psi, D, samples, 1e-9).ok;

  for (const Vec& x : samples) {
    Vec y = c.psi(x);
    for (const Box& b : inst.bad_boxes) {
      bool inside = true;
      for (int e = 0; e < m; ++e)
        if (!(y[e] > b.lo[e] + 1e-12 && y[e] < b.hi[e] - 1e-12)) inside = false;
      if (inside) out.avoids_bad = false;
    }
  }

  // identity on faces of non-singular cubes (window-limited for the clamp
  // variant, whose map is only id inside the enumerated window)
  for (int i = 0; i < n_samples / 4; ++i) {
    CubeId q = random_cube(D.k_min);
    if (c.is_singular(q)) continue;
    if (!inst.cone_based) {
      Box b = D.cube_box(q);
      bool inside_window = true;
      for (int e = 0; e < m - 1; ++e)
        if (std::max(std::abs(b.lo[e]), std::abs(b.hi[e])) > 2.5 * D.edge(D.k_max))
          inside_window = false;
      if (!inside_window) continue;
    }
    bool vertical = rng.u01() < 0.6;
    int l = vertical ? 1 + static_cast<int>(rng.uniform_int(c.ell))
                     : static_cast<int>(rng.uniform_int(c.ell + 1));
    auto fs = D.cube_faces(q, l, vertical ? FaceOrientation::Vertical : FaceOrientation::Top);
    if (fs.empty()) continue;
    const FaceId& f = fs[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(fs.size())))];
    Vec x = random_point_on_face(D, f, rng);
    Vec y = c.psi(x);
    if (norm2(y - x) > 1e-9 * std::max(1.0, norm_inf(x))) out.identity_on_regular = false;
  }
  return out;
}

}  // namespace trext
