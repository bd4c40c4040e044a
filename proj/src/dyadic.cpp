#include "trext/dyadic.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>

namespace trext {

namespace {
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }
}  // namespace

bool DomainSpec::contains(const Vec& x) const {
  switch (kind) {
    case Kind::All:
      return true;
    case Kind::BoxDomain: {
      for (int i = 0; i < box.dim(); ++i)
        if (!(box.lo[i] < x[i] && x[i] < box.hi[i])) return false;
      return true;
    }
    case Kind::Ball:
      return norm2(x - center) < radius;
    case Kind::HalfPlane:
      return dot(normal, x) > offset;
  }
  return false;
}

bool DomainSpec::contains_ball(const Vec& x, double r) const {
  switch (kind) {
    case Kind::All:
      return true;
    case Kind::BoxDomain: {
      for (int i = 0; i < box.dim(); ++i)
        if (!(box.lo[i] < x[i] - r && x[i] + r < box.hi[i])) return false;
      return true;
    }
    case Kind::Ball:
      return norm2(x - center) + r < radius;
    case Kind::HalfPlane:
      return dot(normal, x) - r * norm2(normal) > offset;
  }
  return false;
}

DyadicDecomposition DyadicDecomposition::build(int m, int k_min, int k_max,
                                               const std::vector<Vec>& increments) {
  if (m < 2) throw std::invalid_argument("dimension must be >= 2");
  if (k_max < k_min) throw std::invalid_argument("empty level range");
  DyadicDecomposition D;
  D.m = m;
  D.k_min = k_min;
  D.k_max = k_max;
  D.origin = Vec::zero(m - 1);
  D.shift_units.assign(static_cast<std::size_t>(D.levels()), IVec(m - 1));

  IVec xi(m - 1);  // xi_{k_min - 1} = 0
  for (int k = k_min; k <= k_max; ++k) {
    Vec inc = Vec::zero(m - 1);
    std::size_t idx = static_cast<std::size_t>(k - k_min);
    if (idx < increments.size()) inc = increments[idx];
    const double step = std::ldexp(1.0, k - 1);  // required granularity 2^{k-1}
    for (int e = 0; e < m - 1; ++e) {
      double q = inc[e] / step;
      if (q != std::floor(q))
        throw std::invalid_argument(
            format("shift increment %g at level %d is not a multiple of 2^%d", inc[e], k, k - 1));
      xi[e] += static_cast<std::int64_t>(q) * (std::int64_t(1) << (k - k_min));
    }
    D.shift_units[idx] = xi;
  }
  D.validate();
  return D;
}

void DyadicDecomposition::validate() const {
  IVec prev(m - 1);  // xi_{k_min-1} = 0
  for (int k = k_min; k <= k_max; ++k) {
    const IVec& cur = shift(k);
    const std::int64_t step = std::int64_t(1) << (k - k_min);  // 2^{k-1} in units
    for (int e = 0; e < m - 1; ++e) {
      if ((cur[e] - prev[e]) % step != 0)
        throw std::invalid_argument(format("shift condition violated at level %d axis %d", k, e));
    }
    prev = cur;
  }
}

IVec DyadicDecomposition::cube_lo_units(const CubeId& q) const {
  IVec lo(m);
  const std::int64_t E = edge_units(q.level);
  const IVec& xi = shift(q.level);
  for (int e = 0; e < m - 1; ++e) lo[e] = xi[e] + E * q.zeta[e];
  lo[m - 1] = E;  // height 2^k
  return lo;
}

Box DyadicDecomposition::cube_box(const CubeId& q) const {
  IVec lo = cube_lo_units(q);
  const std::int64_t E = edge_units(q.level);
  Box b;
  b.lo = Vec::zero(m);
  b.hi = Vec::zero(m);
  for (int e = 0; e < m; ++e) {
    b.lo[e] = coord(lo[e], e);
    b.hi[e] = coord(lo[e] + E, e);
  }
  return b;
}

Vec DyadicDecomposition::cube_center(const CubeId& q) const {
  Box b = cube_box(q);
  Vec c = Vec::zero(m);
  for (int e = 0; e < m; ++e) c[e] = 0.5 * (b.lo[e] + b.hi[e]);
  return c;
}

int DyadicDecomposition::level_of_height(double t) const {
  if (t <= 0) return INT_MIN;
  int exp;
  double mant = std::frexp(t, &exp);  // t = mant * 2^exp, mant in [0.5, 1)
  (void)mant;
  return exp - 1;  // 2^k <= t < 2^{k+1}
}

std::optional<CubeId> DyadicDecomposition::locate(const Vec& x) const {
  const double t = x[m - 1];
  if (!(t >= edge(k_min)) || t >= edge(k_max + 1)) return std::nullopt;
  int k = level_of_height(t);
  k = std::min(std::max(k, k_min), k_max);
  CubeId q;
  q.level = k;
  q.zeta = IVec(m - 1);
  const double E = edge(k);
  const IVec& xi = shift(k);
  for (int e = 0; e < m - 1; ++e) {
    double rel = (x[e] - origin[e]) / unit() - static_cast<double>(xi[e]);
    q.zeta[e] = static_cast<std::int64_t>(std::floor(rel / (E / unit())));
  }
  return q;
}

CubeId DyadicDecomposition::parent(const CubeId& q) const {
  CubeId p;
  p.level = q.level + 1;
  p.zeta = IVec(m - 1);
  const std::int64_t E = edge_units(q.level), Ep = 2 * E;
  const IVec& xi = shift(q.level);
  const IVec& xip = shift(q.level + 1);
  for (int e = 0; e < m - 1; ++e) {
    std::int64_t lo = xi[e] + E * q.zeta[e];
    p.zeta[e] = floor_div(lo - xip[e], Ep);
  }
  return p;
}

std::vector<CubeId> DyadicDecomposition::children_below(const CubeId& q) const {
  std::vector<CubeId> out;
  if (q.level - 1 < k_min) return out;
  const std::int64_t E = edge_units(q.level), Ec = E / 2;
  const IVec& xi = shift(q.level);
  const IVec& xic = shift(q.level - 1);
  const int d = m - 1;
  for (int mask = 0; mask < (1 << d); ++mask) {
    CubeId c;
    c.level = q.level - 1;
    c.zeta = IVec(d);
    for (int e = 0; e < d; ++e) {
      std::int64_t lo = xi[e] + E * q.zeta[e] + ((mask >> e) & 1) * Ec;
      c.zeta[e] = (lo - xic[e]) / Ec;
    }
    out.push_back(c);
  }
  return out;
}

Box DyadicDecomposition::face_box(const FaceId& f) const {
  const std::int64_t E = edge_units(f.level);
  Box b;
  b.lo = Vec::zero(m);
  b.hi = Vec::zero(m);
  for (int e = 0; e < m - 1; ++e) {
    b.lo[e] = coord(f.anchor[e], e);
    b.hi[e] = coord(f.anchor[e] + (((f.axes >> e) & 1) ? E : 0), e);
  }
  b.lo[m - 1] = coord(f.anchor[m - 1], m - 1);
  const std::int64_t hspan = f.orient == FaceOrientation::Vertical ? E : 0;
  b.hi[m - 1] = coord(f.anchor[m - 1] + hspan, m - 1);
  return b;
}

Vec DyadicDecomposition::face_center(const FaceId& f) const {
  Box b = face_box(f);
  Vec c = Vec::zero(m);
  for (int e = 0; e < m; ++e) c[e] = 0.5 * (b.lo[e] + b.hi[e]);
  return c;
}

std::vector<FaceId> DyadicDecomposition::cube_faces(const CubeId& q, int l,
                                                    FaceOrientation o) const {
  std::vector<FaceId> out;
  const int d = m - 1;
  const std::int64_t E = edge_units(q.level);
  IVec lo = cube_lo_units(q);
  const int span = o == FaceOrientation::Top ? l : l - 1;
  if (o == FaceOrientation::Vertical && l < 1) return out;
  if (o == FaceOrientation::Top && l > d) return out;
  if (span > d || span < 0) return out;

  // enumerate axis subsets of size `span`
  for (int mask = 0; mask < (1 << d); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != span) continue;
    // corners for the unspanned axes
    std::vector<int> free_axes;
    for (int e = 0; e < d; ++e)
      if (!((mask >> e) & 1)) free_axes.push_back(e);
    const int nf = static_cast<int>(free_axes.size());
    for (int corner = 0; corner < (1 << nf); ++corner) {
      FaceId f;
      f.level = q.level;
      f.dim = l;
      f.orient = o;
      f.axes = static_cast<std::uint8_t>(mask);
      f.anchor = IVec(m);
      for (int e = 0; e < d; ++e) f.anchor[e] = lo[e];
      for (int i = 0; i < nf; ++i)
        if ((corner >> i) & 1) f.anchor[free_axes[static_cast<std::size_t>(i)]] += E;
      f.anchor[m - 1] = o == FaceOrientation::Top ? 2 * E : E;
      out.push_back(f);
    }
  }
  return out;
}

std::vector<FaceId> DyadicDecomposition::bottom_cover(const CubeId& q, int l) const {
  std::vector<FaceId> out;
  if (q.level - 1 < k_min || l > m - 1) return out;
  FaceSet seen;
  for (const CubeId& c : children_below(q)) {
    for (const FaceId& f : cube_faces(c, l, FaceOrientation::Top)) {
      if (seen.insert(f).second) out.push_back(f);
    }
  }
  return out;
}

std::vector<CubeId> DyadicDecomposition::cubes_containing_face(const FaceId& f) const {
  std::vector<CubeId> out;
  const int d = m - 1;
  auto cubes_at_level = [&](int k, const IVec& hlo, const IVec& hhi) {
    // all level-k cubes whose closed footprint contains [hlo, hhi]
    if (k < k_min || k > k_max) return;
    const std::int64_t E = edge_units(k);
    const IVec& xi = shift(k);
    std::vector<std::vector<std::int64_t>> choices(static_cast<std::size_t>(d));
    for (int e = 0; e < d; ++e) {
      std::int64_t a = hlo[e] - xi[e], b = hhi[e] - xi[e];
      // cells z with zE <= a and b <= (z+1)E
      for (std::int64_t z = ceil_div(b, E) - 1; z <= floor_div(a, E); ++z)
        choices[static_cast<std::size_t>(e)].push_back(z);
      if (choices[static_cast<std::size_t>(e)].empty()) return;
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    while (true) {
      CubeId q;
      q.level = k;
      q.zeta = IVec(d);
      for (int e = 0; e < d; ++e)
        q.zeta[e] = choices[static_cast<std::size_t>(e)][idx[static_cast<std::size_t>(e)]];
      out.push_back(q);
      int e = 0;
      while (e < d) {
        if (++idx[static_cast<std::size_t>(e)] < choices[static_cast<std::size_t>(e)].size()) break;
        idx[static_cast<std::size_t>(e)] = 0;
        ++e;
      }
      if (e == d) break;
    }
  };

  const std::int64_t E = edge_units(f.level);
  IVec hlo(d), hhi(d);
  for (int e = 0; e < d; ++e) {
    hlo[e] = f.anchor[e];
    hhi[e] = f.anchor[e] + (((f.axes >> e) & 1) ? E : 0);
  }
  if (f.orient == FaceOrientation::Vertical) {
    cubes_at_level(f.level, hlo, hhi);
  } else {
    cubes_at_level(f.level, hlo, hhi);      // cubes below the top plane
    cubes_at_level(f.level + 1, hlo, hhi);  // cubes above (their bottom plane)
  }
  return out;
}

FaceId DyadicDecomposition::top_boundary(const FaceId& f) const {
  if (f.orient != FaceOrientation::Vertical)
    throw std::invalid_argument("top boundary of a horizontal face");
  FaceId t = f;
  t.dim = f.dim - 1;
  t.orient = FaceOrientation::Top;
  t.anchor[m - 1] = 2 * edge_units(f.level);
  return t;
}

DyadicDecomposition::EnclosingBoundary DyadicDecomposition::enclosing_boundary(
    const FaceId& f) const {
  if (f.orient != FaceOrientation::Vertical)
    throw std::invalid_argument("enclosing boundary of a horizontal face");
  EnclosingBoundary eb;
  const std::int64_t E = edge_units(f.level);
  for (int e = 0; e < m - 1; ++e) {
    if (!((f.axes >> e) & 1)) continue;
    for (int side = 0; side < 2; ++side) {
      FaceId s = f;
      s.dim = f.dim - 1;
      s.axes = static_cast<std::uint8_t>(f.axes & ~(1u << e));
      if (side) s.anchor[e] += E;
      eb.sides.push_back(s);
    }
  }
  Box fb = face_box(f);
  eb.bottom = fb;
  eb.bottom.hi[m - 1] = eb.bottom.lo[m - 1];
  if (f.level - 1 >= k_min) {
    // level-(k-1) top faces of dimension dim-1 covering sigma' x {2^k}
    const std::int64_t Ec = E / 2;
    const int d = m - 1;
    std::vector<int> spanned;
    for (int e = 0; e < d; ++e)
      if ((f.axes >> e) & 1) spanned.push_back(e);
    const int ns = static_cast<int>(spanned.size());
    for (int halves = 0; halves < (1 << ns); ++halves) {
      FaceId b;
      b.level = f.level - 1;
      b.dim = f.dim - 1;
      b.orient = FaceOrientation::Top;
      b.axes = f.axes;
      b.anchor = f.anchor;
      b.anchor[m - 1] = 2 * Ec;
      for (int i = 0; i < ns; ++i)
        if ((halves >> i) & 1) b.anchor[spanned[static_cast<std::size_t>(i)]] += Ec;
      eb.bottom_faces.push_back(b);
    }
  }
  return eb;
}

bool DyadicDecomposition::in_horizontal_bounds(const CubeId& q, const Box& bounds) const {
  Box b = cube_box(q);
  const double tol = 1e-12 * std::max(1.0, norm_inf(bounds.hi - bounds.lo));
  for (int e = 0; e < m - 1; ++e)
    if (b.lo[e] < bounds.lo[e] - tol || b.hi[e] > bounds.hi[e] + tol) return false;
  return true;
}

bool cube_in_tent(const DyadicDecomposition& D, const CubeId& q, const DomainSpec& dom) {
  if (dom.kind == DomainSpec::Kind::All) return true;
  Box b = D.cube_box(q);
  const double r = b.hi[D.m - 1];  // worst height: the cube top, 2^{k+1}
  const int d = D.m - 1;
  switch (dom.kind) {
    case DomainSpec::Kind::BoxDomain: {
      // strict: closed balls must stay inside the open domain
      for (int e = 0; e < d; ++e)
        if (!(dom.box.lo[e] < b.lo[e] - r && b.hi[e] + r < dom.box.hi[e])) return false;
      return true;
    }
    case DomainSpec::Kind::Ball: {
      double s = 0;
      for (int e = 0; e < d; ++e) {
        double w = std::max(std::abs(b.lo[e] - dom.center[e]), std::abs(b.hi[e] - dom.center[e]));
        s += w * w;
      }
      return std::sqrt(s) + r < dom.radius;
    }
    case DomainSpec::Kind::HalfPlane: {
      // min of n.x' over the horizontal corners
      double mn = 0;
      for (int e = 0; e < d; ++e)
        mn += dom.normal[e] >= 0 ? dom.normal[e] * b.lo[e] : dom.normal[e] * b.hi[e];
      return mn - r * norm2(dom.normal) > dom.offset;
    }
    default:
      return true;
  }
}

std::vector<CubeId> cubes_over_domain(const DyadicDecomposition& D, const DomainSpec& dom,
                                      const Box& bounds) {
  if (bounds.dim() != D.m - 1) throw std::invalid_argument("bounding box required");
  std::vector<CubeId> out;
  const int d = D.m - 1;
  for (int k = D.k_min; k <= D.k_max; ++k) {
    const double E = D.edge(k);
    const IVec& xi = D.shift(k);
    std::array<std::int64_t, 3> zlo{}, zhi{};
    for (int e = 0; e < d; ++e) {
      double rel_lo = (bounds.lo[e] - D.origin[e]) / D.unit() - static_cast<double>(xi[e]);
      double rel_hi = (bounds.hi[e] - D.origin[e]) / D.unit() - static_cast<double>(xi[e]);
      double Eu = E / D.unit();
      zlo[static_cast<std::size_t>(e)] = static_cast<std::int64_t>(std::floor(rel_lo / Eu)) - 1;
      zhi[static_cast<std::size_t>(e)] = static_cast<std::int64_t>(std::ceil(rel_hi / Eu)) + 1;
    }
    IVec z(d);
    std::function<void(int)> rec = [&](int e) {
      if (e == d) {
        CubeId q{k, z};
        if (D.in_horizontal_bounds(q, bounds) && cube_in_tent(D, q, dom)) out.push_back(q);
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
  return out;
}

FaceSet faces(const DyadicDecomposition& D, const std::vector<CubeId>& cubes, int l,
              FaceOrientation o) {
  if (l < 0 || l > D.m) throw std::invalid_argument("face dimension out of range");
  if (o == FaceOrientation::Vertical && l == 0)
    throw std::invalid_argument("no vertical faces of dimension 0");
  if (o == FaceOrientation::Top && l == D.m)
    throw std::invalid_argument("no horizontal faces of full dimension");
  FaceSet out;
  for (const CubeId& q : cubes)
    for (const FaceId& f : D.cube_faces(q, l, o)) out.insert(f);
  return out;
}

// ---------------------------------------------------------------------------
// Dual skeleton

namespace {

void dual_pieces_rec(const DyadicDecomposition& D, int j, const FaceId& f,
                     std::vector<DualPiece>& out);

void cone_pieces(const Vec& apex, const std::vector<DualPiece>& base,
                 std::vector<DualPiece>& out) {
  for (const DualPiece& p : base) {
    DualPiece c;
    c.dim = p.dim + 1;
    c.pts[0] = apex;
    for (int i = 0; i <= p.dim; ++i) c.pts[static_cast<std::size_t>(i + 1)] = p.pts[static_cast<std::size_t>(i)];
    out.push_back(c);
  }
}

std::vector<FaceId> boundary_subfaces(const DyadicDecomposition& D, const FaceId& f) {
  std::vector<FaceId> subs;
  if (f.orient == FaceOrientation::Vertical) {
    auto eb = D.enclosing_boundary(f);
    subs = eb.sides;
    subs.push_back(D.top_boundary(f));
    for (const FaceId& b : eb.bottom_faces) subs.push_back(b);
  } else {
    const std::int64_t E = D.edge_units(f.level);
    for (int e = 0; e < D.m - 1; ++e) {
      if (!((f.axes >> e) & 1)) continue;
      for (int side = 0; side < 2; ++side) {
        FaceId s = f;
        s.dim = f.dim - 1;
        s.axes = static_cast<std::uint8_t>(f.axes & ~(1u << e));
        if (side) s.anchor[e] += E;
        subs.push_back(s);
      }
    }
  }
  return subs;
}

void dual_pieces_rec(const DyadicDecomposition& D, int j, const FaceId& f,
                     std::vector<DualPiece>& out) {
  if (f.dim == D.m - j) {
    DualPiece p;
    p.dim = 0;
    p.pts[0] = D.face_center(f);
    out.push_back(p);
    return;
  }
  std::vector<DualPiece> base;
  for (const FaceId& s : boundary_subfaces(D, f)) {
    if (s.dim >= D.m - j) dual_pieces_rec(D, j, s, base);
  }
  cone_pieces(D.face_center(f), base, out);
}

double dist_point_segment(const Vec& x, const Vec& a, const Vec& b) {
  Vec ab = b - a;
  double t = dot(x - a, ab) / std::max(dot(ab, ab), 1e-300);
  t = std::clamp(t, 0.0, 1.0);
  return norm2(x - (a + t * ab));
}

double dist_point_triangle(const Vec& x, const Vec& a, const Vec& b, const Vec& c) {
  // project onto the triangle plane, then clamp to edges if outside
  Vec u = b - a, v = c - a;
  double uu = dot(u, u), vv = dot(v, v), uv = dot(u, v);
  double det = uu * vv - uv * uv;
  if (det < 1e-300)
    return std::min(dist_point_segment(x, a, b),
                    std::min(dist_point_segment(x, a, c), dist_point_segment(x, b, c)));
  Vec w = x - a;
  double s = (dot(w, u) * vv - dot(w, v) * uv) / det;
  double t = (dot(w, v) * uu - dot(w, u) * uv) / det;
  if (s >= 0 && t >= 0 && s + t <= 1) return norm2(x - (a + s * u + t * v));
  return std::min(dist_point_segment(x, a, b),
                  std::min(dist_point_segment(x, a, c), dist_point_segment(x, b, c)));
}

}  // namespace

std::vector<DualPiece> dual_skeleton_pieces(const DyadicDecomposition& D, int j,
                                            const CubeId& q) {
  std::vector<DualPiece> out;
  if (j < 0) return out;
  if (j > D.m - 1) throw std::invalid_argument("dual skeleton dimension out of range");
  FaceId cube;
  cube.level = q.level;
  cube.dim = D.m;
  cube.orient = FaceOrientation::Vertical;
  cube.anchor = D.cube_lo_units(q);
  cube.axes = static_cast<std::uint8_t>((1u << (D.m - 1)) - 1);
  dual_pieces_rec(D, j, cube, out);
  return out;
}

double dist_to_pieces(const Vec& x, const std::vector<DualPiece>& pieces) {
  double best = std::numeric_limits<double>::infinity();
  for (const DualPiece& p : pieces) {
    double d;
    switch (p.dim) {
      case 0:
        d = norm2(x - p.pts[0]);
        break;
      case 1:
        d = dist_point_segment(x, p.pts[0], p.pts[1]);
        break;
      default:
        d = dist_point_triangle(x, p.pts[0], p.pts[1], p.pts[2]);
        break;
    }
    best = std::min(best, d);
  }
  return best;
}

double dual_skeleton_distance(const DyadicDecomposition& D, int j, const Vec& x,
                              const std::vector<CubeId>& cubes) {
  if (j < -1 || j > D.m - 1) throw std::invalid_argument("dual skeleton dimension out of range");
  if (j == -1) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (const CubeId& q : cubes)
    best = std::min(best, dist_to_pieces(x, dual_skeleton_pieces(D, j, q)));
  return best;
}

DescendingReport validate_descending(const std::function<Vec(const Vec&)>& psi,
                                     const DyadicDecomposition& D,
                                     const std::vector<Vec>& samples, double tol) {
  DescendingReport rep;
  for (const Vec& x : samples) {
    auto q = D.locate(x);
    if (!q) continue;
    Box b = D.cube_box(*q);
    Vec y = psi(x);
    bool ok = y[D.m - 1] >= -tol && y[D.m - 1] <= b.hi[D.m - 1] + tol;
    for (int e = 0; ok && e < D.m - 1; ++e)
      ok = y[e] >= b.lo[e] - tol && y[e] <= b.hi[e] + tol;
    if (!ok) {
      rep.ok = false;
      rep.witness_x = x;
      rep.witness_psi = y;
      rep.reason = format("image leaves the column below cube level=%d", q->level);
      return rep;
    }
  }
  return rep;
}

}  // namespace trext
