#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "trext/core.hpp"

namespace trext {

// ---------------------------------------------------------------------------
// Shifted Whitney decomposition of the upper half-space R^m_+, truncated to
// levels [k_min, k_max]. Level-k cubes are
//     (xi_k + 2^k zeta + [0,2^k]^{m-1}) x [2^k, 2^{k+1}],   zeta in Z^{m-1},
// with xi_k - xi_{k-1} in 2^{k-1} Z^{m-1} and xi_{k_min - 1} = 0.
//
// Shifts and all cube/face coordinates are kept as integer multiples of the
// base unit 2^(k_min - 1), so that tiling, adjacency and face identity are
// exact. An optional real-valued origin translates the whole decomposition
// rigidly (all levels at once); it never enters the combinatorics.

struct CubeId {
  int level = 0;
  IVec zeta;  // m-1 lattice coordinates
  bool operator==(const CubeId& o) const { return level == o.level && zeta == o.zeta; }
  bool operator<(const CubeId& o) const {
    if (level != o.level) return level < o.level;
    return zeta < o.zeta;
  }
};

enum class FaceOrientation : std::uint8_t { Top, Vertical };

// A face of the cubical complex. `anchor` is the lower corner in integer
// units (m coordinates, the last one vertical); `axes` is the bitmask of
// horizontal axes the face spans. Vertical faces additionally span the full
// slab height [2^k, 2^{k+1}]; top faces sit at height 2^{k+1}.
struct FaceId {
  int level = 0;
  int dim = 0;
  FaceOrientation orient = FaceOrientation::Top;
  IVec anchor;        // m integer-unit coordinates
  std::uint8_t axes = 0;  // spanned horizontal axes

  bool operator==(const FaceId& o) const {
    return level == o.level && dim == o.dim && orient == o.orient && axes == o.axes &&
           anchor == o.anchor;
  }
};

struct FaceIdHash {
  std::size_t operator()(const FaceId& f) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(f.level + 64);
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    mix(static_cast<std::uint64_t>(f.dim) | (static_cast<std::uint64_t>(f.axes) << 8) |
        (static_cast<std::uint64_t>(f.orient) << 16));
    for (int i = 0; i < f.anchor.n; ++i) mix(static_cast<std::uint64_t>(f.anchor[i]));
    return static_cast<std::size_t>(h);
  }
};

struct CubeIdHash {
  std::size_t operator()(const CubeId& q) const {
    std::uint64_t h = static_cast<std::uint64_t>(q.level + 64);
    for (int i = 0; i < q.zeta.n; ++i)
      h = h * 0x100000001b3ULL ^ static_cast<std::uint64_t>(q.zeta[i] + (1LL << 40));
    return static_cast<std::size_t>(h);
  }
};

using CubeSet = std::unordered_set<CubeId, CubeIdHash>;
using FaceSet = std::unordered_set<FaceId, FaceIdHash>;

// Domain for tents: full boundary space, an open box, an open ball or an
// open half-plane {n.x > c}.
struct DomainSpec {
  enum class Kind { All, BoxDomain, Ball, HalfPlane } kind = Kind::All;
  Box box;      // BoxDomain
  Vec center;   // Ball
  double radius = 0;
  Vec normal;   // HalfPlane
  double offset = 0;

  static DomainSpec all() { return {}; }
  static DomainSpec box_domain(const Box& b) {
    DomainSpec d;
    d.kind = Kind::BoxDomain;
    d.box = b;
    return d;
  }
  static DomainSpec ball(const Vec& c, double r) {
    DomainSpec d;
    d.kind = Kind::Ball;
    d.center = c;
    d.radius = r;
    return d;
  }
  static DomainSpec half_plane(const Vec& n, double c) {
    DomainSpec d;
    d.kind = Kind::HalfPlane;
    d.normal = n;
    d.offset = c;
    return d;
  }
  bool contains(const Vec& x) const;
  // closure(B_r(x)) subset of the domain, exact per kind
  bool contains_ball(const Vec& x, double r) const;
};

class DyadicDecomposition {
 public:
  int m = 2;
  int k_min = 0, k_max = 0;
  std::vector<IVec> shift_units;  // xi_k for k in [k_min, k_max], in units
  Vec origin;                     // common real offset of all levels (m-1 dims)

  static DyadicDecomposition build(int m, int k_min, int k_max,
                                   const std::vector<Vec>& increments = {});

  int levels() const { return k_max - k_min + 1; }
  double unit() const { return std::ldexp(1.0, k_min - 1); }
  std::int64_t edge_units(int k) const { return std::int64_t(1) << (k - k_min + 1); }
  double edge(int k) const { return std::ldexp(1.0, k); }
  const IVec& shift(int k) const { return shift_units[static_cast<std::size_t>(k - k_min)]; }
  IVec& shift(int k) { return shift_units[static_cast<std::size_t>(k - k_min)]; }

  // Exactness invariant of Def-2.1-style refinement: xi_k - xi_{k-1} must be
  // a multiple of 2^(k-1), i.e. of edge_units(k-1) in units.
  void validate() const;

  double coord(std::int64_t u, int axis) const {
    double x = static_cast<double>(u) * unit();
    return axis < m - 1 ? x + origin[axis] : x;
  }
  std::int64_t to_units(double x, int axis) const {
    double v = axis < m - 1 ? x - origin[axis] : x;
    return static_cast<std::int64_t>(std::llround(v / unit()));
  }

  IVec cube_lo_units(const CubeId& q) const;  // m coords
  Box cube_box(const CubeId& q) const;
  Vec cube_center(const CubeId& q) const;

  // Half-open location: level from 2^k <= x_m < 2^{k+1}, cells half-open in
  // each horizontal axis (lexicographic tie-breaking = floor semantics).
  // Returns nullopt below 2^k_min or at/above 2^(k_max+1).
  std::optional<CubeId> locate(const Vec& x) const;
  int level_of_height(double t) const;  // -infinity semantics clamped to int min

  CubeId parent(const CubeId& q) const;  // unique adjacent cube one level up
  std::vector<CubeId> children_below(const CubeId& q) const;  // 2^{m-1} cubes under q

  Box face_box(const FaceId& f) const;
  Vec face_center(const FaceId& f) const;

  // All dim-l faces of one cube, per orientation.
  std::vector<FaceId> cube_faces(const CubeId& q, int l, FaceOrientation o) const;
  // Top faces of the level-(k-1) lattice covering the bottom of q.
  std::vector<FaceId> bottom_cover(const CubeId& q, int l) const;

  // Cubes of the decomposition with closure inside the given cube's geometric
  // face... (helpers for incidence)
  std::vector<CubeId> cubes_containing_face(const FaceId& f) const;

  FaceId top_boundary(const FaceId& vertical) const;        // d_T sigma
  struct EnclosingBoundary {
    std::vector<FaceId> sides;  // vertical (dim-1)-faces, same level
    Box bottom;                 // sigma' x {2^k}
    std::vector<FaceId> bottom_faces;  // level-(k-1) top faces covering it
  };
  EnclosingBoundary enclosing_boundary(const FaceId& vertical) const;

  bool in_horizontal_bounds(const CubeId& q, const Box& bounds) const;
};

// Q <= tent(domain): exact membership test per domain kind.
bool cube_in_tent(const DyadicDecomposition& D, const CubeId& q, const DomainSpec& dom);

// All cubes of D contained in the tent over `dom`, restricted to the
// horizontal bounding box `bounds` and the level range of D.
std::vector<CubeId> cubes_over_domain(const DyadicDecomposition& D, const DomainSpec& dom,
                                      const Box& bounds);

// Deduplicated dim-l faces of a cube collection.
FaceSet faces(const DyadicDecomposition& D, const std::vector<CubeId>& cubes, int l,
              FaceOrientation o);

// ---------------------------------------------------------------------------
// Dual skeleton L^j. Within each cube the pieces are points, segments and
// triangles produced by coning face centers over the pieces of the boundary
// faces (recursively, with the bottom of a cube covered by the finer
// level-(k-1) top cells).

struct DualPiece {
  int dim = 0;             // 0,1,2
  std::array<Vec, 3> pts;  // dim+1 vertices
};

std::vector<DualPiece> dual_skeleton_pieces(const DyadicDecomposition& D, int j,
                                            const CubeId& q);
double dist_to_pieces(const Vec& x, const std::vector<DualPiece>& pieces);
double dual_skeleton_distance(const DyadicDecomposition& D, int j, const Vec& x,
                              const std::vector<CubeId>& cubes);

// ---------------------------------------------------------------------------
// Descending-map contract (image of every cube stays in its column below the
// top face).

struct DescendingReport {
  bool ok = true;
  Vec witness_x, witness_psi;
  std::string reason;
};

DescendingReport validate_descending(const std::function<Vec(const Vec&)>& psi,
                                     const DyadicDecomposition& D,
                                     const std::vector<Vec>& samples, double tol);

}  // namespace trext
