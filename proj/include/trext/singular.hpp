#pragma once

#include <map>

#include "trext/boundary.hpp"
#include "trext/dyadic.hpp"
#include "trext/linear.hpp"

namespace trext {

// ---------------------------------------------------------------------------
// Slab retraction onto the enclosing boundary of a cylinder Omega' x [0,1]
// (Minkowski-gauge form). Omega' is an axis-aligned box centred at 0 given
// by its half-widths; x carries the horizontal coordinates first and the
// height last. The result lies on (Omega' x {0}) u (bdry Omega' x [0,1]),
// and the map restricted to that set is the identity.

struct SlabResult {
  Vec point;
  bool hit_bottom = false;  // landed on Omega' x {0}
  int wall_axis = -1;       // otherwise: which axis' wall
};
SlabResult slab_retraction_box(const Vec& halfwidths, const Vec& x);

// ---------------------------------------------------------------------------
// Supercritical construction: singular cubes are the bad cubes plus every
// cube adjacent to a singular cube at the previous scale; the descending map
// retracts singular cubes wall-by-wall onto lower generations.

struct SupercriticalComplex {
  const DyadicDecomposition* D = nullptr;
  int k0 = 0;
  CubeSet bad, sing;
  std::map<int, std::int64_t> bad_per_level, sing_per_level;

  bool is_singular(const CubeId& q) const { return sing.count(q) > 0; }
  // all cubes incident to the vertical face are singular
  bool face_processed(const FaceId& f) const;
  Vec psi(const Vec& x) const;
};

SupercriticalComplex supercritical_propagate(const DyadicDecomposition& D,
                                             const std::vector<CubeId>& bad, int k0);

// ---------------------------------------------------------------------------
// Spawning over a boundary singular set: a translated decomposition whose
// l-faces avoid Sigma x (0,inf), the cubes not inside the neat cone
// complement, and the explicit descending retraction.

struct SpawnResult {
  DyadicDecomposition D;
  CubeSet sing_inf;                      // per-level cubes not inside the cone set
  std::map<int, std::int64_t> per_level;
  double M = 0;                          // measured constant of the count bound
  double kappa = 0;
  double clearance = 0;                  // achieved face-to-Sigma distance
  std::function<Vec(const Vec&)> psi;    // Psi_{Sigma,kappa}
};

SpawnResult spawn_over_singular_set(const SingularSet& sigma, double kappa, int ell, int m,
                                    int k_min, int k_max, const Box& bounds, Rng rng);

// x in the cone-complement set iff dist(x', Sigma) >= kappa x_m
bool in_sigma_check(const SingularSet& sigma, double kappa, const Vec& x);

// ---------------------------------------------------------------------------
// Subcritical propagation and decay with averaged shifts.

struct SingInfinity {
  CubeSet cubes;                       // explicit cubes below k0
  std::function<Vec(const Vec&)> psi;  // descending, identity off the cubes
  bool contains(const CubeId& q) const { return cubes.count(q) > 0; }
};

enum class ShiftPolicy { Averaged, Zero };

struct SubcriticalComplex {
  DyadicDecomposition D;  // the re-shifted decomposition Q^{k0}
  int ell = 1, k0 = 0;
  CubeSet sing_below, bad_cubes, prop_cubes, sing;
  std::map<int, std::int64_t> n_bad, n_prop, n_sing;
  std::map<int, std::int64_t> n_T_sing, n_T_prop, n_T_bad;
  std::int64_t n_sing_inf_seed = 0;  // # sing-infinity cubes at level k0-1
  std::vector<IVec> zeta_units;      // chosen shifts for levels k0..k_max
  FaceSet T_sing;                    // singular vertical ell-faces, levels >= k0-1
  std::vector<Box> bad_region;
  std::function<Vec(const Vec&)> psi_inf;

  bool is_singular(const CubeId& q) const { return sing.count(q) > 0; }
  bool face_is_T_sing(const FaceId& f) const { return T_sing.count(f) > 0; }
  // identity test for a vertical j-face (j <= ell) at level >= k0
  bool vertical_face_identity(const FaceId& f) const;
  bool top_face_identity(const FaceId& f) const;
  Vec psi(const Vec& x) const;  // defined on the ell-skeleton of D
};

SubcriticalComplex propagate_and_decay(const DyadicDecomposition& Dinf,
                                       const SingInfinity& sing_inf,
                                       const std::vector<Box>& bad_region, int ell, int k0,
                                       ShiftPolicy policy);

// ---------------------------------------------------------------------------
// Neat cone: kappa with no bad sample inside the cone-complement set,
// starting from the recorded R^1 bound and the calibrated mean-oscillation
// constant, verified and doubled on failure (at most 8 times).

struct NeatCone {
  double kappa = 0;
  int doublings = 0;
  double margin = 0;  // dilation half-width accounted for in the check
};
NeatCone neat_cone_kappa(const BoundaryMap& u, double c_mo, double delta_star,
                         const std::vector<Vec>& bad_samples, double dilation);

void write_complex_csv(const SubcriticalComplex& c, const std::string& path);
void write_shifts_csv(const SubcriticalComplex& c, const std::string& path);

}  // namespace trext
