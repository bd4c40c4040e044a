#pragma once

#include "trext/singular.hpp"

namespace trext {

// Seeded random instances for the exact combinatorial property suites.

struct SuperFuzzInstance {
  DyadicDecomposition D;
  int k0 = 0;
  std::vector<CubeId> bad;
  SupercriticalComplex complex;
  bool merged = false;  // two propagation chains collided or met a bad cube
};

SuperFuzzInstance make_super_instance(Rng& rng, int m, int max_cubes, int levels);

struct SubFuzzInstance {
  DyadicDecomposition Dinf;
  SingInfinity sing_inf;
  std::vector<Box> bad_boxes;
  int ell = 1, k0 = 0;
  double window = 0;  // half-width of the horizontal region the instance uses
  SubcriticalComplex complex;
  // spawning data when the instance is cone-based
  bool cone_based = false;
  SingularSet sigma;
  double kappa = 0;
};

SubFuzzInstance make_sub_instance(Rng& rng, int m, int ell, int levels);

// exact integer checks -------------------------------------------------------

// Supercritical counting: #sing_k <= sum_{i<=k} #bad_i for every level.
bool check_super_counting(const SuperFuzzInstance& inst);

// Geometric series closure for p > m:
// sum 2^{k(m-p)} #sing_k <= (1 - 2^{-(p-m)})^{-1} sum 2^{k(m-p)} #bad_k.
bool check_super_series(const SuperFuzzInstance& inst, double p);

// Subcritical counting with the binomial factor, multiplied through by
// 2^{(k-k0)(m-l)} so the comparison is integer-exact.
bool check_sub_counting(const SubFuzzInstance& inst);

// Chosen-shift decay: 2^{m-l} #T_prop_k <= #T_sing_{k-1} at every level.
bool check_sub_face_decay(const SubFuzzInstance& inst);

// sampled descending / identity / bad-avoidance checks -----------------------

struct PsiCheck {
  bool descending = true;
  bool identity_on_regular = true;
  bool avoids_bad = true;
};

PsiCheck check_super_psi(const SuperFuzzInstance& inst, Rng& rng, int n_samples);
PsiCheck check_sub_psi(const SubFuzzInstance& inst, Rng& rng, int n_samples);

// random point on a face of the cube, used by the skeleton samplers
Vec random_point_on_face(const DyadicDecomposition& D, const FaceId& f, Rng& rng);

}  // namespace trext
