#pragma once

#include <optional>
#include <string>

#include "trext/core.hpp"
#include "trext/targets.hpp"

namespace trext {

// Affine pieces of the singular set Sigma (points and segments in R^{m-1}).
struct SingularPiece {
  int dim = 0;  // 0 point, 1 segment
  Vec a, b;
  double distance(const Vec& x) const;
};

struct SingularSet {
  std::vector<SingularPiece> pieces;
  double deriv_bound = 0;  // recorded sup dist(.,Sigma)|Du|
  int dim() const {
    int d = -1;
    for (const auto& p : pieces) d = std::max(d, p.dim);
    return d;
  }
  double distance(const Vec& x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) best = std::min(best, p.distance(x));
    return best;
  }
  bool empty() const { return pieces.empty(); }
};

// Boundary data u: box in R^{m-1} -> N, sampled at cell centres of a
// regular grid. Fixture generators attach a closed form which quadratures
// use directly; file-loaded maps fall back to nearest-sample lookup.
class BoundaryMap {
 public:
  int d = 1;  // boundary dimension m-1
  TargetManifold target = TargetManifold::circle();
  Box domain;
  std::array<int, 2> n{};  // samples per axis
  std::vector<double> samples;  // row-major, nu per node
  std::function<Vec(const Vec&)> analytic;  // optional
  std::optional<SingularSet> sigma;

  double h(int axis) const { return (domain.hi[axis] - domain.lo[axis]) / n[static_cast<std::size_t>(axis)]; }
  double h_min() const {
    double v = h(0);
    for (int e = 1; e < d; ++e) v = std::min(v, h(e));
    return v;
  }
  std::size_t node_count() const {
    std::size_t c = 1;
    for (int e = 0; e < d; ++e) c *= static_cast<std::size_t>(n[static_cast<std::size_t>(e)]);
    return c;
  }
  Vec node_point(std::size_t idx) const;
  Vec node_value(std::size_t idx) const;
  void set_node_value(std::size_t idx, const Vec& v);

  // evaluation at an arbitrary point of the domain box
  Vec eval(const Vec& x) const;

  // resample the analytic form onto the grid (projected to the target)
  void fill_from_analytic();
};

// --- fixture generators ----------------------------------------------------

// circle winding map S^1 -> S^1 (q turns) or its embedding into the equator
// of S^2
std::function<Vec(const Vec&)> winding_map(const TargetManifold& M, int q);

// u(x', x'') = f(x'/|x'|) with x' the first lbar+1 coordinates.
// For m = 2 this degenerates to a two-value step map f: S^0 -> N.
BoundaryMap vortex_map(const TargetManifold& M, const std::function<Vec(const Vec&)>& f,
                       int lbar, int m, const Box& domain, int n_per_axis);

BoundaryMap constant_map(const TargetManifold& M, const Vec& value, int m, const Box& domain,
                         int n_per_axis);

// smooth S^1-valued field from a fixed random Fourier phase
BoundaryMap smooth_circle_map(std::uint64_t seed, int m, const Box& domain, int n_per_axis,
                              double amplitude = 1.0, TargetManifold M = TargetManifold::circle());

// smooth S^2-valued field (projected trigonometric perturbation of a pole)
BoundaryMap smooth_sphere_map(std::uint64_t seed, int m, const Box& domain, int n_per_axis,
                              double amplitude = 0.8);

// spatial rescaling u_lambda(x) = u(x/lambda) with matched grid
BoundaryMap rescale(const BoundaryMap& u, double lambda);

// --- Gagliardo seminorm -----------------------------------------------------

struct GagliardoEstimate {
  double p = 0, s = 0, delta = 0;
  double value = 0;            // p-th power of the seminorm (the double sum)
  double truncated_value = 0;  // integrand (d(u(y),u(z)) - delta)_+
  std::optional<double> cutoff;
  double exclusion_radius = 0;
  std::array<int, 2> grid{};
};

GagliardoEstimate gagliardo_seminorm(const BoundaryMap& u, double p, double s, double delta,
                                     std::optional<double> cutoff = std::nullopt);

// --- R^1_l class ------------------------------------------------------------

struct R1Report {
  double bound = 0;       // max over admitted samples of dist(x,Sigma)|Du|
  double sup_grad = 0;    // plain sup |Du| when Sigma is empty
  std::size_t excluded = 0;  // samples within 2h of Sigma
};

R1Report verify_r1_class(const BoundaryMap& u);

// --- grid file format --------------------------------------------------------
// text:   header "m nu nx[0..m-2] x_lo[...] x_hi[...]" then one node per line
// binary: 16-byte magic then the same header fields and little-endian doubles

void write_grid_text(const BoundaryMap& u, const std::string& path);
BoundaryMap read_grid_text(const std::string& path, const TargetManifold& M);
void write_grid_binary(const BoundaryMap& u, const std::string& path);
BoundaryMap read_grid_binary(const std::string& path, const TargetManifold& M);

}  // namespace trext
