#pragma once

#include <map>
#include <unordered_map>

#include "trext/boundary.hpp"
#include "trext/dyadic.hpp"

namespace trext {

// Radial bump exp(-1/(1-|y|^2)) on the unit ball, normalized numerically
// per boundary dimension. Even by construction, which makes the extension
// reproduce affine data exactly.
class Mollifier {
 public:
  explicit Mollifier(int d);

  int d() const { return d_; }
  double operator()(const Vec& y) const {
    double r2 = dot(y, y);
    if (r2 >= 1.0) return 0.0;
    return norm_const_ * std::exp(-1.0 / (1.0 - r2));
  }
  double normalization() const { return norm_const_; }
  double derivative_bound() const { return deriv_bound_; }  // sup |grad phi|
  double gradient_l1() const { return grad_l1_; }           // int |grad phi|

 private:
  int d_;
  double norm_const_ = 1;
  double deriv_bound_ = 0;
  double grad_l1_ = 0;
};

// V(x) = int u(x' - x_m y) phi(y) dy at quadrature spacing min(h, x_m/8),
// with discrete renormalization so constants are reproduced exactly.
Vec extension_eval(const BoundaryMap& u, const Mollifier& phi, const Vec& x);

// central differences with step x_m/16; rows indexed by the m domain axes
struct GradientSample {
  std::array<Vec, 3> rows;  // dV/dx_e as ambient vectors
  int m = 0;
  double frobenius() const {
    double s = 0;
    for (int e = 0; e < m; ++e) s += dot(rows[static_cast<std::size_t>(e)], rows[static_cast<std::size_t>(e)]);
    return std::sqrt(s);
  }
};
GradientSample extension_gradient(const BoundaryMap& u, const Mollifier& phi, const Vec& x);

// truncated mean oscillation MO_delta(u)(x) over the ball pair B_{x_m}(x')^2
double mean_oscillation(const BoundaryMap& u, const Vec& x, double delta, int nodes_per_radius = 6);

// ---------------------------------------------------------------------------
// Good/bad classification of the cubes over the data domain.

enum class CubeFlag : std::uint8_t { Good, Bad };

struct Classification {
  const DyadicDecomposition* D = nullptr;
  double delta_N = 0.5;
  double delta_star = 0.125;
  int samples_per_axis = 3;
  std::vector<CubeId> cubes;  // all classified cubes (the complex)
  std::unordered_map<CubeId, CubeFlag, CubeIdHash> flags;
  std::unordered_map<CubeId, std::pair<Vec, double>, CubeIdHash> witness;  // bad cubes
  std::map<int, std::int64_t> bad_per_level;
  std::vector<Vec> bad_points;  // all bad sample points

  bool is_bad(const CubeId& q) const {
    auto it = flags.find(q);
    return it != flags.end() && it->second == CubeFlag::Bad;
  }
  std::int64_t bad_count() const {
    std::int64_t c = 0;
    for (auto& [k, v] : bad_per_level) c += v;
    return c;
  }
  int lowest_bad_level() const;  // k_max+1 when no bad cube
};

Classification classify(const DyadicDecomposition& D, const BoundaryMap& u, const Mollifier& phi,
                        double delta_N, int samples_per_axis, const DomainSpec& dom,
                        const Box& bounds);

// weighted size sum_k 2^{k(m-p)} #bad_k and the exact integral of x_m^{-p}
// over the bad cubes
struct BadSize {
  double weighted_count = 0;
  double hardy_integral = 0;
};
BadSize bad_size(const Classification& c, double p);

// closed form of int_{cube level k} x_m^{-p}: edge^{m-1} * int_{2^k}^{2^{k+1}} t^-p dt
double cube_hardy_weight(int m, int k, double p);

void write_classification_csv(const Classification& c, const std::string& path);

}  // namespace trext
