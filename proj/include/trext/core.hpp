#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace trext {

// Points live in at most 4 ambient dimensions (S^3 in R^4); half-space
// points use at most 3. Fixed capacity keeps the hot quadrature loops
// allocation-free.
constexpr int kMaxDim = 4;

struct Vec {
  std::array<double, kMaxDim> c{};
  int n = 0;

  Vec() = default;
  explicit Vec(int dim) : n(dim) {}
  Vec(std::initializer_list<double> xs) {
    n = static_cast<int>(xs.size());
    int i = 0;
    for (double x : xs) c[i++] = x;
  }
  static Vec zero(int dim) { return Vec(dim); }

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) c[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < a.n; ++i) s += a.c[i] * b.c[i];
  return s;
}
inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }
inline double norm_inf(const Vec& a) {
  double s = 0;
  for (int i = 0; i < a.n; ++i) s = std::max(s, std::abs(a.c[i]));
  return s;
}
inline Vec normalized(const Vec& a) {
  double r = norm2(a);
  Vec out = a;
  if (r > 0) out *= 1.0 / r;
  return out;
}

// Integer lattice coordinates (unit = 2^(k_min-1)); up to m <= 3 axes.
struct IVec {
  std::array<std::int64_t, 3> c{};
  int n = 0;

  IVec() = default;
  explicit IVec(int dim) : n(dim) {}
  std::int64_t& operator[](int i) { return c[i]; }
  std::int64_t operator[](int i) const { return c[i]; }
  bool operator==(const IVec& o) const {
    if (n != o.n) return false;
    for (int i = 0; i < n; ++i)
      if (c[i] != o.c[i]) return false;
    return true;
  }
  bool operator<(const IVec& o) const {
    for (int i = 0; i < n; ++i) {
      if (c[i] != o.c[i]) return c[i] < o.c[i];
    }
    return false;
  }
};

struct Box {
  Vec lo, hi;
  int dim() const { return lo.n; }
  bool contains(const Vec& x, double tol = 0.0) const {
    for (int i = 0; i < lo.n; ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
  }
  // Open-box intersection test against a closed (possibly degenerate) box.
  bool meets_closed(const Box& f) const {
    for (int i = 0; i < lo.n; ++i)
      if (!(lo[i] < f.hi[i] && f.lo[i] < hi[i])) return false;
    return true;
  }
  double volume() const {
    double v = 1;
    for (int i = 0; i < lo.n; ++i) v *= hi[i] - lo[i];
    return v;
  }
};

// ---------------------------------------------------------------------------
// Errors

struct TentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ProjectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DualSkeletonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG: xoshiro256++ seeded through splitmix64. Hand-rolled
// distributions so frozen test values do not depend on the standard library.

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  std::uint64_t next() {
    auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * u01(); }
  std::int64_t uniform_int(std::int64_t n) {  // in [0, n)
    return static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(n));
  }
  double normal() {
    double u1 = std::max(u01(), 1e-300), u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  // Independent substream labelled by a string; stable across runs.
  Rng fork(const std::string& label) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : label) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    return Rng(h ^ state_[0] ^ (state_[2] << 1));
  }

 private:
  std::array<std::uint64_t, 4> state_{};
};

// ---------------------------------------------------------------------------
// Deterministic block reduction. Work is split into fixed-size blocks whose
// partial sums are combined in block order, so the result is independent of
// the number of worker threads (TREXT_THREADS).

int worker_threads();

double reduce_blocks(std::size_t count, std::size_t block,
                     const std::function<double(std::size_t, std::size_t)>& fn);

// printf-style helper
std::string format(const char* fmt, ...);

}  // namespace trext
