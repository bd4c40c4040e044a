#include "trext/boundary.hpp"

#include <cstring>
#include <fstream>

namespace trext {

double SingularPiece::distance(const Vec& x) const {
  if (dim == 0) return norm2(x - a);
  Vec ab = b - a;
  double t = dot(x - a, ab) / std::max(dot(ab, ab), 1e-300);
  t = std::clamp(t, 0.0, 1.0);
  return norm2(x - (a + t * ab));
}

Vec BoundaryMap::node_point(std::size_t idx) const {
  Vec x = Vec::zero(d);
  for (int e = 0; e < d; ++e) {
    std::size_t ne = static_cast<std::size_t>(n[static_cast<std::size_t>(e)]);
    std::size_t ie = idx % ne;
    idx /= ne;
    x[e] = domain.lo[e] + (static_cast<double>(ie) + 0.5) * h(e);
  }
  return x;
}

Vec BoundaryMap::node_value(std::size_t idx) const {
  Vec v = Vec::zero(target.nu());
  for (int c = 0; c < target.nu(); ++c)
    v[c] = samples[idx * static_cast<std::size_t>(target.nu()) + static_cast<std::size_t>(c)];
  return v;
}

void BoundaryMap::set_node_value(std::size_t idx, const Vec& v) {
  for (int c = 0; c < target.nu(); ++c)
    samples[idx * static_cast<std::size_t>(target.nu()) + static_cast<std::size_t>(c)] = v[c];
}

Vec BoundaryMap::eval(const Vec& x) const {
  if (analytic) return analytic(x);
  std::size_t idx = 0, stride = 1;
  for (int e = 0; e < d; ++e) {
    std::size_t ne = static_cast<std::size_t>(n[static_cast<std::size_t>(e)]);
    auto ie = static_cast<std::int64_t>(std::floor((x[e] - domain.lo[e]) / h(e)));
    ie = std::clamp<std::int64_t>(ie, 0, static_cast<std::int64_t>(ne) - 1);
    idx += static_cast<std::size_t>(ie) * stride;
    stride *= ne;
  }
  return node_value(idx);
}

void BoundaryMap::fill_from_analytic() {
  samples.assign(node_count() * static_cast<std::size_t>(target.nu()), 0.0);
  for (std::size_t i = 0; i < node_count(); ++i) {
    Vec v = analytic(node_point(i));
    set_node_value(i, normalized(v));
  }
}

std::function<Vec(const Vec&)> winding_map(const TargetManifold& M, int q) {
  const int nu = M.nu();
  return [q, nu](const Vec& w) {
    double th = std::atan2(w.n > 1 ? w[1] : 0.0, w[0]);
    Vec out = Vec::zero(nu);
    out[0] = std::cos(q * th);
    out[1] = std::sin(q * th);
    return out;
  };
}

BoundaryMap vortex_map(const TargetManifold& M, const std::function<Vec(const Vec&)>& f,
                       int lbar, int m, const Box& domain, int n_per_axis) {
  const int d = m - 1;
  if (lbar + 1 > d || lbar < 0)
    throw std::invalid_argument("vortex split inconsistent with the dimension");
  BoundaryMap u;
  u.d = d;
  u.target = M;
  u.domain = domain;
  for (int e = 0; e < d; ++e) u.n[static_cast<std::size_t>(e)] = n_per_axis;
  const int nprime = lbar + 1;
  u.analytic = [f, nprime](const Vec& x) {
    Vec xp = Vec::zero(nprime);
    for (int e = 0; e < nprime; ++e) xp[e] = x[e];
    double r = norm2(xp);
    if (r < 1e-300) r = 1e-300;
    xp *= 1.0 / r;
    return f(xp);
  };
  u.fill_from_analytic();

  SingularSet sigma;
  SingularPiece piece;
  if (nprime == d) {
    piece.dim = 0;
    piece.a = Vec::zero(d);
  } else {
    // {x' = 0} spans the remaining axes; at desk scale that is one segment
    piece.dim = d - nprime;
    piece.a = Vec::zero(d);
    piece.b = Vec::zero(d);
    piece.a[d - 1] = domain.lo[d - 1];
    piece.b[d - 1] = domain.hi[d - 1];
  }
  sigma.pieces.push_back(piece);
  u.sigma = sigma;
  u.sigma->deriv_bound = verify_r1_class(u).bound;
  return u;
}

BoundaryMap constant_map(const TargetManifold& M, const Vec& value, int m, const Box& domain,
                         int n_per_axis) {
  BoundaryMap u;
  u.d = m - 1;
  u.target = M;
  u.domain = domain;
  for (int e = 0; e < u.d; ++e) u.n[static_cast<std::size_t>(e)] = n_per_axis;
  Vec v = normalized(value);
  u.analytic = [v](const Vec&) { return v; };
  u.fill_from_analytic();
  return u;
}

BoundaryMap smooth_circle_map(std::uint64_t seed, int m, const Box& domain, int n_per_axis,
                              double amplitude, TargetManifold M) {
  BoundaryMap u;
  u.d = m - 1;
  u.target = M;
  u.domain = domain;
  for (int e = 0; e < u.d; ++e) u.n[static_cast<std::size_t>(e)] = n_per_axis;
  Rng rng(seed);
  struct Mode {
    Vec k;
    double a, phi;
  };
  std::vector<Mode> modes;
  for (int j = 0; j < 4; ++j) {
    Mode md;
    md.k = Vec::zero(u.d);
    for (int e = 0; e < u.d; ++e) md.k[e] = rng.uniform(-2.0, 2.0);
    md.a = amplitude * rng.uniform(0.3, 1.0) / (j + 1);
    md.phi = rng.uniform(0, 2 * M_PI);
    modes.push_back(md);
  }
  const int nu = M.nu();
  u.analytic = [modes, nu](const Vec& x) {
    double th = 0;
    for (const auto& md : modes) th += md.a * std::cos(dot(md.k, x) + md.phi);
    Vec out = Vec::zero(nu);
    out[0] = std::cos(th);
    out[1] = std::sin(th);
    return out;
  };
  u.fill_from_analytic();
  return u;
}

BoundaryMap smooth_sphere_map(std::uint64_t seed, int m, const Box& domain, int n_per_axis,
                              double amplitude) {
  BoundaryMap u;
  u.d = m - 1;
  u.target = TargetManifold::sphere(2);
  u.domain = domain;
  for (int e = 0; e < u.d; ++e) u.n[static_cast<std::size_t>(e)] = n_per_axis;
  Rng rng(seed);
  struct Mode {
    Vec k;
    double a, phi;
  };
  std::array<std::vector<Mode>, 2> angle_modes;
  for (auto& modes : angle_modes)
    for (int j = 0; j < 3; ++j) {
      Mode md;
      md.k = Vec::zero(u.d);
      for (int e = 0; e < u.d; ++e) md.k[e] = rng.uniform(-2.0, 2.0);
      md.a = amplitude * rng.uniform(0.3, 1.0) / (j + 1);
      md.phi = rng.uniform(0, 2 * M_PI);
      modes.push_back(md);
    }
  u.analytic = [angle_modes](const Vec& x) {
    double a = 0, b = 0;
    for (const auto& md : angle_modes[0]) a += md.a * std::cos(dot(md.k, x) + md.phi);
    for (const auto& md : angle_modes[1]) b += md.a * std::cos(dot(md.k, x) + md.phi);
    return Vec{std::sin(a) * std::cos(b), std::sin(a) * std::sin(b), std::cos(a)};
  };
  u.fill_from_analytic();
  return u;
}

BoundaryMap rescale(const BoundaryMap& u, double lambda) {
  BoundaryMap v = u;
  for (int e = 0; e < u.d; ++e) {
    v.domain.lo[e] = lambda * u.domain.lo[e];
    v.domain.hi[e] = lambda * u.domain.hi[e];
  }
  if (u.analytic) {
    auto base = u.analytic;
    v.analytic = [base, lambda](const Vec& x) { return base((1.0 / lambda) * x); };
  }
  if (u.sigma) {
    for (auto& p : v.sigma->pieces) {
      p.a *= lambda;
      p.b *= lambda;
    }
  }
  v.fill_from_analytic();
  return v;
}

GagliardoEstimate gagliardo_seminorm(const BoundaryMap& u, double p, double s, double delta,
                                     std::optional<double> cutoff) {
  if (!(s > 0 && s < 1)) throw std::invalid_argument("fractional order must be in (0,1)");
  for (int e = 0; e < u.d; ++e)
    if (u.n[static_cast<std::size_t>(e)] < 4)
      throw std::invalid_argument("grid resolution below 4 points per axis");
  GagliardoEstimate est;
  est.p = p;
  est.s = s;
  est.delta = delta;
  est.cutoff = cutoff;
  est.exclusion_radius = u.h_min() / 2;
  est.grid = u.n;

  const std::size_t N = u.node_count();
  const double expo = u.d + s * p;
  double w = 1.0;
  for (int e = 0; e < u.d; ++e) w *= u.h(e);
  w *= w;

  std::vector<Vec> pts(N), vals(N);
  for (std::size_t i = 0; i < N; ++i) {
    pts[i] = u.node_point(i);
    vals[i] = u.node_value(i);
  }
  const TargetManifold& M = u.target;

  double value = reduce_blocks(N, 64, [&](std::size_t lo, std::size_t hi) {
    double acc = 0;
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        if (i == j) continue;
        double r = norm2(pts[i] - pts[j]);
        if (r < est.exclusion_radius) continue;
        if (cutoff && r > *cutoff) continue;
        double dd = M.geodesic(vals[i], vals[j]);
        acc += std::pow(dd, p) / std::pow(r, expo);
      }
    return acc;
  });
  double trunc = reduce_blocks(N, 64, [&](std::size_t lo, std::size_t hi) {
    double acc = 0;
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        if (i == j) continue;
        double r = norm2(pts[i] - pts[j]);
        if (r < est.exclusion_radius) continue;
        if (cutoff && r > *cutoff) continue;
        double dd = std::max(M.geodesic(vals[i], vals[j]) - delta, 0.0);
        acc += dd / std::pow(r, expo);
      }
    return acc;
  });
  est.value = value * w;
  est.truncated_value = trunc * w;
  return est;
}

R1Report verify_r1_class(const BoundaryMap& u) {
  R1Report rep;
  double hmax = 0;
  for (int e = 0; e < u.d; ++e) hmax = std::max(hmax, u.h(e));
  const std::size_t N = u.node_count();
  for (std::size_t i = 0; i < N; ++i) {
    Vec x = u.node_point(i);
    if (u.sigma && !u.sigma->empty() && u.sigma->distance(x) < 2 * hmax) {
      ++rep.excluded;
      continue;
    }
    // finite-difference gradient from neighbouring nodes
    double g2 = 0;
    std::size_t stride = 1;
    std::size_t rem = i;
    for (int e = 0; e < u.d; ++e) {
      std::size_t ne = static_cast<std::size_t>(u.n[static_cast<std::size_t>(e)]);
      std::size_t ie = rem % ne;
      rem /= ne;
      std::size_t ip = ie + 1 < ne ? i + stride : i;
      std::size_t im = ie > 0 ? i - stride : i;
      if (ip != im) {
        Vec dv = u.node_value(ip) - u.node_value(im);
        double scale = static_cast<double>(ip - im) / static_cast<double>(stride) * u.h(e);
        g2 += dot(dv, dv) / (scale * scale);
      }
      stride *= ne;
    }
    double g = std::sqrt(g2);
    rep.sup_grad = std::max(rep.sup_grad, g);
    if (u.sigma && !u.sigma->empty())
      rep.bound = std::max(rep.bound, u.sigma->distance(x) * g);
    else
      rep.bound = std::max(rep.bound, g);
  }
  return rep;
}

// --- grid file IO -----------------------------------------------------------

void write_grid_text(const BoundaryMap& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << u.d + 1 << " " << u.target.nu();
  for (int e = 0; e < u.d; ++e) out << " " << u.n[static_cast<std::size_t>(e)];
  for (int e = 0; e < u.d; ++e) out << " " << format("%.17g", u.domain.lo[e]);
  for (int e = 0; e < u.d; ++e) out << " " << format("%.17g", u.domain.hi[e]);
  out << "\n";
  for (std::size_t i = 0; i < u.node_count(); ++i) {
    Vec v = u.node_value(i);
    for (int c = 0; c < u.target.nu(); ++c) out << (c ? " " : "") << format("%.17g", v[c]);
    out << "\n";
  }
}

BoundaryMap read_grid_text(const std::string& path, const TargetManifold& M) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  int m, nu;
  in >> m >> nu;
  if (nu != M.nu()) throw std::runtime_error("ambient dimension mismatch");
  BoundaryMap u;
  u.d = m - 1;
  u.target = M;
  u.domain.lo = Vec::zero(u.d);
  u.domain.hi = Vec::zero(u.d);
  for (int e = 0; e < u.d; ++e) in >> u.n[static_cast<std::size_t>(e)];
  for (int e = 0; e < u.d; ++e) in >> u.domain.lo[e];
  for (int e = 0; e < u.d; ++e) in >> u.domain.hi[e];
  u.samples.assign(u.node_count() * static_cast<std::size_t>(nu), 0.0);
  for (double& v : u.samples) in >> v;
  if (!in) throw std::runtime_error("truncated grid file " + path);
  return u;
}

namespace {
constexpr char kGridMagic[16] = {'T', 'R', 'E', 'X', 'T', 'G', 'R', 'I',
                                 'D', 'v', '1', '\0', '\0', '\0', '\0', '\0'};
}

void write_grid_binary(const BoundaryMap& u, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.write(kGridMagic, 16);
  std::int64_t hdr[2] = {u.d + 1, u.target.nu()};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  for (int e = 0; e < u.d; ++e) {
    std::int64_t ne = u.n[static_cast<std::size_t>(e)];
    out.write(reinterpret_cast<const char*>(&ne), sizeof ne);
  }
  for (int e = 0; e < u.d; ++e) {
    double v = u.domain.lo[e];
    out.write(reinterpret_cast<const char*>(&v), 8);
  }
  for (int e = 0; e < u.d; ++e) {
    double v = u.domain.hi[e];
    out.write(reinterpret_cast<const char*>(&v), 8);
  }
  out.write(reinterpret_cast<const char*>(u.samples.data()),
            static_cast<std::streamsize>(u.samples.size() * 8));
}

BoundaryMap read_grid_binary(const std::string& path, const TargetManifold& M) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[16];
  in.read(magic, 16);
  if (std::memcmp(magic, kGridMagic, 16) != 0) throw std::runtime_error("bad grid magic");
  std::int64_t hdr[2];
  in.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  if (hdr[1] != M.nu()) throw std::runtime_error("ambient dimension mismatch");
  BoundaryMap u;
  u.d = static_cast<int>(hdr[0]) - 1;
  u.target = M;
  u.domain.lo = Vec::zero(u.d);
  u.domain.hi = Vec::zero(u.d);
  for (int e = 0; e < u.d; ++e) {
    std::int64_t ne;
    in.read(reinterpret_cast<char*>(&ne), sizeof ne);
    u.n[static_cast<std::size_t>(e)] = static_cast<int>(ne);
  }
  for (int e = 0; e < u.d; ++e) in.read(reinterpret_cast<char*>(&u.domain.lo[e]), 8);
  for (int e = 0; e < u.d; ++e) in.read(reinterpret_cast<char*>(&u.domain.hi[e]), 8);
  u.samples.assign(u.node_count() * static_cast<std::size_t>(M.nu()), 0.0);
  in.read(reinterpret_cast<char*>(u.samples.data()),
          static_cast<std::streamsize>(u.samples.size() * 8));
  if (!in) throw std::runtime_error("truncated grid file " + path);
  return u;
}

}  // namespace trext
