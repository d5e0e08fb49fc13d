#include "pmp/random_walker.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace pmp {

namespace {

// Laplacian of the lattice graph restricted to the unseeded pixels.
struct ReducedLaplacian {
  std::vector<int> unknown_of_pixel;  // -1 for seeds
  std::vector<int> pixel_of_unknown;
  std::vector<double> degree;         // per unknown, includes edges to seeds
  // Per unknown: up to four (neighbor unknown, weight) pairs.
  std::vector<std::array<int, 4>> neighbor;
  std::vector<std::array<double, 4>> weight;

  std::size_t size() const { return pixel_of_unknown.size(); }

  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    for (std::size_t u = 0; u < size(); ++u) {
      double acc = degree[u] * x[u];
      for (int j = 0; j < 4; ++j) {
        if (neighbor[u][j] >= 0) acc -= weight[u][j] * x[neighbor[u][j]];
      }
      y[u] = acc;
    }
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Neighbor slots: 0 up, 1 down, 2 left, 3 right. Unknowns are in raster order, so
// up and left precede a node and down and right follow it.
constexpr int kUp = 0, kDown = 1, kLeft = 2, kRight = 3;

// z = M^-1 r for the selected preconditioner.
class Preconditioner {
 public:
  Preconditioner(const ReducedLaplacian& system, WalkerPreconditioner kind)
      : system_(system), kind_(kind) {
    if (kind_ == WalkerPreconditioner::kJacobi) return;
    // Modified incomplete Cholesky with relaxation tau; pivots that shrink below
    // sigma times the diagonal fall back to the diagonal.
    constexpr double kTau = 0.97, kSigma = 0.25;
    const std::size_t n = system.size();
    inv_sqrt_pivot_.assign(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      double e = system.degree[u];
      for (const auto [slot, other_upper] : {std::pair{kLeft, kDown}, std::pair{kUp, kRight}}) {
        const int k = system.neighbor[u][slot];
        if (k < 0) continue;
        const double w = system.weight[u][slot], p = inv_sqrt_pivot_[k];
        const double fill = system.neighbor[k][other_upper] >= 0 ? system.weight[k][other_upper] : 0.0;
        e -= (w * p) * (w * p) + kTau * w * fill * p * p;
      }
      if (e < kSigma * system.degree[u]) e = system.degree[u];
      inv_sqrt_pivot_[u] = 1.0 / std::sqrt(e);
    }
  }

  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    const std::size_t n = system_.size();
    if (kind_ == WalkerPreconditioner::kJacobi) {
      for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / system_.degree[i];
      return;
    }
    const auto& nb = system_.neighbor;
    const auto& wt = system_.weight;
    const auto& p = inv_sqrt_pivot_;
    for (std::size_t u = 0; u < n; ++u) {
      double t = r[u];
      for (int slot : {kUp, kLeft}) {
        if (const int k = nb[u][slot]; k >= 0) t += wt[u][slot] * p[k] * z[k];
      }
      z[u] = t * p[u];
    }
    for (std::size_t u = n; u-- > 0;) {
      double t = z[u];
      for (int slot : {kDown, kRight}) {
        if (const int m = nb[u][slot]; m >= 0) t += wt[u][slot] * p[u] * z[m];
      }
      z[u] = t * p[u];
    }
  }

 private:
  const ReducedLaplacian& system_;
  WalkerPreconditioner kind_;
  std::vector<double> inv_sqrt_pivot_;
};

// Preconditioned CG from a zero start. Returns false if the relative residual bound
// is not met within max_iterations.
bool conjugate_gradient(const ReducedLaplacian& system, const Preconditioner& precond,
                        const std::vector<double>& rhs, std::vector<double>& x, double tolerance,
                        int max_iterations) {
  const std::size_t n = system.size();
  x.assign(n, 0.0);
  const double rhs_norm = std::sqrt(dot(rhs, rhs));
  if (rhs_norm == 0.0) return true;

  std::vector<double> r = rhs, z(n), p(n), q(n);
  precond.apply(r, z);
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < max_iterations; ++it) {
    system.multiply(p, q);
    const double alpha = rz / dot(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    if (std::sqrt(dot(r, r)) <= tolerance * rhs_norm) return true;
    precond.apply(r, z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return false;
}

}  // namespace

std::string_view to_string(WalkerPreconditioner preconditioner) {
  return preconditioner == WalkerPreconditioner::kJacobi ? "jacobi" : "mic";
}

WalkerPreconditioner parse_walker_preconditioner(std::string_view text) {
  if (text == "jacobi") return WalkerPreconditioner::kJacobi;
  if (text == "mic") return WalkerPreconditioner::kModifiedIncompleteCholesky;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown walker preconditioner '" + std::string(text) + "' (jacobi | mic)");
}

double walker_edge_weight(const Rgb& a, const Rgb& b, double beta) {
  const double dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
  return std::exp(-beta * (dr * dr + dg * dg + db * db)) + kWalkerWeightFloor;
}

ProbabilityStack solve_walker(const RasterImage& image, const PointSet& seeds,
                              const WalkerParams& params) {
  if (!(params.beta > 0.0) || !(params.tolerance > 0.0) || params.max_iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "walker needs beta > 0, tolerance > 0, iterations >= 1");
  }
  if (seeds.empty()) throw Error(ErrorCode::kNoSeeds, "random walker needs at least one seed");
  seeds.check_bounds(image.height(), image.width());

  const int h = image.height(), w = image.width();
  ProbabilityStack out;
  out.seeds = LabelMask(h, w, 0);
  for (const Point& p : seeds.entries()) {
    std::uint8_t& cell = out.seeds(p.y, p.x);
    if (cell != 0 && cell != p.class_id) {
      throw Error(ErrorCode::kInvalidArgument, "pixel (" + std::to_string(p.x) + "," +
                                                   std::to_string(p.y) +
                                                   ") is seeded with two classes");
    }
    cell = static_cast<std::uint8_t>(p.class_id);
    out.classes.push_back(p.class_id);
  }
  std::sort(out.classes.begin(), out.classes.end());
  out.classes.erase(std::unique(out.classes.begin(), out.classes.end()), out.classes.end());

  const std::size_t n_pixels = static_cast<std::size_t>(h) * w;
  ReducedLaplacian system;
  system.unknown_of_pixel.assign(n_pixels, -1);
  for (std::size_t i = 0; i < n_pixels; ++i) {
    if (out.seeds[i] == 0) {
      system.unknown_of_pixel[i] = static_cast<int>(system.pixel_of_unknown.size());
      system.pixel_of_unknown.push_back(static_cast<int>(i));
    }
  }
  const std::size_t n = system.size();
  system.degree.assign(n, 0.0);
  system.neighbor.assign(n, {-1, -1, -1, -1});
  system.weight.assign(n, {0.0, 0.0, 0.0, 0.0});

  // Seed-side contributions per unknown: (class, weight) for the right-hand sides.
  std::vector<std::vector<std::pair<int, double>>> seed_links(n);
  constexpr int kDy[4] = {-1, 1, 0, 0};
  constexpr int kDx[4] = {0, 0, -1, 1};
  for (std::size_t u = 0; u < n; ++u) {
    const int pixel = system.pixel_of_unknown[u];
    const int y = pixel / w, x = pixel % w;
    const Rgb here = image.rgb(y, x);
    for (int j = 0; j < 4; ++j) {
      const int ny = y + kDy[j], nx = x + kDx[j];
      if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
      const double wt = walker_edge_weight(here, image.rgb(ny, nx), params.beta);
      system.degree[u] += wt;
      const std::size_t npix = static_cast<std::size_t>(ny) * w + nx;
      const int other = system.unknown_of_pixel[npix];
      if (other >= 0) {
        system.neighbor[u][j] = other;
        system.weight[u][j] = wt;
      } else {
        seed_links[u].emplace_back(out.seeds[npix], wt);
      }
    }
  }

  out.planes = PlaneStack(static_cast<int>(out.classes.size()), h, w);
  const Preconditioner precond(system, params.preconditioner);
  std::vector<double> rhs(n), solution;
  for (std::size_t ci = 0; ci < out.classes.size(); ++ci) {
    const int cls = out.classes[ci];
    for (std::size_t u = 0; u < n; ++u) {
      double b = 0.0;
      for (const auto& [seed_class, wt] : seed_links[u]) {
        if (seed_class == cls) b += wt;
      }
      rhs[u] = b;
    }
    if (!conjugate_gradient(system, precond, rhs, solution, params.tolerance, params.max_iterations)) {
      throw Error(ErrorCode::kSolverDiverged,
                  "class " + std::to_string(cls) + " did not reach residual " +
                      std::to_string(params.tolerance) + " in " +
                      std::to_string(params.max_iterations) + " iterations");
    }
    auto plane = out.planes.plane(static_cast<int>(ci));
    for (std::size_t i = 0; i < n_pixels; ++i) {
      const int u = system.unknown_of_pixel[i];
      plane[i] = u >= 0 ? std::clamp(solution[u], 0.0, 1.0) : (out.seeds[i] == cls ? 1.0 : 0.0);
    }
  }
  return out;
}

LabelMask walker_mask(const ProbabilityStack& probs, double tau_rw) {
  if (!(tau_rw > 0.5 && tau_rw <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau_rw must lie in (0.5, 1]");
  }
  LabelMask mask(probs.height(), probs.width(), kIgnoreLabel);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (probs.seeds[i] != 0) {
      mask[i] = probs.seeds[i];
      continue;
    }
    int best = -1;
    double best_value = -1.0;
    for (int c = 0; c < probs.planes.num_planes(); ++c) {
      const double v = probs.planes.plane(c)[i];
      if (v > best_value) {
        best_value = v;
        best = c;
      }
    }
    if (best >= 0 && best_value >= tau_rw) {
      mask[i] = static_cast<std::uint8_t>(probs.classes[best]);
    }
  }
  return mask;
}

}  // namespace pmp
