#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "pmp/raster.hpp"

namespace pmp {

inline constexpr double kDefaultWalkerBeta = 130.0;
inline constexpr double kWalkerWeightFloor = 1e-6;
inline constexpr double kDefaultTauRw = 0.90;

enum class WalkerPreconditioner {
  kJacobi,                       // diagonal scaling
  kModifiedIncompleteCholesky,   // MIC(0) on the raster-ordered 5-point stencil
};

std::string_view to_string(WalkerPreconditioner preconditioner);
WalkerPreconditioner parse_walker_preconditioner(std::string_view text);  // "jacobi" | "mic"

struct WalkerParams {
  double beta = kDefaultWalkerBeta;
  double tolerance = 1e-8;   // relative residual ||r|| / ||b||
  int max_iterations = 20000;
  WalkerPreconditioner preconditioner = WalkerPreconditioner::kJacobi;
};

// Seeded random walker: each seeded class's first-arrival probability.
struct ProbabilityStack {
  std::vector<int> classes;  // ascending class ids, one per plane
  PlaneStack planes;
  LabelMask seeds;           // seed class per pixel, 0 when unseeded

  int height() const noexcept { return planes.height(); }
  int width() const noexcept { return planes.width(); }
};

// Edge weight exp(-beta * |a - b|^2) + 1e-6 between two guidance colors.
double walker_edge_weight(const Rgb& a, const Rgb& b, double beta);

// Solves, for every seeded class, the Dirichlet problem on the 4-connected graph
// Laplacian restricted to unseeded pixels (seeds fixed at 1 for their class, 0
// otherwise) with preconditioned conjugate gradients started from zero.
// Throws NoSeeds, SolverDiverged, or InvalidArgument when one pixel carries two classes.
ProbabilityStack solve_walker(const RasterImage& image, const PointSet& seeds,
                              const WalkerParams& params = {});

// Argmax class where its probability reaches tau_rw, ignore otherwise; seed pixels
// always keep their class. Ties go to the lower class id.
LabelMask walker_mask(const ProbabilityStack& probs, double tau_rw = kDefaultTauRw);

}  // namespace pmp
