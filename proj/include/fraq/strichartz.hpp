#pragma once

// Empirical Strichartz constants for the truncated free flow
//   ||exp(it Lambda^sigma) u0||_{L^p(0,T; L^q)} <= C ||u0||_{H^{1/p}}
// over admissible pairs 2/p + d/q = d/2.

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fraq/spectral.hpp"

namespace fraq {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct AdmissiblePair {
  double p = 2.0;
  double q = kInfinity;
  int d = 1;
};

struct PairCheck {
  bool admissible = false;
  std::vector<std::string> violations;
};

/// p in [2, inf], q in [2, inf], (p, q, d) != (2, inf, 2) and
/// |2/p + d/q - d/2| <= 1e-12.
PairCheck check_pair(double p, double q, int d);
/// Throws ValidationError listing the violated clauses.
AdmissiblePair validate_pair(double p, double q, int d);

inline constexpr int kStrichartzTimeNodes = 256;

/// ||exp(it Lambda^sigma) u0||_{L^p L^q} / ||u0||_{H^{1/p}} with the time
/// integral by the midpoint rule on 256 nodes (max for p = inf) and L^q by
/// nodal quadrature (max for q = inf).
double strichartz_ratio(const SpectralField& u0, const AdmissiblePair& pair, double sigma, double t_horizon);

/// Mixed norm alone (numerator of strichartz_ratio).
double mixed_norm(const SpectralField& u0, const AdmissiblePair& pair, double sigma, double t_horizon);

/// Random datum of the documented ensemble: i.i.d. complex Gaussian
/// coefficients times (1+|k|^2)^{-1/(2p) - 1/4}, normalized in H^{1/p}.
SpectralField strichartz_datum(const TorusGrid& grid, const AdmissiblePair& pair, std::mt19937_64& rng);

struct StrichartzReport {
  AdmissiblePair pair;
  double sigma = 2.0;
  int n = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  double t_horizon = 1.0;
  double empirical_constant = 0.0;
  std::vector<double> ratios;  // per trial
  int time_nodes = kStrichartzTimeNodes;
  int space_nodes = 0;
};

/// Deterministic in `seed`; trials are drawn from one mt19937_64 stream, so
/// a run with more trials extends the sample set of a run with fewer.
StrichartzReport estimate_strichartz_constant(const AdmissiblePair& pair, double sigma, int n, int trials,
                                              std::uint64_t seed, double t_horizon = 1.0);

}  // namespace fraq
