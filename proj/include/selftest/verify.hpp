#pragma once

#include <string>
#include <vector>

#include "selftest/extraction.hpp"

namespace selftest::verify {

struct NormEntry {
    std::string label;
    double value;
};

// Measured hypothesis norms of the robust isometry theorems for the bundle's
// chosen operators: per-pair agreement on the state, per-side anticommutators,
// cross-pair commutators, and the tilted sine/cosine relation where that
// replaces plain X-agreement. max_norm is the effective operator-level epsilon.
struct HypothesisNorms {
    std::vector<NormEntry> entries;
    double max_norm = 0.0;

    double get(const std::string& label) const;
};

HypothesisNorms hypothesis_norms(const extraction::ExtractionBundle& bundle,
                                 const qmath::StateVector& psi);

// Residual norms of the per-copy lemma conclusions across every context, and
// of the derived cross-copy commutation relations on the state.
HypothesisNorms lemma_conclusions(const extraction::ExtractionBundle& bundle,
                                  const strategies::Strategy& s);

struct ScalingSample {
    int n = 1;
    double epsilon = 0.0;
    double distance = 0.0;
};

// Least squares on log-log data: distance ~ C * n^{p_n} * eps^{p_eps}.
// Distances at or below `floor` are excluded before fitting.
struct ScalingFit {
    double c = 0.0;
    double p_n = 0.0;
    double p_eps = 0.0;
    double se_p_n = 0.0;
    double se_p_eps = 0.0;
    double residual_rms = 0.0;
    std::size_t samples_used = 0;

    bool n_exponent_in_band(double target) const;
    bool eps_exponent_in_band(double target) const;
};

inline constexpr double kDistanceFloor = 1e-8;

ScalingFit scaling_fit(const std::vector<ScalingSample>& samples,
                       double floor = kDistanceFloor);

// One-variable version for grids with a single n: distance ~ C * eps^{slope}.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;  // ln C
    double residual_rms = 0.0;
    std::size_t samples_used = 0;
};

SlopeFit slope_fit(const std::vector<std::pair<double, double>>& eps_distance,
                   double floor = kDistanceFloor);

} // namespace selftest::verify
