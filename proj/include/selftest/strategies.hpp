#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selftest/games.hpp"
#include "selftest/qmath.hpp"

namespace selftest::strategies {

// Pure bipartite state plus complete projective measurements per question.
// projectors are indexed [question][answer]; state factors are (H_A, H_B).
struct Strategy {
    games::GameSpec spec;
    qmath::StateVector state;
    std::vector<std::vector<qmath::ComplexMatrix>> alice;
    std::vector<std::vector<qmath::ComplexMatrix>> bob;

    std::size_t dim_a() const { return state.subsystem_dims()[0]; }
    std::size_t dim_b() const { return state.subsystem_dims()[1]; }

    // Projector families: Hermitian, idempotent and mutually orthogonal to
    // 1e-10, summing to I to 1e-10; state normalized to 1e-12.
    void validate() const;
};

enum class NoiseKind { AngleJitter, StateRotation, MixtureOfBoth };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

// magnitude 0 reproduces the input strategy exactly; perturbations act by
// local unitaries so the output is again a valid projective strategy.
struct NoiseModel {
    NoiseKind kind = NoiseKind::AngleJitter;
    double magnitude = 0.0;
    std::uint64_t seed = 0;
};

Strategy ideal_chsh();
Strategy ideal_tilted(double theta);
Strategy ideal_magic_square();

// Tensor composition with all Alice factors grouped before all Bob factors;
// composite questions/answers use the big-endian per-copy encoding.
Strategy parallel_compose(const std::vector<Strategy>& parts);

// n-copy ideal strategy for the given game.
Strategy ideal_strategy(const games::GameSpec& spec);

Strategy perturb(const Strategy& s, const NoiseModel& noise);

games::CorrelationTable correlation_table(const Strategy& s);

// JSON descriptor plus raw binary bundle (row-major complex pairs,
// little-endian 64-bit floats) next to it.
void export_strategy(const Strategy& s, const std::string& json_path);
Strategy import_strategy(const std::string& json_path);

} // namespace selftest::strategies
