#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "selftest/games.hpp"
#include "selftest/qmath.hpp"
#include "selftest/strategies.hpp"

namespace selftest::extraction {

enum class Side { A, B };
enum class Basis { Z, X, W };

std::string to_string(Side s);
std::string to_string(Basis b);

// Full question index whose digit at `copy` equals `value`, the other digits
// running through the `context`th smallest combination (ascending full index).
int question_for_context(int copies, int radix, int copy, int value, int context);
// Inverse: the context rank of a full question among those sharing its digit.
int context_of_question(int copies, int radix, int copy, int question);
int contexts_per_copy(int copies, int radix);

// The +-1 observable for one answer bit of `copy` under one full question:
// a signed sum of the question's complete orthogonal projector family, so an
// exact reflection. For CHSH-type games the bit is the copy's answer bit and
// basis Z/X fixes the copy's question digit to 0/1.
struct MarginalObservable {
    Side side = Side::A;
    int copy = 0;      // game copy, 0-based
    int pair = 0;      // extracted-pair index (== copy for CHSH-type)
    Basis basis = Basis::Z;
    int context = 0;   // 0-based
    int question = 0;  // encoded full question
    qmath::Reflection matrix;
};

MarginalObservable marginal_observable(const strategies::Strategy& s, Side side, int copy,
                                       Basis basis, int context);

// Magic square: which (question value, answer bit) realizes basis B of the
// first/second extracted pair of a copy, per the cell layout. `which` is 0
// for the copy's first pair, 1 for the second.
struct QuestionBit {
    int question_value;
    int bit;
};
QuestionBit ms_question_bit(Side side, Basis basis, int which);

// The six exact reflections of one (side, copy, context): two answer bits for
// each of the three question values.
struct MagicSquareMarginals {
    // ops[question value][answer bit]
    std::array<std::array<MarginalObservable, 2>, 3> ops;
};
MagicSquareMarginals magic_square_marginals(const strategies::Strategy& s, Side side, int copy,
                                            int context);

// Context averages (V'_i, W'_i): arithmetic means of the Z- and X-marginals;
// Hermitian with operator norm <= 1 but generally not reflections.
std::pair<qmath::ComplexMatrix, qmath::ComplexMatrix> averaged_pair(const strategies::Strategy& s,
                                                                    Side side, int copy);

// Z' = sign(V' + W'), X' = sign(V' - W'), zero eigenvalues promoted to +1.
std::pair<qmath::Reflection, qmath::Reflection> regularize_chsh(const qmath::ComplexMatrix& v,
                                                                const qmath::ComplexMatrix& w);

// Tilted variant: scale by 1/(2 cos mu) and 1/(2 sin mu) before taking the
// sign (the scaling cannot flip signs but fixes the intended magnitudes).
std::pair<qmath::Reflection, qmath::Reflection> regularize_tilted(const qmath::ComplexMatrix& v,
                                                                  const qmath::ComplexMatrix& w,
                                                                  const games::TiltParams& params);

// S_i^{(k)}: the copy's game functional with Alice pinned to context k and
// Bob's averaged operators (tilted variant adds alpha <Z_A^{(i,k)}>).
double per_copy_context_value(const strategies::Strategy& s, int copy, int context);
std::vector<double> per_copy_context_values(const strategies::Strategy& s, int copy);

// Magic square context values: the nine per-cell correlators with one party
// pinned to a context and the other averaged (Alice pass), or Bob pinned and
// Alice fixed at her chosen context (Bob pass).
std::vector<std::array<double, 9>> ms_context_values_alice(const strategies::Strategy& s, int copy);
std::vector<std::array<double, 9>> ms_context_values_bob(const strategies::Strategy& s, int copy,
                                                         int alice_context);

// Good contexts: S^{(k)} >= optimum - 5 eps (CHSH/tilted). Checks the per-copy
// premise mean(S^{(k)}) >= optimum - eps, and enforces the counting bound
// (at most ceil(contexts / radix^2) - 1 bad contexts; the paper's
// radix^{n-3} - 1 with small-n values clamped at zero).
std::vector<int> good_set(const std::vector<double>& context_values, double optimum,
                          double epsilon, int radix);

// Magic square rule: every one of the nine values within 90 eps of 1.
std::vector<int> good_set_magic(const std::vector<std::array<double, 9>>& context_values,
                                double epsilon);

int max_bad_contexts(int contexts, int radix);

// Smallest (k, l), k in good_i, l in good_j, whose full questions coincide
// (the marginals are then signed sums of one projector family and commute
// exactly). Throws premise_violation if none exists.
std::pair<int, int> pick_commuting_pair(int copies, int radix, int copy_i, int digit_i,
                                        int copy_j, int digit_j, const std::vector<int>& good_i,
                                        const std::vector<int>& good_j);

// Replace Z by the nearest-on-psi reflection exactly anticommuting with X:
// in X's eigenbasis the off-diagonal block of Z is completed to a unitary
// (polar part, kernel directions paired off), which keeps the output balanced.
struct AnticommuteRepair {
    qmath::Reflection z_prime;
    double measured_anticommutator = 0.0;  // ||{X,Z} psi|| before repair
    double distance = 0.0;                 // ||(Z - Z') psi||
};
AnticommuteRepair exact_anticommute(const qmath::Reflection& x, const qmath::Reflection& z,
                                    const qmath::StateVector& psi, std::size_t factor,
                                    double zero_tol = qmath::kDefaultZeroTol);

// One extracted qubit pair's chosen reflections.
struct PairOperators {
    qmath::Reflection z_a, x_a, z_b, x_b;
};

struct ExtractionBundle {
    games::GameSpec spec;
    int pairs = 0;  // copies for CHSH-type, 2*copies for the magic square

    std::vector<PairOperators> ops;

    // CHSH-type: per copy, Bob's context averages and their regularizations.
    std::vector<qmath::ComplexMatrix> v_b, w_b;

    // Good sets and chosen contexts; magic square appends Bob's per-copy sets
    // after Alice's (2*copies entries), CHSH-type has `copies` entries.
    std::vector<std::vector<int>> good_sets;
    std::vector<int> chosen_contexts;

    std::vector<double> per_copy_values;  // S_i, or min_t LHS_{t,i} for the magic square
    double epsilon = 0.0;                 // premise deficit used for the good sets
    double epsilon_bob = 0.0;             // magic square second pass
};

// Full pipeline: marginals, averages, per-context values, measured premise
// deficit, good sets, chosen contexts (smallest good), regularization
// (CHSH-type) or Bob's second pass (magic square).
ExtractionBundle build_bundle(const strategies::Strategy& s);

} // namespace selftest::extraction
