#include "doctest.h"

#include <cmath>
#include <numbers>

#include "selftest/extraction.hpp"
#include "selftest/rng.hpp"
#include "test_fixtures.hpp"

using namespace selftest;
using namespace selftest::extraction;
using fixtures::pauli_i;
using fixtures::pauli_x;
using fixtures::pauli_z;
using games::GameSpec;
using qmath::ComplexMatrix;
using qmath::max_abs_diff;
using qmath::Reflection;
using qmath::StateVector;
using strategies::ideal_chsh;
using strategies::ideal_magic_square;
using strategies::ideal_strategy;
using strategies::ideal_tilted;
using strategies::NoiseKind;
using strategies::NoiseModel;
using strategies::parallel_compose;
using strategies::perturb;
using strategies::Strategy;

namespace {
const double kChshMax = 2.0 * std::sqrt(2.0);

double op_norm(const ComplexMatrix& m) {
    auto eig = qmath::herm_eig(qmath::multiply(m.adjoint(), m));
    return std::sqrt(std::max(0.0, eig.eigenvalues.back()));
}
} // namespace

TEST_CASE("context/question maps are inverse bijections") {
    const int n = 3, radix = 2;
    for (int copy = 0; copy < n; ++copy)
        for (int v = 0; v < radix; ++v) {
            std::vector<int> seen;
            for (int k = 0; k < contexts_per_copy(n, radix); ++k) {
                int q = question_for_context(n, radix, copy, v, k);
                CHECK(games::decode_question(q, n, radix)[std::size_t(copy)] == v);
                CHECK(context_of_question(n, radix, copy, q) == k);
                seen.push_back(q);
            }
            for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i - 1] < seen[i]);  // ascending
        }
}

TEST_CASE("marginal_observable: single copy recovers the question observable") {
    Strategy s = ideal_chsh();
    MarginalObservable z = marginal_observable(s, Side::A, 0, Basis::Z, 0);
    CHECK(max_abs_diff(z.matrix.matrix(), pauli_z()) <= 1e-14);
    MarginalObservable x = marginal_observable(s, Side::A, 0, Basis::X, 0);
    CHECK(max_abs_diff(x.matrix.matrix(), pauli_x()) <= 1e-14);
    CHECK(z.question == 0);
    CHECK(x.question == 1);
}

TEST_CASE("marginal_observable: n=2 ideal marginals are single-site Paulis") {
    Strategy s = parallel_compose({ideal_chsh(), ideal_chsh()});
    MarginalObservable z1 = marginal_observable(s, Side::A, 0, Basis::Z, 0);
    CHECK(max_abs_diff(z1.matrix.matrix(), qmath::tensor(pauli_z(), pauli_i())) <= 1e-12);
    MarginalObservable z2 = marginal_observable(s, Side::A, 1, Basis::Z, 1);
    CHECK(max_abs_diff(z2.matrix.matrix(), qmath::tensor(pauli_i(), pauli_z())) <= 1e-12);
}

TEST_CASE("marginal_observable squares to identity on perturbed strategies") {
    Strategy s = perturb(ideal_strategy(GameSpec::chsh(2)),
                         NoiseModel{NoiseKind::MixtureOfBoth, 0.08, 11});
    for (int copy = 0; copy < 2; ++copy)
        for (Basis b : {Basis::Z, Basis::X})
            for (int k = 0; k < contexts_per_copy(2, 2); ++k) {
                const ComplexMatrix m = marginal_observable(s, Side::B, copy, b, k).matrix.matrix();
                CHECK((qmath::multiply(m, m) - ComplexMatrix::identity(m.rows())).frobenius_norm() <=
                      1e-10);
            }
}

TEST_CASE("averaged_pair: ideal contexts coincide, single context is the marginal") {
    Strategy s2 = parallel_compose({ideal_chsh(), ideal_chsh()});
    auto [v, w] = averaged_pair(s2, Side::A, 0);
    // all contexts give the same operator, so the average is a reflection
    CHECK((qmath::multiply(v, v) - ComplexMatrix::identity(4)).frobenius_norm() <= 1e-10);
    CHECK(max_abs_diff(v, qmath::tensor(pauli_z(), pauli_i())) <= 1e-12);

    Strategy s1 = ideal_chsh();
    auto [v1, w1] = averaged_pair(s1, Side::A, 0);
    CHECK(max_abs_diff(v1, marginal_observable(s1, Side::A, 0, Basis::Z, 0).matrix.matrix()) == 0.0);
    CHECK(max_abs_diff(w1, marginal_observable(s1, Side::A, 0, Basis::X, 0).matrix.matrix()) == 0.0);
}

TEST_CASE("averaged_pair stays within the unit operator-norm ball") {
    Strategy s = perturb(ideal_strategy(GameSpec::chsh(3)),
                         NoiseModel{NoiseKind::AngleJitter, 0.2, 5});
    for (int i = 0; i < 3; ++i) {
        auto [v, w] = averaged_pair(s, Side::B, i);
        CHECK(op_norm(v) <= 1.0 + 1e-10);
        CHECK(op_norm(w) <= 1.0 + 1e-10);
    }
}

TEST_CASE("regularize_chsh: ideal Bob side gives exact Pauli directions") {
    Strategy s = ideal_chsh();
    auto [v, w] = averaged_pair(s, Side::B, 0);
    auto [z, x] = regularize_chsh(v, w);
    CHECK(max_abs_diff(z.matrix(), pauli_z()) <= 1e-12);
    CHECK(max_abs_diff(x.matrix(), pauli_x()) <= 1e-12);

    // degenerate difference: V' = W' = Z regularizes the zero matrix to +I
    auto [z2, x2] = regularize_chsh(pauli_z(), pauli_z());
    CHECK(max_abs_diff(x2.matrix(), ComplexMatrix::identity(2)) <= 1e-12);

    // Z' shares the eigenbasis of V'+W', so they commute exactly
    ComplexMatrix sum = v + w;
    CHECK(max_abs_diff(qmath::multiply(z.matrix(), sum), qmath::multiply(sum, z.matrix())) <= 1e-12);
}

TEST_CASE("regularize_tilted: scaling cannot flip signs; ideal side anticommutes") {
    Strategy s = ideal_tilted(std::numbers::pi / 8);
    auto [v, w] = averaged_pair(s, Side::B, 0);
    games::TiltParams tp = games::tilt_params(std::numbers::pi / 8);
    auto [zt, xt] = regularize_tilted(v, w, tp);
    auto [zc, xc] = regularize_chsh(v, w);
    CHECK(max_abs_diff(zt.matrix(), zc.matrix()) <= 1e-12);
    CHECK(max_abs_diff(xt.matrix(), xc.matrix()) <= 1e-12);
    CHECK(max_abs_diff(zt.matrix(), pauli_z()) <= 1e-12);
    CHECK(max_abs_diff(xt.matrix(), pauli_x()) <= 1e-12);

    ComplexMatrix anti = qmath::multiply(zt.matrix(), xt.matrix());
    anti += qmath::multiply(xt.matrix(), zt.matrix());
    CHECK(qmath::apply_factor(anti, s.state, 1).norm() <= 1e-10);
}

TEST_CASE("per_copy_context_value: ideal values and the averaging identity") {
    Strategy s = parallel_compose({ideal_chsh(), ideal_chsh(), ideal_chsh()});
    auto table = strategies::correlation_table(s);
    for (int i = 0; i < 3; ++i) {
        std::vector<double> vals = per_copy_context_values(s, i);
        double mean = 0.0;
        for (double v : vals) {
            CHECK(v == doctest::Approx(kChshMax).epsilon(1e-9));
            mean += v;
        }
        mean /= double(vals.size());
        CHECK(mean == doctest::Approx(games::chsh_value(table, i)).epsilon(1e-10));
    }
}

TEST_CASE("per_copy_context_value: single-context values respect the quantum bound") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Strategy s = perturb(ideal_strategy(GameSpec::chsh(2)),
                             NoiseModel{NoiseKind::MixtureOfBoth, 0.15, seed});
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k)
                CHECK(per_copy_context_value(s, i, k) <= kChshMax + 1e-9);
    }
}

TEST_CASE("per_copy averaging identity holds on perturbed tilted strategies") {
    Strategy s = perturb(ideal_strategy(GameSpec::tilted({std::numbers::pi / 6, std::numbers::pi / 8})),
                         NoiseModel{NoiseKind::AngleJitter, 0.05, 3});
    auto table = strategies::correlation_table(s);
    for (int i = 0; i < 2; ++i) {
        std::vector<double> vals = per_copy_context_values(s, i);
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= double(vals.size());
        games::TiltParams tp = games::tilt_params(s.spec.thetas[std::size_t(i)]);
        CHECK(mean == doctest::Approx(games::tilted_value(table, i, tp)).epsilon(1e-10));
    }
}

TEST_CASE("good_set: ideal keeps every context; cardinality bound enforced") {
    std::vector<double> ideal(4, kChshMax);
    auto g = good_set(ideal, kChshMax, 1e-6, 2);
    CHECK(g.size() == 4);

    // synthetic list: premise holds (values above optimum are unphysical but
    // exercise the accounting) while two of eight contexts are bad
    const double eps = 1e-3;
    std::vector<double> bad_list(8, kChshMax + 2 * eps);
    bad_list[3] = kChshMax - 6 * eps;
    bad_list[7] = kChshMax - 6 * eps;
    CHECK_THROWS_AS(good_set(bad_list, kChshMax, eps, 2), premise_violation);

    // premise itself failing is reported as such
    std::vector<double> low(4, kChshMax - 1.0);
    CHECK_THROWS_AS(good_set(low, kChshMax, 1e-3, 2), premise_violation);
}

TEST_CASE("good_set cardinality bound never fires on perturbed strategies") {
    // randomized stress: measured-premise good sets over many seeds
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Strategy s = perturb(ideal_strategy(GameSpec::chsh(3)),
                             NoiseModel{NoiseKind::AngleJitter, 0.03, seed});
        ExtractionBundle b = build_bundle(s);  // throws premise_violation on failure
        for (const auto& g : b.good_sets) CHECK(g.size() >= 1);
    }
}

TEST_CASE("pick_commuting_pair: shared questions, exact commutation, pair count") {
    const int n = 2, radix = 2;
    std::vector<int> all = {0, 1};
    auto [k, l] = pick_commuting_pair(n, radix, 0, 0, 1, 0, all, all);
    CHECK(question_for_context(n, radix, 0, 0, k) == question_for_context(n, radix, 1, 0, l));

    Strategy s = perturb(ideal_strategy(GameSpec::chsh(2)),
                         NoiseModel{NoiseKind::MixtureOfBoth, 0.1, 21});
    ComplexMatrix a = marginal_observable(s, Side::A, 0, Basis::Z, k).matrix.matrix();
    ComplexMatrix b = marginal_observable(s, Side::A, 1, Basis::Z, l).matrix.matrix();
    ComplexMatrix comm = qmath::multiply(a, b);
    comm -= qmath::multiply(b, a);
    CHECK(op_norm(comm) <= 1e-12);

    // count the commuting pairs for n=3: shared questions = 2^{n-2}
    int count = 0;
    const int n3 = 3;
    for (int kk = 0; kk < contexts_per_copy(n3, 2); ++kk)
        for (int ll = 0; ll < contexts_per_copy(n3, 2); ++ll)
            if (question_for_context(n3, 2, 0, 0, kk) == question_for_context(n3, 2, 2, 0, ll))
                ++count;
    CHECK(count == 2);

    CHECK_THROWS_AS(pick_commuting_pair(n, radix, 0, 0, 1, 0, {0}, std::vector<int>{}),
                    premise_violation);
}

TEST_CASE("exact_anticommute: fixed point and closed-form 2x2 block oracle") {
    rng::Stream rs(17);
    StateVector psi = rng::random_state(rs, {2, 2});
    Reflection x{pauli_x()}, z{pauli_z()};
    AnticommuteRepair rep = exact_anticommute(x, z, psi, 0);
    CHECK(rep.measured_anticommutator <= 1e-14);
    CHECK(rep.distance <= 1e-12);
    CHECK(max_abs_diff(rep.z_prime.matrix(), pauli_z()) <= 1e-10);

    // Z tilted by delta toward X: repair recovers the Z direction and the
    // distance is exactly 2 sin(delta/2) for any state
    const double delta = 0.3;
    ComplexMatrix zt = qmath::cplx(std::cos(delta)) * pauli_z() +
                       qmath::cplx(std::sin(delta)) * pauli_x();
    AnticommuteRepair rep2 = exact_anticommute(x, Reflection{zt}, psi, 0);
    CHECK(rep2.measured_anticommutator == doctest::Approx(2.0 * std::sin(delta)).epsilon(1e-12));
    CHECK(rep2.distance == doctest::Approx(2.0 * std::sin(delta / 2.0)).epsilon(1e-10));
    CHECK(max_abs_diff(rep2.z_prime.matrix(), pauli_z()) <= 1e-10);
}

TEST_CASE("exact_anticommute: randomized bound and exactness") {
    rng::Stream rs(99);
    for (int iter = 0; iter < 100; ++iter) {
        const std::size_t d = (iter % 2 == 0) ? 4 : 6;
        rng::Stream sx = rs.child(std::uint64_t(3 * iter));
        rng::Stream sz = rs.child(std::uint64_t(3 * iter + 1));
        rng::Stream sp = rs.child(std::uint64_t(3 * iter + 2));
        Reflection x = rng::random_balanced_reflection(sx, d);
        Reflection z = rng::random_balanced_reflection(sz, d);
        StateVector psi = rng::random_state(sp, {d, 3});

        AnticommuteRepair rep = exact_anticommute(x, z, psi, 0);
        ComplexMatrix anti = qmath::multiply(x.matrix(), rep.z_prime.matrix());
        anti += qmath::multiply(rep.z_prime.matrix(), x.matrix());
        CHECK(op_norm(anti) <= 1e-10);
        CHECK(rep.z_prime.balanced());
        CHECK(rep.distance <= std::sqrt(1.5) * rep.measured_anticommutator + 1e-12);
    }
}

TEST_CASE("exact_anticommute rejects unbalanced input") {
    rng::Stream rs(1);
    StateVector psi = rng::random_state(rs, {2, 2});
    CHECK_THROWS_AS(exact_anticommute(Reflection{ComplexMatrix::identity(2)},
                                      Reflection{pauli_z()}, psi, 0),
                    std::invalid_argument);
}

TEST_CASE("magic_square_marginals: ideal single copy matches the cell layout") {
    Strategy s = ideal_magic_square();
    MagicSquareMarginals mm = magic_square_marginals(s, Side::A, 0, 0);
    auto cell = [&](Basis b, int which) {
        QuestionBit qb = ms_question_bit(Side::A, b, which);
        return mm.ops[std::size_t(qb.question_value)][std::size_t(qb.bit)].matrix.matrix();
    };
    CHECK(max_abs_diff(cell(Basis::Z, 0), qmath::tensor(pauli_z(), pauli_i())) <= 1e-12);
    CHECK(max_abs_diff(cell(Basis::Z, 1), qmath::tensor(pauli_i(), pauli_z())) <= 1e-12);
    CHECK(max_abs_diff(cell(Basis::X, 0), qmath::tensor(pauli_x(), pauli_i())) <= 1e-12);
    CHECK(max_abs_diff(cell(Basis::X, 1), qmath::tensor(pauli_i(), pauli_x())) <= 1e-12);
    CHECK(max_abs_diff(cell(Basis::W, 0), qmath::tensor(pauli_z(), pauli_x())) <= 1e-12);
    CHECK(max_abs_diff(cell(Basis::W, 1), qmath::tensor(pauli_x(), pauli_z())) <= 1e-12);

    // Bob's cells
    MagicSquareMarginals mb = magic_square_marginals(s, Side::B, 0, 0);
    auto bcell = [&](Basis b, int which) {
        QuestionBit qb = ms_question_bit(Side::B, b, which);
        return mb.ops[std::size_t(qb.question_value)][std::size_t(qb.bit)].matrix.matrix();
    };
    CHECK(max_abs_diff(bcell(Basis::Z, 0), qmath::tensor(pauli_z(), pauli_i())) <= 1e-12);
    CHECK(max_abs_diff(bcell(Basis::X, 1), qmath::tensor(pauli_i(), pauli_x())) <= 1e-12);
    CHECK(max_abs_diff(bcell(Basis::W, 0), qmath::tensor(pauli_z(), pauli_z())) <= 1e-12);
    CHECK(max_abs_diff(bcell(Basis::W, 1), qmath::tensor(pauli_x(), pauli_x())) <= 1e-12);

    // row products act as +1 on the shared state
    for (int q = 0; q < 3; ++q) {
        ComplexMatrix prod = qmath::multiply(mm.ops[std::size_t(q)][0].matrix.matrix(),
                                             mm.ops[std::size_t(q)][1].matrix.matrix());
        // third cell of each row is the product of the first two; row product
        // = (first)(second)(first)(second) = I acting on psi
        StateVector lhs = qmath::apply_factor(qmath::multiply(prod, prod), s.state, 0);
        CHECK(qmath::inner(s.state, lhs).real() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("ms context values: ideal nine conditions, all contexts good") {
    Strategy s = ideal_magic_square();
    auto vals = ms_context_values_alice(s, 0);
    REQUIRE(vals.size() == 1);
    for (double v : vals[0]) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    auto g = good_set_magic(vals, 1e-6);
    CHECK(g.size() == 1);
}

TEST_CASE("build_bundle: CHSH ideal bundle is exact") {
    Strategy s = parallel_compose({ideal_chsh(), ideal_chsh()});
    ExtractionBundle b = build_bundle(s);
    CHECK(b.pairs == 2);
    CHECK(b.epsilon <= 1e-12);
    for (double v : b.per_copy_values) CHECK(v == doctest::Approx(kChshMax).epsilon(1e-12));
    for (const auto& g : b.good_sets) CHECK(g.size() == 2);
    for (const auto& ops : b.ops) {
        CHECK(ops.z_a.balanced());
        CHECK(ops.z_b.balanced());
    }
}

TEST_CASE("build_bundle: magic square two copies, both passes succeed") {
    Strategy s = parallel_compose({ideal_magic_square(), ideal_magic_square()});
    ExtractionBundle b = build_bundle(s);
    CHECK(b.pairs == 4);
    CHECK(b.good_sets.size() == 4);  // Alice copies then Bob copies
    for (const auto& g : b.good_sets) CHECK(g.size() == 3);
    CHECK(b.epsilon <= 1e-12);
    CHECK(b.epsilon_bob <= 1e-12);
}
