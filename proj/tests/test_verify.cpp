#include "doctest.h"

#include <cmath>
#include <numbers>

#include "selftest/rng.hpp"
#include "selftest/verify.hpp"

using namespace selftest;
using namespace selftest::verify;
using extraction::build_bundle;
using extraction::ExtractionBundle;
using games::GameSpec;
using qmath::ComplexMatrix;
using qmath::Reflection;
using qmath::StateVector;
using strategies::ideal_magic_square;
using strategies::ideal_strategy;
using strategies::NoiseKind;
using strategies::NoiseModel;
using strategies::perturb;
using strategies::Strategy;

TEST_CASE("hypothesis_norms: ideal strategies satisfy every condition exactly") {
    for (const GameSpec& spec :
         {GameSpec::chsh(2), GameSpec::tilted({std::numbers::pi / 6, std::numbers::pi / 8})}) {
        Strategy s = ideal_strategy(spec);
        ExtractionBundle b = build_bundle(s);
        HypothesisNorms norms = hypothesis_norms(b, s.state);
        CHECK(norms.max_norm <= 1e-9);
    }
    Strategy ms = ideal_magic_square();
    HypothesisNorms norms = hypothesis_norms(build_bundle(ms), ms.state);
    CHECK(norms.max_norm <= 1e-9);
}

TEST_CASE("hypothesis_norms: effective epsilon scales like sqrt of the deficit") {
    // log-log slope of max norm against per-copy deficit across magnitudes
    std::vector<std::pair<double, double>> samples;
    Strategy ideal = ideal_strategy(GameSpec::chsh(2));
    for (double mag : {0.004, 0.008, 0.016, 0.032, 0.064}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Strategy p = perturb(ideal, NoiseModel{NoiseKind::AngleJitter, mag, seed});
            ExtractionBundle b = build_bundle(p);
            if (b.epsilon <= 1e-12) continue;
            HypothesisNorms norms = hypothesis_norms(b, p.state);
            samples.push_back({b.epsilon, norms.max_norm});
        }
    }
    SlopeFit fit = slope_fit(samples);
    CHECK(fit.slope >= 0.4);
    CHECK(fit.slope <= 0.6);
}

TEST_CASE("hypothesis_norms: invariant under global phase and local unitaries") {
    Strategy p = perturb(ideal_strategy(GameSpec::chsh(2)),
                         NoiseModel{NoiseKind::MixtureOfBoth, 0.07, 31});
    ExtractionBundle b = build_bundle(p);
    HypothesisNorms base = hypothesis_norms(b, p.state);

    rng::Stream s(8);
    ComplexMatrix ua = rng::random_unitary(s, 4);
    ComplexMatrix ub = rng::random_unitary(s, 4);
    StateVector psi2 = qmath::apply_factor(ua, p.state, 0);
    psi2 = qmath::apply_factor(ub, psi2, 1);
    const qmath::cplx phase = std::polar(1.0, 0.81);
    for (std::size_t i = 0; i < psi2.dim(); ++i) psi2[i] *= phase;

    ExtractionBundle b2 = b;
    auto conj = [](const ComplexMatrix& u, const Reflection& r) {
        ComplexMatrix m = qmath::multiply(qmath::multiply(u, r.matrix()), u.adjoint());
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = i; j < m.cols(); ++j) {
                qmath::cplx avg = 0.5 * (m(i, j) + std::conj(m(j, i)));
                m(i, j) = avg;
                m(j, i) = std::conj(avg);
            }
        return Reflection{m};
    };
    for (auto& ops : b2.ops) {
        ops.z_a = conj(ua, ops.z_a);
        ops.x_a = conj(ua, ops.x_a);
        ops.z_b = conj(ub, ops.z_b);
        ops.x_b = conj(ub, ops.x_b);
    }
    HypothesisNorms moved = hypothesis_norms(b2, psi2);
    REQUIRE(moved.entries.size() == base.entries.size());
    for (std::size_t i = 0; i < base.entries.size(); ++i)
        CHECK(moved.entries[i].value == doctest::Approx(base.entries[i].value).epsilon(1e-10));
}

TEST_CASE("lemma_conclusions: ideal residuals vanish for every game kind") {
    for (const GameSpec& spec :
         {GameSpec::chsh(2), GameSpec::tilted({std::numbers::pi / 8, std::numbers::pi / 8})}) {
        Strategy s = ideal_strategy(spec);
        HypothesisNorms res = lemma_conclusions(build_bundle(s), s);
        CHECK(res.max_norm <= 1e-9);
    }
    Strategy ms = ideal_magic_square();
    HypothesisNorms res = lemma_conclusions(build_bundle(ms), ms);
    CHECK(res.max_norm <= 1e-9);
}

TEST_CASE("lemma_conclusions: the tilted cross-copy commutation residual is exact") {
    Strategy s = ideal_strategy(GameSpec::tilted({std::numbers::pi / 8, std::numbers::pi / 8}));
    HypothesisNorms res = lemma_conclusions(build_bundle(s), s);
    CHECK(res.get("bob_commutator[X0,X1]") <= 1e-9);
    CHECK(res.get("bob_commutator[Z0,X1]") <= 1e-9);
    CHECK(res.get("tilted_xz_relation[0,0]") <= 1e-9);
}

TEST_CASE("scaling_fit: recovers synthetic exponents") {
    std::vector<ScalingSample> samples;
    for (int n : {1, 2, 3})
        for (double eps : {1e-4, 1e-3, 1e-2, 1e-1})
            samples.push_back({n, eps, 2.0 * std::pow(double(n), 1.5) * std::sqrt(eps)});
    ScalingFit fit = scaling_fit(samples);
    CHECK(fit.c == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(fit.p_n == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(fit.p_eps == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(fit.n_exponent_in_band(1.5));
    CHECK(fit.eps_exponent_in_band(0.5));
}

TEST_CASE("scaling_fit: floor excludes numerically-zero points, degenerate grids rejected") {
    std::vector<ScalingSample> samples;
    for (int n : {1, 2})
        for (double eps : {1e-4, 1e-3, 1e-2}) samples.push_back({n, eps, std::sqrt(eps)});
    samples.push_back({3, 1e-3, 1e-12});  // below floor, dropped
    ScalingFit fit = scaling_fit(samples);
    CHECK(fit.samples_used == 6);

    std::vector<ScalingSample> degenerate;
    for (double eps : {1e-4, 1e-3, 1e-2}) degenerate.push_back({2, eps, std::sqrt(eps)});
    CHECK_THROWS_AS(scaling_fit(degenerate), std::invalid_argument);
}

TEST_CASE("scaling_fit: scale equivariance") {
    std::vector<ScalingSample> samples, scaled;
    for (int n : {1, 2, 4})
        for (double eps : {1e-4, 3e-4, 1e-3, 3e-3})
            samples.push_back({n, eps, 0.7 * std::pow(double(n), 1.2) * std::pow(eps, 0.45)});
    for (const auto& s : samples) scaled.push_back({s.n, s.epsilon, 10.0 * s.distance});
    ScalingFit f1 = scaling_fit(samples);
    ScalingFit f2 = scaling_fit(scaled);
    CHECK(f2.c == doctest::Approx(10.0 * f1.c).epsilon(1e-9));
    CHECK(f2.p_n == doctest::Approx(f1.p_n).epsilon(1e-9));
    CHECK(f2.p_eps == doctest::Approx(f1.p_eps).epsilon(1e-9));
}
