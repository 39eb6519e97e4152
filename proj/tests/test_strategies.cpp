#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "selftest/games.hpp"
#include "selftest/strategies.hpp"

using namespace selftest;
using namespace selftest::strategies;
using games::GameSpec;

namespace {
const double kRoot2 = std::sqrt(2.0);
const double kChshMax = 2.0 * kRoot2;

double table_max_diff(const games::CorrelationTable& a, const games::CorrelationTable& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.raw().size(); ++i)
        m = std::max(m, std::abs(a.raw()[i] - b.raw()[i]));
    return m;
}
} // namespace

TEST_CASE("ideal_chsh: optimal value, uniform marginals, quantum advantage") {
    Strategy s = ideal_chsh();
    s.validate();
    auto t = correlation_table(s);
    CHECK(games::chsh_value(t, 0) == doctest::Approx(kChshMax).epsilon(1e-12));

    for (int x = 0; x < 2; ++x)
        for (int a = 0; a < 2; ++a) {
            double marginal = 0.0;
            for (int b = 0; b < 2; ++b) marginal += t.at(a, b, x, 0);
            CHECK(marginal == doctest::Approx(0.5).epsilon(1e-12));
        }
    CHECK(games::chsh_value(t, 0) > 2.0);  // beats every deterministic strategy
}

TEST_CASE("ideal_tilted: reduction at pi/4 and Alice Z-marginal") {
    auto tc = correlation_table(ideal_chsh());
    auto tt = correlation_table(ideal_tilted(std::numbers::pi / 4));
    CHECK(table_max_diff(tc, tt) <= 1e-14);

    const double theta = std::numbers::pi / 6;
    Strategy s = ideal_tilted(theta);
    s.validate();
    auto t = correlation_table(s);
    double p00 = 0.0;
    for (int b = 0; b < 2; ++b) p00 += t.at(0, b, 0, 0);
    CHECK(p00 == doctest::Approx(std::cos(theta) * std::cos(theta)).epsilon(1e-12));

    games::TiltParams p = games::tilt_params(theta);
    CHECK(games::tilted_value(t, 0, p) ==
          doctest::Approx(games::tilted_optimum(p.alpha)).epsilon(1e-12));
}

TEST_CASE("ideal_magic_square: wins every question pair with certainty") {
    Strategy s = ideal_magic_square();
    s.validate();
    auto t = correlation_table(s);
    CHECK(games::win_probability(t, 0) == doctest::Approx(1.0).epsilon(1e-12));

    // exhaustive predicate check: for each question pair, every outcome pair
    // with nonzero probability agrees on the shared cell
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    double p = t.at(a, b, r, c);
                    if (p < 1e-12) continue;
                    const int a1 = a >> 1, a2 = a & 1, b1 = b >> 1, b2 = b & 1;
                    // Alice's cell values along row r; Bob's along column c
                    const int arow[3] = {a1, a2, a1 ^ a2};
                    const int bcol[3] = {b1, b2, (c == 2) ? (b1 ^ b2 ^ 1) : (b1 ^ b2)};
                    CHECK(arow[c] == bcol[r]);
                }
}

TEST_CASE("parallel_compose: per-copy values survive composition") {
    for (int n = 2; n <= 4; ++n) {
        std::vector<Strategy> parts(std::size_t(n), ideal_chsh());
        Strategy s = parallel_compose(parts);
        s.validate();
        auto t = correlation_table(s);
        for (int i = 0; i < n; ++i)
            CHECK(games::chsh_value(t, i) == doctest::Approx(kChshMax).epsilon(1e-9));
    }
}

TEST_CASE("parallel_compose: single part is a relabeling identity") {
    Strategy s = parallel_compose({ideal_chsh()});
    auto t0 = correlation_table(ideal_chsh());
    auto t1 = correlation_table(s);
    CHECK(table_max_diff(t0, t1) == 0.0);
}

TEST_CASE("parallel_compose: mixed tilted angles keep single-copy values") {
    const double th1 = std::numbers::pi / 4, th2 = std::numbers::pi / 6;
    Strategy s = parallel_compose({ideal_tilted(th1), ideal_tilted(th2)});
    auto t = correlation_table(s);
    auto p1 = games::tilt_params(th1), p2 = games::tilt_params(th2);
    auto t1 = correlation_table(ideal_tilted(th1));
    auto t2 = correlation_table(ideal_tilted(th2));
    CHECK(games::tilted_value(t, 0, p1) ==
          doctest::Approx(games::tilted_value(t1, 0, p1)).epsilon(1e-10));
    CHECK(games::tilted_value(t, 1, p2) ==
          doctest::Approx(games::tilted_value(t2, 0, p2)).epsilon(1e-10));
}

TEST_CASE("parallel_compose: magic square two copies stays optimal per copy") {
    Strategy s = parallel_compose({ideal_magic_square(), ideal_magic_square()});
    s.validate();
    auto t = correlation_table(s);
    for (int i = 0; i < 2; ++i) {
        auto lhs = games::magic_square_lhs(t, i);
        for (double v : lhs) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("perturb: zero magnitude is the identity, same seed reproduces") {
    Strategy s = ideal_strategy(GameSpec::chsh(2));
    NoiseModel none{NoiseKind::AngleJitter, 0.0, 7};
    auto t0 = correlation_table(s);
    auto t1 = correlation_table(perturb(s, none));
    CHECK(table_max_diff(t0, t1) == 0.0);

    NoiseModel nm{NoiseKind::MixtureOfBoth, 0.05, 1234};
    Strategy p1 = perturb(s, nm);
    Strategy p2 = perturb(s, nm);
    p1.validate();
    auto ta = correlation_table(p1), tb = correlation_table(p2);
    CHECK(table_max_diff(ta, tb) == 0.0);  // bit-identical

    NoiseModel other{NoiseKind::MixtureOfBoth, 0.05, 1235};
    auto tc = correlation_table(perturb(s, other));
    CHECK(table_max_diff(ta, tc) > 0.0);
}

TEST_CASE("perturb: angle jitter loses value quadratically near the optimum") {
    Strategy s = ideal_chsh();
    // deficit(delta) ~ c delta^2: the ratio deficit/delta^2 stays within a
    // narrow band across small magnitudes (averaged over seeds)
    std::vector<double> deltas = {0.5e-2, 1e-2, 2e-2};
    std::vector<double> ratio;
    for (double d : deltas) {
        double deficit = 0.0;
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            NoiseModel nm{NoiseKind::AngleJitter, d, seed};
            auto t = correlation_table(perturb(s, nm));
            deficit += kChshMax - games::chsh_value(t, 0);
        }
        ratio.push_back(deficit / 8.0 / (d * d));
    }
    for (double r : ratio) {
        CHECK(r > 0.0);
        CHECK(r / ratio[0] > 0.5);
        CHECK(r / ratio[0] < 2.0);
    }
}

TEST_CASE("correlation_table: product state and no-signalling") {
    // |00> with Z measurements on both sides: outcome (0,0) is certain
    Strategy s = ideal_chsh();
    s.state = qmath::StateVector({1.0, 0.0, 0.0, 0.0}, {2, 2});
    s.bob = s.alice;  // Z and X bases on both sides
    s.validate();
    auto t = correlation_table(s);
    CHECK(t.at(0, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-14));

    auto ideal = correlation_table(ideal_chsh());
    double agree = ideal.at(0, 0, 0, 0) + ideal.at(1, 1, 0, 0);
    CHECK(agree == doctest::Approx(0.5 * (1.0 + 1.0 / kRoot2)).epsilon(1e-12));
    ideal.validate();  // includes no-signalling at 1e-9; quantum tables pass at 1e-10
}

TEST_CASE("strategy export/import round trip") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "selftest_io_test";
    fs::create_directories(dir);
    fs::path json = dir / "strategy.json";

    Strategy s = perturb(ideal_strategy(GameSpec::tilted({std::numbers::pi / 6})),
                         NoiseModel{NoiseKind::AngleJitter, 0.02, 99});
    export_strategy(s, json.string());
    Strategy back = import_strategy(json.string());

    auto t0 = correlation_table(s), t1 = correlation_table(back);
    CHECK(table_max_diff(t0, t1) == 0.0);
    CHECK(back.spec.kind == games::GameKind::Tilted);
    fs::remove_all(dir);
}

TEST_CASE("strategy validation rejects broken projector families") {
    Strategy s = ideal_chsh();
    s.alice[0][0] *= qmath::cplx(0.5);
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
