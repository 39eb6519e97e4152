#include "selftest/strategies.hpp"

#include <cmath>
#include <numbers>

#include "selftest/rng.hpp"

namespace selftest::strategies {

using games::GameKind;
using games::GameSpec;
using qmath::ComplexMatrix;
using qmath::cplx;
using qmath::StateVector;

namespace {

ComplexMatrix pauli(char which) {
    ComplexMatrix m(2, 2);
    switch (which) {
        case 'i': m(0, 0) = m(1, 1) = 1.0; break;
        case 'z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
        case 'x': m(0, 1) = m(1, 0) = 1.0; break;
        case 'y': m(0, 1) = cplx(0.0, -1.0); m(1, 0) = cplx(0.0, 1.0); break;
        default: throw std::invalid_argument("pauli: unknown label");
    }
    return m;
}

// Projector pair of a two-outcome observable; answer bit a maps to outcome (-1)^a.
std::vector<ComplexMatrix> observable_projectors(const ComplexMatrix& obs) {
    const std::size_t d = obs.rows();
    ComplexMatrix plus = ComplexMatrix::identity(d);
    ComplexMatrix minus = ComplexMatrix::identity(d);
    plus += obs;
    minus -= obs;
    plus *= 0.5;
    minus *= 0.5;
    return {plus, minus};
}

void check_tol(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("strategy: ") + what);
}

} // namespace

void Strategy::validate() const {
    spec.validate();
    check_tol(state.subsystem_dims().size() == 2, "state must have two party factors");
    check_tol(state.is_normalized(1e-12), "state not normalized");
    const int nq = spec.questions_per_party();
    const int na = spec.answers_per_party();
    check_tol(int(alice.size()) == nq && int(bob.size()) == nq, "question family count");

    auto check_family = [&](const std::vector<std::vector<ComplexMatrix>>& fams, std::size_t d) {
        for (const auto& fam : fams) {
            check_tol(int(fam.size()) == na, "answer family count");
            ComplexMatrix sum(d, d);
            for (const ComplexMatrix& p : fam) {
                check_tol(p.rows() == d && p.cols() == d, "projector dimension");
                check_tol(p.is_hermitian(1e-12 * std::max(1.0, p.max_abs())),
                          "projector not Hermitian");
                ComplexMatrix sq = qmath::multiply(p, p);
                check_tol((sq - p).frobenius_norm() <= 1e-10, "projector not idempotent");
                sum += p;
            }
            check_tol((sum - ComplexMatrix::identity(d)).frobenius_norm() <= 1e-10,
                      "projectors do not sum to identity");
            for (std::size_t a = 0; a < fam.size(); ++a)
                for (std::size_t b = a + 1; b < fam.size(); ++b)
                    check_tol(qmath::multiply(fam[a], fam[b]).frobenius_norm() <= 1e-10,
                              "projectors not mutually orthogonal");
        }
    };
    check_family(alice, dim_a());
    check_family(bob, dim_b());
}

Strategy ideal_chsh() {
    Strategy s;
    s.spec = GameSpec::chsh(1);
    const double r = 1.0 / std::sqrt(2.0);
    s.state = StateVector({r, 0.0, 0.0, r}, {2, 2});
    s.alice = {observable_projectors(pauli('z')), observable_projectors(pauli('x'))};
    const double c = r;
    ComplexMatrix b0 = cplx(c) * (pauli('z') + pauli('x'));
    ComplexMatrix b1 = cplx(c) * (pauli('z') - pauli('x'));
    s.bob = {observable_projectors(b0), observable_projectors(b1)};
    return s;
}

Strategy ideal_tilted(double theta) {
    games::TiltParams tp = games::tilt_params(theta);
    Strategy s;
    s.spec = GameSpec::tilted({theta});
    s.state = StateVector({std::cos(theta), 0.0, 0.0, std::sin(theta)}, {2, 2});
    s.alice = {observable_projectors(pauli('z')), observable_projectors(pauli('x'))};
    ComplexMatrix b0 = cplx(std::cos(tp.mu)) * pauli('z') + cplx(std::sin(tp.mu)) * pauli('x');
    ComplexMatrix b1 = cplx(std::cos(tp.mu)) * pauli('z') - cplx(std::sin(tp.mu)) * pauli('x');
    s.bob = {observable_projectors(b0), observable_projectors(b1)};
    return s;
}

namespace {

// The nine commuting-observable square. Rows multiply to +I, the first two
// columns to +I, the third to -I. Alice measures rows, Bob columns.
ComplexMatrix magic_cell(int row, int col) {
    auto kron2 = [](const ComplexMatrix& a, const ComplexMatrix& b) { return qmath::tensor(a, b); };
    switch (row * 3 + col) {
        case 0: return kron2(pauli('z'), pauli('i'));
        case 1: return kron2(pauli('i'), pauli('z'));
        case 2: return kron2(pauli('z'), pauli('z'));
        case 3: return kron2(pauli('i'), pauli('x'));
        case 4: return kron2(pauli('x'), pauli('i'));
        case 5: return kron2(pauli('x'), pauli('x'));
        case 6: return kron2(pauli('z'), pauli('x'));
        case 7: return kron2(pauli('x'), pauli('z'));
        case 8: return kron2(pauli('y'), pauli('y'));
    }
    throw std::invalid_argument("magic_cell: bad indices");
}

// Joint projectors of two commuting two-outcome observables; the two answer
// bits are big-endian within the copy (answer = 2*first + second).
std::vector<ComplexMatrix> joint_projectors(const ComplexMatrix& first,
                                            const ComplexMatrix& second) {
    auto pf = observable_projectors(first);
    auto ps = observable_projectors(second);
    std::vector<ComplexMatrix> out;
    out.reserve(4);
    for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2)
            out.push_back(qmath::multiply(pf[std::size_t(a1)], ps[std::size_t(a2)]));
    return out;
}

} // namespace

Strategy ideal_magic_square() {
    Strategy s;
    s.spec = GameSpec::magic_square(1);
    // two EPR pairs: (1/2) sum_{jk} |jk>_A |jk>_B
    StateVector psi = StateVector::zero({4, 4});
    for (std::size_t j = 0; j < 4; ++j) psi[j * 4 + j] = 0.5;
    s.state = psi;
    for (int r = 0; r < 3; ++r) s.alice.push_back(joint_projectors(magic_cell(r, 0), magic_cell(r, 1)));
    for (int c = 0; c < 3; ++c) s.bob.push_back(joint_projectors(magic_cell(0, c), magic_cell(1, c)));
    return s;
}

Strategy parallel_compose(const std::vector<Strategy>& parts) {
    if (parts.empty()) throw std::invalid_argument("parallel_compose: empty part list");

    const bool magic = parts.front().spec.kind == GameKind::MagicSquare;
    bool any_tilted = false;
    int copies = 0;
    std::vector<double> thetas;
    for (const Strategy& p : parts) {
        const bool pm = p.spec.kind == GameKind::MagicSquare;
        if (pm != magic)
            throw std::invalid_argument("parallel_compose: cannot mix magic-square with CHSH-type");
        copies += p.spec.copies;
        if (p.spec.kind == GameKind::Tilted) {
            any_tilted = true;
            thetas.insert(thetas.end(), p.spec.thetas.begin(), p.spec.thetas.end());
        } else {
            // a CHSH copy is the pi/4 point of the tilted family
            for (int i = 0; i < p.spec.copies; ++i) thetas.push_back(std::numbers::pi / 4);
        }
    }

    Strategy out;
    if (magic)
        out.spec = GameSpec::magic_square(copies);
    else if (any_tilted)
        out.spec = GameSpec::tilted(thetas);
    else
        out.spec = GameSpec::chsh(copies);

    // State: tensor as (A1,B1,A2,B2,...) then group Alice factors first.
    StateVector acc = parts.front().state;
    for (std::size_t i = 1; i < parts.size(); ++i) acc = qmath::tensor(acc, parts[i].state);
    std::vector<std::size_t> perm;
    for (std::size_t i = 0; i < parts.size(); ++i) perm.push_back(2 * i);
    for (std::size_t i = 0; i < parts.size(); ++i) perm.push_back(2 * i + 1);
    StateVector grouped = qmath::permute_subsystems(acc, perm);
    std::size_t da = 1, db = 1;
    for (const Strategy& p : parts) da *= p.dim_a(), db *= p.dim_b();
    out.state = grouped.reshaped({da, db});

    const int radix = out.spec.radix();
    const int answer_radix = magic ? 4 : 2;
    const int n = int(parts.size());

    auto compose_side = [&](bool alice_side) {
        std::vector<std::vector<ComplexMatrix>> fams;
        const int nq = out.spec.questions_per_party();
        const int na = out.spec.answers_per_party();
        fams.reserve(std::size_t(nq));
        for (int x = 0; x < nq; ++x) {
            std::vector<int> xd = games::decode_question(x, n, radix);
            std::vector<ComplexMatrix> fam;
            fam.reserve(std::size_t(na));
            for (int a = 0; a < na; ++a) {
                std::vector<int> ad = games::decode_question(a, n, answer_radix);
                ComplexMatrix m;
                for (int i = 0; i < n; ++i) {
                    const auto& part = alice_side ? parts[std::size_t(i)].alice
                                                  : parts[std::size_t(i)].bob;
                    const ComplexMatrix& block =
                        part[std::size_t(xd[std::size_t(i)])][std::size_t(ad[std::size_t(i)])];
                    m = (i == 0) ? block : qmath::tensor(m, block);
                }
                fam.push_back(std::move(m));
            }
            fams.push_back(std::move(fam));
        }
        return fams;
    };
    out.alice = compose_side(true);
    out.bob = compose_side(false);
    return out;
}

Strategy ideal_strategy(const GameSpec& spec) {
    spec.validate();
    std::vector<Strategy> parts;
    parts.reserve(std::size_t(spec.copies));
    for (int i = 0; i < spec.copies; ++i) {
        switch (spec.kind) {
            case GameKind::Chsh: parts.push_back(ideal_chsh()); break;
            case GameKind::Tilted: parts.push_back(ideal_tilted(spec.thetas[std::size_t(i)])); break;
            case GameKind::MagicSquare: parts.push_back(ideal_magic_square()); break;
        }
    }
    Strategy s = parallel_compose(parts);
    s.spec = spec;  // keep the caller's spec verbatim (compose normalizes kind)
    return s;
}

namespace {

// exp(-i * h) through the eigendecomposition of Hermitian h
ComplexMatrix unitary_exp(const ComplexMatrix& h) {
    qmath::EigResult eig = qmath::herm_eig(h);
    ComplexMatrix scaled = eig.eigenvectors;
    const std::size_t n = h.rows();
    for (std::size_t c = 0; c < n; ++c) {
        cplx phase = std::polar(1.0, -eig.eigenvalues[c]);
        for (std::size_t r = 0; r < n; ++r) scaled(r, c) *= phase;
    }
    return qmath::multiply(scaled, eig.eigenvectors.adjoint());
}

ComplexMatrix small_random_unitary(rng::Stream& stream, std::size_t dim, double magnitude) {
    ComplexMatrix h = rng::random_hermitian(stream, dim);
    h *= cplx(magnitude);
    return unitary_exp(h);
}

ComplexMatrix conjugate(const ComplexMatrix& u, const ComplexMatrix& m) {
    return qmath::multiply(qmath::multiply(u, m), u.adjoint());
}

} // namespace

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::AngleJitter: return "angle_jitter";
        case NoiseKind::StateRotation: return "state_rotation";
        case NoiseKind::MixtureOfBoth: return "mixture_of_both";
    }
    return "?";
}

NoiseKind noise_kind_from_string(const std::string& name) {
    if (name == "angle_jitter") return NoiseKind::AngleJitter;
    if (name == "state_rotation") return NoiseKind::StateRotation;
    if (name == "mixture_of_both") return NoiseKind::MixtureOfBoth;
    throw config_error("unknown noise kind: " + name);
}

Strategy perturb(const Strategy& s, const NoiseModel& noise) {
    if (noise.magnitude < 0.0) throw std::invalid_argument("perturb: negative magnitude");
    if (noise.magnitude == 0.0) return s;

    const int n = s.spec.copies;
    const int radix = s.spec.radix();
    const std::size_t copy_dim = s.spec.kind == GameKind::MagicSquare ? 4 : 2;

    rng::Stream root(noise.seed);
    const bool jitter =
        noise.kind == NoiseKind::AngleJitter || noise.kind == NoiseKind::MixtureOfBoth;
    const bool rotate =
        noise.kind == NoiseKind::StateRotation || noise.kind == NoiseKind::MixtureOfBoth;

    Strategy out = s;

    if (jitter) {
        // per (party, copy, question value) basis jitter; streams keyed by
        // copy first so the instance is a function of (seed, copy) alone
        auto jitters = [&](int party) {
            auto u = std::vector<std::vector<ComplexMatrix>>(std::size_t(n));
            for (int i = 0; i < n; ++i) {
                rng::Stream per_copy = root.child(std::uint64_t(i)).child(0x6a00 + std::uint64_t(party));
                for (int v = 0; v < radix; ++v) {
                    rng::Stream sv = per_copy.child(std::uint64_t(v));
                    u[std::size_t(i)].push_back(
                        small_random_unitary(sv, copy_dim, noise.magnitude));
                }
            }
            return u;
        };
        auto ua = jitters(0), ub = jitters(1);
        auto conj_family = [&](std::vector<std::vector<ComplexMatrix>>& fams,
                               const std::vector<std::vector<ComplexMatrix>>& u) {
            const int nq = s.spec.questions_per_party();
            for (int x = 0; x < nq; ++x) {
                std::vector<int> xd = games::decode_question(x, n, radix);
                ComplexMatrix big;
                for (int i = 0; i < n; ++i) {
                    const ComplexMatrix& ui = u[std::size_t(i)][std::size_t(xd[std::size_t(i)])];
                    big = (i == 0) ? ui : qmath::tensor(big, ui);
                }
                for (auto& p : fams[std::size_t(x)]) p = conjugate(big, p);
            }
        };
        conj_family(out.alice, ua);
        conj_family(out.bob, ub);
    }

    if (rotate) {
        auto rotation = [&](int party) {
            ComplexMatrix big;
            for (int i = 0; i < n; ++i) {
                rng::Stream per_copy = root.child(std::uint64_t(i)).child(0x5200 + std::uint64_t(party));
                ComplexMatrix ui = small_random_unitary(per_copy, copy_dim, noise.magnitude);
                big = (i == 0) ? ui : qmath::tensor(big, ui);
            }
            return big;
        };
        out.state = qmath::apply_factor(rotation(0), out.state, 0);
        out.state = qmath::apply_factor(rotation(1), out.state, 1);
    }

    return out;
}

games::CorrelationTable correlation_table(const Strategy& s) {
    const int nq = s.spec.questions_per_party();
    const int na = s.spec.answers_per_party();
    const std::size_t dim = s.state.dim();

    // Columns u_{x,a} = (Pi_{a|x} (x) I)|psi> and w_{y,b} = (I (x) Pi_{b|y})|psi>;
    // p(a,b|x,y) = <u_{x,a}|w_{y,b}> since the two sides commute.
    ComplexMatrix ucols(dim, std::size_t(nq) * std::size_t(na));
    ComplexMatrix wcols(dim, std::size_t(nq) * std::size_t(na));
    for (int x = 0; x < nq; ++x)
        for (int a = 0; a < na; ++a) {
            StateVector u = qmath::apply_factor(s.alice[std::size_t(x)][std::size_t(a)], s.state, 0);
            StateVector w = qmath::apply_factor(s.bob[std::size_t(x)][std::size_t(a)], s.state, 1);
            const std::size_t col = std::size_t(x) * std::size_t(na) + std::size_t(a);
            for (std::size_t r = 0; r < dim; ++r) {
                ucols(r, col) = u[r];
                wcols(r, col) = w[r];
            }
        }
    ComplexMatrix g = qmath::gram(ucols, wcols);

    games::CorrelationTable t(s.spec);
    for (int x = 0; x < nq; ++x)
        for (int a = 0; a < na; ++a)
            for (int y = 0; y < nq; ++y)
                for (int b = 0; b < na; ++b)
                    t.at(a, b, x, y) = g(std::size_t(x) * std::size_t(na) + std::size_t(a),
                                         std::size_t(y) * std::size_t(na) + std::size_t(b))
                                           .real();
    t.validate();
    return t;
}

} // namespace selftest::strategies
