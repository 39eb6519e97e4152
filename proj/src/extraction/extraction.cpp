#include "selftest/extraction.hpp"

#include <algorithm>
#include <cmath>

namespace selftest::extraction {

using games::GameKind;
using qmath::ComplexMatrix;
using qmath::cplx;
using qmath::Reflection;
using qmath::StateVector;
using strategies::Strategy;

std::string to_string(Side s) { return s == Side::A ? "A" : "B"; }

std::string to_string(Basis b) {
    switch (b) {
        case Basis::Z: return "Z";
        case Basis::X: return "X";
        case Basis::W: return "W";
    }
    return "?";
}

namespace {
int ipow(int base, int exp) {
    int r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}
} // namespace

int contexts_per_copy(int copies, int radix) { return ipow(radix, copies - 1); }

int question_for_context(int copies, int radix, int copy, int value, int context) {
    if (copy < 0 || copy >= copies) throw std::invalid_argument("question_for_context: bad copy");
    if (value < 0 || value >= radix) throw std::invalid_argument("question_for_context: bad value");
    if (context < 0 || context >= contexts_per_copy(copies, radix))
        throw std::invalid_argument("question_for_context: bad context");
    std::vector<int> others =
        copies > 1 ? games::decode_question(context, copies - 1, radix) : std::vector<int>{};
    std::vector<int> digits;
    digits.reserve(std::size_t(copies));
    for (int i = 0, j = 0; i < copies; ++i) {
        if (i == copy)
            digits.push_back(value);
        else
            digits.push_back(others[std::size_t(j++)]);
    }
    return games::encode_question(digits, radix);
}

int context_of_question(int copies, int radix, int copy, int question) {
    std::vector<int> digits = games::decode_question(question, copies, radix);
    std::vector<int> others;
    others.reserve(std::size_t(copies - 1));
    for (int i = 0; i < copies; ++i)
        if (i != copy) others.push_back(digits[std::size_t(i)]);
    return others.empty() ? 0 : games::encode_question(others, radix);
}

namespace {

// Signed sum of one question's projectors by one answer digit's bit.
Reflection bit_marginal(const std::vector<ComplexMatrix>& family, int copies, int answer_radix,
                        int copy, int bit_in_digit) {
    const std::size_t d = family.front().rows();
    ComplexMatrix m(d, d);
    for (int a = 0; a < int(family.size()); ++a) {
        int digit = a;
        for (int i = copies - 1; i > copy; --i) digit /= answer_radix;
        digit %= answer_radix;
        const int bit = (bit_in_digit == 0) ? (digit >> 1) : (digit & 1);
        const int plain = answer_radix == 2 ? digit : bit;
        if (plain == 0)
            m += family[std::size_t(a)];
        else
            m -= family[std::size_t(a)];
    }
    return Reflection(std::move(m));
}

const std::vector<std::vector<ComplexMatrix>>& side_projectors(const Strategy& s, Side side) {
    return side == Side::A ? s.alice : s.bob;
}

} // namespace

MarginalObservable marginal_observable(const Strategy& s, Side side, int copy, Basis basis,
                                       int context) {
    if (s.spec.kind == GameKind::MagicSquare)
        throw std::invalid_argument("marginal_observable: use magic_square_marginals");
    if (basis == Basis::W) throw std::invalid_argument("marginal_observable: W is magic-square only");
    if (copy < 0 || copy >= s.spec.copies)
        throw std::invalid_argument("marginal_observable: copy out of range");

    const int value = basis == Basis::Z ? 0 : 1;
    const int question = question_for_context(s.spec.copies, 2, copy, value, context);
    MarginalObservable out;
    out.side = side;
    out.copy = copy;
    out.pair = copy;
    out.basis = basis;
    out.context = context;
    out.question = question;
    out.matrix = bit_marginal(side_projectors(s, side)[std::size_t(question)], s.spec.copies, 2,
                              copy, /*bit_in_digit=*/1);
    return out;
}

QuestionBit ms_question_bit(Side side, Basis basis, int which) {
    // Cell layout: Alice's rows are (Z1 Z2 .), (X2 X1 .), (W1 W2 .);
    // Bob's columns are (Z3 X4 .), (Z4 X3 .), (W3 W4 .).
    if (side == Side::A) {
        switch (basis) {
            case Basis::Z: return {0, which};
            case Basis::X: return {1, 1 - which};
            case Basis::W: return {2, which};
        }
    } else {
        switch (basis) {
            case Basis::Z: return {which, 0};
            case Basis::X: return {1 - which, 1};
            case Basis::W: return {2, which};
        }
    }
    throw std::invalid_argument("ms_question_bit: bad basis");
}

MagicSquareMarginals magic_square_marginals(const Strategy& s, Side side, int copy, int context) {
    if (s.spec.kind != GameKind::MagicSquare)
        throw std::invalid_argument("magic_square_marginals: not a magic-square strategy");
    if (copy < 0 || copy >= s.spec.copies)
        throw std::invalid_argument("magic_square_marginals: copy out of range");

    MagicSquareMarginals out;
    for (int q = 0; q < 3; ++q) {
        const int question = question_for_context(s.spec.copies, 3, copy, q, context);
        for (int bit = 0; bit < 2; ++bit) {
            MarginalObservable& mo = out.ops[std::size_t(q)][std::size_t(bit)];
            mo.side = side;
            mo.copy = copy;
            mo.context = context;
            mo.question = question;
            mo.matrix = bit_marginal(side_projectors(s, side)[std::size_t(question)],
                                     s.spec.copies, 4, copy, bit);
        }
    }
    // label the six by their cell role
    for (int which = 0; which < 2; ++which)
        for (Basis b : {Basis::Z, Basis::X, Basis::W}) {
            QuestionBit qb = ms_question_bit(side, b, which);
            MarginalObservable& mo = out.ops[std::size_t(qb.question_value)][std::size_t(qb.bit)];
            mo.basis = b;
            mo.pair = 2 * copy + which;
        }
    return out;
}

std::pair<ComplexMatrix, ComplexMatrix> averaged_pair(const Strategy& s, Side side, int copy) {
    const int contexts = contexts_per_copy(s.spec.copies, 2);
    const std::size_t d = side == Side::A ? s.dim_a() : s.dim_b();
    ComplexMatrix v(d, d), w(d, d);
    for (int k = 0; k < contexts; ++k) {
        v += marginal_observable(s, side, copy, Basis::Z, k).matrix.matrix();
        w += marginal_observable(s, side, copy, Basis::X, k).matrix.matrix();
    }
    const cplx scale(1.0 / contexts);
    v *= scale;
    w *= scale;
    return {std::move(v), std::move(w)};
}

std::pair<Reflection, Reflection> regularize_chsh(const ComplexMatrix& v, const ComplexMatrix& w) {
    return {qmath::sign_regularized(v + w), qmath::sign_regularized(v - w)};
}

std::pair<Reflection, Reflection> regularize_tilted(const ComplexMatrix& v, const ComplexMatrix& w,
                                                    const games::TiltParams& params) {
    if (!(params.mu > 0.0)) throw std::invalid_argument("regularize_tilted: mu must be positive");
    const cplx zs(1.0 / (2.0 * std::cos(params.mu)));
    const cplx xs(1.0 / (2.0 * std::sin(params.mu)));
    ComplexMatrix zb = v + w;
    ComplexMatrix xb = v - w;
    zb *= zs;
    xb *= xs;
    return {qmath::sign_regularized(zb), qmath::sign_regularized(xb)};
}

namespace {

double pair_expectation(const StateVector& psi, const ComplexMatrix& on_a,
                        const ComplexMatrix& on_b) {
    StateVector left = qmath::apply_factor(on_a, psi, 0);
    StateVector right = qmath::apply_factor(on_b, psi, 1);
    return qmath::inner(left, right).real();
}

double alice_expectation(const StateVector& psi, const ComplexMatrix& on_a) {
    StateVector left = qmath::apply_factor(on_a, psi, 0);
    return qmath::inner(psi, left).real();
}

} // namespace

double per_copy_context_value(const Strategy& s, int copy, int context) {
    auto [vb, wb] = averaged_pair(s, Side::B, copy);
    const ComplexMatrix za = marginal_observable(s, Side::A, copy, Basis::Z, context).matrix.matrix();
    const ComplexMatrix xa = marginal_observable(s, Side::A, copy, Basis::X, context).matrix.matrix();
    double value = pair_expectation(s.state, za, vb + wb) + pair_expectation(s.state, xa, vb - wb);
    if (s.spec.kind == GameKind::Tilted) {
        games::TiltParams tp = games::tilt_params(s.spec.thetas[std::size_t(copy)]);
        value += tp.alpha * alice_expectation(s.state, za);
    }
    return value;
}

std::vector<double> per_copy_context_values(const Strategy& s, int copy) {
    const int contexts = contexts_per_copy(s.spec.copies, 2);
    auto [vb, wb] = averaged_pair(s, Side::B, copy);
    const ComplexMatrix sum = vb + wb;
    const ComplexMatrix diff = vb - wb;
    games::TiltParams tp;
    if (s.spec.kind == GameKind::Tilted) tp = games::tilt_params(s.spec.thetas[std::size_t(copy)]);

    std::vector<double> out;
    out.reserve(std::size_t(contexts));
    for (int k = 0; k < contexts; ++k) {
        const ComplexMatrix za = marginal_observable(s, Side::A, copy, Basis::Z, k).matrix.matrix();
        const ComplexMatrix xa = marginal_observable(s, Side::A, copy, Basis::X, k).matrix.matrix();
        double v = pair_expectation(s.state, za, sum) + pair_expectation(s.state, xa, diff);
        if (s.spec.kind == GameKind::Tilted) v += tp.alpha * alice_expectation(s.state, za);
        out.push_back(v);
    }
    return out;
}

namespace {

// The nine cell conditions in terms of (question value, first/second/both
// bits) per party; the last carries the third column's -1.
struct MsCondition {
    int qa, qb;
    int abits, bbits;  // 0 = first bit, 1 = second bit, 2 = both (product)
    double sign;
};

constexpr MsCondition kMsConditions[9] = {
    {0, 0, 0, 0, +1.0}, {0, 1, 1, 0, +1.0}, {1, 1, 1, 1, +1.0},
    {1, 0, 0, 1, +1.0}, {0, 2, 2, 0, +1.0}, {1, 2, 2, 1, +1.0},
    {2, 0, 0, 2, +1.0}, {2, 1, 1, 2, +1.0}, {2, 2, 2, 2, -1.0},
};

// Per (question value): the two bit marginals and their product, either at
// one context or averaged over all contexts (same-context products only).
struct MsSideOperators {
    // [question value][0: first bit, 1: second bit, 2: product]
    std::array<std::array<ComplexMatrix, 3>, 3> op;
};

MsSideOperators ms_context_operators(const Strategy& s, Side side, int copy, int context) {
    MagicSquareMarginals mm = magic_square_marginals(s, side, copy, context);
    MsSideOperators out;
    for (int q = 0; q < 3; ++q) {
        const ComplexMatrix& b0 = mm.ops[std::size_t(q)][0].matrix.matrix();
        const ComplexMatrix& b1 = mm.ops[std::size_t(q)][1].matrix.matrix();
        out.op[std::size_t(q)][0] = b0;
        out.op[std::size_t(q)][1] = b1;
        out.op[std::size_t(q)][2] = qmath::multiply(b0, b1);
    }
    return out;
}

MsSideOperators ms_averaged_operators(const Strategy& s, Side side, int copy) {
    const int contexts = contexts_per_copy(s.spec.copies, 3);
    const std::size_t d = side == Side::A ? s.dim_a() : s.dim_b();
    MsSideOperators out;
    for (auto& row : out.op)
        for (auto& m : row) m = ComplexMatrix(d, d);
    for (int k = 0; k < contexts; ++k) {
        MsSideOperators ctx = ms_context_operators(s, side, copy, k);
        for (int q = 0; q < 3; ++q)
            for (int j = 0; j < 3; ++j) out.op[std::size_t(q)][std::size_t(j)] += ctx.op[std::size_t(q)][std::size_t(j)];
    }
    const cplx scale(1.0 / contexts);
    for (auto& row : out.op)
        for (auto& m : row) m *= scale;
    return out;
}

std::array<double, 9> ms_values(const StateVector& psi, const MsSideOperators& alice,
                                const MsSideOperators& bob) {
    std::array<double, 9> out{};
    for (int t = 0; t < 9; ++t) {
        const MsCondition& c = kMsConditions[t];
        const ComplexMatrix& oa = alice.op[std::size_t(c.qa)][std::size_t(c.abits)];
        const ComplexMatrix& ob = bob.op[std::size_t(c.qb)][std::size_t(c.bbits)];
        out[std::size_t(t)] = c.sign * pair_expectation(psi, oa, ob);
    }
    return out;
}

} // namespace

std::vector<std::array<double, 9>> ms_context_values_alice(const Strategy& s, int copy) {
    const int contexts = contexts_per_copy(s.spec.copies, 3);
    MsSideOperators bob = ms_averaged_operators(s, Side::B, copy);
    std::vector<std::array<double, 9>> out;
    out.reserve(std::size_t(contexts));
    for (int k = 0; k < contexts; ++k)
        out.push_back(ms_values(s.state, ms_context_operators(s, Side::A, copy, k), bob));
    return out;
}

std::vector<std::array<double, 9>> ms_context_values_bob(const Strategy& s, int copy,
                                                         int alice_context) {
    const int contexts = contexts_per_copy(s.spec.copies, 3);
    MsSideOperators alice = ms_context_operators(s, Side::A, copy, alice_context);
    std::vector<std::array<double, 9>> out;
    out.reserve(std::size_t(contexts));
    for (int k = 0; k < contexts; ++k)
        out.push_back(ms_values(s.state, alice, ms_context_operators(s, Side::B, copy, k)));
    return out;
}

int max_bad_contexts(int contexts, int radix) {
    const int denom = radix * radix;
    const int ceil_div = (contexts + denom - 1) / denom;
    return std::max(0, ceil_div - 1);
}

namespace {
// Slack so that an exactly-saturated premise is not rejected for rounding.
constexpr double kPremiseSlack = 1e-9;
} // namespace

std::vector<int> good_set(const std::vector<double>& context_values, double optimum,
                          double epsilon, int radix) {
    if (context_values.empty()) throw std::invalid_argument("good_set: no context values");
    double mean = 0.0;
    for (double v : context_values) mean += v;
    mean /= double(context_values.size());
    if (mean < optimum - epsilon - kPremiseSlack)
        throw premise_violation("good_set: per-copy premise does not hold");

    std::vector<int> good;
    for (int k = 0; k < int(context_values.size()); ++k)
        if (context_values[std::size_t(k)] >= optimum - 5.0 * epsilon - kPremiseSlack)
            good.push_back(k);

    const int bad = int(context_values.size()) - int(good.size());
    if (bad > max_bad_contexts(int(context_values.size()), radix))
        throw premise_violation(
            "good_set: bad-context bound violated while the premise holds (implementation bug)");
    return good;
}

std::vector<int> good_set_magic(const std::vector<std::array<double, 9>>& context_values,
                                double epsilon) {
    if (context_values.empty()) throw std::invalid_argument("good_set_magic: no context values");
    for (int t = 0; t < 9; ++t) {
        double mean = 0.0;
        for (const auto& v : context_values) mean += v[std::size_t(t)];
        mean /= double(context_values.size());
        if (mean < 1.0 - epsilon - kPremiseSlack)
            throw premise_violation("good_set_magic: per-copy premise does not hold");
    }
    std::vector<int> good;
    for (int k = 0; k < int(context_values.size()); ++k) {
        bool ok = true;
        for (double v : context_values[std::size_t(k)])
            ok = ok && v >= 1.0 - 90.0 * epsilon - kPremiseSlack;
        if (ok) good.push_back(k);
    }
    const int bad = int(context_values.size()) - int(good.size());
    if (bad > max_bad_contexts(int(context_values.size()), 3))
        throw premise_violation(
            "good_set_magic: bad-context bound violated while the premise holds (implementation bug)");
    return good;
}

std::pair<int, int> pick_commuting_pair(int copies, int radix, int copy_i, int digit_i,
                                        int copy_j, int digit_j, const std::vector<int>& good_i,
                                        const std::vector<int>& good_j) {
    if (copy_i == copy_j && digit_i != digit_j)
        throw premise_violation("pick_commuting_pair: same copy, different digits never share a question");
    std::vector<bool> good_j_mask(std::size_t(contexts_per_copy(copies, radix)), false);
    for (int l : good_j) good_j_mask[std::size_t(l)] = true;

    for (int k : good_i) {
        const int q = question_for_context(copies, radix, copy_i, digit_i, k);
        const std::vector<int> digits = games::decode_question(q, copies, radix);
        if (digits[std::size_t(copy_j)] != digit_j) continue;
        const int l = context_of_question(copies, radix, copy_j, q);
        if (good_j_mask[std::size_t(l)]) return {k, l};
    }
    throw premise_violation("pick_commuting_pair: no commuting pair with both contexts good");
}

AnticommuteRepair exact_anticommute(const Reflection& x, const Reflection& z,
                                    const StateVector& psi, std::size_t factor, double zero_tol) {
    if (!x.balanced() || !z.balanced())
        throw std::invalid_argument("exact_anticommute: operands must be balanced reflections");
    const std::size_t d = x.dim();
    if (z.dim() != d) throw std::invalid_argument("exact_anticommute: dimension mismatch");
    const std::size_t m = d / 2;

    AnticommuteRepair out;
    {
        ComplexMatrix anti = qmath::multiply(x.matrix(), z.matrix());
        anti += qmath::multiply(z.matrix(), x.matrix());
        out.measured_anticommutator = qmath::apply_factor(anti, psi, factor).norm();
    }

    // Work in X's eigenbasis W = [plus | minus]; the anticommuting part of Z
    // is its off-diagonal block Q, completed to a unitary.
    qmath::EigResult ex = qmath::herm_eig(x.matrix());
    ComplexMatrix w(d, d);  // plus eigenvectors first (ascending order puts them last)
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t r = 0; r < d; ++r) {
            w(r, c) = ex.eigenvectors(r, m + c);
            w(r, m + c) = ex.eigenvectors(r, c);
        }
    ComplexMatrix zt = qmath::multiply(qmath::multiply(w.adjoint(), z.matrix()), w);
    ComplexMatrix q(m, m);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) q(r, c) = zt(r, m + c);

    // Polar part of Q via its Gram spectrum; zero singular directions get
    // paired through the orthogonal complements of the ranges.
    qmath::EigResult eg = qmath::herm_eig(qmath::multiply(q.adjoint(), q));
    ComplexMatrix b(m, m);
    std::vector<std::size_t> kernel_cols;
    ComplexMatrix range_proj(m, m);  // sum of b_i b_i^dag over nonzero directions
    for (std::size_t c = 0; c < m; ++c) {
        const double sigma = std::sqrt(std::max(0.0, eg.eigenvalues[c]));
        if (sigma <= zero_tol) {
            kernel_cols.push_back(c);
            continue;
        }
        // image column b_i = Q v_i / sigma
        for (std::size_t r = 0; r < m; ++r) {
            cplx acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) acc += q(r, k) * eg.eigenvectors(k, c);
            b(r, c) = acc / sigma;
        }
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t r2 = 0; r2 < m; ++r2)
                range_proj(r, r2) += b(r, c) * std::conj(b(r2, c));
    }
    if (!kernel_cols.empty()) {
        // orthonormal basis of the range's complement, paired with kernel directions
        ComplexMatrix comp = ComplexMatrix::identity(m);
        comp -= range_proj;
        qmath::EigResult ec = qmath::herm_eig(comp);
        std::size_t next = m;  // complement eigenvectors with eigenvalue 1 sit at the top
        for (std::size_t kc : kernel_cols) {
            --next;
            if (ec.eigenvalues[next] < 0.5)
                throw numerical_degeneracy("exact_anticommute: range completion failed");
            for (std::size_t r = 0; r < m; ++r) b(r, kc) = ec.eigenvectors(r, next);
        }
    }
    // B = sum_i b_i v_i^dag
    ComplexMatrix unitary = qmath::multiply(b, eg.eigenvectors.adjoint());

    ComplexMatrix zprime_t(d, d);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) {
            zprime_t(r, m + c) = unitary(r, c);
            zprime_t(m + c, r) = std::conj(unitary(r, c));
        }
    ComplexMatrix zprime = qmath::multiply(qmath::multiply(w, zprime_t), w.adjoint());
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cplx avg = 0.5 * (zprime(i, j) + std::conj(zprime(j, i)));
            zprime(i, j) = avg;
            zprime(j, i) = std::conj(avg);
        }
    out.z_prime = Reflection(std::move(zprime));

    ComplexMatrix dz = z.matrix() - out.z_prime.matrix();
    out.distance = qmath::apply_factor(dz, psi, factor).norm();
    return out;
}

ExtractionBundle build_bundle(const Strategy& s) {
    ExtractionBundle bundle;
    bundle.spec = s.spec;
    const int n = s.spec.copies;

    if (s.spec.kind != GameKind::MagicSquare) {
        bundle.pairs = n;
        const int radix = 2;
        std::vector<std::vector<double>> values;
        values.reserve(std::size_t(n));
        double max_deficit = 0.0;
        for (int i = 0; i < n; ++i) {
            values.push_back(per_copy_context_values(s, i));
            double mean = 0.0;
            for (double v : values.back()) mean += v;
            mean /= double(values.back().size());
            bundle.per_copy_values.push_back(mean);
            const double optimum =
                s.spec.kind == GameKind::Tilted
                    ? games::tilted_optimum(games::tilt_params(s.spec.thetas[std::size_t(i)]).alpha)
                    : 2.0 * std::sqrt(2.0);
            max_deficit = std::max(max_deficit, optimum - mean);
        }
        bundle.epsilon = std::max(max_deficit, 0.0);

        for (int i = 0; i < n; ++i) {
            const double optimum =
                s.spec.kind == GameKind::Tilted
                    ? games::tilted_optimum(games::tilt_params(s.spec.thetas[std::size_t(i)]).alpha)
                    : 2.0 * std::sqrt(2.0);
            bundle.good_sets.push_back(
                good_set(values[std::size_t(i)], optimum, bundle.epsilon, radix));
            bundle.chosen_contexts.push_back(bundle.good_sets.back().front());

            auto [vb, wb] = averaged_pair(s, Side::B, i);
            auto [zb, xb] = s.spec.kind == GameKind::Tilted
                                ? regularize_tilted(vb, wb,
                                                    games::tilt_params(s.spec.thetas[std::size_t(i)]))
                                : regularize_chsh(vb, wb);
            const int k = bundle.chosen_contexts.back();
            PairOperators ops;
            ops.z_a = marginal_observable(s, Side::A, i, Basis::Z, k).matrix;
            ops.x_a = marginal_observable(s, Side::A, i, Basis::X, k).matrix;
            ops.z_b = std::move(zb);
            ops.x_b = std::move(xb);
            bundle.ops.push_back(std::move(ops));
            bundle.v_b.push_back(std::move(vb));
            bundle.w_b.push_back(std::move(wb));
        }
        return bundle;
    }

    // Magic square: Alice pass fixes her contexts, Bob pass reruns the
    // argument with roles swapped against Alice's chosen reflections.
    bundle.pairs = 2 * n;
    std::vector<std::vector<std::array<double, 9>>> alice_vals;
    alice_vals.reserve(std::size_t(n));
    double max_deficit = 0.0;
    for (int i = 0; i < n; ++i) {
        alice_vals.push_back(ms_context_values_alice(s, i));
        double worst = 1.0;
        for (int t = 0; t < 9; ++t) {
            double mean = 0.0;
            for (const auto& v : alice_vals.back()) mean += v[std::size_t(t)];
            mean /= double(alice_vals.back().size());
            worst = std::min(worst, mean);
        }
        bundle.per_copy_values.push_back(worst);
        max_deficit = std::max(max_deficit, 1.0 - worst);
    }
    bundle.epsilon = std::max(max_deficit, 0.0);

    std::vector<int> alice_contexts;
    for (int i = 0; i < n; ++i) {
        bundle.good_sets.push_back(good_set_magic(alice_vals[std::size_t(i)], bundle.epsilon));
        alice_contexts.push_back(bundle.good_sets.back().front());
    }

    double bob_deficit = 0.0;
    std::vector<std::vector<std::array<double, 9>>> bob_vals;
    bob_vals.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        bob_vals.push_back(ms_context_values_bob(s, i, alice_contexts[std::size_t(i)]));
        for (int t = 0; t < 9; ++t) {
            double mean = 0.0;
            for (const auto& v : bob_vals.back()) mean += v[std::size_t(t)];
            mean /= double(bob_vals.back().size());
            bob_deficit = std::max(bob_deficit, 1.0 - mean);
        }
    }
    bundle.epsilon_bob = std::max(bob_deficit, 0.0);

    std::vector<int> bob_contexts;
    for (int i = 0; i < n; ++i) {
        bundle.good_sets.push_back(good_set_magic(bob_vals[std::size_t(i)], bundle.epsilon_bob));
        bob_contexts.push_back(bundle.good_sets.back().front());
    }
    bundle.chosen_contexts = alice_contexts;
    bundle.chosen_contexts.insert(bundle.chosen_contexts.end(), bob_contexts.begin(),
                                  bob_contexts.end());

    for (int i = 0; i < n; ++i) {
        MagicSquareMarginals ma =
            magic_square_marginals(s, Side::A, i, alice_contexts[std::size_t(i)]);
        MagicSquareMarginals mb = magic_square_marginals(s, Side::B, i, bob_contexts[std::size_t(i)]);
        for (int which = 0; which < 2; ++which) {
            PairOperators ops;
            const QuestionBit za = ms_question_bit(Side::A, Basis::Z, which);
            const QuestionBit xa = ms_question_bit(Side::A, Basis::X, which);
            const QuestionBit zb = ms_question_bit(Side::B, Basis::Z, which);
            const QuestionBit xb = ms_question_bit(Side::B, Basis::X, which);
            ops.z_a = ma.ops[std::size_t(za.question_value)][std::size_t(za.bit)].matrix;
            ops.x_a = ma.ops[std::size_t(xa.question_value)][std::size_t(xa.bit)].matrix;
            ops.z_b = mb.ops[std::size_t(zb.question_value)][std::size_t(zb.bit)].matrix;
            ops.x_b = mb.ops[std::size_t(xb.question_value)][std::size_t(xb.bit)].matrix;
            bundle.ops.push_back(std::move(ops));
        }
    }
    return bundle;
}

} // namespace selftest::extraction
