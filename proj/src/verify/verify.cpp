#include "selftest/verify.hpp"

#include <cmath>

namespace selftest::verify {

using extraction::ExtractionBundle;
using extraction::Side;
using games::GameKind;
using qmath::ComplexMatrix;
using qmath::StateVector;

double HypothesisNorms::get(const std::string& label) const {
    for (const NormEntry& e : entries)
        if (e.label == label) return e.value;
    throw std::invalid_argument("no norm entry labeled " + label);
}

namespace {

double apply_norm(const ComplexMatrix& m, const StateVector& psi, std::size_t factor) {
    return qmath::apply_factor(m, psi, factor).norm();
}

// || (M_A (x) I - I (x) M_B) psi ||
double agreement_norm(const ComplexMatrix& a, const ComplexMatrix& b, const StateVector& psi) {
    StateVector left = qmath::apply_factor(a, psi, 0);
    StateVector right = qmath::apply_factor(b, psi, 1);
    return qmath::distance(left, right);
}

ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix m = qmath::multiply(a, b);
    m += qmath::multiply(b, a);
    return m;
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix m = qmath::multiply(a, b);
    m -= qmath::multiply(b, a);
    return m;
}

// || sin(th) X_A (I + Z_B) psi - cos(th) X_B (I - Z_A) psi ||
double tilted_relation_norm(const ComplexMatrix& xa, const ComplexMatrix& za,
                            const ComplexMatrix& xb, const ComplexMatrix& zb, double theta,
                            const StateVector& psi) {
    StateVector zpsi_b = qmath::apply_factor(zb, psi, 1);
    StateVector lhs_in = psi;
    for (std::size_t i = 0; i < psi.dim(); ++i) lhs_in[i] += zpsi_b[i];
    StateVector lhs = qmath::apply_factor(xa, lhs_in, 0);

    StateVector zpsi_a = qmath::apply_factor(za, psi, 0);
    StateVector rhs_in = psi;
    for (std::size_t i = 0; i < psi.dim(); ++i) rhs_in[i] -= zpsi_a[i];
    StateVector rhs = qmath::apply_factor(xb, rhs_in, 1);

    const double st = std::sin(theta), ct = std::cos(theta);
    double acc = 0.0;
    for (std::size_t i = 0; i < psi.dim(); ++i) acc += std::norm(st * lhs[i] - ct * rhs[i]);
    return std::sqrt(acc);
}

struct Collector {
    std::vector<NormEntry> entries;
    double max_norm = 0.0;
    void add(std::string label, double value) {
        max_norm = std::max(max_norm, value);
        entries.push_back({std::move(label), value});
    }
};

std::string idx(int i) { return std::to_string(i); }

} // namespace

HypothesisNorms hypothesis_norms(const ExtractionBundle& bundle, const StateVector& psi) {
    Collector c;
    const bool tilted = bundle.spec.kind == GameKind::Tilted;
    const int pairs = bundle.pairs;

    for (int p = 0; p < pairs; ++p) {
        const auto& ops = bundle.ops[std::size_t(p)];
        c.add("z_agreement[" + idx(p) + "]",
              agreement_norm(ops.z_a.matrix(), ops.z_b.matrix(), psi));
        if (tilted) {
            const double theta = bundle.spec.thetas[std::size_t(p)];
            c.add("tilted_xz_relation[" + idx(p) + "]",
                  tilted_relation_norm(ops.x_a.matrix(), ops.z_a.matrix(), ops.x_b.matrix(),
                                       ops.z_b.matrix(), theta, psi));
        } else {
            c.add("x_agreement[" + idx(p) + "]",
                  agreement_norm(ops.x_a.matrix(), ops.x_b.matrix(), psi));
        }
        c.add("anticommutator[A," + idx(p) + "]",
              apply_norm(anticommutator(ops.z_a.matrix(), ops.x_a.matrix()), psi, 0));
        c.add("anticommutator[B," + idx(p) + "]",
              apply_norm(anticommutator(ops.z_b.matrix(), ops.x_b.matrix()), psi, 1));
    }

    for (int p = 0; p < pairs; ++p)
        for (int q = p + 1; q < pairs; ++q)
            for (int side = 0; side < 2; ++side)
                for (int mp = 0; mp < 2; ++mp)
                    for (int mq = 0; mq < 2; ++mq) {
                        const auto& op_p = bundle.ops[std::size_t(p)];
                        const auto& op_q = bundle.ops[std::size_t(q)];
                        const ComplexMatrix& m1 =
                            side == 0 ? (mp == 0 ? op_p.z_a.matrix() : op_p.x_a.matrix())
                                      : (mp == 0 ? op_p.z_b.matrix() : op_p.x_b.matrix());
                        const ComplexMatrix& m2 =
                            side == 0 ? (mq == 0 ? op_q.z_a.matrix() : op_q.x_a.matrix())
                                      : (mq == 0 ? op_q.z_b.matrix() : op_q.x_b.matrix());
                        std::string label = std::string("commutator[") +
                                            (side == 0 ? "A," : "B,") + (mp == 0 ? "Z" : "X") +
                                            idx(p) + "," + (mq == 0 ? "Z" : "X") + idx(q) + "]";
                        c.add(std::move(label),
                              apply_norm(commutator(m1, m2), psi, std::size_t(side)));
                    }

    HypothesisNorms out;
    out.entries = std::move(c.entries);
    out.max_norm = c.max_norm;
    return out;
}

HypothesisNorms lemma_conclusions(const ExtractionBundle& bundle, const strategies::Strategy& s) {
    Collector c;
    const StateVector& psi = s.state;
    const GameKind kind = bundle.spec.kind;
    const int n = bundle.spec.copies;

    if (kind != GameKind::MagicSquare) {
        const int contexts = extraction::contexts_per_copy(n, 2);
        for (int i = 0; i < n; ++i) {
            const auto& ops = bundle.ops[std::size_t(i)];
            for (int k = 0; k < contexts; ++k) {
                const ComplexMatrix za =
                    extraction::marginal_observable(s, Side::A, i, extraction::Basis::Z, k)
                        .matrix.matrix();
                const ComplexMatrix xa =
                    extraction::marginal_observable(s, Side::A, i, extraction::Basis::X, k)
                        .matrix.matrix();
                c.add("z_marginal_agreement[" + idx(i) + "," + idx(k) + "]",
                      agreement_norm(za, ops.z_b.matrix(), psi));
                if (kind == GameKind::Tilted) {
                    c.add("tilted_xz_relation[" + idx(i) + "," + idx(k) + "]",
                          tilted_relation_norm(xa, za, ops.x_b.matrix(), ops.z_b.matrix(),
                                               bundle.spec.thetas[std::size_t(i)], psi));
                } else {
                    c.add("x_marginal_agreement[" + idx(i) + "," + idx(k) + "]",
                          agreement_norm(xa, ops.x_b.matrix(), psi));
                }
                c.add("alice_anticommutator[" + idx(i) + "," + idx(k) + "]",
                      apply_norm(anticommutator(za, xa), psi, 0));
            }
            c.add("bob_anticommutator[" + idx(i) + "]",
                  apply_norm(anticommutator(ops.z_b.matrix(), ops.x_b.matrix()), psi, 1));
        }
        // cross-copy commutation of the regularized Bob operators on the state
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (int mi = 0; mi < 2; ++mi)
                    for (int mj = 0; mj < 2; ++mj) {
                        const ComplexMatrix& a = mi == 0 ? bundle.ops[std::size_t(i)].z_b.matrix()
                                                         : bundle.ops[std::size_t(i)].x_b.matrix();
                        const ComplexMatrix& b = mj == 0 ? bundle.ops[std::size_t(j)].z_b.matrix()
                                                         : bundle.ops[std::size_t(j)].x_b.matrix();
                        c.add(std::string("bob_commutator[") + (mi == 0 ? "Z" : "X") + idx(i) +
                                  "," + (mj == 0 ? "Z" : "X") + idx(j) + "]",
                              apply_norm(commutator(a, b), psi, 1));
                    }
        // cross-copy commutation of Alice's marginals over all context pairs
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (int mi = 0; mi < 2; ++mi)
                    for (int mj = 0; mj < 2; ++mj)
                        for (int k = 0; k < contexts; ++k)
                            for (int l = 0; l < contexts; ++l) {
                                const ComplexMatrix a =
                                    extraction::marginal_observable(
                                        s, Side::A, i, mi == 0 ? extraction::Basis::Z
                                                               : extraction::Basis::X, k)
                                        .matrix.matrix();
                                const ComplexMatrix b =
                                    extraction::marginal_observable(
                                        s, Side::A, j, mj == 0 ? extraction::Basis::Z
                                                               : extraction::Basis::X, l)
                                        .matrix.matrix();
                                c.add(std::string("alice_commutator[") + (mi == 0 ? "Z" : "X") +
                                          idx(i) + "(" + idx(k) + ")," + (mj == 0 ? "Z" : "X") +
                                          idx(j) + "(" + idx(l) + ")]",
                                      apply_norm(commutator(a, b), psi, 0));
                            }
    } else {
        // Wu-style block relations for every extracted pair, then cross-pair
        // commutators; both coincide with the robust hypothesis list.
        for (int p = 0; p < bundle.pairs; ++p) {
            const auto& ops = bundle.ops[std::size_t(p)];
            c.add("z_agreement[" + idx(p) + "]",
                  agreement_norm(ops.z_a.matrix(), ops.z_b.matrix(), psi));
            c.add("x_agreement[" + idx(p) + "]",
                  agreement_norm(ops.x_a.matrix(), ops.x_b.matrix(), psi));
            c.add("alice_anticommutator[" + idx(p) + "]",
                  apply_norm(anticommutator(ops.z_a.matrix(), ops.x_a.matrix()), psi, 0));
            c.add("bob_anticommutator[" + idx(p) + "]",
                  apply_norm(anticommutator(ops.z_b.matrix(), ops.x_b.matrix()), psi, 1));
        }
        for (int p = 0; p < bundle.pairs; ++p)
            for (int q = p + 1; q < bundle.pairs; ++q)
                for (int side = 0; side < 2; ++side)
                    for (int mp = 0; mp < 2; ++mp)
                        for (int mq = 0; mq < 2; ++mq) {
                            const auto& op_p = bundle.ops[std::size_t(p)];
                            const auto& op_q = bundle.ops[std::size_t(q)];
                            const ComplexMatrix& m1 =
                                side == 0 ? (mp == 0 ? op_p.z_a.matrix() : op_p.x_a.matrix())
                                          : (mp == 0 ? op_p.z_b.matrix() : op_p.x_b.matrix());
                            const ComplexMatrix& m2 =
                                side == 0 ? (mq == 0 ? op_q.z_a.matrix() : op_q.x_a.matrix())
                                          : (mq == 0 ? op_q.z_b.matrix() : op_q.x_b.matrix());
                            c.add(std::string("commutator[") + (side == 0 ? "A," : "B,") +
                                      (mp == 0 ? "Z" : "X") + idx(p) + "," + (mq == 0 ? "Z" : "X") +
                                      idx(q) + "]",
                                  apply_norm(commutator(m1, m2), psi, std::size_t(side)));
                        }
    }

    HypothesisNorms out;
    out.entries = std::move(c.entries);
    out.max_norm = c.max_norm;
    return out;
}

namespace {

// Solve the 3x3 normal equations by Gaussian elimination with partial pivoting.
void solve3(double a[3][3], double b[3], double x[3]) {
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[perm[r]][col]) > std::abs(a[perm[pivot]][col])) pivot = r;
        std::swap(perm[col], perm[pivot]);
        const double diag = a[perm[col]][col];
        if (std::abs(diag) < 1e-14) throw std::invalid_argument("scaling_fit: degenerate grid");
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[perm[r]][col] / diag;
            for (int cc = col; cc < 3; ++cc) a[perm[r]][cc] -= f * a[perm[col]][cc];
            b[perm[r]] -= f * b[perm[col]];
        }
    }
    for (int col = 2; col >= 0; --col) {
        double acc = b[perm[col]];
        for (int cc = col + 1; cc < 3; ++cc) acc -= a[perm[col]][cc] * x[cc];
        x[col] = acc / a[perm[col]][col];
    }
}

// Inverse of a symmetric positive definite 3x3 (for OLS covariance).
void invert3(const double a[3][3], double inv[3][3]) {
    double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                 a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                 a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if (std::abs(det) < 1e-14) throw std::invalid_argument("scaling_fit: degenerate grid");
    inv[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
    inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
    inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
    inv[1][0] = inv[0][1];
    inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
    inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
    inv[2][0] = inv[0][2];
    inv[2][1] = inv[1][2];
    inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
}

} // namespace

ScalingFit scaling_fit(const std::vector<ScalingSample>& samples, double floor) {
    std::vector<ScalingSample> used;
    for (const ScalingSample& s : samples)
        if (s.distance > floor && s.epsilon > 0.0) used.push_back(s);

    std::vector<int> ns;
    std::vector<double> eps;
    for (const auto& s : used) {
        bool have_n = false, have_e = false;
        for (int v : ns) have_n = have_n || v == s.n;
        for (double v : eps) have_e = have_e || std::abs(v - s.epsilon) < 1e-15;
        if (!have_n) ns.push_back(s.n);
        if (!have_e) eps.push_back(s.epsilon);
    }
    if (used.size() < 6 || ns.size() < 2 || eps.size() < 3)
        throw std::invalid_argument(
            "scaling_fit: need >= 6 samples above the floor spanning >= 2 n and >= 3 epsilon");

    double xtx[3][3] = {};
    double xty[3] = {};
    for (const auto& s : used) {
        const double row[3] = {1.0, std::log(double(s.n)), std::log(s.epsilon)};
        const double y = std::log(s.distance);
        for (int i = 0; i < 3; ++i) {
            xty[i] += row[i] * y;
            for (int j = 0; j < 3; ++j) xtx[i][j] += row[i] * row[j];
        }
    }

    double beta[3];
    {
        double a[3][3];
        double b[3];
        for (int i = 0; i < 3; ++i) {
            b[i] = xty[i];
            for (int j = 0; j < 3; ++j) a[i][j] = xtx[i][j];
        }
        solve3(a, b, beta);
    }

    double rss = 0.0;
    for (const auto& s : used) {
        const double pred = beta[0] + beta[1] * std::log(double(s.n)) + beta[2] * std::log(s.epsilon);
        const double r = std::log(s.distance) - pred;
        rss += r * r;
    }
    const double dof = double(used.size()) - 3.0;
    const double sigma2 = dof > 0 ? rss / dof : 0.0;

    double inv[3][3];
    invert3(xtx, inv);

    ScalingFit fit;
    fit.c = std::exp(beta[0]);
    fit.p_n = beta[1];
    fit.p_eps = beta[2];
    fit.se_p_n = std::sqrt(std::max(0.0, sigma2 * inv[1][1]));
    fit.se_p_eps = std::sqrt(std::max(0.0, sigma2 * inv[2][2]));
    fit.residual_rms = std::sqrt(rss / double(used.size()));
    fit.samples_used = used.size();
    return fit;
}

bool ScalingFit::n_exponent_in_band(double target) const {
    return std::abs(target - p_n) <= 1.96 * se_p_n;
}

bool ScalingFit::eps_exponent_in_band(double target) const {
    return std::abs(target - p_eps) <= 1.96 * se_p_eps;
}

SlopeFit slope_fit(const std::vector<std::pair<double, double>>& eps_distance, double floor) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (const auto& [e, d] : eps_distance) {
        if (d <= floor || e <= 0.0) continue;
        const double x = std::log(e), y = std::log(d);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) throw std::invalid_argument("slope_fit: not enough samples above the floor");
    const double denom = double(m) * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) throw std::invalid_argument("slope_fit: degenerate abscissa");
    SlopeFit fit;
    fit.slope = (double(m) * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / double(m);
    double rss = 0.0;
    for (const auto& [e, d] : eps_distance) {
        if (d <= floor || e <= 0.0) continue;
        const double r = std::log(d) - fit.intercept - fit.slope * std::log(e);
        rss += r * r;
    }
    fit.residual_rms = std::sqrt(rss / double(m));
    fit.samples_used = m;
    return fit;
}

} // namespace selftest::verify
