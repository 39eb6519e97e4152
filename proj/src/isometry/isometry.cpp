#include "selftest/isometry.hpp"

#include <cmath>

#include "json.hpp"

namespace selftest::isometry {

using extraction::ExtractionBundle;
using extraction::Side;
using games::GameKind;
using qmath::ComplexMatrix;
using qmath::cplx;
using qmath::Reflection;
using qmath::StateVector;

SwapIsometry build_swap(const std::vector<Reflection>& z_ops, const std::vector<Reflection>& x_ops,
                        Side side) {
    if (z_ops.empty() || z_ops.size() != x_ops.size())
        throw std::invalid_argument("build_swap: need equal-length nonempty reflection lists");
    const std::size_t d = z_ops.front().dim();
    for (const Reflection& r : z_ops)
        if (r.dim() != d) throw std::invalid_argument("build_swap: mixed dimensions");
    for (const Reflection& r : x_ops)
        if (r.dim() != d) throw std::invalid_argument("build_swap: mixed dimensions");

    const int n = int(z_ops.size());
    const std::size_t anc = std::size_t(1) << n;

    SwapIsometry iso;
    iso.side = side;
    iso.input_dim = d;
    iso.qubits = n;
    iso.map = ComplexMatrix(d * anc, d);

    const ComplexMatrix ident = ComplexMatrix::identity(d);
    for (std::size_t b = 0; b < anc; ++b) {
        // T_b = prod_i f_i with f_i = (I+Z_i)/2 for ancilla bit 0,
        // X_i (I-Z_i)/2 for bit 1; qubit 1 is the most significant bit.
        ComplexMatrix t = ident;
        for (int i = 0; i < n; ++i) {
            const bool one = (b >> (n - 1 - i)) & 1u;
            ComplexMatrix f = ident;
            if (one) {
                f -= z_ops[std::size_t(i)].matrix();
                f = qmath::multiply(x_ops[std::size_t(i)].matrix(), f);
            } else {
                f += z_ops[std::size_t(i)].matrix();
            }
            f *= cplx(0.5);
            t = qmath::multiply(t, f);
        }
        for (std::size_t o = 0; o < d; ++o)
            for (std::size_t in = 0; in < d; ++in) iso.map(o * anc + b, in) = t(o, in);
    }

    ComplexMatrix gramm = qmath::multiply(iso.map.adjoint(), iso.map);
    iso.isometry_defect = (gramm - ident).frobenius_norm();
    iso.isometric = iso.isometry_defect <= 1e-10;
    return iso;
}

StateVector apply_full(const SwapIsometry& iso_a, const SwapIsometry& iso_b,
                       const StateVector& psi) {
    const auto& dims = psi.subsystem_dims();
    if (dims.size() != 2 || dims[0] != iso_a.input_dim || dims[1] != iso_b.input_dim)
        throw std::invalid_argument("apply_full: state factors do not match the isometries");

    const std::size_t anc_a = std::size_t(1) << iso_a.qubits;
    const std::size_t anc_b = std::size_t(1) << iso_b.qubits;

    StateVector v = qmath::apply_factor(iso_a.map, psi, 0);
    v = v.reshaped({iso_a.input_dim, anc_a, iso_b.input_dim});
    v = qmath::apply_factor(iso_b.map, v, 2);
    v = v.reshaped({iso_a.input_dim, anc_a, iso_b.input_dim, anc_b});
    v = qmath::permute_subsystems(v, {0, 2, 1, 3});

    std::vector<std::size_t> out_dims = {iso_a.input_dim, iso_b.input_dim};
    for (int i = 0; i < iso_a.qubits + iso_b.qubits; ++i) out_dims.push_back(2);
    return v.reshaped(out_dims);
}

JunkStateResult junk_state(const std::vector<Reflection>& z_ops_a,
                           const std::vector<Reflection>& z_ops_b, const StateVector& psi) {
    StateVector v = psi;
    auto apply_plus = [&](const Reflection& z, std::size_t factor) {
        StateVector zpsi = qmath::apply_factor(z.matrix(), v, factor);
        for (std::size_t i = 0; i < v.dim(); ++i) v[i] += zpsi[i];
    };
    for (std::size_t i = z_ops_a.size(); i-- > 0;) apply_plus(z_ops_a[i], 0);
    for (std::size_t i = z_ops_b.size(); i-- > 0;) apply_plus(z_ops_b[i], 1);

    JunkStateResult out;
    out.prenorm = v.norm();
    if (out.prenorm <= 0.0)
        throw numerical_degeneracy("junk_state: projected state has zero norm");
    out.junk = v.normalized();
    return out;
}

double CertificationReport::max_op_action_distance() const {
    double m = 0.0;
    for (const auto& [k, v] : op_action_distances) m = std::max(m, v);
    return m;
}

namespace {

StateVector pair_target(GameKind kind, const games::GameSpec& spec, int pair) {
    if (kind == GameKind::Tilted) {
        const double theta = spec.thetas[std::size_t(pair)];
        return StateVector({std::cos(theta), 0.0, 0.0, std::sin(theta)}, {2, 2});
    }
    const double r = 1.0 / std::sqrt(2.0);
    return StateVector({r, 0.0, 0.0, r}, {2, 2});
}

// Interleaved (A1,B1,...,An,Bn) to grouped (A1..An,B1..Bn).
std::vector<std::size_t> grouping_permutation(int pairs) {
    std::vector<std::size_t> perm;
    perm.reserve(std::size_t(2 * pairs));
    for (int j = 0; j < pairs; ++j) perm.push_back(std::size_t(2 * j));
    for (int j = 0; j < pairs; ++j) perm.push_back(std::size_t(2 * j + 1));
    return perm;
}

ComplexMatrix pauli_sigma(char m) {
    ComplexMatrix s(2, 2);
    if (m == 'z') {
        s(0, 0) = 1.0;
        s(1, 1) = -1.0;
    } else {
        s(0, 1) = 1.0;
        s(1, 0) = 1.0;
    }
    return s;
}

} // namespace

CertificationReport certify(const strategies::Strategy& s, const ExtractionBundle& bundle) {
    CertificationReport report;
    report.game = bundle.spec;
    report.pairs = bundle.pairs;
    report.per_copy_values = bundle.per_copy_values;
    report.chosen_contexts = bundle.chosen_contexts;
    for (const auto& g : bundle.good_sets) report.good_set_sizes.push_back(g.size());
    report.epsilon = bundle.epsilon;
    report.epsilon_bob = bundle.epsilon_bob;

    const int pairs = bundle.pairs;
    StateVector psi = s.state;

    // Balance each side's operator family on a common enlargement whenever
    // any member is unbalanced; the padded state carries no mass there.
    std::vector<Reflection> za, xa, zb, xb;
    for (const auto& ops : bundle.ops) {
        za.push_back(ops.z_a);
        xa.push_back(ops.x_a);
        zb.push_back(ops.z_b);
        xb.push_back(ops.x_b);
    }
    auto side_unbalanced = [](const std::vector<Reflection>& v, const std::vector<Reflection>& w) {
        for (const auto& r : v)
            if (!r.balanced()) return true;
        for (const auto& r : w)
            if (!r.balanced()) return true;
        return false;
    };
    if (side_unbalanced(za, xa)) {
        std::vector<Reflection> all = za;
        all.insert(all.end(), xa.begin(), xa.end());
        qmath::BalancedSide ext = qmath::balance_side(all, psi, 0);
        psi = ext.state;
        for (int p = 0; p < pairs; ++p) {
            za[std::size_t(p)] = ext.reflections[std::size_t(p)];
            xa[std::size_t(p)] = ext.reflections[std::size_t(pairs + p)];
        }
        report.balanced_extension_applied = true;
        report.added_dim_a = ext.added_dim;
    }
    if (side_unbalanced(zb, xb)) {
        std::vector<Reflection> all = zb;
        all.insert(all.end(), xb.begin(), xb.end());
        qmath::BalancedSide ext = qmath::balance_side(all, psi, 1);
        psi = ext.state;
        for (int p = 0; p < pairs; ++p) {
            zb[std::size_t(p)] = ext.reflections[std::size_t(p)];
            xb[std::size_t(p)] = ext.reflections[std::size_t(pairs + p)];
        }
        report.balanced_extension_applied = true;
        report.added_dim_b = ext.added_dim;
    }

    // Junk formula on the constructed Z operators before any repair: a zero
    // norm means the extraction is degenerate and must surface as an error.
    const GameKind kind = bundle.spec.kind;
    {
        JunkStateResult js = kind == GameKind::Tilted ? junk_state(za, {}, psi)
                                                      : junk_state(za, zb, psi);
        report.junk_norm_prenormalization = js.prenorm;
    }

    // Exact-anticommutation repair wherever the measured anticommutator on the
    // state exceeds the threshold.
    for (int p = 0; p < pairs; ++p) {
        for (int side = 0; side < 2; ++side) {
            Reflection& z = side == 0 ? za[std::size_t(p)] : zb[std::size_t(p)];
            Reflection& x = side == 0 ? xa[std::size_t(p)] : xb[std::size_t(p)];
            ComplexMatrix anti = qmath::multiply(x.matrix(), z.matrix());
            anti += qmath::multiply(z.matrix(), x.matrix());
            const double measured = qmath::apply_factor(anti, psi, std::size_t(side)).norm();
            RepairRecord rec;
            rec.side = side == 0 ? "A" : "B";
            rec.pair = p;
            rec.measured_anticommutator = measured;
            if (measured > kRepairThreshold) {
                extraction::AnticommuteRepair rep =
                    extraction::exact_anticommute(x, z, psi, std::size_t(side));
                z = rep.z_prime;
                rec.applied = true;
                rec.distance = rep.distance;
            }
            report.repairs.push_back(rec);
        }
    }

    // Hypothesis norms of the operators actually fed to the SWAP halves.
    {
        ExtractionBundle final_ops = bundle;
        final_ops.ops.clear();
        for (int p = 0; p < pairs; ++p)
            final_ops.ops.push_back({za[std::size_t(p)], xa[std::size_t(p)], zb[std::size_t(p)],
                                     xb[std::size_t(p)]});
        report.hypothesis_norms = verify::hypothesis_norms(final_ops, psi);
        report.max_hypothesis_norm = report.hypothesis_norms.max_norm;
    }

    SwapIsometry iso_a = build_swap(za, xa, Side::A);
    SwapIsometry iso_b = build_swap(zb, xb, Side::B);
    report.isometry_defect_a = iso_a.isometry_defect;
    report.isometry_defect_b = iso_b.isometry_defect;

    StateVector out = apply_full(iso_a, iso_b, psi);

    // Target on the ancillas: interleaved pair states, then grouped to match
    // the output's (A-ancillas, B-ancillas) register order.
    StateVector target_interleaved = pair_target(kind, bundle.spec, 0);
    for (int p = 1; p < pairs; ++p)
        target_interleaved = qmath::tensor(target_interleaved, pair_target(kind, bundle.spec, p));
    {
        std::vector<std::size_t> qdims(std::size_t(2 * pairs), 2);
        target_interleaved = target_interleaved.reshaped(qdims);
    }
    const std::vector<std::size_t> perm = grouping_permutation(pairs);
    StateVector target = qmath::permute_subsystems(target_interleaved, perm);

    std::vector<std::size_t> target_subsystems;
    for (int j = 0; j < 2 * pairs; ++j) target_subsystems.push_back(std::size_t(2 + j));

    qmath::JunkDistance jd = qmath::min_dist_over_junk(out, target, target_subsystems);
    if (jd.overlap_norm <= 0.0)
        throw numerical_degeneracy("certify: extracted state has no overlap with the target");
    report.state_distance = jd.distance;
    report.junk_overlap_norm = jd.overlap_norm;

    // Operator actions against the shared optimal junk.
    for (int p = 0; p < pairs; ++p)
        for (int side = 0; side < 2; ++side)
            for (char basis : {'z', 'x'}) {
                const Reflection& op = side == 0 ? (basis == 'z' ? za[std::size_t(p)] : xa[std::size_t(p)])
                                                 : (basis == 'z' ? zb[std::size_t(p)] : xb[std::size_t(p)]);
                StateVector mpsi = qmath::apply_factor(op.matrix(), psi, std::size_t(side));
                StateVector umpsi = apply_full(iso_a, iso_b, mpsi);

                StateVector st = qmath::apply_factor(pauli_sigma(basis), target_interleaved,
                                                     std::size_t(2 * p + side));
                StateVector starget = qmath::permute_subsystems(st, perm);
                StateVector expected = qmath::tensor(jd.junk, starget);

                const double dist = qmath::distance(umpsi, expected);
                std::string key = std::string(side == 0 ? "A" : "B") + ":" +
                                  (basis == 'z' ? "Z" : "X") + ":" + std::to_string(p);
                report.op_action_distances[key] = dist;
            }

    return report;
}

std::string report_to_json(const CertificationReport& report) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["game"] = nlohmann::json::parse(report.game.to_json());
    j["pairs"] = report.pairs;
    j["state_distance"] = report.state_distance;
    j["op_action_distances"] = report.op_action_distances;
    j["max_op_action_distance"] = report.max_op_action_distance();
    j["junk_norm_prenormalization"] = report.junk_norm_prenormalization;
    j["junk_overlap_norm"] = report.junk_overlap_norm;
    nlohmann::json norms = nlohmann::json::object();
    for (const auto& e : report.hypothesis_norms.entries) norms[e.label] = e.value;
    j["hypothesis_norms"] = norms;
    j["max_hypothesis_norm"] = report.max_hypothesis_norm;
    j["per_copy_values"] = report.per_copy_values;
    j["good_set_sizes"] = report.good_set_sizes;
    j["chosen_contexts"] = report.chosen_contexts;
    j["epsilon"] = report.epsilon;
    j["epsilon_bob"] = report.epsilon_bob;
    j["balanced_extension_applied"] = report.balanced_extension_applied;
    j["added_dim_a"] = report.added_dim_a;
    j["added_dim_b"] = report.added_dim_b;
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& r : report.repairs) {
        nlohmann::json rr;
        rr["side"] = r.side;
        rr["pair"] = r.pair;
        rr["applied"] = r.applied;
        rr["measured_anticommutator"] = r.measured_anticommutator;
        rr["distance"] = r.distance;
        reps.push_back(rr);
    }
    j["anticommutation_repairs"] = reps;
    j["isometry_defect_a"] = report.isometry_defect_a;
    j["isometry_defect_b"] = report.isometry_defect_b;
    return j.dump(2);
}

} // namespace selftest::isometry
