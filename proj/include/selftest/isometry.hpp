#pragma once

#include <map>
#include <string>
#include <vector>

#include "selftest/extraction.hpp"
#include "selftest/verify.hpp"

namespace selftest::isometry {

// Local map H_D -> H_D (x) (C^2)^n built from n reflection pairs:
// the product of [(I+Z_i)/2 (x) |0><0|_i + X_i(I-Z_i)/2 (x) |1><0|_i].
// An isometry whenever the inputs are exact reflections.
struct SwapIsometry {
    extraction::Side side = extraction::Side::A;
    std::size_t input_dim = 0;
    int qubits = 0;
    qmath::ComplexMatrix map;  // (input_dim * 2^qubits) x input_dim
    double isometry_defect = 0.0;  // ||U^dag U - I||_F
    bool isometric = false;        // defect <= 1e-10
};

SwapIsometry build_swap(const std::vector<qmath::Reflection>& z_ops,
                        const std::vector<qmath::Reflection>& x_ops, extraction::Side side);

// U_A (x) U_B applied to a two-party state; output factors are ordered
// (A, B, A-ancilla qubits..., B-ancilla qubits...).
qmath::StateVector apply_full(const SwapIsometry& iso_a, const SwapIsometry& iso_b,
                              const qmath::StateVector& psi);

struct JunkStateResult {
    qmath::StateVector junk;   // normalized
    double prenorm = 0.0;      // norm of the raw projected vector
};

// prod_i (I + Z_A^(i)) (I + Z_B^(i)) |psi>, normalized; pass an empty Bob list
// for the one-sided variant used with tilted targets. Zero norm raises
// numerical_degeneracy.
JunkStateResult junk_state(const std::vector<qmath::Reflection>& z_ops_a,
                           const std::vector<qmath::Reflection>& z_ops_b,
                           const qmath::StateVector& psi);

struct RepairRecord {
    std::string side;
    int pair = 0;
    bool applied = false;
    double measured_anticommutator = 0.0;
    double distance = 0.0;  // ||(Z - Z') psi||
};

struct CertificationReport {
    games::GameSpec game;
    int pairs = 0;

    double state_distance = 0.0;
    std::map<std::string, double> op_action_distances;  // "side:basis:pair"
    double junk_norm_prenormalization = 0.0;
    double junk_overlap_norm = 0.0;  // norm of the optimal-junk partial overlap

    verify::HypothesisNorms hypothesis_norms;
    double max_hypothesis_norm = 0.0;

    std::vector<double> per_copy_values;
    std::vector<std::size_t> good_set_sizes;
    std::vector<int> chosen_contexts;
    double epsilon = 0.0;
    double epsilon_bob = 0.0;

    bool balanced_extension_applied = false;
    std::size_t added_dim_a = 0, added_dim_b = 0;
    std::vector<RepairRecord> repairs;
    double isometry_defect_a = 0.0, isometry_defect_b = 0.0;

    double max_op_action_distance() const;
};

// Threshold above which the anticommutation repair replaces a Z operator.
inline constexpr double kRepairThreshold = 1e-10;

CertificationReport certify(const strategies::Strategy& s,
                            const extraction::ExtractionBundle& bundle);

// Schema version 1; stable field names.
std::string report_to_json(const CertificationReport& report);

} // namespace selftest::isometry
