#pragma once

#include "qmark/algebra.hpp"
#include "qmark/structure.hpp"

#include <map>
#include <utility>
#include <vector>

namespace qmark {

// h_Lambda = -log rho_Lambda for the unit-trace restriction; exp(-h) = rho to
// machine precision or FaithfulnessError below the eigenvalue floor.
ChainOperator local_potential(const StateDensity& full, const ChainWindow& region,
                              double* roundtrip = nullptr);

struct PotentialFamily {
    ChainWindow window;
    int lo = 0, hi = 0;  // region bounds (all subintervals of [lo,hi] are built)
    std::map<std::pair<int, int>, ChainOperator> h;  // (k,l) -> h_[k,l], local rep

    const ChainOperator& at(int k, int l) const;
    double normalization_residual = 0.0;  // Tr e^{-h} = 1
    double compatibility_residual = 0.0;  // initial-segment partial-trace agreement
    double roundtrip_residual = 0.0;      // exp(-h) reproduces the restriction
};
PotentialFamily local_potentials(const StateDensity& full, int lo, int hi);

// ---------------------------------------------------------------------------
// Site and bond terms keyed by the range classification. Bond terms carry the
// coupling the classification leaves at the bond; site terms carry what the
// interval boundary contributes (H_j on the left end, Hhat_j on the right).
// ---------------------------------------------------------------------------
struct HamiltonianTerms {
    ChainWindow window;
    int lo = 0, hi = 0;  // classified sites
    std::map<int, Matrix> site;        // H_j (2x2, local)
    std::map<int, Matrix> site_hat;    // Hhat_j
    std::map<int, Matrix> bond;        // H_{j,j+1} (4x4, local), j in [lo, hi-1]
    std::map<int, RangeKind> kind;
    double evenness = 0.0;
    double self_adjointness = 0.0;
};
HamiltonianTerms build_terms(const StateDensity& full, const Classification& cls);

// Additivity of the potentials: h_[k,l] = H_k + sum bonds + Hhat_l over every
// subinterval of the classified range.
struct DecompositionReport {
    double worst = 0.0;
    std::vector<std::tuple<int, int, double>> residuals;
};
DecompositionReport verify_decomposition(const HamiltonianTerms& terms,
                                         const PotentialFamily& potentials);

struct CommutatorReport {
    double site_bond = 0.0;   // [H_j, H_{j,j+1}]
    double bond_hat = 0.0;    // [H_{j,j+1}, Hhat_{j+1}]
    double site_hat = 0.0;    // [H_j, Hhat_j]
    double bond_bond = 0.0;   // [H_{j,j+1}, H_{j+1,j+2}]
    double worst() const { return std::max({site_bond, bond_hat, site_hat, bond_bond}); }
};
CommutatorReport verify_commutations(const HamiltonianTerms& terms);

// sigma_t(x) = e^{-ith} x e^{ith} via eigendecomposition.
ChainOperator finite_dynamics(const ChainOperator& h, double t, const ChainOperator& x);

struct CocycleReport {
    double boundary_commutator = 0.0;  // [(h_big - h_small), interior]
    double cocycle_commutator = 0.0;   // [u_t, interior], t in {0.3, 1.0}
    double window_stability = 0.0;     // sigma_t agrees across the two windows
    double worst() const {
        return std::max({boundary_commutator, cocycle_commutator, window_stability});
    }
};
CocycleReport cocycle_locality(const PotentialFamily& potentials, int k, int l);

// Finite-volume KMS trace identity Tr(rho x rho y rho^-1) = Tr(rho y x).
struct KmsReport {
    double residual = 0.0;
    double condition = 0.0;  // eigenvalue spread of rho
};
KmsReport kms_identity(const StateDensity& rho, const ChainOperator& x, const ChainOperator& y);

}  // namespace qmark
