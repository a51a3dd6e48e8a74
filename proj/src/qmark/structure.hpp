#pragma once

#include "qmark/algebra.hpp"
#include "qmark/expectations.hpp"
#include "qmark/families.hpp"
#include "qmark/markov.hpp"

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace qmark {

enum class RangeKind { Scalar, EvenPart, Full, Unclassifiable };
std::string to_string(RangeKind k);

// ---------------------------------------------------------------------------
// Two-step conditional expectation at a bond and its range classification.
// The map acts on the local two-site algebra of [n, n+1].
// ---------------------------------------------------------------------------
struct TwoStepExpectation {
    int site = 0;  // n
    ChainWindow pair;
    CondExp eps;
    StateDensity pair_state;  // unit trace
    RangeKind kind = RangeKind::Unclassifiable;
    long fixed_dimension = 0;
    double transition_invariance = 0.0;  // the transition map preserves phi restricted to the pair
    double classification_residual = 0.0;  // structural-form checks for the matched case
    double odd_kill = 0.0;                 // Full case: sup over odd A_{n+1} of |eps(x)|
    std::string note;                      // failed candidates, diagnostics
};

// Derives the transition map (from the amplitude sequence when available,
// otherwise by the state-adjoint ladder full -> even part -> scalars), takes
// its ergodic average and classifies the fixed-point range.
TwoStepExpectation derive_two_step(const StateDensity& full, int n,
                                   const AmplitudeSequence* seq = nullptr);

// Full-range odd-annihilation residual (valid for kind == Full).
double lemma_odd_kill_residual(const TwoStepExpectation& two_step);

struct Classification {
    ChainWindow window;
    std::vector<TwoStepExpectation> bonds;  // n = first .. last-1

    const TwoStepExpectation& at(int n) const;
    RangeKind kind_of(int n) const { return at(n).kind; }
    std::set<int> gamma() const;
    bool matches(const std::vector<RangeKind>& pattern) const;
};
Classification classify_state(const StateDensity& full, const AmplitudeSequence* seq = nullptr);

// ---------------------------------------------------------------------------
// Classical transition data on the even-part sites.
// ---------------------------------------------------------------------------
struct ClassicalChainData {
    std::set<int> gamma;
    std::map<int, std::array<double, 2>> distribution;  // pi^j
    std::map<int, Transition> transition;               // pi^j_{w w'}, j and j+1 in one block
    // full outcome space over gamma (sorted), with path weights
    std::vector<std::vector<int>> outcomes;  // entries in {1,2}
    std::vector<double> weights;
    double row_sum_residual = 0.0;
    double consistency_residual = 0.0;
    double min_probability = 1.0;
};
ClassicalChainData extract_classical_data(const StateDensity& full, const Classification& cls);

// ---------------------------------------------------------------------------
// Boundary product states on the complement blocks, per omega.
// ---------------------------------------------------------------------------
struct ComplementBlock {
    int lo = 0, hi = 0;
    bool compress_left = false, compress_right = false;
    int left_gamma = 0, right_gamma = 0;  // valid when the matching flag is set
};
std::vector<ComplementBlock> complement_blocks(const Classification& cls);

struct BoundaryBlockState {
    ComplementBlock block;
    Matrix rho;  // unit trace on the block
    double evenness = 0.0;
};
std::vector<BoundaryBlockState> boundary_states(const StateDensity& full,
                                                const Classification& cls,
                                                const std::vector<int>& omega);

// ---------------------------------------------------------------------------
// Disintegration over the classical measure and the reconstruction direction.
// ---------------------------------------------------------------------------
struct DisintegrationReport {
    double decomposition = 0.0;    // |phi - sum_w mu(w) psi_w(...)| over the monomial basis
    double lift_invariance = 0.0;  // phi = phi o (diagonal lift)
    double evenness = 0.0;         // odd monomial expectations of the rebuilt state
    double reconstruction = 0.0;   // rebuilt expectations preserve the rebuilt state
    double localization = 0.0;     // rebuilt expectation maps the bond pair into A_{n}
};
DisintegrationReport disintegrate_reconstruct(const StateDensity& full, const Classification& cls,
                                              const ClassicalChainData& data);

// ---------------------------------------------------------------------------
// Exponential mixing for the lifted classical chain.
// ---------------------------------------------------------------------------
struct CorrelationReport {
    std::vector<int> distance;
    std::vector<double> quantum;    // c(r) evaluated on the lifted state
    std::vector<double> classical;  // exact chain oracle
    double agreement = 0.0;
    double lambda2 = 0.0;
    double fitted_rate = 0.0;       // from the log-slope of |c(r)|
    double ratio_deviation = 0.0;   // max_r ||c(r+1)/c(r)| - |lambda2|| / |lambda2|
    bool primitive = false;
    bool fitted = false;
};
// Observables are single-site operators re-anchored at distance r by the shift.
CorrelationReport correlation_decay(const Transition& pi, int window_length, const Matrix& x_site,
                                    const Matrix& y_site, int max_distance);

// ---------------------------------------------------------------------------
// Product-state verifications (gamma empty).
// ---------------------------------------------------------------------------
struct ProductCheckReport {
    double site_factorization = 0.0;
    double pair_factorization = 0.0;
    double translation_invariance = 0.0;       // one-step, site marginals
    double pair_translation_invariance = 0.0;  // two-step
};
ProductCheckReport product_state_checks(const StateDensity& full, const Classification& cls);

// ---------------------------------------------------------------------------
// Finite-volume invariants of the two-step family.
// ---------------------------------------------------------------------------

// One-site extension of eps_n to the initial-segment algebra, applied to a
// full-window operator (plain-slot decomposition at sites n, n+1).
Matrix one_site_extension(const Classification& cls, int n, const Matrix& x);

// Compositions stabilize on shallower initial segments: exact at finite volume.
double stabilization_residual(const Classification& cls, Rng& rng, int samples = 6);

// phi(x_k ... x_l) = phi(eps_k(x_k eps_{k+1}( ... ))) over all monomials.
double evaluation_formula_residual(const StateDensity& full, const Classification& cls);

// phi = phi o E for the diagonal lift over gamma.
double lift_invariance_residual(const StateDensity& full, const std::set<int>& gamma);

}  // namespace qmark
