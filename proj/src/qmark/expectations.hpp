#pragma once

#include "qmark/algebra.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace qmark {

// ---------------------------------------------------------------------------
// SubalgebraBasis: HS-orthonormal basis (inner product tau(x* y)) of a unital
// *-subalgebra of the window algebra.
//
// Subalgebras generated by a_j, a_j^+ for j in a non-initial segment carry the
// parity string of the sites to their left on odd elements; the bases built
// here include that twist, so membership tests are exact for odd operators.
// ---------------------------------------------------------------------------
struct SubalgebraBasis {
    ChainWindow window;
    std::vector<ChainOperator> elements;
    std::string descriptor;

    long dim() const { return static_cast<long>(elements.size()); }
    double gram_residual() const;
    // max over basis-element products of the distance to the span
    double closure_residual() const;
    void validate(double tolerance = tol::basis_gram) const;
};

SubalgebraBasis scalars_basis(const ChainWindow& w);
SubalgebraBasis full_basis(const ChainWindow& w);
SubalgebraBasis initial_segment_basis(const ChainWindow& w, int n);   // A_{n]}
SubalgebraBasis final_segment_basis(const ChainWindow& w, int n);     // A_{[n}
SubalgebraBasis interval_basis(const ChainWindow& w, int lo, int hi); // A_{[lo,hi]}
SubalgebraBasis single_site_basis(const ChainWindow& w, int n);
SubalgebraBasis pair_basis(const ChainWindow& w, int n);              // A_{[n,n+1]}
SubalgebraBasis even_part_basis(const ChainWindow& w, const Region& r);
SubalgebraBasis diagonal_basis(const ChainWindow& w, const Region& r);
// Range of the diagonal lifting: everything left invariant by the occupation
// compressions at the sites of gamma.
SubalgebraBasis diagonal_at_basis(const ChainWindow& w, const std::set<int>& gamma);

// Orthonormalize a spanning set (drops near-null directions at `rank_tol`).
SubalgebraBasis orthonormalize(const ChainWindow& w, const std::vector<Matrix>& span,
                               const std::string& descriptor, double rank_tol = tol::rank);

double membership_residual(const ChainOperator& x, const SubalgebraBasis& basis);
ChainOperator project_onto(const ChainOperator& x, const SubalgebraBasis& basis);

// ---------------------------------------------------------------------------
// CondExp: linear map on a window algebra with conditional-expectation (or
// quasi-conditional) semantics. Applies through a matrix functional; the
// 4^L x 4^L superoperator is cached lazily and refused above kSuperopMaxSites.
// ---------------------------------------------------------------------------
inline constexpr int kSuperopMaxSites = 6;

enum class CondExpKind { TracePreserving, StatePreserving, Quasi };

struct CondExp {
    ChainWindow domain;
    SubalgebraBasis range;
    CondExpKind kind = CondExpKind::TracePreserving;
    std::optional<StateDensity> preserved_state;   // StatePreserving
    std::optional<SubalgebraBasis> module_basis;   // Quasi: the algebra C
    std::function<Matrix(const Matrix&)> apply_fn;

    ChainOperator operator()(const ChainOperator& x) const;
    Matrix apply(const Matrix& x) const { return apply_fn(x); }

    const Matrix& superoperator() const;  // lazy cache

  private:
    mutable std::shared_ptr<Matrix> cache_;
};

// Superoperator of an arbitrary applier (column-major vec convention).
Matrix superoperator_of(const ChainWindow& w, const std::function<Matrix(const Matrix&)>& f);

// E(x) = sum_i b_i tau(b_i^* x): the trace-preserving projection onto the range.
CondExp hs_conditional_expectation(const SubalgebraBasis& range);

// Product of the occupation compressions F_j over gamma.
CondExp diagonal_lift_expectation(const ChainWindow& w, const std::set<int>& gamma);

// phi-adjoint projection onto span(range): the unique map into the range with
// phi(y E(x)) = phi(y x) for all y in the range. A conditional expectation
// exactly when the bimodule/CP tests pass.
CondExp state_adjoint_projection(const StateDensity& phi, const SubalgebraBasis& range);

struct ChoiReport {
    double min_eigenvalue = 0.0;
    bool is_cp = false;
};
ChoiReport choi_check(const CondExp& e);
ChoiReport choi_check(const ChainWindow& w, const std::function<Matrix(const Matrix&)>& f);

struct ErgodicReport {
    double spectral_radius = 0.0;
    double algebra_residual = 0.0;       // closure of the fixed-point space
    double intertwine_residual = 0.0;    // max(|eps e - eps|, |e eps - eps|)
    long fixed_dimension = 0;
};

// Spectral projection of a unital CP map onto its eigenvalue-1 eigenspace;
// returns the conditional expectation onto the fixed-point algebra.
CondExp ergodic_average(const ChainWindow& w, const std::function<Matrix(const Matrix&)>& e,
                        const StateDensity& invariant_state, ErgodicReport* report = nullptr);

// Cesaro average (1/k) sum_{h<k} e^h as a superoperator, via binary doubling.
Matrix cesaro_superoperator(const ChainWindow& w, const std::function<Matrix(const Matrix&)>& e,
                            long k);

struct CondExpChecks {
    double idempotence = 0.0;
    double unitality = 0.0;
    double bimodule = 0.0;       // over range (or module region when quasi)
    double preservation = 0.0;   // trace or state, as declared
    double choi_min = 0.0;
    bool cp = false;
    double worst() const;
};
// Sampled property checks (bases too large for exhaustive pairs at L >= 4).
CondExpChecks check_condexp(const CondExp& e, Rng& rng, int samples = 8);

// ---------------------------------------------------------------------------
// structure_decompose: minimal central projections of the range and the factor
// states on the relative-commutant corners.
// ---------------------------------------------------------------------------
struct CentralDecomposition {
    std::vector<ChainOperator> central_projections;
    std::vector<SubalgebraBasis> corner_commutants;
    // factor state values on the commutant corner basis elements
    std::vector<std::vector<Complex>> factor_state_values;
    std::vector<double> corner_conditioning;  // Gram min eigenvalue per corner
    double reconstruction_residual = 0.0;     // (condd) rebuilt vs original
    double corner_residual = 0.0;             // (cond) factorization on corners
};
CentralDecomposition structure_decompose(const CondExp& e);

}  // namespace qmark
