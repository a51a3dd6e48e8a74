#pragma once

#include "qmark/algebra.hpp"
#include "qmark/expectations.hpp"

#include <map>
#include <string>
#include <vector>

namespace qmark {

// ---------------------------------------------------------------------------
// AmplitudeSequence: the constructive data {K_{n-1,n}, w_0} on a window
// [n_min, 0]. Each amplitude lives on its own two-site window [n-1, n]; w_0
// on the one-site window {0}. Fields are open so tests can build deliberately
// broken sequences; the family builders always validate.
// ---------------------------------------------------------------------------
struct AmplitudeSequence {
    ChainWindow window;                      // [n_min, 0]
    ChainOperator w0;                        // positive, even, on {0}
    std::vector<ChainOperator> amplitudes;   // K_{n-1,n}, n = n_min+1 .. 0
    std::string family = "custom";
    std::map<std::string, double> params;

    int n_min() const { return window.first; }
    const ChainOperator& amplitude(int n) const;  // K_{n-1,n}
    ChainOperator& amplitude(int n);
    // Rejects odd parts above the tolerance and malformed windows.
    void validate(double even_tol = 1e-12) const;
};

// Cumulative products. `cumulative_amplitude` is K_{n,n+1} ... K_{-1,0} w0^{1/2}
// on [n,0]; `partial_amplitude(n,k)` is K_{n,n+1} ... K_{k-1,k} on [n,k].
ChainOperator cumulative_amplitude(const AmplitudeSequence& seq, int n);
ChainOperator partial_amplitude(const AmplitudeSequence& seq, int n, int k);

// Per-amplitude normalization and evenness report.
struct AmplitudeConditionReport {
    struct Entry {
        int n = 0;               // amplitude K_{n-1,n}
        double evenness = 0.0;
        double norm_left = 0.0;  // conditional expectation onto the left site
        double norm_right = 0.0; // onto the right site (n <= -1 only)
    };
    std::vector<Entry> entries;
    double w0_evenness = 0.0;
    double w0_positivity = 0.0;  // negative part of the smallest eigenvalue
    double worst = 0.0;
    bool pass(double tolerance = tol::amplitude) const { return worst < tolerance; }
};
AmplitudeConditionReport verify_amplitudes(const AmplitudeSequence& seq);

// ---------------------------------------------------------------------------
// MarkovState: the compatible family of densities W_{[n,0]} = K_bold* K_bold.
// ---------------------------------------------------------------------------
struct MarkovState {
    ChainWindow window;
    std::vector<StateDensity> volumes;  // index k -> volume [-k, 0]

    const StateDensity& volume(int n) const;  // W_{[n,0]}
    const StateDensity& full() const { return volume(window.first); }
    Complex eval(const ChainOperator& x) const;
};

struct BuildReport {
    double projectivity = 0.0;    // trace expectation onto [n,0] maps W_{[n-1,0]} to W_{[n,0]}
    double compatibility = 0.0;   // restriction of phi_[n,0] equals phi_[n+1,0]
    double evenness = 0.0;
    double min_eigenvalue = 1.0;  // over volumes, unit-trace scale
    double trace_residual = 0.0;  // tau(W) - 1
};
MarkovState build_state(const AmplitudeSequence& seq, BuildReport* report = nullptr);

// E_{n]}(x) = trace expectation onto A_{n]} of K_bold x K_bold*; quasi
// conditional expectation with module algebra A_{n-1]}.
CondExp quasi_conditional_expectation(const AmplitudeSequence& seq, int n,
                                      const MarkovState* state = nullptr);

struct MarkovReport {
    double chain_identity = 0.0;     // full monomial basis, via densities
    double chain_sampled = 0.0;      // random operators, direct route
    double local_invariance = 0.0;   // one-bond transition maps preserve phi
    double theta_commutation = 0.0;  // E_{n]} Theta = Theta E_{n]}
    double localization = 0.0;       // E_{n]}(A_[n) inside A_{n}
    double evenness = 0.0;
    double worst() const;
    bool pass(double tolerance = tol::markov) const { return worst() < tolerance; }
};
MarkovReport verify_markov(const AmplitudeSequence& seq, const MarkovState& state, Rng& rng,
                           int samples = 12);

// ---------------------------------------------------------------------------
// Example families.
// ---------------------------------------------------------------------------

// Diagonal pair-interaction family; requires e^{h a}+e^{h b} = e^{h g}+e^{h d}.
// The pair factor is computed both as a Hermitian matrix exponential and by
// the closed form with exponentiated weights; `cross_check` receives the gap.
AmplitudeSequence ising_amplitudes(int n_min, double alpha, double beta, double gamma,
                                   double delta, double h, double* cross_check = nullptr);

struct HoppingDiagnostics {
    double alpha_numeric = 0.0;      // scalar from the computed expectation
    double alpha_hyperbolic = 0.0;   // (1 + cosh h)/2
    double alpha_trigonometric = 0.0;  // (1 + cos h)/2, reported alongside
    double scalar_residual = 0.0;    // distance of the expectation from a scalar
    double closed_form_hyperbolic = 0.0;   // |exp(hU) - (I + sinh(h) U + (cosh h - 1) U^2)|
    double closed_form_trigonometric = 0.0;
};
AmplitudeSequence hopping_amplitudes(int n_min, double h, HoppingDiagnostics* diag = nullptr);

// All-identity amplitudes (the normalized trace state).
AmplitudeSequence trivial_amplitudes(int n_min);

// phi_[volume,0](x); x must be localized inside the volume.
Complex state_eval(const MarkovState& state, const ChainOperator& x, int volume);

// |tau(K_{n,k+1} x K*_{n,k+1}) - phi(x)| for x in A_[n,k], k <= -1: the
// reduced-window evaluation route.
double reduced_window_residual(const AmplitudeSequence& seq, const MarkovState& state,
                               const ChainOperator& x, int n, int k);

// Sequence serialization: a manifest plus per-amplitude operator files.
void save_sequence(const std::string& dir, const AmplitudeSequence& seq);
AmplitudeSequence load_sequence(const std::string& dir);

}  // namespace qmark
