#pragma once

#include "qmark/algebra.hpp"

#include <array>
#include <vector>

namespace qmark {

// Demo states built directly as densities (normalized-trace convention).

// One-step product of even single-site densities diag(p_j, 1-p_j).
StateDensity product_state(const ChainWindow& w, const std::vector<double>& empty_probability);
StateDensity trace_state(const ChainWindow& w);

// Two-block factor: independent pair densities exp(t1*hop + t2*VV)/Z on
// [first+2k, first+2k+1]; window length must be even. The hopping part keeps
// the pair from splitting, so the within-pair expectation range is scalar.
StateDensity two_block_state(const ChainWindow& w, double t_hop, double t_vv);
// The pair density itself (4x4, unit trace).
Matrix two_block_pair_density(double t_hop, double t_vv);

// Diagonal lifting of a classical Markov chain: path measure from an initial
// distribution and a 2x2 transition matrix, lifted to occupation projections.
using Transition = std::array<std::array<double, 2>, 2>;
StateDensity diagonal_lift_state(const ChainWindow& w, const std::array<double, 2>& initial,
                                 const Transition& pi);

// Stationary distribution and second eigenvalue of a 2x2 stochastic matrix.
std::array<double, 2> stationary_distribution(const Transition& pi);
double second_eigenvalue(const Transition& pi);
bool is_primitive(const Transition& pi);

}  // namespace qmark
