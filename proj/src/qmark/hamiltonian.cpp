#include "qmark/hamiltonian.hpp"

#include "qmark/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace qmark {

namespace {

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Matrix proj2(int omega) { return diag2(omega == 1 ? 1.0 : 0.0, omega == 2 ? 1.0 : 0.0); }

// unit-trace single-site restriction
Matrix site_density(const StateDensity& full, int j) {
    return reduce_to(full, ChainWindow(j, 1)).rho;
}

// density on A_j of x -> phi(x P^{j+1}_w); unnormalized
Matrix left_functional_density(const StateDensity& full, int j, int omega) {
    const StateDensity ut = full.as_unit_trace();
    const Matrix p = occupation_projector(full.window, j + 1, omega).mat;
    Matrix rho = Matrix::Zero(2, 2);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const Matrix e = matrix_unit(full.window, j, b + 1, a + 1).mat;
            rho(a, b) = (ut.rho * e * p).trace();
        }
    return rho;
}

// unit-trace density on A_{j+1} of y -> phi(P^j_w y) / phi(P^j_w)
Matrix right_conditional_density(const StateDensity& full, int j, int omega) {
    const StateDensity ut = full.as_unit_trace();
    const Matrix p = occupation_projector(full.window, j, omega).mat;
    const double pw = std::real((ut.rho * p).trace());
    if (pw <= tol::faithful_floor) throw FaithfulnessError("vanishing occupation probability");
    Matrix rho = Matrix::Zero(2, 2);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const Matrix e = matrix_unit(full.window, j + 1, b + 1, a + 1).mat;
            rho(a, b) = (ut.rho * p * e).trace() / pw;
        }
    return rho;
}

std::array<double, 2> site_distribution(const StateDensity& full, int j) {
    const StateDensity ut = full.as_unit_trace();
    return {std::real((ut.rho * occupation_projector(full.window, j, 1).mat).trace()),
            std::real((ut.rho * occupation_projector(full.window, j, 2).mat).trace())};
}

}  // namespace

ChainOperator local_potential(const StateDensity& full, const ChainWindow& region,
                              double* roundtrip) {
    StateDensity red = reduce_to(full, region);
    red.require_faithful();
    const Matrix h = -logm_h(red.rho);
    if (roundtrip) *roundtrip = max_abs(Matrix(expm_h(Matrix(-h)) - red.rho));
    ChainOperator out(region, h);
    out.parity_tag = detect_parity(out);
    return out;
}

const ChainOperator& PotentialFamily::at(int k, int l) const {
    const auto it = h.find({k, l});
    if (it == h.end())
        throw ConfigError("potential for [" + std::to_string(k) + "," + std::to_string(l) +
                          "] not built");
    return it->second;
}

PotentialFamily local_potentials(const StateDensity& full, int lo, int hi) {
    PotentialFamily fam;
    fam.window = full.window;
    fam.lo = lo;
    fam.hi = hi;
    for (int k = lo; k <= hi; ++k)
        for (int l = k; l <= hi; ++l) {
            double rt = 0.0;
            ChainOperator h = local_potential(full, ChainWindow(k, l - k + 1), &rt);
            fam.roundtrip_residual = std::max(fam.roundtrip_residual, rt);
            const Matrix eh = expm_h(Matrix(-h.mat));
            fam.normalization_residual =
                std::max(fam.normalization_residual, std::abs(eh.trace().real() - 1.0));
            fam.h.emplace(std::make_pair(k, l), std::move(h));
        }
    // compatibility across nested initial segments: partial trace of e^{-h}
    for (int k = lo; k <= hi; ++k)
        for (int l = k; l < hi; ++l) {
            const Matrix big = expm_h(Matrix(-fam.at(k, l + 1).mat));
            const Matrix red = ptrace_right(big, 1);
            const Matrix small = expm_h(Matrix(-fam.at(k, l).mat));
            fam.compatibility_residual =
                std::max(fam.compatibility_residual, max_abs(Matrix(red - small)));
        }
    return fam;
}

HamiltonianTerms build_terms(const StateDensity& full, const Classification& cls) {
    HamiltonianTerms terms;
    terms.window = full.window;
    terms.lo = full.window.first;
    terms.hi = full.window.last() - 1;

    for (int j = terms.lo; j <= terms.hi; ++j) {
        const RangeKind kind = cls.kind_of(j);
        terms.kind[j] = kind;
        const Matrix rho_j = site_density(full, j);
        switch (kind) {
            case RangeKind::Scalar:
                terms.site[j] = Matrix::Zero(2, 2);
                terms.site_hat[j] = -logm_h(rho_j);
                break;
            case RangeKind::Full:
                terms.site[j] = -logm_h(rho_j);
                terms.site_hat[j] = Matrix::Zero(2, 2);
                break;
            case RangeKind::EvenPart: {
                const auto pi = site_distribution(full, j);
                if (pi[0] <= tol::faithful_floor || pi[1] <= tol::faithful_floor)
                    throw FaithfulnessError("vanishing occupation probability");
                terms.site[j] = -(std::log(pi[0]) * proj2(1) + std::log(pi[1]) * proj2(2));
                terms.site_hat[j] = Matrix::Zero(2, 2);
                break;
            }
            default:
                throw InternalError("cannot build terms through an unclassified bond");
        }
    }

    const Matrix id2 = Matrix::Identity(2, 2);
    for (int j = terms.lo; j < terms.hi; ++j) {
        const RangeKind a = cls.kind_of(j), b = cls.kind_of(j + 1);
        Matrix h = Matrix::Zero(4, 4);
        if (a == RangeKind::Scalar && b == RangeKind::Scalar) {
            h = kron(Matrix(-logm_h(site_density(full, j))), id2);
        } else if (a == RangeKind::Scalar && b == RangeKind::Full) {
            // the pair stays coupled; the bond carries the full pair potential
            h = -logm_h(reduce_to(full, ChainWindow(j, 2)).rho);
        } else if (a == RangeKind::Scalar && b == RangeKind::EvenPart) {
            for (int w = 1; w <= 2; ++w)
                h -= kron(Matrix(logm_h(left_functional_density(full, j, w))), proj2(w));
        } else if (a == RangeKind::Full && b == RangeKind::Scalar) {
            // site j is carried by the left boundary term, site j+1 by the right
        } else if (a == RangeKind::Full && b == RangeKind::Full) {
            h = kron(id2, Matrix(-logm_h(site_density(full, j + 1))));
        } else if (a == RangeKind::Full && b == RangeKind::EvenPart) {
            const auto pi = site_distribution(full, j + 1);
            h = -kron(id2, Matrix(std::log(pi[0]) * proj2(1) + std::log(pi[1]) * proj2(2)));
        } else if (a == RangeKind::EvenPart && b == RangeKind::Scalar) {
            // conditional content is trivial: the right site decouples
        } else if (a == RangeKind::EvenPart && b == RangeKind::Full) {
            for (int w = 1; w <= 2; ++w)
                h -= kron(proj2(w), Matrix(logm_h(right_conditional_density(full, j, w))));
        } else if (a == RangeKind::EvenPart && b == RangeKind::EvenPart) {
            const auto pi = site_distribution(full, j);
            const StateDensity ut = full.as_unit_trace();
            for (int w = 1; w <= 2; ++w)
                for (int wp = 1; wp <= 2; ++wp) {
                    const double joint =
                        std::real((ut.rho * occupation_projector(full.window, j, w).mat *
                                   occupation_projector(full.window, j + 1, wp).mat)
                                      .trace());
                    const double cond = joint / pi[w - 1];
                    if (cond <= tol::faithful_floor)
                        throw FaithfulnessError("vanishing transition probability");
                    h -= std::log(cond) * kron(proj2(w), proj2(wp));
                }
        } else {
            throw InternalError("unreachable classification pair at bond " + std::to_string(j));
        }
        terms.bond[j] = h;
    }

    for (const auto& [j, m] : terms.site) {
        (void)j;
        terms.self_adjointness = std::max(terms.self_adjointness, hermiticity_residual(m));
    }
    for (const auto& [j, m] : terms.site_hat) {
        (void)j;
        terms.self_adjointness = std::max(terms.self_adjointness, hermiticity_residual(m));
    }
    for (const auto& [j, m] : terms.bond) {
        terms.self_adjointness = std::max(terms.self_adjointness, hermiticity_residual(m));
        terms.evenness = std::max(
            terms.evenness, parity_residual(ChainOperator(ChainWindow(j, 2), m), Parity::Even));
    }
    for (const auto& [j, m] : terms.site)
        terms.evenness = std::max(
            terms.evenness, parity_residual(ChainOperator(ChainWindow(j, 1), m), Parity::Even));
    return terms;
}

DecompositionReport verify_decomposition(const HamiltonianTerms& terms,
                                         const PotentialFamily& potentials) {
    DecompositionReport rep;
    const int lo = std::max(terms.lo, potentials.lo);
    const int hi = std::min(terms.hi, potentials.hi);
    for (int k = lo; k <= hi; ++k)
        for (int l = k; l <= hi; ++l) {
            const ChainWindow win(k, l - k + 1);
            Matrix rhs = Matrix::Zero(win.dim(), win.dim());
            rhs += embed(ChainOperator(ChainWindow(k, 1), terms.site.at(k)), win).mat;
            rhs += embed(ChainOperator(ChainWindow(l, 1), terms.site_hat.at(l)), win).mat;
            for (int j = k; j < l; ++j)
                rhs += embed(ChainOperator(ChainWindow(j, 2), terms.bond.at(j)), win).mat;
            const double res = operator_norm(Matrix(potentials.at(k, l).mat - rhs));
            rep.residuals.emplace_back(k, l, res);
            rep.worst = std::max(rep.worst, res);
        }
    return rep;
}

CommutatorReport verify_commutations(const HamiltonianTerms& terms) {
    CommutatorReport rep;
    const Matrix id2 = Matrix::Identity(2, 2);
    for (int j = terms.lo; j < terms.hi; ++j) {
        const Matrix& hb = terms.bond.at(j);
        const Matrix hj = kron(terms.site.at(j), id2);
        const Matrix hhat = kron(id2, terms.site_hat.at(j + 1));
        rep.site_bond = std::max(rep.site_bond, max_abs(Matrix(hj * hb - hb * hj)));
        rep.bond_hat = std::max(rep.bond_hat, max_abs(Matrix(hb * hhat - hhat * hb)));
    }
    for (int j = terms.lo; j <= terms.hi; ++j) {
        const Matrix& a = terms.site.at(j);
        const Matrix& b = terms.site_hat.at(j);
        rep.site_hat = std::max(rep.site_hat, max_abs(Matrix(a * b - b * a)));
    }
    const Matrix id = Matrix::Identity(2, 2);
    for (int j = terms.lo; j + 1 < terms.hi; ++j) {
        const Matrix a = kron(terms.bond.at(j), id);
        const Matrix b = kron(id, terms.bond.at(j + 1));
        rep.bond_bond = std::max(rep.bond_bond, max_abs(Matrix(a * b - b * a)));
    }
    return rep;
}

ChainOperator finite_dynamics(const ChainOperator& h, double t, const ChainOperator& x) {
    if (h.window != x.window) throw ConfigError("dynamics: operator window mismatch");
    if (hermiticity_residual(h.mat) > 1e-9) throw ConfigError("dynamics: generator not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.mat);
    Vector phase(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < phase.size(); ++i)
        phase(i) = std::exp(Complex(0.0, -t * es.eigenvalues()(i)));
    const Matrix u = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
    return ChainOperator(x.window, u * x.mat * u.adjoint());
}

CocycleReport cocycle_locality(const PotentialFamily& potentials, int k, int l) {
    CocycleReport rep;
    if (k - 1 < potentials.lo || l + 1 > potentials.hi)
        throw ConfigError("cocycle check needs the enlarged interval inside the family");
    const ChainWindow big(k - 1, l - k + 3);
    const ChainOperator hbig = potentials.at(k - 1, l + 1);
    const ChainOperator hsmall = embed(potentials.at(k, l), big);
    const Matrix delta = hbig.mat - hsmall.mat;

    const SubalgebraBasis interior = interval_basis(big, k + 1, l - 1);
    for (const auto& a : interior.elements) {
        rep.boundary_commutator =
            std::max(rep.boundary_commutator, operator_norm(Matrix(delta * a.mat - a.mat * delta)));
    }

    Eigen::SelfAdjointEigenSolver<Matrix> eb(hbig.mat), es(hsmall.mat);
    for (double t : {0.3, 1.0}) {
        Vector pb(eb.eigenvalues().size()), ps(es.eigenvalues().size());
        for (Eigen::Index i = 0; i < pb.size(); ++i)
            pb(i) = std::exp(Complex(0.0, t * eb.eigenvalues()(i)));
        for (Eigen::Index i = 0; i < ps.size(); ++i)
            ps(i) = std::exp(Complex(0.0, -t * es.eigenvalues()(i)));
        const Matrix ub = eb.eigenvectors() * pb.asDiagonal() * eb.eigenvectors().adjoint();
        const Matrix us = es.eigenvectors() * ps.asDiagonal() * es.eigenvectors().adjoint();
        const Matrix cocycle = ub * us;
        for (const auto& a : interior.elements)
            rep.cocycle_commutator = std::max(
                rep.cocycle_commutator, operator_norm(Matrix(cocycle * a.mat - a.mat * cocycle)));

        for (const auto& a : interior.elements) {
            const ChainOperator in_big(big, a.mat);
            const ChainOperator evolved_big = finite_dynamics(hbig, t, in_big);
            const ChainOperator evolved_small = finite_dynamics(embed(potentials.at(k, l), big),
                                                                t, in_big);
            rep.window_stability = std::max(
                rep.window_stability, operator_norm(sub(evolved_big, evolved_small)));
        }
    }
    return rep;
}

KmsReport kms_identity(const StateDensity& rho, const ChainOperator& x, const ChainOperator& y) {
    const StateDensity ut = rho.as_unit_trace();
    ut.require_faithful();
    KmsReport rep;
    rep.condition = hermitian_condition(ut.rho);
    const Matrix rinv = invm_h(ut.rho);
    const Complex lhs = (ut.rho * x.mat * ut.rho * y.mat * rinv).trace();
    const Complex rhs = (ut.rho * y.mat * x.mat).trace();
    rep.residual = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
    return rep;
}

}  // namespace qmark
