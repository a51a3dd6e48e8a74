#include "qmark/expectations.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace qmark {

namespace {

Complex hs_inner(const Matrix& a, const Matrix& b) {
    // tau(a* b)
    return (a.adjoint() * b).trace() / static_cast<double>(a.rows());
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, long d) { return Eigen::Map<const Matrix>(v.data(), d, d); }

// Pattern operator: elementary matrix e_{ij} on the contiguous sites [lo,hi],
// identity elsewhere, with the left parity string on odd patterns.
Matrix pattern_op(const ChainWindow& w, int lo, int hi, long i, long j) {
    const int nl = lo - w.first;
    const int nm = hi - lo + 1;
    const int nr = w.last() - hi;
    const long dl = 1L << nl, dm = 1L << nm, dr = 1L << nr;
    Matrix out = Matrix::Zero(w.dim(), w.dim());
    const bool odd = basis_parity(i) != basis_parity(j);
    for (long a = 0; a < dl; ++a) {
        const double sgn = odd ? basis_parity(a) : 1.0;
        for (long b = 0; b < dr; ++b) out((a * dm + i) * dr + b, (a * dm + j) * dr + b) = sgn;
    }
    return out;
}

ChainOperator normalized_pattern(const ChainWindow& w, int lo, int hi, long i, long j) {
    const int nm = hi - lo + 1;
    Matrix m = pattern_op(w, lo, hi, i, j) * std::pow(2.0, 0.5 * nm);
    ChainOperator op(w, std::move(m));
    op.parity_tag = (basis_parity(i) == basis_parity(j)) ? Parity::Even : Parity::Odd;
    op.localization = Region::interval(w, lo, hi);
    return op;
}

std::vector<Matrix> nullspace(const Matrix& a, double rank_tol) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    const double cut = rank_tol * std::max(1.0, smax);
    std::vector<Matrix> out;
    for (Eigen::Index k = 0; k < svd.matrixV().cols(); ++k)
        if (k >= sv.size() || sv(k) < cut) out.push_back(svd.matrixV().col(k));
    return out;
}

}  // namespace

// SubalgebraBasis -------------------------------------------------------------

double SubalgebraBasis::gram_residual() const {
    double worst = 0.0;
    for (size_t i = 0; i < elements.size(); ++i)
        for (size_t j = 0; j < elements.size(); ++j) {
            const Complex g = hs_inner(elements[i].mat, elements[j].mat);
            worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
    return worst;
}

double SubalgebraBasis::closure_residual() const {
    double worst = 0.0;
    for (const auto& x : elements)
        for (const auto& y : elements) {
            ChainOperator p = mul(x, y);
            worst = std::max(worst, membership_residual(p, *this));
        }
    return worst;
}

void SubalgebraBasis::validate(double tolerance) const {
    if (gram_residual() > tolerance)
        throw InternalError("subalgebra basis '" + descriptor + "' not orthonormal");
}

SubalgebraBasis scalars_basis(const ChainWindow& w) {
    SubalgebraBasis b{w, {identity_op(w)}, "scalars"};
    return b;
}

SubalgebraBasis full_basis(const ChainWindow& w) {
    return interval_basis(w, w.first, w.last());
}

SubalgebraBasis initial_segment_basis(const ChainWindow& w, int n) {
    return interval_basis(w, w.first, n);
}

SubalgebraBasis final_segment_basis(const ChainWindow& w, int n) {
    return interval_basis(w, n, w.last());
}

SubalgebraBasis interval_basis(const ChainWindow& w, int lo, int hi) {
    if (!w.contains(lo) || !w.contains(hi) || lo > hi)
        throw ConfigError("invalid interval [" + std::to_string(lo) + "," + std::to_string(hi) +
                          "] in window " + w.str());
    const long dm = 1L << (hi - lo + 1);
    SubalgebraBasis b;
    b.window = w;
    b.descriptor = "interval[" + std::to_string(lo) + "," + std::to_string(hi) + "]";
    b.elements.reserve(dm * dm);
    for (long i = 0; i < dm; ++i)
        for (long j = 0; j < dm; ++j) b.elements.push_back(normalized_pattern(w, lo, hi, i, j));
    return b;
}

SubalgebraBasis single_site_basis(const ChainWindow& w, int n) { return interval_basis(w, n, n); }

SubalgebraBasis pair_basis(const ChainWindow& w, int n) { return interval_basis(w, n, n + 1); }

SubalgebraBasis even_part_basis(const ChainWindow& w, const Region& r) {
    if (r.sites.empty()) return scalars_basis(w);
    if (!r.contiguous()) throw ConfigError("even_part basis requires a contiguous region");
    const int lo = *r.sites.begin(), hi = *r.sites.rbegin();
    const long dm = 1L << (hi - lo + 1);
    SubalgebraBasis b;
    b.window = w;
    b.descriptor = "even_part" + r.str();
    for (long i = 0; i < dm; ++i)
        for (long j = 0; j < dm; ++j)
            if (basis_parity(i) == basis_parity(j))
                b.elements.push_back(normalized_pattern(w, lo, hi, i, j));
    return b;
}

SubalgebraBasis diagonal_basis(const ChainWindow& w, const Region& r) {
    if (r.sites.empty()) return scalars_basis(w);
    SubalgebraBasis b;
    b.window = w;
    b.descriptor = "diagonal" + r.str();
    const int m = static_cast<int>(r.sites.size());
    std::vector<int> sites(r.sites.begin(), r.sites.end());
    for (long cfg = 0; cfg < (1L << m); ++cfg) {
        ChainOperator p = identity_op(w);
        for (int t = 0; t < m; ++t) {
            const int which = ((cfg >> (m - 1 - t)) & 1) ? 2 : 1;
            p = mul(p, occupation_projector(w, sites[t], which));
        }
        p = scale(std::pow(2.0, 0.5 * m), p);
        p.parity_tag = Parity::Even;
        b.elements.push_back(std::move(p));
    }
    return b;
}

SubalgebraBasis diagonal_at_basis(const ChainWindow& w, const std::set<int>& gamma) {
    SubalgebraBasis b;
    b.window = w;
    b.descriptor = "diagonal_at";
    const long d = w.dim();
    auto gamma_bits = [&](long idx) {
        long out = 0;
        for (int s : gamma) out = (out << 1) | ((idx >> (w.size - 1 - w.index_of(s))) & 1);
        return out;
    };
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j)
            if (gamma_bits(i) == gamma_bits(j)) {
                Matrix m = Matrix::Zero(d, d);
                m(i, j) = std::pow(2.0, 0.5 * w.size);
                b.elements.emplace_back(w, std::move(m));
            }
    return b;
}

SubalgebraBasis orthonormalize(const ChainWindow& w, const std::vector<Matrix>& span,
                               const std::string& descriptor, double rank_tol) {
    SubalgebraBasis b;
    b.window = w;
    b.descriptor = descriptor;
    for (const Matrix& raw : span) {
        Matrix v = raw;
        for (const auto& e : b.elements) v -= hs_inner(e.mat, v) * e.mat;
        // second pass for numerical orthogonality
        for (const auto& e : b.elements) v -= hs_inner(e.mat, v) * e.mat;
        const double nrm = std::sqrt(std::abs(hs_inner(v, v).real()));
        if (nrm > rank_tol) b.elements.emplace_back(w, Matrix(v / nrm));
    }
    return b;
}

ChainOperator project_onto(const ChainOperator& x, const SubalgebraBasis& basis) {
    Matrix acc = Matrix::Zero(x.dim(), x.dim());
    for (const auto& b : basis.elements) acc += hs_inner(b.mat, x.mat) * b.mat;
    return ChainOperator(x.window, std::move(acc));
}

double membership_residual(const ChainOperator& x, const SubalgebraBasis& basis) {
    if (x.window != basis.window)
        throw ConfigError("membership: window mismatch " + x.window.str() + " vs " +
                          basis.window.str());
    ChainOperator p = project_onto(x, basis);
    return operator_norm(Matrix(x.mat - p.mat));
}

// CondExp ----------------------------------------------------------------------

ChainOperator CondExp::operator()(const ChainOperator& x) const {
    const ChainOperator xe = (x.window == domain) ? x : embed(x, domain);
    return ChainOperator(domain, apply_fn(xe.mat));
}

const Matrix& CondExp::superoperator() const {
    if (!cache_) {
        if (domain.size > kSuperopMaxSites)
            throw InternalError("superoperator cache refused for windows above " +
                                std::to_string(kSuperopMaxSites) + " sites");
        cache_ = std::make_shared<Matrix>(superoperator_of(domain, apply_fn));
    }
    return *cache_;
}

Matrix superoperator_of(const ChainWindow& w, const std::function<Matrix(const Matrix&)>& f) {
    if (w.size > kSuperopMaxSites)
        throw InternalError("superoperator refused for windows above " +
                            std::to_string(kSuperopMaxSites) + " sites");
    const long d = w.dim();
    Matrix s(d * d, d * d);
    Matrix ebasis = Matrix::Zero(d, d);
    for (long col = 0; col < d * d; ++col) {
        ebasis(col % d, col / d) = 1.0;  // column-major unit
        s.col(col) = vec(f(ebasis));
        ebasis(col % d, col / d) = 0.0;
    }
    return s;
}

CondExp hs_conditional_expectation(const SubalgebraBasis& range) {
    range.validate();
    CondExp e;
    e.domain = range.window;
    e.range = range;
    e.kind = CondExpKind::TracePreserving;
    auto basis = std::make_shared<SubalgebraBasis>(range);
    e.apply_fn = [basis](const Matrix& x) {
        Matrix acc = Matrix::Zero(x.rows(), x.cols());
        for (const auto& b : basis->elements) acc += hs_inner(b.mat, x) * b.mat;
        return acc;
    };
    return e;
}

CondExp diagonal_lift_expectation(const ChainWindow& w, const std::set<int>& gamma) {
    for (int s : gamma)
        if (!w.contains(s)) throw ConfigError("diagonal lift: site outside window");
    CondExp e;
    e.domain = w;
    e.range = diagonal_at_basis(w, gamma);
    e.kind = CondExpKind::TracePreserving;
    const long d = w.dim();
    // mask: kill matrix elements between basis states differing at gamma
    Eigen::ArrayXXd mask = Eigen::ArrayXXd::Ones(d, d);
    for (int s : gamma) {
        const long bit = 1L << (w.size - 1 - w.index_of(s));
        for (long i = 0; i < d; ++i)
            for (long j = 0; j < d; ++j)
                if ((i & bit) != (j & bit)) mask(i, j) = 0.0;
    }
    e.apply_fn = [mask](const Matrix& x) { return Matrix(x.array() * mask); };
    return e;
}

CondExp state_adjoint_projection(const StateDensity& phi, const SubalgebraBasis& range) {
    const StateDensity ut = phi.as_unit_trace();
    const long n = range.dim();
    Matrix gram(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            gram(i, j) = (ut.rho * range.elements[i].mat.adjoint() * range.elements[j].mat).trace();
    auto solver = std::make_shared<Eigen::PartialPivLU<Matrix>>(gram);
    auto basis = std::make_shared<SubalgebraBasis>(range);
    auto rho = std::make_shared<Matrix>(ut.rho);

    CondExp e;
    e.domain = range.window;
    e.range = range;
    e.kind = CondExpKind::StatePreserving;
    e.preserved_state = phi;
    e.apply_fn = [solver, basis, rho](const Matrix& x) {
        const long n2 = basis->dim();
        Vector r(n2);
        for (long i = 0; i < n2; ++i) r(i) = (*rho * basis->elements[i].mat.adjoint() * x).trace();
        Vector c = solver->solve(r);
        Matrix acc = Matrix::Zero(x.rows(), x.cols());
        for (long i = 0; i < n2; ++i) acc += c(i) * basis->elements[i].mat;
        return acc;
    };
    return e;
}

ChoiReport choi_check(const ChainWindow& w, const std::function<Matrix(const Matrix&)>& f) {
    const long d = w.dim();
    Matrix choi = Matrix::Zero(d * d, d * d);
    Matrix eij = Matrix::Zero(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) {
            eij(i, j) = 1.0;
            const Matrix y = f(eij);
            eij(i, j) = 0.0;
            for (long k = 0; k < d; ++k)
                for (long l = 0; l < d; ++l) choi(k * d + i, l * d + j) = y(k, l);
        }
    choi = 0.5 * (choi + Matrix(choi.adjoint()));
    Eigen::SelfAdjointEigenSolver<Matrix> es(choi, Eigen::EigenvaluesOnly);
    ChoiReport rep;
    rep.min_eigenvalue = es.eigenvalues().minCoeff();
    rep.is_cp = rep.min_eigenvalue >= -tol::choi;
    return rep;
}

ChoiReport choi_check(const CondExp& e) { return choi_check(e.domain, e.apply_fn); }

Matrix cesaro_superoperator(const ChainWindow& w, const std::function<Matrix(const Matrix&)>& e,
                            long k) {
    // A_1 = I; A_{2m} = (A_m + S^m A_m)/2. Requires k a power of two.
    if (k <= 0 || (k & (k - 1)) != 0) throw ConfigError("cesaro: k must be a power of two");
    const Matrix s = superoperator_of(w, e);
    const long d2 = s.rows();
    Matrix avg = Matrix::Identity(d2, d2);
    Matrix pow = s;
    for (long m = 1; m < k; m <<= 1) {
        avg = 0.5 * (avg + pow * avg);
        if ((m << 1) < k) pow = pow * pow;
    }
    return avg;
}

CondExp ergodic_average(const ChainWindow& w, const std::function<Matrix(const Matrix&)>& e,
                        const StateDensity& invariant_state, ErgodicReport* report) {
    const Matrix s = superoperator_of(w, e);
    const long d = w.dim();
    Eigen::ComplexEigenSolver<Matrix> right(s, true);
    if (right.info() != Eigen::Success) throw InternalError("ergodic_average: eigensolver failed");
    double sr = 0.0;
    for (Eigen::Index i = 0; i < right.eigenvalues().size(); ++i)
        sr = std::max(sr, std::abs(right.eigenvalues()(i)));
    if (sr > 1.0 + 1e-9)
        throw InternalError("ergodic_average: spectral radius " + std::to_string(sr) +
                            " exceeds one");

    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < right.eigenvalues().size(); ++i)
        if (std::abs(right.eigenvalues()(i) - 1.0) < 1e-8) idx.push_back(i);
    if (idx.empty()) throw InternalError("ergodic_average: no eigenvalue-1 eigenspace");

    Matrix v1(d * d, idx.size());
    for (size_t c = 0; c < idx.size(); ++c) v1.col(c) = right.eigenvectors().col(idx[c]);

    Eigen::ComplexEigenSolver<Matrix> left(Matrix(s.adjoint()), true);
    std::vector<Eigen::Index> lidx;
    for (Eigen::Index i = 0; i < left.eigenvalues().size(); ++i)
        if (std::abs(left.eigenvalues()(i) - 1.0) < 1e-8) lidx.push_back(i);
    if (lidx.size() != idx.size())
        throw InternalError("ergodic_average: left/right fixed-space dimension mismatch");
    Matrix w1(d * d, lidx.size());
    for (size_t c = 0; c < lidx.size(); ++c) w1.col(c) = left.eigenvectors().col(lidx[c]);

    // Riesz spectral projector through biorthogonalization.
    const Matrix small = w1.adjoint() * v1;
    const Matrix proj = v1 * small.partialPivLu().solve(w1.adjoint());

    std::vector<Matrix> fixed;
    for (Eigen::Index c = 0; c < v1.cols(); ++c) {
        const Matrix m = unvec(v1.col(c), d);
        fixed.push_back(0.5 * (m + Matrix(m.adjoint())));
        fixed.push_back(Matrix((m - Matrix(m.adjoint())) / Complex(0, 2)));
    }
    SubalgebraBasis range = orthonormalize(w, fixed, "fixed_points");

    CondExp out;
    out.domain = w;
    out.range = range;
    out.kind = CondExpKind::StatePreserving;
    out.preserved_state = invariant_state;
    auto pshared = std::make_shared<Matrix>(proj);
    out.apply_fn = [pshared, d](const Matrix& x) { return unvec(*pshared * vec(x), d); };

    if (report) {
        report->spectral_radius = sr;
        report->fixed_dimension = range.dim();
        report->algebra_residual = range.closure_residual();
        const Matrix pe = proj * s;
        const Matrix ep = s * proj;
        report->intertwine_residual =
            std::max(max_abs(Matrix(pe - proj)), max_abs(Matrix(ep - proj)));
    }
    return out;
}

double CondExpChecks::worst() const {
    double w = std::max({idempotence, unitality, bimodule, preservation});
    if (!cp) w = std::max(w, std::abs(std::min(choi_min, 0.0)));
    return w;
}

CondExpChecks check_condexp(const CondExp& e, Rng& rng, int samples) {
    CondExpChecks out;
    const ChainWindow w = e.domain;

    out.unitality = operator_norm(Matrix(e.apply(Matrix::Identity(w.dim(), w.dim())) -
                                         Matrix::Identity(w.dim(), w.dim())));

    for (int s = 0; s < samples; ++s) {
        const ChainOperator x = random_op(w, rng);
        const Matrix ex = e.apply(x.mat);
        out.idempotence = std::max(out.idempotence, operator_norm(Matrix(e.apply(ex) - ex)));

        // preservation: tau or the declared state
        if (e.kind == CondExpKind::StatePreserving || e.kind == CondExpKind::Quasi) {
            if (e.preserved_state) {
                const StateDensity ut = e.preserved_state->as_unit_trace();
                out.preservation = std::max(
                    out.preservation, std::abs((ut.rho * ex).trace() - (ut.rho * x.mat).trace()));
            }
        } else {
            out.preservation =
                std::max(out.preservation, std::abs(ex.trace() - x.mat.trace()) /
                                               static_cast<double>(w.dim()));
        }

        // module property: over the range (or the quasi module algebra)
        const SubalgebraBasis& mod =
            (e.kind == CondExpKind::Quasi && e.module_basis) ? *e.module_basis : e.range;
        Matrix c1 = Matrix::Zero(w.dim(), w.dim());
        Matrix c2 = Matrix::Zero(w.dim(), w.dim());
        for (const auto& b : mod.elements) {
            c1 += Complex(rng.gaussian(), rng.gaussian()) * b.mat;
            c2 += Complex(rng.gaussian(), rng.gaussian()) * b.mat;
        }
        const double nrm = std::max(1.0, operator_norm(c1) * operator_norm(c2));
        out.bimodule = std::max(
            out.bimodule, operator_norm(Matrix(e.apply(c1 * x.mat * c2) - c1 * ex * c2)) / nrm);
    }

    const ChoiReport choi = choi_check(e);
    out.choi_min = choi.min_eigenvalue;
    out.cp = choi.is_cp;
    return out;
}

// structure_decompose ----------------------------------------------------------

CentralDecomposition structure_decompose(const CondExp& e) {
    const ChainWindow w = e.domain;
    const long d = w.dim();
    const SubalgebraBasis& B = e.range;
    const long n = B.dim();

    // center coefficients: z = sum c_i b_i with [z, b_k] = 0 for all k
    Matrix k(n * d * d, n);
    for (long i = 0; i < n; ++i)
        for (long kk = 0; kk < n; ++kk) {
            const Matrix comm = B.elements[i].mat * B.elements[kk].mat -
                                B.elements[kk].mat * B.elements[i].mat;
            k.block(kk * d * d, i, d * d, 1) = vec(comm);
        }
    std::vector<Matrix> cvecs = nullspace(k, tol::rank);

    std::vector<Matrix> center;
    for (const auto& cv : cvecs) {
        Matrix z = Matrix::Zero(d, d);
        for (long i = 0; i < n; ++i) z += cv(i, 0) * B.elements[i].mat;
        center.push_back(0.5 * (z + Matrix(z.adjoint())));
        center.push_back(Matrix((z - Matrix(z.adjoint())) / Complex(0, 2)));
    }
    SubalgebraBasis zbasis = orthonormalize(w, center, "center");
    const long zdim = zbasis.dim();
    if (zdim == 0) throw InternalError("structure_decompose: empty center");

    // generic Hermitian center element separates the minimal projections
    Rng det(0x5eedULL);
    Matrix g = Matrix::Zero(d, d);
    for (long i = 0; i < zdim; ++i) g += det.gaussian() * zbasis.elements[i].mat;
    g = 0.5 * (g + Matrix(g.adjoint()));
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    std::vector<std::pair<double, Matrix>> clusters;  // eigenvalue -> projector
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double ev = es.eigenvalues()(i);
        const Matrix p = es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
        bool merged = false;
        for (auto& [val, proj] : clusters)
            if (std::abs(val - ev) < 1e-7 * std::max(1.0, std::abs(val))) {
                proj += p;
                merged = true;
                break;
            }
        if (!merged) clusters.emplace_back(ev, p);
    }
    if (static_cast<long>(clusters.size()) != zdim)
        throw InternalError("structure_decompose: range center not atomically spanned (dim " +
                            std::to_string(zdim) + ", projections " +
                            std::to_string(clusters.size()) + ")");

    CentralDecomposition out;
    for (auto& [val, proj] : clusters) {
        (void)val;
        out.central_projections.emplace_back(w, proj);
    }

    // relative commutant corner and factor state per projection
    for (const auto& pop : out.central_projections) {
        const Matrix& p = pop.mat;
        Matrix constraints(n * d * d + d * d, d * d);
        for (long kk = 0; kk < n; ++kk) {
            // vec([x, b_k]) = (I (x) b_k - b_k^T (x) I) vec(x)
            const Matrix& b = B.elements[kk].mat;
            Matrix op = Matrix::Zero(d * d, d * d);
            op += kron(Matrix::Identity(d, d), b);
            op -= kron(Matrix(b.transpose()), Matrix::Identity(d, d));
            constraints.block(kk * d * d, 0, d * d, d * d) = op;
        }
        {
            // x - P x P = 0
            Matrix op = Matrix::Identity(d * d, d * d) -
                        kron(Matrix(p.transpose()), p);
            constraints.block(n * d * d, 0, d * d, d * d) = op;
        }
        std::vector<Matrix> xs;
        for (const auto& v : nullspace(constraints, tol::rank)) xs.push_back(unvec(v.col(0), d));
        std::vector<Matrix> herm;
        for (const auto& x : xs) {
            herm.push_back(0.5 * (x + Matrix(x.adjoint())));
            herm.push_back(Matrix((x - Matrix(x.adjoint())) / Complex(0, 2)));
        }
        SubalgebraBasis corner = orthonormalize(w, herm, "corner_commutant");
        // conditioning: Gram of the corner under the normalized trace on the corner
        Matrix gram(corner.dim(), corner.dim());
        for (long i = 0; i < corner.dim(); ++i)
            for (long j = 0; j < corner.dim(); ++j)
                gram(i, j) = hs_inner(corner.elements[i].mat, corner.elements[j].mat);
        Eigen::SelfAdjointEigenSolver<Matrix> ges(gram, Eigen::EigenvaluesOnly);
        out.corner_conditioning.push_back(corner.dim() ? ges.eigenvalues().minCoeff() : 0.0);

        const double ptr = std::real(p.trace());
        std::vector<Complex> values;
        for (const auto& c : corner.elements) {
            const Matrix ec = e.apply(c.mat);
            const Complex phi = (p * ec).trace() / ptr;
            values.push_back(phi);
            out.corner_residual =
                std::max(out.corner_residual, operator_norm(Matrix(ec - phi * p)));
        }
        // corner factorization: E(P b c P) = phi(c) P b P on basis products
        for (const auto& b : B.elements)
            for (size_t ci = 0; ci < corner.elements.size(); ++ci) {
                const Matrix lhs = e.apply(p * b.mat * corner.elements[ci].mat * p);
                const Matrix rhs = values[ci] * (p * b.mat * p);
                out.corner_residual = std::max(out.corner_residual, operator_norm(Matrix(lhs - rhs)));
            }
        out.corner_commutants.push_back(std::move(corner));
        out.factor_state_values.push_back(std::move(values));
    }

    // (condd) reconstruction over the full domain basis
    Matrix eij = Matrix::Zero(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) {
            eij(i, j) = 1.0;
            const Matrix ex = e.apply(eij);
            Matrix rec = Matrix::Zero(d, d);
            for (const auto& pop : out.central_projections)
                rec += e.apply(pop.mat * eij * pop.mat) * pop.mat;
            eij(i, j) = 0.0;
            out.reconstruction_residual =
                std::max(out.reconstruction_residual, operator_norm(Matrix(rec - ex)));
        }
    return out;
}

}  // namespace qmark
