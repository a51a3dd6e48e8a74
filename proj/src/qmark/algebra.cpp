#include "qmark/algebra.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace qmark {

namespace {
const Complex kI(0.0, 1.0);

Matrix mat_s() {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 1) = 1.0;  // row 1 = unoccupied
    return s;
}

Matrix mat_v() {
    Matrix v = Matrix::Zero(2, 2);
    v(0, 0) = 1.0;
    v(1, 1) = -1.0;
    return v;
}
}  // namespace

// ChainWindow ----------------------------------------------------------------

ChainWindow::ChainWindow(int first_site, int length) : first(first_site), size(length) {
    if (length < 1 || length > kMaxSites)
        throw ConfigError("window length " + std::to_string(length) + " outside [1," +
                          std::to_string(kMaxSites) + "]");
}

int ChainWindow::index_of(int site) const {
    if (!contains(site))
        throw ConfigError("site " + std::to_string(site) + " outside window " + str());
    return site - first;
}

std::string ChainWindow::str() const {
    std::ostringstream os;
    os << "[" << first << "," << last() << "]";
    return os.str();
}

Region::Region(ChainWindow w, std::set<int> s) : window(w), sites(std::move(s)) {
    for (int site : sites)
        if (!window.contains(site))
            throw ConfigError("region site " + std::to_string(site) + " outside window " +
                              window.str());
}

Region Region::interval(ChainWindow w, int lo, int hi) {
    std::set<int> s;
    for (int j = lo; j <= hi; ++j) s.insert(j);
    return Region(w, std::move(s));
}

bool Region::contiguous() const {
    if (sites.empty()) return true;
    return static_cast<int>(sites.size()) == *sites.rbegin() - *sites.begin() + 1;
}

std::string Region::str() const {
    std::ostringstream os;
    os << "{";
    bool sep = false;
    for (int s : sites) {
        if (sep) os << ",";
        os << s;
        sep = true;
    }
    os << "}";
    return os.str();
}

std::string to_string(Parity p) {
    switch (p) {
        case Parity::Even: return "even";
        case Parity::Odd: return "odd";
        case Parity::Mixed: return "mixed";
        default: return "unknown";
    }
}

ChainOperator::ChainOperator(ChainWindow w, Matrix m) : window(w), mat(std::move(m)) {
    if (mat.rows() != window.dim() || mat.cols() != window.dim())
        throw InternalError("operator matrix dimension mismatch on window " + window.str());
}

// Constructions --------------------------------------------------------------

ChainOperator identity_op(const ChainWindow& w) {
    ChainOperator x(w, Matrix::Identity(w.dim(), w.dim()));
    x.parity_tag = Parity::Even;
    x.localization = Region(w, {});
    return x;
}

ChainOperator zero_op(const ChainWindow& w) {
    ChainOperator x(w, Matrix::Zero(w.dim(), w.dim()));
    x.parity_tag = Parity::Even;
    return x;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

namespace {
// Kronecker chain with single-site factors at given window offsets, identity
// elsewhere. `factors` maps offset -> 2x2 matrix.
Matrix site_chain(const ChainWindow& w, const std::vector<std::pair<int, Matrix>>& factors) {
    Matrix out = Matrix::Identity(1, 1);
    for (int k = 0; k < w.size; ++k) {
        const Matrix* f = nullptr;
        for (const auto& [off, m] : factors)
            if (off == k) f = &m;
        out = kron(out, f ? *f : Matrix::Identity(2, 2));
    }
    return out;
}
}  // namespace

ChainOperator annihilator(const ChainWindow& w, int site) {
    const int k = w.index_of(site);
    std::vector<std::pair<int, Matrix>> factors;
    for (int j = 0; j < k; ++j) factors.emplace_back(j, mat_v());
    factors.emplace_back(k, mat_s());
    ChainOperator x(w, site_chain(w, factors));
    x.parity_tag = Parity::Odd;
    x.localization = Region(w, {site});
    return x;
}

ChainOperator creator(const ChainWindow& w, int site) { return adjoint(annihilator(w, site)); }

ChainOperator matrix_unit(const ChainWindow& w, int site, int m, int n) {
    if (m < 1 || m > 2 || n < 1 || n > 2) throw ConfigError("matrix unit indices must be 1 or 2");
    const int k = w.index_of(site);
    Matrix e = Matrix::Zero(2, 2);
    e(m - 1, n - 1) = 1.0;  // string of a_k cancels against the explicit prefix
    ChainOperator x(w, site_chain(w, {{k, e}}));
    x.parity_tag = (m == n) ? Parity::Even : Parity::Odd;
    x.localization = Region(w, {site});
    return x;
}

ChainOperator occupation_projector(const ChainWindow& w, int site, int which) {
    if (which != 1 && which != 2) throw ConfigError("occupation projector index must be 1 or 2");
    return matrix_unit(w, site, which, which);
}

ChainOperator site_parity_op(const ChainWindow& w, int site) {
    ChainOperator x(w, site_chain(w, {{w.index_of(site), mat_v()}}));
    x.parity_tag = Parity::Even;
    x.localization = Region(w, {site});
    return x;
}

// Arithmetic -----------------------------------------------------------------

namespace {
void require_same_window(const ChainOperator& x, const ChainOperator& y) {
    if (x.window != y.window)
        throw ConfigError("window mismatch: " + x.window.str() + " vs " + y.window.str());
}
}  // namespace

ChainOperator add(const ChainOperator& x, const ChainOperator& y) {
    require_same_window(x, y);
    return ChainOperator(x.window, x.mat + y.mat);
}

ChainOperator sub(const ChainOperator& x, const ChainOperator& y) {
    require_same_window(x, y);
    return ChainOperator(x.window, x.mat - y.mat);
}

ChainOperator scale(Complex c, const ChainOperator& x) { return ChainOperator(x.window, c * x.mat); }

ChainOperator mul(const ChainOperator& x, const ChainOperator& y) {
    require_same_window(x, y);
    return ChainOperator(x.window, x.mat * y.mat);
}

ChainOperator adjoint(const ChainOperator& x) {
    ChainOperator out(x.window, x.mat.adjoint());
    out.parity_tag = x.parity_tag;
    out.localization = x.localization;
    return out;
}

ChainOperator commutator(const ChainOperator& x, const ChainOperator& y) {
    require_same_window(x, y);
    return ChainOperator(x.window, x.mat * y.mat - y.mat * x.mat);
}

ChainOperator anticommutator(const ChainOperator& x, const ChainOperator& y) {
    require_same_window(x, y);
    return ChainOperator(x.window, x.mat * y.mat + y.mat * x.mat);
}

Complex trace(const ChainOperator& x) { return x.mat.trace(); }

Complex normalized_trace(const ChainOperator& x) {
    return x.mat.trace() / static_cast<double>(x.dim());
}

double operator_norm(const Matrix& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().cwiseMax(0.0).maxCoeff();
    return std::sqrt(lmax);
}

double operator_norm(const ChainOperator& x) { return operator_norm(x.mat); }

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Parity ---------------------------------------------------------------------

int basis_parity(long index) {
    int bits = 0;
    while (index) {
        bits ^= static_cast<int>(index & 1);
        index >>= 1;
    }
    return bits ? -1 : 1;
}

ChainOperator parity(const ChainOperator& x) {
    Matrix out = x.mat;
    const long d = x.dim();
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j)
            if (basis_parity(i) != basis_parity(j)) out(i, j) = -out(i, j);
    ChainOperator r(x.window, std::move(out));
    r.localization = x.localization;
    return r;
}

std::pair<ChainOperator, ChainOperator> parity_decompose(const ChainOperator& x) {
    ChainOperator t = parity(x);
    ChainOperator plus(x.window, 0.5 * (x.mat + t.mat));
    ChainOperator minus(x.window, 0.5 * (x.mat - t.mat));
    plus.parity_tag = Parity::Even;
    minus.parity_tag = Parity::Odd;
    plus.localization = x.localization;
    minus.localization = x.localization;
    return {plus, minus};
}

ChainOperator even_part(const ChainOperator& x) { return parity_decompose(x).first; }
ChainOperator odd_part(const ChainOperator& x) { return parity_decompose(x).second; }

double parity_residual(const ChainOperator& x, Parity claimed) {
    if (claimed == Parity::Even) return operator_norm(odd_part(x));
    if (claimed == Parity::Odd) return operator_norm(even_part(x));
    return 0.0;
}

Parity detect_parity(const ChainOperator& x, double tolerance) {
    const double odd = max_abs(odd_part(x).mat);
    const double even = max_abs(even_part(x).mat);
    if (odd <= tolerance && even <= tolerance) return Parity::Even;  // zero operator
    if (odd <= tolerance) return Parity::Even;
    if (even <= tolerance) return Parity::Odd;
    return Parity::Mixed;
}

// Embedding ------------------------------------------------------------------

namespace {
Matrix parity_string(int sites) {
    Matrix s = Matrix::Identity(1, 1);
    for (int j = 0; j < sites; ++j) s = kron(s, mat_v());
    return s;
}
}  // namespace

ChainOperator embed(const ChainOperator& x, const ChainWindow& w2) {
    if (!w2.contains(x.window))
        throw ConfigError("embed: window " + x.window.str() + " not inside " + w2.str());
    const int left = x.window.first - w2.first;
    const int right = w2.last() - x.window.last();
    const Matrix idl = Matrix::Identity(1L << left, 1L << left);
    const Matrix idr = Matrix::Identity(1L << right, 1L << right);

    auto [xp, xm] = parity_decompose(x);
    Matrix out = kron(kron(idl, xp.mat), idr);
    if (max_abs(xm.mat) > 0.0) out += kron(kron(parity_string(left), xm.mat), idr);

    ChainOperator r(w2, std::move(out));
    r.parity_tag = x.parity_tag;
    if (x.localization)
        r.localization = Region(w2, x.localization->sites);
    else
        r.localization = Region(w2, [&] {
            std::set<int> s;
            for (int j = x.window.first; j <= x.window.last(); ++j) s.insert(j);
            return s;
        }());
    return r;
}

ChainOperator localize(const ChainOperator& x, const ChainWindow& w1) {
    if (!x.window.contains(w1))
        throw ConfigError("localize: window " + w1.str() + " not inside " + x.window.str());
    const int left = w1.first - x.window.first;
    const int right = x.window.last() - w1.last();
    const long dl = 1L << left, dr = 1L << right, d1 = w1.dim();

    auto [xp, xm] = parity_decompose(x);
    // even part: contract identity factors
    Matrix even = Matrix::Zero(d1, d1);
    for (long i = 0; i < d1; ++i)
        for (long j = 0; j < d1; ++j) {
            Complex acc = 0.0;
            for (long a = 0; a < dl; ++a)
                for (long b = 0; b < dr; ++b)
                    acc += xp.mat((a * d1 + i) * dr + b, (a * d1 + j) * dr + b);
            even(i, j) = acc / static_cast<double>(dl * dr);
        }
    // odd part: contract against the left parity string
    Matrix odd = Matrix::Zero(d1, d1);
    if (max_abs(xm.mat) > 0.0) {
        for (long i = 0; i < d1; ++i)
            for (long j = 0; j < d1; ++j) {
                Complex acc = 0.0;
                for (long a = 0; a < dl; ++a) {
                    const double sgn = basis_parity(a);
                    for (long b = 0; b < dr; ++b)
                        acc += sgn * xm.mat((a * d1 + i) * dr + b, (a * d1 + j) * dr + b);
                }
                odd(i, j) = acc / static_cast<double>(dl * dr);
            }
    }
    ChainOperator r(w1, even + odd);
    r.parity_tag = x.parity_tag;
    return r;
}

Matrix ptrace_right(const Matrix& m, int traced_sites) {
    const long dt = 1L << traced_sites;
    const long dk = m.rows() / dt;
    Matrix out = Matrix::Zero(dk, dk);
    for (long i = 0; i < dk; ++i)
        for (long j = 0; j < dk; ++j) {
            Complex acc = 0.0;
            for (long b = 0; b < dt; ++b) acc += m(i * dt + b, j * dt + b);
            out(i, j) = acc;
        }
    return out;
}

Matrix ptrace_left(const Matrix& m, int traced_sites) {
    const long dt = 1L << traced_sites;
    const long dk = m.rows() / dt;
    Matrix out = Matrix::Zero(dk, dk);
    for (long i = 0; i < dk; ++i)
        for (long j = 0; j < dk; ++j) {
            Complex acc = 0.0;
            for (long a = 0; a < dt; ++a) acc += m(a * dk + i, a * dk + j);
            out(i, j) = acc;
        }
    return out;
}

// StateDensity ---------------------------------------------------------------

StateDensity::StateDensity(ChainWindow w, Matrix r, TraceNormalization n)
    : window(w), rho(std::move(r)), normalization(n) {
    if (rho.rows() != window.dim() || rho.cols() != window.dim())
        throw InternalError("state density dimension mismatch on " + window.str());
}

Complex StateDensity::operator()(const ChainOperator& x) const {
    const ChainOperator xe = (x.window == window) ? x : embed(x, window);
    if (normalization == TraceNormalization::UnitTrace) return (rho * xe.mat).trace();
    return (rho * xe.mat).trace() / static_cast<double>(window.dim());
}

double StateDensity::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    if (normalization == TraceNormalization::UnitNormalizedTrace)
        lmin /= static_cast<double>(window.dim());  // compare against the unit-trace scale
    return lmin;
}

void StateDensity::require_faithful(double floor) const {
    if (min_eigenvalue() < floor)
        throw FaithfulnessError("density on " + window.str() + " has eigenvalue below floor");
}

void StateDensity::validate(double tolerance) const {
    if (max_abs(Matrix(rho - rho.adjoint())) > tolerance)
        throw InternalError("density not Hermitian on " + window.str());
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tolerance)
        throw InternalError("density not positive on " + window.str());
    const double t = rho.trace().real();
    const double want =
        normalization == TraceNormalization::UnitTrace ? 1.0 : static_cast<double>(window.dim());
    if (std::abs(t - want) > tolerance * want)
        throw InternalError("density trace " + std::to_string(t) + " != declared normalization");
}

StateDensity StateDensity::as_unit_trace() const {
    if (normalization == TraceNormalization::UnitTrace) return *this;
    return StateDensity(window, rho / static_cast<double>(window.dim()),
                        TraceNormalization::UnitTrace);
}

StateDensity StateDensity::as_unit_normalized_trace() const {
    if (normalization == TraceNormalization::UnitNormalizedTrace) return *this;
    return StateDensity(window, rho * static_cast<double>(window.dim()),
                        TraceNormalization::UnitNormalizedTrace);
}

StateDensity reduce_to(const StateDensity& rho, const ChainWindow& sub) {
    if (!rho.window.contains(sub))
        throw ConfigError("reduce_to: " + sub.str() + " not inside " + rho.window.str());
    // Riesz extraction against the embedded matrix-unit basis; exact for the
    // odd components too because embed carries the parity string.
    const StateDensity ut = rho.as_unit_trace();
    const long d = sub.dim();
    Matrix out = Matrix::Zero(d, d);
    // rho_red(i,j) = phi(embed(E_ji))
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) {
            Matrix eji = Matrix::Zero(d, d);
            eji(j, i) = 1.0;
            ChainOperator e(sub, std::move(eji));
            out(i, j) = (ut.rho * embed(e, rho.window).mat).trace();
        }
    return StateDensity(sub, std::move(out), TraceNormalization::UnitTrace);
}

// Rng -------------------------------------------------------------------------

std::uint64_t Rng::next() {
    // splitmix64; fixed algorithm so seeded runs are identical everywhere
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
}

Complex Rng::cgaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return Complex(re, im);
}

ChainOperator random_op(const ChainWindow& w, Rng& rng) {
    Matrix m(w.dim(), w.dim());
    for (long i = 0; i < w.dim(); ++i)
        for (long j = 0; j < w.dim(); ++j) m(i, j) = rng.cgaussian();
    return ChainOperator(w, std::move(m));
}

ChainOperator random_hermitian(const ChainWindow& w, Rng& rng) {
    ChainOperator x = random_op(w, rng);
    return ChainOperator(w, 0.5 * (x.mat + x.mat.adjoint()));
}

ChainOperator random_even(const ChainWindow& w, Rng& rng) {
    ChainOperator x = random_op(w, rng);
    ChainOperator e = even_part(x);
    e.parity_tag = Parity::Even;
    return e;
}

}  // namespace qmark
