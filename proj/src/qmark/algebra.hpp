#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmark {

using Complex = std::complex<double>;
using Matrix  = Eigen::MatrixXcd;
using Vector  = Eigen::VectorXcd;

// Error taxonomy mirrored by the C API / CLI exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FaithfulnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

namespace tol {
// Pinned tolerances used across the test and acceptance suites.
inline constexpr double car            = 1e-12;
inline constexpr double closed_form    = 1e-12;
inline constexpr double evenness       = 1e-10;
inline constexpr double basis_gram     = 1e-10;
inline constexpr double membership     = 1e-9;
inline constexpr double condexp        = 1e-9;
inline constexpr double choi           = 1e-9;
inline constexpr double amplitude      = 1e-9;
inline constexpr double markov         = 1e-9;
inline constexpr double potential      = 1e-8;
inline constexpr double commutator     = 1e-9;
inline constexpr double rank           = 1e-8;
inline constexpr double cocycle        = 1e-7;
inline constexpr double kms            = 1e-7;
inline constexpr double dynamics       = 1e-10;
inline constexpr double faithful_floor = 1e-12;
}  // namespace tol

inline constexpr int kMaxSites = 8;  // dense 2^L cap

// ---------------------------------------------------------------------------
// ChainWindow: consecutive integer site labels [first, first+size-1],
// local dimension 2 per site. Site `first` is the most significant bit of
// the computational-basis index; basis index 1 = unoccupied (bit 0).
// ---------------------------------------------------------------------------
struct ChainWindow {
    int first = 0;
    int size  = 1;

    ChainWindow() = default;
    ChainWindow(int first_site, int length);

    int  last() const { return first + size - 1; }
    long dim() const { return 1L << size; }
    bool contains(int site) const { return site >= first && site <= last(); }
    bool contains(const ChainWindow& w) const {
        return w.first >= first && w.last() <= last();
    }
    int index_of(int site) const;

    bool operator==(const ChainWindow& o) const {
        return first == o.first && size == o.size;
    }
    bool operator!=(const ChainWindow& o) const { return !(*this == o); }
    std::string str() const;
};

// Sorted set of sites inside a window; empty set denotes the scalars.
struct Region {
    ChainWindow window;
    std::set<int> sites;

    Region() = default;
    Region(ChainWindow w, std::set<int> s);
    static Region interval(ChainWindow w, int lo, int hi);
    bool contiguous() const;
    std::string str() const;
};

enum class Parity { Even, Odd, Mixed, Unknown };
std::string to_string(Parity p);

// ---------------------------------------------------------------------------
// ChainOperator: dense operator on a window, with optional localization
// region and a cached (advisory) parity tag.
// ---------------------------------------------------------------------------
struct ChainOperator {
    ChainWindow window;
    Matrix mat;
    std::optional<Region> localization;
    Parity parity_tag = Parity::Unknown;

    ChainOperator() = default;
    ChainOperator(ChainWindow w, Matrix m);

    long dim() const { return window.dim(); }
};

// Basic constructions --------------------------------------------------------

ChainOperator identity_op(const ChainWindow& w);
ChainOperator zero_op(const ChainWindow& w);

// a_k via the string construction V ⊗ ... ⊗ V ⊗ s ⊗ I ⊗ ... ⊗ I.
ChainOperator annihilator(const ChainWindow& w, int site);
ChainOperator creator(const ChainWindow& w, int site);

// e_{mn}(k), m,n in {1,2}: e11 = a a+, e22 = a+ a, e12 = (prod V) a, e21 = e12*.
// In this convention the string of a_k cancels and products of matrix units
// across sites are plain Kronecker elementary matrices.
ChainOperator matrix_unit(const ChainWindow& w, int site, int m, int n);

// Occupation projections P_1 = a a+ (empty), P_2 = a+ a (occupied).
ChainOperator occupation_projector(const ChainWindow& w, int site, int which);

// diag(1,-1) at one site; product over all sites gives the grading operator.
ChainOperator site_parity_op(const ChainWindow& w, int site);

// Arithmetic -----------------------------------------------------------------

ChainOperator add(const ChainOperator& x, const ChainOperator& y);
ChainOperator sub(const ChainOperator& x, const ChainOperator& y);
ChainOperator scale(Complex c, const ChainOperator& x);
ChainOperator mul(const ChainOperator& x, const ChainOperator& y);
ChainOperator adjoint(const ChainOperator& x);
ChainOperator commutator(const ChainOperator& x, const ChainOperator& y);
ChainOperator anticommutator(const ChainOperator& x, const ChainOperator& y);

Complex trace(const ChainOperator& x);             // unnormalized Tr
Complex normalized_trace(const ChainOperator& x);  // tau = Tr / 2^L
double  operator_norm(const ChainOperator& x);     // largest singular value
double  operator_norm(const Matrix& m);
double  max_abs(const Matrix& m);

// Parity ---------------------------------------------------------------------

// Theta(x) = P x P with P = prod_j V_j over the whole window.
ChainOperator parity(const ChainOperator& x);
// x = x_+ + x_- with Theta(x_pm) = pm x_pm.
std::pair<ChainOperator, ChainOperator> parity_decompose(const ChainOperator& x);
ChainOperator even_part(const ChainOperator& x);
ChainOperator odd_part(const ChainOperator& x);
// Residual distance from the claimed parity class.
double parity_residual(const ChainOperator& x, Parity claimed);
Parity detect_parity(const ChainOperator& x, double tolerance = tol::evenness);

// Embedding ------------------------------------------------------------------

// Unital *-monomorphism A_{W1} -> A_{W2} mapping generators to generators.
// Even parts embed as I (x) x (x) I; odd parts carry the parity string of the
// extra sites to the left so that CAR relations stay exact.
ChainOperator embed(const ChainOperator& x, const ChainWindow& w2);

// Inverse of embed on its image (operators localized in `w1`).
ChainOperator localize(const ChainOperator& x, const ChainWindow& w1);

// Partial traces over trailing/leading sites (plain index contractions).
Matrix ptrace_right(const Matrix& m, int traced_sites);
Matrix ptrace_left(const Matrix& m, int traced_sites);

// Kronecker product (first argument = more significant sites).
Matrix kron(const Matrix& a, const Matrix& b);

// Parity sign of a computational basis index (number of occupied sites mod 2).
int basis_parity(long index);

// ---------------------------------------------------------------------------
// StateDensity: positive operator representing a state on the window.
// ---------------------------------------------------------------------------
enum class TraceNormalization { UnitTrace, UnitNormalizedTrace };

struct StateDensity {
    ChainWindow window;
    Matrix rho;
    TraceNormalization normalization = TraceNormalization::UnitNormalizedTrace;

    StateDensity() = default;
    StateDensity(ChainWindow w, Matrix r, TraceNormalization n);

    // Expectation value of x (localized within the window).
    Complex operator()(const ChainOperator& x) const;

    double min_eigenvalue() const;
    // Throws FaithfulnessError below the floor.
    void require_faithful(double floor = tol::faithful_floor) const;
    void validate(double tolerance = 1e-9) const;

    StateDensity as_unit_trace() const;
    StateDensity as_unit_normalized_trace() const;
};

// Reduced density (unit trace) of the state on a subinterval of its window.
StateDensity reduce_to(const StateDensity& rho, const ChainWindow& sub);

// Random operators (deterministic given the generator state) ------------------

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
    double uniform();       // [0,1)
    double gaussian();      // Box-Muller, fixed algorithm for reproducibility
    Complex cgaussian();
    std::uint64_t next();

  private:
    std::uint64_t state_;
    bool   have_spare_ = false;
    double spare_      = 0.0;
};

ChainOperator random_op(const ChainWindow& w, Rng& rng);
ChainOperator random_hermitian(const ChainWindow& w, Rng& rng);
ChainOperator random_even(const ChainWindow& w, Rng& rng);

}  // namespace qmark
