#include "qmark/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>

namespace qmark {

namespace {
Matrix apply_spectral(const Matrix& a, const std::function<double(double)>& f, double floor,
                      const char* what) {
    if (hermiticity_residual(a) > 1e-9)
        throw InternalError(std::string(what) + ": input not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success) throw InternalError(std::string(what) + ": eigensolver failed");
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) < floor)
            throw FaithfulnessError(std::string(what) + ": eigenvalue " + std::to_string(ev(i)) +
                                    " below floor");
    Eigen::VectorXd fe(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) fe(i) = f(ev(i));
    return es.eigenvectors() * fe.asDiagonal() * es.eigenvectors().adjoint();
}
}  // namespace

double hermiticity_residual(const Matrix& a) { return max_abs(Matrix(a - a.adjoint())); }

Matrix expm_h(const Matrix& a) {
    return apply_spectral(a, [](double x) { return std::exp(x); },
                          -std::numeric_limits<double>::infinity(), "expm_h");
}

Matrix logm_h(const Matrix& a, double floor) {
    return apply_spectral(a, [](double x) { return std::log(x); }, floor, "logm_h");
}

Matrix sqrtm_h(const Matrix& a, double floor) {
    return apply_spectral(a, [](double x) { return std::sqrt(std::max(x, 0.0)); }, floor,
                          "sqrtm_h");
}

Matrix invm_h(const Matrix& a, double floor) {
    return apply_spectral(a, [](double x) { return 1.0 / x; }, floor, "invm_h");
}

double hermitian_condition(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().cwiseAbs().minCoeff();
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

}  // namespace qmark
