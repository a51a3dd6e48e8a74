#include "qmark/families.hpp"

#include "qmark/linalg.hpp"

#include <cmath>

namespace qmark {

StateDensity product_state(const ChainWindow& w, const std::vector<double>& empty_probability) {
    if (static_cast<int>(empty_probability.size()) != w.size)
        throw ConfigError("product state needs one probability per site");
    Matrix rho = Matrix::Identity(1, 1);
    for (double p : empty_probability) {
        if (p <= 0.0 || p >= 1.0) throw FaithfulnessError("product state probability not in (0,1)");
        Matrix site = Matrix::Zero(2, 2);
        site(0, 0) = p;
        site(1, 1) = 1.0 - p;
        rho = kron(rho, site);
    }
    return StateDensity(w, rho * static_cast<double>(w.dim()),
                        TraceNormalization::UnitNormalizedTrace);
}

StateDensity trace_state(const ChainWindow& w) {
    return StateDensity(w, Matrix::Identity(w.dim(), w.dim()),
                        TraceNormalization::UnitNormalizedTrace);
}

Matrix two_block_pair_density(double t_hop, double t_vv) {
    const ChainWindow pw(0, 2);
    const ChainOperator hop =
        add(mul(creator(pw, 0), annihilator(pw, 1)), mul(creator(pw, 1), annihilator(pw, 0)));
    const ChainOperator vv = mul(site_parity_op(pw, 0), site_parity_op(pw, 1));
    Matrix g = t_hop * hop.mat + t_vv * vv.mat;
    Matrix rho = expm_h(g);
    rho /= rho.trace().real();
    return rho;
}

StateDensity two_block_state(const ChainWindow& w, double t_hop, double t_vv) {
    if (w.size % 2 != 0) throw ConfigError("two-block state needs an even window length");
    const Matrix pair = two_block_pair_density(t_hop, t_vv);
    Matrix rho = Matrix::Identity(1, 1);
    for (int k = 0; k < w.size / 2; ++k) rho = kron(rho, pair);
    return StateDensity(w, rho * static_cast<double>(w.dim()),
                        TraceNormalization::UnitNormalizedTrace);
}

StateDensity diagonal_lift_state(const ChainWindow& w, const std::array<double, 2>& initial,
                                 const Transition& pi) {
    const long d = w.dim();
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(d);
    for (long idx = 0; idx < d; ++idx) {
        // site bits: first site most significant; bit 0 = empty = outcome 1
        int prev = (idx >> (w.size - 1)) & 1;
        double mu = initial[prev];
        for (int s = 1; s < w.size; ++s) {
            const int cur = (idx >> (w.size - 1 - s)) & 1;
            mu *= pi[prev][cur];
            prev = cur;
        }
        weights(idx) = mu;
    }
    if (weights.minCoeff() <= 0.0)
        throw FaithfulnessError("diagonal lift has zero-weight paths; state not locally faithful");
    Matrix rho = Matrix::Zero(d, d);
    rho.diagonal() = weights.cast<Complex>() * static_cast<double>(d);
    return StateDensity(w, rho, TraceNormalization::UnitNormalizedTrace);
}

std::array<double, 2> stationary_distribution(const Transition& pi) {
    // unique left fixed vector of a 2x2 stochastic matrix
    const double a = pi[0][1], b = pi[1][0];
    if (a + b <= 0.0) return {0.5, 0.5};
    return {b / (a + b), a / (a + b)};
}

double second_eigenvalue(const Transition& pi) { return pi[0][0] + pi[1][1] - 1.0; }

bool is_primitive(const Transition& pi) {
    // positive entries after squaring and a spectral gap
    double p2[2][2] = {};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) p2[i][j] += pi[i][k] * pi[k][j];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (p2[i][j] <= 0.0) return false;
    return std::abs(second_eigenvalue(pi)) < 1.0;
}

}  // namespace qmark
