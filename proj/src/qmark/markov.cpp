#include "qmark/markov.hpp"

#include "qmark/io.hpp"
#include "qmark/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <sstream>

namespace qmark {

namespace {

// Trace expectation onto the initial segment [first, n] of the window: the
// normalized partial trace over the trailing sites, re-tensored with identity.
Matrix ce_initial(const ChainWindow& w, const Matrix& x, int n) {
    const int traced = w.last() - n;
    if (traced == 0) return x;
    const long dt = 1L << traced;
    Matrix red = ptrace_right(x, traced) / static_cast<double>(dt);
    return kron(red, Matrix::Identity(dt, dt));
}

ChainWindow pair_window(int n) { return ChainWindow(n - 1, 2); }

}  // namespace

// AmplitudeSequence ------------------------------------------------------------

const ChainOperator& AmplitudeSequence::amplitude(int n) const {
    const int idx = n - (window.first + 1);
    if (idx < 0 || idx >= static_cast<int>(amplitudes.size()))
        throw ConfigError("amplitude index " + std::to_string(n) + " outside window " +
                          window.str());
    return amplitudes[idx];
}

ChainOperator& AmplitudeSequence::amplitude(int n) {
    return const_cast<ChainOperator&>(static_cast<const AmplitudeSequence&>(*this).amplitude(n));
}

void AmplitudeSequence::validate(double even_tol) const {
    if (window.last() != 0) throw ConfigError("amplitude window must end at site 0");
    if (static_cast<int>(amplitudes.size()) != window.size - 1)
        throw ConfigError("expected " + std::to_string(window.size - 1) + " amplitudes, have " +
                          std::to_string(amplitudes.size()));
    if (w0.window != ChainWindow(0, 1)) throw ConfigError("w0 must live on the one-site window {0}");
    if (parity_residual(w0, Parity::Even) > even_tol)
        throw ConfigError("w0 has an odd part above tolerance");
    Eigen::SelfAdjointEigenSolver<Matrix> es(w0.mat, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -even_tol) throw ConfigError("w0 is not positive");
    for (int n = window.first + 1; n <= 0; ++n) {
        const ChainOperator& k = amplitude(n);
        if (k.window != pair_window(n))
            throw ConfigError("amplitude K_{" + std::to_string(n - 1) + "," + std::to_string(n) +
                              "} carries the wrong window " + k.window.str());
        if (parity_residual(k, Parity::Even) > even_tol)
            throw ConfigError("amplitude at n=" + std::to_string(n) +
                              " has an odd part above tolerance");
    }
}

ChainOperator cumulative_amplitude(const AmplitudeSequence& seq, int n) {
    const ChainWindow vol(n, -n + 1);
    Matrix acc = Matrix::Identity(vol.dim(), vol.dim());
    for (int m = n + 1; m <= 0; ++m) acc = acc * embed(seq.amplitude(m), vol).mat;
    ChainOperator w0h(seq.w0.window, sqrtm_h(seq.w0.mat));
    w0h.parity_tag = Parity::Even;
    acc = acc * embed(w0h, vol).mat;
    ChainOperator out(vol, std::move(acc));
    out.parity_tag = Parity::Even;
    return out;
}

ChainOperator partial_amplitude(const AmplitudeSequence& seq, int n, int k) {
    if (k <= n || k > 0) throw ConfigError("partial amplitude needs n < k <= 0");
    const ChainWindow win(n, k - n + 1);
    Matrix acc = Matrix::Identity(win.dim(), win.dim());
    for (int m = n + 1; m <= k; ++m) acc = acc * embed(seq.amplitude(m), win).mat;
    ChainOperator out(win, std::move(acc));
    out.parity_tag = Parity::Even;
    return out;
}

AmplitudeConditionReport verify_amplitudes(const AmplitudeSequence& seq) {
    AmplitudeConditionReport rep;
    rep.w0_evenness = parity_residual(seq.w0, Parity::Even);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (seq.w0.mat + seq.w0.mat.adjoint()),
                                             Eigen::EigenvaluesOnly);
    rep.w0_positivity = std::max(0.0, -es.eigenvalues().minCoeff());
    rep.worst = std::max(rep.w0_evenness, rep.w0_positivity);

    for (int n = seq.window.first + 1; n <= 0; ++n) {
        const ChainOperator& k = seq.amplitude(n);
        const ChainWindow pw = k.window;
        AmplitudeConditionReport::Entry entry;
        entry.n = n;
        entry.evenness = parity_residual(k, Parity::Even);

        // left normalization: expectation onto A_{n-1]} restricted to the pair
        // (n = 0 includes w0 inside the product)
        Matrix inner = k.mat * k.mat.adjoint();
        if (n == 0) inner = k.mat * embed(seq.w0, pw).mat * k.mat.adjoint();
        const CondExp left = hs_conditional_expectation(single_site_basis(pw, n - 1));
        entry.norm_left =
            operator_norm(Matrix(left.apply(inner) - Matrix::Identity(pw.dim(), pw.dim())));

        // right normalization for n <= -1
        if (n <= -1) {
            const CondExp right = hs_conditional_expectation(single_site_basis(pw, n));
            entry.norm_right = operator_norm(
                Matrix(right.apply(k.mat.adjoint() * k.mat) - Matrix::Identity(pw.dim(), pw.dim())));
        }
        rep.worst = std::max({rep.worst, entry.evenness, entry.norm_left, entry.norm_right});
        rep.entries.push_back(entry);
    }
    return rep;
}

// MarkovState -------------------------------------------------------------------

const StateDensity& MarkovState::volume(int n) const {
    const int idx = -n;
    if (idx < 0 || idx >= static_cast<int>(volumes.size()))
        throw ConfigError("volume " + std::to_string(n) + " not built");
    return volumes[idx];
}

Complex MarkovState::eval(const ChainOperator& x) const { return full()(x); }

MarkovState build_state(const AmplitudeSequence& seq, BuildReport* report) {
    MarkovState st;
    st.window = seq.window;
    for (int n = 0; n >= seq.window.first; --n) {
        const ChainOperator kb = cumulative_amplitude(seq, n);
        Matrix w = kb.mat.adjoint() * kb.mat;
        st.volumes.emplace_back(ChainWindow(n, -n + 1), std::move(w),
                                TraceNormalization::UnitNormalizedTrace);
    }
    if (report) {
        BuildReport rep;
        for (int n = 0; n >= seq.window.first; --n) {
            const StateDensity& wn = st.volume(n);
            rep.trace_residual = std::max(
                rep.trace_residual,
                std::abs(wn.rho.trace().real() / static_cast<double>(wn.window.dim()) - 1.0));
            rep.evenness =
                std::max(rep.evenness, parity_residual(ChainOperator(wn.window, wn.rho), Parity::Even));
            rep.min_eigenvalue = std::min(rep.min_eigenvalue, wn.min_eigenvalue());
            if (n <= -1) {
                // projectivity: normalized trace over site n of W_{[n,0]}
                // against W_{[n+1,0]}
                const Matrix red = ptrace_left(st.volume(n).rho, 1) / 2.0;
                rep.projectivity =
                    std::max(rep.projectivity, max_abs(Matrix(red - st.volume(n + 1).rho)) /
                                                   static_cast<double>(st.volume(n + 1).window.dim()));
                // compatibility of the functionals through the embedded basis
                const StateDensity red_state = reduce_to(st.volume(n), st.volume(n + 1).window);
                const Matrix diff =
                    red_state.rho - st.volume(n + 1).as_unit_trace().rho;
                rep.compatibility = std::max(rep.compatibility, max_abs(diff));
            }
        }
        *report = rep;
    }
    return st;
}

CondExp quasi_conditional_expectation(const AmplitudeSequence& seq, int n,
                                      const MarkovState* state) {
    const ChainWindow win = seq.window;
    if (n < win.first || n > 0) throw ConfigError("quasi expectation index outside window");
    const ChainOperator kb = embed(cumulative_amplitude(seq, n), win);

    CondExp e;
    e.domain = win;
    e.range = initial_segment_basis(win, n);
    e.kind = CondExpKind::Quasi;
    e.module_basis = (n > win.first) ? initial_segment_basis(win, n - 1) : scalars_basis(win);
    if (state) e.preserved_state = state->full();
    auto k = std::make_shared<Matrix>(kb.mat);
    auto w = win;
    e.apply_fn = [k, w, n](const Matrix& x) { return ce_initial(w, (*k) * x * k->adjoint(), n); };
    return e;
}

double MarkovReport::worst() const {
    return std::max({chain_identity, chain_sampled, local_invariance, theta_commutation,
                     localization, evenness});
}

MarkovReport verify_markov(const AmplitudeSequence& seq, const MarkovState& state, Rng& rng,
                           int samples) {
    MarkovReport rep;
    const ChainWindow win = seq.window;
    const long dim = win.dim();
    const Matrix& w = state.full().rho;

    rep.evenness = parity_residual(ChainOperator(win, w), Parity::Even);

    for (int h = win.first + 1; h <= 0; ++h) {
        const ChainOperator kb = embed(cumulative_amplitude(seq, h), win);
        // phi(E_{h]}(x)) = tau(D_h x) with D_h = K* CE_{h]}(W) K; comparing D_h
        // against W entrywise covers the full monomial basis at once.
        const Matrix dh = kb.mat.adjoint() * ce_initial(win, w, h) * kb.mat;
        rep.chain_identity =
            std::max(rep.chain_identity, max_abs(Matrix(dh - w)) / static_cast<double>(dim));

        // independent route on random operators
        const CondExp en = quasi_conditional_expectation(seq, h, &state);
        for (int s = 0; s < std::max(2, samples / 4); ++s) {
            const ChainOperator x = random_op(win, rng);
            const Complex lhs = state.full()(en(x));
            const Complex rhs = state.full()(x);
            rep.chain_sampled =
                std::max(rep.chain_sampled, std::abs(lhs - rhs) / std::max(1.0, operator_norm(x)));
        }

        // Theta commutation and localization of the one-sided expectation
        for (int s = 0; s < 2; ++s) {
            const ChainOperator x = random_op(win, rng);
            const ChainOperator lhs = en(parity(x));
            const ChainOperator rhs = parity(en(x));
            rep.theta_commutation =
                std::max(rep.theta_commutation,
                         operator_norm(sub(lhs, rhs)) / std::max(1.0, operator_norm(x)));
        }
        if (h >= win.first && h <= 0) {
            const SubalgebraBasis site = single_site_basis(win, h);
            const SubalgebraBasis tail = final_segment_basis(win, h);
            for (const auto& b : tail.elements) {
                const ChainOperator ex = en(b);
                rep.localization = std::max(rep.localization, membership_residual(ex, site));
            }
        }
    }

    // one-bond transition maps: x in A_{n+1]} with the truncated kernel
    for (int n = win.first; n <= -1; ++n) {
        const ChainOperator kk = embed(seq.amplitude(n + 1), win);
        for (int s = 0; s < std::max(2, samples / 4); ++s) {
            ChainOperator x = random_op(ChainWindow(win.first, n + 1 - win.first + 1), rng);
            const ChainOperator xe = embed(x, win);
            const Matrix tx = ce_initial(win, kk.mat * xe.mat * kk.mat.adjoint(), n);
            const Complex lhs = state.full()(ChainOperator(win, tx));
            const Complex rhs = state.full()(xe);
            rep.local_invariance =
                std::max(rep.local_invariance, std::abs(lhs - rhs) / std::max(1.0, operator_norm(x)));
        }
    }
    return rep;
}

// Families -----------------------------------------------------------------------

namespace {
ChainOperator ising_pair_factor(int n, double ea, double eb, double eg, double ed) {
    const ChainWindow pw = pair_window(n);
    const ChainOperator p1l = occupation_projector(pw, n - 1, 1);
    const ChainOperator p2l = occupation_projector(pw, n - 1, 2);
    const ChainOperator p1r = occupation_projector(pw, n, 1);
    const ChainOperator p2r = occupation_projector(pw, n, 2);
    Matrix m = ea * (p2l.mat * p2r.mat) + eb * (p1l.mat * p2r.mat) + eg * (p2l.mat * p1r.mat) +
               ed * (p1l.mat * p1r.mat);
    ChainOperator out(pw, std::move(m));
    out.parity_tag = Parity::Even;
    return out;
}
}  // namespace

AmplitudeSequence ising_amplitudes(int n_min, double alpha, double beta, double gamma,
                                   double delta, double h, double* cross_check) {
    const double lhs = std::exp(h * alpha) + std::exp(h * beta);
    const double rhs = std::exp(h * gamma) + std::exp(h * delta);
    if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, std::abs(lhs)))
        throw ConfigError("ising family requires e^{h a}+e^{h b} = e^{h g}+e^{h d}; difference " +
                          format_double(lhs - rhs));
    const double kappa = 0.5 * lhs;

    AmplitudeSequence seq;
    seq.window = ChainWindow(n_min, -n_min + 1);
    seq.family = "ising";
    seq.params = {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"delta", delta}, {"h", h}};
    seq.w0 = identity_op(ChainWindow(0, 1));

    double worst_gap = 0.0;
    for (int n = n_min + 1; n <= 0; ++n) {
        const ChainOperator closed =
            ising_pair_factor(n, std::exp(0.5 * h * alpha), std::exp(0.5 * h * beta),
                              std::exp(0.5 * h * gamma), std::exp(0.5 * h * delta));
        const ChainOperator b = ising_pair_factor(n, alpha, beta, gamma, delta);
        const Matrix viaexp = expm_h(0.5 * h * b.mat);
        worst_gap = std::max(worst_gap, max_abs(Matrix(closed.mat - viaexp)));
        ChainOperator k(closed.window, closed.mat / std::sqrt(kappa));
        k.parity_tag = Parity::Even;
        seq.amplitudes.push_back(std::move(k));
    }
    if (cross_check) *cross_check = worst_gap;
    seq.validate();
    return seq;
}

AmplitudeSequence hopping_amplitudes(int n_min, double h, HoppingDiagnostics* diag) {
    AmplitudeSequence seq;
    seq.window = ChainWindow(n_min, -n_min + 1);
    seq.family = "hopping";
    seq.params = {{"h", h}};
    seq.w0 = identity_op(ChainWindow(0, 1));

    HoppingDiagnostics d;
    d.alpha_hyperbolic = 0.5 * (1.0 + std::cosh(h));
    d.alpha_trigonometric = 0.5 * (1.0 + std::cos(h));

    for (int n = n_min + 1; n <= 0; ++n) {
        const ChainWindow pw = pair_window(n);
        const ChainOperator hop = add(mul(creator(pw, n - 1), annihilator(pw, n)),
                                      mul(creator(pw, n), annihilator(pw, n - 1)));
        const Matrix u = hop.mat;
        const Matrix v = expm_h(0.5 * h * u);

        if (n == 0 && diag) {
            const Matrix ehu = expm_h(h * u);
            const Matrix u2 = u * u;
            const Matrix id = Matrix::Identity(pw.dim(), pw.dim());
            d.closed_form_hyperbolic =
                max_abs(Matrix(ehu - (id + std::sinh(h) * u + (std::cosh(h) - 1.0) * u2)));
            d.closed_form_trigonometric =
                max_abs(Matrix(ehu - (id + std::sin(h) * u + (std::cos(h) - 1.0) * u2)));
        }

        // normalizer from the computed expectation, not the printed value
        const CondExp left = hs_conditional_expectation(single_site_basis(pw, n - 1));
        const Matrix m = left.apply(v * v.adjoint());
        const double alpha = std::real(m.trace()) / static_cast<double>(pw.dim());
        const double scalar_res =
            operator_norm(Matrix(m - alpha * Matrix::Identity(pw.dim(), pw.dim())));
        if (scalar_res > 1e-10 * std::max(1.0, alpha))
            throw InternalError("hopping normalization is not scalar; residual " +
                                format_double(scalar_res));
        if (n == 0) {
            d.alpha_numeric = alpha;
            d.scalar_residual = scalar_res;
        }
        ChainOperator k(pw, v / std::sqrt(alpha));
        k.parity_tag = Parity::Even;
        seq.amplitudes.push_back(std::move(k));
    }
    if (diag) *diag = d;
    seq.validate();
    return seq;
}

AmplitudeSequence trivial_amplitudes(int n_min) {
    AmplitudeSequence seq;
    seq.window = ChainWindow(n_min, -n_min + 1);
    seq.family = "trivial";
    seq.w0 = identity_op(ChainWindow(0, 1));
    for (int n = n_min + 1; n <= 0; ++n) seq.amplitudes.push_back(identity_op(pair_window(n)));
    seq.validate();
    return seq;
}

Complex state_eval(const MarkovState& state, const ChainOperator& x, int volume) {
    const StateDensity& w = state.volume(volume);
    if (!w.window.contains(x.window))
        throw ConfigError("operator window " + x.window.str() + " not inside volume " +
                          w.window.str());
    if (x.localization)
        for (int s : x.localization->sites)
            if (!w.window.contains(s))
                throw ConfigError("operator localization " + x.localization->str() +
                                  " escapes volume " + w.window.str());
    return w(x);
}

double reduced_window_residual(const AmplitudeSequence& seq, const MarkovState& state,
                               const ChainOperator& x, int n, int k) {
    if (k > -1) throw ConfigError("reduced-window route needs k <= -1");
    const ChainWindow sub(n, k + 1 - n + 1);  // [n, k+1]
    const ChainOperator kb = partial_amplitude(seq, n, k + 1);
    const ChainOperator xe = embed(x, sub);
    const Complex via_partial =
        (kb.mat * xe.mat * kb.mat.adjoint()).trace() / static_cast<double>(sub.dim());
    const Complex direct = state.full()(x);
    return std::abs(via_partial - direct);
}

// Serialization -------------------------------------------------------------------

void save_sequence(const std::string& dir, const AmplitudeSequence& seq) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::map<std::string, std::string> manifest;
    manifest["window.first"] = std::to_string(seq.window.first);
    manifest["window.size"] = std::to_string(seq.window.size);
    manifest["family"] = seq.family;
    for (const auto& [k, v] : seq.params) manifest["param." + k] = format_double(v);
    save_operator(dir + "/w0.op", seq.w0);
    for (int n = seq.window.first + 1; n <= 0; ++n) {
        std::ostringstream name;
        name << "K_" << (n - 1) << "_" << n << ".op";
        manifest["amplitude." + std::to_string(n)] = name.str();
        save_operator(dir + "/" + name.str(), seq.amplitude(n));
    }
    write_keyvalue(dir + "/sequence.manifest", manifest);
}

AmplitudeSequence load_sequence(const std::string& dir) {
    const auto manifest = read_keyvalue(dir + "/sequence.manifest");
    AmplitudeSequence seq;
    seq.window = ChainWindow(std::stoi(manifest.at("window.first")),
                             std::stoi(manifest.at("window.size")));
    seq.family = manifest.count("family") ? manifest.at("family") : "custom";
    for (const auto& [k, v] : manifest)
        if (k.rfind("param.", 0) == 0) seq.params[k.substr(6)] = std::stod(v);
    seq.w0 = load_operator(dir + "/w0.op");
    for (int n = seq.window.first + 1; n <= 0; ++n)
        seq.amplitudes.push_back(load_operator(dir + "/" + manifest.at("amplitude." + std::to_string(n))));
    seq.validate();
    return seq;
}

}  // namespace qmark
