#include "qmark/structure.hpp"

#include "qmark/io.hpp"
#include "qmark/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace qmark {

std::string to_string(RangeKind k) {
    switch (k) {
        case RangeKind::Scalar: return "scalar";
        case RangeKind::EvenPart: return "even_part";
        case RangeKind::Full: return "full";
        default: return "unclassifiable";
    }
}

namespace {

Matrix site_identity_factor(const Matrix& m2) { return kron(m2, Matrix::Identity(2, 2)); }

// local matrix unit at the left/right site of a two-site window
Matrix left_unit(int m, int n) {
    Matrix e = Matrix::Zero(2, 2);
    e(m, n) = 1.0;
    return kron(e, Matrix::Identity(2, 2));
}
Matrix right_unit(int m, int n) {
    Matrix e = Matrix::Zero(2, 2);
    e(m, n) = 1.0;
    return kron(Matrix::Identity(2, 2), e);
}

Complex pair_eval(const StateDensity& pair_state, const Matrix& x) {
    return (pair_state.rho * x).trace();
}

}  // namespace

// derive_two_step ---------------------------------------------------------------

TwoStepExpectation derive_two_step(const StateDensity& full, int n, const AmplitudeSequence* seq) {
    const ChainWindow win = full.window;
    if (n < win.first || n + 1 > win.last())
        throw ConfigError("two-step expectation needs the pair [" + std::to_string(n) + "," +
                          std::to_string(n + 1) + "] inside " + win.str());
    TwoStepExpectation out;
    out.site = n;
    out.pair = ChainWindow(n, 2);
    out.pair_state = reduce_to(full, out.pair);
    out.pair_state.require_faithful();

    std::function<Matrix(const Matrix&)> transition;
    std::ostringstream note;

    if (seq) {
        // restriction of the one-sided expectation built from the amplitudes
        const ChainOperator kb = embed(cumulative_amplitude(*seq, n), win);
        auto k = std::make_shared<Matrix>(kb.mat);
        const ChainWindow pw = out.pair;
        const int traced = win.last() - n;
        transition = [k, win, pw, traced](const Matrix& z) {
            ChainOperator ze(pw, z);
            const Matrix big = (*k) * embed(ze, win).mat * k->adjoint();
            const Matrix red = ptrace_right(big, traced) / static_cast<double>(1L << traced);
            // content is localized at the pair's left site
            ChainOperator redop(ChainWindow(win.first, win.size - traced), red);
            return kron(localize(redop, ChainWindow(pw.first, 1)).mat, Matrix::Identity(2, 2));
        };
        note << "transition=amplitude-restriction;";
    } else {
        // state-adjoint ladder over candidate ranges, largest first
        Rng det(0xabcdefULL + static_cast<std::uint64_t>(n + 64));
        const std::vector<std::pair<std::string, SubalgebraBasis>> candidates = {
            {"full", single_site_basis(out.pair, n)},
            {"even_part", even_part_basis(out.pair, Region(out.pair, {n}))},
            {"scalars", scalars_basis(out.pair)}};
        for (const auto& [name, basis] : candidates) {
            CondExp cand = state_adjoint_projection(out.pair_state, basis);
            CondExpChecks checks = check_condexp(cand, det, 6);
            if (checks.worst() < tol::condexp) {
                transition = cand.apply_fn;
                note << "transition=state-adjoint(" << name << ");";
                break;
            }
            note << name << "-candidate-failed(residual=" << format_double(checks.worst()) << ");";
        }
        if (!transition)
            throw InternalError("no state-preserving transition map found at bond " +
                                std::to_string(n));
    }

    // invariance of the restricted state under the transition map
    {
        const Matrix rho = out.pair_state.rho;
        double worst = 0.0;
        for (int s = 0; s < 16; ++s) {
            Matrix z = Matrix::Zero(4, 4);
            z(s / 4, s % 4) = 1.0;
            worst = std::max(worst, std::abs((rho * transition(z)).trace() - (rho * z).trace()));
        }
        out.transition_invariance = worst;
    }

    ErgodicReport erg;
    out.eps = ergodic_average(out.pair, transition, out.pair_state, &erg);
    out.fixed_dimension = erg.fixed_dimension;
    note << "ergodic(intertwine=" << format_double(erg.intertwine_residual)
         << ",algebra=" << format_double(erg.algebra_residual) << ");";

    // classification by fixed-point dimension, with structural-form checks
    const StateDensity& ps = out.pair_state;
    const auto& eps = out.eps;
    double res = 0.0;
    switch (erg.fixed_dimension) {
        case 1: {
            out.kind = RangeKind::Scalar;
            for (int s = 0; s < 16; ++s) {
                Matrix z = Matrix::Zero(4, 4);
                z(s / 4, s % 4) = 1.0;
                const Matrix diff = eps.apply(z) - pair_eval(ps, z) * Matrix::Identity(4, 4);
                res = std::max(res, operator_norm(diff));
            }
            break;
        }
        case 2: {
            // a two-dimensional Theta-invariant range must be the even part
            const SubalgebraBasis even = even_part_basis(out.pair, Region(out.pair, {n}));
            double match = 0.0;
            for (const auto& b : out.eps.range.elements)
                match = std::max(match, membership_residual(b, even));
            for (const auto& b : even.elements)
                match = std::max(match, membership_residual(b, out.eps.range));
            if (match > tol::membership) {
                out.kind = RangeKind::Unclassifiable;
                note << "rank-2-range-not-even-part(residual=" << format_double(match) << ");";
                res = match;
                break;
            }
            out.kind = RangeKind::EvenPart;
            res = match;
            const Matrix p[2] = {left_unit(0, 0), left_unit(1, 1)};
            const Complex wp[2] = {pair_eval(ps, p[0]), pair_eval(ps, p[1])};
            for (int xm = 0; xm < 2; ++xm)
                for (int xn = 0; xn < 2; ++xn)
                    for (int ym = 0; ym < 2; ++ym)
                        for (int yn = 0; yn < 2; ++yn) {
                            const Matrix x = left_unit(xm, xn);
                            const Matrix y = right_unit(ym, yn);
                            Matrix want = Matrix::Zero(4, 4);
                            for (int i = 0; i < 2; ++i) {
                                const Complex tr2 = (i == xm && xm == xn) ? 1.0 : 0.0;
                                if (tr2 == 0.0) continue;
                                want += tr2 * (pair_eval(ps, p[i] * y) / wp[i]) * p[i];
                            }
                            res = std::max(res, operator_norm(Matrix(eps.apply(x * y) - want)));
                        }
            break;
        }
        case 4: {
            out.kind = RangeKind::Full;
            // extracted right-site state and the product form
            auto psi = [&](const Matrix& y) { return pair_eval(ps, y); };
            Matrix vleft = Matrix::Zero(2, 2);
            vleft(0, 0) = 1.0;
            vleft(1, 1) = -1.0;
            for (int xm = 0; xm < 2; ++xm)
                for (int xn = 0; xn < 2; ++xn)
                    for (int ym = 0; ym < 2; ++ym)
                        for (int yn = 0; yn < 2; ++yn) {
                            const Matrix x = left_unit(xm, xn);
                            Matrix ey = Matrix::Zero(2, 2);
                            ey(ym, yn) = 1.0;
                            // proper A_{n+1} element: odd units carry the left string
                            const Matrix y =
                                (ym == yn) ? right_unit(ym, yn) : kron(vleft, ey);
                            const Matrix want = x * psi(y);
                            res = std::max(res,
                                           operator_norm(Matrix(eps.apply(Matrix(x * y)) - want)));
                        }
            out.odd_kill = lemma_odd_kill_residual(out);
            break;
        }
        default:
            out.kind = RangeKind::Unclassifiable;
            note << "fixed-dimension=" << erg.fixed_dimension << ";";
            res = 1.0;
            break;
    }
    out.classification_residual = res;
    out.note = note.str();
    return out;
}

double lemma_odd_kill_residual(const TwoStepExpectation& two_step) {
    const ChainWindow& pw = two_step.pair;
    const ChainOperator a = annihilator(pw, pw.last());
    const ChainOperator ad = creator(pw, pw.last());
    return std::max(operator_norm(two_step.eps.apply(a.mat)),
                    operator_norm(two_step.eps.apply(ad.mat)));
}

// Classification -----------------------------------------------------------------

const TwoStepExpectation& Classification::at(int n) const {
    const int idx = n - window.first;
    if (idx < 0 || idx >= static_cast<int>(bonds.size()))
        throw ConfigError("no two-step expectation at site " + std::to_string(n));
    return bonds[idx];
}

std::set<int> Classification::gamma() const {
    std::set<int> g;
    for (const auto& b : bonds)
        if (b.kind == RangeKind::EvenPart) g.insert(b.site);
    return g;
}

bool Classification::matches(const std::vector<RangeKind>& pattern) const {
    if (pattern.size() != bonds.size()) return false;
    for (size_t i = 0; i < pattern.size(); ++i)
        if (bonds[i].kind != pattern[i]) return false;
    return true;
}

Classification classify_state(const StateDensity& full, const AmplitudeSequence* seq) {
    Classification cls;
    cls.window = full.window;
    for (int n = full.window.first; n < full.window.last(); ++n)
        cls.bonds.push_back(derive_two_step(full, n, seq));
    return cls;
}

// Classical data -----------------------------------------------------------------

ClassicalChainData extract_classical_data(const StateDensity& full, const Classification& cls) {
    ClassicalChainData data;
    data.gamma = cls.gamma();
    if (data.gamma.empty()) {
        data.outcomes.push_back({});
        data.weights.push_back(1.0);
        return data;
    }
    const StateDensity ut = full.as_unit_trace();
    auto prob = [&](const ChainOperator& p) {
        const double v = std::real((ut.rho * p.mat).trace());
        if (v <= tol::faithful_floor)
            throw FaithfulnessError("occupation probability vanishes at a lifted site");
        return v;
    };
    for (int j : data.gamma) {
        const double p1 = prob(occupation_projector(full.window, j, 1));
        const double p2 = prob(occupation_projector(full.window, j, 2));
        data.distribution[j] = {p1, p2};
        data.min_probability = std::min({data.min_probability, p1, p2});
    }
    for (int j : data.gamma) {
        if (!data.gamma.count(j + 1)) continue;
        Transition t{};
        for (int w = 1; w <= 2; ++w) {
            const ChainOperator pj = occupation_projector(full.window, j, w);
            double row = 0.0;
            for (int wp = 1; wp <= 2; ++wp) {
                const ChainOperator pj1 = occupation_projector(full.window, j + 1, wp);
                t[w - 1][wp - 1] =
                    std::real((ut.rho * pj.mat * pj1.mat).trace()) / data.distribution[j][w - 1];
                row += t[w - 1][wp - 1];
            }
            data.row_sum_residual = std::max(data.row_sum_residual, std::abs(row - 1.0));
        }
        for (int wp = 0; wp < 2; ++wp) {
            double acc = 0.0;
            for (int w = 0; w < 2; ++w) acc += data.distribution[j][w] * t[w][wp];
            data.consistency_residual =
                std::max(data.consistency_residual, std::abs(acc - data.distribution[j + 1][wp]));
        }
        data.transition[j] = t;
    }
    // path weights per interval, product across intervals
    const std::vector<int> sites(data.gamma.begin(), data.gamma.end());
    const int m = static_cast<int>(sites.size());
    for (long cfg = 0; cfg < (1L << m); ++cfg) {
        std::vector<int> omega(m);
        for (int t = 0; t < m; ++t) omega[t] = ((cfg >> (m - 1 - t)) & 1) ? 2 : 1;
        double mu = 1.0;
        for (int t = 0; t < m; ++t) {
            const bool interval_start = (t == 0) || (sites[t - 1] + 1 != sites[t]);
            if (interval_start)
                mu *= data.distribution[sites[t]][omega[t] - 1];
            else
                mu *= data.transition.at(sites[t - 1])[omega[t - 1] - 1][omega[t] - 1];
        }
        data.outcomes.push_back(std::move(omega));
        data.weights.push_back(mu);
    }
    return data;
}

// Complement blocks & boundary states --------------------------------------------

std::vector<ComplementBlock> complement_blocks(const Classification& cls) {
    const std::set<int> gamma = cls.gamma();
    const ChainWindow w = cls.window;
    std::vector<ComplementBlock> blocks;
    int j = w.first;
    while (j <= w.last()) {
        if (gamma.count(j)) {
            ++j;
            continue;
        }
        ComplementBlock b;
        b.lo = j;
        while (j + 1 <= w.last() && !gamma.count(j + 1)) ++j;
        b.hi = j;
        ++j;
        const bool has_left = b.lo > w.first && gamma.count(b.lo - 1);
        const bool has_right = b.hi < w.last() && gamma.count(b.hi + 1);
        const bool escape_left =
            b.lo < w.last() && cls.kind_of(b.lo) == RangeKind::Scalar;
        const bool escape_right = has_right && cls.kind_of(b.hi) == RangeKind::Full;
        b.compress_left = has_left && !escape_left;
        b.compress_right = has_right && !escape_right;
        if (b.compress_left) b.left_gamma = b.lo - 1;
        if (b.compress_right) b.right_gamma = b.hi + 1;
        blocks.push_back(b);
    }
    return blocks;
}

std::vector<BoundaryBlockState> boundary_states(const StateDensity& full,
                                                const Classification& cls,
                                                const std::vector<int>& omega) {
    const std::set<int> gamma = cls.gamma();
    const std::vector<int> gsites(gamma.begin(), gamma.end());
    if (omega.size() != gsites.size())
        throw ConfigError("omega length does not match the lifted site count");
    auto omega_at = [&](int site) {
        const auto it = std::find(gsites.begin(), gsites.end(), site);
        return omega[static_cast<size_t>(it - gsites.begin())];
    };

    const StateDensity ut = full.as_unit_trace();
    std::vector<BoundaryBlockState> out;
    for (const ComplementBlock& b : complement_blocks(cls)) {
        Matrix pl = Matrix::Identity(full.window.dim(), full.window.dim());
        Matrix pr = pl;
        double norm = 1.0;
        if (b.compress_left) {
            pl = occupation_projector(full.window, b.left_gamma, omega_at(b.left_gamma)).mat;
            const double p = std::real((ut.rho * pl).trace());
            if (p <= tol::faithful_floor)
                throw FaithfulnessError("zero-probability boundary projection");
            norm *= p;
        }
        if (b.compress_right) {
            pr = occupation_projector(full.window, b.right_gamma, omega_at(b.right_gamma)).mat;
            const double p = std::real((ut.rho * pr).trace());
            if (p <= tol::faithful_floor)
                throw FaithfulnessError("zero-probability boundary projection");
            norm *= p;
        }
        const ChainWindow bw(b.lo, b.hi - b.lo + 1);
        const long d = bw.dim();
        Matrix rho = Matrix::Zero(d, d);
        for (long i = 0; i < d; ++i)
            for (long j2 = 0; j2 < d; ++j2) {
                Matrix eji = Matrix::Zero(d, d);
                eji(j2, i) = 1.0;
                const Matrix xg = embed(ChainOperator(bw, eji), full.window).mat;
                rho(i, j2) = (ut.rho * (pl * xg * pr)).trace() / norm;
            }
        BoundaryBlockState bs;
        bs.block = b;
        bs.rho = rho;
        bs.evenness = parity_residual(ChainOperator(bw, rho), Parity::Even);
        out.push_back(std::move(bs));
    }
    return out;
}

// Disintegration -------------------------------------------------------------------

namespace {

// Assemble the full-window product density for one outcome: block densities at
// the complement blocks, pure occupation projections at the lifted sites.
Matrix outcome_density(const ChainWindow& w, const std::vector<int>& gsites,
                       const std::vector<int>& omega,
                       const std::vector<BoundaryBlockState>& blocks) {
    Matrix rho = Matrix::Identity(1, 1);
    int site = w.first;
    while (site <= w.last()) {
        const auto git = std::find(gsites.begin(), gsites.end(), site);
        if (git != gsites.end()) {
            Matrix p = Matrix::Zero(2, 2);
            p(omega[static_cast<size_t>(git - gsites.begin())] - 1,
              omega[static_cast<size_t>(git - gsites.begin())] - 1) = 1.0;
            rho = kron(rho, p);
            ++site;
            continue;
        }
        const auto bit = std::find_if(blocks.begin(), blocks.end(),
                                      [&](const BoundaryBlockState& b) { return b.block.lo == site; });
        if (bit == blocks.end()) throw InternalError("complement block missing during assembly");
        rho = kron(rho, bit->rho);
        site = bit->block.hi + 1;
    }
    return rho;
}

// Plain-slot application of a local two-site output table at sites (n, n+1):
// out = sum_{s,s'} coeff-block(s,s') (x) table[s][s'].
Matrix apply_slot_map(const ChainWindow& w, int n, const Matrix& x,
                      const std::array<std::array<Matrix, 4>, 4>& table) {
    const int before = n - w.first;
    const int after = w.last() - (n + 1);
    const long da = 1L << before, db = 1L << after;
    const long d = w.dim();
    Matrix out = Matrix::Zero(d, d);
    for (long i = 0; i < d; ++i) {
        const long a = i / (4 * db), s = (i / db) % 4, bb = i % db;
        for (long j = 0; j < d; ++j) {
            const Complex v = x(i, j);
            if (v == Complex(0.0, 0.0)) continue;
            const long ap = j / (4 * db), sp = (j / db) % 4, bp = j % db;
            const Matrix& o = table[static_cast<size_t>(s)][static_cast<size_t>(sp)];
            for (int t = 0; t < 4; ++t)
                for (int tp = 0; tp < 4; ++tp) {
                    const Complex ov = o(t, tp);
                    if (ov == Complex(0.0, 0.0)) continue;
                    out((a * 4 + t) * db + bb, (ap * 4 + tp) * db + bp) += v * ov;
                }
        }
    }
    (void)da;
    return out;
}

}  // namespace

DisintegrationReport disintegrate_reconstruct(const StateDensity& full, const Classification& cls,
                                              const ClassicalChainData& data) {
    DisintegrationReport rep;
    const ChainWindow w = full.window;
    const StateDensity ut = full.as_unit_trace();
    const std::vector<int> gsites(data.gamma.begin(), data.gamma.end());

    // phi'(x) = sum_omega mu(omega) psi_omega(E(x)(omega)) as one density
    Matrix lifted = Matrix::Zero(w.dim(), w.dim());
    for (size_t k = 0; k < data.outcomes.size(); ++k) {
        const auto blocks = boundary_states(full, cls, data.outcomes[k]);
        lifted += data.weights[k] * outcome_density(w, gsites, data.outcomes[k], blocks);
    }
    rep.decomposition = max_abs(Matrix(lifted - ut.rho));
    rep.evenness = parity_residual(ChainOperator(w, lifted), Parity::Even);
    rep.lift_invariance = lift_invariance_residual(full, data.gamma);

    // Reconstruction direction: rebuild the bond expectations from the data
    // and certify they preserve the rebuilt state.
    const StateDensity psi(w, lifted, TraceNormalization::UnitTrace);
    auto psi_eval = [&](const Matrix& m) { return (lifted * m).trace(); };
    auto global_unit = [&](int site, int m, int n2) {
        return matrix_unit(w, site, m + 1, n2 + 1).mat;
    };

    for (int n = w.first; n < w.last(); ++n) {
        const RangeKind kind = cls.kind_of(n);
        if (kind == RangeKind::Unclassifiable)
            throw InternalError("cannot reconstruct through an unclassified bond");
        std::array<std::array<Matrix, 4>, 4> table;
        for (int s = 0; s < 4; ++s)
            for (int sp = 0; sp < 4; ++sp) {
                const int xm = s / 2, ym = s % 2;
                const int xn = sp / 2, yn = sp % 2;
                const Matrix xg = global_unit(n, xm, xn);
                const Matrix yg = global_unit(n + 1, ym, yn);
                Matrix o = Matrix::Zero(4, 4);
                if (kind == RangeKind::Scalar) {
                    o = psi_eval(xg * yg) * Matrix::Identity(4, 4);
                } else if (kind == RangeKind::Full) {
                    Matrix ex = Matrix::Zero(2, 2);
                    ex(xm, xn) = 1.0;
                    o = psi_eval(yg) * kron(ex, Matrix::Identity(2, 2));
                } else {
                    for (int om = 0; om < 2; ++om) {
                        if (xm != xn || xm != om) continue;
                        const Matrix pg = global_unit(n, om, om);
                        Matrix pl = Matrix::Zero(2, 2);
                        pl(om, om) = 1.0;
                        o += (psi_eval(pg * yg) / psi_eval(pg)) * kron(pl, Matrix::Identity(2, 2));
                    }
                }
                table[static_cast<size_t>(s)][static_cast<size_t>(sp)] = o;
            }

        // invariance over the monomials of the initial segment up to n+1
        const long dseg = 1L << (n + 1 - w.first + 1);
        const long dtail = w.dim() / dseg;
        for (long i = 0; i < dseg; ++i)
            for (long j = 0; j < dseg; ++j) {
                Matrix x = Matrix::Zero(w.dim(), w.dim());
                for (long t = 0; t < dtail; ++t) x(i * dtail + t, j * dtail + t) = 1.0;
                const Matrix ex = apply_slot_map(w, n, x, table);
                rep.reconstruction = std::max(
                    rep.reconstruction,
                    std::abs(psi_eval(ex) - psi_eval(x)) / static_cast<double>(w.dim()));
            }

        // localization of the rebuilt expectation on the bond pair
        const SubalgebraBasis site_alg = interval_basis(w, n, n);
        for (int s = 0; s < 4; ++s)
            for (int sp = 0; sp < 4; ++sp) {
                const Matrix xy = global_unit(n, s / 2, sp / 2) * global_unit(n + 1, s % 2, sp % 2);
                const Matrix ex = apply_slot_map(w, n, xy, table);
                rep.localization =
                    std::max(rep.localization, membership_residual(ChainOperator(w, ex), site_alg));
            }
    }
    return rep;
}

// Mixing ------------------------------------------------------------------------

CorrelationReport correlation_decay(const Transition& pi, int window_length, const Matrix& x_site,
                                    const Matrix& y_site, int max_distance) {
    CorrelationReport rep;
    rep.primitive = is_primitive(pi);
    rep.lambda2 = second_eigenvalue(pi);
    if (!rep.primitive) return rep;

    const ChainWindow w(0, window_length);
    const auto st = stationary_distribution(pi);
    const StateDensity rho = diagonal_lift_state(w, st, pi);

    const ChainOperator x0 = embed(ChainOperator(ChainWindow(0, 1), x_site), w);
    const Complex mx = rho(x0);

    // exact classical oracle: diagonal parts against the chain powers
    const double f[2] = {std::real(x_site(0, 0)), std::real(x_site(1, 1))};
    const double g[2] = {std::real(y_site(0, 0)), std::real(y_site(1, 1))};
    const double meanf = st[0] * f[0] + st[1] * f[1];
    const double meang = st[0] * g[0] + st[1] * g[1];

    for (int r = 1; r <= max_distance && r < window_length; ++r) {
        const ChainOperator yr = embed(ChainOperator(ChainWindow(r, 1), y_site), w);
        const Complex my = rho(yr);
        const Complex cxy = rho(mul(x0, yr)) - mx * my;
        rep.distance.push_back(r);
        rep.quantum.push_back(std::real(cxy));

        double pr[2][2] = {{1, 0}, {0, 1}};
        for (int p = 0; p < r; ++p) {
            double nx[2][2] = {};
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int k = 0; k < 2; ++k) nx[i][j] += pr[i][k] * pi[k][j];
            std::copy(&nx[0][0], &nx[0][0] + 4, &pr[0][0]);
        }
        double cc = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) cc += st[i] * f[i] * pr[i][j] * g[j];
        cc -= meanf * meang;
        rep.classical.push_back(cc);
        rep.agreement = std::max(rep.agreement, std::abs(std::real(cxy) - cc) + std::abs(std::imag(cxy)));
    }

    // ratio and log-slope fits where the signal is above noise
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (size_t i = 0; i < rep.quantum.size(); ++i) {
        const double c = std::abs(rep.quantum[i]);
        if (c < 1e-13) continue;
        const double lx = rep.distance[i], ly = std::log(c);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++cnt;
        if (i + 1 < rep.quantum.size() && std::abs(rep.quantum[i + 1]) > 1e-13 &&
        	std::abs(rep.lambda2) > 0.0) {
            const double ratio = std::abs(rep.quantum[i + 1] / rep.quantum[i]);
            rep.ratio_deviation = std::max(
                rep.ratio_deviation, std::abs(ratio - std::abs(rep.lambda2)) / std::abs(rep.lambda2));
        }
    }
    if (cnt >= 2) {
        const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        rep.fitted_rate = std::exp(slope);
        rep.fitted = true;
    }
    return rep;
}

// Product checks ------------------------------------------------------------------

ProductCheckReport product_state_checks(const StateDensity& full, const Classification& cls) {
    (void)cls;
    ProductCheckReport rep;
    const ChainWindow w = full.window;
    const StateDensity ut = full.as_unit_trace();

    std::vector<Matrix> singles;
    for (int j = w.first; j <= w.last(); ++j)
        singles.push_back(reduce_to(full, ChainWindow(j, 1)).rho);
    Matrix prod = Matrix::Identity(1, 1);
    for (const auto& s : singles) prod = kron(prod, s);
    rep.site_factorization = max_abs(Matrix(prod - ut.rho));
    for (size_t j = 0; j + 1 < singles.size(); ++j)
        rep.translation_invariance =
            std::max(rep.translation_invariance, max_abs(Matrix(singles[j] - singles[j + 1])));

    if (w.size % 2 == 0) {
        std::vector<Matrix> pairs;
        for (int j = w.first; j < w.last(); j += 2)
            pairs.push_back(reduce_to(full, ChainWindow(j, 2)).rho);
        Matrix pp = Matrix::Identity(1, 1);
        for (const auto& p : pairs) pp = kron(pp, p);
        rep.pair_factorization = max_abs(Matrix(pp - ut.rho));
        for (size_t j = 0; j + 1 < pairs.size(); ++j)
            rep.pair_translation_invariance =
                std::max(rep.pair_translation_invariance, max_abs(Matrix(pairs[j] - pairs[j + 1])));
    } else {
        rep.pair_factorization = rep.site_factorization;
        rep.pair_translation_invariance = rep.translation_invariance;
    }
    return rep;
}

// Invariants ----------------------------------------------------------------------

Matrix one_site_extension(const Classification& cls, int n, const Matrix& x) {
    const ChainWindow w = cls.window;
    const TwoStepExpectation& ts = cls.at(n);
    std::array<std::array<Matrix, 4>, 4> table;
    for (int s = 0; s < 4; ++s)
        for (int sp = 0; sp < 4; ++sp) {
            Matrix unit = Matrix::Zero(4, 4);
            unit(s, sp) = 1.0;
            table[static_cast<size_t>(s)][static_cast<size_t>(sp)] = ts.eps.apply(unit);
        }
    return apply_slot_map(w, n, x, table);
}

double stabilization_residual(const Classification& cls, Rng& rng, int samples) {
    const ChainWindow w = cls.window;
    double worst = 0.0;
    for (int m = w.first + 1; m <= w.last() - 1; ++m) {
        for (int s = 0; s < samples; ++s) {
            const ChainOperator x =
                embed(random_op(ChainWindow(w.first, m - 1 - w.first + 1), rng), w);
            // compose from bond m-1 downward; extending the chain upward must
            // not change anything on A_{m-1]}
            Matrix shallow = x.mat;
            for (int n = m - 1; n >= w.first; --n) shallow = one_site_extension(cls, n, shallow);
            Matrix deep = x.mat;
            for (int n = std::min(w.last() - 1, m + 1); n >= w.first; --n)
                deep = one_site_extension(cls, n, deep);
            worst = std::max(worst, max_abs(Matrix(shallow - deep)) /
                                        std::max(1.0, operator_norm(x)));
        }
    }
    return worst;
}

double evaluation_formula_residual(const StateDensity& full, const Classification& cls) {
    const ChainWindow w = full.window;
    const StateDensity ut = full.as_unit_trace();
    const long d = w.dim();

    // per-site generator monomials: elements of A_{j}, so the odd units carry
    // the parity string of the sites to their left
    std::vector<std::array<Matrix, 4>> units(w.size);
    for (int j = w.first; j <= w.last(); ++j) {
        const SubalgebraBasis site = interval_basis(w, j, j);
        const double scl = std::pow(2.0, -0.5);  // undo the basis normalization
        for (int u = 0; u < 4; ++u)
            units[j - w.first][u] = site.elements[static_cast<size_t>(u)].mat * scl;
    }

    Matrix v2 = Matrix::Zero(2, 2);
    v2(0, 0) = 1.0;
    v2(1, 1) = -1.0;

    double worst = 0.0;
    for (long bi = 0; bi < d; ++bi)
        for (long bj = 0; bj < d; ++bj) {
            // nested evaluation from the last bond inward, in local coordinates
            Matrix carry = Matrix::Zero(2, 2);
            carry((bi >> 0) & 1, (bj >> 0) & 1) = 1.0;  // unit at the last site
            for (int n = w.last() - 1; n >= w.first; --n) {
                const int shift = w.last() - n;
                Matrix unit = Matrix::Zero(2, 2);
                unit((bi >> shift) & 1, (bj >> shift) & 1) = 1.0;
                // x_n times the carried element of A_{n+1}: the odd part of the
                // carry enters with its parity string at the left slot
                Matrix ce = carry, co = Matrix::Zero(2, 2);
                co(0, 1) = ce(0, 1);
                co(1, 0) = ce(1, 0);
                ce(0, 1) = 0.0;
                ce(1, 0) = 0.0;
                const Matrix z = kron(unit, ce) + kron(Matrix(unit * v2), co);
                const Matrix ez = cls.at(n).eps.apply(z);
                carry = ptrace_right(ez, 1) / 2.0;  // range sits at the left site
            }
            const ChainOperator tail(ChainWindow(w.first, 1), carry);
            const Complex nested = ut(embed(tail, w));

            // direct evaluation of the same generator product
            Matrix mon = Matrix::Identity(d, d);
            for (int j = w.first; j <= w.last(); ++j) {
                const int shift = w.last() - j;
                const int row = (bi >> shift) & 1, col = (bj >> shift) & 1;
                mon = mon * units[j - w.first][row * 2 + col];
            }
            const Complex direct = (ut.rho * mon).trace();
            worst = std::max(worst, std::abs(nested - direct));
        }
    return worst;
}

double lift_invariance_residual(const StateDensity& full, const std::set<int>& gamma) {
    const StateDensity ut = full.as_unit_trace();
    const CondExp lift = diagonal_lift_expectation(full.window, gamma);
    return max_abs(Matrix(lift.apply(ut.rho) - ut.rho));
}

}  // namespace qmark
