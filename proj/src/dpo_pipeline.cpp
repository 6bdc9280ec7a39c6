#include "properpo/dpo_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "properpo/loss_catalog.hpp"

namespace properpo {

std::string to_string(Recipe r) {
    switch (r) {
        case Recipe::pmpo: return "pmpo";
        case Recipe::pppo: return "pppo";
        case Recipe::phi_po: return "phi_po";
    }
    return "?";
}

std::string to_string(LengthMode m) {
    switch (m) {
        case LengthMode::none: return "none";
        case LengthMode::kl_geometric: return "kl_geometric";
        case LengthMode::is_harmonic: return "is_harmonic";
    }
    return "?";
}

Recipe recipe_from_string(const std::string& s) {
    if (s == "pmpo") return Recipe::pmpo;
    if (s == "pppo") return Recipe::pppo;
    if (s == "phi_po") return Recipe::phi_po;
    throw InvalidArgument("unknown recipe '" + s + "'");
}

LengthMode length_mode_from_string(const std::string& s) {
    if (s == "none") return LengthMode::none;
    if (s == "kl_geometric") return LengthMode::kl_geometric;
    if (s == "is_harmonic") return LengthMode::is_harmonic;
    throw InvalidArgument("unknown length mode '" + s + "'");
}

PipelineSpec make_pppo(const BinaryLoss& la, const MulticlassLoss& lb, double a, double c) {
    if (!(a > 0.0)) throw InvalidArgument("make_pppo: margin scale a must be > 0");
    PipelineSpec s;
    s.name = "pppo(" + la.id + "," + lb.id + ")";
    s.recipe = Recipe::pppo;
    s.la = la;
    s.lb = lb;
    s.psi = conjugate_fn(la);
    // The conjugate's derivative is the inverse canonical link.
    s.dpsi = link_inverse(la);
    s.F = s.dpsi;
    s.a = a;
    s.c = c;
    return s;
}

PipelineSpec make_pmpo(const ScalarFn& psi, const ScalarFn& dpsi, const MulticlassLoss& lb,
                       std::optional<ScalarFn> F) {
    PipelineSpec s;
    s.name = "pmpo(" + psi.name() + "," + lb.id + ")";
    s.recipe = Recipe::pmpo;
    s.lb = lb;
    s.psi = psi;
    s.dpsi = dpsi;
    s.F = std::move(F);
    return s;
}

PipelineSpec make_phi_po(const EligiblePotential& pot, std::size_t n) {
    const BinaryLoss la = phi_po_symmetric_loss(pot);
    PipelineSpec s = make_pppo(la, one_vs_rest_lift(la, n, false));
    s.name = "phi_po(" + pot.name + ")";
    s.recipe = Recipe::phi_po;
    return s;
}

PipelineSpec make_dpo(std::size_t n) {
    const auto e = catalog::get("log");
    PipelineSpec s = make_pppo(e.binary, e.multiclass(n));
    s.name = "dpo";
    return s;
}

SpecCheck validate_spec(const PipelineSpec& spec) {
    SpecCheck out;
    if (spec.recipe == Recipe::pmpo) {
        for (double z = -10.0; z < 10.0; z += 0.01) {
            if (!(spec.psi(z + 0.01) > spec.psi(z))) {
                out.ok = false;
                out.detail = "psi not strictly increasing near z = " + std::to_string(z);
                return out;
            }
        }
        return out;
    }
    if (!spec.la) {
        out.ok = false;
        out.detail = "recipe needs a first loss";
        return out;
    }
    const ConvexPotential pot = potential_from_loss(*spec.la);
    for (double z : linspace(-5.0, 5.0, 41)) {
        const double ref = conjugate_numeric(pot, z).value;
        out.conjugate_error = std::max(out.conjugate_error, std::abs(spec.psi(z) - ref));
    }
    if (out.conjugate_error > 1e-7) {
        out.ok = false;
        out.detail = "psi differs from the numeric conjugate";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Step 1
// ---------------------------------------------------------------------------

namespace {

double step1_value(const Vec& r, const ProbVector& ref, const VectorPotential& phi, std::span<const double> pi) {
    double lin = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) lin += r[i] * pi[i];
    return lin - bregman(phi, pi, ref.values());
}

Vec step1_grad(const Vec& r, const Vec& g_ref, const VectorPotential& phi, std::span<const double> pi) {
    const Vec g = phi.G(pi);
    Vec out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i] - g[i] + g_ref[i];
    return out;
}

double kkt_residual(const Vec& grad, std::span<const double> pi) {
    double lambda = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) lambda += pi[i] * grad[i];
    double res = 0.0;
    for (double g : grad) res = std::max(res, std::abs(g - lambda));
    return res;
}

Vec solve_small(Mat A, Vec b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        if (std::abs(A[c][c]) < 1e-300) return {};
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
            b[r] -= f * b[c];
        }
    }
    Vec x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
        x[i] = s / A[i][i];
    }
    return x;
}

void reject_nonconvex(const VectorPotential& phi, std::size_t n) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.05, 1.0);
    for (int k = 0; k < 64; ++k) {
        Vec u(n), v(n), m(n);
        double su = 0, sv = 0;
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = U(rng);
            v[i] = U(rng);
            su += u[i];
            sv += v[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            u[i] /= su;
            v[i] /= sv;
            m[i] = 0.5 * (u[i] + v[i]);
        }
        const double fu = phi.phi(u), fv = phi.phi(v), fm = phi.phi(m);
        if (fm > 0.5 * (fu + fv) + 1e-10 * std::max(1.0, std::abs(fm))) {
            throw ContractViolation("solve_step1: potential '" + phi.name + "' is not convex");
        }
    }
}

}  // namespace

Step1Result solve_step1(const Vec& r, const ProbVector& ref, const VectorPotential& phi, const Step1Options& opts) {
    const std::size_t n = ref.size();
    if (r.size() != n) throw InvalidArgument("solve_step1: reward and reference dimensions differ");
    if (!ref.interior()) throw InvalidArgument("solve_step1: reference policy must be interior");
    for (double v : r)
        if (!std::isfinite(v)) throw InvalidArgument("solve_step1: non-finite reward");
    reject_nonconvex(phi, n);

    const Vec g_ref = phi.G(ref.values());
    Vec pi = ref.vec();
    double J = step1_value(r, ref, phi, pi);
    Vec grad = step1_grad(r, g_ref, phi, pi);
    double res = kkt_residual(grad, pi);
    double eta = opts.step;
    Step1Result out;
    std::size_t it = 0;
    // Exponentiated-gradient mirror ascent with backtracking.
    for (; it < opts.max_iter && res > opts.kkt_tol; ++it) {
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            Vec cand(n);
            const double gmax = *std::max_element(grad.begin(), grad.end());
            double z = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cand[i] = pi[i] * std::exp(eta * (grad[i] - gmax));
                z += cand[i];
            }
            for (double& v : cand) v /= z;
            const double Jc = step1_value(r, ref, phi, cand);
            if (std::isfinite(Jc) && Jc >= J - 1e-15 * std::max(1.0, std::abs(J))) {
                pi = std::move(cand);
                J = Jc;
                accepted = true;
                eta = std::min(eta * 1.5, 1e6);
                break;
            }
            eta *= 0.5;
        }
        grad = step1_grad(r, g_ref, phi, pi);
        res = kkt_residual(grad, pi);
        if (!accepted) break;
    }

    // Newton polish on the KKT system  grad(pi) = lambda 1,  sum(pi) = 1.
    if (opts.newton_polish && phi.G_jacobian) {
        for (int k = 0; k < 30; ++k) {
            const Mat JG = phi.G_jacobian(pi);
            double lambda = 0.0;
            for (std::size_t i = 0; i < n; ++i) lambda += pi[i] * grad[i];
            Mat A(n + 1, Vec(n + 1, 0.0));
            Vec b(n + 1, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) A[i][j] = -JG[i][j];
                A[i][n] = -1.0;
                b[i] = -(grad[i] - lambda);
                A[n][i] = 1.0;
            }
            const Vec delta = solve_small(A, b);
            if (delta.empty()) break;
            Vec cand(n);
            bool ok = true;
            for (std::size_t i = 0; i < n; ++i) {
                cand[i] = pi[i] + delta[i];
                if (!(cand[i] > 0.0)) ok = false;
            }
            if (!ok) break;
            const double s = std::accumulate(cand.begin(), cand.end(), 0.0);
            for (double& v : cand) v /= s;
            const Vec gc = step1_grad(r, g_ref, phi, cand);
            const double rc = kkt_residual(gc, cand);
            if (!(rc < res)) break;
            pi = std::move(cand);
            grad = gc;
            res = rc;
            if (res < 1e-14) break;
        }
    }

    out.iterations = it;
    out.kkt_residual = res;
    out.interior = std::all_of(pi.begin(), pi.end(), [](double v) { return v > 1e-12; });
    if (res > opts.kkt_tol && out.interior) {
        std::ostringstream msg;
        msg << "solve_step1: no convergence after " << it << " iterations (KKT residual " << res << ")";
        throw ConvergenceError(msg.str());
    }
    out.pi = ProbVector::normalized(pi);
    return out;
}

RewardDiffs recover_reward_diffs(const ProbVector& pi, const ProbVector& ref,
                                 const std::function<Vec(std::span<const double>)>& G) {
    if (pi.size() != ref.size()) throw InvalidArgument("recover_reward_diffs: dimension mismatch");
    const std::size_t n = pi.size();
    RewardDiffs out;
    out.boundary = !pi.interior();
    const Vec gp = G(pi.values()), gr = G(ref.values());
    Vec h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = gp[i] - gr[i];
    out.M.assign(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.M[i][j] = (i == j) ? 0.0 : h[i] - h[j];
    return out;
}

// ---------------------------------------------------------------------------
// Steps 2 and 3
// ---------------------------------------------------------------------------

namespace {

double action_length(const PipelineSpec& spec, std::size_t j) {
    if (spec.length_mode == LengthMode::none || spec.lengths.empty()) return 1.0;
    if (j >= spec.lengths.size()) throw InvalidArgument("length normalization: missing action length");
    return spec.lengths[j];
}

}  // namespace

Vec normalized_row(const PipelineSpec& spec, std::span<const double> row) {
    Vec out(row.begin(), row.end());
    if (spec.length_mode == LengthMode::none) return out;
    // Uniform factorization: every token factor of action j is pi_j^{1/n_j}, so
    // geometric and harmonic means coincide.
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double len = action_length(spec, j);
        if (len != 1.0) out[j] = std::pow(out[j], 1.0 / len);
    }
    return out;
}

ChoiceProb choice_prob(const PipelineSpec& spec, std::span<const double> pi, std::span<const double> ref,
                       std::size_t i, std::size_t j) {
    if (!spec.F) throw InvalidArgument("choice_prob: spec has no choice link");
    if (i >= pi.size() || j >= pi.size() || pi.size() != ref.size()) {
        throw InvalidArgument("choice_prob: index or dimension out of range");
    }
    const Vec gp = spec.lb.selection(normalized_row(spec, pi));
    const Vec gr = spec.lb.selection(normalized_row(spec, ref));
    const double d = gp[i] - gr[i] - gp[j] + gr[j];
    double arg = (d - spec.c) / spec.a;
    ChoiceProb out;
    const Interval dom = spec.F->domain();
    if (std::isnan(arg)) throw DomainError("choice_prob: undefined score difference");
    if (arg < dom.lo || arg > dom.hi) {
        arg = std::clamp(arg, dom.lo, dom.hi);
        out.saturated = true;
    }
    out.prob = (*spec.F)(arg);
    if (!std::isfinite(arg)) out.saturated = true;
    return out;
}

namespace {

void check_rows(const PipelineSpec& spec, const Mat& pi, const Mat& ref) {
    if (pi.size() != ref.size()) throw InvalidArgument("objective: policy and reference state counts differ");
    for (std::size_t x = 0; x < pi.size(); ++x) {
        if (pi[x].size() != spec.lb.n || ref[x].size() != spec.lb.n) {
            throw InvalidArgument("objective: row dimension does not match the loss");
        }
    }
}

struct StateCache {
    Vec gp, gr;
};

std::vector<StateCache> state_cache(const PipelineSpec& spec, const Mat& pi, const Mat& ref) {
    std::vector<StateCache> c(pi.size());
    for (std::size_t x = 0; x < pi.size(); ++x) {
        c[x].gp = spec.lb.selection(normalized_row(spec, pi[x]));
        c[x].gr = spec.lb.selection(normalized_row(spec, ref[x]));
    }
    return c;
}

}  // namespace

Vec objective_terms(const PipelineSpec& spec, const Mat& pi, const Mat& ref, const std::vector<Preference>& data) {
    check_rows(spec, pi, ref);
    const auto cache = state_cache(spec, pi, ref);
    Vec terms(data.size());
    for (std::size_t k = 0; k < data.size(); ++k) {
        const Preference& t = data[k];
        if (t.x >= pi.size() || t.w >= spec.lb.n || t.l >= spec.lb.n) {
            throw InvalidArgument("objective: triple " + std::to_string(k) + " out of range");
        }
        const auto& C = cache[t.x];
        const double d = C.gp[t.w] - C.gr[t.w] - C.gp[t.l] + C.gr[t.l];
        const double v = spec.a * spec.psi((spec.c - d) / spec.a);
        // NaN propagates so that callers can report divergence; infinities mean
        // the pair left the surrogate's domain.
        if (std::isinf(v)) {
            std::ostringstream msg;
            msg << "objective: infinite term at triple " << k << " (x=" << t.x << ", w=" << t.w << ", l=" << t.l
                << ")";
            throw DomainError(msg.str());
        }
        terms[k] = v;
    }
    return terms;
}

double objective(const PipelineSpec& spec, const Mat& pi, const Mat& ref, const std::vector<Preference>& data) {
    if (data.empty()) throw InvalidArgument("objective: empty dataset");
    const Vec terms = objective_terms(spec, pi, ref, data);
    Vec weighted_terms(terms.size()), weights(terms.size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
        weighted_terms[k] = data[k].weight * terms[k];
        weights[k] = data[k].weight;
    }
    const double wsum = pairwise_sum(weights);
    if (!(wsum > 0.0)) throw InvalidArgument("objective: weights sum to zero");
    return pairwise_sum(weighted_terms) / wsum;
}

Mat objective_grad_pi(const PipelineSpec& spec, const Mat& pi, const Mat& ref, const std::vector<Preference>& data) {
    if (data.empty()) throw InvalidArgument("objective: empty dataset");
    check_rows(spec, pi, ref);
    const std::size_t n = spec.lb.n;
    const auto cache = state_cache(spec, pi, ref);
    std::vector<Mat> jac(pi.size());
    std::vector<Vec> chain(pi.size(), Vec(n, 1.0));
    for (std::size_t x = 0; x < pi.size(); ++x) {
        jac[x] = spec.lb.selection_jacobian(normalized_row(spec, pi[x]));
        if (spec.length_mode != LengthMode::none) {
            for (std::size_t j = 0; j < n; ++j) {
                const double len = action_length(spec, j);
                chain[x][j] = std::pow(pi[x][j], 1.0 / len - 1.0) / len;
            }
        }
    }
    double wsum = 0.0;
    for (const auto& t : data) wsum += t.weight;
    Mat grad(pi.size(), Vec(n, 0.0));
    for (const auto& t : data) {
        const auto& C = cache[t.x];
        const double d = C.gp[t.w] - C.gr[t.w] - C.gp[t.l] + C.gr[t.l];
        const double dterm = -spec.dpsi((spec.c - d) / spec.a);
        const double s = t.weight / wsum * dterm;
        for (std::size_t j = 0; j < n; ++j) {
            grad[t.x][j] += s * (jac[t.x][t.w][j] - jac[t.x][t.l][j]) * chain[t.x][j];
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Length normalization
// ---------------------------------------------------------------------------

LengthResult length_normalize(std::span<const double> factors, LengthMode mode) {
    if (factors.empty()) throw InvalidArgument("length_normalize: no token factors");
    for (double f : factors) {
        if (!(f > 0.0 && f <= 1.0)) {
            if (f == 0.0 && mode == LengthMode::is_harmonic)
                throw DomainError("length_normalize: zero token factor in harmonic mode");
            if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("length_normalize: factors must lie in (0, 1]");
        }
    }
    const double n = static_cast<double>(factors.size());
    double log_prod = 0.0;
    for (double f : factors) log_prod += std::log(f);
    LengthResult out;
    switch (mode) {
        case LengthMode::none:
            out.value = std::exp(log_prod);
            out.alpha = 0.0;
            break;
        case LengthMode::kl_geometric:
            out.value = std::exp(log_prod / n);
            out.alpha = (out.value > 0.0) ? (std::log(out.value) - log_prod) / n : 0.0;
            break;
        case LengthMode::is_harmonic: {
            // gamma = (1/n) sum_l prod_{k != l} pi_k = exp(-alpha n), computed in log space.
            Vec terms;
            for (std::size_t l = 0; l < factors.size(); ++l) terms.push_back(log_prod - std::log(factors[l]));
            const double mx = *std::max_element(terms.begin(), terms.end());
            double s = 0.0;
            for (double t : terms) s += std::exp(t - mx);
            const double log_gamma = mx + std::log(s / n);
            out.alpha = -log_gamma / n;
            out.value = std::exp(log_prod + out.alpha * n);
            break;
        }
    }
    return out;
}

double generalized_mean(std::span<const double> factors, const ScalarFn& H, const ScalarFn& H_inverse) {
    if (factors.empty()) throw InvalidArgument("generalized_mean: no factors");
    double s = 0.0;
    for (double f : factors) s += H(f);
    return H_inverse(s / static_cast<double>(factors.size()));
}

ConvexPotential scalar_negative_entropy() {
    ConvexPotential P;
    P.name = "t log t - t";
    P.domain = {0.0, kInf};
    P.phi = ScalarFn([](double t) { return weighted(t, std::log(t)) - t; }, P.domain);
    P.H = ScalarFn([](double t) { return std::log(t); }, P.domain, Monotonicity::increasing);
    P.H_inverse = ScalarFn([](double z) { return std::exp(z); });
    P.phi2 = ScalarFn([](double t) { return 1.0 / t; }, P.domain);
    return P;
}

ConvexPotential scalar_itakura_saito() {
    ConvexPotential P;
    P.name = "-log t";
    P.domain = {0.0, kInf};
    P.phi = ScalarFn([](double t) { return -std::log(t); }, P.domain);
    P.H = ScalarFn([](double t) { return -1.0 / t; }, P.domain, Monotonicity::increasing);
    P.H_inverse = ScalarFn([](double z) { return -1.0 / z; }, {-kInf, 0.0});
    P.phi2 = ScalarFn([](double t) { return 1.0 / (t * t); }, P.domain);
    return P;
}

double oracle_length_solution(std::span<const double> factors, const ConvexPotential& phi) {
    if (factors.empty()) throw InvalidArgument("oracle_length_solution: no factors");
    double lo = *std::min_element(factors.begin(), factors.end());
    double hi = *std::max_element(factors.begin(), factors.end());
    if (lo == hi) return lo;
    auto J = [&](double t) {
        double s = 0.0;
        for (double f : factors) s += bregman(phi, t, f);
        return s;
    };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = J(x1), f2 = J(x2);
    for (int it = 0; it < 300 && b - a > 1e-15 * hi; ++it) {
        if (f1 > f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = J(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = J(x1);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace properpo
