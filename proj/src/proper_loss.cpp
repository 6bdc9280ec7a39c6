#include "properpo/proper_loss.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

namespace properpo {

namespace {

constexpr double kFdStep = 1e-6;

double fd_on_unit(const ScalarFn& f, double p) {
    // One-sided near the ends so that we never leave [0, 1].
    const double h = kFdStep;
    if (p - h < 0.0) return (f(p + h) - f(p)) / h;
    if (p + h > 1.0) return (f(p) - f(p - h)) / h;
    return (f(p + h) - f(p - h)) / (2.0 * h);
}

Mat fd_jacobian(const MulticlassLoss::VecFn& f, std::span<const double> q, std::size_t n) {
    Mat J(n, Vec(n, 0.0));
    Vec x(q.begin(), q.end());
    for (std::size_t j = 0; j < n; ++j) {
        const double xj = x[j];
        x[j] = xj + kFdStep;
        const Vec fp = f(x);
        x[j] = xj - kFdStep;
        const Vec fm = f(x);
        x[j] = xj;
        for (std::size_t i = 0; i < n; ++i) J[i][j] = (fp[i] - fm[i]) / (2.0 * kFdStep);
    }
    return J;
}

// Bracket inside [0, 1] on which H is finite.
Interval finite_unit_bracket(const std::function<double(double)>& H) {
    Interval b{0.0, 1.0};
    if (!std::isfinite(H(0.0))) b.lo = 1e-300;
    if (!std::isfinite(H(1.0))) b.hi = std::nextafter(1.0, 0.0);
    return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// BinaryLoss
// ---------------------------------------------------------------------------

void BinaryLoss::validate() const {
    if (!ell0 || !ell1) throw InvalidArgument("BinaryLoss '" + id + "': missing partial loss");
    if (!symmetric) return;
    for (int k = 0; k <= 1000; ++k) {
        const double p = k / 1000.0;
        const double a = ell0(p);
        const double b = ell1(1.0 - p);
        if (std::isinf(a) && a == b) continue;
        if (!(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)))) {
            std::ostringstream msg;
            msg << "BinaryLoss '" << id << "' declared symmetric but ell0(" << p << ") = " << a
                << " differs from ell1(" << 1.0 - p << ") = " << b;
            throw ContractViolation(msg.str());
        }
    }
}

double BinaryLoss::risk(double p, double q) const {
    return weighted(p, ell1(q)) + weighted(1.0 - p, ell0(q));
}

double BinaryLoss::H(double p) const { return ell0(p) - ell1(p); }

double BinaryLoss::dell0(double p) const { return d_ell0 ? (*d_ell0)(p) : fd_on_unit(ell0, p); }

double BinaryLoss::dell1(double p) const { return d_ell1 ? (*d_ell1)(p) : fd_on_unit(ell1, p); }

// ---------------------------------------------------------------------------
// MulticlassLoss
// ---------------------------------------------------------------------------

Vec MulticlassLoss::selection(std::span<const double> q) const {
    if (G) return G(q);
    Vec v = ell(q);
    for (double& x : v) x = -x;
    return v;
}

Mat MulticlassLoss::selection_jacobian(std::span<const double> q) const {
    if (G_jacobian) return G_jacobian(q);
    return fd_jacobian([this](std::span<const double> x) { return selection(x); }, q, n);
}

MulticlassLoss selection_from_loss(std::string id, std::size_t n, MulticlassLoss::VecFn ell,
                                   MulticlassLoss::MatFn jacobian, bool separable) {
    MulticlassLoss L;
    L.id = std::move(id);
    L.n = n;
    L.ell = std::move(ell);
    L.G = [f = L.ell](std::span<const double> q) {
        Vec v = f(q);
        for (double& x : v) x = -x;
        return v;
    };
    if (jacobian) {
        L.ell_jacobian = jacobian;
        L.G_jacobian = [jacobian](std::span<const double> q) {
            Mat J = jacobian(q);
            for (auto& row : J)
                for (double& x : row) x = -x;
            return J;
        };
    }
    L.separable = separable;
    return L;
}

MulticlassLoss as_multiclass(const BinaryLoss& loss) {
    auto ell = [loss](std::span<const double> q) { return Vec{loss.ell1(q[0]), loss.ell0(q[0])}; };
    auto jac = [loss](std::span<const double> q) {
        return Mat{{loss.dell1(q[0]), 0.0}, {loss.dell0(q[0]), 0.0}};
    };
    return selection_from_loss(loss.id, 2, ell, jac, false);
}

MulticlassLoss separable_loss(std::string id, std::size_t n, ScalarFn s, std::optional<ScalarFn> ds) {
    auto ell = [s, n](std::span<const double> q) {
        Vec v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = s(q[i]);
        return v;
    };
    MulticlassLoss::MatFn jac;
    if (ds) {
        jac = [d = *ds, n](std::span<const double> q) {
            Mat J(n, Vec(n, 0.0));
            for (std::size_t i = 0; i < n; ++i) J[i][i] = d(q[i]);
            return J;
        };
    }
    return selection_from_loss(std::move(id), n, ell, jac, true);
}

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

VectorPotential negative_entropy() {
    VectorPotential P;
    P.name = "negative_entropy";
    P.phi = [](std::span<const double> p) {
        double s = 0.0;
        for (double x : p) s += weighted(x, std::log(x));
        return s;
    };
    P.G = [](std::span<const double> p) {
        Vec g(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) g[i] = std::log(p[i]) + 1.0;
        return g;
    };
    P.G_jacobian = [](std::span<const double> p) {
        Mat J(p.size(), Vec(p.size(), 0.0));
        for (std::size_t i = 0; i < p.size(); ++i) J[i][i] = 1.0 / p[i];
        return J;
    };
    return P;
}

VectorPotential itakura_saito() {
    VectorPotential P;
    P.name = "itakura_saito";
    P.phi = [](std::span<const double> p) {
        double s = 0.0;
        for (double x : p) s -= std::log(x);
        return s;
    };
    P.G = [](std::span<const double> p) {
        Vec g(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) g[i] = -1.0 / p[i];
        return g;
    };
    P.G_jacobian = [](std::span<const double> p) {
        Mat J(p.size(), Vec(p.size(), 0.0));
        for (std::size_t i = 0; i < p.size(); ++i) J[i][i] = 1.0 / (p[i] * p[i]);
        return J;
    };
    return P;
}

VectorPotential squared_euclidean() {
    VectorPotential P;
    P.name = "squared_euclidean";
    P.phi = [](std::span<const double> p) {
        double s = 0.0;
        for (double x : p) s += x * x;
        return s;
    };
    P.G = [](std::span<const double> p) {
        Vec g(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) g[i] = 2.0 * p[i];
        return g;
    };
    P.G_jacobian = [](std::span<const double> p) {
        Mat J(p.size(), Vec(p.size(), 0.0));
        for (std::size_t i = 0; i < p.size(); ++i) J[i][i] = 2.0;
        return J;
    };
    return P;
}

VectorPotential potential_from_loss(const MulticlassLoss& loss) {
    VectorPotential P;
    P.name = "bayes(" + loss.id + ")";
    P.phi = [loss](std::span<const double> p) {
        const Vec l = loss.ell(p);
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) s += weighted(p[i], l[i]);
        return -s;
    };
    P.G = [loss](std::span<const double> p) { return loss.selection(p); };
    P.G_jacobian = [loss](std::span<const double> p) { return loss.selection_jacobian(p); };
    return P;
}

double pointwise_risk(const MulticlassLoss& loss, const ProbVector& p, const ProbVector& q) {
    if (p.size() != loss.n || q.size() != loss.n) {
        throw InvalidArgument("pointwise_risk: dimension mismatch");
    }
    const Vec l = loss.ell(q.values());
    double s = 0.0;
    for (std::size_t i = 0; i < loss.n; ++i) s += weighted(p[i], l[i]);
    return s;
}

double bayes_risk(const MulticlassLoss& loss, const ProbVector& p) { return pointwise_risk(loss, p, p); }

ConvexPotential potential_from_loss(const BinaryLoss& loss) {
    ConvexPotential P;
    P.name = "bayes(" + loss.id + ")";
    P.phi = ScalarFn([loss](double p) { return -loss.bayes(p); }, {0.0, 1.0}, Monotonicity::none,
                     "phi");
    P.H = ScalarFn([loss](double p) { return loss.H(p); }, {0.0, 1.0}, Monotonicity::increasing, "H");
    if (loss.d_ell0 && loss.d_ell1) {
        P.phi2 = ScalarFn([loss](double p) { return loss.dell0(p) - loss.dell1(p); }, {0.0, 1.0},
                          Monotonicity::none, "phi''");
    }
    if (loss.link_inverse) P.H_inverse = loss.link_inverse;
    P.symmetric = loss.symmetric;
    return P;
}

namespace {

Interval sampling_range(const Interval& d) {
    return {std::max(d.lo, -10.0), std::min(d.hi, 10.0)};
}

}  // namespace

ConvexityReport certify_convexity(const ConvexPotential& pot, std::size_t samples, double slack) {
    const Interval r = sampling_range(pot.domain);
    const std::size_t m = std::max<std::size_t>(4, static_cast<std::size_t>(std::sqrt(double(samples))));
    ConvexityReport rep;
    for (std::size_t i = 0; i <= m; ++i) {
        for (std::size_t j = i + 1; j <= m; ++j) {
            const double u = r.lo + r.width() * i / m;
            const double v = r.lo + r.width() * j / m;
            const double fu = pot.phi(u), fv = pot.phi(v);
            if (!std::isfinite(fu) || !std::isfinite(fv)) continue;
            const double mid = pot.phi(0.5 * (u + v));
            const double excess = mid - 0.5 * (fu + fv);
            if (excess > slack * std::max(1.0, std::abs(mid)) && excess > rep.excess) {
                rep = {false, u, v, excess};
            }
        }
    }
    return rep;
}

SubgradientReport certify_subgradient(const ConvexPotential& pot, std::size_t samples) {
    const Interval r = sampling_range(pot.domain);
    const std::size_t m = std::max<std::size_t>(4, static_cast<std::size_t>(std::sqrt(double(samples))));
    SubgradientReport rep;
    for (std::size_t i = 1; i < m; ++i) {
        const double p = r.lo + r.width() * i / m;
        const double fp = pot.phi(p), hp = pot.H(p);
        for (std::size_t j = 0; j <= m; ++j) {
            const double t = r.lo + r.width() * j / m;
            const double gap = pot.phi(t) - fp - (t - p) * hp;
            if (gap < -1e-9 * std::max(1.0, std::abs(fp)) && gap < rep.gap) rep = {false, t, p, gap};
        }
    }
    return rep;
}

ScalarFn canonical_link(const BinaryLoss& loss) {
    double prev = loss.H(1e-3);
    for (int k = 2; k <= 999; ++k) {
        const double p = k / 1000.0;
        const double h = loss.H(p);
        if (!(h > prev)) {
            std::ostringstream msg;
            msg << "canonical_link: H = ell0 - ell1 of '" << loss.id << "' is not strictly increasing near p = "
                << p;
            throw ContractViolation(msg.str());
        }
        prev = h;
    }
    return ScalarFn([loss](double p) { return loss.H(p); }, {0.0, 1.0}, Monotonicity::increasing, "H");
}

ScalarFn link_inverse(const BinaryLoss& loss) {
    if (loss.link_inverse) return *loss.link_inverse;
    auto H = [loss](double p) { return loss.H(p); };
    const Interval b = finite_unit_bracket(H);
    return ScalarFn(
        [H, b](double z) { return invert_monotone_saturating(H, z, b, 1e-14); }, {}, Monotonicity::increasing,
        "H^-1");
}

ConjugateValue conjugate(const ConvexPotential& pot, double z) {
    if (!pot.H) return conjugate_numeric(pot, z);
    Interval d = pot.domain;
    auto H = [&pot](double t) { return pot.H(t); };
    if (!d.bounded()) return conjugate_numeric(pot, z);
    if (!std::isfinite(H(d.lo))) d.lo = d.lo + std::max(1e-300, std::abs(d.lo) * 1e-16);
    if (!std::isfinite(H(d.hi))) d.hi = std::nextafter(d.hi, d.lo);
    bool saturated = false;
    double t = pot.H_inverse ? std::clamp((*pot.H_inverse)(z), pot.domain.lo, pot.domain.hi)
                             : invert_monotone_saturating(H, z, d, 1e-14, &saturated);
    if (!pot.H_inverse && (t == d.lo || t == d.hi)) {
        // The bracket was nudged off an infinite-slope end; the sup sits at the true end.
        if (t == d.lo && z <= H(d.lo)) t = pot.domain.lo;
        if (t == d.hi && z >= H(d.hi)) t = pot.domain.hi;
    }
    ConjugateValue out;
    out.argmax = t;
    out.value = weighted(t, z) - pot.phi(t);
    out.at_boundary = saturated || t == pot.domain.lo || t == pot.domain.hi;
    return out;
}

ConjugateValue conjugate_numeric(const ConvexPotential& pot, double z) {
    const Interval d = pot.domain.bounded() ? pot.domain : sampling_range(pot.domain);
    auto obj = [&](double t) {
        const double v = weighted(t, z) - pot.phi(t);
        return std::isfinite(v) ? v : -kInf;
    };
    constexpr int kGrid = 2000;
    int best = 0;
    double best_v = -kInf;
    for (int k = 0; k <= kGrid; ++k) {
        const double t = d.lo + d.width() * k / kGrid;
        const double v = obj(t);
        if (v > best_v) {
            best_v = v;
            best = k;
        }
    }
    double a = d.lo + d.width() * std::max(0, best - 1) / kGrid;
    double b = d.lo + d.width() * std::min(kGrid, best + 1) / kGrid;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = obj(x1), f2 = obj(x2);
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = obj(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = obj(x1);
        }
    }
    ConjugateValue out;
    const double tm = 0.5 * (a + b);
    out.argmax = tm;
    out.value = obj(tm);
    for (double t : {d.lo, d.hi, x1, x2}) {
        const double v = obj(t);
        if (v > out.value) {
            out.value = v;
            out.argmax = t;
        }
    }
    out.at_boundary = out.argmax == d.lo || out.argmax == d.hi;
    return out;
}

ScalarFn conjugate_fn(const BinaryLoss& loss) {
    if (loss.conjugate) return *loss.conjugate;
    ConvexPotential pot = potential_from_loss(loss);
    return ScalarFn([pot](double z) { return conjugate(pot, z).value; }, {}, Monotonicity::increasing,
                    "phi*");
}

double bregman(const ConvexPotential& pot, double u, double v) {
    if (u == v) return 0.0;
    return pot.phi(u) - pot.phi(v) - weighted(u - v, pot.H(v));
}

double bregman(const VectorPotential& pot, std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw InvalidArgument("bregman: dimension mismatch");
    const Vec g = pot.G(v);
    double lin = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) lin += weighted(u[i] - v[i], g[i]);
    return pot.phi(u) - pot.phi(v) - lin;
}

// ---------------------------------------------------------------------------
// check_proper
// ---------------------------------------------------------------------------

namespace {

struct PairRecord {
    double regret = kInf;
    std::size_t pi = 0, qi = 0;
    bool set = false;
};

bool better(const PairRecord& a, const PairRecord& b) {
    // Smaller regret wins; ties go to the lexicographically smaller pair.
    if (!b.set) return a.set;
    if (!a.set) return false;
    if (a.regret != b.regret) return a.regret < b.regret;
    return std::tie(a.pi, a.qi) < std::tie(b.pi, b.qi);
}

double dot_weighted(const ProbVector& p, const Vec& l) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += weighted(p[i], l[i]);
    return s;
}

}  // namespace

ProperCertificate check_proper(const MulticlassLoss& loss, const ProperOptions& opts) {
    const auto grid = simplex_grid(loss.n, opts.resolution);
    const std::size_t N = grid.size();
    std::vector<Vec> losses(N);
    parallel_chunks(N, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) losses[k] = loss.ell(grid[k].values());
    });

    const std::size_t workers = worker_threads();
    std::vector<PairRecord> worst(workers + 1), strict(workers + 1);
    std::vector<std::size_t> strict_first(workers + 1, SIZE_MAX);
    parallel_chunks(N, [&](std::size_t w, std::size_t b, std::size_t e) {
        PairRecord local_worst, local_strict;
        for (std::size_t i = b; i < e; ++i) {
            const ProbVector& p = grid[i];
            if (opts.full_support_targets && !p.interior()) continue;
            const double base = dot_weighted(p, losses[i]);
            if (!std::isfinite(base)) continue;
            for (std::size_t j = 0; j < N; ++j) {
                if (j == i) continue;
                const ProbVector& q = grid[j];
                const double v = dot_weighted(p, losses[j]);
                double regret = v - base;
                if (std::isnan(regret)) regret = -kInf;
                PairRecord rec{regret, i, j, true};
                if (better(rec, local_worst)) local_worst = rec;
                if (opts.check_strict && p.interior() && q.interior() && !local_strict.set) {
                    double d2 = 0.0;
                    for (std::size_t k = 0; k < p.size(); ++k) d2 += (p[k] - q[k]) * (p[k] - q[k]);
                    if (!(regret > opts.strict_delta * d2)) local_strict = rec;
                }
            }
        }
        worst[w] = local_worst;
        strict[w] = local_strict;
    });

    ProperCertificate cert;
    cert.loss_id = loss.id;
    cert.n = loss.n;
    cert.resolution = opts.resolution;
    cert.tol = opts.tol;
    cert.strict_checked = opts.check_strict;
    PairRecord w_all, s_all;
    for (const auto& r : worst)
        if (better(r, w_all)) w_all = r;
    for (const auto& r : strict) {
        // First failing pair in scan order, not the smallest regret.
        if (r.set && (!s_all.set || std::tie(r.pi, r.qi) < std::tie(s_all.pi, s_all.qi))) s_all = r;
    }
    if (w_all.set) {
        cert.margin = w_all.regret;
        cert.worst_p = grid[w_all.pi].vec();
        cert.worst_q = grid[w_all.qi].vec();
        cert.proper = !(w_all.regret < -opts.tol);
    }
    if (s_all.set) {
        cert.strict = false;
        cert.strict_gap = s_all.regret;
        cert.strict_p = grid[s_all.pi].vec();
        cert.strict_q = grid[s_all.qi].vec();
    }
    return cert;
}

ProperCertificate check_proper(const BinaryLoss& loss, const ProperOptions& opts) {
    return check_proper(as_multiclass(loss), opts);
}

// ---------------------------------------------------------------------------
// Links
// ---------------------------------------------------------------------------

Vec default_link_sample() {
    Vec s = linspace(-30.0, 30.0, 601);
    for (double z : {1e-3, 1e-2, 0.05, 0.25}) {
        s.push_back(z);
        s.push_back(-z);
    }
    return s;
}

FConditionReport check_F_condition(const ScalarFn& F, std::span<const double> sample) {
    FConditionReport rep;
    rep.f_at_zero = F.domain().contains(0.0) ? F(0.0) : std::nan("");
    rep.worst_sum = -kInf;
    Vec zs(sample.begin(), sample.end());
    zs.push_back(0.0);
    for (double z : zs) {
        if (!F.domain().contains(z) || !F.domain().contains(-z)) continue;
        const double s = F(z) + F(-z);
        if (std::abs(s - 1.0) > 1e-12) rep.debreu = false;
        if (s > rep.worst_sum) {
            rep.worst_sum = s;
            rep.worst_z = std::abs(z);
        }
        if (s > 1.0 + 1e-12) rep.pass = false;
    }
    return rep;
}

FConditionReport check_F_condition(const ScalarFn& F) {
    const Vec s = default_link_sample();
    return check_F_condition(F, s);
}

// ---------------------------------------------------------------------------
// Lift, margins, separability
// ---------------------------------------------------------------------------

MulticlassLoss one_vs_rest_lift(const BinaryLoss& loss, std::size_t n, bool certify_input) {
    if (n < 2) throw InvalidArgument("one_vs_rest_lift: n must be at least 2");
    if (certify_input) {
        ProperOptions o;
        o.check_strict = false;
        const auto cert = check_proper(loss, o);
        if (!cert.proper) {
            throw ContractViolation("one_vs_rest_lift: input loss '" + loss.id + "' is not proper");
        }
    }
    auto ell = [loss, n](std::span<const double> q) {
        Vec l0(n), l1(n);
        for (std::size_t j = 0; j < n; ++j) {
            l0[j] = loss.ell0(q[j]);
            l1[j] = loss.ell1(q[j]);
        }
        Vec out(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = l1[i];
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) s += l0[j];
            out[i] = s;
        }
        return out;
    };
    auto jac = [loss, n](std::span<const double> q) {
        Mat J(n, Vec(n));
        Vec d0(n), d1(n);
        for (std::size_t j = 0; j < n; ++j) {
            d0[j] = loss.dell0(q[j]);
            d1[j] = loss.dell1(q[j]);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) J[i][j] = (i == j) ? d1[j] : d0[j];
        return J;
    };
    return selection_from_loss("ovr(" + loss.id + ")", n, ell, jac, false);
}

MarginTransformed margin_transform(const BinaryLoss& loss, double a, double c) {
    if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(c)) {
        throw InvalidArgument("margin_transform: require a > 0 and finite c");
    }
    MarginTransformed out;
    out.a = a;
    out.c = c;
    const ScalarFn F = link_inverse(loss);
    const ScalarFn conj = conjugate_fn(loss);

    BinaryLoss t = loss;
    std::ostringstream id;
    id << loss.id << "+margin(" << a << "," << c << ")";
    t.id = id.str();
    t.ell0 = ScalarFn([l = loss.ell0, a](double p) { return a * l(p); }, {0.0, 1.0});
    t.ell1 = ScalarFn([l = loss.ell1, a, c](double p) { return a * l(p) + c; }, {0.0, 1.0});
    if (loss.d_ell0) t.d_ell0 = ScalarFn([d = *loss.d_ell0, a](double p) { return a * d(p); }, {0.0, 1.0});
    if (loss.d_ell1) t.d_ell1 = ScalarFn([d = *loss.d_ell1, a](double p) { return a * d(p); }, {0.0, 1.0});
    t.symmetric = loss.symmetric && c == 0.0;
    out.link_inverse = ScalarFn([F, a, c](double z) { return F((z + c) / a); }, {}, Monotonicity::increasing,
                                "H~^-1");
    out.conjugate = ScalarFn([conj, a, c](double z) { return a * conj((z + c) / a); }, {},
                             Monotonicity::increasing, "phi~*");
    out.choice_link = ScalarFn([F, a, c](double z) { return F((z - c) / a); }, {}, Monotonicity::increasing,
                               "F_margin");
    t.link_inverse = out.link_inverse;
    t.conjugate = out.conjugate;
    out.loss = std::move(t);
    out.klst_compliant = check_F_condition(out.choice_link).pass;
    return out;
}

SeparabilityReport check_separability_implies_log(const ScalarFn& s, std::size_t n, std::size_t resolution) {
    if (n < 3) throw InvalidArgument("check_separability_implies_log: n must be at least 3");
    SeparabilityReport rep;
    const double z1 = 0.25, z2 = 0.75;
    rep.K1 = (s(z1) - s(z2)) / (std::log(z2) - std::log(z1));
    rep.K2 = s(z1) + rep.K1 * std::log(z1);
    rep.fit_residual = 0.0;
    for (double z : linspace(0.01, 1.0, 100)) {
        const double r = std::abs(s(z) - (-rep.K1 * std::log(z) + rep.K2));
        rep.fit_residual = std::max(rep.fit_residual, std::isnan(r) ? kInf : r);
    }
    rep.fits_log = rep.K1 > 0.0 && rep.fit_residual <= 1e-8;
    ProperOptions o;
    o.resolution = resolution;
    o.full_support_targets = true;
    o.check_strict = false;
    rep.certificate = check_proper(separable_loss("separable(" + s.name() + ")", n, s), o);
    rep.pass = rep.certificate.proper;
    return rep;
}

bool partial_losses_monotone(const BinaryLoss& loss, std::size_t grid) {
    double prev0 = loss.ell0(1.0 / (grid + 1)), prev1 = loss.ell1(1.0 / (grid + 1));
    for (std::size_t k = 2; k <= grid; ++k) {
        const double p = static_cast<double>(k) / (grid + 1);
        const double a = loss.ell0(p), b = loss.ell1(p);
        if (a < prev0 - 1e-12 * std::max(1.0, std::abs(a))) return false;
        if (b > prev1 + 1e-12 * std::max(1.0, std::abs(b))) return false;
        prev0 = a;
        prev1 = b;
    }
    return true;
}

}  // namespace properpo
