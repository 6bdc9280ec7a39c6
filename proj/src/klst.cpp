#include "properpo/klst.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <sstream>

namespace properpo {

void ChoiceTable::validate() const {
    if (probs.empty()) throw InvalidArgument("ChoiceTable: no states");
    const std::size_t nn = probs.front().size();
    if (nn == 0) throw InvalidArgument("ChoiceTable: no actions");
    if (!states.empty() && states.size() != probs.size())
        throw InvalidArgument("ChoiceTable: states list does not match probs");
    if (!actions.empty() && actions.size() != nn)
        throw InvalidArgument("ChoiceTable: actions list does not match probs");
    for (std::size_t x = 0; x < probs.size(); ++x) {
        if (probs[x].size() != nn) throw InvalidArgument("ChoiceTable: ragged state slices");
        for (std::size_t a = 0; a < nn; ++a) {
            if (probs[x][a].size() != nn) throw InvalidArgument("ChoiceTable: non-square state slice");
            for (std::size_t b = 0; b < nn; ++b) {
                const double v = probs[x][a][b];
                if (!(v >= 0.0 && v <= 1.0)) {
                    std::ostringstream msg;
                    msg << "ChoiceTable: probs[" << x << "][" << a << "][" << b << "] = " << v
                        << " outside [0, 1]";
                    throw InvalidArgument(msg.str());
                }
            }
        }
        for (std::size_t a = 0; a < nn; ++a)
            for (std::size_t b = a; b < nn; ++b) {
                const double s = probs[x][a][b] + probs[x][b][a];
                if (s > 1.0 + 1e-12 && a != b) {
                    std::ostringstream msg;
                    msg << "ChoiceTable: pair sum " << s << " > 1 at state " << x << ", (" << a << ", " << b
                        << ")";
                    throw InvalidArgument(msg.str());
                }
            }
    }
}

std::string LotterySpace::label(std::size_t L) const {
    std::ostringstream s;
    if (!alpha) {
        s << "y" << L;
    } else {
        s << "(y" << L / base_n << " y" << L % base_n << ")";
    }
    return s.str();
}

LotterySpace expand(const ChoiceTable& table, double alpha, double tol) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidArgument("expand: alpha must lie strictly inside (0, 1)");
    }
    table.validate();
    const std::size_t n = table.n();
    LotterySpace S;
    S.alpha = alpha;
    S.base_n = n;
    S.N = n * n;
    S.tol = tol;
    const double a = alpha, b = 1.0 - alpha;
    S.probs.resize(table.m());
    for (std::size_t x = 0; x < table.m(); ++x) {
        const Mat& p = table.probs[x];
        Mat& q = S.probs[x];
        q.assign(S.N, Vec(S.N));
        for (std::size_t L = 0; L < S.N; ++L) {
            const std::size_t y1 = L / n, y2 = L % n;
            for (std::size_t M = 0; M < S.N; ++M) {
                const std::size_t y3 = M / n, y4 = M % n;
                q[L][M] = a * a * p[y1][y3] + a * b * p[y1][y4] + a * b * p[y2][y3] + b * b * p[y2][y4];
            }
        }
    }
    return S;
}

LotterySpace base_space(const ChoiceTable& table, double tol) {
    table.validate();
    LotterySpace S;
    S.base_n = table.n();
    S.N = table.n();
    S.tol = tol;
    S.probs = table.probs;
    return S;
}

AxiomVerdict check_bearability(const LotterySpace& S) {
    AxiomVerdict v;
    v.axiom = "bearability";
    v.alpha = S.alpha;
    for (std::size_t x = 0; x < S.m(); ++x) {
        for (std::size_t L = 0; L < S.N; ++L) {
            ++v.checked;
            if (!S.edge(x, L, L)) {
                v.pass = false;
                v.state = x;
                v.witness = {L};
                v.values = {S.probs[x][L][L]};
                v.detail = "p(L > L) = " + std::to_string(S.probs[x][L][L]) + " for L = " + S.label(L);
                return v;
            }
        }
    }
    return v;
}

AxiomVerdict check_wedge_axiom(const LotterySpace& S) {
    AxiomVerdict v;
    v.axiom = "wedge";
    v.alpha = S.alpha;
    for (std::size_t x = 0; x < S.m(); ++x) {
        for (std::size_t c = 0; c < S.N; ++c) {
            for (std::size_t l2 = 0; l2 < S.N; ++l2) {
                if (l2 == c || !S.edge(x, c, l2)) continue;
                for (std::size_t l3 = l2 + 1; l3 < S.N; ++l3) {
                    if (l3 == c || !S.edge(x, c, l3)) continue;
                    ++v.checked;
                    const bool out = S.prefers(x, c, l2) && S.prefers(x, c, l3);
                    const bool in = S.prefers(x, l2, c) && S.prefers(x, l3, c);
                    if ((out || in) && !S.edge(x, l2, l3)) {
                        v.pass = false;
                        v.state = x;
                        v.witness = {l2, c, l3};
                        v.values = {S.probs[x][l2][l3], S.probs[x][l3][l2]};
                        v.detail = "wedge " + S.label(l2) + "-" + S.label(c) + "-" + S.label(l3) +
                                   " with same-polarity preferences is not closed";
                        return v;
                    }
                }
            }
        }
    }
    return v;
}

AxiomVerdict check_path_axiom(const LotterySpace& S) {
    AxiomVerdict v;
    v.axiom = "path";
    v.alpha = S.alpha;
    for (std::size_t x = 0; x < S.m(); ++x) {
        for (std::size_t src = 0; src < S.N; ++src) {
            // BFS over non-abstaining preferred arcs; simple paths suffice.
            std::vector<char> seen(S.N, 0);
            std::deque<std::size_t> queue{src};
            seen[src] = 1;
            while (!queue.empty()) {
                const std::size_t a = queue.front();
                queue.pop_front();
                for (std::size_t b = 0; b < S.N; ++b) {
                    if (!seen[b] && S.edge(x, a, b) && S.prefers(x, a, b)) {
                        seen[b] = 1;
                        queue.push_back(b);
                    }
                }
            }
            for (std::size_t dst = 0; dst < S.N; ++dst) {
                if (dst == src || !S.prefers(x, src, dst)) continue;
                ++v.checked;
                if (!seen[dst]) {
                    v.pass = false;
                    v.state = x;
                    v.witness = {src, dst};
                    v.values = {S.probs[x][src][dst]};
                    v.detail = S.label(src) + " is preferred to " + S.label(dst) +
                               " but no non-abstaining preference path connects them";
                    return v;
                }
            }
        }
    }
    return v;
}

namespace {

struct Triple {
    std::size_t a, b, c;
};

// Ordered triples of distinct lotteries with edges (a,b), (b,c); triangles also need (a,c).
std::vector<Triple> chains(const LotterySpace& S, std::size_t x, bool closed) {
    std::vector<Triple> out;
    for (std::size_t a = 0; a < S.N; ++a)
        for (std::size_t b = 0; b < S.N; ++b) {
            if (b == a || !S.edge(x, a, b)) continue;
            for (std::size_t c = 0; c < S.N; ++c) {
                if (c == a || c == b || !S.edge(x, b, c)) continue;
                if (closed && !S.edge(x, a, c)) continue;
                out.push_back({a, b, c});
            }
        }
    return out;
}

}  // namespace

AxiomVerdict check_monotonicity(const LotterySpace& S, const MonotonicityOptions& opts) {
    AxiomVerdict v;
    v.axiom = "monotonicity";
    v.alpha = S.alpha;
    const double tol = S.tol;
    const bool exhaustive = S.N <= opts.exhaustive_limit;
    v.sampled = !exhaustive;

    struct Found {
        std::size_t x;
        Triple t, w;
    };
    std::optional<Found> best;
    auto key = [](const Found& f) { return std::tuple(f.x, f.t.a, f.t.b, f.t.c, f.w.a, f.w.b, f.w.c); };

    for (std::size_t x = 0; x < S.m(); ++x) {
        const Mat& P = S.probs[x];
        const auto tri = chains(S, x, true);
        const auto wedge = chains(S, x, false);
        auto violates = [&](const Triple& t, const Triple& w) {
            if (!(P[t.a][t.b] >= P[w.a][w.b] - tol)) return false;
            if (!(P[t.b][t.c] >= P[w.b][w.c] - tol)) return false;
            return !S.edge(x, w.a, w.c) || P[t.a][t.c] < P[w.a][w.c] - tol;
        };
        if (exhaustive) {
            for (const auto& t : tri) {
                for (const auto& w : wedge) {
                    ++v.checked;
                    if (violates(t, w)) {
                        Found f{x, t, w};
                        if (!best || key(f) < key(*best)) best = f;
                        break;
                    }
                }
                if (best && best->x == x) break;
            }
        } else if (!tri.empty() && !wedge.empty()) {
            std::mt19937_64 rng(opts.seed + x);
            for (std::size_t k = 0; k < opts.samples; ++k) {
                const auto& t = tri[rng() % tri.size()];
                const auto& w = wedge[rng() % wedge.size()];
                ++v.checked;
                if (violates(t, w)) {
                    Found f{x, t, w};
                    if (!best || key(f) < key(*best)) best = f;
                }
            }
        }
        if (best) break;
    }
    if (best) {
        const Mat& P = S.probs[best->x];
        const auto& t = best->t;
        const auto& w = best->w;
        v.pass = false;
        v.state = best->x;
        v.witness = {t.a, t.b, t.c, w.a, w.b, w.c};
        v.values = {P[t.a][t.b], P[w.a][w.b], P[t.b][t.c], P[w.b][w.c], P[t.a][t.c], P[w.a][w.c]};
        std::ostringstream d;
        d << "triangle " << S.label(t.a) << "," << S.label(t.b) << "," << S.label(t.c) << " vs wedge "
          << S.label(w.a) << "," << S.label(w.b) << "," << S.label(w.c) << ": ";
        if (!S.edge(best->x, w.a, w.c)) {
            d << "wedge end points abstain";
        } else {
            d << "p(L1 > L3) = " << P[t.a][t.c] << " < p(L4 > L6) = " << P[w.a][w.c];
        }
        v.detail = d.str();
    }
    return v;
}

Vec default_lcs_alphas() { return {0.1, 0.3, 0.5, 0.7, 0.9}; }

KlstCertificate verify_klst(const ChoiceTable& table, const Vec& lcs_alphas, double alpha_mono, double tol,
                            const MonotonicityOptions& mono) {
    KlstCertificate cert;
    cert.lcs_alphas = lcs_alphas;
    cert.alpha_mono = alpha_mono;
    for (double a : lcs_alphas) {
        const LotterySpace S = expand(table, a, tol);
        std::vector<AxiomVerdict> row{check_bearability(S), check_wedge_axiom(S), check_path_axiom(S)};
        for (const auto& r : row) cert.pass = cert.pass && r.pass;
        cert.lcs.push_back(std::move(row));
    }
    cert.monotonicity = check_monotonicity(expand(table, alpha_mono, tol), mono);
    cert.pass = cert.pass && cert.monotonicity.pass;
    return cert;
}

// ---------------------------------------------------------------------------
// Representation
// ---------------------------------------------------------------------------

double Representation::F(double z) const {
    if (knots_z.empty()) return 0.5;
    if (z <= knots_z.front()) return knots_p.front();
    if (z >= knots_z.back()) return knots_p.back();
    const auto it = std::upper_bound(knots_z.begin(), knots_z.end(), z);
    const std::size_t k = static_cast<std::size_t>(it - knots_z.begin());
    const double z0 = knots_z[k - 1], z1 = knots_z[k];
    const double w = (z - z0) / (z1 - z0);
    return knots_p[k - 1] + w * (knots_p[k] - knots_p[k - 1]);
}

namespace {

// Solves A x = b for small dense A by Gaussian elimination with partial pivoting.
Vec solve_dense(Mat A, Vec b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        if (std::abs(A[c][c]) < 1e-300) throw ContractViolation("fit_representation: singular system");
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

struct Obs {
    std::size_t x, y, y2;
    double p;
};

}  // namespace

Representation fit_representation(const ChoiceTable& table, const ScalarFn& reference_link, double tol) {
    table.validate();
    const std::size_t m = table.m(), n = table.n();
    Representation R;
    R.u.assign(m, Vec(n, 0.0));

    auto ref = [reference_link](double z) { return reference_link(z); };
    const Interval bracket{-60.0, 60.0};
    const double flo = ref(bracket.lo), fhi = ref(bracket.hi);

    // Least squares on reference-link scores, centered per state.
    for (std::size_t x = 0; x < m; ++x) {
        Mat A(n, Vec(n, 0.0));
        Vec b(n, 0.0);
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t y2 = 0; y2 < n; ++y2) {
                if (y == y2) continue;
                const double p = table.probs[x][y][y2];
                if (!(p > flo && p < fhi)) continue;
                const double z = invert_monotone_saturating(ref, p, bracket, 1e-15);
                A[y][y] += 1.0;
                A[y][y2] -= 1.0;
                A[y2][y2] += 1.0;
                A[y2][y] -= 1.0;
                b[y] += z;
                b[y2] -= z;
            }
        // The centering row removes the constant null direction.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) A[i][j] += 1.0 / n;
        R.u[x] = solve_dense(A, b);
        const double mean = std::accumulate(R.u[x].begin(), R.u[x].end(), 0.0) / n;
        for (double& v : R.u[x]) v -= mean;
    }

    std::vector<Obs> obs;
    for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t y2 = 0; y2 < n; ++y2)
                if (y != y2) obs.push_back({x, y, y2, table.probs[x][y][y2]});
    auto du = [&R](const Obs& o) { return R.u[o.x][o.y] - R.u[o.x][o.y2]; };
    auto count_violations = [&]() {
        std::size_t c = 0;
        for (const auto& A : obs)
            for (const auto& B : obs)
                if (A.p < B.p - tol && !(du(A) < du(B))) ++c;
        return c;
    };

    // Hinge repair: push apart utility differences whose order disagrees with p.
    R.order_violations = count_violations();
    for (int pass = 0; pass < 500 && R.order_violations > 0; ++pass) {
        for (const auto& A : obs)
            for (const auto& B : obs) {
                if (!(A.p < B.p - tol)) continue;
                const double gap = du(A) - du(B) + 1e-6;
                if (gap <= 0.0) continue;
                const double step = 0.25 * gap;
                R.u[A.x][A.y] -= step;
                R.u[A.x][A.y2] += step;
                R.u[B.x][B.y] += step;
                R.u[B.x][B.y2] -= step;
            }
        for (auto& row : R.u) {
            const double mean = std::accumulate(row.begin(), row.end(), 0.0) / n;
            for (double& v : row) v -= mean;
        }
        R.order_violations = count_violations();
    }
    if (R.order_violations > 0) {
        std::ostringstream msg;
        msg << "fit_representation: not representable at tolerance (" << R.order_violations
            << " order violations remain)";
        throw ContractViolation(msg.str());
    }

    // Knots (du, p), including the diagonal at zero; merge ties, then pool
    // adjacent violators so that F is nondecreasing.
    std::vector<std::pair<double, double>> pts;
    for (const auto& o : obs) pts.emplace_back(du(o), o.p);
    for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = 0; y < n; ++y) pts.emplace_back(0.0, table.probs[x][y][y]);
    std::sort(pts.begin(), pts.end());
    Vec z, p, w;
    for (const auto& [zz, pp] : pts) {
        if (!z.empty() && std::abs(zz - z.back()) <= 1e-12) {
            p.back() = (p.back() * w.back() + pp) / (w.back() + 1.0);
            w.back() += 1.0;
        } else {
            z.push_back(zz);
            p.push_back(pp);
            w.push_back(1.0);
        }
    }
    std::vector<std::size_t> start;
    Vec pv, wv;
    for (std::size_t i = 0; i < z.size(); ++i) {
        start.push_back(i);
        pv.push_back(p[i]);
        wv.push_back(w[i]);
        while (pv.size() > 1 && pv[pv.size() - 2] > pv.back()) {
            const double wsum = wv[wv.size() - 2] + wv.back();
            const double merged = (pv[pv.size() - 2] * wv[wv.size() - 2] + pv.back() * wv.back()) / wsum;
            pv.pop_back();
            wv.pop_back();
            start.pop_back();
            pv.back() = merged;
            wv.back() = wsum;
        }
    }
    start.push_back(z.size());
    for (std::size_t b = 0; b + 1 < start.size(); ++b)
        for (std::size_t i = start[b]; i < start[b + 1]; ++i) p[i] = pv[b];
    R.knots_z = z;
    R.knots_p = p;

    R.residual = 0.0;
    for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t y2 = 0; y2 < n; ++y2) {
                const double d = R.u[x][y] - R.u[x][y2];
                R.residual = std::max(R.residual, std::abs(R.F(d) - table.probs[x][y][y2]));
            }
    for (double zz : R.knots_z) {
        if (R.F(zz) + R.F(-zz) > 1.0 + 1e-9) R.f_condition_at_knots = false;
    }
    return R;
}

Representation fit_representation(const ChoiceTable& table) {
    return fit_representation(table, ScalarFn(logistic, {}, Monotonicity::increasing, "sigmoid"));
}

ChoiceTable generate_from_model(const ScalarFn& F, const Mat& u, const AbstentionFn& abstention) {
    const FConditionReport rep = check_F_condition(F);
    if (!rep.pass) {
        std::ostringstream msg;
        msg << "generate_from_model: link fails F(z) + F(-z) <= 1 at z = " << rep.worst_z << " (sum "
            << rep.worst_sum << ")";
        throw ContractViolation(msg.str());
    }
    if (u.empty() || u.front().empty()) throw InvalidArgument("generate_from_model: empty utility table");
    ChoiceTable T;
    const std::size_t m = u.size(), n = u.front().size();
    for (std::size_t x = 0; x < m; ++x) T.states.push_back("x" + std::to_string(x));
    for (std::size_t y = 0; y < n; ++y) T.actions.push_back("y" + std::to_string(y));
    T.probs.assign(m, Mat(n, Vec(n)));
    for (std::size_t x = 0; x < m; ++x) {
        if (u[x].size() != n) throw InvalidArgument("generate_from_model: ragged utility table");
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t y2 = 0; y2 < n; ++y2) {
                double p = F(u[x][y] - u[x][y2]);
                if (abstention && y != y2) p *= 1.0 - abstention(x, y, y2);
                T.probs[x][y][y2] = p;
            }
    }
    T.validate();
    return T;
}

}  // namespace properpo
