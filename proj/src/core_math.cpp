#include "properpo/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <thread>

namespace properpo {

// ---------------------------------------------------------------------------
// ProbVector
// ---------------------------------------------------------------------------

ProbVector::ProbVector(std::vector<double> entries) : entries_(std::move(entries)) {
    if (entries_.size() < 2) {
        throw InvalidArgument("ProbVector: dimension must be at least 2");
    }
    double total = 0.0;
    for (double v : entries_) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InvalidArgument("ProbVector: entries must be finite and nonnegative");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "ProbVector: entries sum to " << total << ", not 1";
        throw InvalidArgument(msg.str());
    }
}

ProbVector ProbVector::normalized(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw InvalidArgument("ProbVector::normalized: weights must be finite and nonnegative");
        }
        total += w;
    }
    if (!(total > 0.0)) {
        throw InvalidArgument("ProbVector::normalized: weights sum to zero");
    }
    for (double& w : weights) w /= total;
    // Push the rounding residue onto the largest entry.
    double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    auto largest = std::max_element(weights.begin(), weights.end());
    *largest += 1.0 - sum;
    return ProbVector(std::move(weights));
}

ProbVector ProbVector::uniform(std::size_t n) {
    if (n < 2) throw InvalidArgument("ProbVector::uniform: dimension must be at least 2");
    return normalized(std::vector<double>(n, 1.0));
}

ProbVector ProbVector::vertex(std::size_t n, std::size_t i) {
    if (i >= n) throw InvalidArgument("ProbVector::vertex: index out of range");
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    return ProbVector(std::move(e));
}

bool ProbVector::interior() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(), [](double v) { return v > 0.0; });
}

std::size_t ProbVector::support_size() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [](double v) { return v > 0.0; }));
}

// ---------------------------------------------------------------------------
// ScalarFn
// ---------------------------------------------------------------------------

bool Interval::bounded() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }

ScalarFn::ScalarFn(Rule rule, Interval domain, Monotonicity mono, std::string name)
    : rule_(std::move(rule)), domain_(domain), mono_(mono), name_(std::move(name)) {
    if (!rule_) throw InvalidArgument("ScalarFn: empty evaluation rule");
    if (!(domain_.lo <= domain_.hi)) throw InvalidArgument("ScalarFn: empty domain");
}

double ScalarFn::operator()(double x) const {
    if (!domain_.contains(x)) {
        std::ostringstream msg;
        msg << "ScalarFn" << (name_.empty() ? "" : " '" + name_ + "'") << ": argument " << x
            << " outside domain [" << domain_.lo << ", " << domain_.hi << "]";
        throw DomainError(msg.str());
    }
    return rule_(x);
}

// ---------------------------------------------------------------------------
// Simplex grids
// ---------------------------------------------------------------------------

std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t result = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;
    }
    return result;
}

namespace {

void compositions(std::size_t n, std::size_t r, std::size_t pos, std::size_t remaining,
                  std::vector<std::size_t>& parts, std::vector<ProbVector>& out) {
    if (pos + 1 == n) {
        parts[pos] = remaining;
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = static_cast<double>(parts[i]) / static_cast<double>(r);
        }
        // Exact fractions k/r can round so that the sum drifts by an ulp or two.
        double sum = std::accumulate(p.begin(), p.end(), 0.0);
        auto largest = std::max_element(p.begin(), p.end());
        *largest += 1.0 - sum;
        out.emplace_back(std::move(p));
        return;
    }
    for (std::size_t k = 0; k <= remaining; ++k) {
        parts[pos] = k;
        compositions(n, r, pos + 1, remaining - k, parts, out);
    }
}

}  // namespace

std::vector<ProbVector> simplex_grid(std::size_t n, std::size_t r) {
    if (n < 2) throw InvalidArgument("simplex_grid: dimension must be at least 2");
    if (r < 1) throw InvalidArgument("simplex_grid: resolution must be at least 1");
    std::vector<ProbVector> out;
    out.reserve(binomial(r + n - 1, n - 1));
    std::vector<std::size_t> parts(n, 0);
    compositions(n, r, 0, r, parts, out);
    return out;
}

std::vector<ProbVector> simplex_grid_interior(std::size_t n, std::size_t r) {
    std::vector<ProbVector> all = simplex_grid(n, r);
    std::vector<ProbVector> out;
    for (auto& p : all) {
        if (p.interior()) out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

namespace {

// Hard cap on integrand calls per regular interval. Roundoff-limited
// integrands would otherwise refine to max_depth everywhere.
constexpr long kMaxEvals = 2'000'000;

struct SimpsonState {
    const std::function<double(double)>& f;
    int max_depth;
    bool failed = false;
    long evals = 0;
};

double simpson_rec(SimpsonState& st, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = st.f(lm);
    const double frm = st.f(rm);
    st.evals += 2;
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (!std::isfinite(delta)) {
        st.failed = true;
        return left + right;
    }
    if (depth >= st.max_depth || st.evals > kMaxEvals) {
        if (std::abs(delta) > 15.0 * tol) st.failed = true;
        return left + right + delta / 15.0;
    }
    if (std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_rec(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           simpson_rec(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

// Integral over a closed interval on which f is finite at both ends.
double simpson_regular(const std::function<double(double)>& f, double a, double b, double tol,
                       int max_depth, bool& failed) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm)) {
        failed = true;
        return std::numeric_limits<double>::quiet_NaN();
    }
    SimpsonState st{f, max_depth};
    // Seed with four panels so that symmetric integrands are not mistaken for
    // converged on the first comparison.
    const double q = 0.25 * (b - a);
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double lo = a + k * q;
        const double hi = (k == 3) ? b : a + (k + 1) * q;
        const double flo = (k == 0) ? fa : f(lo);
        const double fhi = (k == 3) ? fb : f(hi);
        const double fmid = f(0.5 * (lo + hi));
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_rec(st, lo, hi, flo, fmid, fhi, whole, 0.25 * tol, 0);
    }
    failed = failed || st.failed;
    return total;
}

// Integral over (a, b] where f(a) may be singular: pieces [a + w/2^{k+1}, a + w/2^k].
double graded_toward(const std::function<double(double)>& f, double a, double b, double tol,
                     const QuadOptions& opts, bool& failed) {
    const double w = b - a;
    double total = 0.0;
    double prev = 0.0;
    bool have_prev = false;
    const double piece_tol = tol / 4.0;
    for (int k = 0; k < opts.max_endpoint_pieces; ++k) {
        const double hi = a + w * std::ldexp(1.0, -k);
        const double lo = a + w * std::ldexp(1.0, -(k + 1));
        if (!(lo > a) || !(hi > lo)) break;
        const double piece = simpson_regular(f, lo, hi, piece_tol * std::ldexp(1.0, -std::min(k, 30)),
                                             opts.max_depth, failed);
        if (failed) return total;
        total += piece;
        if (have_prev && k >= 3) {
            const double ratio = (prev != 0.0) ? piece / prev : 0.0;
            if (ratio >= 0.0 && ratio < 0.95) {
                const double tail = piece * ratio / (1.0 - ratio);
                if (std::abs(tail) <= tol / 2.0) return total + tail;
            } else if (std::abs(piece) <= tol * 1e-3 && std::abs(prev) <= tol * 1e-3) {
                return total;
            }
        }
        prev = piece;
        have_prev = true;
    }
    failed = true;
    return total;
}

}  // namespace

double quad(const std::function<double(double)>& f, double a, double b, double tol,
            const QuadOptions& opts) {
    if (!(a < b)) throw InvalidArgument("quad: require a < b");
    if (!(tol > 0.0)) throw InvalidArgument("quad: tolerance must be positive");
    const bool sing_a = !std::isfinite(f(a));
    const bool sing_b = !std::isfinite(f(b));
    bool failed = false;
    double result = 0.0;
    if (!sing_a && !sing_b) {
        result = simpson_regular(f, a, b, tol, opts.max_depth, failed);
    } else if (sing_a && !sing_b) {
        result = graded_toward(f, a, b, tol, opts, failed);
    } else if (!sing_a && sing_b) {
        auto g = [&](double t) { return f(a + b - t); };
        result = graded_toward(g, a, b, tol, opts, failed);
    } else {
        const double m = 0.5 * (a + b);
        auto g = [&](double t) { return f(a + m - t); };
        result = graded_toward(g, a, m, tol / 2.0, opts, failed);
        if (!failed) {
            auto h = [&](double t) { return f(m + b - t); };
            result += graded_toward(h, m, b, tol / 2.0, opts, failed);
        }
    }
    if (failed || !std::isfinite(result)) {
        std::ostringstream msg;
        msg << "quadrature failure on [" << a << ", " << b << "]";
        throw QuadratureError(msg.str());
    }
    return result;
}

// ---------------------------------------------------------------------------
// Monotone inversion
// ---------------------------------------------------------------------------

namespace {

struct Bracketed {
    double lo, hi, flo, fhi;
    bool increasing;
};

Bracketed probe_monotone(const std::function<double(double)>& f, Interval bracket, int probes) {
    if (!(bracket.lo < bracket.hi) || !bracket.bounded()) {
        throw InvalidArgument("invert_monotone: bracket must be a bounded interval with lo < hi");
    }
    const double flo = f(bracket.lo);
    const double fhi = f(bracket.hi);
    if (std::isnan(flo) || std::isnan(fhi)) {
        throw DomainError("invert_monotone: function is NaN at the bracket ends");
    }
    if (flo == fhi) {
        throw ContractViolation("invert_monotone: function is not strictly monotone on the bracket");
    }
    const bool increasing = fhi > flo;
    double last = flo;
    for (int k = 1; k <= probes; ++k) {
        const double x = bracket.lo + bracket.width() * k / (probes + 1);
        const double v = f(x);
        if (std::isnan(v) || (increasing ? v < last : v > last)) {
            throw ContractViolation("invert_monotone: function is not monotone on the bracket");
        }
        last = v;
    }
    if (increasing ? fhi < last : fhi > last) {
        throw ContractViolation("invert_monotone: function is not monotone on the bracket");
    }
    return {bracket.lo, bracket.hi, flo, fhi, increasing};
}

double bisect(const std::function<double(double)>& f, double y, Bracketed b, double tol,
              int max_iter) {
    double lo = b.lo, hi = b.hi;
    double best_x = std::abs(b.flo - y) <= std::abs(b.fhi - y) ? lo : hi;
    double best_err = std::min(std::abs(b.flo - y), std::abs(b.fhi - y));
    const double fmin = std::min(b.flo, b.fhi);
    const double fmax = std::max(b.flo, b.fhi);
    for (int it = 0; it < max_iter && best_err > tol; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (std::isnan(fm) || fm < fmin || fm > fmax) {
            throw ContractViolation("invert_monotone: function left the range spanned by the bracket");
        }
        const double err = std::abs(fm - y);
        if (err < best_err) {
            best_err = err;
            best_x = mid;
        }
        const bool below = fm < y;
        if (below == b.increasing) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return best_x;
}

}  // namespace

double invert_monotone(const std::function<double(double)>& f, double y, Interval bracket,
                       double tol, const InvertOptions& opts) {
    const Bracketed b = probe_monotone(f, bracket, opts.monotone_probe);
    const double fmin = std::min(b.flo, b.fhi);
    const double fmax = std::max(b.flo, b.fhi);
    if (y < fmin - tol || y > fmax + tol) {
        std::ostringstream msg;
        msg << "invert_monotone: value " << y << " out of range [" << fmin << ", " << fmax << "]";
        throw OutOfRange(msg.str());
    }
    return bisect(f, y, b, tol, opts.max_iter);
}

double invert_monotone_saturating(const std::function<double(double)>& f, double y,
                                  Interval bracket, double tol, bool* saturated) {
    const Bracketed b = probe_monotone(f, bracket, 16);
    const double fmin = std::min(b.flo, b.fhi);
    const double fmax = std::max(b.flo, b.fhi);
    if (saturated) *saturated = false;
    if (y <= fmin || y >= fmax) {
        if (saturated) *saturated = (y < fmin - tol) || (y > fmax + tol);
        const bool at_low_value = y <= fmin;
        return (at_low_value == b.increasing) ? b.lo : b.hi;
    }
    return bisect(f, y, b, tol, 2200);
}

// ---------------------------------------------------------------------------
// Finite differences and helpers
// ---------------------------------------------------------------------------

std::vector<double> finite_diff(const MultiFn& f, std::span<const double> x, double h) {
    if (!(h > 0.0)) throw InvalidArgument("finite_diff: step must be positive");
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> grad(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double xi = point[i];
        point[i] = xi + h;
        const double fp = f(point);
        point[i] = xi - h;
        const double fm = f(point);
        point[i] = xi;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

double finite_diff(const std::function<double(double)>& f, double x, double h) {
    if (!(h > 0.0)) throw InvalidArgument("finite_diff: step must be positive");
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double pairwise_sum(std::span<const double> terms) {
    if (terms.size() <= 8) {
        double s = 0.0;
        for (double t : terms) s += t;
        return s;
    }
    const std::size_t half = terms.size() / 2;
    return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

std::size_t worker_threads() {
    std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PROPERPO_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return std::min<std::size_t>(static_cast<std::size_t>(v), hw);
    }
    return hw;
}

void parallel_chunks(std::size_t count,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
    const std::size_t workers = std::min(worker_threads(), std::max<std::size_t>(count, 1));
    if (workers <= 1 || count < 64) {
        body(0, 0, count);
        return;
    }
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, w, begin, end] {
            try {
                body(w, begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    pool.clear();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace properpo
