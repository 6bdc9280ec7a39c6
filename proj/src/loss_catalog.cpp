#include "properpo/loss_catalog.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace properpo::catalog {

namespace {

constexpr Interval kUnit{0.0, 1.0};
constexpr Interval kReal{};

ScalarFn unit_fn(std::function<double(double)> f, const char* name,
                 Monotonicity m = Monotonicity::none) {
    return ScalarFn(std::move(f), kUnit, m, name);
}

ScalarFn real_fn(std::function<double(double)> f, const char* name,
                 Monotonicity m = Monotonicity::increasing) {
    return ScalarFn(std::move(f), kReal, m, name);
}

void attach(Entry& e) {
    e.binary.link_inverse = e.F;
    e.binary.conjugate = e.conj;
    e.binary.symmetric = e.symmetric;
    e.binary.validate();
}

BinaryLoss log_binary() {
    BinaryLoss b;
    b.id = "log";
    b.ell1 = unit_fn([](double p) { return -std::log(p); }, "ell1", Monotonicity::decreasing);
    b.ell0 = unit_fn([](double p) { return -std::log1p(-p); }, "ell0", Monotonicity::increasing);
    b.d_ell1 = unit_fn([](double p) { return -1.0 / p; }, "ell1'");
    b.d_ell0 = unit_fn([](double p) { return 1.0 / (1.0 - p); }, "ell0'");
    b.strictly_proper_claimed = true;
    b.finite_at_0 = b.finite_at_1 = false;
    return b;
}

Entry make_log() {
    Entry e;
    e.id = "log";
    e.binary = log_binary();
    e.multiclass = [](std::size_t n) {
        return separable_loss("log", n, ScalarFn([](double q) { return -std::log(q); }, kUnit),
                              ScalarFn([](double q) { return -1.0 / q; }, kUnit));
    };
    e.F = real_fn(logistic, "sigmoid");
    e.conj = real_fn(softplus, "softplus");
    e.surrogate = real_fn([](double z) { return softplus(-z); }, "log(1+exp(-z))", Monotonicity::decreasing);
    e.proper_n2 = e.proper_ngt2 = true;
    e.symmetric = true;
    attach(e);
    return e;
}

Entry make_binary_entropy() {
    // Generated from the one-vs-rest lift of the log loss; the binary partial
    // losses are the lift read at n = 2.
    Entry e;
    e.id = "binary_entropy";
    const BinaryLoss base = log_binary();
    const MulticlassLoss lift2 = one_vs_rest_lift(base, 2, false);
    BinaryLoss b;
    b.id = "binary_entropy";
    b.ell1 = unit_fn([lift2](double p) { return lift2.ell(Vec{p, 1.0 - p})[0]; }, "ell1",
                     Monotonicity::decreasing);
    b.ell0 = unit_fn([lift2](double p) { return lift2.ell(Vec{p, 1.0 - p})[1]; }, "ell0",
                     Monotonicity::increasing);
    b.d_ell1 = unit_fn([lift2](double p) {
        const Mat J = lift2.ell_jacobian(Vec{p, 1.0 - p});
        return J[0][0] - J[0][1];
    }, "ell1'");
    b.d_ell0 = unit_fn([lift2](double p) {
        const Mat J = lift2.ell_jacobian(Vec{p, 1.0 - p});
        return J[1][0] - J[1][1];
    }, "ell0'");
    b.strictly_proper_claimed = true;
    b.finite_at_0 = b.finite_at_1 = false;
    e.binary = b;
    e.multiclass = [base](std::size_t n) {
        MulticlassLoss L = one_vs_rest_lift(base, n, false);
        L.id = "binary_entropy";
        return L;
    };
    e.F = real_fn([](double z) { return logistic(0.5 * z); }, "sigmoid(z/2)");
    e.conj = real_fn([](double z) { return 2.0 * softplus(0.5 * z); }, "2 softplus(z/2)");
    e.surrogate = real_fn([](double z) { return 2.0 * softplus(-0.5 * z); }, "2 log(1+exp(-z/2))",
                          Monotonicity::decreasing);
    e.proper_n2 = e.proper_ngt2 = true;
    e.symmetric = true;
    attach(e);
    return e;
}

Entry make_square(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("square loss: tau must be > 0");
    Entry e;
    e.id = "square";
    e.params.tau = tau;
    BinaryLoss b;
    b.id = "square";
    b.ell1 = unit_fn([tau](double p) { return (1.0 - p) * (1.0 - p) / tau; }, "ell1", Monotonicity::decreasing);
    b.ell0 = unit_fn([tau](double p) { return p * p / tau; }, "ell0", Monotonicity::increasing);
    b.d_ell1 = unit_fn([tau](double p) { return -2.0 * (1.0 - p) / tau; }, "ell1'");
    b.d_ell0 = unit_fn([tau](double p) { return 2.0 * p / tau; }, "ell0'");
    b.strictly_proper_claimed = true;
    e.binary = b;
    e.multiclass = [tau](std::size_t n) {
        return separable_loss("square", n, ScalarFn([tau](double q) { return (1.0 - q) * (1.0 - q) / tau; }, kUnit),
                              ScalarFn([tau](double q) { return -2.0 * (1.0 - q) / tau; }, kUnit));
    };
    e.F = real_fn([tau](double z) { return std::clamp((1.0 + tau * z) / 2.0, 0.0, 1.0); }, "clipped linear");
    auto conj = [tau](double w) {
        if (w > 1.0 / tau) return w;
        if (w < -1.0 / tau) return 0.0;
        const double s = w + 1.0 / tau;
        return 0.25 * tau * s * s;
    };
    e.conj = real_fn(conj, "square phi*");
    e.surrogate = real_fn([conj](double z) { return conj(-z); }, "square surrogate", Monotonicity::decreasing);
    e.proper_n2 = true;
    e.proper_ngt2 = false;
    e.symmetric = true;
    e.regime_breaks = {-1.0 / tau, 1.0 / tau};
    attach(e);
    return e;
}

Entry make_matsushita(double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidArgument("matsushita loss: mu must be >= 0");
    Entry e;
    e.id = "matsushita";
    e.params.mu = mu;
    const double h = 0.5 * mu;
    auto s = [h](double q) { return h * std::sqrt((1.0 - q) / q); };
    auto ds = [mu](double q) { return -0.25 * mu / (q * std::sqrt(q * (1.0 - q))); };
    BinaryLoss b;
    b.id = "matsushita";
    b.ell1 = unit_fn(s, "ell1", Monotonicity::decreasing);
    b.ell0 = unit_fn([s](double p) { return s(1.0 - p); }, "ell0", Monotonicity::increasing);
    b.d_ell1 = unit_fn(ds, "ell1'");
    b.d_ell0 = unit_fn([ds](double p) { return -ds(1.0 - p); }, "ell0'");
    b.strictly_proper_claimed = mu > 0.0;
    b.finite_at_0 = b.finite_at_1 = mu == 0.0;
    e.binary = b;
    e.multiclass = [s, ds](std::size_t n) {
        return separable_loss("matsushita", n, ScalarFn(s, kUnit), ScalarFn(ds, kUnit));
    };
    e.F = real_fn([mu](double z) {
        if (mu == 0.0) return z > 0.0 ? 1.0 : (z < 0.0 ? 0.0 : 0.5);
        return 0.5 * (1.0 + z / std::hypot(z, mu));
    }, "matsushita link");
    e.conj = real_fn([mu](double w) { return 0.5 * (w + std::hypot(w, mu)); }, "matsushita phi*");
    e.surrogate = real_fn([mu](double z) { return 0.5 * (-z + std::hypot(z, mu)); }, "matsushita surrogate",
                          Monotonicity::decreasing);
    e.proper_n2 = true;
    e.proper_ngt2 = false;
    e.symmetric = true;
    attach(e);
    return e;
}

Entry make_alpha(double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("alpha loss: beta must be >= 0");
    if (beta < 1e-6) {
        // The beta -> 0 limit is the log loss.
        Entry e = make_log();
        e.id = "alpha";
        e.params.beta = beta;
        e.binary.id = "alpha";
        e.flags_numeric = true;
        return e;
    }
    Entry e;
    e.id = "alpha";
    e.params.beta = beta;
    auto s = [beta](double q) { return (1.0 - std::pow(q, beta)) / beta; };
    auto ds = [beta](double q) { return -std::pow(q, beta - 1.0); };
    BinaryLoss b;
    b.id = "alpha";
    b.ell1 = unit_fn(s, "ell1", Monotonicity::decreasing);
    b.ell0 = unit_fn([s](double p) { return s(1.0 - p); }, "ell0", Monotonicity::increasing);
    b.d_ell1 = unit_fn(ds, "ell1'");
    b.d_ell0 = unit_fn([ds](double p) { return -ds(1.0 - p); }, "ell0'");
    e.binary = b;
    e.multiclass = [s, ds](std::size_t n) {
        return separable_loss("alpha", n, ScalarFn(s, kUnit), ScalarFn(ds, kUnit));
    };
    e.symmetric = true;
    attach(e);
    // No closed-form link or conjugate: flags are certified numerically.
    ProperOptions o;
    o.check_strict = false;
    e.proper_n2 = check_proper(e.binary, o).proper;
    e.proper_ngt2 = check_proper(e.multiclass(3), o).proper;
    e.flags_numeric = true;
    return e;
}

}  // namespace

const std::vector<std::string>& ids() {
    static const std::vector<std::string> k{"log", "binary_entropy", "square", "matsushita", "alpha"};
    return k;
}

Entry get(const std::string& id, const Params& params) {
    if (id == "log") return make_log();
    if (id == "binary_entropy") return make_binary_entropy();
    if (id == "square") return make_square(params.tau);
    if (id == "matsushita") return make_matsushita(params.mu);
    if (id == "alpha") return make_alpha(params.beta);
    throw InvalidArgument("unknown catalog loss '" + id + "'");
}

std::vector<Entry> list(const Params& params) {
    std::vector<Entry> out;
    for (const auto& id : ids()) out.push_back(get(id, params));
    return out;
}

}  // namespace properpo::catalog
