#include "properpo/constructors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace properpo {

namespace {

constexpr Interval kUnit{0.0, 1.0};

Interval finite_bracket(const std::function<double(double)>& f) {
    Interval b{0.0, 1.0};
    if (!std::isfinite(f(0.0))) b.lo = 1e-300;
    if (!std::isfinite(f(1.0))) b.hi = std::nextafter(1.0, 0.0);
    return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// phi-PO
// ---------------------------------------------------------------------------

ScalarFn potential_link_inverse(const EligiblePotential& pot) {
    const ScalarFn H = pot.H;
    const double h0 = H(0.0), h1 = H(1.0);
    if (pot.H_inverse) {
        const ScalarFn inv = *pot.H_inverse;
        return ScalarFn(
            [inv, h0, h1](double z) {
                if (z <= h0) return 0.0;
                if (z >= h1) return 1.0;
                return std::clamp(inv(z), 0.0, 1.0);
            },
            {}, Monotonicity::increasing, "H^-1");
    }
    auto f = [H](double p) { return H(p); };
    const Interval b = finite_bracket(f);
    return ScalarFn([f, b](double z) { return invert_monotone_saturating(f, z, b, 1e-14); }, {},
                    Monotonicity::increasing, "H^-1 (bisection)");
}

EligibilityReport certify_eligible(const EligiblePotential& pot) {
    EligibilityReport rep;
    rep.numeric_inverse = !pot.H_inverse.has_value();

    // Strict midpoint convexity on an interior grid.
    constexpr int m = 40;
    for (int i = 0; i <= m && rep.ok; ++i) {
        for (int j = i + 1; j <= m; ++j) {
            const double u = double(i) / m, v = double(j) / m;
            const double fu = pot.phi(u), fv = pot.phi(v);
            if (!std::isfinite(fu) || !std::isfinite(fv)) continue;
            const double gap = 0.5 * (fu + fv) - pot.phi(0.5 * (u + v));
            if (!(gap > 1e-8 * (v - u) * (v - u))) {
                rep.ok = false;
                rep.failure = "strict convexity";
                rep.witness = u;
                rep.witness2 = v;
                return rep;
            }
        }
    }
    for (int k = 1; k < 100; ++k) {
        const double d = 0.005 * k;
        const double s = pot.H(0.5 + d) + pot.H(0.5 - d);
        if (s < -1e-12) {
            rep.ok = false;
            rep.failure = "H(1/2+d) + H(1/2-d) >= 0";
            rep.witness = d;
            return rep;
        }
    }
    const ScalarFn inv = potential_link_inverse(pot);
    for (int k = 1; k < 200; ++k) {
        const double p = k / 200.0;
        const double z = pot.H(p);
        const double err = std::abs(pot.H(inv(z)) - z) / std::max(1.0, std::abs(z));
        rep.inverse_error = std::max(rep.inverse_error, err);
    }
    if (rep.inverse_error > 1e-9) {
        rep.ok = false;
        rep.failure = "H o H^-1 = id";
    }
    if (rep.ok && pot.symmetric) {
        for (int k = 0; k <= 1000; ++k) {
            const double p = k / 1000.0;
            const double a = pot.phi(p), b = pot.phi(1.0 - p);
            if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
                rep.ok = false;
                rep.failure = "declared symmetric but phi(p) != phi(1-p)";
                rep.witness = p;
                break;
            }
        }
    }
    return rep;
}

BinaryLoss phi_po_build(const EligiblePotential& pot) {
    const EligibilityReport rep = certify_eligible(pot);
    if (!rep.ok) {
        std::ostringstream msg;
        msg << "phi_po_build: potential '" << pot.name << "' not eligible (" << rep.failure
            << ", witness " << rep.witness << ")";
        throw ContractViolation(msg.str());
    }
    const ScalarFn phi = pot.phi, H = pot.H;
    BinaryLoss b;
    b.id = "phi_po(" + pot.name + ")";
    b.ell1 = ScalarFn([phi, H](double p) { return -phi(p) - weighted(1.0 - p, H(p)); }, kUnit,
                      Monotonicity::decreasing, "ell1");
    b.ell0 = ScalarFn([phi, H](double p) { return -phi(p) + weighted(p, H(p)); }, kUnit,
                      Monotonicity::increasing, "ell0");
    std::function<double(double)> d2;
    if (pot.phi2) {
        d2 = [f = *pot.phi2](double p) { return f(p); };
    } else {
        d2 = [H](double p) {
            const double h = 1e-6;
            const double a = std::max(0.0, p - h), c = std::min(1.0, p + h);
            return (H(c) - H(a)) / (c - a);
        };
    }
    b.d_ell1 = ScalarFn([d2](double p) { return -weighted(1.0 - p, d2(p)); }, kUnit);
    b.d_ell0 = ScalarFn([d2](double p) { return weighted(p, d2(p)); }, kUnit);
    b.symmetric = pot.symmetric;
    b.strictly_proper_claimed = true;
    b.finite_at_0 = std::isfinite(b.ell0(0.0)) && std::isfinite(b.ell1(0.0));
    b.finite_at_1 = std::isfinite(b.ell0(1.0)) && std::isfinite(b.ell1(1.0));
    const ScalarFn inv = potential_link_inverse(pot);
    b.link_inverse = inv;
    b.conjugate = ScalarFn(
        [inv, phi](double z) {
            const double t = inv(z);
            return weighted(t, z) - phi(t);
        },
        {}, Monotonicity::increasing, "phi*");
    b.validate();
    return b;
}

double phi_po_bregman_deviation(const EligiblePotential& pot, const BinaryLoss& loss) {
    const double f0 = pot.phi(0.0), f1 = pot.phi(1.0);
    if (!std::isfinite(f0) || !std::isfinite(f1)) return std::nan("");
    double dev = 0.0;
    for (int k = 1; k < 1000; ++k) {
        const double p = k / 1000.0;
        const double fp = pot.phi(p), hp = pot.H(p);
        const double d1 = f1 - fp - (1.0 - p) * hp;  // D(1 || p)
        const double d0 = f0 - fp - (0.0 - p) * hp;  // D(0 || p)
        dev = std::max(dev, std::abs(loss.ell1(p) - (d1 - f1)));
        dev = std::max(dev, std::abs(loss.ell0(p) - (d0 - f0)));
    }
    return dev;
}

ScalarFn phi_po_symmetrize(const ScalarFn& phi, const ScalarFn& H) {
    return ScalarFn(
        [phi, H](double p) {
            const double q = 1.0 - p;
            return 0.5 * (-phi(p) - phi(q) - weighted(q, H(p) - H(q)));
        },
        kUnit, Monotonicity::decreasing, "sym ell1");
}

BinaryLoss phi_po_symmetric_loss(const EligiblePotential& pot) {
    const ScalarFn l1 = phi_po_symmetrize(pot.phi, pot.H);
    const ScalarFn phi = pot.phi, H = pot.H;
    BinaryLoss b;
    b.id = "phi_po_sym(" + pot.name + ")";
    b.ell1 = l1;
    b.ell0 = ScalarFn([l1](double p) { return l1(1.0 - p); }, kUnit, Monotonicity::increasing, "sym ell0");
    std::function<double(double)> d2;
    if (pot.phi2) {
        d2 = [f = *pot.phi2](double p) { return f(p); };
    } else {
        d2 = [H](double p) {
            const double h = 1e-6;
            const double a = std::max(0.0, p - h), c = std::min(1.0, p + h);
            return (H(c) - H(a)) / (c - a);
        };
    }
    // Second derivative of the symmetrized potential (phi(p) + phi(1-p)) / 2.
    auto s2 = [d2](double p) { return 0.5 * (d2(p) + d2(1.0 - p)); };
    b.d_ell1 = ScalarFn([s2](double p) { return -weighted(1.0 - p, s2(p)); }, kUnit);
    b.d_ell0 = ScalarFn([s2](double p) { return weighted(p, s2(p)); }, kUnit);
    b.symmetric = true;
    b.strictly_proper_claimed = true;
    b.finite_at_0 = std::isfinite(b.ell0(0.0)) && std::isfinite(b.ell1(0.0));
    b.finite_at_1 = b.finite_at_0;
    EligiblePotential sym;
    sym.name = pot.name + "_sym";
    sym.phi = ScalarFn([phi](double p) { return 0.5 * (phi(p) + phi(1.0 - p)); }, kUnit);
    sym.H = ScalarFn([H](double p) { return 0.5 * (H(p) - H(1.0 - p)); }, kUnit, Monotonicity::increasing);
    const ScalarFn inv = potential_link_inverse(sym);
    b.link_inverse = inv;
    b.conjugate = ScalarFn(
        [inv, f = sym.phi](double z) {
            const double t = inv(z);
            return weighted(t, z) - f(t);
        },
        {}, Monotonicity::increasing, "phi*");
    b.validate();
    return b;
}

ScalarFn phi_po_selection(const EligiblePotential& pot) {
    const ScalarFn phi = pot.phi, H = pot.H;
    std::function<double(double)> d2;
    if (pot.phi2) {
        d2 = [f = *pot.phi2](double p) { return f(p); };
    } else {
        // Non-differentiable phi shows up as mismatched one-sided slopes.
        const double h = 1e-6;
        for (int k = 1; k < 200; ++k) {
            const double p = k / 200.0;
            const double left = (phi(p) - phi(p - h)) / h;
            const double right = (phi(p + h) - phi(p)) / h;
            if (std::abs(left - right) > 1e-3 * std::max(1.0, std::abs(H(p)))) {
                std::ostringstream msg;
                msg << "phi_po_selection: potential '" << pot.name << "' is not differentiable near p = " << p;
                throw ContractViolation(msg.str());
            }
        }
        d2 = [H](double p) {
            const double hh = 1e-6;
            const double a = std::max(0.0, p - hh), c = std::min(1.0, p + hh);
            return (H(c) - H(a)) / (c - a);
        };
    }
    return ScalarFn(
        [phi, H, d2](double p) {
            return phi(p) + weighted(1.0 - p, H(p)) + weighted(p * (1.0 - p), d2(p));
        },
        kUnit, Monotonicity::none, "G");
}

// ---------------------------------------------------------------------------
// Composite constructor
// ---------------------------------------------------------------------------

BinaryLoss composite_build(const ScalarFn& ell, std::optional<ScalarFn> dell, const CompositeOptions& opts) {
    if (!(opts.anchor > 0.0 && opts.anchor < 1.0)) {
        throw InvalidArgument("composite_build: anchor must lie in (0, 1)");
    }
    double prev = ell(1e-3);
    for (int k = 2; k <= 999; ++k) {
        const double p = k / 1000.0;
        const double v = ell(p);
        if (!(v > prev)) {
            std::ostringstream msg;
            msg << "composite_build: input is not strictly increasing near p = " << p;
            throw ContractViolation(msg.str());
        }
        prev = v;
    }
    const double a = opts.anchor, K = opts.K, tol = opts.quad_tol;
    auto integrand = [ell](double t) { return ell(t) / (t * t); };
    auto ell1 = [=](double p) {
        if (p <= 0.0) return kInf;
        if (p >= 1.0 && !std::isfinite(ell(1.0))) {
            // Limit from inside along t_k = 1 - 10^-k. Steps that do not shrink
            // mean the loss is unbounded at 1.
            double J = (a < 0.99) ? quad(integrand, a, 0.99, tol) : -quad(integrand, 0.99, a, tol);
            double t = 0.99, prev = K - (J + ((1.0 - t) / t) * ell(t)), step = 0.0, prev_step = 0.0;
            for (int k = 3; k <= 6; ++k) {
                const double tn = 1.0 - std::pow(10.0, -k);
                try {
                    J += quad(integrand, t, tn, 1e-7);
                } catch (const QuadratureError&) {
                    break;
                }
                t = tn;
                const double v = K - (J + ((1.0 - t) / t) * ell(t));
                prev_step = step;
                step = v - prev;
                prev = v;
            }
            if (std::abs(step) <= 1e-6 * std::max(1.0, std::abs(prev))) return prev;
            if (prev_step != 0.0 && std::abs(step) < 0.5 * std::abs(prev_step)) {
                const double r = step / prev_step;
                return prev + step * r / (1.0 - r);
            }
            return step < 0.0 ? -kInf : kInf;
        }
        double I = 0.0;
        if (p < a) I = -quad(integrand, p, a, tol);
        if (p > a) I = quad(integrand, a, p, tol);
        return K - (I + weighted((1.0 - p) / p, ell(p)));
    };
    BinaryLoss b;
    std::ostringstream id;
    id << "composite(" << (ell.name().empty() ? "ell" : ell.name()) << ",K=" << K << ",a=" << a << ")";
    b.id = id.str();
    b.ell0 = ell;
    b.ell1 = ScalarFn(ell1, kUnit, Monotonicity::decreasing, "composite ell1");
    std::function<double(double)> d0;
    if (dell) {
        d0 = [f = *dell](double p) { return f(p); };
    } else {
        d0 = [ell](double p) {
            const double h = 1e-6;
            const double lo = std::max(0.0, p - h), hi = std::min(1.0, p + h);
            return (ell(hi) - ell(lo)) / (hi - lo);
        };
    }
    b.d_ell0 = ScalarFn(d0, kUnit);
    b.d_ell1 = ScalarFn([d0](double p) { return -weighted((1.0 - p) / p, d0(p)); }, kUnit);
    b.strictly_proper_claimed = true;
    b.finite_at_0 = false;
    b.finite_at_1 = std::isfinite(ell(1.0));
    return b;
}

DecomposeResult composite_decompose(const ScalarFn& psi, const ScalarFn& F) {
    DecomposeResult out;
    out.f_condition = check_F_condition(F);
    if (!out.f_condition.pass) return out;
    for (double z = -10.0; z < 10.0; z += 0.05) {
        if (!(psi(z + 0.05) > psi(z))) {
            throw ContractViolation("composite_decompose: psi is not strictly increasing");
        }
    }
    // F^{-1} on a wide bracket; probabilities outside F's range saturate.
    const Interval bracket{-50.0, 50.0};
    auto f = [F](double z) { return F(z); };
    // Where F only reaches 0 or 1 asymptotically, the endpoint loss is the limit of psi.
    const double f_lo = F(bracket.lo), f_hi = F(bracket.hi);
    auto psi_limit = [psi](double far, double near) {
        const double u = psi(far), v = psi(near);
        return std::abs(u - v) > 1e-6 * std::max(1.0, std::abs(u)) ? std::copysign(kInf, u - v) : u;
    };
    const double top = F(0.5 * bracket.hi) < f_hi ? psi_limit(bracket.hi, 0.5 * bracket.hi) : std::numeric_limits<double>::quiet_NaN();
    const double bottom = F(0.5 * bracket.lo) > f_lo ? psi_limit(bracket.lo, 0.5 * bracket.lo) : std::numeric_limits<double>::quiet_NaN();
    auto ell0 = [psi, f, bracket, f_lo, f_hi, top, bottom](double p) {
        if (p >= f_hi && !std::isnan(top)) return top;
        if (p <= f_lo && !std::isnan(bottom)) return bottom;
        return psi(invert_monotone_saturating(f, p, bracket, 1e-15));
    };
    ScalarFn l0(ell0, kUnit, Monotonicity::increasing, "psi o F^-1");
    out.loss = composite_build(l0);
    out.loss->link_inverse = F;
    out.reconstruction_error = 0.0;
    for (double z : linspace(-5.0, 5.0, 201)) {
        const double e = std::abs(l0(F(z)) - psi(z)) / std::max(1.0, std::abs(psi(z)));
        out.reconstruction_error = std::max(out.reconstruction_error, e);
    }
    out.accepted = true;
    return out;
}

ScalarFn forced_link(const BinaryLoss& loss, const ScalarFn& psi) {
    auto l0 = [loss](double p) { return loss.ell0(p); };
    const Interval b = finite_bracket(l0);
    return ScalarFn([l0, b, psi](double z) { return invert_monotone_saturating(l0, psi(z), b, 1e-15); }, {},
                    Monotonicity::increasing, "forced link");
}

// ---------------------------------------------------------------------------
// Named building blocks
// ---------------------------------------------------------------------------

EligiblePotential named_potential(const std::string& name) {
    EligiblePotential P;
    P.name = name;
    if (name == "neg_entropy") {
        P.phi = ScalarFn([](double p) { return weighted(p, std::log(p)) + weighted(1.0 - p, std::log1p(-p)); },
                         kUnit);
        P.H = ScalarFn([](double p) { return logit(p); }, kUnit, Monotonicity::increasing);
        P.H_inverse = ScalarFn(logistic);
        P.phi2 = ScalarFn([](double p) { return 1.0 / (p * (1.0 - p)); }, kUnit);
        P.symmetric = true;
    } else if (name == "square") {
        P.phi = ScalarFn([](double p) { return p * p - p; }, kUnit);
        P.H = ScalarFn([](double p) { return 2.0 * p - 1.0; }, kUnit, Monotonicity::increasing);
        P.H_inverse = ScalarFn([](double z) { return 0.5 * (1.0 + z); });
        P.phi2 = ScalarFn([](double) { return 2.0; }, kUnit);
        P.symmetric = true;
    } else if (name == "hellinger") {
        P.phi = ScalarFn([](double p) { return -2.0 * std::sqrt(p * (1.0 - p)); }, kUnit);
        P.H = ScalarFn([](double p) { return (2.0 * p - 1.0) / std::sqrt(p * (1.0 - p)); }, kUnit,
                       Monotonicity::increasing);
        P.H_inverse = ScalarFn([](double z) { return 0.5 * (1.0 + z / std::sqrt(z * z + 4.0)); });
        P.phi2 = ScalarFn([](double p) { return 0.5 * std::pow(p * (1.0 - p), -1.5); }, kUnit);
        P.symmetric = true;
    } else if (name == "quartic") {
        P.phi = ScalarFn([](double p) {
            const double x = p - 0.5;
            return x * x * x * x + x * x;
        }, kUnit);
        P.H = ScalarFn([](double p) {
            const double x = p - 0.5;
            return 4.0 * x * x * x + 2.0 * x;
        }, kUnit, Monotonicity::increasing);
        // Real root of 4x^3 + 2x = z (Cardano).
        P.H_inverse = ScalarFn([](double z) {
            const double r = std::sqrt(z * z / 64.0 + 1.0 / 216.0);
            return 0.5 + std::cbrt(z / 8.0 + r) + std::cbrt(z / 8.0 - r);
        });
        P.phi2 = ScalarFn([](double p) {
            const double x = p - 0.5;
            return 12.0 * x * x + 2.0;
        }, kUnit);
        P.symmetric = true;
    } else if (name == "exp") {
        P.phi = ScalarFn([](double p) { return std::exp(p); }, kUnit);
        P.H = ScalarFn([](double p) { return std::exp(p); }, kUnit, Monotonicity::increasing);
        P.H_inverse = ScalarFn([](double z) { return std::log(z); }, {0.0, kInf});
        P.phi2 = ScalarFn([](double p) { return std::exp(p); }, kUnit);
    } else if (name == "entropy_plus_square") {
        P.phi = ScalarFn([](double p) {
            return weighted(p, std::log(p)) + weighted(1.0 - p, std::log1p(-p)) + p * p;
        }, kUnit);
        P.H = ScalarFn([](double p) { return logit(p) + 2.0 * p; }, kUnit, Monotonicity::increasing);
        P.phi2 = ScalarFn([](double p) { return 1.0 / (p * (1.0 - p)) + 2.0; }, kUnit);
    } else {
        throw InvalidArgument("unknown potential '" + name + "'");
    }
    return P;
}

const std::vector<std::string>& potential_names() {
    static const std::vector<std::string> k{"neg_entropy", "square", "hellinger", "quartic", "exp",
                                            "entropy_plus_square"};
    return k;
}

ScalarFn named_psi(const std::string& name) {
    if (name == "exp") return ScalarFn([](double z) { return std::exp(z); }, {}, Monotonicity::increasing, name);
    if (name == "softplus") return ScalarFn(softplus, {}, Monotonicity::increasing, name);
    if (name == "sin_perturbed")
        return ScalarFn([](double z) { return z + 0.4 * std::sin(z); }, {}, Monotonicity::increasing, name);
    if (name == "identity") return ScalarFn([](double z) { return z; }, {}, Monotonicity::increasing, name);
    if (name == "cubic")
        return ScalarFn([](double z) { return z + z * z * z / 3.0; }, {}, Monotonicity::increasing, name);
    throw InvalidArgument("unknown psi '" + name + "'");
}

ScalarFn named_psi_derivative(const std::string& name) {
    if (name == "exp") return ScalarFn([](double z) { return std::exp(z); });
    if (name == "softplus") return ScalarFn(logistic);
    if (name == "sin_perturbed") return ScalarFn([](double z) { return 1.0 + 0.4 * std::cos(z); });
    if (name == "identity") return ScalarFn([](double) { return 1.0; });
    if (name == "cubic") return ScalarFn([](double z) { return 1.0 + z * z; });
    throw InvalidArgument("unknown psi '" + name + "'");
}

const std::vector<std::string>& psi_names() {
    static const std::vector<std::string> k{"exp", "softplus", "sin_perturbed", "identity", "cubic"};
    return k;
}

ScalarFn named_link(const std::string& name) {
    if (name == "sigmoid") return ScalarFn(logistic, {}, Monotonicity::increasing, name);
    if (name == "sigmoid_half")
        return ScalarFn([](double z) { return logistic(0.5 * z); }, {}, Monotonicity::increasing, name);
    if (name == "gumbel")
        return ScalarFn([](double z) { return -std::expm1(-std::exp(z)); }, {}, Monotonicity::increasing, name);
    if (name == "clipped_linear")
        return ScalarFn([](double z) { return std::clamp(0.5 * (1.0 + z), 0.0, 1.0); }, {},
                        Monotonicity::increasing, name);
    if (name == "scaled_sigmoid")
        return ScalarFn([](double z) { return 0.9 * logistic(z); }, {}, Monotonicity::increasing, name);
    throw InvalidArgument("unknown link '" + name + "'");
}

const std::vector<std::string>& link_names() {
    static const std::vector<std::string> k{"sigmoid", "sigmoid_half", "gumbel", "clipped_linear",
                                            "scaled_sigmoid"};
    return k;
}

}  // namespace properpo
