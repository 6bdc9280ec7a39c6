#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "properpo/core_math.hpp"

namespace properpo {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

// Product with the convention 0 * (+-inf) = 0, used wherever a zero weight
// meets an unbounded partial loss at the simplex boundary.
inline double weighted(double w, double v) { return w == 0.0 ? 0.0 : w * v; }

/// Binary loss given by its partial losses. p is the probability of the
/// positive class; ell1 is the loss paid when the positive class occurs.
///   L(p, q) = p * ell1(q) + (1 - p) * ell0(q)
struct BinaryLoss {
    std::string id;
    ScalarFn ell0;
    ScalarFn ell1;
    std::optional<ScalarFn> d_ell0;
    std::optional<ScalarFn> d_ell1;
    bool symmetric = false;
    bool strictly_proper_claimed = false;
    bool finite_at_0 = true;  ///< both partial losses finite at p = 0
    bool finite_at_1 = true;  ///< both partial losses finite at p = 1
    /// Closed forms, when known: inverse link H^{-1} and conjugate phi* of the Bayes potential.
    std::optional<ScalarFn> link_inverse;
    std::optional<ScalarFn> conjugate;

    /// Checks the declared symmetry on a 1e-3 grid (tolerance 1e-9, relative
    /// for large values). Throws ContractViolation on mismatch.
    void validate() const;

    [[nodiscard]] double risk(double p, double q) const;
    [[nodiscard]] double bayes(double p) const { return risk(p, p); }
    /// Canonical link value H(p) = ell0(p) - ell1(p).
    [[nodiscard]] double H(double p) const;
    [[nodiscard]] double dell0(double p) const;
    [[nodiscard]] double dell1(double p) const;
};

/// Multiclass loss l : simplex -> R^n with selection G (default G = -l).
struct MulticlassLoss {
    using VecFn = std::function<Vec(std::span<const double>)>;
    using MatFn = std::function<Mat(std::span<const double>)>;

    std::string id;
    std::size_t n = 0;
    VecFn ell;
    VecFn G;
    /// Jacobian J[i][j] = d ell_i / d q_j. Finite differences are used if absent.
    MatFn ell_jacobian;
    /// dG_i/dq_j. Finite differences of G are used if absent.
    MatFn G_jacobian;
    bool separable = false;

    [[nodiscard]] Vec loss(std::span<const double> q) const { return ell(q); }
    [[nodiscard]] Vec selection(std::span<const double> q) const;
    /// dG_i/dq_j.
    [[nodiscard]] Mat selection_jacobian(std::span<const double> q) const;
};

/// Builds a multiclass loss whose selection is G = -l.
MulticlassLoss selection_from_loss(std::string id, std::size_t n, MulticlassLoss::VecFn ell,
                                   MulticlassLoss::MatFn jacobian = {}, bool separable = false);

/// Binary loss embedded at n = 2, coordinate 0 being the positive class:
/// l(q) = (ell1(q0), ell0(q0)).
MulticlassLoss as_multiclass(const BinaryLoss& loss);

/// Separable loss l_i(q) = s(q_i) with optional derivative ds.
MulticlassLoss separable_loss(std::string id, std::size_t n, ScalarFn s,
                              std::optional<ScalarFn> ds = std::nullopt);

/// Scalar convex potential on an interval (binary case: domain [0, 1]).
struct ConvexPotential {
    std::string name;
    ScalarFn phi;
    ScalarFn H;  ///< subgradient selection (right derivative at kinks)
    std::optional<ScalarFn> H_inverse;
    std::optional<ScalarFn> phi2;
    Interval domain{0.0, 1.0};
    bool symmetric = false;
};

/// Convex potential on the simplex with a gradient selection G.
struct VectorPotential {
    std::string name;
    std::function<double(std::span<const double>)> phi;
    std::function<Vec(std::span<const double>)> G;
    /// dG_i/dq_j; used by Newton polishing. May be empty.
    std::function<Mat(std::span<const double>)> G_jacobian;
};

VectorPotential negative_entropy();
VectorPotential itakura_saito();
VectorPotential squared_euclidean();
/// phi(p) = -L(p, p) with G = selection of the loss.
VectorPotential potential_from_loss(const MulticlassLoss& loss);

// ---------------------------------------------------------------------------
// Risks and potentials
// ---------------------------------------------------------------------------

/// p^T l(q) with the +inf convention: terms with p_i = 0 are skipped.
double pointwise_risk(const MulticlassLoss& loss, const ProbVector& p, const ProbVector& q);
double bayes_risk(const MulticlassLoss& loss, const ProbVector& p);

struct ConvexityReport {
    bool ok = true;
    /// Witnessing triple (u, v, midpoint value excess) when ok is false.
    double u = 0.0, v = 0.0, excess = 0.0;
};

/// phi(p) = -L(p, p), H = ell0 - ell1. phi2 is filled from the partial-loss
/// derivatives when both are available.
ConvexPotential potential_from_loss(const BinaryLoss& loss);

/// Midpoint convexity of phi on sampled pairs of an interior grid.
ConvexityReport certify_convexity(const ConvexPotential& pot, std::size_t samples = 200,
                                  double slack = 1e-10);

struct SubgradientReport {
    bool ok = true;
    double t = 0.0, p = 0.0, gap = 0.0;  ///< worst pair and phi(t) - phi(p) - (t - p) H(p)
};
SubgradientReport certify_subgradient(const ConvexPotential& pot, std::size_t samples = 200);

/// Canonical link H = ell0 - ell1. Throws ContractViolation if H is not
/// strictly increasing on an interior grid.
ScalarFn canonical_link(const BinaryLoss& loss);

/// H^{-1} : R -> [0, 1]. Closed form if the loss carries one, otherwise
/// bisection on H, saturating at the ends of [0, 1].
ScalarFn link_inverse(const BinaryLoss& loss);

struct ConjugateValue {
    double value = 0.0;
    double argmax = 0.0;
    bool at_boundary = false;
};

/// phi*(z) = sup_{t in domain} t z - phi(t). Uses inversion of H when H is
/// available and monotone, otherwise a refined grid search.
ConjugateValue conjugate(const ConvexPotential& pot, double z);

/// Grid search plus golden-section polish, independent of H.
ConjugateValue conjugate_numeric(const ConvexPotential& pot, double z);

/// phi* of the loss's Bayes potential as a function of z (closed form if present).
ScalarFn conjugate_fn(const BinaryLoss& loss);

double bregman(const ConvexPotential& pot, double u, double v);
double bregman(const VectorPotential& pot, std::span<const double> u, std::span<const double> v);

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

struct ProperOptions {
    std::size_t resolution = 20;
    double tol = 1e-9;
    double strict_delta = 1e-8;
    bool check_strict = true;
    /// Only targets with every coordinate > 0 (used by the separability test).
    bool full_support_targets = false;
};

struct ProperCertificate {
    std::string loss_id;
    std::size_t n = 0;
    std::size_t resolution = 0;
    double tol = 0.0;
    bool proper = true;
    bool strict = true;  ///< meaningful only when the strict check ran
    bool strict_checked = false;
    /// Pair with the smallest regret L(p,q) - L(p,p).
    Vec worst_p, worst_q;
    double margin = kInf;
    /// First interior pair (p != q) failing the strict margin, if any.
    Vec strict_p, strict_q;
    double strict_gap = kInf;

    [[nodiscard]] bool pass() const { return proper && (!strict_checked || strict); }
};

ProperCertificate check_proper(const MulticlassLoss& loss, const ProperOptions& opts = {});
ProperCertificate check_proper(const BinaryLoss& loss, const ProperOptions& opts = {});

struct FConditionReport {
    bool pass = true;
    bool debreu = true;  ///< F(z) + F(-z) = 1 on the whole sample
    double worst_z = 0.0;
    double worst_sum = 0.0;
    double f_at_zero = 0.0;
};

/// F(z) + F(-z) <= 1 (within 1e-12) on the sample; zero is always included.
FConditionReport check_F_condition(const ScalarFn& F, std::span<const double> sample);
FConditionReport check_F_condition(const ScalarFn& F);

/// Default symmetric sample on [-30, 30].
Vec default_link_sample();

/// l_i(p) = ell1(p_i) + sum_{j != i} ell0(p_j). Throws ContractViolation if the
/// input fails a binary properness check.
MulticlassLoss one_vs_rest_lift(const BinaryLoss& loss, std::size_t n, bool certify_input = true);

struct MarginTransformed {
    BinaryLoss loss;          ///< (a ell0, a ell1 + c)
    ScalarFn link_inverse;    ///< H~^{-1}(z) = H^{-1}((z + c) / a)
    ScalarFn conjugate;       ///< phi~*(z) = a phi*((z + c) / a)
    ScalarFn choice_link;     ///< F((z - c) / a), the shifted choice model
    bool klst_compliant = false;
    double a = 1.0, c = 0.0;
};

MarginTransformed margin_transform(const BinaryLoss& loss, double a, double c);

struct SeparabilityReport {
    bool pass = false;           ///< properness on full-support targets
    bool fits_log = false;
    double K1 = 0.0, K2 = 0.0;
    double fit_residual = kInf;
    ProperCertificate certificate;
};

/// Properness of l_i(q) = s(q_i) restricted to full-support targets, together
/// with a two-point fit of s against -K1 log z + K2.
SeparabilityReport check_separability_implies_log(const ScalarFn& s, std::size_t n,
                                                  std::size_t resolution = 20);

/// Monotonicity of partial losses: ell0 nondecreasing, ell1 nonincreasing.
bool partial_losses_monotone(const BinaryLoss& loss, std::size_t grid = 999);

}  // namespace properpo
