#pragma once

#include <optional>
#include <string>
#include <vector>

#include "properpo/proper_loss.hpp"

namespace properpo {

/// Convex potential on [0, 1] eligible for the phi-PO construction.
struct EligiblePotential {
    std::string name;
    ScalarFn phi;
    ScalarFn H;  ///< derivative of phi (closed form)
    std::optional<ScalarFn> H_inverse;
    std::optional<ScalarFn> phi2;
    bool symmetric = false;
};

struct EligibilityReport {
    bool ok = true;
    std::string failure;      ///< which condition failed
    double witness = 0.0;     ///< delta, or the first point of a convexity triple
    double witness2 = 0.0;
    bool numeric_inverse = false;  ///< no closed-form H^{-1}; bisection is used
    double inverse_error = 0.0;    ///< max |H(H^{-1}(z)) - z| on the sample
};

/// Strict convexity, H(1/2 + d) + H(1/2 - d) >= 0 and H o H^{-1} = id.
EligibilityReport certify_eligible(const EligiblePotential& pot);

/// H^{-1} clipped to [0, 1]: closed form when present, bisection otherwise.
ScalarFn potential_link_inverse(const EligiblePotential& pot);

/// ell1 = -phi - (1 - p) H, ell0 = -phi + p H. Throws ContractViolation when
/// the potential is not eligible.
BinaryLoss phi_po_build(const EligiblePotential& pot);

/// Max deviation of ell_v(p) from D_phi(v || p) - phi(v), v in {0, 1}, on an
/// interior grid. Returns NaN when phi is not finite at both ends.
double phi_po_bregman_deviation(const EligiblePotential& pot, const BinaryLoss& loss);

/// Symmetrized positive-class partial loss
///   (-phi(p) - phi(1-p) - (1-p)(H(p) - H(1-p))) / 2.
ScalarFn phi_po_symmetrize(const ScalarFn& phi, const ScalarFn& H);

/// Loss built from the symmetrized partial loss, ell0(p) = ell1(1 - p).
BinaryLoss phi_po_symmetric_loss(const EligiblePotential& pot);

/// G(p) = phi(p) + (1 - p) phi'(p) + p (1 - p) phi''(p). Uses finite
/// differences of H when phi'' is absent; rejects non-differentiable phi.
ScalarFn phi_po_selection(const EligiblePotential& pot);

struct CompositeOptions {
    double K = 0.0;
    double anchor = 0.5;
    double quad_tol = 1e-11;
};

/// ell0 = ell, ell1 = K - (int_a^p ell(t)/t^2 dt + ((1 - p)/p) ell(p)).
BinaryLoss composite_build(const ScalarFn& ell, std::optional<ScalarFn> dell = std::nullopt,
                           const CompositeOptions& opts = {});

struct DecomposeResult {
    bool accepted = false;
    FConditionReport f_condition;
    std::optional<BinaryLoss> loss;
    double reconstruction_error = kInf;  ///< max |ell0(F(z)) - psi(z)| on [-5, 5]
};

/// Loss whose composite link is F and whose surrogate is psi: ell0 = psi o F^{-1}.
DecomposeResult composite_decompose(const ScalarFn& psi, const ScalarFn& F);

/// The link forced by a fixed loss and surrogate: F = ell0^{-1} o psi.
ScalarFn forced_link(const BinaryLoss& loss, const ScalarFn& psi);

// Named building blocks used by the CLI and the test suites.
EligiblePotential named_potential(const std::string& name);
const std::vector<std::string>& potential_names();
ScalarFn named_psi(const std::string& name);
ScalarFn named_psi_derivative(const std::string& name);
const std::vector<std::string>& psi_names();
ScalarFn named_link(const std::string& name);
const std::vector<std::string>& link_names();

}  // namespace properpo
