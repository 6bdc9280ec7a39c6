#pragma once

#include <optional>
#include <string>
#include <vector>

#include "properpo/constructors.hpp"
#include "properpo/proper_loss.hpp"

namespace properpo {

enum class Recipe { pmpo, pppo, phi_po };
enum class LengthMode { none, kl_geometric, is_harmonic };

std::string to_string(Recipe r);
std::string to_string(LengthMode m);
Recipe recipe_from_string(const std::string& s);
LengthMode length_mode_from_string(const std::string& s);

/// One generalized preference-optimization recipe. Each preference triple
/// contributes a * psi((c - d) / a), where
///   d = G_w(pi) - G_w(ref) - G_l(pi) + G_l(ref)
/// and psi is increasing (for PPPO and phi-PO, psi = phi* of the first loss).
struct PipelineSpec {
    std::string name;
    Recipe recipe = Recipe::pppo;
    MulticlassLoss lb;
    std::optional<BinaryLoss> la;
    ScalarFn psi;
    ScalarFn dpsi;
    /// Choice link used for reporting: H^{-1} of the first loss, or user-supplied.
    std::optional<ScalarFn> F;
    double a = 1.0;
    double c = 0.0;
    LengthMode length_mode = LengthMode::none;
    /// Token count per action; empty means one token each.
    std::vector<double> lengths;
};

PipelineSpec make_pppo(const BinaryLoss& la, const MulticlassLoss& lb, double a = 1.0, double c = 0.0);
PipelineSpec make_pmpo(const ScalarFn& psi, const ScalarFn& dpsi, const MulticlassLoss& lb,
                       std::optional<ScalarFn> F = std::nullopt);
/// Both losses come from one eligible potential: the symmetrized phi-PO loss
/// and its one-vs-rest lift at dimension n.
PipelineSpec make_phi_po(const EligiblePotential& pot, std::size_t n);
/// Log loss for both roles: the DPO instance.
PipelineSpec make_dpo(std::size_t n);

struct SpecCheck {
    bool ok = true;
    double conjugate_error = 0.0;
    std::string detail;
};
/// PPPO / phi-PO: psi agrees with a numeric conjugate within 1e-7 on [-5, 5].
/// PMPO: psi strictly increasing on [-10, 10].
SpecCheck validate_spec(const PipelineSpec& spec);

// ---------------------------------------------------------------------------
// Step 1
// ---------------------------------------------------------------------------

struct Step1Options {
    double kkt_tol = 1e-6;
    std::size_t max_iter = 100000;
    double step = 0.1;
    bool newton_polish = true;
};

struct Step1Result {
    ProbVector pi = ProbVector::uniform(2);
    double kkt_residual = kInf;
    std::size_t iterations = 0;
    bool interior = true;
};

/// argmax_pi  r . pi - D_phi(pi || ref) over the simplex.
Step1Result solve_step1(const Vec& r, const ProbVector& ref, const VectorPotential& phi,
                        const Step1Options& opts = {});

struct RewardDiffs {
    Mat M;  ///< M[i][j] = G_i(pi) - G_i(ref) - G_j(pi) + G_j(ref)
    bool boundary = false;
};

RewardDiffs recover_reward_diffs(const ProbVector& pi, const ProbVector& ref,
                                 const std::function<Vec(std::span<const double>)>& G);

// ---------------------------------------------------------------------------
// Steps 2 and 3
// ---------------------------------------------------------------------------

struct Preference {
    std::size_t x = 0, w = 0, l = 0;
    double weight = 1.0;
};

struct ChoiceProb {
    double prob = 0.5;
    bool saturated = false;
};

/// F((d - c) / a) for the pair (i, j) in one state.
ChoiceProb choice_prob(const PipelineSpec& spec, std::span<const double> pi, std::span<const double> ref,
                       std::size_t i, std::size_t j);

/// Applies the spec's length normalization to one row of action probabilities.
Vec normalized_row(const PipelineSpec& spec, std::span<const double> row);

/// Weighted mean of per-triple terms (pairwise summation). pi and ref hold one
/// row per state.
double objective(const PipelineSpec& spec, const Mat& pi, const Mat& ref, const std::vector<Preference>& data);

/// Per-triple terms in data order. An infinite term throws DomainError; NaN terms
/// are returned as is.
Vec objective_terms(const PipelineSpec& spec, const Mat& pi, const Mat& ref, const std::vector<Preference>& data);

/// d objective / d pi[x][j].
Mat objective_grad_pi(const PipelineSpec& spec, const Mat& pi, const Mat& ref,
                      const std::vector<Preference>& data);

// ---------------------------------------------------------------------------
// Length normalization
// ---------------------------------------------------------------------------

struct LengthResult {
    double value = 0.0;
    double alpha = 0.0;  ///< value = prod(factors) * exp(alpha * n)
};

LengthResult length_normalize(std::span<const double> factors, LengthMode mode);

/// phi'^{-1}(mean phi'(pi_k)) for a scalar potential with derivative H and its inverse.
double generalized_mean(std::span<const double> factors, const ScalarFn& H, const ScalarFn& H_inverse);

/// Scalar potentials on (0, inf) whose generalized means are the geometric and harmonic means.
ConvexPotential scalar_negative_entropy();
ConvexPotential scalar_itakura_saito();

/// Brute-force minimizer of sum_k D_phi(t || pi_k) over [min, max] of the factors.
double oracle_length_solution(std::span<const double> factors, const ConvexPotential& phi);

}  // namespace properpo
