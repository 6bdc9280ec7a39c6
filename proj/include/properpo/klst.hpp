#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "properpo/proper_loss.hpp"

namespace properpo {

/// Finite table of choice probabilities P[x][y][y'] = p(y > y' | x).
struct ChoiceTable {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<Mat> probs;

    [[nodiscard]] std::size_t m() const { return probs.size(); }
    [[nodiscard]] std::size_t n() const { return probs.empty() ? 0 : probs.front().size(); }
    /// Entries in [0, 1], square slices, pair sums <= 1 + 1e-12. Throws InvalidArgument.
    void validate() const;
};

/// Choice probabilities over binary lotteries (y1 y2)_alpha, indexed y1 * n + y2.
/// The base space (alpha unset) reuses the table itself with one vertex per action.
struct LotterySpace {
    std::optional<double> alpha;
    std::size_t base_n = 0;
    std::size_t N = 0;
    double tol = 1e-9;
    std::vector<Mat> probs;

    [[nodiscard]] std::size_t m() const { return probs.size(); }
    [[nodiscard]] bool edge(std::size_t x, std::size_t a, std::size_t b) const {
        return std::abs(probs[x][a][b] + probs[x][b][a] - 1.0) <= tol;
    }
    [[nodiscard]] bool prefers(std::size_t x, std::size_t a, std::size_t b) const {
        return probs[x][a][b] >= 0.5 - tol;
    }
    [[nodiscard]] std::string label(std::size_t L) const;
};

/// Bilinear lottery expansion; alpha must lie strictly inside (0, 1).
LotterySpace expand(const ChoiceTable& table, double alpha, double tol = 1e-9);
LotterySpace base_space(const ChoiceTable& table, double tol = 1e-9);

struct AxiomVerdict {
    std::string axiom;
    bool pass = true;
    std::optional<double> alpha;
    std::size_t state = 0;
    std::vector<std::size_t> witness;  ///< lottery indices, smallest violating tuple
    Vec values;                        ///< probabilities that exhibit the violation
    std::string detail;
    std::size_t checked = 0;           ///< number of configurations examined
    bool sampled = false;
};

AxiomVerdict check_bearability(const LotterySpace& space);
AxiomVerdict check_wedge_axiom(const LotterySpace& space);
AxiomVerdict check_path_axiom(const LotterySpace& space);

struct MonotonicityOptions {
    /// Exhaustive when N <= this bound, sampled otherwise.
    std::size_t exhaustive_limit = 12;
    std::size_t samples = 1'000'000;
    std::uint64_t seed = 20240917;
};

AxiomVerdict check_monotonicity(const LotterySpace& space, const MonotonicityOptions& opts = {});

struct KlstCertificate {
    Vec lcs_alphas;
    double alpha_mono = 0.5;
    /// Per sampled alpha: bearability, wedge, path.
    std::vector<std::vector<AxiomVerdict>> lcs;
    AxiomVerdict monotonicity;
    bool pass = true;
};

Vec default_lcs_alphas();

KlstCertificate verify_klst(const ChoiceTable& table, const Vec& lcs_alphas = default_lcs_alphas(),
                            double alpha_mono = 0.5, double tol = 1e-9,
                            const MonotonicityOptions& mono = {});

/// Fechnerian representation p(y > y' | x) = F(u(x, y) - u(x, y')).
struct Representation {
    Mat u;  ///< centered per state
    Vec knots_z, knots_p;
    double residual = 0.0;
    std::size_t order_violations = 0;
    bool f_condition_at_knots = true;

    /// Piecewise-linear interpolant, constant beyond the outer knots.
    [[nodiscard]] double F(double z) const;
};

/// Reference-link least squares, hinge repair of order violations, then the
/// monotone interpolant. Throws ContractViolation if order violations remain.
Representation fit_representation(const ChoiceTable& table, const ScalarFn& reference_link,
                                  double tol = 1e-9);
Representation fit_representation(const ChoiceTable& table);

using AbstentionFn = std::function<double(std::size_t x, std::size_t y, std::size_t y2)>;

/// P[x][y][y'] = (1 - a(x, y, y')) F(u(x, y) - u(x, y')); diagonals F(0).
/// Throws ContractViolation if F fails the F-condition.
ChoiceTable generate_from_model(const ScalarFn& F, const Mat& u, const AbstentionFn& abstention = {});

}  // namespace properpo
