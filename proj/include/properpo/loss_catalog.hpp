#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "properpo/proper_loss.hpp"

namespace properpo::catalog {

struct Params {
    double tau = 1.0;   ///< square loss scale, > 0
    double mu = 1.0;    ///< Matsushita scale, >= 0
    double beta = 0.0;  ///< alpha-loss exponent, >= 0
};

struct Entry {
    std::string id;
    Params params;
    BinaryLoss binary;
    /// Multiclass form at dimension n.
    std::function<MulticlassLoss(std::size_t)> multiclass;
    /// Closed-form link F = H^{-1}; empty for numeric entries.
    std::optional<ScalarFn> F;
    /// Closed-form phi* and the surrogate psi(z) = phi*(-z).
    std::optional<ScalarFn> conj;
    std::optional<ScalarFn> surrogate;
    bool proper_n2 = false;
    bool proper_ngt2 = false;
    bool flags_numeric = false;  ///< flags came from check_proper rather than the table
    bool symmetric = false;
    /// Points where the surrogate changes regime (square loss only).
    std::vector<double> regime_breaks;
};

/// Throws InvalidArgument for unknown ids or out-of-range parameters.
Entry get(const std::string& id, const Params& params = {});

/// The five table rows in fixed order.
std::vector<Entry> list(const Params& params = {});

const std::vector<std::string>& ids();

}  // namespace properpo::catalog
