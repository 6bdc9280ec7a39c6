#pragma once

// Numeric primitives shared by every other module: simplex points, one-variable
// functions with declared domains, adaptive quadrature, monotone inversion and
// central finite differences.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace properpo {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A precondition or argument range was violated by the caller.
struct InvalidArgument : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct QuadratureError : Error {
    using Error::Error;
};

/// Target value outside the range of a monotone function on its bracket.
struct OutOfRange : Error {
    using Error::Error;
};

/// A declared property (monotonicity, convexity, ...) was observed not to hold.
struct ContractViolation : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    using Error::Error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Tolerance for closed-form functions.
inline constexpr double kClosedFormTol = 1e-10;
/// Tolerance for quadrature-backed functions.
inline constexpr double kQuadratureTol = 1e-7;

// ---------------------------------------------------------------------------
// ProbVector
// ---------------------------------------------------------------------------

/// A point of the probability simplex, stored in full (no implicit last coordinate).
class ProbVector {
public:
    /// Validates: n >= 2, entries >= 0, |sum - 1| <= 1e-12.
    explicit ProbVector(std::vector<double> entries);

    /// Rescales nonnegative weights to sum to one.
    static ProbVector normalized(std::vector<double> weights);
    static ProbVector uniform(std::size_t n);
    /// Vertex e_i of the n-simplex.
    static ProbVector vertex(std::size_t n, std::size_t i);

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return entries_[i]; }
    [[nodiscard]] std::span<const double> values() const noexcept { return entries_; }
    [[nodiscard]] const std::vector<double>& vec() const noexcept { return entries_; }
    /// True when every entry is strictly positive.
    [[nodiscard]] bool interior() const noexcept;
    [[nodiscard]] std::size_t support_size() const noexcept;

    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    friend bool operator==(const ProbVector&, const ProbVector&) = default;

private:
    std::vector<double> entries_;
};

// ---------------------------------------------------------------------------
// ScalarFn
// ---------------------------------------------------------------------------

struct Interval {
    double lo = -kInf;
    double hi = kInf;

    [[nodiscard]] bool contains(double x) const noexcept { return x >= lo && x <= hi; }
    [[nodiscard]] double width() const noexcept { return hi - lo; }
    [[nodiscard]] bool bounded() const noexcept;
};

enum class Monotonicity { none, increasing, decreasing };

/// A real function of one real variable with a declared domain. Evaluation
/// outside the domain throws DomainError; inside it never does.
class ScalarFn {
public:
    using Rule = std::function<double(double)>;

    ScalarFn() = default;
    ScalarFn(Rule rule, Interval domain = {}, Monotonicity mono = Monotonicity::none,
             std::string name = {});

    double operator()(double x) const;
    /// Evaluates without the domain check.
    [[nodiscard]] double raw(double x) const { return rule_(x); }

    [[nodiscard]] const Interval& domain() const noexcept { return domain_; }
    [[nodiscard]] Monotonicity monotonicity() const noexcept { return mono_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] explicit operator bool() const noexcept { return static_cast<bool>(rule_); }

private:
    Rule rule_;
    Interval domain_;
    Monotonicity mono_ = Monotonicity::none;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// All compositions of r into n parts, scaled by 1/r, in lexicographic order
/// of the integer compositions (first coordinate slowest). Count is C(r+n-1, n-1).
std::vector<ProbVector> simplex_grid(std::size_t n, std::size_t r);

/// Interior points only (every coordinate >= 1/r).
std::vector<ProbVector> simplex_grid_interior(std::size_t n, std::size_t r);

std::size_t binomial(std::size_t n, std::size_t k);

struct QuadOptions {
    int max_depth = 48;
    /// Geometric pieces allowed when refining toward a singular endpoint.
    int max_endpoint_pieces = 120;
};

/// Adaptive Simpson quadrature of f over [a, b] (a < b). Endpoints at which f
/// is not finite are treated as integrable singularities: the interval is
/// graded geometrically toward them and the tail is extrapolated. Throws
/// QuadratureError if the subdivision budget is exhausted.
double quad(const std::function<double(double)>& f, double a, double b, double tol,
            const QuadOptions& opts = {});

struct InvertOptions {
    int max_iter = 400;
    /// Samples used to detect non-monotone behavior before bisecting.
    int monotone_probe = 16;
};

/// Returns x in bracket with |f(x) - y| <= tol (or the x-resolution limit of
/// the bracket). f must be strictly monotone on the bracket.
double invert_monotone(const std::function<double(double)>& f, double y, Interval bracket,
                       double tol, const InvertOptions& opts = {});

/// Like invert_monotone but returns the bracket end instead of throwing when
/// y lies beyond the range of f. `saturated`, if given, reports that case.
double invert_monotone_saturating(const std::function<double(double)>& f, double y,
                                  Interval bracket, double tol, bool* saturated = nullptr);

using MultiFn = std::function<double(std::span<const double>)>;

/// Central-difference gradient of f at x with step h.
std::vector<double> finite_diff(const MultiFn& f, std::span<const double> x, double h);

/// Central-difference derivative of a scalar function.
double finite_diff(const std::function<double(double)>& f, double x, double h);

std::vector<double> linspace(double lo, double hi, std::size_t count);

double logistic(double z);
double logit(double p);
/// log(1 + exp(z)) without overflow.
double softplus(double z);

/// Pairwise (tree) summation; the result depends only on the order of `terms`.
double pairwise_sum(std::span<const double> terms);

/// Number of worker threads for parallel certification loops. Reads
/// PROPERPO_THREADS; defaults to the hardware concurrency.
std::size_t worker_threads();

/// Runs body(begin, end) over [0, count) split into contiguous chunks, one per
/// worker. Chunk boundaries depend only on count and the thread count.
void parallel_chunks(std::size_t count,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace properpo
