#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace sparseff {

/// One segment's dictionary: columns d_i of D, the story vector v = sum_i d_i,
/// locality distances g_i = |d_i - v| and per-frame weights w_i.
struct SegmentDictionary {
    Eigen::MatrixXd D;
    Eigen::VectorXd v;
    Eigen::VectorXd g;
    Eigen::VectorXd w;

    Eigen::Index frames() const noexcept { return D.cols(); }
    Eigen::Index features() const noexcept { return D.rows(); }
    /// Diagonal regularizer entries q_i = w_i * g_i.
    Eigen::VectorXd locality() const { return w.cwiseProduct(g); }
};

SegmentDictionary build_dictionary(Eigen::MatrixXd D, std::span<const double> weights);

/// Objective |v - D a|^2 + lambda * |(w . g) . a|^2 and its gradient.
double llc_objective(const SegmentDictionary& dict, const Eigen::VectorXd& alpha, double lambda);
Eigen::VectorXd llc_gradient(const SegmentDictionary& dict, const Eigen::VectorXd& alpha,
                             double lambda);

/// Closed-form weighted LLC solver for one dictionary, reusable across lambda.
///
/// With all q_i > 0 the regularized normal equations are diagonalized once:
/// the n x n system Q^-1 D^T D Q^-1 when n <= f, or the f x f dual
/// D Q^-2 D^T otherwise. Each solve is then a shifted spectral filter.
/// Eigen-directions below the numerical rank are treated as exact null
/// space, which matches the lambda -> 0+ limit. lambda = 0 returns the
/// minimum-norm least-squares solution of D a = v; zero q_i with lambda > 0
/// fall back to a minimum-norm solve of the stacked system.
class LlcSolver {
public:
    explicit LlcSolver(const SegmentDictionary& dict);
    LlcSolver(SegmentDictionary&&) = delete;  // keeps a reference to the dictionary

    Eigen::VectorXd solve(double lambda) const;

    const SegmentDictionary& dictionary() const noexcept { return *dict_; }

private:
    enum class Route { kSpectral, kStacked };

    const SegmentDictionary* dict_;
    Route route_;
    Eigen::MatrixXd basis_;    // maps filtered coefficients to alpha (n x r)
    Eigen::VectorXd eigen_;    // kept eigenvalues (r)
    Eigen::VectorXd coeffs_;   // projected right-hand side (r)
    mutable std::optional<Eigen::VectorXd> least_squares_;
};

Eigen::VectorXd solve_weighted_llc(const SegmentDictionary& dict, double lambda);

/// Indices with |alpha_i| >= tau * max_j |alpha_j|, ascending; every index
/// when alpha is identically zero.
std::vector<std::size_t> activated_frames(const Eigen::VectorXd& alpha, double tau);

std::size_t num_of_frames(const LlcSolver& solver, double lambda, double tau);
std::size_t num_of_frames(const SegmentDictionary& dict, double lambda, double tau);

struct LambdaSearchOptions {
    int max_iterations = 10000;
    double step_floor = 1e-12;
};

struct LambdaProbe {
    double lambda;
    std::size_t count;
};

struct LambdaSearch {
    double lambda = 0.0;
    std::size_t count = 0;
    bool reached = false;       // count == target
    std::size_t iterations = 0;
    std::vector<LambdaProbe> probes;
};

/// Decimal lambda search: starting at 0 with step 0.1, advance while the
/// activation count stays >= target, otherwise shrink the step tenfold; stop
/// on an exact hit. When the step floor or the iteration cap is hit, the
/// probe whose count is closest to target wins (smaller count on ties, then
/// larger lambda).
LambdaSearch adjust_lambda(const LlcSolver& solver, std::size_t target, double tau,
                           LambdaSearchOptions options = {});

struct ActivationResult {
    Eigen::VectorXd alpha;
    double lambda = 0.0;
    std::vector<std::size_t> selected;  // segment-local, ascending
    double residual = 0.0;              // |v - D alpha|
    std::size_t activated = 0;          // activation count at lambda
    bool reached = false;
    bool truncated = false;             // kept only the `target` largest |alpha_i|
    std::size_t iterations = 0;
};

/// Builds the dictionary, searches lambda, and selects the activated frames.
/// If the search cannot reach the target and ends above it, the selection is
/// cut to the `target` entries of largest |alpha| (lower index on ties).
ActivationResult sample_segment(const Eigen::MatrixXd& D, std::span<const double> weights,
                                std::size_t target, double tau,
                                LambdaSearchOptions options = {});

}  // namespace sparseff
