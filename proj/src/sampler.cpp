#include "sparseff/sampler.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sparseff/error.hpp"

namespace sparseff {

SegmentDictionary build_dictionary(Eigen::MatrixXd D, std::span<const double> weights) {
    if (D.cols() < 1 || D.rows() < 1) throw InputError("dictionary needs at least one frame and feature");
    if (static_cast<Eigen::Index>(weights.size()) != D.cols()) {
        throw InputError("weight vector length " + std::to_string(weights.size()) +
                         " does not match " + std::to_string(D.cols()) + " frames");
    }
    if (!D.allFinite()) throw InputError("dictionary contains non-finite values");
    SegmentDictionary dict;
    dict.v = Eigen::VectorXd::Zero(D.rows());
    for (Eigen::Index i = 0; i < D.cols(); ++i) dict.v += D.col(i);
    dict.g.resize(D.cols());
    for (Eigen::Index i = 0; i < D.cols(); ++i) dict.g(i) = (D.col(i) - dict.v).norm();
    dict.w = Eigen::Map<const Eigen::VectorXd>(weights.data(), D.cols());
    if (!dict.w.allFinite() || (dict.w.array() <= 0.0).any()) {
        throw InputError("weights must be finite and positive");
    }
    dict.D = std::move(D);
    return dict;
}

double llc_objective(const SegmentDictionary& dict, const Eigen::VectorXd& alpha, double lambda) {
    const Eigen::VectorXd q = dict.locality();
    return (dict.v - dict.D * alpha).squaredNorm() + lambda * q.cwiseProduct(alpha).squaredNorm();
}

Eigen::VectorXd llc_gradient(const SegmentDictionary& dict, const Eigen::VectorXd& alpha,
                             double lambda) {
    const Eigen::VectorXd q = dict.locality();
    return 2.0 * dict.D.transpose() * (dict.D * alpha - dict.v) +
           2.0 * lambda * q.cwiseProduct(q).cwiseProduct(alpha);
}

LlcSolver::LlcSolver(const SegmentDictionary& dict) : dict_(&dict), route_(Route::kStacked) {
    const Eigen::VectorXd q = dict.locality();
    if ((q.array() <= 0.0).any()) return;
    route_ = Route::kSpectral;

    const Eigen::VectorXd inv_q = q.cwiseInverse();
    const Eigen::MatrixXd Dq = dict.D * inv_q.asDiagonal();  // D Q^-1
    const bool primal = dict.frames() <= dict.features();
    const Eigen::MatrixXd gram = primal ? Eigen::MatrixXd(Dq.transpose() * Dq)
                                        : Eigen::MatrixXd(Dq * Dq.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

    const Eigen::VectorXd& values = eig.eigenvalues();
    const double top = std::max(values.maxCoeff(), 0.0);
    const double tol = top * static_cast<double>(gram.rows()) * std::numeric_limits<double>::epsilon();
    std::vector<Eigen::Index> kept;
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        if (values(k) > tol) kept.push_back(k);
    }
    const auto r = static_cast<Eigen::Index>(kept.size());
    Eigen::MatrixXd vectors(gram.rows(), r);
    eigen_.resize(r);
    for (Eigen::Index k = 0; k < r; ++k) {
        vectors.col(k) = eig.eigenvectors().col(kept[static_cast<std::size_t>(k)]);
        eigen_(k) = values(kept[static_cast<std::size_t>(k)]);
    }
    if (primal) {
        // alpha = Q^-1 V diag(1/(lambda+mu)) V^T Q^-1 D^T v
        basis_ = inv_q.asDiagonal() * vectors;
        coeffs_ = vectors.transpose() * (Dq.transpose() * dict.v);
    } else {
        // alpha = Q^-1 (D Q^-1)^T U diag(1/(lambda+sigma)) U^T v
        basis_ = inv_q.asDiagonal() * (Dq.transpose() * vectors);
        coeffs_ = vectors.transpose() * dict.v;
    }
}

Eigen::VectorXd LlcSolver::solve(double lambda) const {
    if (!std::isfinite(lambda) || lambda < 0.0) throw InputError("lambda must be finite and >= 0");
    const auto& dict = *dict_;
    if (lambda == 0.0) {
        if (!least_squares_) {
            least_squares_ = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(dict.D).solve(dict.v);
        }
        return *least_squares_;
    }
    if (route_ == Route::kSpectral) {
        const Eigen::VectorXd filtered = coeffs_.array() / (eigen_.array() + lambda);
        return basis_ * filtered;
    }
    const Eigen::Index f = dict.features(), n = dict.frames();
    Eigen::MatrixXd stacked(f + n, n);
    stacked.topRows(f) = dict.D;
    stacked.bottomRows(n) = (std::sqrt(lambda) * dict.locality()).asDiagonal();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(f + n);
    rhs.head(f) = dict.v;
    return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(stacked).solve(rhs);
}

Eigen::VectorXd solve_weighted_llc(const SegmentDictionary& dict, double lambda) {
    return LlcSolver(dict).solve(lambda);
}

std::vector<std::size_t> activated_frames(const Eigen::VectorXd& alpha, double tau) {
    std::vector<std::size_t> out;
    const double peak = alpha.size() > 0 ? alpha.cwiseAbs().maxCoeff() : 0.0;
    out.reserve(static_cast<std::size_t>(alpha.size()));
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        if (peak == 0.0 || std::abs(alpha(i)) >= tau * peak) out.push_back(static_cast<std::size_t>(i));
    }
    return out;
}

namespace {

std::size_t count_active(const Eigen::VectorXd& alpha, double tau) {
    const double peak = alpha.cwiseAbs().maxCoeff();
    if (peak == 0.0) return static_cast<std::size_t>(alpha.size());
    return static_cast<std::size_t>((alpha.array().abs() >= tau * peak).count());
}

}  // namespace

std::size_t num_of_frames(const LlcSolver& solver, double lambda, double tau) {
    return count_active(solver.solve(lambda), tau);
}

std::size_t num_of_frames(const SegmentDictionary& dict, double lambda, double tau) {
    return num_of_frames(LlcSolver(dict), lambda, tau);
}

LambdaSearch adjust_lambda(const LlcSolver& solver, std::size_t target, double tau,
                           LambdaSearchOptions options) {
    const auto n = static_cast<std::size_t>(solver.dictionary().frames());
    if (target < 1 || target > n) {
        throw InputError("target " + std::to_string(target) + " outside [1, " + std::to_string(n) + "]");
    }
    LambdaSearch search;
    double lambda = 0.0;
    double step = 0.1;
    const double floor = options.step_floor * (1.0 - 1e-9);
    while (static_cast<int>(search.iterations) < options.max_iterations && step >= floor) {
        const double probe = lambda + step;
        const std::size_t count = num_of_frames(solver, probe, tau);
        search.probes.push_back({probe, count});
        ++search.iterations;
        if (count >= target) lambda = probe;
        else step /= 10.0;
        if (count == target) {
            search.lambda = lambda;
            search.count = count;
            search.reached = true;
            return search;
        }
    }
    const auto distance = [target](std::size_t c) { return c > target ? c - target : target - c; };
    const LambdaProbe* best = &search.probes.front();
    for (const auto& p : search.probes) {
        const auto d = distance(p.count), bd = distance(best->count);
        if (d < bd || (d == bd && (p.count < best->count ||
                                   (p.count == best->count && p.lambda > best->lambda)))) {
            best = &p;
        }
    }
    search.lambda = best->lambda;
    search.count = best->count;
    return search;
}

ActivationResult sample_segment(const Eigen::MatrixXd& D, std::span<const double> weights,
                                std::size_t target, double tau, LambdaSearchOptions options) {
    const SegmentDictionary dict = build_dictionary(D, weights);
    const LlcSolver solver(dict);
    const LambdaSearch search = adjust_lambda(solver, target, tau, options);

    ActivationResult result;
    result.alpha = solver.solve(search.lambda);
    result.lambda = search.lambda;
    result.reached = search.reached;
    result.iterations = search.iterations;
    result.selected = activated_frames(result.alpha, tau);
    result.activated = result.selected.size();
    if (!search.reached && result.selected.size() > target) {
        std::vector<std::size_t> order(static_cast<std::size_t>(result.alpha.size()));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(result.alpha(static_cast<Eigen::Index>(a))) >
                   std::abs(result.alpha(static_cast<Eigen::Index>(b)));
        });
        order.resize(target);
        std::sort(order.begin(), order.end());
        result.selected = std::move(order);
        result.truncated = true;
    }
    result.residual = (dict.v - dict.D * result.alpha).norm();
    return result;
}

}  // namespace sparseff
