#pragma once

#include <span>
#include <vector>

#include "lmas/matrix.hpp"
#include "lmas/weights.hpp"

namespace lmas {

/// The hidden-to-embedding realignment operator: a square matrix mapping
/// final-layer hidden states back into the input-embedding space, solved once
/// per model from the ridge normal equations and reused for every latent step.
template <class T>
struct AlignmentOperator {
    Matrix<T> matrix;               // hidden_dim x hidden_dim
    double ridge_lambda = 0;
    double residual_frobenius = 0;  // |lm_head * matrix - tok_embed|_F at solve time

    static AlignmentOperator identity(size_t hidden_dim) {
        return {Matrix<T>::identity(hidden_dim), 0.0, 0.0};
    }
};

using AlignmentOperatorF = AlignmentOperator<float>;
using AlignmentOperatorD = AlignmentOperator<double>;

/// Dimensionless default: 1e-3 times the mean diagonal of lm_head' * lm_head.
template <class T>
double default_ridge_lambda(const Matrix<T>& lm_head);

/// Solves (lm_head' lm_head + lambda I) W = lm_head' tok_embed in 64-bit
/// (the normal equations square the condition number) and casts the result
/// to the model precision.
template <class T>
AlignmentOperator<T> solve_alignment(const Matrix<T>& tok_embed, const Matrix<T>& lm_head, double lambda);

template <class T>
AlignmentOperator<T> solve_alignment(const WeightSet<T>& ws, double lambda);

/// e = h . W; pure and deterministic.
template <class T>
std::vector<T> apply_alignment(const AlignmentOperator<T>& op, std::span<const T> h);

/// Descriptive statistics comparing a population of hidden states against
/// the input-embedding rows, before and after realignment. Output of the
/// align-report CLI; not a pass/fail gate.
struct DriftReport {
    size_t sample_count = 0;
    double lambda = 0;
    double residual_frobenius = 0;
    struct Population {
        double mean_nn_distance = 0; // mean Euclidean distance to nearest tok_embed row
        double mean_norm = 0;
        double covariance_trace = 0;
    };
    Population raw;     // hidden states as produced
    Population aligned; // after applying the operator
};

template <class T>
DriftReport alignment_drift_report(const WeightSet<T>& ws, const AlignmentOperator<T>& op,
                                   const std::vector<std::vector<T>>& sample_hidden_states);

/// Exact squared-Euclidean optimal transport between the aligned output-row
/// point set and the input-row point set (both weighted by token_dist),
/// next to the Frobenius residual that upper-bounds it. Feasible only for
/// tiny vocabularies (<= 16).
struct WassersteinCheck {
    double exact_distance = 0;
    double bound = 0;
};

template <class T>
WassersteinCheck wasserstein_bound_check(const Matrix<T>& tok_embed, const Matrix<T>& lm_head,
                                         const Matrix<T>& alignment, const std::vector<double>& token_dist);

/// Exact min-cost transport between discrete distributions with equal atom
/// counts; returns the optimal total cost. Exposed for the analysis harness.
double min_cost_transport(const std::vector<std::vector<double>>& cost, const std::vector<double>& supply,
                          const std::vector<double>& demand);

} // namespace lmas
