#include "lmas/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lmas {

template <class T>
double default_ridge_lambda(const Matrix<T>& lm_head) {
    double mean_diag = 0;
    for (size_t j = 0; j < lm_head.cols; ++j) {
        double acc = 0;
        for (size_t r = 0; r < lm_head.rows; ++r) acc += double(lm_head.at(r, j)) * double(lm_head.at(r, j));
        mean_diag += acc;
    }
    mean_diag /= double(lm_head.cols);
    return 1e-3 * mean_diag;
}

template <class T>
AlignmentOperator<T> solve_alignment(const Matrix<T>& tok_embed, const Matrix<T>& lm_head, double lambda) {
    if (tok_embed.rows != lm_head.rows || tok_embed.cols != lm_head.cols)
        throw ShapeMismatch("embedding tables must share shape");
    if (!(lambda > 0)) throw InvalidArgument("ridge lambda must be > 0");

    MatrixD in64 = tok_embed.template cast<double>();
    MatrixD out64 = lm_head.template cast<double>();

    MatrixD gram = matmul_tn(out64, out64); // d x d
    for (size_t i = 0; i < gram.rows; ++i) gram.at(i, i) += lambda;
    MatrixD rhs = matmul_tn(out64, in64);

    MatrixD w = solve_spd(gram, rhs);

    MatrixD fitted = matmul(out64, w);
    for (size_t i = 0; i < fitted.data.size(); ++i) fitted.data[i] -= in64.data[i];
    double residual = frobenius_norm(fitted);

    return AlignmentOperator<T>{w.cast<T>(), lambda, residual};
}

template <class T>
AlignmentOperator<T> solve_alignment(const WeightSet<T>& ws, double lambda) {
    if (lambda <= 0) lambda = default_ridge_lambda(ws.lm_head);
    return solve_alignment(ws.tok_embed, ws.lm_head, lambda);
}

template <class T>
std::vector<T> apply_alignment(const AlignmentOperator<T>& op, std::span<const T> h) {
    const auto& w = op.matrix;
    if (h.size() != w.rows) throw ShapeMismatch("hidden state size != alignment rows");
    std::vector<T> e(w.cols, T(0));
    for (size_t k = 0; k < w.rows; ++k) {
        const T hk = h[k];
        const T* wrow = w.data.data() + k * w.cols;
        for (size_t j = 0; j < w.cols; ++j) e[j] += hk * wrow[j];
    }
    return e;
}

namespace {

template <class T>
double nearest_row_distance(std::span<const T> v, const Matrix<T>& rows) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < rows.rows; ++r) {
        const T* row = rows.data.data() + r * rows.cols;
        double acc = 0;
        for (size_t j = 0; j < rows.cols; ++j) {
            double diff = double(v[j]) - double(row[j]);
            acc += diff * diff;
        }
        best = std::min(best, acc);
    }
    return std::sqrt(best);
}

template <class T>
DriftReport::Population population_stats(const std::vector<std::vector<T>>& samples, const Matrix<T>& rows) {
    DriftReport::Population p;
    const size_t n = samples.size();
    const size_t d = samples.front().size();
    std::vector<double> mean(d, 0.0);
    for (const auto& s : samples) {
        p.mean_nn_distance += nearest_row_distance<T>(s, rows);
        double norm = 0;
        for (size_t j = 0; j < d; ++j) {
            mean[j] += double(s[j]);
            norm += double(s[j]) * double(s[j]);
        }
        p.mean_norm += std::sqrt(norm);
    }
    p.mean_nn_distance /= double(n);
    p.mean_norm /= double(n);
    for (auto& m : mean) m /= double(n);
    double var = 0;
    for (const auto& s : samples)
        for (size_t j = 0; j < d; ++j) {
            double diff = double(s[j]) - mean[j];
            var += diff * diff;
        }
    p.covariance_trace = n > 1 ? var / double(n - 1) : 0.0;
    return p;
}

} // namespace

template <class T>
DriftReport alignment_drift_report(const WeightSet<T>& ws, const AlignmentOperator<T>& op,
                                   const std::vector<std::vector<T>>& sample_hidden_states) {
    if (sample_hidden_states.empty()) throw EmptySample("drift report needs at least one hidden state");

    std::vector<std::vector<T>> aligned;
    aligned.reserve(sample_hidden_states.size());
    for (const auto& h : sample_hidden_states) aligned.push_back(apply_alignment<T>(op, h));

    DriftReport rep;
    rep.sample_count = sample_hidden_states.size();
    rep.lambda = op.ridge_lambda;
    rep.residual_frobenius = op.residual_frobenius;
    rep.raw = population_stats(sample_hidden_states, ws.tok_embed);
    rep.aligned = population_stats(aligned, ws.tok_embed);
    return rep;
}

// Successive-shortest-path min-cost flow on the bipartite transport graph.
// Each augmentation zeroes at least one remaining supply or demand, so at
// most supply+demand rounds run; Bellman-Ford handles the negative residual
// costs. Sizes here are <= 16 so none of this needs to be clever.
double min_cost_transport(const std::vector<std::vector<double>>& cost, const std::vector<double>& supply,
                          const std::vector<double>& demand) {
    const size_t n = supply.size(), m = demand.size();
    std::vector<std::vector<double>> flow(n, std::vector<double>(m, 0.0));
    std::vector<double> rem_supply = supply, rem_demand = demand;

    auto positive = [](double v) { return v > 1e-15; };

    // Relaxation threshold scaled to the cost magnitudes; rounding noise in
    // the residual graph must not register as an improvement.
    double max_cost = 0;
    for (const auto& row : cost)
        for (double c : row) max_cost = std::max(max_cost, std::abs(c));
    const double eps = 1e-12 * (1.0 + max_cost);

    double total_cost = 0;
    while (true) {
        // Shortest path from any node with remaining supply to any node with
        // remaining demand in the residual graph. Paths visit at most n + m
        // nodes, so that many Bellman-Ford passes suffice.
        constexpr double kInf = std::numeric_limits<double>::infinity();
        std::vector<double> dist_s(n, kInf), dist_d(m, kInf);
        std::vector<int> pred_s(n, -1), pred_d(m, -1); // predecessor column / row
        for (size_t i = 0; i < n; ++i)
            if (positive(rem_supply[i])) dist_s[i] = 0;

        for (size_t pass = 0; pass < n + m + 1; ++pass) {
            bool changed = false;
            for (size_t i = 0; i < n; ++i) {
                if (dist_s[i] == kInf) continue;
                for (size_t j = 0; j < m; ++j) {
                    if (dist_s[i] + cost[i][j] < dist_d[j] - eps) {
                        dist_d[j] = dist_s[i] + cost[i][j];
                        pred_d[j] = int(i);
                        changed = true;
                    }
                }
            }
            for (size_t j = 0; j < m; ++j) {
                if (dist_d[j] == kInf) continue;
                for (size_t i = 0; i < n; ++i) {
                    if (positive(flow[i][j]) && dist_d[j] - cost[i][j] < dist_s[i] - eps) {
                        dist_s[i] = dist_d[j] - cost[i][j];
                        pred_s[i] = int(j);
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }

        int best = -1;
        for (size_t j = 0; j < m; ++j)
            if (positive(rem_demand[j]) && dist_d[j] < kInf && (best < 0 || dist_d[j] < dist_d[size_t(best)]))
                best = int(j);
        if (best < 0) break; // all demand satisfied

        // Trace the augmenting path and find the bottleneck.
        const size_t max_hops = n + m + 2;
        double delta = rem_demand[size_t(best)];
        {
            int j = best;
            for (size_t hop = 0;; ++hop) {
                if (hop > max_hops) throw Error("transport path trace did not terminate");
                int i = pred_d[size_t(j)];
                if (pred_s[size_t(i)] < 0) {
                    delta = std::min(delta, rem_supply[size_t(i)]);
                    break;
                }
                int pj = pred_s[size_t(i)];
                delta = std::min(delta, flow[size_t(i)][size_t(pj)]);
                j = pj;
            }
        }
        {
            int j = best;
            for (size_t hop = 0;; ++hop) {
                if (hop > max_hops) throw Error("transport path trace did not terminate");
                int i = pred_d[size_t(j)];
                flow[size_t(i)][size_t(j)] += delta;
                total_cost += delta * cost[size_t(i)][size_t(j)];
                if (pred_s[size_t(i)] < 0) {
                    rem_supply[size_t(i)] -= delta;
                    break;
                }
                int pj = pred_s[size_t(i)];
                flow[size_t(i)][size_t(pj)] -= delta;
                total_cost -= delta * cost[size_t(i)][size_t(pj)];
                j = pj;
            }
            rem_demand[size_t(best)] -= delta;
        }
    }
    return total_cost;
}

template <class T>
WassersteinCheck wasserstein_bound_check(const Matrix<T>& tok_embed, const Matrix<T>& lm_head,
                                         const Matrix<T>& alignment, const std::vector<double>& token_dist) {
    const size_t vocab = tok_embed.rows, d = tok_embed.cols;
    if (vocab > 16) throw TooLarge("exact transport is only feasible for vocab <= 16");
    if (lm_head.rows != vocab || lm_head.cols != d) throw ShapeMismatch("embedding tables must share shape");
    if (alignment.rows != d || alignment.cols != d) throw ShapeMismatch("alignment must be hidden x hidden");
    if (token_dist.size() != vocab) throw BadDistribution("token distribution size != vocab");
    double mass = 0;
    for (double p : token_dist) {
        if (!(p >= 0) || !std::isfinite(p)) throw BadDistribution("token distribution entries must be >= 0");
        mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-9) throw BadDistribution("token distribution must sum to 1");

    MatrixD aligned_rows = matmul(lm_head.template cast<double>(), alignment.template cast<double>());
    MatrixD in64 = tok_embed.template cast<double>();

    std::vector<std::vector<double>> cost(vocab, std::vector<double>(vocab));
    for (size_t i = 0; i < vocab; ++i)
        for (size_t j = 0; j < vocab; ++j) {
            double acc = 0;
            for (size_t e = 0; e < d; ++e) {
                double diff = aligned_rows.at(i, e) - in64.at(j, e);
                acc += diff * diff;
            }
            cost[i][j] = acc;
        }

    double transport = min_cost_transport(cost, token_dist, token_dist);

    MatrixD resid = aligned_rows;
    for (size_t i = 0; i < resid.data.size(); ++i) resid.data[i] -= in64.data[i];

    WassersteinCheck out;
    out.exact_distance = std::sqrt(std::max(0.0, transport));
    out.bound = frobenius_norm(resid);
    return out;
}

template double default_ridge_lambda<float>(const Matrix<float>&);
template double default_ridge_lambda<double>(const Matrix<double>&);
template AlignmentOperator<float> solve_alignment<float>(const Matrix<float>&, const Matrix<float>&, double);
template AlignmentOperator<double> solve_alignment<double>(const Matrix<double>&, const Matrix<double>&, double);
template AlignmentOperator<float> solve_alignment<float>(const WeightSet<float>&, double);
template AlignmentOperator<double> solve_alignment<double>(const WeightSet<double>&, double);
template std::vector<float> apply_alignment<float>(const AlignmentOperator<float>&, std::span<const float>);
template std::vector<double> apply_alignment<double>(const AlignmentOperator<double>&, std::span<const double>);
template DriftReport alignment_drift_report<float>(const WeightSet<float>&, const AlignmentOperator<float>&,
                                                   const std::vector<std::vector<float>>&);
template DriftReport alignment_drift_report<double>(const WeightSet<double>&, const AlignmentOperator<double>&,
                                                    const std::vector<std::vector<double>>&);
template WassersteinCheck wasserstein_bound_check<float>(const Matrix<float>&, const Matrix<float>&,
                                                         const Matrix<float>&, const std::vector<double>&);
template WassersteinCheck wasserstein_bound_check<double>(const Matrix<double>&, const Matrix<double>&,
                                                          const Matrix<double>&, const std::vector<double>&);

} // namespace lmas
