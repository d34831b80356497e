#pragma once

// Straight-line reference decoder: recomputes the whole sequence from
// scratch with full quadratic attention and no KV cache. Kept deliberately
// independent of the incremental engine so the two can check each other.

#include <cmath>
#include <vector>

#include "lmas/weights.hpp"

namespace lmas_test {

template <class T>
std::vector<T> ref_rms_norm(const std::vector<T>& x, const std::vector<T>& gain, double eps) {
    double ms = 0;
    for (T v : x) ms += double(v) * double(v);
    ms = ms / double(x.size()) + eps;
    T inv = T(1.0 / std::sqrt(ms));
    std::vector<T> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * gain[i];
    return out;
}

template <class T>
std::vector<T> ref_project(const std::vector<T>& x, const lmas::Matrix<T>& w) {
    std::vector<T> y(w.cols, T(0));
    for (size_t k = 0; k < w.rows; ++k)
        for (size_t j = 0; j < w.cols; ++j) y[j] += x[k] * w.at(k, j);
    return y;
}

template <class T>
void ref_rotate(std::vector<T>& v, size_t position, const lmas::ModelConfig& cfg) {
    const size_t hd = cfg.head_dim, half = hd / 2;
    for (uint32_t head = 0; head < cfg.num_heads; ++head) {
        for (size_t i = 0; i < half; ++i) {
            double freq = std::pow(cfg.rope_base, -2.0 * double(i) / double(hd));
            double angle = double(position) * freq;
            T c = T(std::cos(angle)), s = T(std::sin(angle));
            T a = v[head * hd + i], b = v[head * hd + i + half];
            v[head * hd + i] = a * c - b * s;
            v[head * hd + i + half] = a * s + b * c;
        }
    }
}

/// Final-layer hidden state (after the final norm) for every position of the
/// given input-embedding sequence, positions starting at 0.
template <class T>
std::vector<std::vector<T>> reference_forward(const lmas::WeightSet<T>& ws,
                                              const std::vector<std::vector<T>>& inputs) {
    const lmas::ModelConfig& cfg = ws.config;
    const size_t n = inputs.size(), d = cfg.hidden_dim, hd = cfg.head_dim;

    std::vector<std::vector<T>> residual = inputs;
    for (uint32_t l = 0; l < cfg.num_layers; ++l) {
        const auto& lw = ws.layers[l];

        std::vector<std::vector<T>> qs(n), ks(n), vs(n);
        for (size_t p = 0; p < n; ++p) {
            std::vector<T> normed = ref_rms_norm(residual[p], lw.attn_norm_gain, cfg.norm_epsilon);
            qs[p] = ref_project(normed, lw.attn_q);
            ks[p] = ref_project(normed, lw.attn_k);
            vs[p] = ref_project(normed, lw.attn_v);
            ref_rotate(qs[p], p, cfg);
            ref_rotate(ks[p], p, cfg);
        }

        for (size_t p = 0; p < n; ++p) {
            std::vector<T> mixed(d, T(0));
            for (uint32_t head = 0; head < cfg.num_heads; ++head) {
                const size_t off = size_t(head) * hd;
                std::vector<T> scores(p + 1);
                for (size_t j = 0; j <= p; ++j) {
                    T acc = 0;
                    for (size_t e = 0; e < hd; ++e) acc += qs[p][off + e] * ks[j][off + e];
                    scores[j] = T(double(acc) / std::sqrt(double(hd)));
                }
                T mx = scores[0];
                for (T s : scores) mx = std::max(mx, s);
                T denom = 0;
                for (auto& s : scores) {
                    s = T(std::exp(double(s - mx)));
                    denom += s;
                }
                for (size_t j = 0; j <= p; ++j)
                    for (size_t e = 0; e < hd; ++e) mixed[off + e] += scores[j] / denom * vs[j][off + e];
            }
            std::vector<T> attn = ref_project(mixed, lw.attn_out);
            for (size_t e = 0; e < d; ++e) residual[p][e] += attn[e];

            std::vector<T> ffn_in = ref_rms_norm(residual[p], lw.ffn_norm_gain, cfg.norm_epsilon);
            std::vector<T> up = ref_project(ffn_in, lw.ffn_up);
            for (auto& u : up) u = T(double(u) / (1.0 + std::exp(-double(u))));
            std::vector<T> down = ref_project(up, lw.ffn_down);
            for (size_t e = 0; e < d; ++e) residual[p][e] += down[e];
        }
    }

    std::vector<std::vector<T>> out(n);
    for (size_t p = 0; p < n; ++p) out[p] = ref_rms_norm(residual[p], ws.final_norm_gain, cfg.norm_epsilon);
    return out;
}

} // namespace lmas_test
