#include "lmas/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lmas {

namespace {

// y = x . W for a row vector x (1 x rows) and W (rows x cols).
template <class T>
void matvec_row(std::span<const T> x, const Matrix<T>& w, std::span<T> y) {
    std::fill(y.begin(), y.end(), T(0));
    for (size_t k = 0; k < w.rows; ++k) {
        const T xk = x[k];
        const T* wrow = w.data.data() + k * w.cols;
        for (size_t j = 0; j < w.cols; ++j) y[j] += xk * wrow[j];
    }
}

template <class T>
void apply_rotary(std::span<T> v, size_t position, const ModelConfig& cfg) {
    const size_t hd = cfg.head_dim;
    const size_t half = hd / 2;
    for (uint32_t head = 0; head < cfg.num_heads; ++head) {
        T* base = v.data() + size_t(head) * hd;
        for (size_t i = 0; i < half; ++i) {
            double freq = std::pow(cfg.rope_base, -2.0 * double(i) / double(hd));
            double angle = double(position) * freq;
            T c = T(std::cos(angle)), s = T(std::sin(angle));
            T a = base[i], b = base[i + half];
            base[i] = a * c - b * s;
            base[i + half] = a * s + b * c;
        }
    }
}

template <class T>
T silu(T x) {
    return T(double(x) / (1.0 + std::exp(-double(x))));
}

} // namespace

template <class T>
std::vector<T> rms_norm(std::span<const T> x, std::span<const T> gain, double epsilon) {
    double ms = 0;
    for (T v : x) ms += double(v) * double(v);
    ms = ms / double(x.size()) + epsilon;
    const T inv = T(1.0 / std::sqrt(ms));
    std::vector<T> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * gain[i];
    return out;
}

template <class T>
Matrix<T> embed_tokens(const AgentContext<T>& ctx, const std::vector<TokenId>& ids) {
    const auto& ws = *ctx.weights;
    const size_t d = ws.config.hidden_dim;
    Matrix<T> out(ids.size(), d);
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || uint32_t(ids[i]) >= ws.config.vocab_size)
            throw IdOutOfRange("token id " + std::to_string(ids[i]) + " >= vocab " +
                               std::to_string(ws.config.vocab_size));
        auto row = ws.tok_embed.row(size_t(ids[i]));
        std::copy(row.begin(), row.end(), out.row(i).begin());
    }
    return out;
}

template <class T>
std::vector<T> forward_step(AgentContext<T>& ctx, std::span<const T> input_embedding, StepKind kind) {
    const auto& ws = *ctx.weights;
    const ModelConfig& cfg = ws.config;
    const size_t d = cfg.hidden_dim, f = cfg.ffn_dim, hd = cfg.head_dim;

    if (ctx.next_position >= cfg.max_positions)
        throw PositionOverflow("position " + std::to_string(ctx.next_position) + " exceeds max_positions " +
                               std::to_string(cfg.max_positions));
    if (input_embedding.size() != d) throw ShapeMismatch("input embedding size != hidden_dim");

    const size_t pos = ctx.next_position;
    const size_t ctx_len = ctx.cache.length + 1; // attends over cache plus self
    uint64_t step_flops = 0;

    std::vector<T> x(input_embedding.begin(), input_embedding.end());
    std::vector<T> q(d), k(d), v(d), mixed(d), proj(d), up(f), down(d);

    for (uint32_t l = 0; l < cfg.num_layers; ++l) {
        const auto& lw = ws.layers[l];
        auto& cache = ctx.cache.layers[l];

        std::vector<T> attn_in = rms_norm<T>(x, lw.attn_norm_gain, cfg.norm_epsilon);
        matvec_row<T>(attn_in, lw.attn_q, q);
        matvec_row<T>(attn_in, lw.attn_k, k);
        matvec_row<T>(attn_in, lw.attn_v, v);
        step_flops += 3ull * d * d;

        apply_rotary<T>(q, pos, cfg);
        apply_rotary<T>(k, pos, cfg);

        cache.keys.insert(cache.keys.end(), k.begin(), k.end());
        cache.values.insert(cache.values.end(), v.begin(), v.end());

        const T inv_sqrt_hd = T(1.0 / std::sqrt(double(hd)));
        std::vector<T> scores(ctx_len);
        for (uint32_t head = 0; head < cfg.num_heads; ++head) {
            const size_t off = size_t(head) * hd;
            for (size_t j = 0; j < ctx_len; ++j) {
                const T* kj = cache.keys.data() + j * d + off;
                T acc = 0;
                for (size_t e = 0; e < hd; ++e) acc += q[off + e] * kj[e];
                scores[j] = acc * inv_sqrt_hd;
            }
            step_flops += uint64_t(ctx_len) * hd;

            T mx = *std::max_element(scores.begin(), scores.end());
            T denom = 0;
            for (auto& s : scores) {
                s = T(std::exp(double(s - mx)));
                denom += s;
            }
            const T inv_denom = T(1) / denom;

            for (size_t e = 0; e < hd; ++e) mixed[off + e] = 0;
            for (size_t j = 0; j < ctx_len; ++j) {
                const T w = scores[j] * inv_denom;
                const T* vj = cache.values.data() + j * d + off;
                for (size_t e = 0; e < hd; ++e) mixed[off + e] += w * vj[e];
            }
            step_flops += uint64_t(ctx_len) * hd;
        }

        matvec_row<T>(mixed, lw.attn_out, proj);
        step_flops += uint64_t(d) * d;
        for (size_t i = 0; i < d; ++i) x[i] += proj[i];

        std::vector<T> ffn_in = rms_norm<T>(x, lw.ffn_norm_gain, cfg.norm_epsilon);
        matvec_row<T>(ffn_in, lw.ffn_up, up);
        step_flops += uint64_t(d) * f;
        for (auto& u : up) u = silu(u);
        matvec_row<T>(up, lw.ffn_down, down);
        step_flops += uint64_t(f) * d;
        for (size_t i = 0; i < d; ++i) x[i] += down[i];
    }

    std::vector<T> h = rms_norm<T>(x, ws.final_norm_gain, cfg.norm_epsilon);

    ctx.cache.length += 1;
    ctx.next_position += 1;
    ctx.flop_counter += step_flops;
    ctx.trace.push_back(StepRecord{uint64_t(pos), kind, uint64_t(ctx_len), step_flops, -1});
    ctx.last_hidden = h;
    return h;
}

template <class T>
TokenId decode_token(AgentContext<T>& ctx, std::span<const T> h, double temperature, double top_p,
                     SamplerRng& rng) {
    if (temperature < 0) throw InvalidArgument("temperature must be >= 0");
    if (!(top_p > 0 && top_p <= 1)) throw InvalidArgument("top_p must be in (0, 1]");
    const auto& head = ctx.weights->lm_head;
    const size_t vocab = head.rows, d = head.cols;
    if (h.size() != d) throw ShapeMismatch("hidden state size != hidden_dim");

    std::vector<double> logits(vocab);
    for (size_t i = 0; i < vocab; ++i) {
        const T* row = head.data.data() + i * d;
        T acc = 0;
        for (size_t e = 0; e < d; ++e) acc += h[e] * row[e];
        logits[i] = double(acc);
    }
    ctx.flop_counter += uint64_t(d) * vocab;

    if (temperature == 0) {
        return TokenId(std::max_element(logits.begin(), logits.end()) - logits.begin());
    }

    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(vocab);
    double denom = 0;
    for (size_t i = 0; i < vocab; ++i) {
        probs[i] = std::exp((logits[i] - mx) / temperature);
        denom += probs[i];
    }
    for (auto& p : probs) p /= denom;

    std::vector<size_t> order(vocab);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (probs[a] != probs[b]) return probs[a] > probs[b];
        return a < b; // deterministic tie-break
    });

    // Smallest prefix whose cumulative mass reaches top_p.
    size_t cut = 0;
    double mass = 0;
    for (; cut < vocab; ++cut) {
        mass += probs[order[cut]];
        if (mass >= top_p) {
            ++cut;
            break;
        }
    }
    if (cut == 0) cut = 1;

    const double u = double(rng() >> 11) * 0x1.0p-53 * mass;
    double acc = 0;
    for (size_t i = 0; i < cut; ++i) {
        acc += probs[order[i]];
        if (u < acc) return TokenId(order[i]);
    }
    return TokenId(order[cut - 1]);
}

template <class T>
TokenId decode_token(AgentContext<T>& ctx, std::span<const T> h, double temperature, double top_p,
                     uint64_t rng_seed) {
    SamplerRng rng(rng_seed);
    return decode_token(ctx, h, temperature, top_p, rng);
}

uint64_t flop_count_step(const ModelConfig& config, uint64_t context_length, bool with_output_head) {
    if (context_length < 1) throw InvalidArgument("context_length must be >= 1");
    const uint64_t d = config.hidden_dim, f = config.ffn_dim;
    uint64_t per_layer = 4 * d * d + 2 * d * context_length + 2 * d * f;
    uint64_t total = per_layer * config.num_layers;
    if (with_output_head) total += d * config.vocab_size;
    return total;
}

template std::vector<float> rms_norm<float>(std::span<const float>, std::span<const float>, double);
template std::vector<double> rms_norm<double>(std::span<const double>, std::span<const double>, double);
template Matrix<float> embed_tokens<float>(const AgentContext<float>&, const std::vector<TokenId>&);
template Matrix<double> embed_tokens<double>(const AgentContext<double>&, const std::vector<TokenId>&);
template std::vector<float> forward_step<float>(AgentContext<float>&, std::span<const float>, StepKind);
template std::vector<double> forward_step<double>(AgentContext<double>&, std::span<const double>, StepKind);
template TokenId decode_token<float>(AgentContext<float>&, std::span<const float>, double, double, SamplerRng&);
template TokenId decode_token<double>(AgentContext<double>&, std::span<const double>, double, double, SamplerRng&);
template TokenId decode_token<float>(AgentContext<float>&, std::span<const float>, double, double, uint64_t);
template TokenId decode_token<double>(AgentContext<double>&, std::span<const double>, double, double, uint64_t);

} // namespace lmas
