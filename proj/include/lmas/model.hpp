#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "lmas/config.hpp"
#include "lmas/matrix.hpp"
#include "lmas/tokenizer.hpp"
#include "lmas/weights.hpp"

namespace lmas {

/// Per-layer accumulated key/value tensors, step-major:
/// entry (step, head, d) lives at step * hidden_dim + head * head_dim + d.
template <class T>
struct KvCache {
    struct Layer {
        std::vector<T> keys;
        std::vector<T> values;
    };
    std::vector<Layer> layers;
    size_t length = 0; // identical across all layers, append-only

    KvCache() = default;
    explicit KvCache(size_t num_layers) : layers(num_layers) {}
};

/// One agent's mutable inference state. Weights are shared and immutable;
/// exactly one thread drives a context at a time (hand-off between threads
/// is allowed at step boundaries).
template <class T>
struct AgentContext {
    std::shared_ptr<const WeightSet<T>> weights;
    KvCache<T> cache;
    size_t next_position = 0;
    uint64_t flop_counter = 0; // multiply-accumulate count, monotone
    GenerationTrace trace;
    std::vector<T> last_hidden; // updated by every forward step

    explicit AgentContext(std::shared_ptr<const WeightSet<T>> w)
        : weights(std::move(w)), cache(weights->config.num_layers) {}

    const ModelConfig& config() const { return weights->config; }
};

using AgentContextF = AgentContext<float>;
using AgentContextD = AgentContext<double>;

template <class T>
std::vector<T> rms_norm(std::span<const T> x, std::span<const T> gain, double epsilon);

/// Rows of the input embedding table selected by id; shape len(ids) x hidden_dim.
template <class T>
Matrix<T> embed_tokens(const AgentContext<T>& ctx, const std::vector<TokenId>& ids);

/// One causal decoding step through all layers: attends over the full cache
/// plus the new position, appends K/V at every layer, advances the position,
/// adds the exact MAC count of the step to flop_counter, and records a trace
/// entry. Returns the final-layer hidden state (after the final norm).
template <class T>
std::vector<T> forward_step(AgentContext<T>& ctx, std::span<const T> input_embedding,
                            StepKind kind = StepKind::Prompt);

using SamplerRng = std::mt19937_64;

/// logits = h . lm_head rows; temperature 0 is argmax, otherwise nucleus
/// sampling over the smallest probability prefix with cumulative mass
/// >= top_p. Adds hidden_dim * vocab_size to flop_counter.
template <class T>
TokenId decode_token(AgentContext<T>& ctx, std::span<const T> h, double temperature, double top_p,
                     SamplerRng& rng);

template <class T>
TokenId decode_token(AgentContext<T>& ctx, std::span<const T> h, double temperature, double top_p,
                     uint64_t rng_seed);

/// Closed-form MAC count of one decoding step at the given attended context
/// length (cache after append, so >= 1): per layer
/// 4*d^2 + 2*d*context + 2*d*ffn, summed over layers, plus d*vocab for the
/// output head. forward_step's instrumentation matches this exactly.
uint64_t flop_count_step(const ModelConfig& config, uint64_t context_length, bool with_output_head);

} // namespace lmas
