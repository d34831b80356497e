#pragma once

#include "lmas/alignment.hpp"
#include "lmas/model.hpp"

namespace lmas {

struct LatentRunConfig {
    uint32_t latent_steps = 0;   // m = 0 contributes only the prompt encoding
    bool apply_alignment = true; // false is the no-realignment ablation arm
};

/// Encodes the prompt tokens sequentially; the cache grows by len(ids) and
/// the hidden state at the final prompt position is returned. Empty input is
/// a no-op returning an empty vector.
template <class T>
std::vector<T> prefill(AgentContext<T>& ctx, const std::vector<TokenId>& ids);

/// Auto-regressive latent-thought generation: for m steps, realigns the
/// current hidden state into the input-embedding space and feeds it back as
/// the next input, collecting the new hidden states. No decoding happens and
/// no output-head MACs are incurred; the loop is fully deterministic.
/// A non-finite hidden state aborts with LatentDivergence.
template <class T>
Matrix<T> generate_latent(AgentContext<T>& ctx, const AlignmentOperator<T>& op, const LatentRunConfig& cfg);

} // namespace lmas
