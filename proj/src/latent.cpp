#include "lmas/latent.hpp"

#include <algorithm>
#include <cmath>

namespace lmas {

template <class T>
std::vector<T> prefill(AgentContext<T>& ctx, const std::vector<TokenId>& ids) {
    if (ids.empty()) return {};
    if (ctx.next_position + ids.size() > ctx.config().max_positions)
        throw PositionOverflow("prompt of " + std::to_string(ids.size()) + " tokens does not fit at position " +
                               std::to_string(ctx.next_position));
    Matrix<T> emb = embed_tokens(ctx, ids);
    std::vector<T> h;
    for (size_t i = 0; i < ids.size(); ++i) h = forward_step<T>(ctx, emb.row(i), StepKind::Prompt);
    return h;
}

template <class T>
Matrix<T> generate_latent(AgentContext<T>& ctx, const AlignmentOperator<T>& op, const LatentRunConfig& cfg) {
    const size_t d = ctx.config().hidden_dim;
    Matrix<T> thoughts(cfg.latent_steps, d);
    for (uint32_t step = 0; step < cfg.latent_steps; ++step) {
        if (ctx.last_hidden.size() != d)
            throw InvalidArgument("generate_latent requires a prefilled context");
        std::vector<T> e = cfg.apply_alignment ? apply_alignment<T>(op, ctx.last_hidden) : ctx.last_hidden;
        std::vector<T> h = forward_step<T>(ctx, e, StepKind::Latent);
        if (!std::all_of(h.begin(), h.end(), [](T v) { return std::isfinite(v); }))
            throw LatentDivergence("non-finite hidden state at latent step " + std::to_string(step));
        std::copy(h.begin(), h.end(), thoughts.row(step).begin());
    }
    return thoughts;
}

template std::vector<float> prefill<float>(AgentContext<float>&, const std::vector<TokenId>&);
template std::vector<double> prefill<double>(AgentContext<double>&, const std::vector<TokenId>&);
template Matrix<float> generate_latent<float>(AgentContext<float>&, const AlignmentOperator<float>&,
                                              const LatentRunConfig&);
template Matrix<double> generate_latent<double>(AgentContext<double>&, const AlignmentOperator<double>&,
                                                const LatentRunConfig&);

} // namespace lmas
