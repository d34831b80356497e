#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lmas/latent.hpp"
#include "lmas/model.hpp"

namespace lmas {

/// A deep snapshot of all layer-wise KV caches of one agent, plus the
/// provenance needed to splice it into a successor. Immutable after
/// extraction and safe to share across threads.
template <class T>
struct LatentMemory {
    struct Layer {
        std::vector<T> keys;
        std::vector<T> values;

        bool operator==(const Layer&) const = default;
    };
    std::vector<Layer> layers;
    uint64_t base_length = 0;   // prompt/prepended/decoded positions
    uint64_t latent_length = 0; // this agent's own latent steps
    std::string source_agent;
    uint64_t config_fingerprint = 0;

    uint64_t total_length() const { return base_length + latent_length; }

    bool operator==(const LatentMemory&) const = default;
};

using LatentMemoryF = LatentMemory<float>;
using LatentMemoryD = LatentMemory<double>;

/// Deep copy of the context's caches; later mutation of the context leaves
/// the snapshot untouched.
template <class T>
LatentMemory<T> extract_memory(const AgentContext<T>& ctx, std::string source_agent = {});

/// Layer-wise concatenation of the given memories (in list order) into a
/// fresh context; the context's position counter continues after the
/// prepended length so its own tokens extend the same position line.
template <class T>
void prepend_memory(AgentContext<T>& ctx, const std::vector<LatentMemory<T>>& memories);

template <class T>
void save_memory(const LatentMemory<T>& mem, const ModelConfig& cfg, const std::filesystem::path& path);

template <class T>
LatentMemory<T> load_memory(const std::filesystem::path& path);

enum class ProbeMode { Latent, GreedyDecode };

struct TransferCheck {
    double max_abs_diff = 0;
    std::vector<TokenId> tokens_via_memory; // greedy-probe variant only
    std::vector<TokenId> tokens_inline;
};

/// Runs the same two-agent computation twice: once with extraction and
/// memory prepending between a predecessor and a fresh successor, and once
/// inline in a single context with no extraction at all. Probes the
/// successor for `probe_steps` latent steps (or greedy text decodes) and
/// returns the max absolute elementwise difference over all probe hidden
/// states plus the probe token sequences in the greedy variant.
template <class T>
TransferCheck verify_transfer_equivalence(std::shared_ptr<const WeightSet<T>> ws,
                                          const std::vector<TokenId>& predecessor_ids, uint32_t predecessor_m,
                                          const std::vector<TokenId>& successor_ids, uint32_t probe_steps,
                                          ProbeMode mode = ProbeMode::Latent);

} // namespace lmas
