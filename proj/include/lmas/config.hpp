#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmas/errors.hpp"

namespace lmas {

enum class Precision : uint8_t { F32 = 0, F64 = 1 };

template <class T>
constexpr Precision precision_of();
template <>
constexpr Precision precision_of<float>() {
    return Precision::F32;
}
template <>
constexpr Precision precision_of<double>() {
    return Precision::F64;
}

/// Architecture hyperparameters of one agent backbone.
struct ModelConfig {
    uint32_t num_layers = 2;
    uint32_t hidden_dim = 32;
    uint32_t num_heads = 4;
    uint32_t head_dim = 8;
    uint32_t ffn_dim = 64;
    uint32_t vocab_size = 260;
    uint32_t max_positions = 2048;
    double norm_epsilon = 1e-6;
    double rope_base = 10000.0;
    bool weight_tying = false;
    Precision precision = Precision::F32;

    void validate() const {
        if (hidden_dim != num_heads * head_dim)
            throw InvalidArgument("hidden_dim must equal num_heads * head_dim");
        if (vocab_size < 2) throw InvalidArgument("vocab_size must be >= 2");
        if (num_layers < 1) throw InvalidArgument("num_layers must be >= 1");
        if (max_positions < 1) throw InvalidArgument("max_positions must be >= 1");
    }

    /// FNV-1a digest over all fields; memories are only consumable by
    /// contexts whose config hashes identically.
    uint64_t fingerprint() const;

    bool operator==(const ModelConfig&) const = default;
};

enum class StepKind : uint8_t { Prompt = 0, Latent = 1, Decode = 2 };

const char* step_kind_name(StepKind k);

/// One forward step as recorded by the instrumentation. `flops` counts the
/// multiply-accumulates of the step body only; the output head is accounted
/// separately at decode time.
struct StepRecord {
    uint64_t position = 0;
    StepKind kind = StepKind::Prompt;
    uint64_t context_length = 0;
    uint64_t flops = 0;
    int32_t token = -1; // decoded token id, -1 for non-decode steps
};

using GenerationTrace = std::vector<StepRecord>;

} // namespace lmas
