#include "lmas/config.hpp"

#include <bit>
#include <cstring>

namespace lmas {

namespace {

void fnv_mix(uint64_t& h, const void* p, size_t n) {
    const unsigned char* bytes = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
}

} // namespace

uint64_t ModelConfig::fingerprint() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    fnv_mix(h, &num_layers, sizeof(num_layers));
    fnv_mix(h, &hidden_dim, sizeof(hidden_dim));
    fnv_mix(h, &num_heads, sizeof(num_heads));
    fnv_mix(h, &head_dim, sizeof(head_dim));
    fnv_mix(h, &ffn_dim, sizeof(ffn_dim));
    fnv_mix(h, &vocab_size, sizeof(vocab_size));
    fnv_mix(h, &max_positions, sizeof(max_positions));
    uint64_t eps_bits = std::bit_cast<uint64_t>(norm_epsilon);
    uint64_t rope_bits = std::bit_cast<uint64_t>(rope_base);
    fnv_mix(h, &eps_bits, sizeof(eps_bits));
    fnv_mix(h, &rope_bits, sizeof(rope_bits));
    uint8_t tying = weight_tying ? 1 : 0;
    uint8_t prec = static_cast<uint8_t>(precision);
    fnv_mix(h, &tying, sizeof(tying));
    fnv_mix(h, &prec, sizeof(prec));
    return h;
}

const char* step_kind_name(StepKind k) {
    switch (k) {
        case StepKind::Prompt: return "prompt";
        case StepKind::Latent: return "latent";
        case StepKind::Decode: return "decode";
    }
    return "unknown";
}

} // namespace lmas
