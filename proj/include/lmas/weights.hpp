#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <variant>
#include <vector>

#include "lmas/config.hpp"
#include "lmas/matrix.hpp"

namespace lmas {

template <class T>
struct LayerWeights {
    Matrix<T> attn_q, attn_k, attn_v, attn_out; // hidden_dim x hidden_dim
    Matrix<T> ffn_up;                           // hidden_dim x ffn_dim
    Matrix<T> ffn_down;                         // ffn_dim x hidden_dim
    std::vector<T> attn_norm_gain, ffn_norm_gain;

    bool operator==(const LayerWeights&) const = default;
};

/// All learned matrices of one agent backbone. Immutable once built and
/// shared across contexts via shared_ptr<const WeightSet>.
template <class T>
struct WeightSet {
    ModelConfig config;
    Matrix<T> tok_embed; // vocab_size x hidden_dim, rows are input embeddings
    Matrix<T> lm_head;   // vocab_size x hidden_dim, logits = h . row_i
    std::vector<LayerWeights<T>> layers;
    std::vector<T> final_norm_gain;

    bool operator==(const WeightSet&) const = default;
};

using WeightSetF = WeightSet<float>;
using WeightSetD = WeightSet<double>;

/// Deterministic scaled-Gaussian initialization (scale 1/sqrt(hidden_dim)).
/// The same (config, seed) pair always produces the same weights; draws are
/// generated in double and cast, so f32/f64 sets from one seed correspond
/// entrywise.
template <class T>
WeightSet<T> init_weights(const ModelConfig& config, uint64_t seed);

template <class T>
void save_weights(const WeightSet<T>& ws, const std::filesystem::path& path);

using AnyWeights = std::variant<std::shared_ptr<const WeightSetF>, std::shared_ptr<const WeightSetD>>;

/// Loads a weight file in the "LMAS" binary format; the element type comes
/// from the precision tag in the header. Throws FormatError on bad
/// magic/version or value-level violations (non-finite entries, duplicate
/// embedding rows), ShapeError on header/tensor length mismatches.
AnyWeights load_weights(const std::filesystem::path& path);

template <class T>
std::shared_ptr<const WeightSet<T>> load_weights_as(const std::filesystem::path& path);

/// Every row of tok_embed mutually distinct, likewise lm_head.
template <class T>
bool embedding_rows_distinct(const WeightSet<T>& ws);

} // namespace lmas
