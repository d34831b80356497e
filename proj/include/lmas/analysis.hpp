#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmas/pipeline.hpp"

namespace lmas {

/// Per-step information advantage of a latent thought over a text token:
/// hidden_dim * ln(3) / ln(vocab).
double expressiveness_factor(uint64_t hidden_dim, uint64_t vocab);

/// Minimum number of text tokens able to carry m latent steps losslessly:
/// ceil(hidden_dim * m * ln(3) / ln(vocab)).
uint64_t min_text_length(uint64_t hidden_dim, uint64_t m, uint64_t vocab);

/// Exact MAC count of m latent steps following a prompt of length t: the sum
/// of flop_count_step at attended lengths t+1 .. t+m, output head excluded.
uint64_t latent_agent_cost(const ModelConfig& cfg, uint64_t t, uint64_t m);

/// Exact MAC count of the text generation that matches the expressiveness of
/// m latent steps: min_text_length(d_h, 1, vocab) * m decode steps, output
/// head included.
uint64_t text_agent_cost(const ModelConfig& cfg, uint64_t t, uint64_t m);

struct CostModelPoint {
    uint32_t hidden_dim = 0;
    uint32_t vocab_size = 0;
    uint32_t num_layers = 0;
    uint64_t input_length = 0;  // t
    uint64_t latent_steps = 0;  // m
    uint64_t latent_cost = 0;
    uint64_t text_cost = 0;
    double efficiency_factor = 0; // text_cost / latent_cost
};

CostModelPoint cost_model_point(const ModelConfig& cfg, uint64_t t, uint64_t m);

// ---- m-sweep ----

struct SweepTask {
    std::string question;
    std::string expected_answer; // empty = no exact-match oracle configured
};

struct SweepRow {
    size_t question_index = 0;
    uint32_t latent_steps = 0;
    PipelineResult result;
    bool has_oracle = false;
    bool correct = false;
};

struct SweepReport {
    std::vector<SweepRow> rows; // |questions| x |m_values|, question-major
};

inline const std::vector<uint32_t> kDefaultSweepSteps{0, 10, 20, 40, 80};

/// Runs the latent pipeline once per (question, m) with every agent's latent
/// budget overridden to m.
SweepReport run_m_sweep(const PipelineFile& file, const std::vector<SweepTask>& questions,
                        const std::vector<uint32_t>& m_values = kDefaultSweepSteps);

/// Loads sweep tasks from a JSON array of {"question": ..., "answer": ...}.
std::vector<SweepTask> load_sweep_tasks(const std::filesystem::path& path);

} // namespace lmas
