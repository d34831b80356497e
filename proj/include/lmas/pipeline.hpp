#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "lmas/alignment.hpp"
#include "lmas/memory.hpp"
#include "lmas/model.hpp"
#include "lmas/tokenizer.hpp"

namespace lmas {

enum class Topology { Sequential, Hierarchical };

struct SamplingParams {
    double temperature = 0.6;
    double top_p = 0.95;
    uint64_t seed = 0;
};

struct AgentSpec {
    std::string role_name;
    std::string prompt_template; // must contain "{question}" exactly once
    uint32_t latent_steps = 0;
    bool is_final = false;
    uint32_t decode_budget = 0; // max output tokens; final agent only in latent runs
};

/// One decoded step of an agent plus bookkeeping.
struct AgentMetrics {
    std::string role;
    uint64_t decoded_tokens = 0;
    uint64_t latent_steps = 0;
    uint64_t flops = 0;
    double wall_time_ms = 0;
};

struct MetricsReport {
    std::string mode; // "latent" or "text"
    uint64_t config_digest = 0;
    std::vector<AgentMetrics> per_agent;

    AgentMetrics totals() const;
};

struct PipelineResult {
    std::string answer_text; // the final agent's decoded bytes
    MetricsReport metrics;
    std::vector<GenerationTrace> traces; // one per agent, in pipeline order
};

template <class T>
struct PipelineSpec {
    Topology topology = Topology::Sequential;
    std::vector<AgentSpec> agents;
    std::shared_ptr<const WeightSet<T>> weights;
    std::shared_ptr<const AlignmentOperator<T>> alignment;
    SamplingParams sampling;
    Tokenizer tokenizer;

    void validate() const;
};

using PipelineSpecF = PipelineSpec<float>;
using PipelineSpecD = PipelineSpec<double>;

/// Substitutes the question into the template and wraps the result with the
/// tokenizer's role-separator ids. No beginning-of-sequence token here; the
/// runners add one only when the context carries no prepended memory.
std::vector<TokenId> render_prompt(const AgentSpec& spec, const Tokenizer& tokenizer, std::string_view question);

/// Chain of agents, each consuming its predecessor's working memory; all
/// intermediate agents reason purely in latent space and only the final
/// agent decodes text.
template <class T>
PipelineResult run_sequential(const PipelineSpec<T>& pipeline, std::string_view question);

/// Independent experts from fresh contexts (optionally run on parallel
/// threads; the result is identical either way), aggregated by the final
/// agent which prepends all expert memories in declared order.
template <class T>
PipelineResult run_hierarchical(const PipelineSpec<T>& pipeline, std::string_view question,
                                bool parallel_experts = true);

/// Text-based baseline on the same pipeline: every agent decodes text and
/// that text is appended into the next agent's prompt. `text_budget`
/// replaces every agent's decode budget (0 keeps the per-agent values).
template <class T>
PipelineResult run_text_baseline(const PipelineSpec<T>& pipeline, std::string_view question,
                                 uint32_t text_budget = 0);

// ---- pipeline configuration files ----

/// Self-describing JSON pipeline description; the model is given either as a
/// weight file path or as (config, seed) to initialize on the fly.
struct PipelineFile {
    Topology topology = Topology::Sequential;
    ModelConfig config;
    uint64_t weights_seed = 7;
    std::string weights_path; // when set, overrides config/seed
    double ridge_lambda = 0;  // <= 0 selects the default heuristic
    SamplingParams sampling;
    std::vector<AgentSpec> agents;
};

PipelineFile load_pipeline_file(const std::filesystem::path& path);

template <class T>
PipelineSpec<T> materialize_pipeline(const PipelineFile& file);

enum class RunMode { Latent, Text };

/// Loads/initializes weights per the file, solves the alignment operator
/// once, and runs the requested mode. Dispatches on the config's precision.
PipelineResult run_pipeline(const PipelineFile& file, std::string_view question, RunMode mode,
                            uint32_t text_budget = 0);

} // namespace lmas
