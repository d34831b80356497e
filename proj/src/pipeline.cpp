#include "lmas/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <future>

#include <json.hpp>

namespace lmas {

using nlohmann::json;

AgentMetrics MetricsReport::totals() const {
    AgentMetrics t;
    t.role = "total";
    for (const auto& a : per_agent) {
        t.decoded_tokens += a.decoded_tokens;
        t.latent_steps += a.latent_steps;
        t.flops += a.flops;
        t.wall_time_ms += a.wall_time_ms;
    }
    return t;
}

template <class T>
void PipelineSpec<T>::validate() const {
    if (agents.empty()) throw InvalidArgument("pipeline needs at least one agent");
    size_t finals = 0;
    for (const auto& a : agents) finals += a.is_final ? 1 : 0;
    if (finals != 1) throw InvalidArgument("pipeline needs exactly one final agent");
    if (!agents.back().is_final) throw InvalidArgument("the final agent must be last");
    for (size_t i = 0; i + 1 < agents.size(); ++i)
        if (agents[i].decode_budget != 0)
            throw InvalidArgument("non-final agent '" + agents[i].role_name + "' must have decode_budget 0");
    if (!weights) throw InvalidArgument("pipeline has no weights");
    if (!alignment) throw InvalidArgument("pipeline has no alignment operator");
    if (weights->config.vocab_size < tokenizer.vocab_size())
        throw InvalidArgument("model vocab is smaller than the tokenizer vocab");
}

std::vector<TokenId> render_prompt(const AgentSpec& spec, const Tokenizer& tokenizer,
                                   std::string_view question) {
    const std::string placeholder = "{question}";
    size_t first = spec.prompt_template.find(placeholder);
    if (first == std::string::npos)
        throw BadTemplate("template for '" + spec.role_name + "' has no {question} placeholder");
    if (spec.prompt_template.find(placeholder, first + 1) != std::string::npos)
        throw BadTemplate("template for '" + spec.role_name + "' has multiple {question} placeholders");

    std::string filled = spec.prompt_template;
    filled.replace(first, placeholder.size(), question);

    std::vector<TokenId> ids;
    ids.push_back(Tokenizer::kRoleOpen);
    auto role_ids = tokenizer.tokenize(spec.role_name);
    ids.insert(ids.end(), role_ids.begin(), role_ids.end());
    ids.push_back(Tokenizer::kRoleClose);
    auto body = tokenizer.tokenize(filled);
    ids.insert(ids.end(), body.begin(), body.end());
    return ids;
}

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Decode loop of the final (or text-baseline) agent: up to `budget` tokens,
// stopping at EOS. The sampled token is fed back through the model only
// while more output is wanted.
template <class T>
std::vector<TokenId> decode_text(AgentContext<T>& ctx, const SamplingParams& sampling, uint32_t budget,
                                 SamplerRng& rng) {
    std::vector<TokenId> out;
    while (out.size() < budget) {
        TokenId tok = decode_token<T>(ctx, ctx.last_hidden, sampling.temperature, sampling.top_p, rng);
        if (tok == Tokenizer::kEos) break;
        out.push_back(tok);
        if (out.size() == budget) break;
        Matrix<T> emb = embed_tokens(ctx, {tok});
        forward_step<T>(ctx, emb.row(0), StepKind::Decode);
        ctx.trace.back().token = tok;
    }
    return out;
}

template <class T>
std::vector<TokenId> prompt_ids(const PipelineSpec<T>& pipeline, const AgentSpec& agent,
                                std::string_view question, bool fresh_sequence) {
    std::vector<TokenId> ids;
    if (fresh_sequence) ids.push_back(Tokenizer::kBos); // exactly one BOS per position line
    auto rendered = render_prompt(agent, pipeline.tokenizer, question);
    ids.insert(ids.end(), rendered.begin(), rendered.end());
    return ids;
}

} // namespace

template <class T>
PipelineResult run_sequential(const PipelineSpec<T>& pipeline, std::string_view question) {
    pipeline.validate();
    if (pipeline.topology != Topology::Sequential) throw InvalidArgument("pipeline topology is not sequential");

    PipelineResult result;
    result.metrics.mode = "latent";
    result.metrics.config_digest = pipeline.weights->config.fingerprint();
    SamplerRng rng(pipeline.sampling.seed);

    LatentMemory<T> carried;
    bool have_memory = false;
    for (const auto& agent : pipeline.agents) {
        auto t0 = std::chrono::steady_clock::now();
        AgentContext<T> ctx(pipeline.weights);
        if (have_memory) prepend_memory<T>(ctx, {carried});
        prefill(ctx, prompt_ids(pipeline, agent, question, !have_memory));

        AgentMetrics am;
        am.role = agent.role_name;
        if (!agent.is_final) {
            generate_latent(ctx, *pipeline.alignment, LatentRunConfig{agent.latent_steps, true});
            carried = extract_memory(ctx, agent.role_name);
            have_memory = true;
            am.latent_steps = agent.latent_steps;
        } else {
            std::vector<TokenId> decoded = decode_text(ctx, pipeline.sampling, agent.decode_budget, rng);
            am.decoded_tokens = decoded.size();
            result.answer_text = pipeline.tokenizer.detokenize(decoded);
        }
        am.flops = ctx.flop_counter;
        am.wall_time_ms = ms_since(t0);
        result.metrics.per_agent.push_back(std::move(am));
        result.traces.push_back(std::move(ctx.trace));
    }
    return result;
}

template <class T>
PipelineResult run_hierarchical(const PipelineSpec<T>& pipeline, std::string_view question,
                                bool parallel_experts) {
    pipeline.validate();
    if (pipeline.topology != Topology::Hierarchical)
        throw InvalidArgument("pipeline topology is not hierarchical");

    struct ExpertOutcome {
        LatentMemory<T> memory;
        AgentMetrics metrics;
        GenerationTrace trace;
    };
    auto run_expert = [&](const AgentSpec& agent) {
        auto t0 = std::chrono::steady_clock::now();
        AgentContext<T> ctx(pipeline.weights);
        prefill(ctx, prompt_ids(pipeline, agent, question, true));
        generate_latent(ctx, *pipeline.alignment, LatentRunConfig{agent.latent_steps, true});
        ExpertOutcome out;
        out.memory = extract_memory(ctx, agent.role_name);
        out.metrics = AgentMetrics{agent.role_name, 0, agent.latent_steps, ctx.flop_counter, ms_since(t0)};
        out.trace = std::move(ctx.trace);
        return out;
    };

    const size_t num_experts = pipeline.agents.size() - 1;
    std::vector<ExpertOutcome> outcomes(num_experts);
    if (parallel_experts) {
        std::vector<std::future<ExpertOutcome>> futures;
        futures.reserve(num_experts);
        for (size_t i = 0; i < num_experts; ++i)
            futures.push_back(std::async(std::launch::async, run_expert, pipeline.agents[i]));
        for (size_t i = 0; i < num_experts; ++i) outcomes[i] = futures[i].get();
    } else {
        for (size_t i = 0; i < num_experts; ++i) outcomes[i] = run_expert(pipeline.agents[i]);
    }

    PipelineResult result;
    result.metrics.mode = "latent";
    result.metrics.config_digest = pipeline.weights->config.fingerprint();
    std::vector<LatentMemory<T>> memories;
    memories.reserve(num_experts);
    for (auto& out : outcomes) {
        result.metrics.per_agent.push_back(std::move(out.metrics));
        result.traces.push_back(std::move(out.trace));
        memories.push_back(std::move(out.memory));
    }

    const AgentSpec& final_agent = pipeline.agents.back();
    auto t0 = std::chrono::steady_clock::now();
    AgentContext<T> ctx(pipeline.weights);
    prepend_memory(ctx, memories);
    prefill(ctx, prompt_ids(pipeline, final_agent, question, num_experts == 0));
    SamplerRng rng(pipeline.sampling.seed);
    std::vector<TokenId> decoded = decode_text(ctx, pipeline.sampling, final_agent.decode_budget, rng);
    result.answer_text = pipeline.tokenizer.detokenize(decoded);
    result.metrics.per_agent.push_back(
        AgentMetrics{final_agent.role_name, decoded.size(), 0, ctx.flop_counter, ms_since(t0)});
    result.traces.push_back(std::move(ctx.trace));
    return result;
}

template <class T>
PipelineResult run_text_baseline(const PipelineSpec<T>& pipeline, std::string_view question,
                                 uint32_t text_budget) {
    if (pipeline.agents.empty()) throw InvalidArgument("pipeline needs at least one agent");
    auto budget_of = [&](const AgentSpec& a) { return text_budget > 0 ? text_budget : a.decode_budget; };
    for (const auto& a : pipeline.agents)
        if (budget_of(a) == 0)
            throw InvalidArgument("text baseline requires a positive decode budget for '" + a.role_name + "'");

    PipelineResult result;
    result.metrics.mode = "text";
    result.metrics.config_digest = pipeline.weights->config.fingerprint();
    SamplerRng rng(pipeline.sampling.seed);

    std::vector<std::string> expert_texts; // hierarchical aggregation
    std::string carried_text;              // sequential hand-off
    for (size_t i = 0; i < pipeline.agents.size(); ++i) {
        const AgentSpec& agent = pipeline.agents[i];
        const bool is_last = i + 1 == pipeline.agents.size();
        auto t0 = std::chrono::steady_clock::now();

        AgentContext<T> ctx(pipeline.weights);
        std::vector<TokenId> ids = prompt_ids(pipeline, agent, question, true);
        if (pipeline.topology == Topology::Sequential) {
            if (!carried_text.empty()) {
                auto extra = pipeline.tokenizer.tokenize(carried_text);
                ids.insert(ids.end(), extra.begin(), extra.end());
            }
        } else if (is_last) {
            for (const auto& text : expert_texts) {
                auto extra = pipeline.tokenizer.tokenize(text);
                ids.insert(ids.end(), extra.begin(), extra.end());
            }
        }
        prefill(ctx, ids);
        std::vector<TokenId> decoded = decode_text(ctx, pipeline.sampling, budget_of(agent), rng);
        std::string text = pipeline.tokenizer.detokenize(decoded);

        if (pipeline.topology == Topology::Sequential) carried_text = text;
        else expert_texts.push_back(text);
        if (is_last) result.answer_text = text;

        result.metrics.per_agent.push_back(
            AgentMetrics{agent.role_name, decoded.size(), 0, ctx.flop_counter, ms_since(t0)});
        result.traces.push_back(std::move(ctx.trace));
    }
    return result;
}

// ---- pipeline files ----

namespace {

Precision parse_precision(const std::string& s) {
    if (s == "f32") return Precision::F32;
    if (s == "f64") return Precision::F64;
    throw InvalidArgument("unknown precision '" + s + "' (expected f32 or f64)");
}

Topology parse_topology(const std::string& s) {
    if (s == "sequential") return Topology::Sequential;
    if (s == "hierarchical") return Topology::Hierarchical;
    throw InvalidArgument("unknown topology '" + s + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

} // namespace

PipelineFile load_pipeline_file(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw FormatError("bad pipeline file " + path.string() + ": " + e.what());
    }

    PipelineFile file;
    try {
        file.topology = parse_topology(doc.at("topology").get<std::string>());
        if (doc.contains("model")) {
            const json& m = doc["model"];
            ModelConfig& c = file.config;
            c.num_layers = m.value("layers", c.num_layers);
            c.hidden_dim = m.value("hidden_dim", c.hidden_dim);
            c.num_heads = m.value("heads", c.num_heads);
            c.head_dim = m.value("head_dim", c.hidden_dim / c.num_heads);
            c.ffn_dim = m.value("ffn_dim", c.ffn_dim);
            c.vocab_size = m.value("vocab", c.vocab_size);
            c.max_positions = m.value("max_positions", c.max_positions);
            c.norm_epsilon = m.value("norm_epsilon", c.norm_epsilon);
            c.rope_base = m.value("rope_base", c.rope_base);
            c.weight_tying = m.value("weight_tying", c.weight_tying);
            if (m.contains("precision")) c.precision = parse_precision(m["precision"].get<std::string>());
            file.weights_seed = m.value("seed", file.weights_seed);
            if (m.contains("weights_file")) {
                auto p = std::filesystem::path(m["weights_file"].get<std::string>());
                file.weights_path = (p.is_absolute() ? p : path.parent_path() / p).string();
            }
        }
        if (doc.contains("alignment")) file.ridge_lambda = doc["alignment"].value("lambda", 0.0);
        if (doc.contains("sampling")) {
            const json& s = doc["sampling"];
            file.sampling.temperature = s.value("temperature", file.sampling.temperature);
            file.sampling.top_p = s.value("top_p", file.sampling.top_p);
            file.sampling.seed = s.value("seed", file.sampling.seed);
        }
        for (const json& a : doc.at("agents")) {
            AgentSpec spec;
            spec.role_name = a.at("role").get<std::string>();
            if (a.contains("template_file")) {
                auto p = std::filesystem::path(a["template_file"].get<std::string>());
                spec.prompt_template = read_text_file(p.is_absolute() ? p : path.parent_path() / p);
            } else {
                spec.prompt_template = a.at("template").get<std::string>();
            }
            spec.latent_steps = a.value("latent_steps", 0u);
            spec.is_final = a.value("final", false);
            spec.decode_budget = a.value("decode_budget", 0u);
            file.agents.push_back(std::move(spec));
        }
    } catch (const json::exception& e) {
        throw FormatError("bad pipeline file " + path.string() + ": " + e.what());
    }
    file.config.validate();
    return file;
}

template <class T>
PipelineSpec<T> materialize_pipeline(const PipelineFile& file) {
    PipelineSpec<T> spec;
    spec.topology = file.topology;
    spec.agents = file.agents;
    spec.sampling = file.sampling;
    if (!file.weights_path.empty()) {
        spec.weights = load_weights_as<T>(file.weights_path);
    } else {
        spec.weights = std::make_shared<WeightSet<T>>(init_weights<T>(file.config, file.weights_seed));
    }
    spec.alignment =
        std::make_shared<AlignmentOperator<T>>(solve_alignment<T>(*spec.weights, file.ridge_lambda));
    return spec;
}

PipelineResult run_pipeline(const PipelineFile& file, std::string_view question, RunMode mode,
                            uint32_t text_budget) {
    Precision prec = file.config.precision;
    if (!file.weights_path.empty()) {
        AnyWeights any = load_weights(file.weights_path);
        prec = std::holds_alternative<std::shared_ptr<const WeightSetF>>(any) ? Precision::F32 : Precision::F64;
    }
    auto run = [&]<class T>() {
        PipelineSpec<T> spec = materialize_pipeline<T>(file);
        if (mode == RunMode::Text) return run_text_baseline(spec, question, text_budget);
        return spec.topology == Topology::Sequential ? run_sequential(spec, question)
                                                     : run_hierarchical(spec, question);
    };
    return prec == Precision::F32 ? run.operator()<float>() : run.operator()<double>();
}

template void PipelineSpec<float>::validate() const;
template void PipelineSpec<double>::validate() const;
template PipelineResult run_sequential<float>(const PipelineSpec<float>&, std::string_view);
template PipelineResult run_sequential<double>(const PipelineSpec<double>&, std::string_view);
template PipelineResult run_hierarchical<float>(const PipelineSpec<float>&, std::string_view, bool);
template PipelineResult run_hierarchical<double>(const PipelineSpec<double>&, std::string_view, bool);
template PipelineResult run_text_baseline<float>(const PipelineSpec<float>&, std::string_view, uint32_t);
template PipelineResult run_text_baseline<double>(const PipelineSpec<double>&, std::string_view, uint32_t);
template PipelineSpec<float> materialize_pipeline<float>(const PipelineFile&);
template PipelineSpec<double> materialize_pipeline<double>(const PipelineFile&);

} // namespace lmas
