#include "lmas/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace lmas {

using nlohmann::json;

namespace {
constexpr double kLn3 = 1.0986122886681098;
}

double expressiveness_factor(uint64_t hidden_dim, uint64_t vocab) {
    if (vocab <= 1) throw BadVocab("vocab must be > 1");
    return double(hidden_dim) * kLn3 / std::log(double(vocab));
}

uint64_t min_text_length(uint64_t hidden_dim, uint64_t m, uint64_t vocab) {
    if (vocab <= 1) throw BadVocab("vocab must be > 1");
    if (m == 0) return 0;
    const double exact = double(hidden_dim) * double(m) * kLn3 / std::log(double(vocab));
    // Guard against representing an exactly-integral bound as the next
    // integer up (e.g. 24*ln3/ln9 must give 12, not 13).
    return uint64_t(std::ceil(exact - 1e-9));
}

uint64_t latent_agent_cost(const ModelConfig& cfg, uint64_t t, uint64_t m) {
    if (t < 1) throw InvalidArgument("input length t must be >= 1");
    uint64_t total = 0;
    for (uint64_t j = 1; j <= m; ++j) total += flop_count_step(cfg, t + j, false);
    return total;
}

uint64_t text_agent_cost(const ModelConfig& cfg, uint64_t t, uint64_t m) {
    if (t < 1) throw InvalidArgument("input length t must be >= 1");
    const uint64_t steps = min_text_length(cfg.hidden_dim, 1, cfg.vocab_size) * m;
    uint64_t total = 0;
    for (uint64_t j = 1; j <= steps; ++j) total += flop_count_step(cfg, t + j, true);
    return total;
}

CostModelPoint cost_model_point(const ModelConfig& cfg, uint64_t t, uint64_t m) {
    CostModelPoint p;
    p.hidden_dim = cfg.hidden_dim;
    p.vocab_size = cfg.vocab_size;
    p.num_layers = cfg.num_layers;
    p.input_length = t;
    p.latent_steps = m;
    p.latent_cost = latent_agent_cost(cfg, t, m);
    p.text_cost = text_agent_cost(cfg, t, m);
    p.efficiency_factor = p.latent_cost ? double(p.text_cost) / double(p.latent_cost) : 0.0;
    return p;
}

SweepReport run_m_sweep(const PipelineFile& file, const std::vector<SweepTask>& questions,
                        const std::vector<uint32_t>& m_values) {
    if (questions.empty() || m_values.empty()) throw InvalidArgument("sweep needs questions and m values");

    auto trim = [](const std::string& s) {
        size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return std::string();
        size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    };

    SweepReport report;
    for (size_t qi = 0; qi < questions.size(); ++qi) {
        for (uint32_t m : m_values) {
            PipelineFile run_file = file;
            for (auto& agent : run_file.agents) agent.latent_steps = m;
            SweepRow row;
            row.question_index = qi;
            row.latent_steps = m;
            row.result = run_pipeline(run_file, questions[qi].question, RunMode::Latent);
            row.has_oracle = !questions[qi].expected_answer.empty();
            row.correct = row.has_oracle && trim(row.result.answer_text) == trim(questions[qi].expected_answer);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

std::vector<SweepTask> load_sweep_tasks(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::exception& e) {
        throw FormatError("bad questions file " + path.string() + ": " + e.what());
    }
    std::vector<SweepTask> tasks;
    for (const json& item : doc) {
        SweepTask t;
        if (item.is_string()) {
            t.question = item.get<std::string>();
        } else {
            t.question = item.at("question").get<std::string>();
            t.expected_answer = item.value("answer", "");
        }
        tasks.push_back(std::move(t));
    }
    return tasks;
}

} // namespace lmas
