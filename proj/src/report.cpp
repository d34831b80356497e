#include "lmas/report.hpp"

#include <fstream>

namespace lmas {

using nlohmann::json;

namespace {

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string cell_to_string(const json& cell) {
    if (cell.is_string()) return cell.get<std::string>();
    return cell.dump();
}

} // namespace

std::string to_csv(const ReportTable& table) {
    std::string out;
    for (size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out.push_back(',');
        out += csv_escape(table.columns[i]);
    }
    out.push_back('\n');
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            out += csv_escape(cell_to_string(row[i]));
        }
        out.push_back('\n');
    }
    return out;
}

json to_json(const ReportTable& table) {
    json doc;
    doc["columns"] = table.columns;
    json rows = json::array();
    for (const auto& row : table.rows) {
        json obj;
        for (size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = row[i];
        rows.push_back(std::move(obj));
    }
    doc["rows"] = std::move(rows);
    if (!table.extra.is_null())
        for (auto& [key, value] : table.extra.items()) doc[key] = value;
    return doc;
}

void emit_report(const ReportTable& table, const std::filesystem::path& json_path,
                 const std::filesystem::path& csv_path) {
    if (!json_path.empty()) {
        std::ofstream os(json_path, std::ios::binary);
        if (!os) throw IoError("cannot write " + json_path.string());
        os << to_json(table).dump(2) << "\n";
        if (!os) throw IoError("write failed: " + json_path.string());
    }
    if (!csv_path.empty()) {
        std::ofstream os(csv_path, std::ios::binary);
        if (!os) throw IoError("cannot write " + csv_path.string());
        os << to_csv(table);
        if (!os) throw IoError("write failed: " + csv_path.string());
    }
}

std::string preview_bytes(const std::string& bytes) {
    std::string out;
    out.reserve(bytes.size());
    for (unsigned char c : bytes) out.push_back(c >= 0x20 && c < 0x7f ? char(c) : '.');
    return out;
}

std::string hex_bytes(const std::string& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xf]);
    }
    return out;
}

json metrics_to_json(const MetricsReport& metrics, bool include_timing) {
    json agents = json::array();
    for (const auto& a : metrics.per_agent) {
        json obj{{"role", a.role},
                 {"decoded_tokens", a.decoded_tokens},
                 {"latent_steps", a.latent_steps},
                 {"flops", a.flops}};
        if (include_timing) obj["wall_time_ms"] = a.wall_time_ms;
        agents.push_back(std::move(obj));
    }
    AgentMetrics t = metrics.totals();
    json totals{{"decoded_tokens", t.decoded_tokens}, {"latent_steps", t.latent_steps}, {"flops", t.flops}};
    if (include_timing) totals["wall_time_ms"] = t.wall_time_ms;
    return json{{"mode", metrics.mode},
                {"config_digest", metrics.config_digest},
                {"agents", std::move(agents)},
                {"totals", std::move(totals)}};
}

json trace_to_json(const GenerationTrace& trace) {
    json steps = json::array();
    for (const auto& rec : trace)
        steps.push_back(json{{"position", rec.position},
                             {"kind", step_kind_name(rec.kind)},
                             {"context_length", rec.context_length},
                             {"flops", rec.flops},
                             {"token", rec.token}});
    return steps;
}

json pipeline_result_to_json(const PipelineResult& result, bool include_timing) {
    json traces = json::array();
    for (const auto& t : result.traces) traces.push_back(trace_to_json(t));
    return json{{"answer_preview", preview_bytes(result.answer_text)},
                {"answer_hex", hex_bytes(result.answer_text)},
                {"metrics", metrics_to_json(result.metrics, include_timing)},
                {"traces", std::move(traces)}};
}

ReportTable sweep_to_table(const SweepReport& report) {
    ReportTable table;
    table.columns = {"question_index", "latent_steps", "answer_preview", "answer_hex",
                     "has_oracle",     "correct",      "decoded_tokens", "total_latent_steps",
                     "flops",          "wall_time_ms", "config_digest"};
    json runs = json::array();
    for (const auto& row : report.rows) {
        AgentMetrics totals = row.result.metrics.totals();
        table.rows.push_back({row.question_index, row.latent_steps, preview_bytes(row.result.answer_text),
                              hex_bytes(row.result.answer_text), row.has_oracle, row.correct,
                              totals.decoded_tokens, totals.latent_steps, totals.flops, totals.wall_time_ms,
                              row.result.metrics.config_digest});
        runs.push_back(json{{"question_index", row.question_index},
                            {"latent_steps", row.latent_steps},
                            {"result", pipeline_result_to_json(row.result)}});
    }
    table.extra = json{{"runs", std::move(runs)}};
    return table;
}

ReportTable cost_model_to_table(const std::vector<CostModelPoint>& points) {
    ReportTable table;
    table.columns = {"hidden_dim", "vocab_size",  "num_layers",      "input_length", "latent_steps",
                     "latent_cost", "text_cost",  "efficiency_factor"};
    for (const auto& p : points)
        table.rows.push_back({p.hidden_dim, p.vocab_size, p.num_layers, p.input_length, p.latent_steps,
                              p.latent_cost, p.text_cost, p.efficiency_factor});
    return table;
}

ReportTable bench_to_table(const std::vector<std::pair<std::string, PipelineResult>>& runs) {
    ReportTable table;
    table.columns = {"mode",  "answer_preview", "answer_hex",   "decoded_tokens",
                     "latent_steps", "flops",  "wall_time_ms", "config_digest"};
    json details = json::array();
    for (const auto& [mode, result] : runs) {
        AgentMetrics totals = result.metrics.totals();
        table.rows.push_back({mode, preview_bytes(result.answer_text), hex_bytes(result.answer_text),
                              totals.decoded_tokens, totals.latent_steps, totals.flops, totals.wall_time_ms,
                              result.metrics.config_digest});
        details.push_back(json{{"mode", mode}, {"result", pipeline_result_to_json(result)}});
    }
    table.extra = json{{"details", std::move(details)}};
    return table;
}

} // namespace lmas
