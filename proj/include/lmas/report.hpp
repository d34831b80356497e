#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmas/analysis.hpp"
#include "lmas/pipeline.hpp"

namespace lmas {

/// Flat table with a stable column order (CSV) plus an arbitrary JSON
/// payload for full-fidelity output. Cells are JSON scalars.
struct ReportTable {
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;
    nlohmann::json extra; // merged into the JSON document
};

std::string to_csv(const ReportTable& table);
nlohmann::json to_json(const ReportTable& table);

/// Writes table.json / table.csv next to each other; either path may be
/// empty to skip that format. Throws IoError on failure.
void emit_report(const ReportTable& table, const std::filesystem::path& json_path,
                 const std::filesystem::path& csv_path);

/// Printable-ASCII preview of raw answer bytes ('.' elsewhere) and a
/// lossless lowercase-hex rendering; reports carry both.
std::string preview_bytes(const std::string& bytes);
std::string hex_bytes(const std::string& bytes);

nlohmann::json metrics_to_json(const MetricsReport& metrics, bool include_timing = true);
nlohmann::json trace_to_json(const GenerationTrace& trace);
nlohmann::json pipeline_result_to_json(const PipelineResult& result, bool include_timing = true);

ReportTable sweep_to_table(const SweepReport& report);
ReportTable cost_model_to_table(const std::vector<CostModelPoint>& points);

/// Side-by-side latent/text rows for the bench subcommand.
ReportTable bench_to_table(const std::vector<std::pair<std::string, PipelineResult>>& runs);

} // namespace lmas
