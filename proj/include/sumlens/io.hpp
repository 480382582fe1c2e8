#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sumlens/ablation_map.hpp"
#include "sumlens/analysis.hpp"
#include "sumlens/attribution.hpp"
#include "sumlens/eval_protocol.hpp"

namespace sumlens {

using Json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "0.1.0";

// First record of every JSONL output.
Json header_record(std::string_view command, std::string_view config_hash);
// "# sumlens <version> <command> config=<hash>"
std::string header_comment(std::string_view command, std::string_view config_hash);

Json to_json(const DecisionRecord& r);
DecisionRecord decision_from_json(const Json& j);
// −∞ scores (two-stage exclusions) are written as null.
Json to_json(const AttributionVector& a);
AttributionVector attribution_from_json(const Json& j);
Json to_json(const FusionRecord& r);
Json to_json(const OverlapHit& h);
Json to_json(const MapSummary& s);

std::string read_text_file(const std::filesystem::path& path);
// Writes through a temporary file; missing parent directories are created.
void write_text_file(const std::filesystem::path& path, std::string_view content);

std::string to_jsonl(const Json& header, std::span<const Json> rows);
// Parses every line; header records are dropped. Malformed lines → DataError.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

struct CorpusRecord {
  std::string id;
  std::string text;
  std::optional<std::string> summary;
};

// JSONL with {"id","text"[,"summary"]} when the first non-blank line opens an
// object, else one document per non-blank line with ids "line-<n>".
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path);
std::vector<CorpusRecord> parse_corpus(std::string_view content, const std::string& origin);

// Scatter of (x, y) coloured by region over the region boxes.
std::string map_scatter_svg(std::span<const DecisionRecord> records, std::span<const RegionBox> boxes,
                            std::string_view comment);
// One panel per setting, mean NLL against budget per method.
std::string curves_svg(std::span<const EvalCurve> curves, std::string_view comment);

}  // namespace sumlens
