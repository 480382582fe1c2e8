#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sumlens/ablation_map.hpp"
#include "sumlens/eval_protocol.hpp"
#include "sumlens/io.hpp"

namespace sumlens {

enum class BackendFamily { TOY, ORACLE, REMOTE };

// Toy: checkpoint paths. Oracle: scripted-oracle JSON files plus a vocabulary
// file. Remote: endpoint URLs plus a vocabulary file. Without `lm` the
// summarizer source also serves LM∅.
struct BackendSpec {
  BackendFamily family = BackendFamily::TOY;
  std::string lm;
  std::string summarizer;
  std::string vocab;
  std::size_t timeout_ms = 5000;
};

struct RunConfig {
  std::optional<BackendSpec> backend;
  std::string corpus;
  std::string output_dir = "out";
  std::vector<RegionBox> boxes = default_region_boxes();
  double ctx_hd_threshold = 0.5;
  double fusion_gain = 0.5;
  std::map<EvalKind, std::vector<std::size_t>> budgets;  // unset kinds use the defaults
  std::size_t context_window = 1;
  std::uint64_t seed = 0;
  std::size_t ig_steps = 50;
  std::size_t max_summary_len = 64;  // greedy decoding when a document has no summary
  std::optional<std::size_t> jobs;

  EvalSetting setting(EvalKind kind) const;
  void validate() const;
};

// Relative paths resolve against `base`. Unknown keys are rejected.
RunConfig parse_run_config(const Json& j, const std::filesystem::path& base = {});
RunConfig load_run_config(const std::filesystem::path& path);
Json to_json(const RunConfig& cfg);
// hex FNV-1a of the canonical JSON form.
std::string config_hash(const RunConfig& cfg);

// --jobs, then SUMLENS_JOBS, then the config file, then hardware concurrency.
std::size_t resolve_jobs(std::optional<std::size_t> flag, const RunConfig& cfg);

struct LoadedBackends {
  std::shared_ptr<const Backend> lm;
  std::shared_ptr<const Backend> summarizer;
  const Vocab& vocab() const { return summarizer->vocab(); }
  MapBackends map() const { return {lm.get(), summarizer.get(), summarizer.get()}; }
};

// Checks that every path exists and the vocabularies agree.
LoadedBackends load_backends(const BackendSpec& spec);

// Tokenizes documents; a missing summary is greedy-decoded by the summarizer.
std::vector<SummaryItem> load_summary_items(std::span<const CorpusRecord> records, const Backend& summarizer,
                                            std::size_t max_summary_len);

}  // namespace sumlens
