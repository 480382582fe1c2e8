#include "sumlens/run_config.hpp"

#include <cstdlib>
#include <set>

#include "sumlens/checkpoint.hpp"
#include "sumlens/error.hpp"
#include "sumlens/parallel.hpp"
#include "sumlens/remote.hpp"
#include "sumlens/scripted_oracle.hpp"
#include "sumlens/trainer.hpp"

namespace sumlens {

namespace {

std::string_view family_name(BackendFamily f) {
  switch (f) {
    case BackendFamily::TOY: return "toy";
    case BackendFamily::ORACLE: return "oracle";
    case BackendFamily::REMOTE: return "remote";
  }
  return "toy";
}

void reject_unknown(const Json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (auto k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is empty");
  if (!std::filesystem::is_regular_file(path)) throw PathError(std::string(what) + " not found: " + path);
}

}  // namespace

EvalSetting RunConfig::setting(EvalKind kind) const {
  EvalSetting s = EvalSetting::defaults(kind);
  if (auto it = budgets.find(kind); it != budgets.end()) s.budgets = it->second;
  s.context_window = is_token_setting(kind) ? context_window : 0;
  return s;
}

void RunConfig::validate() const {
  validate_boxes(boxes);
  if (!(ctx_hd_threshold >= 0.0 && ctx_hd_threshold <= 1.0)) throw ConfigError("ctx_hd threshold outside [0,1]");
  if (!(fusion_gain >= 0.0 && fusion_gain <= 1.0)) throw ConfigError("fusion gain outside [0,1]");
  if (ig_steps == 0) throw ConfigError("ig_steps must be positive");
  if (jobs && *jobs == 0) throw ConfigError("jobs must be positive");
  for (EvalKind k : all_eval_kinds()) setting(k).validate();
}

RunConfig parse_run_config(const Json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  reject_unknown(j, {"backend", "corpus", "output_dir", "regions", "thresholds", "eval", "seed", "ig_steps",
                     "max_summary_len", "jobs"},
                 "run config");
  RunConfig cfg;
  try {
    if (j.contains("backend")) {
      const Json& b = j.at("backend");
      if (!b.is_object() || b.size() != 1) {
        throw ConfigError("backend must name exactly one of toy, oracle, remote");
      }
      BackendSpec spec;
      const std::string family = b.begin().key();
      const Json& body = b.begin().value();
      if (family == "toy") {
        spec.family = BackendFamily::TOY;
      } else if (family == "oracle") {
        spec.family = BackendFamily::ORACLE;
      } else if (family == "remote") {
        spec.family = BackendFamily::REMOTE;
      } else {
        throw ConfigError("unknown backend family '" + family + "'");
      }
      reject_unknown(body, {"lm", "summarizer", "vocab", "timeout_ms"}, "backend." + family);
      spec.summarizer = body.at("summarizer").get<std::string>();
      spec.lm = body.value("lm", std::string());
      spec.vocab = body.value("vocab", std::string());
      spec.timeout_ms = body.value("timeout_ms", spec.timeout_ms);
      if (spec.family != BackendFamily::REMOTE) {
        spec.summarizer = resolve(base, spec.summarizer);
        spec.lm = resolve(base, spec.lm);
      }
      spec.vocab = resolve(base, spec.vocab);
      cfg.backend = spec;
    }
    cfg.corpus = resolve(base, j.value("corpus", std::string()));
    cfg.output_dir = resolve(base, j.value("output_dir", cfg.output_dir));
    if (j.contains("regions")) {
      cfg.boxes.clear();
      for (const auto& r : j.at("regions")) {
        reject_unknown(r, {"label", "x0", "y0", "x1", "y1"}, "regions");
        cfg.boxes.push_back({parse_region(r.at("label").get<std::string>()), r.at("x0").get<double>(),
                             r.at("y0").get<double>(), r.at("x1").get<double>(), r.at("y1").get<double>()});
      }
    }
    if (j.contains("thresholds")) {
      const Json& t = j.at("thresholds");
      reject_unknown(t, {"ctx_hd", "fusion_gain"}, "thresholds");
      cfg.ctx_hd_threshold = t.value("ctx_hd", cfg.ctx_hd_threshold);
      cfg.fusion_gain = t.value("fusion_gain", cfg.fusion_gain);
    }
    if (j.contains("eval")) {
      const Json& e = j.at("eval");
      reject_unknown(e, {"budgets", "context_window"}, "eval");
      cfg.context_window = e.value("context_window", cfg.context_window);
      if (e.contains("budgets")) {
        for (auto it = e.at("budgets").begin(); it != e.at("budgets").end(); ++it) {
          cfg.budgets[parse_eval_kind(it.key())] = it.value().get<std::vector<std::size_t>>();
        }
      }
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.ig_steps = j.value("ig_steps", cfg.ig_steps);
    cfg.max_summary_len = j.value("max_summary_len", cfg.max_summary_len);
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw PathError("config not found: " + path.string());
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

Json to_json(const RunConfig& cfg) {
  Json j = Json::object();
  if (cfg.backend) {
    Json body = {{"summarizer", cfg.backend->summarizer}};
    if (!cfg.backend->lm.empty()) body["lm"] = cfg.backend->lm;
    if (!cfg.backend->vocab.empty()) body["vocab"] = cfg.backend->vocab;
    if (cfg.backend->family == BackendFamily::REMOTE) body["timeout_ms"] = cfg.backend->timeout_ms;
    j["backend"] = {{std::string(family_name(cfg.backend->family)), body}};
  }
  j["corpus"] = cfg.corpus;
  j["output_dir"] = cfg.output_dir;
  Json regions = Json::array();
  for (const auto& b : cfg.boxes) {
    regions.push_back({{"label", to_string(b.label)}, {"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}});
  }
  j["regions"] = regions;
  j["thresholds"] = {{"ctx_hd", cfg.ctx_hd_threshold}, {"fusion_gain", cfg.fusion_gain}};
  Json budgets = Json::object();
  for (EvalKind k : all_eval_kinds()) budgets[std::string(to_string(k))] = cfg.setting(k).budgets;
  j["eval"] = {{"budgets", budgets}, {"context_window", cfg.context_window}};
  j["seed"] = cfg.seed;
  j["ig_steps"] = cfg.ig_steps;
  j["max_summary_len"] = cfg.max_summary_len;
  // jobs only changes scheduling, never results, so it stays out of the hash.
  return j;
}

std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a64(to_json(cfg).dump())); }

std::size_t resolve_jobs(std::optional<std::size_t> flag, const RunConfig& cfg) {
  if (flag) {
    if (*flag == 0) throw ConfigError("--jobs must be positive");
    return *flag;
  }
  if (const char* env = std::getenv("SUMLENS_JOBS"); env && *env) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(env, &used);
    } catch (const std::exception&) {
    }
    if (v <= 0 || env[used] != '\0') throw ConfigError(std::string("SUMLENS_JOBS must be a positive integer, got '") + env + "'");
    return static_cast<std::size_t>(v);
  }
  if (cfg.jobs) return *cfg.jobs;
  return default_jobs();
}

LoadedBackends load_backends(const BackendSpec& spec) {
  LoadedBackends out;
  switch (spec.family) {
    case BackendFamily::TOY: {
      require_file(spec.summarizer, "summarizer checkpoint");
      auto sum = std::make_shared<ToyTransformerBackend>(load_checkpoint(spec.summarizer));
      out.summarizer = sum;
      if (spec.lm.empty()) {
        out.lm = sum;
      } else {
        require_file(spec.lm, "LM checkpoint");
        out.lm = std::make_shared<ToyTransformerBackend>(load_checkpoint(spec.lm));
      }
      break;
    }
    case BackendFamily::ORACLE: {
      require_file(spec.vocab, "vocabulary");
      require_file(spec.summarizer, "summarizer oracle");
      const Vocab vocab = Vocab::load(spec.vocab);
      auto sum = std::make_shared<ScriptedOracle>(ScriptedOracle::from_json_text(read_text_file(spec.summarizer), vocab));
      out.summarizer = sum;
      if (spec.lm.empty()) {
        out.lm = sum;
      } else {
        require_file(spec.lm, "LM oracle");
        out.lm = std::make_shared<ScriptedOracle>(ScriptedOracle::from_json_text(read_text_file(spec.lm), vocab));
      }
      break;
    }
    case BackendFamily::REMOTE: {
      require_file(spec.vocab, "vocabulary");
      const Vocab vocab = Vocab::load(spec.vocab);
      RemoteOptions opts;
      opts.timeout = std::chrono::milliseconds(spec.timeout_ms);
      auto sum = std::make_shared<RemoteBackend>(spec.summarizer, vocab, opts);
      out.summarizer = sum;
      out.lm = spec.lm.empty() ? std::shared_ptr<const Backend>(sum)
                               : std::make_shared<RemoteBackend>(spec.lm, vocab, opts);
      break;
    }
  }
  if (!(out.lm->vocab() == out.summarizer->vocab())) throw ConfigError("LM and summarizer vocabularies differ");
  return out;
}

std::vector<SummaryItem> load_summary_items(std::span<const CorpusRecord> records, const Backend& summarizer,
                                            std::size_t max_summary_len) {
  std::vector<SummaryItem> items;
  std::set<std::string> seen;
  const Vocab& vocab = summarizer.vocab();
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) throw DataError("duplicate document id " + r.id);
    Document doc = tokenize(r.text, vocab, r.id);
    std::vector<TokenId> summary =
        r.summary ? tokenize_pieces(*r.summary, vocab) : greedy_decode(summarizer, doc, max_summary_len);
    items.push_back({std::move(doc), std::move(summary)});
  }
  return items;
}

}  // namespace sumlens
