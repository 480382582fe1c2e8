#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "sumlens/analysis.hpp"
#include "sumlens/checkpoint.hpp"
#include "sumlens/error.hpp"
#include "sumlens/io.hpp"
#include "sumlens/parallel.hpp"
#include "sumlens/run_config.hpp"
#include "sumlens/synthetic.hpp"
#include "sumlens/trainer.hpp"

namespace sumlens {

namespace {

namespace fs = std::filesystem;

// Flags shared by every subcommand; each one overrides the config file.
struct Common {
  std::string config;
  std::string corpus;
  std::string out;
  std::string summarizer;
  std::string lm;
  std::size_t jobs = 0;
  std::uint64_t seed = 0;
  CLI::Option* jobs_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c, bool backend_flags) {
  sub->add_option("--config", c.config, "Run config (JSON)");
  sub->add_option("--corpus", c.corpus, "Corpus: JSONL {id,text[,summary]} or one document per line");
  sub->add_option("--out", c.out, "Output directory");
  c.jobs_opt = sub->add_option("--jobs", c.jobs, "Worker threads (env SUMLENS_JOBS)");
  c.seed_opt = sub->add_option("--seed", c.seed, "Seed");
  if (backend_flags) {
    sub->add_option("--summarizer", c.summarizer, "Toy summarizer checkpoint (overrides the config backend)");
    sub->add_option("--lm", c.lm, "Toy LM checkpoint");
  }
}

struct Context {
  RunConfig cfg;
  std::string hash;
  std::size_t jobs = 1;
  fs::path out;
};

Context make_context(const Common& c) {
  Context ctx;
  ctx.cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (!c.corpus.empty()) ctx.cfg.corpus = c.corpus;
  if (!c.out.empty()) ctx.cfg.output_dir = c.out;
  if (c.seed_opt && c.seed_opt->count()) ctx.cfg.seed = c.seed;
  if (!c.summarizer.empty() || !c.lm.empty()) {
    if (c.summarizer.empty()) throw ConfigError("--lm requires --summarizer");
    ctx.cfg.backend = BackendSpec{BackendFamily::TOY, c.lm, c.summarizer, {}, 5000};
  }
  std::optional<std::size_t> flag;
  if (c.jobs_opt && c.jobs_opt->count()) flag = c.jobs;
  ctx.jobs = resolve_jobs(flag, ctx.cfg);
  ctx.out = ctx.cfg.output_dir;
  return ctx;
}

// Config plus anything a command adds to its identity (method list, settings...).
std::string hash_with(const Context& ctx, const Json& extra) {
  Json j = to_json(ctx.cfg);
  j["command_options"] = extra;
  return hex64(fnv1a64(j.dump()));
}

LoadedBackends require_backends(const Context& ctx) {
  if (!ctx.cfg.backend) throw ConfigError("no backend configured (use --config or --summarizer)");
  return load_backends(*ctx.cfg.backend);
}

std::vector<SummaryItem> require_items(const Context& ctx, const Backend& summarizer) {
  if (ctx.cfg.corpus.empty()) throw ConfigError("no corpus configured (use --config or --corpus)");
  if (!fs::is_regular_file(ctx.cfg.corpus)) throw PathError("corpus not found: " + ctx.cfg.corpus);
  const auto records = read_corpus(ctx.cfg.corpus);
  return load_summary_items(records, summarizer, ctx.cfg.max_summary_len);
}

Prefix prefix_at(const SummaryItem& item, std::size_t step, const Vocab& vocab) {
  if (step >= item.summary.size()) throw DataError("step " + std::to_string(step) + " beyond the summary of " + item.doc.id());
  std::vector<TokenId> ids = {vocab.specials().sos};
  ids.insert(ids.end(), item.summary.begin(), item.summary.begin() + static_cast<std::ptrdiff_t>(step));
  return Prefix(ids, vocab);
}

std::map<std::string, const SummaryItem*> index_items(std::span<const SummaryItem> items) {
  std::map<std::string, const SummaryItem*> by_id;
  for (const auto& it : items) by_id[it.doc.id()] = &it;
  return by_id;
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// Creates `dir` and proves it writable before any expensive work starts.
void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw PathError("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".sumlens-write-test";
  {
    std::ofstream f(probe);
    if (!f) throw PathError("output directory not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

void write_jsonl(const fs::path& path, const Json& header, std::span<const Json> rows) {
  write_text_file(path, to_jsonl(header, rows));
}

// ---- train-toy ----

struct TrainFlags {
  std::size_t train = 2000, dev = 100, epochs = 12, batch = 8;
  std::size_t embed_dim = 32, ffn_dim = 64, layers = 2, heads = 2, max_len = 128;
  double lr = 1e-3;
};

int cmd_train_toy(const Common& c, const TrainFlags& f, std::ostream& out) {
  Context ctx = make_context(c);
  if (c.out.empty() && c.config.empty()) throw ConfigError("train-toy needs --out");
  const std::uint64_t seed = c.seed_opt && c.seed_opt->count() ? c.seed : (c.config.empty() ? 1 : ctx.cfg.seed);

  ToyModelConfig mc;
  mc.embed_dim = f.embed_dim;
  mc.ffn_dim = f.ffn_dim;
  mc.layers = f.layers;
  mc.heads = f.heads;
  mc.max_len = f.max_len;
  mc.validate();
  TrainOptions opts;
  opts.epochs = f.epochs;
  opts.batch_size = f.batch;
  opts.learning_rate = f.lr;

  Vocab vocab;
  std::vector<TrainingExample> sum_train, lm_train;
  std::vector<Json> dev_rows;
  if (ctx.cfg.corpus.empty()) {
    CopyCorpusOptions co;
    co.train = f.train;
    co.dev = f.dev;
    co.seed = seed;
    CopyCorpus corpus = make_copy_corpus(co);
    vocab = corpus.vocab;
    sum_train = std::move(corpus.train);
    lm_train = std::move(corpus.lm_train);
    for (const auto& ex : corpus.dev_raw) {
      dev_rows.push_back({{"id", ex.id}, {"text", ex.text}, {"summary", ex.summary}, {"key_sentence", ex.key_sentence}});
    }
  } else {
    if (!fs::is_regular_file(ctx.cfg.corpus)) throw PathError("corpus not found: " + ctx.cfg.corpus);
    const auto records = read_corpus(ctx.cfg.corpus);
    if (records.empty()) throw DataError("training corpus is empty");
    std::vector<std::string> texts;
    for (const auto& r : records) {
      if (!r.summary) throw DataError("training record " + r.id + " has no summary");
      texts.push_back(r.text);
      texts.push_back(*r.summary);
    }
    vocab = build_vocab(texts);
    for (const auto& r : records) {
      sum_train.push_back({tokenize(r.text, vocab, r.id), tokenize_pieces(*r.summary, vocab)});
    }
    lm_train = sum_train;
  }

  const fs::path dir = ctx.out;
  ensure_output_dir(dir);
  mc.seed = seed;
  out << "training LM (" << lm_train.size() << " examples)\n";
  const TrainResult lm = train_toy(lm_train, vocab, mc, true, opts);
  mc.seed = seed + 1;
  out << "training summarizer (" << sum_train.size() << " examples)\n";
  const TrainResult sum = train_toy(sum_train, vocab, mc, false, opts);

  save_checkpoint(lm.backend, dir / "lm.ckpt");
  save_checkpoint(sum.backend, dir / "sum.ckpt");
  vocab.save(dir / "vocab.txt");

  Json run = {{"backend", {{"toy", {{"lm", "lm.ckpt"}, {"summarizer", "sum.ckpt"}}}}}, {"output_dir", "."}};
  if (!dev_rows.empty()) run["corpus"] = "dev.jsonl";
  Json report = {{"model", {{"embed_dim", mc.embed_dim}, {"ffn_dim", mc.ffn_dim}, {"layers", mc.layers},
                            {"heads", mc.heads}, {"max_len", mc.max_len}}},
                 {"seed", seed},
                 {"epochs", f.epochs},
                 {"learning_rate", f.lr},
                 {"lm_loss", lm.loss_history},
                 {"summarizer_loss", sum.loss_history},
                 {"lm_checkpoint", hex64(fnv1a64(serialize_checkpoint(lm.backend)))},
                 {"summarizer_checkpoint", hex64(fnv1a64(serialize_checkpoint(sum.backend)))}};
  const std::string hash = hex64(fnv1a64(report.dump()));
  if (!dev_rows.empty()) write_jsonl(dir / "dev.jsonl", header_record("train-toy", hash), dev_rows);
  write_text_file(dir / "run.json", run.dump(2) + "\n");
  Json full = header_record("train-toy", hash);
  full.update(report);
  write_text_file(dir / "train_report.json", full.dump(2) + "\n");
  out << "final loss: LM " << fixed(lm.loss_history.back(), 4) << ", summarizer "
      << fixed(sum.loss_history.back(), 4) << "\n";
  out << "wrote " << (dir / "lm.ckpt").string() << ", " << (dir / "sum.ckpt").string() << ", "
      << (dir / "run.json").string() << "\n";
  return 0;
}

// ---- map ----

struct MapFlags {
  bool svg = false;
  double ctx_hd = -1;
};

int cmd_map(const Common& c, const MapFlags& f, std::ostream& out) {
  Context ctx = make_context(c);
  if (f.ctx_hd >= 0) ctx.cfg.ctx_hd_threshold = f.ctx_hd;
  ctx.cfg.validate();
  const auto backends = require_backends(ctx);
  const auto items = require_items(ctx, *backends.summarizer);
  MapOptions opts;
  opts.boxes = ctx.cfg.boxes;
  opts.ctx_hd_threshold = ctx.cfg.ctx_hd_threshold;
  opts.jobs = ctx.jobs;
  const MapResult result = corpus_map(backends.map(), items, opts);
  const std::string hash = config_hash(ctx.cfg);

  std::vector<Json> rows;
  for (const auto& r : result.records) rows.push_back(to_json(r));
  write_jsonl(ctx.out / "map.jsonl", header_record("map", hash), rows);
  Json summary = header_record("map", hash);
  summary["summary"] = to_json(result.summary);
  write_text_file(ctx.out / "map_summary.json", summary.dump(2) + "\n");
  if (f.svg) write_text_file(ctx.out / "map.svg", map_scatter_svg(result.records, ctx.cfg.boxes, header_comment("map", hash)));

  out << "decisions: " << result.summary.decisions << "\n";
  for (Region r : {Region::LM, Region::CTX, Region::PT, Region::FT, Region::OTHER}) {
    const auto it = result.summary.percent.find(r);
    out << "  " << std::left << std::setw(6) << to_string(r) << fixed(it == result.summary.percent.end() ? 0.0 : it->second, 1)
        << "%\n";
  }
  out << "max P_sent quartiles: " << fixed(result.summary.max_psent_quartiles[0]) << " "
      << fixed(result.summary.max_psent_quartiles[1]) << " " << fixed(result.summary.max_psent_quartiles[2]) << "\n";
  if (result.summary.target_mismatches) {
    out << "target differs from the full-model argmax in " << result.summary.target_mismatches << " decisions\n";
  }
  return 0;
}

// ---- attribute ----

struct AttributeFlags {
  std::vector<std::string> methods;
  std::size_t two_stage = 0;
  std::size_t max_decisions = 0;
  std::size_t ig_steps = 0;
};

bool supports(Method m, const Backend& b) {
  if (m == Method::INPGRAD || m == Method::INTGRAD) return b.gradient_model() != nullptr;
  if (m == Method::ATTENTION) return b.attention_model() != nullptr;
  return true;
}

int cmd_attribute(const Common& c, const AttributeFlags& f, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(c);
  if (f.ig_steps) ctx.cfg.ig_steps = f.ig_steps;
  ctx.cfg.validate();
  const auto backends = require_backends(ctx);
  const Backend& model = *backends.summarizer;
  const auto items = require_items(ctx, model);

  std::vector<Method> methods;
  const bool all = f.methods.empty() || (f.methods.size() == 1 && f.methods[0] == "all");
  if (all) {
    for (Method m : all_methods()) {
      if (supports(m, model)) {
        methods.push_back(m);
      } else {
        err << "skipping " << to_string(m) << ": not supported by backend " << model.name() << "\n";
      }
    }
  } else {
    for (const auto& name : f.methods) methods.push_back(parse_method(name));
  }

  struct Job {
    const SummaryItem* item;
    std::size_t step;
  };
  std::vector<Job> jobs;
  for (const auto& item : items) {
    for (std::size_t t = 0; t < item.summary.size(); ++t) {
      if (f.max_decisions && jobs.size() == f.max_decisions) break;
      jobs.push_back({&item, t});
    }
  }
  AttributionOptions opts;
  opts.ig_steps = ctx.cfg.ig_steps;
  std::vector<Json> rows(jobs.size() * methods.size());
  parallel_for(rows.size(), ctx.jobs, [&](std::size_t k) {
    const Job& job = jobs[k / methods.size()];
    const Method m = methods[k % methods.size()];
    const Prefix prefix = prefix_at(*job.item, job.step, model.vocab());
    const TokenId target = job.item->summary[job.step];
    AttributionOptions o = opts;
    o.seed = ctx.cfg.seed ^ fnv1a64(job.item->doc.id() + "#" + std::to_string(job.step));
    AttributionVector a = f.two_stage ? two_stage(model, job.item->doc, prefix, target, m, f.two_stage, o)
                                      : attribute(m, model, job.item->doc, prefix, target, o);
    a.doc_id = job.item->doc.id();
    a.step = job.step;
    a.target = target;
    rows[k] = to_json(a);
  });
  Json methods_json = Json::array();
  for (Method m : methods) methods_json.push_back(to_string(m));
  const std::string hash =
      hash_with(ctx, {{"methods", methods_json}, {"two_stage", f.two_stage}, {"max_decisions", f.max_decisions}});
  write_jsonl(ctx.out / "attributions.jsonl", header_record("attribute", hash), rows);
  out << "attributed " << jobs.size() << " decisions with " << methods.size() << " method(s)"
      << (f.two_stage ? " (two-stage, k=" + std::to_string(f.two_stage) + ")" : "") << "\n";
  return 0;
}

// ---- evaluate ----

struct EvaluateFlags {
  std::string attributions;
  std::vector<std::string> settings;
  bool svg = false;
};

int cmd_evaluate(const Common& c, const EvaluateFlags& f, std::ostream& out) {
  Context ctx = make_context(c);
  const auto backends = require_backends(ctx);
  const Backend& model = *backends.summarizer;
  const auto items = require_items(ctx, model);
  const auto by_id = index_items(items);

  const fs::path path = f.attributions.empty() ? ctx.out / "attributions.jsonl" : fs::path(f.attributions);
  if (!fs::is_regular_file(path)) throw PathError("attributions not found: " + path.string());
  const auto rows = read_jsonl(path);
  if (rows.empty()) throw DataError("no attributions in " + path.string());

  std::vector<EvalKind> kinds;
  if (f.settings.empty()) {
    kinds = all_eval_kinds();
  } else {
    for (const auto& s : f.settings) kinds.push_back(parse_eval_kind(s));
  }

  // decisions in first-seen order; one attribution per (method, decision)
  std::map<std::pair<std::string, std::size_t>, std::size_t> slot;
  std::vector<EvalDecision> decisions;
  std::vector<std::string> method_order;
  std::map<std::string, std::map<std::size_t, AttributionVector>> by_method;
  for (const auto& row : rows) {
    AttributionVector a = attribution_from_json(row);
    const auto it = by_id.find(a.doc_id);
    if (it == by_id.end()) throw DataError("attribution for unknown document " + a.doc_id);
    const SummaryItem& item = *it->second;
    if (a.step >= item.summary.size() || item.summary[a.step] != a.target) {
      throw DataError("attribution target does not match the summary of " + a.doc_id);
    }
    if (a.scores.size() != item.doc.num_pieces()) throw ShapeError("attribution length differs from " + a.doc_id);
    auto [s, fresh] = slot.emplace(std::make_pair(a.doc_id, a.step), decisions.size());
    if (fresh) decisions.push_back({item.doc, prefix_at(item, a.step, model.vocab()), a.target});
    std::string name(to_string(a.method));
    if (a.preselected_sentences) name = "S+" + name;
    if (!by_method.contains(name)) method_order.push_back(name);
    by_method[name][s->second] = std::move(a);
  }

  std::vector<EvalCurve> curves;
  for (EvalKind kind : kinds) {
    const EvalSetting setting = ctx.cfg.setting(kind);
    for (const auto& name : method_order) {
      std::vector<std::optional<AttributionVector>> attrs(decisions.size());
      for (auto& [i, a] : by_method[name]) attrs[i] = a;
      curves.push_back(evaluate(model, decisions, attrs, setting, name, ctx.jobs));
    }
  }
  Json settings_json = Json::array();
  for (EvalKind k : kinds) settings_json.push_back(to_string(k));
  const std::string hash =
      hash_with(ctx, {{"settings", settings_json}, {"attributions", hex64(fnv1a64(read_text_file(path)))}});
  write_text_file(ctx.out / "curves.csv", header_comment("evaluate", hash) + "\n" + curves_to_csv(curves));
  const std::string table = delta_table(curves);
  write_text_file(ctx.out / "delta.txt", header_comment("evaluate", hash) + "\n" + table);
  if (f.svg) write_text_file(ctx.out / "eval.svg", curves_svg(curves, header_comment("evaluate", hash)));
  out << table;
  return 0;
}

// ---- fuse ----

struct FuseFlags {
  std::string map;
  double gain = -1;
};

int cmd_fuse(const Common& c, const FuseFlags& f, std::ostream& out) {
  Context ctx = make_context(c);
  if (f.gain >= 0) ctx.cfg.fusion_gain = f.gain;
  ctx.cfg.validate();
  const auto backends = require_backends(ctx);
  const auto items = require_items(ctx, *backends.summarizer);
  const fs::path path = f.map.empty() ? ctx.out / "map.jsonl" : fs::path(f.map);
  if (!fs::is_regular_file(path)) throw PathError("map records not found: " + path.string() + " (run `map` first)");
  std::vector<DecisionRecord> records;
  for (const auto& row : read_jsonl(path)) records.push_back(decision_from_json(row));
  const FusionReport report = fusion_rate(*backends.summarizer, items, records, ctx.cfg.fusion_gain, ctx.jobs);

  std::vector<Json> rows;
  for (const auto& r : report.records) rows.push_back(to_json(r));
  rows.push_back({{"summary", {{"eligible", report.eligible}, {"fused", report.fused}, {"rate", report.rate}}}});
  const std::string hash = hash_with(ctx, {{"map", hex64(fnv1a64(read_text_file(path)))}});
  write_jsonl(ctx.out / "fusion.jsonl", header_record("fuse", hash), rows);
  out << "eligible decisions: " << report.eligible << "\nfusion: " << report.fused << " (" << fixed(100.0 * report.rate, 1)
      << "%)\n";
  return 0;
}

// ---- scan-overlap ----

struct OverlapFlags {
  std::string docs;
  std::string summaries;
  std::size_t n = 7;
  std::size_t min_matches = 3;
  std::size_t chunk = 4096;
};

// Streams `path` in chunks of documents, scanning each chunk in parallel.
int cmd_scan_overlap(const Common& c, const OverlapFlags& f, std::ostream& out) {
  Context ctx = make_context(c);
  if (f.n < 1) throw ConfigError("n-gram order must be at least 1");
  if (f.chunk == 0) throw ConfigError("--chunk must be positive");
  const std::string summaries_path = f.summaries.empty() ? ctx.cfg.corpus : f.summaries;
  if (summaries_path.empty()) throw ConfigError("scan-overlap needs --summaries");
  if (f.docs.empty()) throw ConfigError("scan-overlap needs --docs");
  if (!fs::is_regular_file(f.docs)) throw PathError("document dump not found: " + f.docs);
  if (!fs::is_regular_file(summaries_path)) throw PathError("summaries not found: " + summaries_path);

  std::vector<TextRecord> summaries;
  for (auto& r : read_corpus(summaries_path)) summaries.push_back({r.id, r.summary ? *r.summary : r.text});
  const OverlapIndex index(summaries, f.n, f.min_matches);

  std::ifstream in(f.docs, std::ios::binary);
  std::vector<OverlapHit> hits;
  std::size_t scanned = 0;
  std::size_t line_no = 0;
  std::string line;
  bool more = true;
  while (more) {
    std::string chunk;
    std::size_t first_line = line_no + 1;
    std::size_t docs_in_chunk = 0;
    while (docs_in_chunk < f.chunk && (more = static_cast<bool>(std::getline(in, line)))) {
      ++line_no;
      chunk += line + "\n";
      if (line.find_first_not_of(" \t\r") != std::string::npos) ++docs_in_chunk;
    }
    auto records = parse_corpus(chunk, f.docs);
    // plain-text ids are line numbers within the whole file
    for (auto& r : records) {
      if (r.id.rfind("line-", 0) == 0) r.id = "line-" + std::to_string(first_line - 1 + std::stoul(r.id.substr(5)));
    }
    std::vector<std::vector<OverlapHit>> found(records.size());
    parallel_for(records.size(), ctx.jobs, [&](std::size_t d) { found[d] = index.scan({records[d].id, records[d].text}); });
    for (auto& v : found) std::move(v.begin(), v.end(), std::back_inserter(hits));
    scanned += records.size();
  }
  std::set<std::string> flagged;
  for (const auto& h : hits) flagged.insert(h.example_id);
  const double fraction = summaries.empty() ? 0.0 : static_cast<double>(flagged.size()) / static_cast<double>(summaries.size());

  std::vector<Json> rows;
  for (const auto& h : hits) rows.push_back(to_json(h));
  rows.push_back({{"summary",
                   {{"documents_scanned", scanned}, {"examples", summaries.size()}, {"examples_flagged", flagged.size()},
                    {"fraction", fraction}}}});
  const std::string hash = hash_with(ctx, {{"n", f.n},
                                           {"min_matches", f.min_matches},
                                           {"docs", hex64(fnv1a64(read_text_file(f.docs)))},
                                           {"summaries", hex64(fnv1a64(read_text_file(summaries_path)))}});
  write_jsonl(ctx.out / "overlap.jsonl", header_record("scan-overlap", hash), rows);
  out << "scanned " << scanned << " documents against " << summaries.size() << " summaries\n"
      << "flagged examples: " << flagged.size() << " (" << fixed(100.0 * fraction, 2) << "%), hits: " << hits.size() << "\n";
  return 0;
}

// ---- bigrams ----

struct BigramFlags {
  std::string map;
  std::vector<std::string> corpora;  // NAME=PATH
};

int cmd_bigrams(const Common& c, const BigramFlags& f, std::ostream& out) {
  Context ctx = make_context(c);
  if (f.corpora.size() < 2) throw ConfigError("bigrams needs at least two --train-corpus NAME=PATH");
  const auto backends = require_backends(ctx);
  const Vocab& vocab = backends.vocab();
  const auto items = require_items(ctx, *backends.summarizer);
  const auto by_id = index_items(items);
  const fs::path path = f.map.empty() ? ctx.out / "map.jsonl" : fs::path(f.map);
  if (!fs::is_regular_file(path)) throw PathError("map records not found: " + path.string() + " (run `map` first)");

  std::vector<std::pair<std::string, std::string>> ft;
  std::size_t first_step = 0;
  for (const auto& row : read_jsonl(path)) {
    const DecisionRecord r = decision_from_json(row);
    if (r.region != Region::FT) continue;
    if (r.step == 0) {
      ++first_step;
      continue;
    }
    const auto it = by_id.find(r.doc_id);
    if (it == by_id.end() || r.step >= it->second->summary.size()) throw DataError("map record does not match the corpus: " + r.doc_id);
    ft.emplace_back(vocab.token(it->second->summary[r.step - 1]), vocab.token(r.target));
  }

  std::vector<TokenCorpus> corpora;
  Json sources = Json::object();
  for (const auto& spec : f.corpora) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--train-corpus expects NAME=PATH, got " + spec);
    TokenCorpus tc{spec.substr(0, eq), {}};
    const std::string p = spec.substr(eq + 1);
    if (!fs::is_regular_file(p)) throw PathError("training corpus not found: " + p);
    for (const auto& rec : read_corpus(p)) {
      const Document doc = tokenize(rec.text, vocab, rec.id);
      for (TokenId id : doc.pieces()) tc.tokens.push_back(vocab.token(id));
    }
    sources[tc.name] = hex64(fnv1a64(read_text_file(p)));
    corpora.push_back(std::move(tc));
  }
  const BigramReport report = bigram_stats(ft, corpora);

  std::vector<Json> rows;
  for (const auto& s : report.bigrams) {
    Json freq = Json::object(), zero = Json::object();
    for (std::size_t k = 0; k < corpora.size(); ++k) {
      freq[corpora[k].name] = s.frequency[k];
      zero[corpora[k].name] = static_cast<bool>(s.zero_denominator[k]);
    }
    rows.push_back({{"prev", s.prev}, {"next", s.next}, {"cases", s.cases}, {"frequency", freq}, {"zero_denominator", zero}});
  }
  Json agg = Json::object();
  for (std::size_t k = 0; k < corpora.size(); ++k) agg[corpora[k].name] = report.aggregate[k];
  rows.push_back({{"aggregate", agg}, {"ft_cases", ft.size()}, {"skipped_first_step", first_step}});
  const std::string hash = hash_with(ctx, {{"map", hex64(fnv1a64(read_text_file(path)))}, {"corpora", sources}});
  write_jsonl(ctx.out / "bigrams.jsonl", header_record("bigrams", hash), rows);

  out << std::left << std::setw(24) << "bigram";
  for (const auto& tc : corpora) out << std::setw(12) << tc.name;
  out << "\n";
  for (const auto& s : report.bigrams) {
    out << std::setw(24) << ("\"" + s.prev + " " + s.next + "\"");
    for (std::size_t k = 0; k < corpora.size(); ++k) out << std::setw(12) << (s.zero_denominator[k] ? "-" : fixed(s.frequency[k]));
    out << "\n";
  }
  out << std::setw(24) << "mean";
  for (double a : report.aggregate) out << std::setw(12) << fixed(a);
  out << "\n";
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Backend: return 3;
    case ErrorKind::Data: return 4;
  }
  return 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generation-mode maps, attributions and faithfulness curves for summarization models", "sumlens"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Common common;
  auto* train = app.add_subcommand("train-toy", "Train the toy LM and summarizer (synthetic copy task by default)");
  add_common(train, common, false);
  TrainFlags tf;
  train->add_option("--train", tf.train, "Synthetic training examples");
  train->add_option("--dev", tf.dev, "Synthetic dev examples");
  train->add_option("--epochs", tf.epochs, "Epochs");
  train->add_option("--batch", tf.batch, "Batch size");
  train->add_option("--lr", tf.lr, "Adam learning rate");
  train->add_option("--embed-dim", tf.embed_dim, "Model width");
  train->add_option("--ffn-dim", tf.ffn_dim, "Feed-forward width");
  train->add_option("--layers", tf.layers, "Layers per stack");
  train->add_option("--heads", tf.heads, "Attention heads");
  train->add_option("--max-len", tf.max_len, "Maximum sequence length");

  auto* map = app.add_subcommand("map", "Classify every summary token into a generation mode");
  add_common(map, common, true);
  MapFlags mf;
  map->add_flag("--svg", mf.svg, "Also write map.svg");
  map->add_option("--ctx-hd", mf.ctx_hd, "max P_sent threshold for hard context");

  auto* attr = app.add_subcommand("attribute", "Attribute summary tokens to source pieces");
  add_common(attr, common, true);
  AttributeFlags af;
  attr->add_option("--method", af.methods, "random, lead, occlusion, attention, inpgrad, intgrad or all (repeatable)");
  attr->add_option("--two-stage", af.two_stage, "Pre-select the top-k sentences first (0: off)");
  attr->add_option("--max-decisions", af.max_decisions, "Limit the number of decisions (0: all)");
  attr->add_option("--ig-steps", af.ig_steps, "Integrated-gradients steps");

  auto* eval = app.add_subcommand("evaluate", "Disp/Rm faithfulness curves for saved attributions");
  add_common(eval, common, true);
  EvaluateFlags ef;
  eval->add_option("--attributions", ef.attributions, "Attribution JSONL (default <out>/attributions.jsonl)");
  eval->add_option("--settings", ef.settings, "DispTok, RmTok, DispSent, RmSent (default all)");
  eval->add_flag("--svg", ef.svg, "Also write eval.svg");

  auto* fuse = app.add_subcommand("fuse", "Search sentence pairs for hard-context decisions");
  add_common(fuse, common, true);
  FuseFlags ff;
  fuse->add_option("--map", ff.map, "Map JSONL (default <out>/map.jsonl)");
  fuse->add_option("--gain", ff.gain, "Required pair gain over the best single sentence");

  auto* scan = app.add_subcommand("scan-overlap", "Find summaries sharing n-grams with a document dump");
  add_common(scan, common, false);
  OverlapFlags of;
  scan->add_option("--docs", of.docs, "Document dump: JSONL {id,text} or one document per line");
  scan->add_option("--summaries", of.summaries, "Dataset: JSONL {id,summary|text} (default: --corpus)");
  scan->add_option("-n,--ngram", of.n, "n-gram order");
  scan->add_option("--min-matches", of.min_matches, "Emit when distinct shared n-grams exceed this");
  scan->add_option("--chunk", of.chunk, "Documents per streamed chunk");

  auto* bigrams = app.add_subcommand("bigrams", "Training-corpus frequency of FT bigrams");
  add_common(bigrams, common, true);
  BigramFlags bf;
  bigrams->add_option("--map", bf.map, "Map JSONL (default <out>/map.jsonl)");
  bigrams->add_option("--train-corpus", bf.corpora, "NAME=PATH, at least two");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*train) return cmd_train_toy(common, tf, out);
    if (*map) return cmd_map(common, mf, out);
    if (*attr) return cmd_attribute(common, af, out, err);
    if (*eval) return cmd_evaluate(common, ef, out);
    if (*fuse) return cmd_fuse(common, ff, out);
    if (*scan) return cmd_scan_overlap(common, of, out);
    if (*bigrams) return cmd_bigrams(common, bf, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace sumlens
