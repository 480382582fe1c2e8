#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "sumlens/error.hpp"
#include "sumlens/io.hpp"
#include "sumlens/run_config.hpp"

namespace sumlens {
namespace {

TEST(JsonRecords, DecisionRoundTrip) {
  DecisionRecord r;
  r.doc_id = "d";
  r.step = 3;
  r.target = 9;
  r.x = 1.25;
  r.y = 0.1;
  r.p_sent = {0.2, 0.7};
  r.max_psent = 0.7;
  r.region = Region::FT;
  r.argmax_tied = true;
  const DecisionRecord back = decision_from_json(Json::parse(to_json(r).dump()));
  EXPECT_EQ(back.doc_id, "d");
  EXPECT_EQ(back.step, 3u);
  EXPECT_EQ(back.region, Region::FT);
  EXPECT_EQ(back.p_sent, r.p_sent);
  EXPECT_TRUE(back.argmax_tied);
  EXPECT_THROW(decision_from_json(Json{{"doc_id", "d"}}), DataError);
}

TEST(JsonRecords, AttributionKeepsNegativeInfinityAndPreselection) {
  AttributionVector a;
  a.doc_id = "d";
  a.method = Method::INTGRAD;
  a.scores = {0.5, -std::numeric_limits<double>::infinity(), -0.25};
  a.preselected_sentences = std::vector<std::size_t>{0, 2};
  a.k_clipped = true;
  const Json j = Json::parse(to_json(a).dump());
  EXPECT_TRUE(j.at("scores")[1].is_null());
  const AttributionVector back = attribution_from_json(j);
  EXPECT_EQ(back.method, Method::INTGRAD);
  EXPECT_TRUE(std::isinf(back.scores[1]) && back.scores[1] < 0);
  EXPECT_EQ(back.scores[2], -0.25);
  EXPECT_EQ(*back.preselected_sentences, (std::vector<std::size_t>{0, 2}));
  EXPECT_TRUE(back.k_clipped);
}

TEST(Corpus, DetectsJsonlAndPlainText) {
  const auto jsonl = parse_corpus("\n{\"id\":\"a\",\"text\":\"x y.\",\"summary\":\"x\"}\n{\"id\":\"b\",\"text\":\"z.\"}\n", "t");
  ASSERT_EQ(jsonl.size(), 2u);
  EXPECT_EQ(*jsonl[0].summary, "x");
  EXPECT_FALSE(jsonl[1].summary);
  const auto plain = parse_corpus("first doc.\n\nsecond doc.\n", "t");
  ASSERT_EQ(plain.size(), 2u);
  EXPECT_EQ(plain[1].id, "line-3");
  EXPECT_THROW(parse_corpus("{\"text\": \"no id\"}\n", "t"), DataError);
}

TEST(Jsonl, HeaderIsSkippedOnRead) {
  const auto dir = std::filesystem::temp_directory_path() / "sumlens_io_test";
  const std::vector<Json> rows = {{{"a", 1}}, {{"a", 2}}};
  write_text_file(dir / "x.jsonl", to_jsonl(header_record("map", "00"), rows));
  const auto back = read_jsonl(dir / "x.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].at("a"), 2);
  write_text_file(dir / "bad.jsonl", "{\"a\": 1}\nnot json\n");
  EXPECT_THROW(read_jsonl(dir / "bad.jsonl"), DataError);
  EXPECT_THROW(read_jsonl(dir / "missing.jsonl"), PathError);
  std::filesystem::remove_all(dir);
}

TEST(Svg, ScatterAndCurvesAreWellFormed) {
  DecisionRecord r;
  r.x = 2.0;
  r.y = 0.0;
  r.region = Region::FT;
  const std::vector<DecisionRecord> recs = {r};
  const std::string scatter = map_scatter_svg(recs, default_region_boxes(), "a -- b");
  EXPECT_EQ(scatter.rfind("<svg", 0), 0u);
  EXPECT_NE(scatter.find("cx=\"450.00\" cy=\"450.00\""), std::string::npos);
  EXPECT_EQ(scatter.find("a -- b"), std::string::npos);  // "--" is illegal inside comments
  EvalCurve c;
  c.method = "intgrad";
  c.budgets = {0, 1, 2};
  c.mean_nll = {1.0, std::nan(""), 0.5};
  const std::vector<EvalCurve> curves = {c};
  const std::string plot = curves_svg(curves, "x");
  EXPECT_NE(plot.find("<polyline"), std::string::npos);
  EXPECT_NE(plot.find("intgrad"), std::string::npos);
}

TEST(RunConfig, FlagsAndDefaults) {
  const RunConfig cfg = parse_run_config(Json::parse(R"({"eval": {"budgets": {"RmTok": [1, 3]}}, "seed": 4})"));
  EXPECT_EQ(cfg.setting(EvalKind::RM_TOK).budgets, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(cfg.setting(EvalKind::DISP_SENT).budgets, (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_EQ(cfg.seed, 4u);
  EXPECT_THROW(parse_run_config(Json::parse(R"({"eval": {"budgets": {"RmTok": [3, 1]}}})")), ConfigError);
  EXPECT_THROW(parse_run_config(Json::parse(R"({"colour": 1})")), ConfigError);
  EXPECT_THROW(parse_run_config(Json::parse(R"({"backend": {}})")), ConfigError);
  EXPECT_NE(config_hash(cfg), config_hash(RunConfig{}));
  EXPECT_EQ(config_hash(cfg), config_hash(parse_run_config(to_json(cfg))));
}

TEST(RunConfig, JobsPrecedence) {
  RunConfig cfg;
  cfg.jobs = 3;
  ::unsetenv("SUMLENS_JOBS");
  EXPECT_EQ(resolve_jobs(std::nullopt, cfg), 3u);
  ::setenv("SUMLENS_JOBS", "5", 1);
  EXPECT_EQ(resolve_jobs(std::nullopt, cfg), 5u);
  EXPECT_EQ(resolve_jobs(2, cfg), 2u);
  ::setenv("SUMLENS_JOBS", "5x", 1);
  EXPECT_THROW(resolve_jobs(std::nullopt, cfg), ConfigError);
  ::unsetenv("SUMLENS_JOBS");
  EXPECT_THROW(resolve_jobs(0, cfg), ConfigError);
}

}  // namespace
}  // namespace sumlens
