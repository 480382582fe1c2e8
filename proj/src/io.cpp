#include "sumlens/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "sumlens/error.hpp"

namespace sumlens {

namespace {

template <class T>
T field(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("record field '") + key + "': " + e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(4) << v;
  return out.str();
}

const char* region_colour(Region r) {
  switch (r) {
    case Region::LM: return "#1f77b4";
    case Region::CTX: return "#2ca02c";
    case Region::PT: return "#d62728";
    case Region::FT: return "#9467bd";
    case Region::OTHER: break;
  }
  return "#7f7f7f";
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// SVG comments may not contain "--".
std::string comment_text(std::string_view s) {
  std::string out(s);
  for (std::size_t p; (p = out.find("--")) != std::string::npos;) out.replace(p, 2, "- -");
  return out;
}

}  // namespace

Json header_record(std::string_view command, std::string_view config_hash) {
  return {{"header",
           {{"tool", "sumlens"}, {"version", kToolVersion}, {"command", command}, {"config_hash", config_hash}}}};
}

std::string header_comment(std::string_view command, std::string_view config_hash) {
  return "# sumlens " + std::string(kToolVersion) + " " + std::string(command) + " config=" + std::string(config_hash);
}

Json to_json(const DecisionRecord& r) {
  return {{"doc_id", r.doc_id},
          {"step", r.step},
          {"target", r.target},
          {"x", r.x},
          {"y", r.y},
          {"p_sent", r.p_sent},
          {"max_psent", r.max_psent},
          {"region", to_string(r.region)},
          {"ctx_hard", r.ctx_hard},
          {"target_mismatch", r.target_mismatch},
          {"argmax_tied", r.argmax_tied},
          {"truncated_top_k", r.truncated_top_k}};
}

DecisionRecord decision_from_json(const Json& j) {
  DecisionRecord r;
  r.doc_id = field<std::string>(j, "doc_id");
  r.step = field<std::size_t>(j, "step");
  r.target = field<TokenId>(j, "target");
  r.x = field<double>(j, "x");
  r.y = field<double>(j, "y");
  r.p_sent = field<std::vector<double>>(j, "p_sent");
  r.max_psent = field<double>(j, "max_psent");
  try {
    r.region = parse_region(field<std::string>(j, "region"));
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  r.ctx_hard = j.value("ctx_hard", false);
  r.target_mismatch = j.value("target_mismatch", false);
  r.argmax_tied = j.value("argmax_tied", false);
  r.truncated_top_k = j.value("truncated_top_k", 0);
  return r;
}

Json to_json(const AttributionVector& a) {
  Json scores = Json::array();
  for (double s : a.scores) scores.push_back(std::isfinite(s) ? Json(s) : Json(nullptr));
  Json j = {{"doc_id", a.doc_id}, {"step", a.step},  {"target", a.target},
            {"method", to_string(a.method)}, {"scores", scores}};
  if (a.preselected_sentences) {
    j["preselected_sentences"] = *a.preselected_sentences;
    j["k_clipped"] = a.k_clipped;
  }
  return j;
}

AttributionVector attribution_from_json(const Json& j) {
  AttributionVector a;
  a.doc_id = field<std::string>(j, "doc_id");
  a.step = field<std::size_t>(j, "step");
  a.target = field<TokenId>(j, "target");
  try {
    a.method = parse_method(field<std::string>(j, "method"));
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  const Json& scores = j.contains("scores") ? j.at("scores") : throw DataError("record field 'scores' missing");
  if (!scores.is_array()) throw DataError("record field 'scores' is not an array");
  for (const auto& s : scores) {
    if (s.is_null()) {
      a.scores.push_back(-std::numeric_limits<double>::infinity());
    } else if (s.is_number()) {
      a.scores.push_back(s.get<double>());
    } else {
      throw DataError("attribution score is not a number");
    }
  }
  if (j.contains("preselected_sentences")) {
    a.preselected_sentences = field<std::vector<std::size_t>>(j, "preselected_sentences");
    a.k_clipped = j.value("k_clipped", false);
  }
  return a;
}

Json to_json(const FusionRecord& r) {
  return {{"doc_id", r.doc_id},
          {"step", r.step},
          {"target", r.target},
          {"best_single", {{"sentence", r.best_single}, {"p", r.best_single_p}}},
          {"best_pair", {{"i", r.pair_i}, {"j", r.pair_j}, {"p", r.best_pair_p}}},
          {"is_fusion", r.is_fusion}};
}

Json to_json(const OverlapHit& h) {
  return {{"example_id", h.example_id}, {"doc_id", h.doc_id}, {"count", h.count}, {"samples", h.samples}};
}

Json to_json(const MapSummary& s) {
  Json counts = Json::object(), percent = Json::object();
  for (Region r : {Region::LM, Region::CTX, Region::PT, Region::FT, Region::OTHER}) {
    const auto c = s.counts.find(r);
    const auto p = s.percent.find(r);
    counts[std::string(to_string(r))] = c == s.counts.end() ? 0 : c->second;
    percent[std::string(to_string(r))] = p == s.percent.end() ? 0.0 : p->second;
  }
  return {{"decisions", s.decisions},
          {"counts", counts},
          {"percent", percent},
          {"max_psent_quartiles", s.max_psent_quartiles},
          {"target_mismatches", s.target_mismatches}};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PathError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw PathError("cannot create " + path.parent_path().string() + ": " + ec.message());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PathError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw PathError("short write to " + path.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw PathError("cannot replace " + path.string() + ": " + ec.message());
}

std::string to_jsonl(const Json& header, std::span<const Json> rows) {
  std::string out = header.dump() + "\n";
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<Json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    if (!j.is_object()) throw DataError(path.string() + ":" + std::to_string(n) + ": not an object");
    if (j.contains("header")) continue;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<CorpusRecord> parse_corpus(std::string_view content, const std::string& origin) {
  std::istringstream in{std::string(content)};
  std::vector<CorpusRecord> out;
  std::string line;
  std::size_t n = 0;
  std::optional<bool> jsonl;
  while (std::getline(in, line)) {
    ++n;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (!jsonl) jsonl = line[first] == '{';
    if (!*jsonl) {
      out.push_back({"line-" + std::to_string(n), line, std::nullopt});
      continue;
    }
    try {
      const Json j = Json::parse(line);
      if (j.contains("header")) continue;
      CorpusRecord r{j.at("id").get<std::string>(), j.at("text").get<std::string>(), std::nullopt};
      if (j.contains("summary") && !j.at("summary").is_null()) r.summary = j.at("summary").get<std::string>();
      out.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw DataError(origin + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_text_file(path), path.string());
}

std::string map_scatter_svg(std::span<const DecisionRecord> records, std::span<const RegionBox> boxes,
                            std::string_view comment) {
  constexpr double size = 400, margin = 50;
  auto px = [&](double x) { return margin + x / 2.0 * size; };
  auto py = [&](double y) { return margin + size - y / 2.0 * size; };
  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin << "\" height=\""
    << size + 2 * margin << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<!-- " << comment_text(comment) << " -->\n";
  s << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
    << "\" fill=\"white\" stroke=\"black\"/>\n";
  for (const auto& b : boxes) {
    s << "<rect x=\"" << px(b.x0) << "\" y=\"" << py(b.y1) << "\" width=\"" << px(b.x1) - px(b.x0)
      << "\" height=\"" << py(b.y0) - py(b.y1) << "\" fill=\"" << region_colour(b.label)
      << "\" fill-opacity=\"0.08\" stroke=\"" << region_colour(b.label) << "\" stroke-dasharray=\"4 2\"/>\n";
    s << "<text x=\"" << px(b.x0) + 4 << "\" y=\"" << py(b.y1) + 14 << "\" fill=\"" << region_colour(b.label)
      << "\">" << to_string(b.label) << "</text>\n";
  }
  for (const auto& r : records) {
    s << "<circle cx=\"" << px(r.x) << "\" cy=\"" << py(r.y) << "\" r=\"2.5\" fill=\"" << region_colour(r.region)
      << "\" fill-opacity=\"0.6\"/>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double v = t * 0.5;
    s << "<text x=\"" << px(v) << "\" y=\"" << margin + size + 16 << "\" text-anchor=\"middle\">" << fmt(v)
      << "</text>\n";
    s << "<text x=\"" << margin - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  s << "<text x=\"" << margin + size / 2 << "\" y=\"" << margin + size + 36
    << "\" text-anchor=\"middle\">L1(LM, full)</text>\n";
  s << "<text transform=\"translate(14," << margin + size / 2
    << ") rotate(-90)\" text-anchor=\"middle\">L1(S empty, full)</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string curves_svg(std::span<const EvalCurve> curves, std::string_view comment) {
  constexpr double w = 320, h = 240, margin = 50, gap = 30;
  std::vector<EvalKind> settings;
  std::vector<std::string> methods;
  for (const auto& c : curves) {
    if (std::find(settings.begin(), settings.end(), c.setting) == settings.end()) settings.push_back(c.setting);
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
  }
  const double width = margin + settings.size() * (w + gap) + 120;
  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << h + 2 * margin
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<!-- " << comment_text(comment) << " -->\n";
  for (std::size_t p = 0; p < settings.size(); ++p) {
    const double x0 = margin + p * (w + gap), y0 = margin;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t max_budget = 1;
    for (const auto& c : curves) {
      if (c.setting != settings[p]) continue;
      for (std::size_t i = 0; i < c.mean_nll.size(); ++i) {
        if (std::isnan(c.mean_nll[i])) continue;
        lo = std::min(lo, c.mean_nll[i]);
        hi = std::max(hi, c.mean_nll[i]);
        max_budget = std::max(max_budget, c.budgets[i]);
      }
    }
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (hi - lo < 1e-9) hi = lo + 1;
    auto px = [&](double b) { return x0 + b / static_cast<double>(max_budget) * w; };
    auto py = [&](double v) { return y0 + h - (v - lo) / (hi - lo) * h; };
    s << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<text x=\"" << x0 + w / 2 << "\" y=\"" << y0 - 10 << "\" text-anchor=\"middle\">"
      << to_string(settings[p]) << "</text>\n";
    s << "<text x=\"" << x0 - 4 << "\" y=\"" << py(hi) + 4 << "\" text-anchor=\"end\">" << fmt(hi) << "</text>\n";
    s << "<text x=\"" << x0 - 4 << "\" y=\"" << py(lo) + 4 << "\" text-anchor=\"end\">" << fmt(lo) << "</text>\n";
    s << "<text x=\"" << x0 + w << "\" y=\"" << y0 + h + 16 << "\" text-anchor=\"end\">n=" << max_budget
      << "</text>\n";
    for (const auto& c : curves) {
      if (c.setting != settings[p]) continue;
      const auto m = static_cast<std::size_t>(std::find(methods.begin(), methods.end(), c.method) - methods.begin());
      std::string points;
      for (std::size_t i = 0; i < c.mean_nll.size(); ++i) {
        if (std::isnan(c.mean_nll[i])) continue;
        std::ostringstream pt;
        pt << std::fixed << std::setprecision(2) << px(static_cast<double>(c.budgets[i])) << "," << py(c.mean_nll[i])
           << " ";
        points += pt.str();
      }
      s << "<polyline fill=\"none\" stroke=\"" << kPalette[m % 8] << "\" stroke-width=\"1.5\" points=\"" << points
        << "\"/>\n";
    }
  }
  const double lx = margin + settings.size() * (w + gap);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const double ly = margin + 14 + 16 * static_cast<double>(m);
    s << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 16 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << kPalette[m % 8] << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << lx + 20 << "\" y=\"" << ly << "\">" << xml_escape(methods[m]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace sumlens
