#include "sumlens/eval_protocol.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "sumlens/error.hpp"
#include "sumlens/parallel.hpp"
#include "sumlens/stats.hpp"

namespace sumlens {

namespace {

constexpr double kProbFloor = 1e-12;

bool is_continuation(const Document& doc, std::size_t piece) {
  const auto& t = doc.piece_text()[piece];
  return doc.word_spans()[doc.word_of_piece(piece)].begin != piece && !t.empty() && t.front() == '#';
}

std::string surface(const Document& doc, std::size_t piece) {
  const auto& t = doc.piece_text()[piece];
  return is_continuation(doc, piece) ? t.substr(1) : t;
}

}  // namespace

std::string_view to_string(EvalKind kind) {
  switch (kind) {
    case EvalKind::DISP_TOK: return "DispTok";
    case EvalKind::RM_TOK: return "RmTok";
    case EvalKind::DISP_SENT: return "DispSent";
    case EvalKind::RM_SENT: return "RmSent";
  }
  return "DispTok";
}

const std::vector<EvalKind>& all_eval_kinds() {
  static const std::vector<EvalKind> k = {EvalKind::DISP_TOK, EvalKind::RM_TOK, EvalKind::DISP_SENT, EvalKind::RM_SENT};
  return k;
}

EvalKind parse_eval_kind(std::string_view name) {
  for (EvalKind k : all_eval_kinds()) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown evaluation setting '" + std::string(name) + "'");
}

EvalSetting EvalSetting::defaults(EvalKind kind) {
  EvalSetting s;
  s.kind = kind;
  s.budgets = is_token_setting(kind) ? std::vector<std::size_t>{1, 2, 4, 8, 16} : std::vector<std::size_t>{1, 2, 3, 4};
  return s;
}

void EvalSetting::validate() const {
  if (budgets.empty()) throw ConfigError("evaluation needs at least one budget");
  if (budgets.front() < 1) throw ConfigError("budgets start after the implicit n = 0");
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (budgets[i] <= budgets[i - 1]) throw ConfigError("budgets must be strictly increasing");
  }
}

double nll(const TokenDistribution& dist, TokenId target) { return -std::log(std::max(dist[target], kProbFloor)); }

std::vector<std::size_t> budget_fill(std::span<const std::size_t> ranked, const Document& doc, std::size_t n,
                                     std::size_t window) {
  if (n < 1) throw ConfigError("budget must be at least 1");
  std::vector<char> taken(doc.num_pieces(), 0);
  std::size_t filled = 0;
  auto take = [&](std::size_t p) {
    if (filled < n && !taken[p]) {
      taken[p] = 1;
      ++filled;
    }
  };
  for (std::size_t seed : ranked) {
    if (filled >= n) break;
    if (seed >= doc.num_pieces()) throw IndexError("ranked piece out of range");
    // a seed already covered by an earlier window does not extend again
    if (taken[seed]) continue;
    take(seed);
    for (std::size_t d = 1; d <= window; ++d) {
      if (seed >= d) take(seed - d);
      if (seed + d < doc.num_pieces()) take(seed + d);
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < taken.size(); ++p) {
    if (taken[p]) out.push_back(p);
  }
  return out;
}

Document make_input(EvalKind kind, const Document& doc, std::span<const std::size_t> selection, TokenId mask_id) {
  switch (kind) {
    case EvalKind::DISP_TOK: return doc.keep_pieces(selection);
    case EvalKind::RM_TOK: return doc.with_masked(selection, mask_id, "#");
    case EvalKind::DISP_SENT: return doc.keep_sentences(selection);
    case EvalKind::RM_SENT: {
      Document out = doc.drop_sentences(selection);
      if (out.empty()) throw EmptySourceError("removing every sentence leaves no source");
      return out;
    }
  }
  return doc;
}

std::string render_input(EvalKind kind, const Document& doc, std::span<const std::size_t> selection) {
  std::string out = "<sos>";
  if (kind == EvalKind::DISP_TOK) {
    std::vector<std::size_t> shown(selection.begin(), selection.end());
    std::sort(shown.begin(), shown.end());
    shown.erase(std::unique(shown.begin(), shown.end()), shown.end());
    for (std::size_t k = 0; k < shown.size(); ++k) {
      const std::size_t p = shown[k];
      if (k > 0) {
        if (p != shown[k - 1] + 1) {
          out += ", ";
        } else if (!is_continuation(doc, p)) {
          out += ' ';
        }
      }
      out += surface(doc, p);
    }
  } else if (kind == EvalKind::RM_TOK) {
    std::vector<char> masked(doc.num_pieces(), 0);
    for (std::size_t p : selection) masked.at(p) = 1;
    for (std::size_t p = 0; p < doc.num_pieces(); ++p) {
      if (masked[p]) {
        out += '#';
      } else {
        if (p > 0 && !is_continuation(doc, p)) out += ' ';
        out += surface(doc, p);
      }
    }
  } else {
    out += make_input(kind, doc, selection, 0).text();
  }
  return out + "<eos>";
}

double delta_metric(double eval0, std::span<const double> evals) { return mean(evals) - eval0; }

EvalCurve evaluate(const Backend& backend, std::span<const EvalDecision> decisions,
                   std::span<const std::optional<AttributionVector>> attributions, const EvalSetting& setting,
                   std::string method, std::size_t jobs) {
  setting.validate();
  if (attributions.size() != decisions.size()) throw ShapeError("one attribution slot per decision is required");
  EvalCurve curve;
  curve.method = std::move(method);
  curve.setting = setting.kind;
  curve.budgets = {0};
  curve.budgets.insert(curve.budgets.end(), setting.budgets.begin(), setting.budgets.end());

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (!attributions[i]) {
      ++curve.skipped;
      continue;
    }
    if (attributions[i]->scores.size() != decisions[i].doc.num_pieces()) {
      throw ShapeError("attribution for " + decisions[i].doc.id() + " does not match its document");
    }
    usable.push_back(i);
  }
  if (usable.empty()) throw DataError("no decisions with attributions to evaluate");

  const std::size_t nb = curve.budgets.size();
  // NaN marks an infeasible (decision, budget) pair
  std::vector<double> cell(usable.size() * nb, std::nan(""));
  const TokenId mask = backend.vocab().specials().mask;
  const bool display = is_display_setting(setting.kind);
  parallel_for(cell.size(), jobs, [&](std::size_t c) {
    const auto& d = decisions[usable[c / nb]];
    const auto& attr = *attributions[usable[c / nb]];
    const std::size_t n = curve.budgets[c % nb];
    if (n == 0) {
      const auto cfg = display ? AblationConfig::s_empty() : AblationConfig::s_full();
      cell[c] = nll(backend.predict_next(cfg, d.doc, d.prefix), d.target);
      return;
    }
    std::vector<std::size_t> selection;
    if (is_token_setting(setting.kind)) {
      selection = budget_fill(ranking(attr.scores), d.doc, n, setting.context_window);
    } else {
      const std::size_t m = d.doc.num_sentences();
      if (display ? n > m : n >= m) return;
      selection = ranking(aggregate_to_sentences(attr, d.doc).scores);
      selection.resize(n);
    }
    const Document input = make_input(setting.kind, d.doc, selection, mask);
    cell[c] = nll(backend.predict_next(AblationConfig::s_full(), input, d.prefix), d.target);
  });

  for (std::size_t b = 0; b < nb; ++b) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < usable.size(); ++i) {
      const double v = cell[i * nb + b];
      if (std::isnan(v)) continue;
      total += v;
      ++count;
    }
    curve.mean_nll.push_back(count ? total / static_cast<double>(count) : std::nan(""));
    curve.n_decisions.push_back(count);
  }
  std::vector<double> evals;
  for (std::size_t b = 1; b < nb; ++b) {
    if (curve.n_decisions[b] > 0) evals.push_back(curve.mean_nll[b]);
  }
  curve.delta = evals.empty() ? 0.0 : delta_metric(curve.mean_nll[0], evals);
  return curve;
}

std::string curves_to_csv(std::span<const EvalCurve> curves) {
  std::ostringstream out;
  out << "method,setting,budget,mean_nll,n_decisions\n";
  out << std::setprecision(10);
  for (const auto& c : curves) {
    for (std::size_t b = 0; b < c.budgets.size(); ++b) {
      out << c.method << ',' << to_string(c.setting) << ',' << c.budgets[b] << ',';
      if (c.n_decisions[b] > 0) out << c.mean_nll[b];
      out << ',' << c.n_decisions[b] << '\n';
    }
  }
  return out.str();
}

std::string delta_table(std::span<const EvalCurve> curves) {
  std::map<EvalKind, std::vector<const EvalCurve*>> by_setting;
  for (const auto& c : curves) by_setting[c.setting].push_back(&c);
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  for (const auto& [kind, rows] : by_setting) {
    out << to_string(kind) << '\n' << std::left << std::setw(14) << "method";
    for (std::size_t b : rows.front()->budgets) out << std::right << std::setw(8) << b;
    out << std::setw(9) << "Delta" << '\n';
    for (const EvalCurve* c : rows) {
      out << std::left << std::setw(14) << c->method << std::right;
      for (std::size_t b = 0; b < c->budgets.size(); ++b) {
        if (c->n_decisions[b] > 0) {
          out << std::setw(8) << c->mean_nll[b];
        } else {
          out << std::setw(8) << "-";
        }
      }
      out << std::setw(9) << c->delta << '\n';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace sumlens
