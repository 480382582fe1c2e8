#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumlens/attribution.hpp"

namespace sumlens {

enum class EvalKind { DISP_TOK, RM_TOK, DISP_SENT, RM_SENT };

std::string_view to_string(EvalKind kind);
EvalKind parse_eval_kind(std::string_view name);
const std::vector<EvalKind>& all_eval_kinds();
inline bool is_token_setting(EvalKind k) { return k == EvalKind::DISP_TOK || k == EvalKind::RM_TOK; }
inline bool is_display_setting(EvalKind k) { return k == EvalKind::DISP_TOK || k == EvalKind::DISP_SENT; }

struct EvalSetting {
  EvalKind kind = EvalKind::DISP_TOK;
  std::vector<std::size_t> budgets;  // strictly increasing, all ≥ 1; n = 0 is implicit
  std::size_t context_window = 1;    // pieces; token settings only

  // Tokens {1,2,4,8,16}, sentences {1,2,3,4}.
  static EvalSetting defaults(EvalKind kind);
  void validate() const;
};

// −ln max(P(target), 1e-12)
double nll(const TokenDistribution& dist, TokenId target);

// Walks `ranked` pieces; each seed adds itself, then its neighbours within
// `window` pieces nearest first (left before right), until n pieces are
// filled. Seeds already covered are skipped. Returned in document order.
std::vector<std::size_t> budget_fill(std::span<const std::size_t> ranked, const Document& doc, std::size_t n,
                                     std::size_t window);

// Token settings take piece indices, sentence settings sentence indices.
// RM_SENT removing every sentence throws EmptySourceError.
Document make_input(EvalKind kind, const Document& doc, std::span<const std::size_t> selection, TokenId mask_id);

// Display form: "<sos>Burberry, on new<eos>" for shown pieces (", " marks a gap),
// "<sos>## bets## branding<eos>" for masked pieces.
std::string render_input(EvalKind kind, const Document& doc, std::span<const std::size_t> selection);

// mean(evals) − eval0
double delta_metric(double eval0, std::span<const double> evals);

struct EvalDecision {
  Document doc;
  Prefix prefix;
  TokenId target;
};

struct EvalCurve {
  std::string method;
  EvalKind setting = EvalKind::DISP_TOK;
  std::vector<std::size_t> budgets;  // leading 0
  std::vector<double> mean_nll;
  std::vector<std::size_t> n_decisions;
  double delta = 0.0;
  std::size_t skipped = 0;  // decisions without an attribution
};

// attributions[i] belongs to decisions[i]; missing entries are skipped and counted.
EvalCurve evaluate(const Backend& backend, std::span<const EvalDecision> decisions,
                   std::span<const std::optional<AttributionVector>> attributions, const EvalSetting& setting,
                   std::string method, std::size_t jobs = 1);

// CSV with columns method,setting,budget,mean_nll,n_decisions.
std::string curves_to_csv(std::span<const EvalCurve> curves);
// Plain-text table per setting: rows = methods, columns = budgets then Δ.
std::string delta_table(std::span<const EvalCurve> curves);

}  // namespace sumlens
