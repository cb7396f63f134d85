#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "marketsim/digest.hpp"
#include "marketsim/errors.hpp"
#include "marketsim/view.hpp"

namespace marketsim {

//! Scores are fixed-point with six decimal places.
inline constexpr Units kScoreScale = 1'000'000;

using ScoreVector = std::vector<Units>;

//! Derives a score vector for one bid (fifth trade type).
using EvalFn = std::function<ScoreVector(const BidRecord&, const TradeRecord&)>;

//! Picks the winning score out of the collected per-bid scores. The result
//! must be one of the inputs; bids carrying exactly that vector become the
//! candidate set.
using RankFn = std::function<ScoreVector(const std::vector<ScoreVector>&, const TradeRecord&)>;

//! Optional use-case admission hook, run after platform validation.
using ValidateFn = std::function<ValidationResult(const TransactionEnvelope&, const TradeRecord&)>;

//! Tie-breaking among equally ranked candidates must be uniform and
//! reproducible on every node, so it is drawn from the digest of the block
//! that triggered the matching.
struct SeedMaterial {
  Digest trigger_block_digest;
  Digest ad_id;
};

inline std::size_t pseudo_random_index(const SeedMaterial& seed, std::size_t n) {
  if (n == 0) throw std::invalid_argument("empty candidate set");
  Encoder enc;
  enc.put_digest(seed.trigger_block_digest);
  enc.put_digest(seed.ad_id);
  return static_cast<std::size_t>(enc.digest().lead64() % n);
}

//! Price on the descending schedule at the given block. May go below zero;
//! auction termination is the caller's concern.
inline Units dutch_price_at(BlockNum ad_block, BlockNum block, Units starting_price,
                            BlockNum window_blocks, Units decrement) {
  BlockNum window = (block - ad_block) / window_blocks;
  return starting_price - static_cast<Units>(window) * decrement;
}

struct PluginBinding {
  EvalFn eval;
  RankFn rank;
  ValidateFn validate;
};

//! Named plugin lookup for scenario files plus the built-in objectives.
class PluginRegistry {
 public:
  void add_eval(std::string name, EvalFn fn) { evals_[std::move(name)] = std::move(fn); }
  void add_rank(std::string name, RankFn fn) { ranks_[std::move(name)] = std::move(fn); }
  void add_validate(std::string name, ValidateFn fn) {
    validates_[std::move(name)] = std::move(fn);
  }

  EvalFn eval(const std::string& name) const { return get(evals_, name, "eval"); }
  RankFn rank(const std::string& name) const { return get(ranks_, name, "ranking"); }
  ValidateFn validate(const std::string& name) const {
    return get(validates_, name, "validator");
  }

  bool has_eval(const std::string& name) const { return evals_.count(name) > 0; }
  bool has_rank(const std::string& name) const { return ranks_.count(name) > 0; }
  bool has_validate(const std::string& name) const { return validates_.count(name) > 0; }

 private:
  template <class M>
  static typename M::mapped_type get(const M& m, const std::string& name, const char* what) {
    auto it = m.find(name);
    if (it == m.end()) throw std::out_of_range(std::string("unknown ") + what + ": " + name);
    return it->second;
  }

  std::map<std::string, EvalFn> evals_;
  std::map<std::string, RankFn> ranks_;
  std::map<std::string, ValidateFn> validates_;
};

inline ScoreVector weighted_sum_max_rank(const std::vector<ScoreVector>& scores,
                                         const TradeRecord& trade) {
  if (scores.empty()) throw std::invalid_argument("no scores to rank");
  auto dot = [&trade](const ScoreVector& s) {
    __int128 acc = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      Units w = i < trade.ad.objective_weights.size() ? trade.ad.objective_weights[i]
                                                      : kScoreScale;
      acc += static_cast<__int128>(w) * static_cast<__int128>(s[i]);
    }
    return acc;
  };
  std::size_t best = 0;
  __int128 best_dot = dot(scores[0]);
  for (std::size_t i = 1; i < scores.size(); ++i) {
    __int128 d = dot(scores[i]);
    if (d > best_dot) {
      best = i;
      best_dot = d;
    }
  }
  return scores[best];
}

inline ScoreVector max_scalar_rank(const std::vector<ScoreVector>& scores, const TradeRecord&) {
  if (scores.empty()) throw std::invalid_argument("no scores to rank");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].empty()) continue;
    if (scores[best].empty() || scores[i][0] > scores[best][0]) best = i;
  }
  return scores[best];
}

inline ScoreVector bid_payment_eval(const BidRecord& bid, const TradeRecord&) {
  return {bid.payment * kScoreScale};
}

//! Scores a bid by the integer its content starts with ("42 fast delivery"
//! scores 42). Content without a leading number scores zero.
inline ScoreVector content_number_eval(const BidRecord& bid, const TradeRecord&) {
  Units value = 0;
  std::size_t i = 0;
  while (i < bid.content.size() && bid.content[i] >= '0' && bid.content[i] <= '9') {
    value = value * 10 + (bid.content[i] - '0');
    ++i;
  }
  return {i == 0 ? 0 : value * kScoreScale};
}

inline PluginRegistry builtin_registry() {
  PluginRegistry reg;
  reg.add_rank("weighted-sum-max", weighted_sum_max_rank);
  reg.add_rank("max-scalar", max_scalar_rank);
  reg.add_eval("bid-payment", bid_payment_eval);
  reg.add_eval("content-number", content_number_eval);
  return reg;
}

//! Resolved plugin bindings per trade type, fixed for a whole run.
class PolicyTable {
 public:
  PluginBinding& binding(TradeType t) { return bindings_[static_cast<std::size_t>(t)]; }
  const PluginBinding& binding(TradeType t) const {
    return bindings_[static_cast<std::size_t>(t)];
  }

  static PolicyTable with_defaults(const PluginRegistry& reg) {
    PolicyTable table;
    table.binding(TradeType::committee_scored).rank = reg.rank("weighted-sum-max");
    table.binding(TradeType::custom_scored).eval = reg.eval("bid-payment");
    table.binding(TradeType::custom_scored).rank = reg.rank("max-scalar");
    return table;
  }

 private:
  std::array<PluginBinding, 5> bindings_;
};

//! Component-wise integer mean of all committee scores per bid, in bid
//! inclusion order. Empty result when some bid has no evaluation yet.
inline std::optional<std::vector<ScoreVector>> committee_mean_scores(const TradeRecord& trade) {
  std::vector<ScoreVector> means;
  means.reserve(trade.bids.size());
  for (const auto& bid : trade.bids) {
    std::vector<Units> sum;
    Units count = 0;
    for (const auto& ev : trade.evals) {
      if (ev.scored_bid != std::optional<Digest>(bid.tx_id)) continue;
      if (sum.empty()) sum.assign(ev.scores.size(), 0);
      for (std::size_t i = 0; i < ev.scores.size() && i < sum.size(); ++i) sum[i] += ev.scores[i];
      ++count;
    }
    if (count == 0) return std::nullopt;
    for (auto& v : sum) v /= count;
    means.push_back(std::move(sum));
  }
  return means;
}

//! The matching decision: picks the winning bid of a fully expired trade,
//! or nothing when the trade cannot be matched. Reserve handling for sealed
//! reserves happens in the caller, which sees the revelation record.
inline std::optional<Digest> select_winning_bid(const TradeRecord& trade,
                                                const Digest& trigger_digest,
                                                const PluginBinding& binding) {
  if (trade.bids.empty()) return std::nullopt;
  SeedMaterial seed{trigger_digest, trade.ad_id};

  auto pick = [&](const std::vector<const BidRecord*>& candidates) -> std::optional<Digest> {
    if (candidates.empty()) return std::nullopt;
    return candidates[pseudo_random_index(seed, candidates.size())]->tx_id;
  };

  switch (trade.ad.trade_type) {
    case TradeType::english_auction: {
      Units best = *trade.highest_payment();
      std::vector<const BidRecord*> candidates;
      for (const auto& b : trade.bids)
        if (b.payment == best) candidates.push_back(&b);
      return pick(candidates);
    }
    case TradeType::dutch_auction: {
      // admission keeps every recorded bid in the same price window
      std::vector<const BidRecord*> candidates;
      for (const auto& b : trade.bids) candidates.push_back(&b);
      return pick(candidates);
    }
    case TradeType::committee_decision: {
      for (const auto& ev : trade.evals)
        if (ev.decision_bid && trade.find_bid(*ev.decision_bid) != nullptr)
          return ev.decision_bid;
      return std::nullopt;
    }
    case TradeType::committee_scored: {
      auto means = committee_mean_scores(trade);
      if (!means) return std::nullopt;
      ScoreVector winning = binding.rank ? binding.rank(*means, trade)
                                         : weighted_sum_max_rank(*means, trade);
      std::vector<const BidRecord*> candidates;
      for (std::size_t i = 0; i < trade.bids.size(); ++i)
        if ((*means)[i] == winning) candidates.push_back(&trade.bids[i]);
      return pick(candidates);
    }
    case TradeType::custom_scored: {
      if (!binding.eval || !binding.rank) return std::nullopt;
      std::vector<ScoreVector> scores;
      scores.reserve(trade.bids.size());
      for (const auto& b : trade.bids) scores.push_back(binding.eval(b, trade));
      ScoreVector winning = binding.rank(scores, trade);
      std::vector<const BidRecord*> candidates;
      for (std::size_t i = 0; i < trade.bids.size(); ++i)
        if (scores[i] == winning) candidates.push_back(&trade.bids[i]);
      return pick(candidates);
    }
  }
  return std::nullopt;
}

//! Trade-type admission rules for an incoming bid, evaluated against the
//! ledger as of the block the bid would join.
inline ValidationResult validate_bid_for_trade(const TradeRecord& trade,
                                               const FundsAttachment& funds,
                                               const std::string& content,
                                               BlockNum inclusion_block) {
  if (inclusion_block > trade.deadlines.sale_end)
    return ValidationResult::fail(Reason::sale_closed, "sale window expired");
  if (trade.ad.require_bid_deposit && funds.deposit <= 0)
    return ValidationResult::fail(Reason::missing_deposit);

  switch (trade.ad.trade_type) {
    case TradeType::english_auction: {
      Units starting = *trade.ad.starting_price;
      auto best = trade.highest_payment();
      if (!best) {
        if (funds.payment < starting)
          return ValidationResult::fail(Reason::below_starting_price);
        return ValidationResult::pass();
      }
      if (funds.payment == *best) return ValidationResult::pass();  // parallel equal bid
      if (funds.payment >= *best + *trade.ad.min_increment) return ValidationResult::pass();
      return ValidationResult::fail(Reason::increment_violation);
    }
    case TradeType::dutch_auction: {
      BlockNum window = trade.window_of(inclusion_block);
      Units price = dutch_price_at(trade.ad_block, inclusion_block, *trade.ad.starting_price,
                                   *trade.ad.bid_window, *trade.ad.min_increment);
      Units floor = std::max<Units>(0, trade.ad.public_reserve.value_or(0));
      if (price < floor)
        return ValidationResult::fail(Reason::sale_closed, "price schedule exhausted");
      if (trade.any_bid_before_window(window))
        return ValidationResult::fail(Reason::sale_closed, "an earlier window already matched");
      if (funds.payment != price)
        return ValidationResult::fail(Reason::wrong_window_price,
                                      "expected " + std::to_string(price));
      return ValidationResult::pass();
    }
    case TradeType::committee_decision:
    case TradeType::committee_scored:
    case TradeType::custom_scored:
      if (content.empty()) return ValidationResult::fail(Reason::missing_content);
      return ValidationResult::pass();
  }
  return ValidationResult::pass();
}

}  // namespace marketsim
