#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "marketsim/engine.hpp"

namespace marketsim {

struct AuditReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  void add(BlockNum block, std::string what) { violations.push_back({block, std::move(what)}); }

  void merge(const std::vector<Violation>& more) {
    violations.insert(violations.end(), more.begin(), more.end());
  }
};

namespace oracle {

//! The oracle rebuilds trade outcomes straight from raw blocks, leaning on
//! nothing but the digest primitives and the bound plugins, so an engine
//! bug cannot hide by corrupting view bookkeeping and matcher the same way.
struct OracleBid {
  Digest tx_id;
  std::string sender;
  Units payment = 0;
  Units deposit = 0;
  std::string content;
  BlockNum block = 0;
  std::size_t index = 0;
};

struct OracleEval {
  std::string sender;
  std::optional<Digest> decision_bid;
  std::optional<Digest> scored_bid;
  std::vector<Units> scores;
};

struct OracleTrade {
  Digest ad_id;
  std::string supplier;
  AdvertisementPayload ad;
  FundsAttachment ad_funds;
  BlockNum ad_block = 0;
  std::vector<OracleBid> bids;
  std::vector<std::pair<BlockNum, RevelationPayload>> reveals;
  std::vector<OracleEval> evals;  // first per (member, bid) only

  struct Terminal {
    TxKind kind;
    std::optional<Digest> winner;
    BlockNum trigger = 0;
    BlockNum block = 0;
  };
  std::vector<Terminal> terminals;
};

inline std::map<Digest, OracleTrade> collect(const std::vector<Block>& blocks) {
  std::map<Digest, OracleTrade> trades;
  auto eval_seen = [](const OracleTrade& t, const std::string& sender,
                      const std::optional<Digest>& bid, bool decision_form) {
    for (const auto& e : t.evals) {
      if (e.sender != sender) continue;
      if (decision_form) return true;
      if (e.scored_bid == bid) return true;
    }
    return false;
  };
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.txs.size(); ++i) {
      const auto& tx = b.txs[i];
      switch (tx.kind()) {
        case TxKind::item_advertisement: {
          OracleTrade t;
          t.ad_id = tx.tx_id;
          t.supplier = tx.sender;
          t.ad = std::get<AdvertisementPayload>(tx.payload);
          t.ad_funds = tx.funds;
          t.ad_block = b.number;
          trades.emplace(tx.tx_id, std::move(t));
          break;
        }
        case TxKind::bid: {
          const auto& p = std::get<BidPayload>(tx.payload);
          auto it = trades.find(p.ad_id);
          if (it != trades.end())
            it->second.bids.push_back({tx.tx_id, tx.sender, tx.funds.payment, tx.funds.deposit,
                                       p.content, b.number, i});
          break;
        }
        case TxKind::revelation: {
          const auto& p = std::get<RevelationPayload>(tx.payload);
          auto it = trades.find(p.ad_id);
          if (it != trades.end()) it->second.reveals.emplace_back(b.number, p);
          break;
        }
        case TxKind::evaluation: {
          const auto& p = std::get<EvaluationPayload>(tx.payload);
          auto it = trades.find(p.ad_id);
          if (it == trades.end()) break;
          bool decision_form = it->second.ad.trade_type == TradeType::committee_decision;
          if (eval_seen(it->second, tx.sender, p.scored_bid, decision_form)) break;
          it->second.evals.push_back({tx.sender, p.decision_bid, p.scored_bid, p.scores});
          break;
        }
        case TxKind::assignment: {
          const auto& p = std::get<AssignmentPayload>(tx.payload);
          auto it = trades.find(p.ad_id);
          if (it != trades.end())
            it->second.terminals.push_back(
                {TxKind::assignment, p.winning_bid, p.trigger_block, b.number});
          break;
        }
        case TxKind::no_assignment: {
          const auto& p = std::get<NoAssignmentPayload>(tx.payload);
          auto it = trades.find(p.ad_id);
          if (it != trades.end())
            it->second.terminals.push_back(
                {TxKind::no_assignment, std::nullopt, p.trigger_block, b.number});
          break;
        }
        default:
          break;
      }
    }
  }
  return trades;
}

//! Expected trigger block for a trade, from first principles.
inline BlockNum expected_trigger(const OracleTrade& t) {
  BlockNum sale_end = t.ad_block + t.ad.sale_blocks;
  if (t.ad.reveal_required && t.ad.reveal_blocks) return sale_end + *t.ad.reveal_blocks;
  if (uses_committee(t.ad.trade_type) && t.ad.eval_blocks) return t.ad_block + *t.ad.eval_blocks;
  if (t.ad.trade_type == TradeType::dutch_auction) {
    BlockNum step = *t.ad.bid_window;
    if (!t.bids.empty()) {
      BlockNum first_window = (t.bids.front().block - t.ad_block) / step;
      for (const auto& bid : t.bids)
        first_window = std::min(first_window, (bid.block - t.ad_block) / step);
      return std::min(t.ad_block + (first_window + 1) * step, sale_end);
    }
    Units floor = std::max<Units>(0, t.ad.public_reserve.value_or(0));
    for (BlockNum boundary = t.ad_block + step; boundary < sale_end; boundary += step) {
      BlockNum window = (boundary - t.ad_block) / step;
      Units price = *t.ad.starting_price - static_cast<Units>(window) * *t.ad.min_increment;
      if (price < floor) return boundary;
    }
    return sale_end;
  }
  return sale_end;
}

//! Uniform draw over candidates, recomputed from the digest primitive.
inline std::size_t prf_index(const Digest& trigger_digest, const Digest& ad_id, std::size_t n) {
  Bytes material;
  material.insert(material.end(), trigger_digest.bytes.begin(), trigger_digest.bytes.end());
  material.insert(material.end(), ad_id.bytes.begin(), ad_id.bytes.end());
  return static_cast<std::size_t>(sha256(material).lead64() % n);
}

//! Brute-force winner recomputation, mirroring the published rules but not
//! the production matcher's code path.
inline std::optional<Digest> expected_winner(const OracleTrade& t, const Digest& trigger_digest,
                                             const PolicyTable& policy) {
  std::vector<const OracleBid*> candidates;
  switch (t.ad.trade_type) {
    case TradeType::english_auction: {
      Units best = 0;
      bool any = false;
      for (const auto& b : t.bids) {
        if (!any || b.payment > best) best = b.payment;
        any = true;
      }
      if (!any) return std::nullopt;
      for (const auto& b : t.bids)
        if (b.payment == best) candidates.push_back(&b);
      break;
    }
    case TradeType::dutch_auction: {
      for (const auto& b : t.bids) candidates.push_back(&b);
      if (candidates.empty()) return std::nullopt;
      break;
    }
    case TradeType::committee_decision: {
      for (const auto& e : t.evals) {
        if (!e.decision_bid) continue;
        for (const auto& b : t.bids)
          if (b.tx_id == *e.decision_bid) return b.tx_id;
      }
      return std::nullopt;
    }
    case TradeType::committee_scored:
    case TradeType::custom_scored: {
      if (t.bids.empty()) return std::nullopt;
      // reconstruct the records the plugins expect
      TradeRecord rec;
      rec.ad_id = t.ad_id;
      rec.supplier = t.supplier;
      rec.ad = t.ad;
      rec.ad_funds = t.ad_funds;
      rec.ad_block = t.ad_block;
      std::vector<BidRecord> bid_recs;
      bid_recs.reserve(t.bids.size());
      for (const auto& b : t.bids)
        bid_recs.push_back({b.tx_id, b.sender, b.payment, b.deposit, b.content, b.block, b.index});
      std::vector<ScoreVector> scores;
      if (t.ad.trade_type == TradeType::committee_scored) {
        for (const auto& b : t.bids) {
          std::vector<Units> sum;
          Units count = 0;
          for (const auto& e : t.evals) {
            if (e.scored_bid != std::optional<Digest>(b.tx_id)) continue;
            if (sum.empty()) sum.assign(e.scores.size(), 0);
            for (std::size_t i = 0; i < e.scores.size() && i < sum.size(); ++i)
              sum[i] += e.scores[i];
            ++count;
          }
          if (count == 0) return std::nullopt;
          for (auto& v : sum) v /= count;
          scores.push_back(std::move(sum));
        }
      } else {
        const EvalFn& eval = policy.binding(TradeType::custom_scored).eval;
        if (!eval) return std::nullopt;
        for (const auto& br : bid_recs) scores.push_back(eval(br, rec));
      }
      const RankFn& rank = policy.binding(t.ad.trade_type).rank;
      ScoreVector winning =
          rank ? rank(scores, rec) : weighted_sum_max_rank(scores, rec);
      for (std::size_t i = 0; i < t.bids.size(); ++i)
        if (scores[i] == winning) candidates.push_back(&t.bids[i]);
      break;
    }
  }
  if (candidates.empty()) return std::nullopt;
  return candidates[prf_index(trigger_digest, t.ad_id, candidates.size())]->tx_id;
}

}  // namespace oracle

//! Re-derives every matching decision from raw blocks and compares it with
//! what actually landed on chain.
inline std::vector<Violation> audit_matching(const std::vector<Block>& blocks,
                                             const PolicyTable& policy, bool capped) {
  std::vector<Violation> out;
  auto flag = [&out](BlockNum block, std::string what) {
    out.push_back({block, std::move(what)});
  };

  // the digest chain itself must be reproducible before digests seed draws
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.digest != block_digest(b.number, b.parent, b.txs)) flag(b.number, "digest mismatch");
    if (i > 0 && b.parent != blocks[i - 1].digest) flag(b.number, "parent mismatch");
    if (b.number != i) flag(b.number, "height mismatch");
  }

  BlockNum height = blocks.empty() ? 0 : blocks.back().number;
  auto trades = oracle::collect(blocks);
  for (const auto& [ad_id, t] : trades) {
    BlockNum trigger = oracle::expected_trigger(t);
    const char* tag = t.ad.item.empty() ? "trade" : t.ad.item.c_str();

    if (t.terminals.size() > 1) {
      flag(t.terminals[1].block, std::string(tag) + ": matched more than once");
      continue;
    }
    if (t.terminals.empty()) {
      if (!capped && height >= trigger + 1)
        flag(trigger + 1, std::string(tag) + ": matching never landed");
      continue;
    }
    const auto& term = t.terminals.front();
    if (term.block <= trigger)
      flag(term.block, std::string(tag) + ": matched before its deadline");
    if (!capped && term.block != trigger + 1)
      flag(term.block, std::string(tag) + ": matching landed late");
    if (term.trigger != trigger)
      flag(term.block, std::string(tag) + ": wrong trigger block recorded");
    if (trigger >= blocks.size()) continue;  // already flagged above

    std::optional<Digest> expect =
        oracle::expected_winner(t, blocks[trigger].digest, policy);
    if (t.ad.reveal_required && expect) {
      const RevelationPayload* reveal = nullptr;
      BlockNum sale_end = t.ad_block + t.ad.sale_blocks;
      for (const auto& [rb, payload] : t.reveals) {
        if (rb <= sale_end || rb > trigger) continue;
        if (!t.ad.reserve_commitment ||
            !verify_reserve_price(payload, *t.ad.reserve_commitment))
          continue;
        reveal = &payload;
        break;
      }
      if (reveal == nullptr) {
        expect = std::nullopt;
      } else {
        for (const auto& b : t.bids)
          if (b.tx_id == *expect && b.payment < reveal->reserve_price) expect = std::nullopt;
      }
    }

    if (expect && term.kind != TxKind::assignment)
      flag(term.block, std::string(tag) + ": expected an assignment");
    if (!expect && term.kind != TxKind::no_assignment)
      flag(term.block, std::string(tag) + ": expected no assignment");
    if (expect && term.winner != expect)
      flag(term.block, std::string(tag) + ": wrong winner");
  }
  return out;
}

//! Replays admission: every transaction the chain carries must still pass
//! validation against the state right before its block.
inline std::vector<Violation> audit_admission(const std::vector<Block>& blocks,
                                              const Roster& roster, const PolicyTable& policy,
                                              const std::map<std::string, Units>& genesis) {
  std::vector<Violation> out;
  ChainState st = genesis_state(roster, genesis);
  MarketView view{&roster};
  for (const auto& b : blocks) {
    if (b.number == 0) continue;
    if (auto r = validate_block(b, roster, st, view, policy); !r.ok())
      out.push_back({b.number, "replay rejects block: " + std::string(reason_name(r.reason)) +
                                   " " + r.detail});
    if (!st.apply(b)) {
      out.push_back({b.number, "replay cannot apply block"});
      break;
    }
    view.advance(b, st);
  }
  return out;
}

//! Settled trades may not leave funds behind, and every surviving lock must
//! belong to a trade that is still in flight.
inline std::vector<Violation> audit_residual_locks(const ChainState& st, const MarketView& view) {
  std::vector<Violation> out;
  for (const auto& [lock_tx, lf] : st.locked) {
    const TradeRecord* t = view.trade(lock_tx);
    if (t == nullptr) t = view.trade_of_bid(lock_tx);
    if (t == nullptr) {
      out.push_back({st.height(), "orphaned lock " + lock_tx.hex8()});
      continue;
    }
    if (t->phase == TradePhase::settled)
      out.push_back({st.height(), "settled trade still holds lock " + lock_tx.hex8()});
  }
  return out;
}

//! Full post-run audit: the engine's own per-block findings plus the
//! independent oracle, the admission replay and the residual-lock sweep.
inline AuditReport run_audits(const Engine& engine) {
  AuditReport report;
  report.merge(engine.violations());
  report.merge(audit_matching(engine.state().blocks, engine.policy(),
                              engine.scenario().block_tx_cap.has_value()));
  std::map<std::string, Units> genesis;
  for (const auto& decl : engine.scenario().nodes) genesis[decl.id] = decl.balance;
  report.merge(audit_admission(engine.state().blocks, engine.roster(), engine.policy(), genesis));
  report.merge(audit_residual_locks(engine.state(), engine.view()));
  return report;
}

}  // namespace marketsim
