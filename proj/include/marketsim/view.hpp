#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "marketsim/chain.hpp"
#include "marketsim/escrow.hpp"
#include "marketsim/lifecycle.hpp"
#include "marketsim/tx.hpp"

namespace marketsim {

struct BidRecord {
  Digest tx_id;
  std::string sender;
  Units payment = 0;
  Units deposit = 0;
  std::string content;
  BlockNum block = 0;
  std::size_t index_in_block = 0;
};

struct RevealRecord {
  Digest tx_id;
  Units reserve_price = 0;
  BlockNum block = 0;
};

struct EvaluationRecord {
  Digest tx_id;
  std::string sender;
  std::optional<Digest> decision_bid;
  std::optional<Digest> scored_bid;
  std::vector<Units> scores;
  BlockNum block = 0;
  std::size_t index_in_block = 0;
};

//! Everything a node remembers about one advertised trade, derived purely
//! from applied blocks.
struct TradeRecord {
  Digest ad_id;
  std::string supplier;
  AdvertisementPayload ad;
  FundsAttachment ad_funds;
  BlockNum ad_block = 0;
  Deadlines deadlines;

  TradePhase phase = TradePhase::bidding;
  bool matching_fired = false;  // a matching decision is owed or already on chain
  std::vector<BidRecord> bids;        // inclusion order
  std::vector<RevealRecord> reveals;  // inclusion order
  std::vector<EvaluationRecord> evals;

  std::optional<Digest> winning_bid;
  std::optional<BlockNum> trigger_block;
  std::optional<BlockNum> matched_at;
  std::optional<EscrowCase> escrow;

  const BidRecord* find_bid(const Digest& bid_tx) const {
    for (const auto& b : bids)
      if (b.tx_id == bid_tx) return &b;
    return nullptr;
  }

  std::optional<Units> highest_payment() const {
    std::optional<Units> best;
    for (const auto& b : bids)
      if (!best || b.payment > *best) best = b.payment;
    return best;
  }

  //! Dutch: which price window a block falls into.
  BlockNum window_of(BlockNum block) const {
    return (block - ad_block) / ad.bid_window.value_or(1);
  }

  bool any_bid_before_window(BlockNum window) const {
    for (const auto& b : bids)
      if (window_of(b.block) < window) return true;
    return false;
  }

  bool has_eval_from(const std::string& sender, const std::optional<Digest>& bid) const {
    for (const auto& e : evals) {
      if (e.sender != sender) continue;
      if (ad.trade_type == TradeType::committee_decision) return true;
      if (e.scored_bid == bid) return true;
    }
    return false;
  }

  const RevealRecord* reveal_in_window() const {
    if (!deadlines.reveal_end) return nullptr;
    for (const auto& r : reveals)
      if (r.block > deadlines.sale_end && r.block <= *deadlines.reveal_end) return &r;
    return nullptr;
  }
};

enum class FiredKind : std::uint8_t {
  match_due,            // next proposer owes Assignment/NoAssignment + money flow
  reveal_window_opened, // sealed-reserve sale just expired, supplier should reveal
  escrow_release_due,   // safety window lapsed, next proposer owes the release
};

struct FiredEvent {
  Digest ad_id;
  FiredKind kind = FiredKind::match_due;
  BlockNum block = 0;  // block whose application fired this (the trigger)
};

//! Per-advertisement countdowns, decremented once per applied block and
//! firing exactly once when they hit zero.
struct ExpirationTracker {
  enum class Kind : std::uint8_t { sale_end, reveal_end, eval_end, dutch_step, escrow_release };

  struct Entry {
    Digest ad_id;
    Kind kind;
    BlockNum remaining = 0;
    BlockNum armed_at = 0;  // the arming block does not count down
  };

  std::vector<Entry> entries;

  void arm(const Digest& ad_id, Kind kind, BlockNum in_blocks, BlockNum armed_at) {
    entries.push_back({ad_id, kind, in_blocks, armed_at});
  }

  void cancel_trade_deadlines(const Digest& ad_id) {
    std::erase_if(entries, [&](const Entry& e) {
      return e.ad_id == ad_id && e.kind != Kind::escrow_release;
    });
  }

  void cancel_release(const Digest& ad_id) {
    std::erase_if(entries, [&](const Entry& e) {
      return e.ad_id == ad_id && e.kind == Kind::escrow_release;
    });
  }
};

//! Market meaning folded from the chain: trades, their phases, escrow cases
//! and the deadline clockwork. Every node keeps one and they must agree,
//! since matching decisions are computed from this view.
class MarketView {
 public:
  MarketView() = default;
  explicit MarketView(const Roster* roster) : roster_(roster) {}

  const TradeRecord* trade(const Digest& ad_id) const {
    auto it = trades_.find(ad_id);
    return it == trades_.end() ? nullptr : &it->second;
  }

  const std::vector<Digest>& trade_order() const { return order_; }

  const TradeRecord* trade_of_bid(const Digest& bid_tx) const {
    auto it = bid_home_.find(bid_tx);
    return it == bid_home_.end() ? nullptr : trade(it->second);
  }

  //! Owner of the funds locked by an ad or bid transaction.
  std::optional<std::string> lock_owner(const Digest& tx_id) const {
    auto it = lock_owners_.find(tx_id);
    if (it == lock_owners_.end()) return std::nullopt;
    return it->second;
  }

  bool all_trades_settled() const {
    for (const auto& id : order_)
      if (trades_.at(id).phase != TradePhase::settled) return false;
    return true;
  }

  bool any_open_escrow() const {
    for (const auto& id : order_) {
      const auto& esc = trades_.at(id).escrow;
      if (esc && !escrow_terminal(esc->state)) return true;
    }
    return false;
  }

  //! Folds one applied block: records its transactions, then advances the
  //! deadline counters. post_state is the ledger after the same block; it
  //! is only consulted to detect fully settled trades.
  std::vector<FiredEvent> advance(const Block& b, const ChainState& post_state) {
    for (std::size_t i = 0; i < b.txs.size(); ++i) record_tx(b.txs[i], b.number, i);
    std::vector<FiredEvent> fired = tick(b.number);
    refresh_settled(post_state);
    return fired;
  }

 private:
  TradeRecord* trade_mut(const Digest& ad_id) {
    auto it = trades_.find(ad_id);
    return it == trades_.end() ? nullptr : &it->second;
  }

  void record_tx(const TransactionEnvelope& tx, BlockNum block, std::size_t index) {
    switch (tx.kind()) {
      case TxKind::item_advertisement: {
        const auto& ad = std::get<AdvertisementPayload>(tx.payload);
        TradeRecord rec;
        rec.ad_id = tx.tx_id;
        rec.supplier = tx.sender;
        rec.ad = ad;
        rec.ad_funds = tx.funds;
        rec.ad_block = block;
        rec.deadlines = derive_deadlines(ad, block);
        trades_.emplace(tx.tx_id, std::move(rec));
        order_.push_back(tx.tx_id);
        if (!tx.funds.empty()) lock_owners_[tx.tx_id] = tx.sender;
        if (ad.trade_type == TradeType::dutch_auction)
          tracker_.arm(tx.tx_id, ExpirationTracker::Kind::dutch_step, *ad.bid_window, block);
        tracker_.arm(tx.tx_id, ExpirationTracker::Kind::sale_end, ad.sale_blocks, block);
        if (ad.reveal_required && ad.reveal_blocks)
          tracker_.arm(tx.tx_id, ExpirationTracker::Kind::reveal_end,
                       ad.sale_blocks + *ad.reveal_blocks, block);
        if (uses_committee(ad.trade_type) && ad.eval_blocks)
          tracker_.arm(tx.tx_id, ExpirationTracker::Kind::eval_end, *ad.eval_blocks, block);
        break;
      }
      case TxKind::bid: {
        const auto& p = std::get<BidPayload>(tx.payload);
        if (TradeRecord* t = trade_mut(p.ad_id)) {
          t->bids.push_back(
              {tx.tx_id, tx.sender, tx.funds.payment, tx.funds.deposit, p.content, block, index});
          bid_home_[tx.tx_id] = p.ad_id;
          if (!tx.funds.empty()) lock_owners_[tx.tx_id] = tx.sender;
        }
        break;
      }
      case TxKind::revelation: {
        const auto& p = std::get<RevelationPayload>(tx.payload);
        if (TradeRecord* t = trade_mut(p.ad_id))
          t->reveals.push_back({tx.tx_id, p.reserve_price, block});
        break;
      }
      case TxKind::evaluation: {
        const auto& p = std::get<EvaluationPayload>(tx.payload);
        if (TradeRecord* t = trade_mut(p.ad_id)) {
          // first evaluation per (member, bid) counts; in-block repeats drop
          bool dup = t->ad.trade_type == TradeType::committee_decision
                         ? t->has_eval_from(tx.sender, std::nullopt)
                         : t->has_eval_from(tx.sender, p.scored_bid);
          if (!dup)
            t->evals.push_back(
                {tx.tx_id, tx.sender, p.decision_bid, p.scored_bid, p.scores, block, index});
        }
        break;
      }
      case TxKind::assignment: {
        const auto& p = std::get<AssignmentPayload>(tx.payload);
        TradeRecord* t = trade_mut(p.ad_id);
        if (t == nullptr) break;
        t->winning_bid = p.winning_bid;
        t->trigger_block = p.trigger_block;
        t->matched_at = block;
        t->phase = TradePhase::assigned;
        t->matching_fired = true;
        tracker_.cancel_trade_deadlines(p.ad_id);
        if (t->ad.physical) open_escrow(*t, block);
        break;
      }
      case TxKind::no_assignment: {
        const auto& p = std::get<NoAssignmentPayload>(tx.payload);
        TradeRecord* t = trade_mut(p.ad_id);
        if (t == nullptr) break;
        t->trigger_block = p.trigger_block;
        t->matched_at = block;
        t->phase = TradePhase::not_assigned;
        t->matching_fired = true;
        tracker_.cancel_trade_deadlines(p.ad_id);
        break;
      }
      case TxKind::arbitration_request: {
        const auto& p = std::get<ArbitrationRequestPayload>(tx.payload);
        TradeRecord* t = trade_mut(p.ad_id);
        if (t && t->escrow && !escrow_terminal(t->escrow->state)) {
          t->escrow->state = EscrowState::disputed;
          tracker_.cancel_release(p.ad_id);
        }
        break;
      }
      case TxKind::dispute_resolution: {
        const auto& p = std::get<DisputeResolutionPayload>(tx.payload);
        TradeRecord* t = trade_mut(p.ad_id);
        if (t && t->escrow && t->escrow->state == EscrowState::disputed) {
          t->escrow->state = EscrowState::resolved;
          t->escrow->refunded_to = p.refund_to;
        }
        break;
      }
      case TxKind::escrow_release: {
        const auto& p = std::get<EscrowReleasePayload>(tx.payload);
        TradeRecord* t = trade_mut(p.ad_id);
        if (t && t->escrow && !escrow_terminal(t->escrow->state))
          t->escrow->state = EscrowState::released;
        break;
      }
      case TxKind::funds_unlock:
      case TxKind::funds_transfer:
        break;  // pure ledger effects, ChainState handles them
    }
  }

  void open_escrow(TradeRecord& t, BlockNum block) {
    EscrowCase esc;
    esc.ad_id = t.ad_id;
    esc.supplier = t.supplier;
    const BidRecord* wb = t.winning_bid ? t.find_bid(*t.winning_bid) : nullptr;
    esc.winner = wb ? wb->sender : "";
    esc.agent = roster_ && roster_->escrow_agent() ? *roster_->escrow_agent() : "";
    esc.reverse_flow = t.ad_funds.payment > 0;
    esc.opened_at = block;
    BlockNum safety = t.ad.escrow_safety.value_or(kDefaultEscrowSafety);
    esc.release_due = block + safety;
    t.escrow = esc;
    tracker_.arm(t.ad_id, ExpirationTracker::Kind::escrow_release, safety, block);
  }

  std::vector<FiredEvent> tick(BlockNum block) {
    std::vector<FiredEvent> fired;
    std::vector<ExpirationTracker::Entry> kept;
    kept.reserve(tracker_.entries.size());
    for (auto entry : tracker_.entries) {
      TradeRecord* t = trade_mut(entry.ad_id);
      if (t == nullptr) continue;
      if (entry.kind != ExpirationTracker::Kind::escrow_release && t->matching_fired) continue;
      if (entry.armed_at == block) {
        kept.push_back(entry);
        continue;
      }
      if (entry.remaining > 1) {
        entry.remaining -= 1;
        kept.push_back(entry);
        continue;
      }
      switch (entry.kind) {
        case ExpirationTracker::Kind::sale_end:
          if (t->ad.reveal_required) {
            t->phase = TradePhase::awaiting_reveal;
            fired.push_back({entry.ad_id, FiredKind::reveal_window_opened, block});
          } else if (uses_committee(t->ad.trade_type)) {
            t->phase = TradePhase::awaiting_eval;
          } else {
            t->matching_fired = true;
            fired.push_back({entry.ad_id, FiredKind::match_due, block});
          }
          break;
        case ExpirationTracker::Kind::reveal_end:
        case ExpirationTracker::Kind::eval_end:
          t->matching_fired = true;
          fired.push_back({entry.ad_id, FiredKind::match_due, block});
          break;
        case ExpirationTracker::Kind::dutch_step: {
          // A bid landing in this very block belongs to the window that
          // starts here; only strictly earlier bids close out a window.
          bool prior_bid = std::any_of(
              t->bids.begin(), t->bids.end(),
              [&](const BidRecord& b) { return b.block < block; });
          if (prior_bid) {
            t->matching_fired = true;
            fired.push_back({entry.ad_id, FiredKind::match_due, block});
            break;
          }
          BlockNum next_window = t->window_of(block);
          Units next_price =
              *t->ad.starting_price -
              static_cast<Units>(next_window) * *t->ad.min_increment;
          Units floor = std::max<Units>(0, t->ad.public_reserve.value_or(0));
          if (next_price < floor) {
            t->matching_fired = true;
            fired.push_back({entry.ad_id, FiredKind::match_due, block});
          } else {
            entry.remaining = *t->ad.bid_window;
            entry.armed_at = block;
            kept.push_back(entry);
          }
          break;
        }
        case ExpirationTracker::Kind::escrow_release:
          if (t->escrow && !escrow_terminal(t->escrow->state) &&
              t->escrow->state != EscrowState::disputed)
            fired.push_back({entry.ad_id, FiredKind::escrow_release_due, block});
          break;
      }
    }
    tracker_.entries = std::move(kept);
    return fired;
  }

  void refresh_settled(const ChainState& post_state) {
    for (const auto& id : order_) {
      TradeRecord& t = trades_.at(id);
      if (t.phase != TradePhase::assigned && t.phase != TradePhase::not_assigned) continue;
      if (t.escrow && !escrow_terminal(t.escrow->state)) continue;
      if (post_state.locked.count(t.ad_id) > 0) continue;
      bool lock_left = false;
      for (const auto& b : t.bids)
        if (post_state.locked.count(b.tx_id) > 0) {
          lock_left = true;
          break;
        }
      if (!lock_left) t.phase = TradePhase::settled;
    }
  }

  const Roster* roster_ = nullptr;
  std::map<Digest, TradeRecord> trades_;
  std::vector<Digest> order_;
  std::map<Digest, Digest> bid_home_;
  std::map<Digest, std::string> lock_owners_;
  ExpirationTracker tracker_;
};

}  // namespace marketsim
