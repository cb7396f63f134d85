#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "marketsim/chain.hpp"
#include "marketsim/policy.hpp"
#include "marketsim/view.hpp"

namespace marketsim {

//! Off-chain signal a handler raises for its local user.
struct NotificationEvent {
  BlockNum block = 0;
  std::string target;
  std::string kind;
  Digest ad_id;
  std::string detail;
};

struct RetainedReserve {
  Units price = 0;
  Bytes salt;
};

//! One marketplace participant: replicated ledger plus market view, a
//! deterministic private RNG, retained secrets and the queue of
//! transactions it will put into its own next block.
struct Node {
  Identity ident;
  ChainState ledger;
  MarketView view;
  std::mt19937_64 rng;
  std::uint64_t next_nonce = 0;

  bool withhold_reveal = false;  // fault injection: never reveal the reserve
  std::map<Digest, RetainedReserve> reserve_secrets;
  std::set<Digest> watched;  // ads this node tracks as a consumer
  std::vector<TransactionEnvelope> outstanding;

  TransactionEnvelope sign(Payload payload, FundsAttachment funds = {}) {
    return make_tx(ident.id, std::move(payload), funds, next_nonce++);
  }

  Bytes fresh_salt() {
    Bytes salt(kMinSaltLen);
    for (auto& b : salt) b = static_cast<std::uint8_t>(rng());
    return salt;
  }
};

//! Supplier intent: open a trade. A sealed reserve is committed under a
//! fresh salt and the plaintext is retained for the reveal phase.
inline TransactionEnvelope build_advertisement(Node& node, AdvertisementPayload ad,
                                               std::optional<Units> sealed_reserve,
                                               FundsAttachment funds) {
  if (sealed_reserve) {
    Bytes salt = node.fresh_salt();
    ad.reveal_required = true;
    ad.reserve_commitment = commit_reserve_price(*sealed_reserve, salt);
    TransactionEnvelope tx = node.sign(std::move(ad), funds);
    node.reserve_secrets[tx.tx_id] = {*sealed_reserve, std::move(salt)};
    return tx;
  }
  return node.sign(std::move(ad), funds);
}

inline TransactionEnvelope build_bid(Node& node, const Digest& ad_id, std::string content,
                                     FundsAttachment funds) {
  return node.sign(BidPayload{ad_id, std::move(content)}, funds);
}

inline TransactionEnvelope build_decision(Node& node, const Digest& ad_id, const Digest& bid) {
  EvaluationPayload p;
  p.ad_id = ad_id;
  p.decision_bid = bid;
  return node.sign(std::move(p));
}

inline TransactionEnvelope build_scores(Node& node, const Digest& ad_id, const Digest& bid,
                                        std::vector<Units> scores) {
  EvaluationPayload p;
  p.ad_id = ad_id;
  p.scored_bid = bid;
  p.scores = std::move(scores);
  return node.sign(std::move(p));
}

inline TransactionEnvelope build_arbitration(Node& node, const Digest& ad_id) {
  return node.sign(ArbitrationRequestPayload{ad_id});
}

inline TransactionEnvelope build_resolution(Node& node, const Digest& ad_id,
                                            std::string refund_to) {
  return node.sign(DisputeResolutionPayload{ad_id, std::move(refund_to)});
}

struct BlockOutcome {
  std::vector<TransactionEnvelope> broadcasts;  // reveals etc, go to the pool
  std::vector<NotificationEvent> notes;
};

namespace detail {

inline void note(BlockOutcome& out, const Block& b, const Node& node, std::string kind,
                 const Digest& ad_id, std::string detail = {}) {
  out.notes.push_back({b.number, node.ident.id, std::move(kind), ad_id, std::move(detail)});
}

//! Settlement of every lock a decided trade holds. Transfers go first so
//! the closing unlock only releases what remains.
inline void resolve_money_flow(Node& node, const TradeRecord& t, const BidRecord* winner,
                               bool forfeit_ad_deposit, const Block& trigger) {
  bool escrowed = t.ad.physical && winner != nullptr;
  if (!t.ad_funds.empty()) {
    bool payment_left = t.ad_funds.payment > 0;
    bool deposit_left = t.ad_funds.deposit > 0;
    if (forfeit_ad_deposit && deposit_left) {
      node.outstanding.push_back(node.sign(
          FundsTransferPayload{t.ad_id, FundsComponent::deposit, trigger.proposer}));
      deposit_left = false;
    }
    if (!escrowed) {
      if (payment_left && winner != nullptr) {
        node.outstanding.push_back(node.sign(
            FundsTransferPayload{t.ad_id, FundsComponent::payment, winner->sender}));
        payment_left = false;
      }
      if (payment_left || deposit_left)
        node.outstanding.push_back(node.sign(FundsUnlockPayload{t.ad_id}));
    }
  }
  for (const auto& b : t.bids) {
    if (b.payment == 0 && b.deposit == 0) continue;
    bool is_winner = winner != nullptr && b.tx_id == winner->tx_id;
    if (!is_winner) {
      node.outstanding.push_back(node.sign(FundsUnlockPayload{b.tx_id}));
      continue;
    }
    if (escrowed) continue;  // stays locked until the case closes
    if (b.payment > 0)
      node.outstanding.push_back(node.sign(
          FundsTransferPayload{b.tx_id, FundsComponent::payment, t.supplier}));
    if (b.deposit > 0) node.outstanding.push_back(node.sign(FundsUnlockPayload{b.tx_id}));
  }
}

//! Matching: pick the winner, apply the sealed-reserve gate, put the
//! decision plus its money flow into the node's next proposal.
inline void match_trade(Node& node, const TradeRecord& t, const Block& trigger,
                        const PolicyTable& policy) {
  std::optional<Digest> winner_id =
      select_winning_bid(t, trigger.digest, policy.binding(t.ad.trade_type));
  bool forfeit = false;
  if (t.ad.reveal_required) {
    const RevealRecord* rev = t.reveal_in_window();
    forfeit = rev == nullptr;
    if (winner_id) {
      const BidRecord* wb = t.find_bid(*winner_id);
      if (rev == nullptr || wb->payment < rev->reserve_price) winner_id = std::nullopt;
    }
  }
  const BidRecord* winner = winner_id ? t.find_bid(*winner_id) : nullptr;
  if (winner != nullptr)
    node.outstanding.push_back(
        node.sign(AssignmentPayload{t.ad_id, winner->tx_id, trigger.number}));
  else
    node.outstanding.push_back(node.sign(NoAssignmentPayload{t.ad_id, trigger.number}));
  resolve_money_flow(node, t, winner, forfeit, trigger);
}

//! Escrow settlement shared by auto-release and dispute rulings. With no
//! refund target the payment follows the trade direction; a ruling sends
//! it to the named party instead. Deposits always return to their owners.
inline void settle_escrow(Node& node, const TradeRecord& t,
                          const std::optional<std::string>& refund_to) {
  const EscrowCase& esc = *t.escrow;
  const BidRecord* wb = t.find_bid(*t.winning_bid);
  if (esc.reverse_flow) {
    node.outstanding.push_back(node.sign(FundsTransferPayload{
        t.ad_id, FundsComponent::payment, refund_to.value_or(esc.winner)}));
  } else if (wb->payment > 0) {
    node.outstanding.push_back(node.sign(FundsTransferPayload{
        wb->tx_id, FundsComponent::payment, refund_to.value_or(esc.supplier)}));
  }
  if (wb->deposit > 0) node.outstanding.push_back(node.sign(FundsUnlockPayload{wb->tx_id}));
  if (t.ad_funds.deposit > 0) node.outstanding.push_back(node.sign(FundsUnlockPayload{t.ad_id}));
}

inline void proposer_duties(Node& node, const Block& b, const PolicyTable& policy,
                            const std::vector<FiredEvent>& fired) {
  for (const auto& ev : fired) {
    const TradeRecord* t = node.view.trade(ev.ad_id);
    if (t == nullptr) continue;
    if (ev.kind == FiredKind::match_due) {
      match_trade(node, *t, b, policy);
    } else if (ev.kind == FiredKind::escrow_release_due) {
      node.outstanding.push_back(node.sign(EscrowReleasePayload{t->ad_id}));
      settle_escrow(node, *t, std::nullopt);
    }
  }
  for (const auto& tx : b.txs) {
    if (tx.kind() != TxKind::dispute_resolution) continue;
    const auto& p = std::get<DisputeResolutionPayload>(tx.payload);
    const TradeRecord* t = node.view.trade(p.ad_id);
    if (t != nullptr && t->escrow && t->escrow->state == EscrowState::resolved)
      settle_escrow(node, *t, p.refund_to);
  }
}

inline void supplier_duties(Node& node, const Block& b, const std::vector<FiredEvent>& fired,
                            BlockOutcome& out) {
  for (const auto& ev : fired) {
    if (ev.kind != FiredKind::reveal_window_opened) continue;
    const TradeRecord* t = node.view.trade(ev.ad_id);
    if (t == nullptr || t->supplier != node.ident.id) continue;
    auto secret = node.reserve_secrets.find(ev.ad_id);
    if (secret == node.reserve_secrets.end() || node.withhold_reveal) continue;
    out.broadcasts.push_back(node.sign(
        RevelationPayload{ev.ad_id, secret->second.price, secret->second.salt}));
  }
  for (const auto& tx : b.txs) {
    switch (tx.kind()) {
      case TxKind::assignment: {
        const auto& p = std::get<AssignmentPayload>(tx.payload);
        const TradeRecord* t = node.view.trade(p.ad_id);
        if (t == nullptr || t->supplier != node.ident.id) break;
        const BidRecord* wb = t->find_bid(p.winning_bid);
        note(out, b, node, "ItemAssigned", p.ad_id,
             wb ? "winner=" + wb->sender + " price=" + std::to_string(wb->payment) : "");
        break;
      }
      case TxKind::no_assignment: {
        const auto& p = std::get<NoAssignmentPayload>(tx.payload);
        const TradeRecord* t = node.view.trade(p.ad_id);
        if (t != nullptr && t->supplier == node.ident.id)
          note(out, b, node, "NoAssignment", p.ad_id);
        break;
      }
      case TxKind::dispute_resolution: {
        const auto& p = std::get<DisputeResolutionPayload>(tx.payload);
        const TradeRecord* t = node.view.trade(p.ad_id);
        if (t != nullptr && t->supplier == node.ident.id)
          note(out, b, node, "DisputeResolved", p.ad_id, "refund=" + p.refund_to);
        break;
      }
      default:
        break;
    }
  }
}

inline void consumer_duties(Node& node, const Block& b, BlockOutcome& out) {
  for (const auto& ad_id : node.watched) {
    const TradeRecord* t = node.view.trade(ad_id);
    if (t == nullptr || t->supplier == node.ident.id) continue;
    for (const auto& tx : b.txs) {
      if (tx.kind() == TxKind::assignment) {
        const auto& p = std::get<AssignmentPayload>(tx.payload);
        if (p.ad_id != ad_id) continue;
        const BidRecord* wb = t->find_bid(p.winning_bid);
        bool mine = wb != nullptr && wb->sender == node.ident.id;
        note(out, b, node, "ItemAssigned", ad_id,
             mine ? "won" : "winner=" + (wb ? wb->sender : "?"));
      } else if (tx.kind() == TxKind::no_assignment) {
        const auto& p = std::get<NoAssignmentPayload>(tx.payload);
        if (p.ad_id == ad_id) note(out, b, node, "NoAssignment", ad_id);
      } else if (tx.kind() == TxKind::dispute_resolution) {
        const auto& p = std::get<DisputeResolutionPayload>(tx.payload);
        if (p.ad_id == ad_id && t->escrow && t->escrow->winner == node.ident.id)
          note(out, b, node, "DisputeResolved", ad_id, "refund=" + p.refund_to);
      }
    }
    std::vector<const BidRecord*> fresh;
    for (const auto& bid : t->bids)
      if (bid.block == b.number) fresh.push_back(&bid);
    if (t->ad.trade_type == TradeType::english_auction && !fresh.empty()) {
      Units top = fresh.front()->payment;
      for (const auto* f : fresh) top = std::max(top, f->payment);
      note(out, b, node, "NewHighestBid", ad_id, std::to_string(top));
    } else if (t->ad.trade_type == TradeType::dutch_auction) {
      if (!fresh.empty()) {
        note(out, b, node, "DutchBidSeen", ad_id, std::to_string(fresh.front()->payment));
      } else if (t->phase == TradePhase::bidding && !t->matching_fired &&
                 b.number > t->ad_block &&
                 (b.number - t->ad_block) % *t->ad.bid_window == 0) {
        Units price = dutch_price_at(t->ad_block, b.number, *t->ad.starting_price,
                                     *t->ad.bid_window, *t->ad.min_increment);
        note(out, b, node, "DutchPriceLowered", ad_id, std::to_string(price));
      }
    }
  }
}

}  // namespace detail

//! Reaction of one node to one applied block: the proposer of the next
//! block settles what the block triggered, suppliers reveal and observe
//! their trades, consumers watch the ads they care about. fired must be
//! the events this block's application produced on the node's own view.
inline BlockOutcome process_block(Node& node, const Block& b, const PolicyTable& policy,
                                  bool proposes_next, const std::vector<FiredEvent>& fired) {
  BlockOutcome out;
  if (proposes_next) detail::proposer_duties(node, b, policy, fired);
  if (node.ident.has(Role::supplier)) detail::supplier_duties(node, b, fired, out);
  if (node.ident.has(Role::consumer)) detail::consumer_duties(node, b, out);
  for (const auto& tx : b.txs) {
    if (tx.kind() != TxKind::funds_unlock) continue;
    const auto& p = std::get<FundsUnlockPayload>(tx.payload);
    auto owner = node.view.lock_owner(p.lock_tx);
    if (owner && *owner == node.ident.id)
      detail::note(out, b, node, "DepositReturned", p.lock_tx);
  }
  return out;
}

}  // namespace marketsim
