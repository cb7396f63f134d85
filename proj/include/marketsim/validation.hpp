#pragma once

#include <map>
#include <set>
#include <string>

#include "marketsim/chain.hpp"
#include "marketsim/errors.hpp"
#include "marketsim/policy.hpp"
#include "marketsim/view.hpp"

namespace marketsim {

//! Ledger snapshot a transaction is judged against. For pool admission this
//! is the canonical head state; for whole-block validation the funds maps
//! are running copies so in-block sequences stay consistent.
struct ValidationContext {
  const Roster& roster;
  const std::map<std::string, Units>& balances;
  const std::map<Digest, LockedFunds>& locked;
  const std::set<Digest>& known_tx_ids;
  const MarketView& view;
  const PolicyTable& policy;
  BlockNum inclusion_block = 0;
  Units extra_outflow = 0;  // funds the sender already promised in queued txs
};

inline bool proposer_made(TxKind k) {
  switch (k) {
    case TxKind::assignment:
    case TxKind::no_assignment:
    case TxKind::funds_unlock:
    case TxKind::funds_transfer:
    case TxKind::escrow_release:
      return true;
    default:
      return false;
  }
}

namespace detail {

inline ValidationResult check_chain_stage(const TransactionEnvelope& tx,
                                          const ValidationContext& ctx) {
  if (ctx.roster.find(tx.sender) == nullptr)
    return ValidationResult::fail(Reason::unknown_sender, tx.sender);
  if (ctx.known_tx_ids.count(tx.tx_id) > 0)
    return ValidationResult::fail(Reason::duplicate_tx, tx.tx_id.hex8());
  if (tx.funds.payment < 0 || tx.funds.deposit < 0)
    return ValidationResult::fail(Reason::insufficient_balance, "negative attachment");
  TxKind kind = tx.kind();
  if (!tx.funds.empty() && kind != TxKind::item_advertisement && kind != TxKind::bid)
    return ValidationResult::fail(Reason::unexpected_funds, std::string(tx_kind_name(kind)));
  if (!tx.funds.empty()) {
    auto it = ctx.balances.find(tx.sender);
    Units available = (it == ctx.balances.end() ? 0 : it->second) - ctx.extra_outflow;
    if (available < tx.funds.total())
      return ValidationResult::fail(Reason::insufficient_balance, tx.sender);
  }
  if (proposer_made(kind) && !ctx.roster.has_role(tx.sender, Role::proposer))
    return ValidationResult::fail(Reason::not_proposer, tx.sender);
  if (kind == TxKind::item_advertisement && !ctx.roster.has_role(tx.sender, Role::supplier))
    return ValidationResult::fail(Reason::missing_role, tx.sender + " lacks supplier");
  if (kind == TxKind::bid && !ctx.roster.has_role(tx.sender, Role::consumer))
    return ValidationResult::fail(Reason::missing_role, tx.sender + " lacks consumer");
  return ValidationResult::pass();
}

inline ValidationResult check_advertisement(const TransactionEnvelope& tx,
                                            const ValidationContext& ctx) {
  const auto& ad = std::get<AdvertisementPayload>(tx.payload);
  if (auto defect = advertisement_defect(ad))
    return ValidationResult::fail(Reason::malformed_advertisement, *defect);
  for (const auto& member : ad.committee)
    if (!ctx.roster.has_role(member, Role::committee))
      return ValidationResult::fail(Reason::malformed_advertisement,
                                    "not a committee node: " + member);
  if (ad.physical && !ctx.roster.escrow_agent())
    return ValidationResult::fail(Reason::no_escrow_configured);
  return ValidationResult::pass();
}

inline ValidationResult check_bid(const TransactionEnvelope& tx, const ValidationContext& ctx) {
  const auto& p = std::get<BidPayload>(tx.payload);
  const TradeRecord* t = ctx.view.trade(p.ad_id);
  if (t == nullptr) return ValidationResult::fail(Reason::unknown_advertisement, p.ad_id.hex8());
  return validate_bid_for_trade(*t, tx.funds, p.content, ctx.inclusion_block);
}

inline ValidationResult check_revelation(const TransactionEnvelope& tx,
                                         const ValidationContext& ctx) {
  const auto& p = std::get<RevelationPayload>(tx.payload);
  const TradeRecord* t = ctx.view.trade(p.ad_id);
  if (t == nullptr) return ValidationResult::fail(Reason::unknown_advertisement, p.ad_id.hex8());
  if (!t->ad.reveal_required || !t->ad.reserve_commitment || !t->deadlines.reveal_end)
    return ValidationResult::fail(Reason::not_a_reveal_trade);
  if (tx.sender != t->supplier) return ValidationResult::fail(Reason::not_advertiser, tx.sender);
  if (ctx.inclusion_block <= t->deadlines.sale_end ||
      ctx.inclusion_block > *t->deadlines.reveal_end)
    return ValidationResult::fail(Reason::reveal_window_closed);
  if (p.salt.size() < kMinSaltLen) return ValidationResult::fail(Reason::salt_too_short);
  if (!verify_reserve_price(p, *t->ad.reserve_commitment))
    return ValidationResult::fail(Reason::hash_mismatch);
  return ValidationResult::pass();
}

inline ValidationResult check_evaluation(const TransactionEnvelope& tx,
                                         const ValidationContext& ctx) {
  const auto& p = std::get<EvaluationPayload>(tx.payload);
  const TradeRecord* t = ctx.view.trade(p.ad_id);
  if (t == nullptr) return ValidationResult::fail(Reason::unknown_advertisement, p.ad_id.hex8());
  if (!uses_committee(t->ad.trade_type))
    return ValidationResult::fail(Reason::not_a_committee_trade);
  bool member = false;
  for (const auto& m : t->ad.committee) member = member || m == tx.sender;
  if (!member) return ValidationResult::fail(Reason::not_in_committee, tx.sender);
  if (!t->deadlines.eval_end || ctx.inclusion_block > *t->deadlines.eval_end)
    return ValidationResult::fail(Reason::eval_window_closed);
  if (t->ad.trade_type == TradeType::committee_decision) {
    if (!p.decision_bid || p.scored_bid || !p.scores.empty())
      return ValidationResult::fail(Reason::wrong_evaluation_form, "expected a decision");
    if (t->find_bid(*p.decision_bid) == nullptr)
      return ValidationResult::fail(Reason::unknown_bid, p.decision_bid->hex8());
  } else {
    if (!p.scored_bid || p.decision_bid)
      return ValidationResult::fail(Reason::wrong_evaluation_form, "expected a score vector");
    if (t->find_bid(*p.scored_bid) == nullptr)
      return ValidationResult::fail(Reason::unknown_bid, p.scored_bid->hex8());
    if (!t->ad.score_dim || p.scores.size() != *t->ad.score_dim)
      return ValidationResult::fail(Reason::bad_score_dimension,
                                    "expected " + std::to_string(t->ad.score_dim.value_or(0)));
    if (t->has_eval_from(tx.sender, p.scored_bid))
      return ValidationResult::fail(Reason::duplicate_evaluation);
  }
  if (t->ad.trade_type == TradeType::committee_decision &&
      t->has_eval_from(tx.sender, std::nullopt))
    return ValidationResult::fail(Reason::duplicate_evaluation);
  return ValidationResult::pass();
}

inline ValidationResult check_assignment(const TransactionEnvelope& tx,
                                         const ValidationContext& ctx) {
  const auto& p = std::get<AssignmentPayload>(tx.payload);
  const TradeRecord* t = ctx.view.trade(p.ad_id);
  if (t == nullptr) return ValidationResult::fail(Reason::unknown_advertisement, p.ad_id.hex8());
  if (phase_terminal(t->phase)) return ValidationResult::fail(Reason::duplicate_matching);
  if (t->find_bid(p.winning_bid) == nullptr)
    return ValidationResult::fail(Reason::unknown_bid, p.winning_bid.hex8());
  return ValidationResult::pass();
}

inline ValidationResult check_no_assignment(const TransactionEnvelope& tx,
                                            const ValidationContext& ctx) {
  const auto& p = std::get<NoAssignmentPayload>(tx.payload);
  const TradeRecord* t = ctx.view.trade(p.ad_id);
  if (t == nullptr) return ValidationResult::fail(Reason::unknown_advertisement, p.ad_id.hex8());
  if (phase_terminal(t->phase)) return ValidationResult::fail(Reason::duplicate_matching);
  return ValidationResult::pass();
}

inline ValidationResult check_funds_unlock(const TransactionEnvelope& tx,
                                           const ValidationContext& ctx) {
  const auto& p = std::get<FundsUnlockPayload>(tx.payload);
  if (ctx.locked.count(p.lock_tx) == 0)
    return ValidationResult::fail(Reason::unknown_lock, p.lock_tx.hex8());
  return ValidationResult::pass();
}

inline ValidationResult check_funds_transfer(const TransactionEnvelope& tx,
                                             const ValidationContext& ctx) {
  const auto& p = std::get<FundsTransferPayload>(tx.payload);
  auto it = ctx.locked.find(p.lock_tx);
  if (it == ctx.locked.end())
    return ValidationResult::fail(Reason::unknown_lock, p.lock_tx.hex8());
  Units slot = p.component == FundsComponent::payment ? it->second.payment : it->second.deposit;
  if (slot <= 0)
    return ValidationResult::fail(Reason::unknown_lock,
                                  std::string("empty ") + std::string(funds_component_name(
                                      p.component)));
  if (ctx.roster.find(p.recipient) == nullptr)
    return ValidationResult::fail(Reason::unknown_recipient, p.recipient);
  return ValidationResult::pass();
}

inline ValidationResult check_arbitration(const TransactionEnvelope& tx,
                                          const ValidationContext& ctx) {
  const auto& p = std::get<ArbitrationRequestPayload>(tx.payload);
  const TradeRecord* t = ctx.view.trade(p.ad_id);
  if (t == nullptr) return ValidationResult::fail(Reason::unknown_advertisement, p.ad_id.hex8());
  if (!t->escrow) return ValidationResult::fail(Reason::case_closed, "no escrow case");
  if (t->escrow->state != EscrowState::open &&
      t->escrow->state != EscrowState::delivery_recorded)
    return ValidationResult::fail(Reason::case_closed,
                                  std::string(escrow_state_name(t->escrow->state)));
  if (!t->escrow->is_party(tx.sender))
    return ValidationResult::fail(Reason::not_a_party, tx.sender);
  return ValidationResult::pass();
}

inline ValidationResult check_resolution(const TransactionEnvelope& tx,
                                         const ValidationContext& ctx) {
  const auto& p = std::get<DisputeResolutionPayload>(tx.payload);
  const TradeRecord* t = ctx.view.trade(p.ad_id);
  if (t == nullptr) return ValidationResult::fail(Reason::unknown_advertisement, p.ad_id.hex8());
  if (!t->escrow) return ValidationResult::fail(Reason::case_closed, "no escrow case");
  if (tx.sender != t->escrow->agent)
    return ValidationResult::fail(Reason::not_escrow_agent, tx.sender);
  if (t->escrow->state != EscrowState::disputed)
    return ValidationResult::fail(Reason::not_disputed,
                                  std::string(escrow_state_name(t->escrow->state)));
  if (!t->escrow->is_party(p.refund_to))
    return ValidationResult::fail(Reason::not_a_party, p.refund_to);
  return ValidationResult::pass();
}

inline ValidationResult check_escrow_release(const TransactionEnvelope& tx,
                                             const ValidationContext& ctx) {
  const auto& p = std::get<EscrowReleasePayload>(tx.payload);
  const TradeRecord* t = ctx.view.trade(p.ad_id);
  if (t == nullptr) return ValidationResult::fail(Reason::unknown_advertisement, p.ad_id.hex8());
  if (!t->escrow) return ValidationResult::fail(Reason::case_closed, "no escrow case");
  if (t->escrow->state != EscrowState::open &&
      t->escrow->state != EscrowState::delivery_recorded)
    return ValidationResult::fail(Reason::case_closed,
                                  std::string(escrow_state_name(t->escrow->state)));
  return ValidationResult::pass();
}

}  // namespace detail

//! Three-stage admission: chain-level bookkeeping, platform trade rules,
//! then the optional use-case hook bound to the trade type.
inline ValidationResult validate_tx(const TransactionEnvelope& tx, const ValidationContext& ctx) {
  if (auto r = detail::check_chain_stage(tx, ctx); !r.ok()) return r;

  ValidationResult platform = ValidationResult::pass();
  switch (tx.kind()) {
    case TxKind::item_advertisement: platform = detail::check_advertisement(tx, ctx); break;
    case TxKind::bid: platform = detail::check_bid(tx, ctx); break;
    case TxKind::revelation: platform = detail::check_revelation(tx, ctx); break;
    case TxKind::evaluation: platform = detail::check_evaluation(tx, ctx); break;
    case TxKind::assignment: platform = detail::check_assignment(tx, ctx); break;
    case TxKind::no_assignment: platform = detail::check_no_assignment(tx, ctx); break;
    case TxKind::funds_unlock: platform = detail::check_funds_unlock(tx, ctx); break;
    case TxKind::funds_transfer: platform = detail::check_funds_transfer(tx, ctx); break;
    case TxKind::arbitration_request: platform = detail::check_arbitration(tx, ctx); break;
    case TxKind::dispute_resolution: platform = detail::check_resolution(tx, ctx); break;
    case TxKind::escrow_release: platform = detail::check_escrow_release(tx, ctx); break;
  }
  if (!platform.ok()) return platform;

  if (tx.kind() == TxKind::bid || tx.kind() == TxKind::evaluation) {
    const Digest* ad_id = nullptr;
    if (tx.kind() == TxKind::bid) ad_id = &std::get<BidPayload>(tx.payload).ad_id;
    else ad_id = &std::get<EvaluationPayload>(tx.payload).ad_id;
    if (const TradeRecord* t = ctx.view.trade(*ad_id)) {
      const ValidateFn& hook = ctx.policy.binding(t->ad.trade_type).validate;
      if (hook) {
        if (auto r = hook(tx, *t); !r.ok()) return r;
      }
    }
  }
  return ValidationResult::pass();
}

//! Whole-block check used when folding foreign blocks: linkage, digest,
//! proposer schedule, then every transaction against a running ledger.
inline ValidationResult validate_block(const Block& b, const Roster& roster,
                                       const ChainState& pre, const MarketView& pre_view,
                                       const PolicyTable& policy) {
  if (b.number != pre.height() + 1)
    return ValidationResult::fail(Reason::invalid_block, "bad height");
  if (b.parent != pre.head().digest)
    return ValidationResult::fail(Reason::invalid_block, "bad parent");
  if (b.digest != block_digest(b.number, b.parent, b.txs))
    return ValidationResult::fail(Reason::invalid_block, "bad digest");
  if (b.proposer != roster.proposer_of(b.number))
    return ValidationResult::fail(Reason::invalid_block, "bad proposer");

  auto balances = pre.balances;
  auto locked = pre.locked;
  auto known = pre.known_tx_ids;
  for (const auto& tx : b.txs) {
    ValidationContext ctx{roster, balances, locked, known, pre_view, policy, b.number, 0};
    if (auto r = validate_tx(tx, ctx); !r.ok()) {
      r.detail = tx.tx_id.hex8() + (r.detail.empty() ? "" : " " + r.detail);
      return r;
    }
    known.insert(tx.tx_id);
    if (!apply_funds(balances, locked, tx))
      return ValidationResult::fail(Reason::invalid_block, "funds application failed");
  }
  return ValidationResult::pass();
}

}  // namespace marketsim
