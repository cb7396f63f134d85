#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "marketsim/digest.hpp"
#include "marketsim/identity.hpp"

namespace marketsim {

//! The five supported trade mechanics.
enum class TradeType : std::uint8_t {
  english_auction,    // ascending price, optional sealed reserve
  dutch_auction,      // descending price schedule, optional public floor
  committee_decision, // committee names the winner directly
  committee_scored,   // committee submits score vectors, objective ranks them
  custom_scored,      // plugin scores bid content, plugin ranks the scores
};

inline std::string_view trade_type_name(TradeType t) {
  switch (t) {
    case TradeType::english_auction: return "english";
    case TradeType::dutch_auction: return "dutch";
    case TradeType::committee_decision: return "committee-rank";
    case TradeType::committee_scored: return "committee-custom";
    case TradeType::custom_scored: return "custom";
  }
  return "?";
}

inline std::optional<TradeType> trade_type_from_name(std::string_view s) {
  for (TradeType t : {TradeType::english_auction, TradeType::dutch_auction,
                      TradeType::committee_decision, TradeType::committee_scored,
                      TradeType::custom_scored})
    if (trade_type_name(t) == s) return t;
  return std::nullopt;
}

inline bool uses_committee(TradeType t) {
  return t == TradeType::committee_decision || t == TradeType::committee_scored;
}

//! Funds escorted by a transaction. Both components move from the sender's
//! balance into a lock keyed by the transaction id when the block applies.
struct FundsAttachment {
  Units payment = 0;
  Units deposit = 0;

  Units total() const { return payment + deposit; }
  bool empty() const { return payment == 0 && deposit == 0; }

  auto operator<=>(const FundsAttachment&) const = default;
};

enum class TxKind : std::uint8_t {
  item_advertisement,
  bid,
  revelation,
  evaluation,
  assignment,
  no_assignment,
  funds_unlock,
  funds_transfer,
  arbitration_request,
  dispute_resolution,
  escrow_release,
};

inline std::string_view tx_kind_name(TxKind k) {
  switch (k) {
    case TxKind::item_advertisement: return "ItemAdvertisement";
    case TxKind::bid: return "Bid";
    case TxKind::revelation: return "Revelation";
    case TxKind::evaluation: return "Evaluation";
    case TxKind::assignment: return "Assignment";
    case TxKind::no_assignment: return "NoAssignment";
    case TxKind::funds_unlock: return "FundsUnlock";
    case TxKind::funds_transfer: return "FundsTransfer";
    case TxKind::arbitration_request: return "ArbitrationRequest";
    case TxKind::dispute_resolution: return "DisputeResolution";
    case TxKind::escrow_release: return "EscrowRelease";
  }
  return "?";
}

//! Opens a trade. Deadlines are block counts relative to the inclusion
//! block; absolute deadlines are derived once the ad lands in a block.
struct AdvertisementPayload {
  TradeType trade_type = TradeType::english_auction;
  std::string item;                     // free-form description
  BlockNum sale_blocks = 0;             // bidding window length
  std::optional<BlockNum> reveal_blocks;  // reveal window length (sealed reserve)
  std::optional<BlockNum> eval_blocks;    // evaluation deadline (committee types)
  std::optional<BlockNum> bid_window;     // dutch: blocks per price step
  std::optional<Units> starting_price;    // english/dutch
  std::optional<Units> min_increment;     // english: bid step; dutch: price drop
  std::optional<Units> public_reserve;    // dutch price floor
  bool reveal_required = false;           // english sealed reserve in play
  std::optional<Digest> reserve_commitment;
  std::vector<std::string> committee;
  std::optional<std::uint64_t> score_dim;  // committee_scored: vector length
  std::vector<Units> objective_weights;    // fixed-point 1e6, ranking input
  bool physical = false;                   // settle through escrow
  std::optional<BlockNum> escrow_safety;   // override for auto-release window
  bool require_bid_deposit = false;
};

struct BidPayload {
  Digest ad_id;
  std::string content;
};

//! Opens the sealed reserve: digest(BE64(price) || salt) must equal the
//! commitment carried by the advertisement.
struct RevelationPayload {
  Digest ad_id;
  Units reserve_price = 0;
  Bytes salt;
};

//! Committee input. Exactly one of the two forms is used per trade type:
//! a direct decision naming the winning bid, or a score vector for one bid.
struct EvaluationPayload {
  Digest ad_id;
  std::optional<Digest> decision_bid;
  std::optional<Digest> scored_bid;
  std::vector<Units> scores;  // fixed-point 1e6
};

struct AssignmentPayload {
  Digest ad_id;
  Digest winning_bid;
  BlockNum trigger_block = 0;
};

struct NoAssignmentPayload {
  Digest ad_id;
  BlockNum trigger_block = 0;
};

struct FundsUnlockPayload {
  Digest lock_tx;  // the tx whose remaining locked funds return to the owner
};

enum class FundsComponent : std::uint8_t { payment, deposit };

inline std::string_view funds_component_name(FundsComponent c) {
  return c == FundsComponent::payment ? "payment" : "deposit";
}

struct FundsTransferPayload {
  Digest lock_tx;
  FundsComponent component = FundsComponent::payment;
  std::string recipient;
};

struct ArbitrationRequestPayload {
  Digest ad_id;
};

struct DisputeResolutionPayload {
  Digest ad_id;
  std::string refund_to;
};

struct EscrowReleasePayload {
  Digest ad_id;
};

using Payload =
    std::variant<AdvertisementPayload, BidPayload, RevelationPayload, EvaluationPayload,
                 AssignmentPayload, NoAssignmentPayload, FundsUnlockPayload, FundsTransferPayload,
                 ArbitrationRequestPayload, DisputeResolutionPayload, EscrowReleasePayload>;

inline TxKind payload_kind(const Payload& p) {
  return static_cast<TxKind>(p.index());
}

inline void encode_payload(Encoder& enc, const AdvertisementPayload& a) {
  enc.put_u8(static_cast<std::uint8_t>(a.trade_type));
  enc.put_str(a.item);
  enc.put_u64(a.sale_blocks);
  enc.put_opt_u64(a.reveal_blocks);
  enc.put_opt_u64(a.eval_blocks);
  enc.put_opt_u64(a.bid_window);
  enc.put_opt_i64(a.starting_price);
  enc.put_opt_i64(a.min_increment);
  enc.put_opt_i64(a.public_reserve);
  enc.put_bool(a.reveal_required);
  enc.put_opt_digest(a.reserve_commitment);
  enc.put_vec_str(a.committee);
  enc.put_opt_u64(a.score_dim);
  enc.put_vec_i64(a.objective_weights);
  enc.put_bool(a.physical);
  enc.put_opt_u64(a.escrow_safety);
  enc.put_bool(a.require_bid_deposit);
}

inline void encode_payload(Encoder& enc, const BidPayload& b) {
  enc.put_digest(b.ad_id);
  enc.put_str(b.content);
}

inline void encode_payload(Encoder& enc, const RevelationPayload& r) {
  enc.put_digest(r.ad_id);
  enc.put_i64(r.reserve_price);
  enc.put_bytes(r.salt);
}

inline void encode_payload(Encoder& enc, const EvaluationPayload& e) {
  enc.put_digest(e.ad_id);
  enc.put_opt_digest(e.decision_bid);
  enc.put_opt_digest(e.scored_bid);
  enc.put_vec_i64(e.scores);
}

inline void encode_payload(Encoder& enc, const AssignmentPayload& a) {
  enc.put_digest(a.ad_id);
  enc.put_digest(a.winning_bid);
  enc.put_u64(a.trigger_block);
}

inline void encode_payload(Encoder& enc, const NoAssignmentPayload& n) {
  enc.put_digest(n.ad_id);
  enc.put_u64(n.trigger_block);
}

inline void encode_payload(Encoder& enc, const FundsUnlockPayload& u) {
  enc.put_digest(u.lock_tx);
}

inline void encode_payload(Encoder& enc, const FundsTransferPayload& t) {
  enc.put_digest(t.lock_tx);
  enc.put_u8(static_cast<std::uint8_t>(t.component));
  enc.put_str(t.recipient);
}

inline void encode_payload(Encoder& enc, const ArbitrationRequestPayload& a) {
  enc.put_digest(a.ad_id);
}

inline void encode_payload(Encoder& enc, const DisputeResolutionPayload& d) {
  enc.put_digest(d.ad_id);
  enc.put_str(d.refund_to);
}

inline void encode_payload(Encoder& enc, const EscrowReleasePayload& e) {
  enc.put_digest(e.ad_id);
}

inline void encode_payload(Encoder& enc, const Payload& p) {
  std::visit([&enc](const auto& concrete) { encode_payload(enc, concrete); }, p);
}

struct TransactionEnvelope {
  Digest tx_id;
  std::string sender;
  Payload payload;
  FundsAttachment funds;
  std::uint64_t nonce = 0;

  TxKind kind() const { return payload_kind(payload); }
};

inline Digest compute_tx_id(const std::string& sender, const Payload& payload,
                            const FundsAttachment& funds, std::uint64_t nonce) {
  Encoder enc;
  enc.put_str(sender);
  enc.put_u8(static_cast<std::uint8_t>(payload_kind(payload)));
  encode_payload(enc, payload);
  enc.put_i64(funds.payment);
  enc.put_i64(funds.deposit);
  enc.put_u64(nonce);
  return enc.digest();
}

inline TransactionEnvelope make_tx(std::string sender, Payload payload, FundsAttachment funds,
                                   std::uint64_t nonce) {
  TransactionEnvelope env;
  env.tx_id = compute_tx_id(sender, payload, funds, nonce);
  env.sender = std::move(sender);
  env.payload = std::move(payload);
  env.funds = funds;
  env.nonce = nonce;
  return env;
}

inline constexpr std::size_t kMinSaltLen = 16;

//! Sealed reserve commitment: digest over the canonical price encoding
//! followed by the raw salt.
inline Digest commit_reserve_price(Units price, std::span<const std::uint8_t> salt) {
  if (salt.size() < kMinSaltLen) throw std::invalid_argument("reserve salt too short");
  Encoder enc;
  enc.put_i64(price);
  enc.put_raw(salt);
  return enc.digest();
}

inline bool verify_reserve_price(const RevelationPayload& rev, const Digest& commitment) {
  if (rev.salt.size() < kMinSaltLen) return false;
  Encoder enc;
  enc.put_i64(rev.reserve_price);
  enc.put_raw(rev.salt);
  return enc.digest() == commitment;
}

//! Structural self-consistency of an advertisement, independent of chain
//! state. Returns a human-readable description of the first defect.
inline std::optional<std::string> advertisement_defect(const AdvertisementPayload& ad) {
  if (ad.sale_blocks == 0) return "sale duration must be positive";
  if (ad.reveal_required) {
    if (ad.trade_type != TradeType::english_auction)
      return "sealed reserve only applies to english auctions";
    if (!ad.reserve_commitment) return "sealed reserve needs a commitment";
    if (!ad.reveal_blocks || *ad.reveal_blocks == 0) return "sealed reserve needs a reveal window";
  } else {
    if (ad.reserve_commitment) return "commitment without reveal flag";
    if (ad.reveal_blocks) return "reveal window without reveal flag";
  }
  if (uses_committee(ad.trade_type)) {
    if (ad.committee.empty()) return "committee trade needs committee members";
    if (!ad.eval_blocks) return "committee trade needs an evaluation deadline";
    if (*ad.eval_blocks <= ad.sale_blocks)
      return "evaluation deadline must fall after the sale window";
  } else if (!ad.committee.empty()) {
    return "committee given for a non-committee trade";
  }
  switch (ad.trade_type) {
    case TradeType::english_auction:
      if (!ad.starting_price) return "english auction needs a starting price";
      if (!ad.min_increment || *ad.min_increment <= 0)
        return "english auction needs a positive bid increment";
      if (ad.public_reserve) return "english reserve must be sealed, not public";
      break;
    case TradeType::dutch_auction:
      if (!ad.starting_price) return "dutch auction needs a starting price";
      if (!ad.bid_window || *ad.bid_window == 0) return "dutch auction needs a price step window";
      if (!ad.min_increment || *ad.min_increment <= 0)
        return "dutch auction needs a positive price decrement";
      if (ad.public_reserve && *ad.public_reserve < 0) return "negative reserve";
      break;
    case TradeType::committee_scored:
      if (!ad.score_dim || *ad.score_dim == 0) return "scored trade needs a score dimension";
      if (!ad.objective_weights.empty() && ad.objective_weights.size() != *ad.score_dim)
        return "objective weights must match the score dimension";
      break;
    case TradeType::committee_decision:
    case TradeType::custom_scored:
      break;
  }
  if (ad.score_dim && ad.trade_type != TradeType::committee_scored &&
      ad.trade_type != TradeType::custom_scored)
    return "score dimension without a scored trade type";
  if (ad.starting_price && *ad.starting_price < 0) return "negative starting price";
  if (ad.escrow_safety && !ad.physical) return "escrow safety window without physical flag";
  return std::nullopt;
}

}  // namespace marketsim
