#pragma once

#include <optional>
#include <string_view>

#include "marketsim/tx.hpp"

namespace marketsim {

enum class TradePhase : std::uint8_t {
  bidding,        // sale window open
  awaiting_reveal,  // sale over, sealed reserve not yet due
  awaiting_eval,    // sale over, committee deadline not yet due
  assigned,
  not_assigned,
  settled,
};

inline std::string_view phase_name(TradePhase p) {
  switch (p) {
    case TradePhase::bidding: return "Bidding";
    case TradePhase::awaiting_reveal: return "AwaitingReveal";
    case TradePhase::awaiting_eval: return "AwaitingEval";
    case TradePhase::assigned: return "Assigned";
    case TradePhase::not_assigned: return "NotAssigned";
    case TradePhase::settled: return "Settled";
  }
  return "?";
}

inline bool phase_terminal(TradePhase p) {
  return p == TradePhase::assigned || p == TradePhase::not_assigned || p == TradePhase::settled;
}

//! Absolute deadlines, fixed the moment the advertisement is included.
struct Deadlines {
  BlockNum sale_end = 0;                  // last block that may carry bids
  std::optional<BlockNum> reveal_end;     // last block that may carry the reveal
  std::optional<BlockNum> eval_end;       // last block that may carry evaluations
};

inline Deadlines derive_deadlines(const AdvertisementPayload& ad, BlockNum ad_block) {
  Deadlines d;
  d.sale_end = ad_block + ad.sale_blocks;
  if (ad.reveal_required && ad.reveal_blocks) d.reveal_end = d.sale_end + *ad.reveal_blocks;
  if (uses_committee(ad.trade_type) && ad.eval_blocks) d.eval_end = ad_block + *ad.eval_blocks;
  return d;
}

//! Block whose application decides the trade: the matching transactions are
//! proposed for the block after it.
inline BlockNum matching_trigger(const Deadlines& d) {
  if (d.reveal_end) return *d.reveal_end;
  if (d.eval_end) return *d.eval_end;
  return d.sale_end;
}

inline constexpr BlockNum kDefaultEscrowSafety = 5;

}  // namespace marketsim
