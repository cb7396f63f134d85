#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "marketsim/digest.hpp"
#include "marketsim/identity.hpp"

namespace marketsim {

enum class EscrowState : std::uint8_t {
  open,
  delivery_recorded,
  disputed,
  resolved,
  released,
};

inline std::string_view escrow_state_name(EscrowState s) {
  switch (s) {
    case EscrowState::open: return "Open";
    case EscrowState::delivery_recorded: return "DeliveryRecorded";
    case EscrowState::disputed: return "Disputed";
    case EscrowState::resolved: return "Resolved";
    case EscrowState::released: return "Released";
  }
  return "?";
}

inline bool escrow_terminal(EscrowState s) {
  return s == EscrowState::resolved || s == EscrowState::released;
}

//! Settlement guard for physical goods. Opened when the Assignment of a
//! physical advertisement applies; the winner's payment stays locked until
//! the safety window lapses or a dispute is resolved.
struct EscrowCase {
  Digest ad_id;
  std::string supplier;
  std::string winner;
  std::string agent;          // escrow-role node responsible for rulings
  bool reverse_flow = false;  // ad carried the payment (service procurement)
  BlockNum opened_at = 0;
  BlockNum release_due = 0;   // block whose application auto-releases
  EscrowState state = EscrowState::open;
  std::optional<std::string> refunded_to;  // set by a dispute ruling

  bool is_party(std::string_view id) const { return id == supplier || id == winner; }
};

}  // namespace marketsim
