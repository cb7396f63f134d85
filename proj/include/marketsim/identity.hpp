#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace marketsim {

using Units = std::int64_t;
using BlockNum = std::uint64_t;

enum class Role : std::uint8_t { supplier, consumer, proposer, committee, escrow, validator };

inline std::string_view role_name(Role r) {
  switch (r) {
    case Role::supplier: return "supplier";
    case Role::consumer: return "consumer";
    case Role::proposer: return "proposer";
    case Role::committee: return "committee";
    case Role::escrow: return "escrow";
    case Role::validator: return "validator";
  }
  return "?";
}

inline std::optional<Role> role_from_name(std::string_view s) {
  for (Role r : {Role::supplier, Role::consumer, Role::proposer, Role::committee, Role::escrow,
                 Role::validator})
    if (role_name(r) == s) return r;
  return std::nullopt;
}

struct Identity {
  std::string id;
  std::set<Role> roles;

  bool has(Role r) const { return roles.count(r) > 0; }
};

//! The fixed set of participants for one run. Declaration order is part of
//! the consensus: proposer rotation and handler scheduling both follow it.
class Roster {
 public:
  void add(Identity ident) {
    if (find(ident.id) != nullptr) throw std::invalid_argument("duplicate node id: " + ident.id);
    if (ident.has(Role::proposer)) proposer_ids_.push_back(ident.id);
    nodes_.push_back(std::move(ident));
  }

  const std::vector<Identity>& members() const { return nodes_; }

  const Identity* find(std::string_view id) const {
    for (const auto& n : nodes_)
      if (n.id == id) return &n;
    return nullptr;
  }

  bool has_role(std::string_view id, Role r) const {
    const Identity* n = find(id);
    return n != nullptr && n->has(r);
  }

  const std::vector<std::string>& proposers() const { return proposer_ids_; }

  //! Round-robin schedule. Block 0 is the genesis block and has no proposer.
  const std::string& proposer_of(BlockNum block) const {
    if (proposer_ids_.empty()) throw std::logic_error("roster has no proposers");
    return proposer_ids_[block % proposer_ids_.size()];
  }

  //! First escrow-capable member in declaration order, if any.
  std::optional<std::string> escrow_agent() const {
    for (const auto& n : nodes_)
      if (n.has(Role::escrow)) return n.id;
    return std::nullopt;
  }

 private:
  std::vector<Identity> nodes_;
  std::vector<std::string> proposer_ids_;
};

}  // namespace marketsim
