#pragma once

#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "marketsim/chain.hpp"
#include "marketsim/roles.hpp"
#include "marketsim/scenario.hpp"
#include "marketsim/validation.hpp"

namespace marketsim {

//! Consistency breach detected while running. A correct build never
//! produces any; the audits exist to prove that.
struct Violation {
  BlockNum block = 0;
  std::string what;
};

//! Drives one scenario to completion: fires scripted user intents,
//! assembles blocks round-robin, folds them into the canonical state and
//! every node replica, runs the role handlers and the per-block audits.
class Engine {
 public:
  explicit Engine(Scenario sc, const PluginRegistry& registry = builtin_registry())
      : sc_(std::move(sc)) {
    for (const auto& decl : sc_.nodes) roster_.add(Identity{decl.id, decl.roles});
    policy_ = PolicyTable::with_defaults(registry);
    for (const auto& decl : sc_.plugins) {
      PluginBinding& b = policy_.binding(decl.type);
      if (decl.eval) {
        if (decl.type != TradeType::custom_scored)
          throw std::invalid_argument("eval plugin only applies to custom trades");
        b.eval = registry.eval(*decl.eval);
      }
      if (decl.ranking) {
        if (decl.type != TradeType::custom_scored && decl.type != TradeType::committee_scored)
          throw std::invalid_argument("ranking plugin only applies to scored trades");
        b.rank = registry.rank(*decl.ranking);
      }
      if (decl.validate) b.validate = registry.validate(*decl.validate);
    }

    std::map<std::string, Units> genesis_balances;
    for (const auto& decl : sc_.nodes) genesis_balances[decl.id] = decl.balance;
    canon_ = genesis_state(roster_, genesis_balances);
    canon_view_ = MarketView(&roster_);
    genesis_total_ = canon_.total_funds();

    for (const auto& decl : sc_.nodes) {
      Node node;
      node.ident = *roster_.find(decl.id);
      node.ledger = genesis_state(roster_, genesis_balances);
      node.view = MarketView(&roster_);
      node.withhold_reveal = decl.withhold_reveal;
      Encoder enc;
      enc.put_u64(sc_.seed);
      enc.put_str(decl.id);
      node.rng.seed(enc.digest().lead64());
      nodes_.push_back(std::move(node));
    }
  }

  //! Runs until max-blocks or until nothing can happen any more.
  void run() {
    for (BlockNum t = 1; t <= sc_.max_blocks; ++t) {
      fire_events(t);
      Block b = build_block(t);
      commit_block(b, t);
      if (quiescent()) break;
    }
  }

  const Scenario& scenario() const { return sc_; }
  const Roster& roster() const { return roster_; }
  const PolicyTable& policy() const { return policy_; }
  const ChainState& state() const { return canon_; }
  const MarketView& view() const { return canon_view_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::string>& trace() const { return trace_; }
  const std::vector<Violation>& violations() const { return violations_; }
  Units genesis_total() const { return genesis_total_; }

  Digest chain_digest() const { return canon_.head().digest; }

  Units balance(const std::string& id) const { return canon_.balances.at(id); }

  std::optional<Digest> ad_id(const std::string& label) const {
    auto it = ad_ids_.find(label);
    if (it == ad_ids_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<Digest> bid_id(const std::string& ad_label, const std::string& bid_label) const {
    auto it = bid_ids_.find(ad_label + "/" + bid_label);
    if (it == bid_ids_.end()) return std::nullopt;
    return it->second;
  }

  const TradeRecord* trade(const std::string& label) const {
    auto id = ad_id(label);
    return id ? canon_view_.trade(*id) : nullptr;
  }

  std::string label_of(const Digest& id) const {
    auto it = labels_.find(id);
    return it == labels_.end() ? id.hex8() : it->second;
  }

  //! One line per block: number, digest, then kind:id for each carried tx.
  std::string ledger_dump() const {
    std::ostringstream out;
    for (const auto& b : canon_.blocks) {
      out << 'B' << b.number << ' ' << b.digest.hex();
      for (const auto& tx : b.txs) out << ' ' << tx_kind_name(tx.kind()) << ':' << tx.tx_id.hex8();
      out << '\n';
    }
    return out.str();
  }

 private:
  Node& node_of(const std::string& id) {
    for (auto& n : nodes_)
      if (n.ident.id == id) return n;
    throw std::logic_error("no such node: " + id);
  }

  void fault(BlockNum block, std::string what) { violations_.push_back({block, std::move(what)}); }

  //! Pool admission: validity against the canonical head plus the funds the
  //! sender has already promised to queued transactions.
  bool broadcast(const TransactionEnvelope& tx, BlockNum inclusion_block) {
    ValidationContext ctx{roster_,         canon_.balances, canon_.locked,
                          canon_.known_tx_ids, canon_view_,     policy_,
                          inclusion_block, pool_.promised(tx.sender)};
    ValidationResult r = validate_tx(tx, ctx);
    if (!r.ok()) {
      std::ostringstream line;
      line << "reject block=" << inclusion_block << " sender=" << tx.sender
           << " kind=" << tx_kind_name(tx.kind()) << " reason=" << reason_name(r.reason);
      if (!r.detail.empty()) line << " detail=" << r.detail;
      trace_.push_back(line.str());
      return false;
    }
    pool_.admit(tx);
    return true;
  }

  void fire_events(BlockNum t) {
    while (next_event_ < sc_.events.size() && sc_.events[next_event_].at <= t) {
      const ScenarioEvent& ev = sc_.events[next_event_];
      ++next_event_;
      std::visit([&](const auto& action) { fire(action, t); }, ev.action);
    }
  }

  void fire(const AdvertiseEvent& ev, BlockNum t) {
    Node& node = node_of(ev.actor);
    TransactionEnvelope tx = build_advertisement(node, ev.ad, ev.sealed_reserve, ev.funds);
    if (broadcast(tx, t)) {
      ad_ids_[ev.label] = tx.tx_id;
      labels_[tx.tx_id] = ev.label;
    }
  }

  void fire(const BidEvent& ev, BlockNum t) {
    auto ad = ad_id(ev.ad_label);
    Node& node = node_of(ev.actor);
    if (!ad) {
      reject_unresolved(t, ev.actor, TxKind::bid, ev.ad_label);
      return;
    }
    TransactionEnvelope tx = build_bid(node, *ad, ev.content, ev.funds);
    if (broadcast(tx, t)) {
      bid_ids_[ev.ad_label + "/" + ev.label] = tx.tx_id;
      labels_[tx.tx_id] = ev.label;
    }
  }

  void fire(const EvaluateEvent& ev, BlockNum t) {
    auto ad = ad_id(ev.ad_label);
    Node& node = node_of(ev.actor);
    if (!ad) {
      reject_unresolved(t, ev.actor, TxKind::evaluation, ev.ad_label);
      return;
    }
    const std::string& bid_label = ev.decision_label ? *ev.decision_label : *ev.scored_label;
    auto bid = bid_id(ev.ad_label, bid_label);
    if (!bid) {
      reject_unresolved(t, ev.actor, TxKind::evaluation, ev.ad_label + "/" + bid_label);
      return;
    }
    TransactionEnvelope tx = ev.decision_label
                                 ? build_decision(node, *ad, *bid)
                                 : build_scores(node, *ad, *bid, ev.scores);
    broadcast(tx, t);
  }

  void fire(const DisputeEvent& ev, BlockNum t) {
    auto ad = ad_id(ev.ad_label);
    Node& node = node_of(ev.actor);
    if (!ad) {
      reject_unresolved(t, ev.actor, TxKind::arbitration_request, ev.ad_label);
      return;
    }
    broadcast(build_arbitration(node, *ad), t);
  }

  void fire(const ResolveEvent& ev, BlockNum t) {
    auto ad = ad_id(ev.ad_label);
    Node& node = node_of(ev.actor);
    if (!ad) {
      reject_unresolved(t, ev.actor, TxKind::dispute_resolution, ev.ad_label);
      return;
    }
    broadcast(build_resolution(node, *ad, ev.refund_to), t);
  }

  void reject_unresolved(BlockNum t, const std::string& sender, TxKind kind,
                         const std::string& ref) {
    std::ostringstream line;
    line << "reject block=" << t << " sender=" << sender << " kind=" << tx_kind_name(kind)
         << " reason=" << reason_name(Reason::unknown_advertisement) << " detail=" << ref;
    trace_.push_back(line.str());
  }

  //! Assembly order is fixed: carried-over settlement first, then what the
  //! proposer itself owes, then user transactions in arrival order. The
  //! optional cap pushes proposer overflow into carry-over; user overflow
  //! just waits in the pool.
  Block build_block(BlockNum t) {
    const std::string& proposer = roster_.proposer_of(t);
    Node& pnode = node_of(proposer);
    std::size_t cap = sc_.block_tx_cap.value_or(std::numeric_limits<std::size_t>::max());

    std::vector<TransactionEnvelope> txs;
    auto balances = canon_.balances;
    auto locked = canon_.locked;
    auto known = canon_.known_tx_ids;

    auto try_include = [&](const TransactionEnvelope& tx, bool internal) -> bool {
      ValidationContext ctx{roster_, balances, locked, known, canon_view_, policy_, t, 0};
      ValidationResult r = validate_tx(tx, ctx);
      if (!r.ok()) {
        if (internal) {
          fault(t, "proposer tx rejected: " + std::string(tx_kind_name(tx.kind())) + " " +
                       std::string(reason_name(r.reason)));
        } else {
          std::ostringstream line;
          line << "reject block=" << t << " sender=" << tx.sender
               << " kind=" << tx_kind_name(tx.kind()) << " reason=" << reason_name(r.reason);
          if (!r.detail.empty()) line << " detail=" << r.detail;
          trace_.push_back(line.str());
        }
        return false;
      }
      known.insert(tx.tx_id);
      apply_funds(balances, locked, tx);
      txs.push_back(tx);
      return true;
    };

    while (!pool_.carry_over.empty() && txs.size() < cap) {
      TransactionEnvelope tx = pool_.carry_over.front();
      pool_.carry_over.pop_front();
      try_include(tx, true);
    }
    std::deque<TransactionEnvelope> own(pnode.outstanding.begin(), pnode.outstanding.end());
    pnode.outstanding.clear();
    while (!own.empty() && txs.size() < cap) {
      TransactionEnvelope tx = own.front();
      own.pop_front();
      try_include(tx, true);
    }
    for (auto& tx : own) pool_.carry_over.push_back(std::move(tx));  // displaced by the cap
    while (!pool_.pending.empty() && txs.size() < cap) {
      TransactionEnvelope tx = pool_.pending.front();
      pool_.pending.pop_front();
      pool_.forget_outflow(tx);
      try_include(tx, false);
    }

    return make_block(t, canon_.head().digest, proposer, std::move(txs));
  }

  void commit_block(const Block& b, BlockNum t) {
    if (auto r = validate_block(b, roster_, canon_, canon_view_, policy_); !r.ok())
      fault(t, "canonical block invalid: " + std::string(reason_name(r.reason)) + " " + r.detail);
    if (!canon_.apply(b)) {
      fault(t, "canonical apply failed");
      return;
    }
    std::vector<FiredEvent> fired = canon_view_.advance(b, canon_);
    if (canon_.total_funds() != genesis_total_)
      fault(t, "conservation broken: " + std::to_string(canon_.total_funds()) + " vs " +
                   std::to_string(genesis_total_));

    std::ostringstream line;
    line << "block n=" << b.number << " digest=" << b.digest.hex8() << " txs=" << b.txs.size();
    trace_.push_back(line.str());

    Digest canon_digest = canon_.state_digest();
    const std::string& next_proposer = roster_.proposer_of(t + 1);
    for (auto& node : nodes_) {
      if (auto r = validate_block(b, roster_, node.ledger, node.view, policy_); !r.ok())
        fault(t, node.ident.id + " rejected block: " + std::string(reason_name(r.reason)));
      if (!node.ledger.apply(b)) {
        fault(t, node.ident.id + " failed to apply block");
        continue;
      }
      std::vector<FiredEvent> node_fired = node.view.advance(b, node.ledger);
      if (node.ledger.state_digest() != canon_digest)
        fault(t, node.ident.id + " replica diverged");

      for (const auto& tx : b.txs) {
        if (tx.kind() != TxKind::item_advertisement) continue;
        auto lbl = labels_.find(tx.tx_id);
        if (lbl == labels_.end()) continue;
        for (const auto& decl : sc_.nodes) {
          if (decl.id != node.ident.id) continue;
          for (const auto& interest : decl.interests)
            if (interest == lbl->second) node.watched.insert(tx.tx_id);
        }
      }

      BlockOutcome out =
          process_block(node, b, policy_, node.ident.id == next_proposer, node_fired);
      for (auto& n : out.notes) {
        std::ostringstream note_line;
        note_line << "notify block=" << n.block << " node=" << n.target << " kind=" << n.kind
                  << " ad=" << label_of(n.ad_id);
        if (!n.detail.empty()) note_line << ' ' << n.detail;
        trace_.push_back(note_line.str());
      }
      for (auto& tx : out.broadcasts) broadcast(tx, t + 1);
    }
  }

  bool quiescent() const {
    if (next_event_ < sc_.events.size()) return false;
    if (!pool_.empty()) return false;
    for (const auto& n : nodes_)
      if (!n.outstanding.empty()) return false;
    if (!canon_view_.all_trades_settled()) return false;
    if (canon_view_.any_open_escrow()) return false;
    return true;
  }

  Scenario sc_;
  Roster roster_;
  PolicyTable policy_;
  ChainState canon_;
  MarketView canon_view_;
  std::vector<Node> nodes_;
  TxPool pool_;
  std::size_t next_event_ = 0;
  Units genesis_total_ = 0;

  std::map<std::string, Digest> ad_ids_;
  std::map<std::string, Digest> bid_ids_;
  std::map<Digest, std::string> labels_;
  std::vector<std::string> trace_;
  std::vector<Violation> violations_;
};

}  // namespace marketsim
