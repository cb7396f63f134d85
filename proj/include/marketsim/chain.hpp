#pragma once

#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "marketsim/digest.hpp"
#include "marketsim/identity.hpp"
#include "marketsim/tx.hpp"

namespace marketsim {

struct Block {
  BlockNum number = 0;
  Digest parent;
  Digest digest;
  std::string proposer;  // empty for genesis
  std::vector<TransactionEnvelope> txs;
};

//! Block digest covers number, parent and the ordered tx ids. The proposer
//! is derivable from the number, so it stays out of the hash.
inline Digest block_digest(BlockNum number, const Digest& parent,
                           const std::vector<TransactionEnvelope>& txs) {
  Encoder enc;
  enc.put_u64(number);
  enc.put_digest(parent);
  enc.put_u64(txs.size());
  for (const auto& tx : txs) enc.put_digest(tx.tx_id);
  return enc.digest();
}

inline Block make_block(BlockNum number, const Digest& parent, std::string proposer,
                        std::vector<TransactionEnvelope> txs) {
  Block b;
  b.number = number;
  b.parent = parent;
  b.proposer = std::move(proposer);
  b.txs = std::move(txs);
  b.digest = block_digest(b.number, b.parent, b.txs);
  return b;
}

inline Block make_genesis() { return make_block(0, Digest{}, "", {}); }

struct LockedFunds {
  std::string owner;
  Units payment = 0;
  Units deposit = 0;

  Units total() const { return payment + deposit; }
};

//! Moves the funds effect of one transaction onto a ledger. Returns false
//! (and may leave the maps partially untouched only on the checked path,
//! callers dry-run first) when the movement is impossible.
inline bool apply_funds(std::map<std::string, Units>& balances,
                        std::map<Digest, LockedFunds>& locked, const TransactionEnvelope& tx) {
  if (!tx.funds.empty()) {
    if (tx.funds.payment < 0 || tx.funds.deposit < 0) return false;
    auto it = balances.find(tx.sender);
    if (it == balances.end() || it->second < tx.funds.total()) return false;
    it->second -= tx.funds.total();
    locked[tx.tx_id] = LockedFunds{tx.sender, tx.funds.payment, tx.funds.deposit};
  }
  if (tx.kind() == TxKind::funds_unlock) {
    const auto& p = std::get<FundsUnlockPayload>(tx.payload);
    auto it = locked.find(p.lock_tx);
    if (it == locked.end()) return false;
    balances[it->second.owner] += it->second.total();
    locked.erase(it);
  } else if (tx.kind() == TxKind::funds_transfer) {
    const auto& p = std::get<FundsTransferPayload>(tx.payload);
    auto it = locked.find(p.lock_tx);
    if (it == locked.end()) return false;
    Units& slot =
        p.component == FundsComponent::payment ? it->second.payment : it->second.deposit;
    if (slot <= 0) return false;
    balances[p.recipient] += slot;
    slot = 0;
    if (it->second.total() == 0) locked.erase(it);
  }
  return true;
}

//! Replayable ledger: every node folds the same blocks into one of these
//! and must end up bit-identical.
struct ChainState {
  std::vector<Block> blocks;
  std::map<std::string, Units> balances;
  std::map<Digest, LockedFunds> locked;

  BlockNum height() const { return blocks.empty() ? 0 : blocks.back().number; }
  const Block& head() const { return blocks.back(); }

  Units total_funds() const {
    Units sum = 0;
    for (const auto& [id, bal] : balances) sum += bal;
    for (const auto& [id, lf] : locked) sum += lf.total();
    return sum;
  }

  bool has_tx(const Digest& tx_id) const { return known_tx_ids.count(tx_id) > 0; }

  const TransactionEnvelope* find_tx(const Digest& tx_id) const {
    auto it = tx_index.find(tx_id);
    if (it == tx_index.end()) return nullptr;
    return &blocks[it->second.first].txs[it->second.second];
  }

  //! Appends the block if its linkage and every funds movement check out;
  //! otherwise returns false with the state untouched.
  bool apply(const Block& b) {
    if (blocks.empty()) {
      if (b.number != 0 || !b.txs.empty()) return false;
    } else {
      if (b.number != head().number + 1) return false;
      if (b.parent != head().digest) return false;
    }
    if (b.digest != block_digest(b.number, b.parent, b.txs)) return false;
    auto trial_balances = balances;
    auto trial_locked = locked;
    for (const auto& tx : b.txs) {
      if (known_tx_ids.count(tx.tx_id) > 0) return false;
      if (!apply_funds(trial_balances, trial_locked, tx)) return false;
    }
    balances = std::move(trial_balances);
    locked = std::move(trial_locked);
    for (std::size_t i = 0; i < b.txs.size(); ++i) {
      known_tx_ids.insert(b.txs[i].tx_id);
      tx_index[b.txs[i].tx_id] = {blocks.size(), i};
    }
    blocks.push_back(b);
    return true;
  }

  //! Digest of the full replicated state, for replica comparison.
  Digest state_digest() const {
    Encoder enc;
    enc.put_digest(blocks.empty() ? Digest{} : head().digest);
    enc.put_u64(blocks.size());
    enc.put_u64(balances.size());
    for (const auto& [id, bal] : balances) {
      enc.put_str(id);
      enc.put_i64(bal);
    }
    enc.put_u64(locked.size());
    for (const auto& [tx_id, lf] : locked) {
      enc.put_digest(tx_id);
      enc.put_str(lf.owner);
      enc.put_i64(lf.payment);
      enc.put_i64(lf.deposit);
    }
    return enc.digest();
  }

  std::set<Digest> known_tx_ids;
  std::map<Digest, std::pair<std::size_t, std::size_t>> tx_index;  // tx -> (block idx, tx idx)
};

inline ChainState genesis_state(const Roster& roster,
                                const std::map<std::string, Units>& balances) {
  ChainState st;
  for (const auto& n : roster.members()) {
    auto it = balances.find(n.id);
    st.balances[n.id] = it == balances.end() ? 0 : it->second;
  }
  bool ok = st.apply(make_genesis());
  if (!ok) throw std::logic_error("genesis rejected");
  return st;
}

//! FIFO admission queue feeding block assembly. Proposer-made transactions
//! (matching, settlement) queue separately and take precedence; whatever a
//! capped block cannot fit carries over to the next one.
struct TxPool {
  std::deque<TransactionEnvelope> carry_over;  // proposer txs displaced by the cap
  std::deque<TransactionEnvelope> pending;     // user broadcasts, FIFO
  std::map<std::string, Units> pending_outflow;  // funds already promised in queue

  void admit(TransactionEnvelope tx) {
    pending_outflow[tx.sender] += tx.funds.total();
    pending.push_back(std::move(tx));
  }

  Units promised(const std::string& sender) const {
    auto it = pending_outflow.find(sender);
    return it == pending_outflow.end() ? 0 : it->second;
  }

  void forget_outflow(const TransactionEnvelope& tx) {
    auto it = pending_outflow.find(tx.sender);
    if (it != pending_outflow.end()) {
      it->second -= tx.funds.total();
      if (it->second <= 0) pending_outflow.erase(it);
    }
  }

  bool empty() const { return carry_over.empty() && pending.empty(); }
};

}  // namespace marketsim
