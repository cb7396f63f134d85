// Acceptance gate for the marketplace simulator. Each criterion prints one
// PASS/FAIL line; the process exits nonzero if any of them fail. Every
// tolerance and workload size is pinned right here, not in flags.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "marketsim/audit.hpp"
#include "marketsim/engine.hpp"
#include "marketsim/random_scenario.hpp"

using namespace marketsim;

namespace {

constexpr std::uint64_t kEnglishCampaignSeed = 20260816;
constexpr int kEnglishCampaignRuns = 1000;
constexpr double kEnglishCampaignBudgetSec = 30.0;

constexpr std::uint64_t kDutchScanSeed = 77001;
constexpr int kDutchScanRuns = 200;

constexpr int kConservationMixedRuns = 100;
constexpr std::uint64_t kConservationSeed = 88002;

constexpr int kPrfDraws = 1000;
constexpr std::size_t kPrfCandidates = 4;
constexpr int kPrfMinPerBucket = 200;  // 0.25 - 0.05 of 1000
constexpr int kPrfMaxPerBucket = 300;  // 0.25 + 0.05 of 1000

constexpr double kBundledBudgetSec = 5.0;

constexpr std::uint64_t kMixedCampaignSeed = 424242;
constexpr int kMixedCampaignRuns = 300;

int failures = 0;

void report(int number, const std::string& name, bool ok,
            const std::string& detail = "") {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << number << ". " << name;
  if (!detail.empty()) std::cout << "  [" << detail << "]";
  std::cout << "\n";
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string scenario_path(const std::string& name) {
  return std::string(MARKETSIM_SCENARIO_DIR) + "/" + name;
}

//! Criterion 1: the proposer-side matcher and the raw-ledger audit oracle
//! agree on every randomly generated rising-price auction, quickly.
void criterion_english_campaign() {
  auto start = std::chrono::steady_clock::now();
  int clean = 0;
  for (int i = 0; i < kEnglishCampaignRuns; ++i) {
    auto sc = ScenarioGenerator(kEnglishCampaignSeed, static_cast<std::uint64_t>(i))
                  .english_auction();
    Engine eng(sc);
    eng.run();
    if (run_audits(eng).ok()) ++clean;
  }
  double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << clean << "/" << kEnglishCampaignRuns << " clean in " << elapsed << "s";
  report(1, "random rising-price campaign matches the audit oracle",
         clean == kEnglishCampaignRuns && elapsed < kEnglishCampaignBudgetSec,
         detail.str());
}

//! Criterion 2: descending-price sales bid at the exact scheduled price,
//! match at the first boundary after a bid, and void when the schedule
//! undercuts the public floor.
void criterion_dutch_schedule() {
  bool ok = true;
  std::string detail;

  const std::string empty_lot =
      "seed 3\nmax-blocks 26\n"
      "node p0 roles=proposer,validator balance=0\n"
      "node sara roles=supplier balance=100\n"
      "node carol roles=consumer balance=500\n"
      "at 2 advertise sara label=lot type=dutch dsale=20 stprice=100 dbid=5 "
      "inc=10 reserve=75\n";
  Engine no_taker(parse_scenario_text(empty_lot));
  no_taker.run();
  const TradeRecord* lot = no_taker.trade("lot");
  // Windows price at 100, 90, 80; the step to 70 crosses the 75 floor at
  // block 17, so the void terminal must land in block 18.
  if (!run_audits(no_taker).ok()) ok = false, detail = "empty lot audits dirty";
  if (lot == nullptr || lot->winning_bid.has_value() || lot->trigger_block != 17 ||
      lot->matched_at != 18) {
    ok = false;
    detail = "empty lot terminal misplaced";
  }

  const std::string taken_lot =
      "seed 3\nmax-blocks 26\n"
      "node p0 roles=proposer,validator balance=0\n"
      "node sara roles=supplier balance=100\n"
      "node carol roles=consumer balance=500\n"
      "at 2 advertise sara label=lot type=dutch dsale=20 stprice=100 dbid=5 inc=10\n"
      "at 13 bid carol ad=lot label=c1 price=80\n";
  Engine taker(parse_scenario_text(taken_lot));
  taker.run();
  lot = taker.trade("lot");
  if (!run_audits(taker).ok()) ok = false, detail = "taken lot audits dirty";
  if (lot == nullptr || !lot->winning_bid.has_value() || lot->trigger_block != 17 ||
      lot->matched_at != 18) {
    ok = false;
    detail = "taken lot terminal misplaced";
  } else if (taker.balance("sara") != 180 || taker.balance("carol") != 420) {
    ok = false;
    detail = "taken lot settled wrong";
  }

  // Ledger scan across a generated campaign: every recorded bid on a
  // descending sale sits exactly on the schedule, inside a single window.
  int bids_checked = 0;
  for (int i = 0; ok && i < kDutchScanRuns; ++i) {
    auto sc = ScenarioGenerator(kDutchScanSeed, static_cast<std::uint64_t>(i)).mixed();
    Engine eng(sc);
    eng.run();
    auto trades = oracle::collect(eng.state().blocks);
    for (const auto& [ad_id, t] : trades) {
      if (t.ad.trade_type != TradeType::dutch_auction) continue;
      std::optional<BlockNum> window;
      for (const auto& b : t.bids) {
        Units scheduled = dutch_price_at(t.ad_block, b.block, *t.ad.starting_price,
                                         *t.ad.bid_window, *t.ad.min_increment);
        if (b.payment != scheduled) {
          ok = false;
          detail = "off-schedule bid in run " + std::to_string(i);
          break;
        }
        BlockNum w = (b.block - t.ad_block) / *t.ad.bid_window;
        if (window && *window != w) {
          ok = false;
          detail = "bids span windows in run " + std::to_string(i);
          break;
        }
        window = w;
        ++bids_checked;
      }
    }
  }
  if (ok && detail.empty())
    detail = std::to_string(bids_checked) + " ledger bids on schedule";
  report(2, "descending-price schedule is exact end to end", ok, detail);
}

//! Criterion 3: the sealed reserve protocol punishes withheld reveals with
//! the advertised deposit and voids sales whose reserve tops every bid.
void criterion_sealed_reserve() {
  bool ok = true;
  std::string detail;

  const std::string withheld =
      "seed 5\nmax-blocks 24\n"
      "node p0 roles=proposer,validator balance=0\n"
      "node sara roles=supplier balance=100 fault=withholdReveal\n"
      "node carol roles=consumer balance=500 interest=lamp\n"
      "at 2 advertise sara label=lamp type=english dsale=4 revflag reserve=105 "
      "dreveal=3 stprice=100 inc=10 deposit=20\n"
      "at 3 bid carol ad=lamp label=c1 price=110\n";
  Engine mute(parse_scenario_text(withheld));
  mute.run();
  const TradeRecord* lamp = mute.trade("lamp");
  if (!run_audits(mute).ok()) ok = false, detail = "withheld reveal audits dirty";
  if (lamp == nullptr || lamp->winning_bid.has_value() || !lamp->reveals.empty()) {
    ok = false;
    detail = "withheld reveal still assigned";
  } else if (mute.balance("sara") != 80 || mute.balance("p0") != 20 ||
             mute.balance("carol") != 500) {
    ok = false;
    detail = "forfeit did not move the deposit to the trigger proposer";
  }

  const std::string rich_reserve =
      "seed 5\nmax-blocks 24\n"
      "node p0 roles=proposer,validator balance=0\n"
      "node sara roles=supplier balance=100\n"
      "node carol roles=consumer balance=500 interest=lamp\n"
      "at 2 advertise sara label=lamp type=english dsale=4 revflag reserve=300 "
      "dreveal=3 stprice=100 inc=10 deposit=20\n"
      "at 3 bid carol ad=lamp label=c1 price=110\n";
  Engine honest(parse_scenario_text(rich_reserve));
  honest.run();
  lamp = honest.trade("lamp");
  if (!run_audits(honest).ok()) ok = false, detail = "high reserve audits dirty";
  if (lamp == nullptr || lamp->winning_bid.has_value() || lamp->reveals.size() != 1) {
    ok = false;
    detail = "high reserve still assigned";
  } else if (honest.balance("sara") != 100 || honest.balance("carol") != 500 ||
             honest.balance("p0") != 0) {
    ok = false;
    detail = "void sale did not restore genesis balances";
  }

  report(3, "sealed reserve forfeits and void sales settle exactly", ok, detail);
}

//! Criterion 4: an independent re-interpretation of every block keeps the
//! sum of balances and locks equal to the genesis supply at every height.
bool conserved(const Engine& eng, const std::map<std::string, Units>& genesis) {
  std::map<std::string, Units> balances = genesis;
  std::map<Digest, std::pair<std::string, FundsAttachment>> locks;
  Units supply = 0;
  for (const auto& [id, v] : genesis) supply += v;

  for (const auto& b : eng.state().blocks) {
    for (const auto& tx : b.txs) {
      if (tx.funds.total() != 0) {
        balances[tx.sender] -= tx.funds.total();
        locks[tx.tx_id] = {tx.sender, tx.funds};
      }
      if (tx.kind() == TxKind::funds_unlock) {
        const auto& p = std::get<FundsUnlockPayload>(tx.payload);
        auto it = locks.find(p.lock_tx);
        if (it == locks.end()) return false;
        balances[it->second.first] += it->second.second.total();
        locks.erase(it);
      } else if (tx.kind() == TxKind::funds_transfer) {
        const auto& p = std::get<FundsTransferPayload>(tx.payload);
        auto it = locks.find(p.lock_tx);
        if (it == locks.end()) return false;
        Units& part = p.component == FundsComponent::payment ? it->second.second.payment
                                                             : it->second.second.deposit;
        balances[p.recipient] += part;
        part = 0;
        if (it->second.second.total() == 0) locks.erase(it);
      }
    }
    Units total = 0;
    for (const auto& [id, v] : balances) {
      if (v < 0) return false;
      total += v;
    }
    for (const auto& [id, l] : locks) total += l.second.total();
    if (total != supply) return false;
  }

  // The recomputed end state must agree with the engine's ledger.
  for (const auto& [id, v] : balances)
    if (eng.balance(id) != v) return false;
  return true;
}

void criterion_conservation() {
  bool ok = true;
  std::string detail;
  int runs = 0;

  for (const char* name : {"ebay_english.scn", "logo_contest.scn", "job_posting.scn"}) {
    Scenario sc = parse_scenario_file(scenario_path(name));
    std::map<std::string, Units> genesis;
    for (const auto& n : sc.nodes) genesis[n.id] = n.balance;
    Engine eng(sc);
    eng.run();
    if (!conserved(eng, genesis)) {
      ok = false;
      detail = std::string("leak in ") + name;
    }
    ++runs;
  }

  for (int i = 0; ok && i < kConservationMixedRuns; ++i) {
    auto sc = ScenarioGenerator(kConservationSeed, static_cast<std::uint64_t>(i)).mixed();
    std::map<std::string, Units> genesis;
    for (const auto& n : sc.nodes) genesis[n.id] = n.balance;
    Engine eng(sc);
    eng.run();
    if (!conserved(eng, genesis)) {
      ok = false;
      detail = "leak in generated run " + std::to_string(i);
    }
    ++runs;
  }
  if (ok && detail.empty())
    detail = "funds exact across " + std::to_string(runs) + " runs";
  report(4, "funds are conserved at every block", ok, detail);
}

//! Criterion 5: identical inputs give identical chains, and every node
//! replica ends bit-identical to the canonical ledger.
void criterion_determinism() {
  bool ok = true;
  std::string detail;

  Scenario sc = parse_scenario_file(scenario_path("ebay_english.scn"));
  if (sc.nodes.size() < 5) ok = false, detail = "fixture too small";

  Engine a(sc);
  Engine b(sc);
  a.run();
  b.run();
  if (a.chain_digest() != b.chain_digest() || a.ledger_dump() != b.ledger_dump()) {
    ok = false;
    detail = "replay diverged";
  }
  if (!a.violations().empty()) {
    ok = false;
    detail = "per-block replica comparison failed";
  }
  for (const auto& node : a.nodes()) {
    if (node.ledger.state_digest() != a.state().state_digest() ||
        node.ledger.height() != a.state().height()) {
      ok = false;
      detail = "replica " + node.ident.id + " diverged";
    }
  }
  if (ok) detail = std::to_string(a.nodes().size()) + " replicas bit-identical";
  report(5, "identical runs and replicas stay bit-identical", ok, detail);
}

//! Criterion 6: the deterministic tie break draws close to uniformly.
void criterion_prf_uniformity() {
  std::vector<int> buckets(kPrfCandidates, 0);
  for (int i = 0; i < kPrfDraws; ++i) {
    Encoder t;
    t.put_u64(static_cast<std::uint64_t>(i));
    Encoder a;
    a.put_u64(static_cast<std::uint64_t>(i) + 31337);
    SeedMaterial seed{t.digest(), a.digest()};
    buckets[pseudo_random_index(seed, kPrfCandidates)] += 1;
  }
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t c = 0; c < buckets.size(); ++c) {
    if (buckets[c] < kPrfMinPerBucket || buckets[c] > kPrfMaxPerBucket) ok = false;
    detail << (c == 0 ? "" : "/") << buckets[c];
  }
  report(6, "tie-break draw is uniform within 5 points", ok, detail.str());
}

//! Criterion 7: the three bundled walkthrough scenarios land on their
//! documented winners, balances and escrow outcomes.
void criterion_bundled_scenarios() {
  bool ok = true;
  std::string detail;

  auto run_timed = [&](const std::string& name) {
    auto start = std::chrono::steady_clock::now();
    Engine eng(parse_scenario_file(scenario_path(name)));
    eng.run();
    if (seconds_since(start) >= kBundledBudgetSec) {
      ok = false;
      detail = name + " too slow";
    }
    if (!run_audits(eng).ok()) {
      ok = false;
      detail = name + " audits dirty";
    }
    return eng;
  };

  Engine ebay = run_timed("ebay_english.scn");
  const TradeRecord* book = ebay.trade("book");
  if (book == nullptr || !book->winning_bid.has_value()) {
    ok = false;
    detail = "book unassigned";
  } else {
    const BidRecord* wb = book->find_bid(*book->winning_bid);
    if (wb->payment != 130 || (wb->sender != "erin" && wb->sender != "carol")) {
      ok = false;
      detail = "book winner wrong";
    }
    if (!book->escrow || book->escrow->state != EscrowState::released) {
      ok = false;
      detail = "book escrow not released";
    }
    if (ebay.balance("sara") != 230 || ebay.balance(wb->sender) != 370 ||
        ebay.balance("dave") != 500) {
      ok = false;
      detail = "book balances wrong";
    }
  }

  Engine logo = run_timed("logo_contest.scn");
  const TradeRecord* contest = logo.trade("logo");
  if (contest == nullptr || !contest->winning_bid.has_value() ||
      logo.label_of(*contest->winning_bid) != "slickbid") {
    ok = false;
    detail = "logo winner wrong";
  } else if (logo.balance("acme") != 500 || logo.balance("slick") != 550 ||
             logo.balance("pix") != 50) {
    ok = false;
    detail = "logo balances wrong";
  }

  Engine job = run_timed("job_posting.scn");
  const TradeRecord* role = job.trade("devrole");
  if (role == nullptr || !role->winning_bid.has_value() ||
      job.label_of(*role->winning_bid) != "bobapp") {
    ok = false;
    detail = "job winner wrong";
  } else {
    for (const auto& n : job.scenario().nodes)
      if (job.balance(n.id) != n.balance) {
        ok = false;
        detail = "job moved money";
      }
    if (job.ledger_dump().find("FundsTransfer") != std::string::npos ||
        job.ledger_dump().find("FundsUnlock") != std::string::npos) {
      ok = false;
      detail = "job emitted settlement transactions";
    }
  }

  report(7, "bundled walkthrough scenarios land exactly", ok, detail);
}

//! Criterion 8: across a mixed random campaign every trade matches exactly
//! once, never before its deadline, with the audited winner.
void criterion_mixed_campaign() {
  int clean = 0;
  for (int i = 0; i < kMixedCampaignRuns; ++i) {
    auto sc = ScenarioGenerator(kMixedCampaignSeed, static_cast<std::uint64_t>(i)).mixed();
    Engine eng(sc);
    eng.run();
    if (run_audits(eng).ok()) ++clean;
  }
  std::ostringstream detail;
  detail << clean << "/" << kMixedCampaignRuns << " clean";
  report(8, "mixed campaign matches exactly once and never early",
         clean == kMixedCampaignRuns, detail.str());
}

}  // namespace

int main() {
  criterion_english_campaign();
  criterion_dutch_schedule();
  criterion_sealed_reserve();
  criterion_conservation();
  criterion_determinism();
  criterion_prf_uniformity();
  criterion_bundled_scenarios();
  criterion_mixed_campaign();

  std::cout << (failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << " ("
            << (8 - failures) << "/8)\n";
  return failures == 0 ? 0 : 1;
}
