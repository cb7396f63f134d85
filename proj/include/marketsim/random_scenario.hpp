#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "marketsim/scenario.hpp"

namespace marketsim {

//! Seeded scenario synthesis for oracle campaigns. The same (campaign
//! seed, index) pair always yields the same scenario, and scripts lean on
//! awkward inputs on purpose: stale bids, increment violations, sealed
//! reserves above every bid, judges who never finish scoring.
class ScenarioGenerator {
 public:
  ScenarioGenerator(std::uint64_t campaign_seed, std::uint64_t index) {
    Encoder enc;
    enc.put_u64(campaign_seed);
    enc.put_u64(index);
    rng_.seed(enc.digest().lead64());
  }

  //! English-only script, bounded to at most 20 bid events and 30 blocks.
  Scenario english_auction() {
    Scenario sc;
    sc.seed = rng_();
    add_backbone(sc, /*consumers=*/pick(3, 5), /*committee=*/0, /*escrow=*/false);

    BlockNum ad_at = pick(1, 2);
    BlockNum dsale = pick(4, 12);
    Units stprice = static_cast<Units>(pick(50, 120));
    Units inc = static_cast<Units>(pick(5, 15));
    bool sealed = chance(40);

    AdvertiseEvent adv;
    adv.actor = "s0";
    adv.label = "ad0";
    adv.ad.trade_type = TradeType::english_auction;
    adv.ad.item = "lot0";
    adv.ad.sale_blocks = dsale;
    adv.ad.starting_price = stprice;
    adv.ad.min_increment = inc;
    BlockNum trigger = ad_at + dsale;
    if (sealed) {
      adv.sealed_reserve = static_cast<Units>(pick(60, 220));
      adv.ad.reveal_blocks = pick(2, 4);
      adv.funds.deposit = static_cast<Units>(pick(10, 40));
      trigger += *adv.ad.reveal_blocks;
      if (chance(25)) {
        for (auto& n : sc.nodes)
          if (n.id == "s0") n.withhold_reveal = true;
      }
    }
    sc.events.push_back({ad_at, adv});

    std::size_t bid_count = pick(1, 20);
    Units last_price = stprice;
    bool any_bid = false;
    for (std::size_t i = 0; i < bid_count; ++i) {
      BidEvent bid;
      bid.actor = "c" + std::to_string(pick(0, consumer_count_ - 1));
      bid.ad_label = "ad0";
      bid.label = "b" + std::to_string(i);
      bid.content = "offer" + std::to_string(i);
      bid.funds.deposit = static_cast<Units>(pick(0, 10));
      if (!any_bid) {
        bid.funds.payment = chance(10) ? std::max<Units>(0, stprice - pick(1, 10))
                                       : stprice + static_cast<Units>(pick(0, 5));
      } else if (chance(30)) {
        bid.funds.payment = last_price;  // join at the current top
      } else if (inc > 1 && chance(12)) {
        bid.funds.payment = last_price + static_cast<Units>(pick(1, inc - 1));
      } else {
        bid.funds.payment = last_price + inc + static_cast<Units>(pick(0, 10));
      }
      if (bid.funds.payment >= last_price) last_price = bid.funds.payment;
      any_bid = true;
      BlockNum at = ad_at + pick(0, dsale + 2);  // a few straggle past the sale
      sc.events.push_back({std::max<BlockNum>(1, at), bid});
    }

    sc.max_blocks = std::min<BlockNum>(30, trigger + 6);
    finish(sc);
    return sc;
  }

  //! Mixed-type script covering every trade type, escrow auto-release and
  //! optional block capacity pressure.
  Scenario mixed() {
    Scenario sc;
    sc.seed = rng_();
    add_backbone(sc, /*consumers=*/pick(3, 5), /*committee=*/3, /*escrow=*/true);
    if (chance(25)) sc.block_tx_cap = pick(2, 4);

    std::size_t ads = pick(1, 2);
    for (std::size_t a = 0; a < ads; ++a) add_random_trade(sc, a);

    std::stable_sort(sc.events.begin(), sc.events.end(),
                     [](const ScenarioEvent& x, const ScenarioEvent& y) { return x.at < y.at; });
    sc.max_blocks = 45;
    finish(sc);
    return sc;
  }

 private:
  void add_backbone(Scenario& sc, std::size_t consumers, std::size_t committee, bool escrow) {
    sc.nodes.push_back({"p0", {Role::proposer, Role::validator}, 0, {}, false});
    sc.nodes.push_back({"p1", {Role::proposer, Role::validator}, 0, {}, false});
    sc.nodes.push_back({"s0", {Role::supplier}, 2000, {}, false});
    consumer_count_ = consumers;
    for (std::size_t i = 0; i < consumers; ++i)
      sc.nodes.push_back({"c" + std::to_string(i), {Role::consumer}, 10000, {"ad0", "ad1"},
                          false});
    for (std::size_t i = 0; i < committee; ++i)
      sc.nodes.push_back({"j" + std::to_string(i), {Role::committee}, 0, {}, false});
    if (escrow) sc.nodes.push_back({"e0", {Role::escrow}, 0, {}, false});
  }

  void add_random_trade(Scenario& sc, std::size_t idx) {
    std::string label = "ad" + std::to_string(idx);
    BlockNum ad_at = pick(1, 3);
    int roll = static_cast<int>(pick(0, 99));
    if (roll < 40) {
      add_english(sc, label, idx, ad_at);
    } else if (roll < 70) {
      add_dutch(sc, label, idx, ad_at);
    } else if (roll < 85) {
      add_committee(sc, label, idx, ad_at, TradeType::committee_decision);
    } else {
      add_committee(sc, label, idx, ad_at, TradeType::committee_scored);
    }
  }

  void add_english(Scenario& sc, const std::string& label, std::size_t idx, BlockNum ad_at) {
    AdvertiseEvent adv;
    adv.actor = "s0";
    adv.label = label;
    adv.ad.trade_type = TradeType::english_auction;
    adv.ad.item = "lot" + std::to_string(idx);
    adv.ad.sale_blocks = pick(3, 10);
    adv.ad.starting_price = static_cast<Units>(pick(50, 120));
    adv.ad.min_increment = static_cast<Units>(pick(5, 15));
    adv.ad.physical = chance(25);
    if (adv.ad.physical && chance(50)) adv.ad.escrow_safety = pick(2, 6);
    if (chance(35)) {
      adv.sealed_reserve = static_cast<Units>(pick(60, 200));
      adv.ad.reveal_blocks = pick(2, 4);
      adv.funds.deposit = static_cast<Units>(pick(10, 40));
      if (chance(20)) {
        for (auto& n : sc.nodes)
          if (n.id == "s0") n.withhold_reveal = true;
      }
    }
    sc.events.push_back({ad_at, adv});

    std::size_t bids = pick(1, 8);
    Units last = *adv.ad.starting_price;
    bool any = false;
    for (std::size_t i = 0; i < bids; ++i) {
      BidEvent bid;
      bid.actor = "c" + std::to_string(pick(0, consumer_count_ - 1));
      bid.ad_label = label;
      bid.label = "b" + std::to_string(idx) + "_" + std::to_string(i);
      bid.content = "offer";
      bid.funds.deposit = static_cast<Units>(pick(0, 10));
      if (!any) {
        bid.funds.payment = last + static_cast<Units>(pick(0, 5));
      } else if (chance(30)) {
        bid.funds.payment = last;
      } else {
        bid.funds.payment = last + *adv.ad.min_increment + static_cast<Units>(pick(0, 8));
      }
      if (bid.funds.payment > last) last = bid.funds.payment;
      any = true;
      sc.events.push_back({ad_at + pick(0, adv.ad.sale_blocks + 1), bid});
    }
  }

  void add_dutch(Scenario& sc, const std::string& label, std::size_t idx, BlockNum ad_at) {
    AdvertiseEvent adv;
    adv.actor = "s0";
    adv.label = label;
    adv.ad.trade_type = TradeType::dutch_auction;
    adv.ad.item = "lot" + std::to_string(idx);
    adv.ad.bid_window = pick(1, 4);
    adv.ad.sale_blocks = pick(*adv.ad.bid_window, 12);
    adv.ad.starting_price = static_cast<Units>(pick(60, 150));
    adv.ad.min_increment = static_cast<Units>(pick(10, 30));
    adv.ad.physical = chance(20);
    if (chance(40)) adv.ad.public_reserve = static_cast<Units>(pick(20, 100));
    sc.events.push_back({ad_at, adv});

    std::size_t bids = pick(0, 6);
    for (std::size_t i = 0; i < bids; ++i) {
      BidEvent bid;
      bid.actor = "c" + std::to_string(pick(0, consumer_count_ - 1));
      bid.ad_label = label;
      bid.label = "b" + std::to_string(idx) + "_" + std::to_string(i);
      bid.content = "take";
      BlockNum at = ad_at + pick(0, adv.ad.sale_blocks + 1);
      BlockNum window = (at - ad_at) / *adv.ad.bid_window;
      Units on_schedule =
          *adv.ad.starting_price - static_cast<Units>(window) * *adv.ad.min_increment;
      Units jitter = static_cast<Units>(pick(1, 9)) - 5;
      bid.funds.payment = chance(70) ? on_schedule : std::max<Units>(0, on_schedule + jitter);
      sc.events.push_back({at, bid});
    }
  }

  void add_committee(Scenario& sc, const std::string& label, std::size_t idx, BlockNum ad_at,
                     TradeType type) {
    AdvertiseEvent adv;
    adv.actor = "s0";
    adv.label = label;
    adv.ad.trade_type = type;
    adv.ad.item = "job" + std::to_string(idx);
    adv.ad.sale_blocks = pick(3, 8);
    adv.ad.eval_blocks = adv.ad.sale_blocks + pick(3, 8);
    adv.ad.committee = {"j0", "j1", "j2"};
    adv.funds.payment = chance(60) ? static_cast<Units>(pick(100, 400)) : 0;
    std::size_t dim = 0;
    if (type == TradeType::committee_scored) {
      dim = pick(2, 3);
      adv.ad.score_dim = dim;
      if (chance(50))
        for (std::size_t i = 0; i < dim; ++i)
          adv.ad.objective_weights.push_back(static_cast<Units>(pick(1, 3)) * kScoreScale);
    }
    sc.events.push_back({ad_at, adv});

    std::size_t bids = pick(1, 4);
    std::vector<std::string> bid_labels;
    for (std::size_t i = 0; i < bids; ++i) {
      BidEvent bid;
      bid.actor = "c" + std::to_string(pick(0, consumer_count_ - 1));
      bid.ad_label = label;
      bid.label = "b" + std::to_string(idx) + "_" + std::to_string(i);
      bid.content = "proposal" + std::to_string(i);
      bid.funds.deposit = static_cast<Units>(pick(0, 5));
      bid_labels.push_back(bid.label);
      sc.events.push_back({ad_at + pick(0, adv.ad.sale_blocks), bid});
    }

    BlockNum sale_end = ad_at + adv.ad.sale_blocks;
    BlockNum eval_end = ad_at + *adv.ad.eval_blocks;
    if (type == TradeType::committee_decision) {
      if (chance(85)) {
        EvaluateEvent ev;
        ev.actor = "j" + std::to_string(pick(0, 2));
        ev.ad_label = label;
        ev.decision_label = bid_labels[pick(0, bid_labels.size() - 1)];
        sc.events.push_back({pick(sale_end + 1, eval_end), ev});
      }
    } else {
      for (std::size_t j = 0; j < 3; ++j) {
        for (const auto& bl : bid_labels) {
          if (!chance(75)) continue;  // judges forget: can starve a bid of scores
          EvaluateEvent ev;
          ev.actor = "j" + std::to_string(j);
          ev.ad_label = label;
          ev.scored_label = bl;
          for (std::size_t d = 0; d < dim; ++d)
            ev.scores.push_back(static_cast<Units>(pick(0, 10)) * kScoreScale);
          sc.events.push_back({pick(sale_end + 1, eval_end), ev});
        }
      }
    }
  }

  void finish(Scenario& sc) {
    std::stable_sort(sc.events.begin(), sc.events.end(),
                     [](const ScenarioEvent& x, const ScenarioEvent& y) { return x.at < y.at; });
  }

  BlockNum pick(BlockNum lo, BlockNum hi) { return lo + rng_() % (hi - lo + 1); }
  bool chance(unsigned percent) { return rng_() % 100 < percent; }

  std::mt19937_64 rng_;
  std::size_t consumer_count_ = 0;
};

}  // namespace marketsim
