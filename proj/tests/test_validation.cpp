#include <catch2/catch_amalgamated.hpp>

#include "marketsim/validation.hpp"

using namespace marketsim;

namespace {

struct Rig {
  Roster roster;
  ChainState state;
  MarketView view;
  PolicyTable policy = PolicyTable::with_defaults(builtin_registry());

  Rig() {
    roster.add({"p0", {Role::proposer, Role::validator}});
    roster.add({"p1", {Role::proposer, Role::validator}});
    roster.add({"sara", {Role::supplier}});
    roster.add({"esc1", {Role::escrow}});
    roster.add({"j1", {Role::committee}});
    roster.add({"carol", {Role::consumer}});
    roster.add({"dave", {Role::consumer}});
    state = genesis_state(roster, {{"sara", 1000}, {"carol", 1000}, {"dave", 1000}});
    view = MarketView(&roster);
  }

  void step(std::vector<TransactionEnvelope> txs = {}) {
    BlockNum n = state.height() + 1;
    Block b = make_block(n, state.head().digest, roster.proposer_of(n), std::move(txs));
    REQUIRE(state.apply(b));
    view.advance(state.head(), state);
  }

  ValidationContext ctx(BlockNum inclusion, Units extra = 0) const {
    return {roster, state.balances, state.locked, state.known_tx_ids,
            view,   policy,         inclusion,    extra};
  }
};

AdvertisementPayload english_ad(BlockNum sale = 8) {
  AdvertisementPayload ad;
  ad.trade_type = TradeType::english_auction;
  ad.item = "thing";
  ad.sale_blocks = sale;
  ad.starting_price = 100;
  ad.min_increment = 10;
  return ad;
}

std::vector<std::uint8_t> salt16() {
  return std::vector<std::uint8_t>(kMinSaltLen, 0x5a);
}

}  // namespace

TEST_CASE("chain stage screens senders, funds and roles") {
  Rig rig;

  auto ghost = make_tx("ghost", BidPayload{Digest{}, "x"}, {}, 0);
  CHECK(validate_tx(ghost, rig.ctx(1)).reason == Reason::unknown_sender);

  auto ad = make_tx("sara", english_ad(), {}, 0);
  rig.step({ad});
  CHECK(validate_tx(ad, rig.ctx(2)).reason == Reason::duplicate_tx);

  auto poor = make_tx("carol", BidPayload{ad.tx_id, "x"}, {1200, 0}, 0);
  CHECK(validate_tx(poor, rig.ctx(2)).reason == Reason::insufficient_balance);

  // A queued transaction already promises part of the balance away.
  auto tight = make_tx("carol", BidPayload{ad.tx_id, "x"}, {900, 0}, 1);
  CHECK(validate_tx(tight, rig.ctx(2)).ok());
  CHECK(validate_tx(tight, rig.ctx(2, 200)).reason == Reason::insufficient_balance);

  EvaluationPayload ev;
  ev.ad_id = ad.tx_id;
  auto funded_eval = make_tx("j1", ev, {5, 0}, 0);
  CHECK(validate_tx(funded_eval, rig.ctx(2)).reason == Reason::unexpected_funds);

  auto fake_assign = make_tx("carol", AssignmentPayload{ad.tx_id, Digest{}, 1}, {}, 2);
  CHECK(validate_tx(fake_assign, rig.ctx(2)).reason == Reason::not_proposer);

  auto ad_from_consumer = make_tx("carol", english_ad(), {}, 3);
  CHECK(validate_tx(ad_from_consumer, rig.ctx(2)).reason == Reason::missing_role);

  auto bid_from_supplier = make_tx("sara", BidPayload{ad.tx_id, "x"}, {100, 0}, 1);
  CHECK(validate_tx(bid_from_supplier, rig.ctx(2)).reason == Reason::missing_role);
}

TEST_CASE("advertisements are structurally screened at admission") {
  Rig rig;
  auto bad = english_ad();
  bad.sale_blocks = 0;
  auto tx = make_tx("sara", bad, {}, 0);
  CHECK(validate_tx(tx, rig.ctx(1)).reason == Reason::malformed_advertisement);

  auto committee = english_ad();
  committee.trade_type = TradeType::committee_decision;
  committee.starting_price.reset();
  committee.min_increment.reset();
  // Naming a node without the committee role makes the ad itself defective.
  committee.committee = {"carol"};
  committee.eval_blocks = 12;
  auto tx2 = make_tx("sara", committee, {}, 1);
  CHECK(validate_tx(tx2, rig.ctx(1)).reason == Reason::malformed_advertisement);
  committee.committee = {"j1"};
  auto tx3 = make_tx("sara", committee, {}, 2);
  CHECK(validate_tx(tx3, rig.ctx(1)).ok());

  auto physical = english_ad();
  physical.physical = true;
  auto tx4 = make_tx("sara", physical, {}, 3);
  CHECK(validate_tx(tx4, rig.ctx(1)).ok());
}

TEST_CASE("bids must reference a live advertisement") {
  Rig rig;
  auto nowhere = make_tx("carol", BidPayload{Digest{}, "x"}, {100, 0}, 0);
  CHECK(validate_tx(nowhere, rig.ctx(1)).reason == Reason::unknown_advertisement);

  auto ad = make_tx("sara", english_ad(8), {}, 0);
  rig.step({ad});
  auto ok = make_tx("carol", BidPayload{ad.tx_id, "x"}, {100, 0}, 0);
  CHECK(validate_tx(ok, rig.ctx(2)).ok());
  CHECK(validate_tx(ok, rig.ctx(10)).reason == Reason::sale_closed);
}

TEST_CASE("reveals are policed for window, author and commitment") {
  Rig rig;
  auto payload = english_ad(4);
  payload.reveal_required = true;
  payload.reveal_blocks = 3;
  payload.reserve_commitment = commit_reserve_price(110, salt16());
  auto ad = make_tx("sara", payload, {}, 0);
  rig.step({ad});  // sale ends at 5, reveal window is blocks 6 through 8

  RevelationPayload rev;
  rev.ad_id = ad.tx_id;
  rev.reserve_price = 110;
  rev.salt = salt16();

  auto early = make_tx("sara", rev, {}, 1);
  CHECK(validate_tx(early, rig.ctx(4)).reason == Reason::reveal_window_closed);

  auto good = make_tx("sara", rev, {}, 2);
  CHECK(validate_tx(good, rig.ctx(6)).ok());
  CHECK(validate_tx(good, rig.ctx(8)).ok());
  CHECK(validate_tx(good, rig.ctx(9)).reason == Reason::reveal_window_closed);

  auto intruder = make_tx("carol", rev, {}, 1);
  CHECK(validate_tx(intruder, rig.ctx(6)).reason == Reason::not_advertiser);

  RevelationPayload wrong = rev;
  wrong.reserve_price = 111;
  auto lied = make_tx("sara", wrong, {}, 3);
  CHECK(validate_tx(lied, rig.ctx(6)).reason == Reason::hash_mismatch);

  RevelationPayload thin = rev;
  thin.salt.resize(kMinSaltLen - 1);
  auto short_salt = make_tx("sara", thin, {}, 4);
  CHECK(validate_tx(short_salt, rig.ctx(6)).reason == Reason::salt_too_short);

  auto plain = make_tx("sara", english_ad(), {}, 5);
  rig.step({plain});
  RevelationPayload misdirected = rev;
  misdirected.ad_id = plain.tx_id;
  auto off_target = make_tx("sara", misdirected, {}, 6);
  CHECK(validate_tx(off_target, rig.ctx(6)).reason == Reason::not_a_reveal_trade);
}

TEST_CASE("evaluations are policed for membership, window and form") {
  Rig rig;
  AdvertisementPayload payload;
  payload.trade_type = TradeType::committee_scored;
  payload.sale_blocks = 3;
  payload.eval_blocks = 8;  // evaluations close at block 9
  payload.committee = {"j1"};
  payload.score_dim = 2;
  auto ad = make_tx("sara", payload, {}, 0);
  rig.step({ad});
  auto bid = make_tx("carol", BidPayload{ad.tx_id, "entry"}, {}, 0);
  rig.step({bid});

  EvaluationPayload sc;
  sc.ad_id = ad.tx_id;
  sc.scored_bid = bid.tx_id;
  sc.scores = {1000000, 2000000};

  CHECK(validate_tx(make_tx("j1", sc, {}, 0), rig.ctx(5)).ok());
  CHECK(validate_tx(make_tx("carol", sc, {}, 1), rig.ctx(5)).reason ==
        Reason::not_in_committee);
  CHECK(validate_tx(make_tx("j1", sc, {}, 2), rig.ctx(10)).reason ==
        Reason::eval_window_closed);

  EvaluationPayload both = sc;
  both.decision_bid = bid.tx_id;
  CHECK(validate_tx(make_tx("j1", both, {}, 3), rig.ctx(5)).reason ==
        Reason::wrong_evaluation_form);

  EvaluationPayload decision;
  decision.ad_id = ad.tx_id;
  decision.decision_bid = bid.tx_id;
  CHECK(validate_tx(make_tx("j1", decision, {}, 4), rig.ctx(5)).reason ==
        Reason::wrong_evaluation_form);

  EvaluationPayload ghost_bid = sc;
  ghost_bid.scored_bid = Digest{};
  CHECK(validate_tx(make_tx("j1", ghost_bid, {}, 5), rig.ctx(5)).reason ==
        Reason::unknown_bid);

  EvaluationPayload fat = sc;
  fat.scores = {1, 2, 3};
  CHECK(validate_tx(make_tx("j1", fat, {}, 6), rig.ctx(5)).reason ==
        Reason::bad_score_dimension);

  rig.step({make_tx("j1", sc, {}, 7)});
  CHECK(validate_tx(make_tx("j1", sc, {}, 8), rig.ctx(4)).reason ==
        Reason::duplicate_evaluation);
}

TEST_CASE("a decision trade takes one decision per member") {
  Rig rig;
  AdvertisementPayload payload;
  payload.trade_type = TradeType::committee_decision;
  payload.sale_blocks = 3;
  payload.eval_blocks = 8;
  payload.committee = {"j1"};
  auto ad = make_tx("sara", payload, {}, 0);
  rig.step({ad});
  auto b1 = make_tx("carol", BidPayload{ad.tx_id, "one"}, {}, 0);
  auto b2 = make_tx("dave", BidPayload{ad.tx_id, "two"}, {}, 0);
  rig.step({b1, b2});

  EvaluationPayload pick;
  pick.ad_id = ad.tx_id;
  pick.decision_bid = b1.tx_id;
  rig.step({make_tx("j1", pick, {}, 0)});

  EvaluationPayload second;
  second.ad_id = ad.tx_id;
  second.decision_bid = b2.tx_id;
  CHECK(validate_tx(make_tx("j1", second, {}, 1), rig.ctx(5)).reason ==
        Reason::duplicate_evaluation);

  EvaluationPayload scored;
  scored.ad_id = ad.tx_id;
  scored.scored_bid = b1.tx_id;
  scored.scores = {1};
  CHECK(validate_tx(make_tx("j1", scored, {}, 2), rig.ctx(5)).reason ==
        Reason::wrong_evaluation_form);
}

TEST_CASE("settlement transactions need live locks and real recipients") {
  Rig rig;
  auto ad = make_tx("sara", english_ad(), {}, 0);
  rig.step({ad});
  auto bid = make_tx("carol", BidPayload{ad.tx_id, "x"}, {100, 20}, 0);
  rig.step({bid});

  auto no_lock = make_tx("p0", FundsUnlockPayload{Digest{}}, {}, 0);
  CHECK(validate_tx(no_lock, rig.ctx(3)).reason == Reason::unknown_lock);

  auto ok_unlock = make_tx("p0", FundsUnlockPayload{bid.tx_id}, {}, 1);
  CHECK(validate_tx(ok_unlock, rig.ctx(3)).ok());

  auto nowhere = make_tx(
      "p0", FundsTransferPayload{bid.tx_id, FundsComponent::payment, "ghost"}, {}, 2);
  CHECK(validate_tx(nowhere, rig.ctx(3)).reason == Reason::unknown_recipient);

  auto ok_pay = make_tx(
      "p0", FundsTransferPayload{bid.tx_id, FundsComponent::payment, "sara"}, {}, 3);
  CHECK(validate_tx(ok_pay, rig.ctx(3)).ok());

  // Drain the payment, then the payment component no longer exists.
  rig.step({ok_pay});
  auto again = make_tx(
      "p0", FundsTransferPayload{bid.tx_id, FundsComponent::payment, "sara"}, {}, 4);
  CHECK(validate_tx(again, rig.ctx(4)).reason == Reason::unknown_lock);
  auto deposit_back = make_tx(
      "p0", FundsTransferPayload{bid.tx_id, FundsComponent::deposit, "carol"}, {}, 5);
  CHECK(validate_tx(deposit_back, rig.ctx(4)).ok());
}

TEST_CASE("escrow paperwork is restricted to its parties") {
  Rig rig;
  auto payload = english_ad(2);
  payload.physical = true;
  auto ad = make_tx("sara", payload, {}, 0);
  rig.step({ad});
  auto bid = make_tx("carol", BidPayload{ad.tx_id, "x"}, {100, 0}, 0);
  rig.step({bid});
  rig.step();

  auto premature = make_tx("carol", ArbitrationRequestPayload{ad.tx_id}, {}, 1);
  CHECK(validate_tx(premature, rig.ctx(3)).reason == Reason::case_closed);

  auto proposer = rig.roster.proposer_of(4);
  rig.step({make_tx(proposer, AssignmentPayload{ad.tx_id, bid.tx_id, 3}, {}, 0)});

  auto outsider = make_tx("dave", ArbitrationRequestPayload{ad.tx_id}, {}, 0);
  CHECK(validate_tx(outsider, rig.ctx(5)).reason == Reason::not_a_party);

  auto valid = make_tx("carol", ArbitrationRequestPayload{ad.tx_id}, {}, 2);
  CHECK(validate_tx(valid, rig.ctx(5)).ok());

  auto not_agent = make_tx("dave", DisputeResolutionPayload{ad.tx_id, "carol"}, {}, 1);
  CHECK(validate_tx(not_agent, rig.ctx(5)).reason == Reason::not_escrow_agent);

  auto undisputed = make_tx("esc1", DisputeResolutionPayload{ad.tx_id, "carol"}, {}, 0);
  CHECK(validate_tx(undisputed, rig.ctx(5)).reason == Reason::not_disputed);

  rig.step({valid});
  auto second = make_tx("sara", ArbitrationRequestPayload{ad.tx_id}, {}, 1);
  CHECK(validate_tx(second, rig.ctx(6)).reason == Reason::case_closed);

  auto to_outsider = make_tx("esc1", DisputeResolutionPayload{ad.tx_id, "dave"}, {}, 1);
  CHECK(validate_tx(to_outsider, rig.ctx(6)).reason == Reason::not_a_party);

  auto ruling = make_tx("esc1", DisputeResolutionPayload{ad.tx_id, "sara"}, {}, 2);
  CHECK(validate_tx(ruling, rig.ctx(6)).ok());
}

TEST_CASE("whole blocks are screened for linkage and schedule") {
  Rig rig;
  auto ad = make_tx("sara", english_ad(), {}, 0);

  Block off_schedule = make_block(1, rig.state.head().digest, "p0", {ad});
  // Block 1 belongs to p1 under round robin over two proposers.
  REQUIRE(rig.roster.proposer_of(1) == "p1");
  CHECK(validate_block(off_schedule, rig.roster, rig.state, rig.view, rig.policy).reason ==
        Reason::invalid_block);

  Block good = make_block(1, rig.state.head().digest, "p1", {ad});
  CHECK(validate_block(good, rig.roster, rig.state, rig.view, rig.policy).ok());

  Block tampered = good;
  tampered.digest.bytes[0] ^= 1;
  CHECK(validate_block(tampered, rig.roster, rig.state, rig.view, rig.policy).reason ==
        Reason::invalid_block);

  Block wrong_parent = make_block(1, Digest{}, "p1", {ad});
  CHECK(validate_block(wrong_parent, rig.roster, rig.state, rig.view, rig.policy).reason ==
        Reason::invalid_block);

  auto overdraft = make_tx("carol", BidPayload{ad.tx_id, "x"}, {5000, 0}, 0);
  Block bad_tx = make_block(1, rig.state.head().digest, "p1", {overdraft});
  auto res = validate_block(bad_tx, rig.roster, rig.state, rig.view, rig.policy);
  CHECK_FALSE(res.ok());
}

TEST_CASE("duplicate matching is refused") {
  Rig rig;
  auto ad = make_tx("sara", english_ad(2), {}, 0);
  rig.step({ad});
  rig.step();
  rig.step();
  auto proposer = rig.roster.proposer_of(4);
  rig.step({make_tx(proposer, NoAssignmentPayload{ad.tx_id, 3}, {}, 0)});

  auto again = make_tx(rig.roster.proposer_of(5), NoAssignmentPayload{ad.tx_id, 3}, {}, 1);
  CHECK(validate_tx(again, rig.ctx(5)).reason == Reason::duplicate_matching);
}
