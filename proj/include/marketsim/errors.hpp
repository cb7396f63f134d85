#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace marketsim {

//! Reject reasons surfaced in traces. Names are part of the trace format.
enum class Reason : std::uint8_t {
  none,
  unknown_sender,
  unknown_advertisement,
  unknown_bid,
  unknown_lock,
  unknown_recipient,
  duplicate_tx,
  duplicate_matching,
  duplicate_evaluation,
  insufficient_balance,
  malformed_advertisement,
  missing_deposit,
  missing_content,
  sale_closed,
  below_starting_price,
  increment_violation,
  wrong_window_price,
  not_a_reveal_trade,
  not_advertiser,
  reveal_window_closed,
  hash_mismatch,
  salt_too_short,
  not_in_committee,
  not_a_committee_trade,
  wrong_evaluation_form,
  bad_score_dimension,
  eval_window_closed,
  not_a_party,
  case_closed,
  not_escrow_agent,
  not_disputed,
  no_escrow_configured,
  custom_validation_failed,
  unexpected_funds,
  not_proposer,
  missing_role,
  invalid_block,
};

inline std::string_view reason_name(Reason r) {
  switch (r) {
    case Reason::none: return "None";
    case Reason::unknown_sender: return "UnknownSender";
    case Reason::unknown_advertisement: return "UnknownAdvertisement";
    case Reason::unknown_bid: return "UnknownBid";
    case Reason::unknown_lock: return "UnknownLock";
    case Reason::unknown_recipient: return "UnknownRecipient";
    case Reason::duplicate_tx: return "DuplicateTx";
    case Reason::duplicate_matching: return "DuplicateMatching";
    case Reason::duplicate_evaluation: return "DuplicateEvaluation";
    case Reason::insufficient_balance: return "InsufficientBalance";
    case Reason::malformed_advertisement: return "MalformedAdvertisement";
    case Reason::missing_deposit: return "MissingDeposit";
    case Reason::missing_content: return "MissingContent";
    case Reason::sale_closed: return "SaleClosed";
    case Reason::below_starting_price: return "BelowStartingPrice";
    case Reason::increment_violation: return "IncrementViolation";
    case Reason::wrong_window_price: return "WrongWindowPrice";
    case Reason::not_a_reveal_trade: return "NotARevealTrade";
    case Reason::not_advertiser: return "NotAdvertiser";
    case Reason::reveal_window_closed: return "RevealWindowClosed";
    case Reason::hash_mismatch: return "HashMismatch";
    case Reason::salt_too_short: return "SaltTooShort";
    case Reason::not_in_committee: return "NotInCommittee";
    case Reason::not_a_committee_trade: return "NotACommitteeTrade";
    case Reason::wrong_evaluation_form: return "WrongEvaluationForm";
    case Reason::bad_score_dimension: return "BadScoreDimension";
    case Reason::eval_window_closed: return "EvalWindowClosed";
    case Reason::not_a_party: return "NotAParty";
    case Reason::case_closed: return "CaseClosed";
    case Reason::not_escrow_agent: return "NotEscrowAgent";
    case Reason::not_disputed: return "NotDisputed";
    case Reason::no_escrow_configured: return "NoEscrowConfigured";
    case Reason::custom_validation_failed: return "CustomValidationFailed";
    case Reason::unexpected_funds: return "UnexpectedFunds";
    case Reason::not_proposer: return "NotProposer";
    case Reason::missing_role: return "MissingRole";
    case Reason::invalid_block: return "InvalidBlock";
  }
  return "?";
}

struct ValidationResult {
  Reason reason = Reason::none;
  std::string detail;

  bool ok() const { return reason == Reason::none; }

  static ValidationResult pass() { return {}; }
  static ValidationResult fail(Reason r, std::string d = {}) { return {r, std::move(d)}; }
};

}  // namespace marketsim
