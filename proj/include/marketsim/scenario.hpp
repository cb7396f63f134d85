#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "marketsim/identity.hpp"
#include "marketsim/tx.hpp"

namespace marketsim {

struct NodeDecl {
  std::string id;
  std::set<Role> roles;
  Units balance = 0;
  std::vector<std::string> interests;  // ad labels this node watches
  bool withhold_reveal = false;
};

struct AdvertiseEvent {
  std::string actor;
  std::string label;
  AdvertisementPayload ad;
  std::optional<Units> sealed_reserve;  // committed by the node at broadcast
  FundsAttachment funds;
};

struct BidEvent {
  std::string actor;
  std::string ad_label;
  std::string label;
  FundsAttachment funds;
  std::string content;
};

struct EvaluateEvent {
  std::string actor;
  std::string ad_label;
  std::optional<std::string> decision_label;  // committee-rank form
  std::optional<std::string> scored_label;    // committee-custom form
  std::vector<Units> scores;
};

struct DisputeEvent {
  std::string actor;
  std::string ad_label;
};

struct ResolveEvent {
  std::string actor;  // must be the escrow agent
  std::string ad_label;
  std::string refund_to;
};

using ScenarioAction =
    std::variant<AdvertiseEvent, BidEvent, EvaluateEvent, DisputeEvent, ResolveEvent>;

struct ScenarioEvent {
  BlockNum at = 0;
  ScenarioAction action;
};

struct PluginDecl {
  TradeType type = TradeType::custom_scored;
  std::optional<std::string> eval;
  std::optional<std::string> ranking;
  std::optional<std::string> validate;
};

struct Scenario {
  std::uint64_t seed = 0;
  BlockNum max_blocks = 0;
  std::optional<std::size_t> block_tx_cap;
  std::vector<NodeDecl> nodes;
  std::vector<ScenarioEvent> events;
  std::vector<PluginDecl> plugins;

  const NodeDecl* find_node(const std::string& id) const {
    for (const auto& n : nodes)
      if (n.id == id) return &n;
    return nullptr;
  }
};

class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { parse, unknown_actor, bad_parameter };

  ScenarioError(Kind kind, std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + kind_name(kind) + ": " + msg),
        kind_(kind),
        line_(line) {}

  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }

  static const char* kind_name(Kind k) {
    switch (k) {
      case Kind::parse: return "ParseError";
      case Kind::unknown_actor: return "UnknownActor";
      case Kind::bad_parameter: return "BadParameter";
    }
    return "?";
  }

 private:
  Kind kind_;
  std::size_t line_;
};

namespace dsl {

//! Splits one line into whitespace-separated tokens; double quotes group
//! words (content="two words" is one token with the quotes removed).
inline std::vector<std::string> tokenize(const std::string& line, std::size_t line_no) {
  std::vector<std::string> tokens;
  std::string cur;
  bool in_quotes = false;
  bool token_open = false;
  for (char c : line) {
    if (c == '"') {
      in_quotes = !in_quotes;
      token_open = true;
      continue;
    }
    if (!in_quotes && c == '#') break;  // comment until end of line
    if (!in_quotes && (c == ' ' || c == '\t' || c == '\r')) {
      if (token_open) tokens.push_back(cur);
      cur.clear();
      token_open = false;
      continue;
    }
    cur.push_back(c);
    token_open = true;
  }
  if (in_quotes) throw ScenarioError(ScenarioError::Kind::parse, line_no, "unterminated quote");
  if (token_open) tokens.push_back(cur);
  return tokens;
}

struct Params {
  std::map<std::string, std::string> keyed;
  std::vector<std::string> flags;
  std::size_t line_no = 0;

  bool flag(const std::string& name) const {
    for (const auto& f : flags)
      if (f == name) return true;
    return false;
  }

  std::optional<std::string> get(const std::string& key) const {
    auto it = keyed.find(key);
    if (it == keyed.end()) return std::nullopt;
    return it->second;
  }

  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v)
      throw ScenarioError(ScenarioError::Kind::bad_parameter, line_no, "missing " + key + "=");
    return *v;
  }
};

inline Params collect_params(const std::vector<std::string>& tokens, std::size_t first,
                             std::size_t line_no) {
  Params p;
  p.line_no = line_no;
  for (std::size_t i = first; i < tokens.size(); ++i) {
    auto eq = tokens[i].find('=');
    if (eq == std::string::npos) {
      p.flags.push_back(tokens[i]);
    } else {
      std::string key = tokens[i].substr(0, eq);
      if (p.keyed.count(key) > 0)
        throw ScenarioError(ScenarioError::Kind::bad_parameter, line_no, "repeated " + key + "=");
      p.keyed[key] = tokens[i].substr(eq + 1);
    }
  }
  return p;
}

inline std::uint64_t parse_u64(const std::string& s, std::size_t line_no, const char* what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ScenarioError(ScenarioError::Kind::bad_parameter, line_no,
                        std::string("bad number for ") + what + ": " + s);
  return v;
}

inline Units parse_units(const std::string& s, std::size_t line_no, const char* what) {
  Units v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ScenarioError(ScenarioError::Kind::bad_parameter, line_no,
                        std::string("bad amount for ") + what + ": " + s);
  return v;
}

//! Fixed-point value with up to six decimal places, scaled by 1e6.
inline Units parse_score(const std::string& s, std::size_t line_no) {
  bool negative = false;
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
    negative = s[i] == '-';
    ++i;
  }
  Units integral = 0;
  std::size_t digits = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
    integral = integral * 10 + (s[i] - '0');
    ++i;
    ++digits;
  }
  Units fractional = 0;
  std::size_t frac_digits = 0;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
      if (frac_digits < 6) fractional = fractional * 10 + (s[i] - '0');
      ++i;
      ++frac_digits;
    }
  }
  if (i != s.size() || digits + frac_digits == 0 || frac_digits > 6)
    throw ScenarioError(ScenarioError::Kind::bad_parameter, line_no, "bad score value: " + s);
  for (std::size_t k = frac_digits; k < 6; ++k) fractional *= 10;
  Units v = integral * 1'000'000 + fractional;
  return negative ? -v : v;
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace dsl

//! Parses the line-oriented scenario language. Fails fast with a
//! line-numbered error; nothing about chain state is checked here beyond
//! what is knowable from the file alone.
inline Scenario parse_scenario(std::istream& in) {
  using dsl::collect_params;
  using dsl::parse_score;
  using dsl::parse_u64;
  using dsl::parse_units;
  using dsl::split_csv;
  using Kind = ScenarioError::Kind;

  Scenario sc;
  bool saw_seed = false;
  bool saw_max_blocks = false;
  BlockNum last_at = 0;
  std::map<std::string, std::size_t> ad_lines;                       // label -> line declared
  std::map<std::string, std::vector<std::string>> bids_of_ad;        // ad label -> bid labels
  std::map<std::string, TradeType> ad_types;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = dsl::tokenize(line, line_no);
    if (tokens.empty()) continue;
    const std::string& head = tokens[0];

    if (head == "seed") {
      if (tokens.size() != 2) throw ScenarioError(Kind::parse, line_no, "seed <u64>");
      sc.seed = parse_u64(tokens[1], line_no, "seed");
      saw_seed = true;
    } else if (head == "max-blocks") {
      if (tokens.size() != 2) throw ScenarioError(Kind::parse, line_no, "max-blocks <n>");
      sc.max_blocks = parse_u64(tokens[1], line_no, "max-blocks");
      if (sc.max_blocks == 0)
        throw ScenarioError(Kind::bad_parameter, line_no, "max-blocks must be positive");
      saw_max_blocks = true;
    } else if (head == "block-tx-cap") {
      if (tokens.size() != 2) throw ScenarioError(Kind::parse, line_no, "block-tx-cap <n>");
      std::size_t cap = parse_u64(tokens[1], line_no, "block-tx-cap");
      if (cap == 0) throw ScenarioError(Kind::bad_parameter, line_no, "cap must be positive");
      sc.block_tx_cap = cap;
    } else if (head == "plugin") {
      if (tokens.size() < 2) throw ScenarioError(Kind::parse, line_no, "plugin <type> ...");
      auto type = trade_type_from_name(tokens[1]);
      if (!type) throw ScenarioError(Kind::bad_parameter, line_no, "bad trade type " + tokens[1]);
      auto params = collect_params(tokens, 2, line_no);
      PluginDecl decl;
      decl.type = *type;
      decl.eval = params.get("eval");
      decl.ranking = params.get("ranking");
      decl.validate = params.get("validate");
      if (!decl.eval && !decl.ranking && !decl.validate)
        throw ScenarioError(Kind::bad_parameter, line_no, "plugin line binds nothing");
      sc.plugins.push_back(std::move(decl));
    } else if (head == "node") {
      if (tokens.size() < 2) throw ScenarioError(Kind::parse, line_no, "node <id> ...");
      NodeDecl decl;
      decl.id = tokens[1];
      if (sc.find_node(decl.id) != nullptr)
        throw ScenarioError(Kind::bad_parameter, line_no, "duplicate node " + decl.id);
      auto params = collect_params(tokens, 2, line_no);
      for (const auto& f : params.flags)
        throw ScenarioError(Kind::bad_parameter, line_no, "unexpected token " + f);
      for (const auto& role : split_csv(params.require("roles"))) {
        auto r = role_from_name(role);
        if (!r) throw ScenarioError(Kind::bad_parameter, line_no, "unknown role " + role);
        decl.roles.insert(*r);
      }
      if (auto bal = params.get("balance")) decl.balance = parse_units(*bal, line_no, "balance");
      if (decl.balance < 0)
        throw ScenarioError(Kind::bad_parameter, line_no, "negative balance");
      if (auto interest = params.get("interest")) decl.interests = split_csv(*interest);
      if (auto fault = params.get("fault")) {
        if (*fault != "withholdReveal")
          throw ScenarioError(Kind::bad_parameter, line_no, "unknown fault " + *fault);
        decl.withhold_reveal = true;
      }
      sc.nodes.push_back(std::move(decl));
    } else if (head == "at") {
      if (tokens.size() < 4)
        throw ScenarioError(Kind::parse, line_no, "at <block> <action> <actor> ...");
      ScenarioEvent ev;
      ev.at = parse_u64(tokens[1], line_no, "at");
      if (ev.at == 0)
        throw ScenarioError(Kind::bad_parameter, line_no, "events start at block 1");
      if (ev.at < last_at)
        throw ScenarioError(Kind::parse, line_no, "events must be ordered by block");
      last_at = ev.at;
      const std::string& action = tokens[2];
      const std::string& actor = tokens[3];
      if (sc.find_node(actor) == nullptr)
        throw ScenarioError(Kind::unknown_actor, line_no, actor);
      auto params = collect_params(tokens, 4, line_no);

      if (action == "advertise") {
        AdvertiseEvent adv;
        adv.actor = actor;
        adv.label = params.require("label");
        if (ad_lines.count(adv.label) > 0)
          throw ScenarioError(Kind::bad_parameter, line_no, "duplicate ad label " + adv.label);
        auto type = trade_type_from_name(params.require("type"));
        if (!type)
          throw ScenarioError(Kind::bad_parameter, line_no,
                              "bad trade type " + params.require("type"));
        AdvertisementPayload& ad = adv.ad;
        ad.trade_type = *type;
        ad.sale_blocks = parse_u64(params.require("dsale"), line_no, "dsale");
        if (auto v = params.get("item")) ad.item = *v;
        if (auto v = params.get("stprice"))
          ad.starting_price = parse_units(*v, line_no, "stprice");
        if (auto v = params.get("inc")) ad.min_increment = parse_units(*v, line_no, "inc");
        if (auto v = params.get("dbid")) ad.bid_window = parse_u64(*v, line_no, "dbid");
        if (auto v = params.get("dreveal")) ad.reveal_blocks = parse_u64(*v, line_no, "dreveal");
        if (auto v = params.get("deval")) ad.eval_blocks = parse_u64(*v, line_no, "deval");
        if (auto v = params.get("committee")) ad.committee = split_csv(*v);
        if (auto v = params.get("scoredim")) ad.score_dim = parse_u64(*v, line_no, "scoredim");
        if (auto v = params.get("safety")) ad.escrow_safety = parse_u64(*v, line_no, "safety");
        if (auto v = params.get("weights")) {
          for (const auto& w : split_csv(*v))
            ad.objective_weights.push_back(parse_score(w, line_no));
        }
        ad.physical = params.flag("physical");
        ad.require_bid_deposit = params.flag("require-bid-deposit");
        if (auto v = params.get("payment")) adv.funds.payment = parse_units(*v, line_no, "payment");
        if (auto v = params.get("deposit")) adv.funds.deposit = parse_units(*v, line_no, "deposit");
        if (adv.funds.payment < 0 || adv.funds.deposit < 0)
          throw ScenarioError(Kind::bad_parameter, line_no, "negative attachment");

        bool revflag = params.flag("revflag");
        auto reserve = params.get("reserve");
        if (revflag) {
          if (*type != TradeType::english_auction)
            throw ScenarioError(Kind::bad_parameter, line_no,
                                "revflag only applies to english auctions");
          if (!reserve)
            throw ScenarioError(Kind::bad_parameter, line_no, "revflag needs reserve=");
          adv.sealed_reserve = parse_units(*reserve, line_no, "reserve");
          if (!ad.reveal_blocks)
            throw ScenarioError(Kind::bad_parameter, line_no, "revflag needs dreveal=");
        } else if (reserve) {
          if (*type != TradeType::dutch_auction)
            throw ScenarioError(Kind::bad_parameter, line_no,
                                "a public reserve only applies to dutch auctions");
          ad.public_reserve = parse_units(*reserve, line_no, "reserve");
        }
        if (*type == TradeType::committee_scored && !ad.score_dim &&
            !ad.objective_weights.empty())
          ad.score_dim = ad.objective_weights.size();

        // structural check now, with a stand-in commitment for sealed trades
        AdvertisementPayload probe = ad;
        if (adv.sealed_reserve) {
          probe.reveal_required = true;
          probe.reserve_commitment = Digest{};
        }
        if (auto defect = advertisement_defect(probe))
          throw ScenarioError(Kind::bad_parameter, line_no, *defect);

        ad_lines[adv.label] = line_no;
        ad_types[adv.label] = *type;
        bids_of_ad[adv.label];
        ev.action = std::move(adv);
      } else if (action == "bid") {
        BidEvent bid;
        bid.actor = actor;
        bid.ad_label = params.require("ad");
        if (ad_lines.count(bid.ad_label) == 0)
          throw ScenarioError(Kind::bad_parameter, line_no, "unknown ad " + bid.ad_label);
        bid.label = params.get("label").value_or(actor);
        if (auto v = params.get("price")) bid.funds.payment = parse_units(*v, line_no, "price");
        if (auto v = params.get("deposit"))
          bid.funds.deposit = parse_units(*v, line_no, "deposit");
        if (bid.funds.payment < 0 || bid.funds.deposit < 0)
          throw ScenarioError(Kind::bad_parameter, line_no, "negative attachment");
        bid.content = params.get("content").value_or("");
        bids_of_ad[bid.ad_label].push_back(bid.label);
        ev.action = std::move(bid);
      } else if (action == "evaluate") {
        EvaluateEvent eval;
        eval.actor = actor;
        eval.ad_label = params.require("ad");
        if (ad_lines.count(eval.ad_label) == 0)
          throw ScenarioError(Kind::bad_parameter, line_no, "unknown ad " + eval.ad_label);
        auto decision = params.get("decision");
        auto bid = params.get("bid");
        auto score = params.get("score");
        if (decision && (bid || score))
          throw ScenarioError(Kind::bad_parameter, line_no,
                              "decision= excludes bid=/score=");
        if (!decision && (!bid || !score))
          throw ScenarioError(Kind::bad_parameter, line_no,
                              "evaluate needs decision= or bid= with score=");
        auto check_bid_label = [&](const std::string& label) {
          std::size_t hits = 0;
          for (const auto& l : bids_of_ad[eval.ad_label])
            if (l == label) ++hits;
          if (hits == 0)
            throw ScenarioError(Kind::bad_parameter, line_no, "unknown bid label " + label);
          if (hits > 1)
            throw ScenarioError(Kind::bad_parameter, line_no, "ambiguous bid label " + label);
        };
        if (decision) {
          check_bid_label(*decision);
          eval.decision_label = *decision;
        } else {
          check_bid_label(*bid);
          eval.scored_label = *bid;
          for (const auto& s : split_csv(*score)) eval.scores.push_back(parse_score(s, line_no));
        }
        ev.action = std::move(eval);
      } else if (action == "dispute") {
        DisputeEvent d;
        d.actor = actor;
        d.ad_label = params.require("ad");
        if (ad_lines.count(d.ad_label) == 0)
          throw ScenarioError(Kind::bad_parameter, line_no, "unknown ad " + d.ad_label);
        ev.action = std::move(d);
      } else if (action == "resolve") {
        ResolveEvent r;
        r.actor = actor;
        r.ad_label = params.require("ad");
        if (ad_lines.count(r.ad_label) == 0)
          throw ScenarioError(Kind::bad_parameter, line_no, "unknown ad " + r.ad_label);
        r.refund_to = params.require("refund");
        if (sc.find_node(r.refund_to) == nullptr)
          throw ScenarioError(Kind::unknown_actor, line_no, r.refund_to);
        ev.action = std::move(r);
      } else {
        throw ScenarioError(Kind::parse, line_no, "unknown action " + action);
      }
      sc.events.push_back(std::move(ev));
    } else {
      throw ScenarioError(Kind::parse, line_no, "unknown directive " + head);
    }
  }

  if (!saw_seed) throw ScenarioError(Kind::parse, line_no + 1, "missing seed");
  if (!saw_max_blocks) throw ScenarioError(Kind::parse, line_no + 1, "missing max-blocks");
  if (sc.nodes.empty()) throw ScenarioError(Kind::parse, line_no + 1, "no nodes declared");
  bool any_proposer = false;
  for (const auto& n : sc.nodes) any_proposer = any_proposer || n.roles.count(Role::proposer) > 0;
  if (!any_proposer)
    throw ScenarioError(Kind::parse, line_no + 1, "at least one proposer required");
  return sc;
}

inline Scenario parse_scenario_text(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

inline Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario: " + path);
  return parse_scenario(in);
}

}  // namespace marketsim
