// Command-line front end: runs scenario files against the simulated market
// chain, or replays seeded random campaigns against the matching oracle.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "marketsim/audit.hpp"
#include "marketsim/engine.hpp"
#include "marketsim/random_scenario.hpp"
#include "marketsim/scenario.hpp"

namespace {

void print_summary(const marketsim::Engine& engine) {
  const auto& st = engine.state();
  std::cout << "blocks: " << st.height() << "  head: " << engine.chain_digest().hex8()
            << "  total funds: " << st.total_funds() << "\n";
  for (const auto& ad_id : engine.view().trade_order()) {
    const auto* t = engine.view().trade(ad_id);
    std::cout << "trade " << engine.label_of(ad_id) << " [" << trade_type_name(t->ad.trade_type)
              << "] phase=" << phase_name(t->phase);
    if (t->winning_bid) {
      const auto* wb = t->find_bid(*t->winning_bid);
      std::cout << " winner=" << engine.label_of(*t->winning_bid) << " by " << wb->sender
                << " price=" << wb->payment;
    }
    if (t->escrow) std::cout << " escrow=" << escrow_state_name(t->escrow->state);
    std::cout << "\n";
  }
  for (const auto& [id, bal] : st.balances) std::cout << "balance " << id << " = " << bal << "\n";
}

int report_violations(const marketsim::AuditReport& report) {
  if (report.ok()) {
    std::cout << "audit: clean\n";
    return 0;
  }
  for (const auto& v : report.violations)
    std::cerr << "violation at block " << v.block << ": " << v.what << "\n";
  std::cerr << "audit: " << report.violations.size() << " violation(s)\n";
  return 1;
}

int run_command(const std::string& path, std::uint64_t* seed_override,
                std::uint64_t* max_blocks_override, const std::string& trace_path,
                const std::string& dump_path, bool full_audit) {
  marketsim::Scenario sc;
  try {
    sc = marketsim::parse_scenario_file(path);
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 2;
  }
  if (seed_override != nullptr) sc.seed = *seed_override;
  if (max_blocks_override != nullptr) sc.max_blocks = *max_blocks_override;

  marketsim::Engine engine(std::move(sc));
  engine.run();
  print_summary(engine);

  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) {
      std::cerr << "cannot write trace: " << trace_path << "\n";
      return 2;
    }
    for (const auto& line : engine.trace()) out << line << "\n";
  }
  if (!dump_path.empty()) {
    std::ofstream out(dump_path);
    if (!out) {
      std::cerr << "cannot write ledger dump: " << dump_path << "\n";
      return 2;
    }
    out << engine.ledger_dump();
  }

  marketsim::AuditReport report;
  if (full_audit) {
    report = marketsim::run_audits(engine);
  } else {
    report.merge(engine.violations());
  }
  return report_violations(report);
}

int campaign_command(std::uint64_t count, std::uint64_t seed, bool mixed) {
  std::uint64_t bad = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    marketsim::ScenarioGenerator gen(seed, i);
    marketsim::Scenario sc = mixed ? gen.mixed() : gen.english_auction();
    marketsim::Engine engine(std::move(sc));
    engine.run();
    marketsim::AuditReport report = marketsim::run_audits(engine);
    if (!report.ok()) {
      ++bad;
      std::cerr << "scenario " << i << " (seed " << seed << "):\n";
      for (const auto& v : report.violations)
        std::cerr << "  block " << v.block << ": " << v.what << "\n";
    }
  }
  std::cout << "campaign: " << (count - bad) << "/" << count << " clean\n";
  return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic marketplace chain simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::uint64_t seed_override = 0;
  std::uint64_t max_blocks_override = 0;
  std::string trace_path;
  std::string dump_path;
  bool full_audit = false;

  CLI::App* run = app.add_subcommand("run", "execute a scenario file");
  run->add_option("scenario", scenario_path, "scenario file (.scn)")->required();
  CLI::Option* seed_opt = run->add_option("--seed", seed_override, "override the scenario seed");
  CLI::Option* max_opt =
      run->add_option("--max-blocks", max_blocks_override, "override the block budget");
  run->add_option("--trace", trace_path, "write the event trace to a file");
  run->add_option("--dump-ledger", dump_path, "write the per-block ledger dump to a file");
  run->add_flag("--audit", full_audit, "run the full post-run audit suite");

  std::uint64_t count = 100;
  std::uint64_t campaign_seed = 1;
  bool mixed = false;
  CLI::App* campaign =
      app.add_subcommand("oracle-campaign", "run seeded random scenarios against the audits");
  campaign->add_option("--count", count, "number of scenarios")->required();
  campaign->add_option("--seed", campaign_seed, "campaign seed")->required();
  campaign->add_flag("--mixed", mixed, "draw from all trade types instead of english only");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_command(scenario_path, seed_opt->count() > 0 ? &seed_override : nullptr,
                         max_opt->count() > 0 ? &max_blocks_override : nullptr, trace_path,
                         dump_path, full_audit);
    }
    return campaign_command(count, campaign_seed, mixed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
