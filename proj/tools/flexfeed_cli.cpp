// flexfeed: command-line front end.
//
//   flexfeed feedback  --config run.json --sessions s.csv [--prefix 0,1]
//   flexfeed capacity  --config run.json --sessions s.csv (--exact | --mc N)
//   flexfeed simulate  --config run.json --sessions s.csv [--prices p.csv] [--csv slots.csv]
//   flexfeed sessions generate --horizon 24 --stations 4 ... [--out s.csv]
//   flexfeed check     --config run.json [--sessions s.csv] [--prices p.csv]
//
// Exit codes: 0 success, 1 validation error, 2 dead end.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "flexfeed/errors.hpp"
#include "flexfeed/io.hpp"

namespace {

using namespace flexfeed;

struct Common {
  std::string config;
  std::string sessions;
  std::string prices;
  std::string out;
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw ValidationError({"cannot write '" + path + "'"});
  f << text;
}

Instance load_instance(const Common& c, io::RunConfig& cfg) {
  cfg = io::read_run_config_file(c.config);
  auto sessions = c.sessions.empty() ? std::vector<Session>{} : io::read_sessions_file(c.sessions);
  return io::make_instance(cfg, std::move(sessions));
}

void add_common(CLI::App* cmd, Common& c, bool need_sessions) {
  cmd->add_option("--config", c.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  auto* s = cmd->add_option("--sessions", c.sessions, "Session file (CSV)")->check(CLI::ExistingFile);
  if (need_sessions) s->required();
  cmd->add_option("--out", c.out, "Write output here instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flexibility feedback toolkit for deferrable-load aggregators"};
  app.require_subcommand(1);

  Common common;

  std::string prefix_text;
  auto* fb_cmd = app.add_subcommand("feedback", "Feedback vector at a signal prefix");
  add_common(fb_cmd, common, true);
  fb_cmd->add_option("--prefix", prefix_text, "Comma-separated signal prefix, e.g. 0,1");

  bool exact = false;
  std::size_t mc = 0;
  double quantum = 0.0;
  auto* cap_cmd = app.add_subcommand("capacity", "System capacity, exact or Monte Carlo");
  add_common(cap_cmd, common, true);
  auto* exact_opt = cap_cmd->add_flag("--exact", exact, "Exact log2 |S| by enumeration");
  auto* mc_opt = cap_cmd->add_option("--mc", mc, "Monte Carlo estimate with N trajectories")->check(CLI::PositiveNumber);
  exact_opt->excludes(mc_opt);
  cap_cmd->add_option("--quantum", quantum, "Memoize counts on states that are multiples of this energy");

  std::string slot_csv;
  bool record_vectors = false;
  auto* sim_cmd = app.add_subcommand("simulate", "Closed-loop simulation");
  add_common(sim_cmd, common, true);
  sim_cmd->add_option("--prices", common.prices, "Price file (CSV); zero prices when omitted")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--csv", slot_csv, "Also write per-slot CSV here");
  sim_cmd->add_flag("--record-feedback", record_vectors, "Include per-slot feedback vectors in the JSON");

  GeneratorParams gen;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* sessions_cmd = app.add_subcommand("sessions", "Session file utilities");
  sessions_cmd->require_subcommand(1);
  auto* gen_cmd = sessions_cmd->add_subcommand("generate", "Generate synthetic sessions");
  gen_cmd->add_option("--horizon", gen.horizon)->required();
  gen_cmd->add_option("--stations", gen.stations)->required();
  gen_cmd->add_option("--rate", gen.arrival_rate, "Mean arrivals per slot")->required();
  gen_cmd->add_option("--min-stay", gen.min_stay);
  gen_cmd->add_option("--max-stay", gen.max_stay);
  gen_cmd->add_option("--min-energy", gen.min_energy);
  gen_cmd->add_option("--max-energy", gen.max_energy);
  gen_cmd->add_option("--peak-rate", gen.peak_rate);
  gen_cmd->add_option("--quantum", gen.energy_quantum, "Round energies down to multiples of this");
  gen_cmd->add_flag("--arrival-laxity", gen.nonnegative_arrival_laxity,
                    "Clip energy so every session has nonnegative laxity on arrival");
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_option("--out", gen_out);

  auto* check_cmd = app.add_subcommand("check", "Validate configuration and data files");
  add_common(check_cmd, common, false);
  check_cmd->add_option("--prices", common.prices, "Price file (CSV)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    io::RunConfig cfg;
    if (fb_cmd->parsed()) {
      const Instance inst = load_instance(common, cfg);
      const Trajectory prefix = parse_trajectory(prefix_text);
      SearchOptions options;
      FeasibilitySearch search(inst, cfg.policy, options);
      const auto node = search.replay(prefix);
      const auto fb = feedback_at(search, node, cfg.feedback, prefix);
      emit(io::dump_json(io::feedback_json(fb, cfg.feedback, prefix)), common.out);
    } else if (cap_cmd->parsed()) {
      if (!exact && mc == 0) throw ValidationError({"capacity needs --exact or --mc N"});
      const Instance inst = load_instance(common, cfg);
      SearchOptions options;
      if (quantum > 0.0) options.energy_quantum = quantum;
      if (exact) {
        const Count n = count_feasible(inst, cfg.policy, {}, options);
        if (n == 0) throw DeadEnd(DeadEnd::Reason::NoFlexibility, {}, "feasible set is empty");
        emit(io::dump_json(io::capacity_exact_json(n, cfg.log_base)), common.out);
      } else {
        const auto est = estimate_capacity(inst, cfg.policy, cfg.feedback, mc, cfg.seed, cfg.log_base, options);
        emit(io::dump_json(io::capacity_estimate_json(est, cfg.feedback)), common.out);
      }
    } else if (sim_cmd->parsed()) {
      SimConfig sim;
      sim.instance = load_instance(common, cfg);
      sim.policy = cfg.policy;
      sim.feedback = cfg.feedback;
      sim.op.mode = cfg.operator_mode;
      sim.op.beta = cfg.beta;
      sim.op.cost = common.prices.empty() ? CostCurve::zero(cfg.horizon)
                                          : CostCurve::linear(io::read_prices_file(common.prices));
      sim.seed = cfg.seed;
      sim.base = cfg.log_base;
      sim.record_feedback_vectors = record_vectors;
      const auto result = run_closed_loop(sim);
      emit(io::dump_json(io::sim_result_json(result, sim.instance, sim)), common.out);
      if (!slot_csv.empty()) {
        std::ostringstream os;
        io::write_slot_csv(os, result, cfg.log_base);
        emit(os.str(), slot_csv);
      }
    } else if (gen_cmd->parsed()) {
      const auto sessions = generate_sessions(gen, gen_seed);
      std::ostringstream os;
      io::write_sessions(os, sessions);
      emit(os.str(), gen_out);
    } else if (check_cmd->parsed()) {
      const Instance inst = load_instance(common, cfg);
      if (!common.prices.empty())
        CostCurve::linear(io::read_prices_file(common.prices)).validate(inst.grid, inst.horizon);
      std::cerr << "ok: horizon " << inst.horizon << ", " << inst.sessions.size() << " sessions, "
                << inst.grid.size() << " grid levels\n";
    }
  } catch (const DeadEnd& e) {
    std::cerr << "dead end (" << to_string(e.reason()) << "): " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
