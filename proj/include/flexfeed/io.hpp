#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flexfeed/engine.hpp"

namespace flexfeed::io {

inline constexpr const char* kSchemaVersion = "1.0";

// Session files: header `session_id,arrival_slot,departure_slot,energy,peak_rate`.
std::vector<Session> read_sessions(std::istream& in, const std::string& source = "sessions");
std::vector<Session> read_sessions_file(const std::string& path);
void write_sessions(std::ostream& out, const std::vector<Session>& sessions);

// Price files: header `slot,price`, one row per slot 1..T in order.
std::vector<double> read_prices(std::istream& in, const std::string& source = "prices");
std::vector<double> read_prices_file(const std::string& path);

/// Parsed run configuration document.
struct RunConfig {
  int horizon = 1;
  std::vector<double> grid;
  PolicyKind policy = PolicyKind::LLF;
  FeedbackSource feedback;
  OperatorConfig::Mode operator_mode = OperatorConfig::Mode::Rhc;
  double beta = 1.0;
  OperationalConstraints constraints;
  std::uint64_t seed = 0;
  LogBase log_base = LogBase::Bits;
};

/// Rejects unknown keys and wrong types; reports every problem at once.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig read_run_config_file(const std::string& path);

Instance make_instance(const RunConfig& config, std::vector<Session> sessions);

/// Deterministic serialization: floats always printed with 17 significant digits.
std::string dump_json(const nlohmann::json& value);

nlohmann::json feedback_json(const FeedbackVector& fb, const FeedbackSource& source, const Trajectory& prefix);
nlohmann::json capacity_exact_json(Count feasible_count, LogBase base);
nlohmann::json capacity_estimate_json(const CapacityEstimate& est, const FeedbackSource& source);
nlohmann::json sim_result_json(const SimResult& result, const Instance& instance, const SimConfig& config);

/// `slot,signal,delivered,entropy_bits,cost` rows.
void write_slot_csv(std::ostream& out, const SimResult& result, LogBase base);

}  // namespace flexfeed::io
