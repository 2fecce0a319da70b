#include "flexfeed/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "flexfeed/errors.hpp"

namespace flexfeed::io {

using nlohmann::json;

namespace {

std::vector<std::string> split_row(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <typename T>
std::optional<T> parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  T value{};
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot open '" + path + "'"});
  return in;
}

void expect_header(std::istream& in, const std::string& source, const std::string& header) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError({source + ": empty file, expected header '" + header + "'"});
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (trim(line) != header)
    throw ValidationError({source + ":1: expected header '" + header + "', got '" + line + "'"});
}

}  // namespace

std::vector<Session> read_sessions(std::istream& in, const std::string& source) {
  expect_header(in, source, "session_id,arrival_slot,departure_slot,energy,peak_rate");
  std::vector<Session> out;
  std::vector<std::string> problems;
  std::set<std::string> ids;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line) == "\r") continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    auto f = split_row(line);
    if (f.size() != 5) {
      problems.push_back(where + "expected 5 fields, got " + std::to_string(f.size()));
      continue;
    }
    Session s;
    s.id = trim(f[0]);
    auto a = parse_number<int>(f[1]);
    auto d = parse_number<int>(f[2]);
    auto e = parse_number<double>(f[3]);
    auto r = parse_number<double>(f[4]);
    std::vector<std::string> row;
    if (s.id.empty()) row.push_back("empty session_id");
    if (!a) row.push_back("arrival_slot '" + trim(f[1]) + "' is not an integer");
    if (!d) row.push_back("departure_slot '" + trim(f[2]) + "' is not an integer");
    if (!e) row.push_back("energy '" + trim(f[3]) + "' is not a number");
    if (!r) row.push_back("peak_rate '" + trim(f[4]) + "' is not a number");
    if (row.empty()) {
      s.arrival = *a;
      s.departure = *d;
      s.energy = *e;
      s.peak_rate = *r;
      if (s.arrival < 1) row.push_back("arrival_slot must be >= 1");
      if (s.departure < s.arrival) row.push_back("departure_slot < arrival_slot");
      if (s.energy < 0.0) row.push_back("energy must be nonnegative");
      if (!(s.peak_rate > 0.0)) row.push_back("peak_rate must be positive");
      if (row.empty() && s.energy > s.window_capacity() + kEnergyTolerance)
        row.push_back("energy exceeds peak_rate * window length");
    }
    if (!s.id.empty() && !ids.insert(s.id).second) row.push_back("duplicate session_id '" + s.id + "'");
    for (auto& msg : row) problems.push_back(where + msg);
    if (row.empty()) out.push_back(std::move(s));
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return out;
}

std::vector<Session> read_sessions_file(const std::string& path) {
  auto in = open_or_throw(path);
  return read_sessions(in, path);
}

void write_sessions(std::ostream& out, const std::vector<Session>& sessions) {
  out << "session_id,arrival_slot,departure_slot,energy,peak_rate\n";
  for (const auto& s : sessions)
    out << s.id << ',' << s.arrival << ',' << s.departure << ',' << fmt17(s.energy) << ',' << fmt17(s.peak_rate)
        << '\n';
}

std::vector<double> read_prices(std::istream& in, const std::string& source) {
  expect_header(in, source, "slot,price");
  std::vector<double> prices;
  std::vector<std::string> problems;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    auto f = split_row(line);
    if (f.size() != 2) {
      problems.push_back(where + "expected 2 fields, got " + std::to_string(f.size()));
      continue;
    }
    auto slot = parse_number<int>(f[0]);
    auto price = parse_number<double>(f[1]);
    if (!slot) problems.push_back(where + "slot '" + trim(f[0]) + "' is not an integer");
    if (!price) problems.push_back(where + "price '" + trim(f[1]) + "' is not a finite number");
    if (!slot || !price) continue;
    if (*slot != static_cast<int>(prices.size()) + 1) {
      problems.push_back(where + "expected slot " + std::to_string(prices.size() + 1) + ", got " +
                         std::to_string(*slot));
      continue;
    }
    prices.push_back(*price);
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return prices;
}

std::vector<double> read_prices_file(const std::string& path) {
  auto in = open_or_throw(path);
  return read_prices(in, path);
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where,
                    std::vector<std::string>& problems) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) problems.push_back("unknown key '" + where + key + "'");
}

std::optional<double> number_at(const json& obj, const char* key, const std::string& where,
                                std::vector<std::string>& problems) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_number()) {
    problems.push_back("'" + where + key + "' must be a number");
    return std::nullopt;
  }
  return obj.at(key).get<double>();
}

std::optional<std::string> string_at(const json& obj, const char* key, const std::string& where,
                                     std::vector<std::string>& problems) {
  if (!obj.contains(key)) return std::nullopt;
  if (!obj.at(key).is_string()) {
    problems.push_back("'" + where + key + "' must be a string");
    return std::nullopt;
  }
  return obj.at(key).get<std::string>();
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  std::vector<std::string> problems;
  RunConfig cfg;
  if (!doc.is_object()) throw ValidationError({"run config must be a JSON object"});
  reject_unknown(doc, {"horizon", "grid", "policy", "feedback", "operator", "constraints", "seed", "log_base"}, "",
                 problems);

  if (!doc.contains("horizon") || !doc.at("horizon").is_number_integer())
    problems.emplace_back("'horizon' is required and must be an integer");
  else
    cfg.horizon = doc.at("horizon").get<int>();

  if (!doc.contains("grid")) {
    problems.emplace_back("'grid' is required");
  } else if (const auto& g = doc.at("grid"); g.is_array()) {
    for (const auto& v : g) {
      if (!v.is_number()) {
        problems.emplace_back("'grid' entries must be numbers");
        break;
      }
      cfg.grid.push_back(v.get<double>());
    }
  } else if (g.is_object()) {
    reject_unknown(g, {"min", "max", "levels"}, "grid.", problems);
    auto lo = number_at(g, "min", "grid.", problems);
    auto hi = number_at(g, "max", "grid.", problems);
    if (!lo || !hi || !g.contains("levels") || !g.at("levels").is_number_unsigned()) {
      problems.emplace_back("'grid' object needs numeric min, max and a positive integer levels");
    } else {
      try {
        cfg.grid = SignalGrid::uniform(*lo, *hi, g.at("levels").get<std::size_t>()).levels();
      } catch (const ValidationError& e) {
        for (const auto& p : e.problems()) problems.push_back("grid: " + p);
      }
    }
  } else {
    problems.emplace_back("'grid' must be a list of levels or {min, max, levels}");
  }

  if (auto p = string_at(doc, "policy", "", problems)) {
    try {
      cfg.policy = parse_policy_kind(*p);
    } catch (const ValidationError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  }

  if (doc.contains("feedback")) {
    const auto& f = doc.at("feedback");
    if (!f.is_object()) {
      problems.emplace_back("'feedback' must be an object");
    } else {
      reject_unknown(f, {"mode", "depth"}, "feedback.", problems);
      const auto mode = string_at(f, "mode", "feedback.", problems).value_or("exact");
      if (mode == "exact") {
        cfg.feedback = FeedbackSource::exact();
      } else if (mode == "lookahead") {
        if (!f.contains("depth") || !f.at("depth").is_number_integer() || f.at("depth").get<int>() < 1)
          problems.emplace_back("'feedback.depth' must be an integer >= 1 for lookahead mode");
        else
          cfg.feedback = FeedbackSource::lookahead(f.at("depth").get<int>());
      } else {
        problems.push_back("'feedback.mode' must be 'exact' or 'lookahead', got '" + mode + "'");
      }
    }
  }

  if (doc.contains("operator")) {
    const auto& o = doc.at("operator");
    if (!o.is_object()) {
      problems.emplace_back("'operator' must be an object");
    } else {
      reject_unknown(o, {"mode", "beta"}, "operator.", problems);
      const auto mode = string_at(o, "mode", "operator.", problems).value_or("rhc");
      if (mode == "rhc")
        cfg.operator_mode = OperatorConfig::Mode::Rhc;
      else if (mode == "sampler")
        cfg.operator_mode = OperatorConfig::Mode::Sampler;
      else
        problems.push_back("'operator.mode' must be 'rhc' or 'sampler', got '" + mode + "'");
      if (auto b = number_at(o, "beta", "operator.", problems)) {
        if (!(*b > 0.0)) problems.emplace_back("'operator.beta' must be positive");
        cfg.beta = *b;
      }
    }
  }

  if (doc.contains("constraints")) {
    const auto& c = doc.at("constraints");
    if (!c.is_object()) {
      problems.emplace_back("'constraints' must be an object");
    } else {
      reject_unknown(c, {"peak_limit", "ramp_limit", "initial_signal"}, "constraints.", problems);
      cfg.constraints.peak_limit = number_at(c, "peak_limit", "constraints.", problems);
      cfg.constraints.ramp_limit = number_at(c, "ramp_limit", "constraints.", problems);
      cfg.constraints.initial_signal = number_at(c, "initial_signal", "constraints.", problems).value_or(0.0);
    }
  }

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned())
      problems.emplace_back("'seed' must be a nonnegative integer");
    else
      cfg.seed = doc.at("seed").get<std::uint64_t>();
  }

  if (doc.contains("log_base")) {
    const auto& b = doc.at("log_base");
    try {
      if (b.is_number_integer() && b.get<int>() == 2)
        cfg.log_base = LogBase::Bits;
      else if (b.is_string())
        cfg.log_base = parse_log_base(b.get<std::string>());
      else
        problems.emplace_back("'log_base' must be 2 or \"e\"");
    } catch (const ValidationError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  }

  if (!problems.empty()) throw ValidationError(std::move(problems));
  return cfg;
}

RunConfig read_run_config_file(const std::string& path) {
  auto in = open_or_throw(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError({path + ": " + e.what()});
  }
  return parse_run_config(doc);
}

Instance make_instance(const RunConfig& config, std::vector<Session> sessions) {
  Instance inst{config.horizon, std::move(sessions), SignalGrid(config.grid), config.constraints};
  inst.validate();
  return inst;
}

namespace {

void write_value(std::string& out, const json& v, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(key).dump() + ": ";
        write_value(out, item, indent, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ", ";
        first = false;
        write_value(out, item, indent, depth + 1);
      }
      out += "]";
      return;
    }
    case json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? fmt17(d) : "null";
      return;
    }
    default:
      out += v.dump();
  }
}

double to_bits(double value, LogBase base) { return base == LogBase::Bits ? value : value / std::log(2.0); }

json source_json(const FeedbackSource& source) {
  json j = {{"mode", source.mode == FeedbackSource::Mode::Exact ? "exact" : "lookahead"}};
  if (source.mode == FeedbackSource::Mode::Lookahead) j["depth"] = source.depth;
  return j;
}

}  // namespace

std::string dump_json(const json& value) {
  std::string out;
  write_value(out, value, 2, 0);
  out += "\n";
  return out;
}

json feedback_json(const FeedbackVector& fb, const FeedbackSource& source, const Trajectory& prefix) {
  return json{{"schema_version", kSchemaVersion},
              {"mode", source.describe()},
              {"prefix", prefix},
              {"levels", fb.levels},
              {"counts", fb.counts},
              {"probabilities", fb.probabilities},
              {"entropy_bits", fb.entropy(LogBase::Bits)}};
}

json capacity_exact_json(Count feasible_count, LogBase base) {
  const double n = static_cast<double>(feasible_count);
  return json{{"schema_version", kSchemaVersion},
              {"mode", "exact"},
              {"feasible_count", feasible_count},
              {"capacity_bits", std::log2(n)},
              {"capacity", base == LogBase::Bits ? std::log2(n) : std::log(n)},
              {"log_base", to_string(base)}};
}

json capacity_estimate_json(const CapacityEstimate& est, const FeedbackSource& source) {
  std::vector<double> per_bits;
  per_bits.reserve(est.per_trajectory.size());
  for (double v : est.per_trajectory) per_bits.push_back(to_bits(v, est.base));
  return json{{"schema_version", kSchemaVersion},
              {"mode", "monte_carlo"},
              {"feedback", source_json(source)},
              {"n_trajectories", est.n_trajectories},
              {"seed", est.seed},
              {"mean_bits", to_bits(est.mean, est.base)},
              {"std_error_bits", to_bits(est.std_error, est.base)},
              {"dead_ends", est.dead_ends},
              {"per_trajectory_bits", per_bits}};
}

json sim_result_json(const SimResult& r, const Instance& instance, const SimConfig& config) {
  json allocations = json::array();
  for (const auto& a : r.allocations) allocations.push_back(a.energy);
  json unmet = json::object();
  for (std::size_t j = 0; j < instance.sessions.size(); ++j) unmet[instance.sessions[j].id] = r.unmet_energy[j];
  std::vector<double> entropy_bits;
  for (double h : r.feedback_entropies) entropy_bits.push_back(to_bits(h, config.base));

  json verdict = {{"feasible", r.verdict.feasible}};
  if (r.verdict.violation) {
    const auto& v = *r.verdict.violation;
    verdict["violation"] = {{"kind", to_string(v.kind)}, {"slot", v.slot}, {"detail", v.detail}};
    if (v.session) verdict["violation"]["session"] = instance.sessions[*v.session].id;
  }

  json out = {{"schema_version", kSchemaVersion},
              {"policy", config.policy.name()},
              {"feedback", source_json(config.feedback)},
              {"operator",
               {{"mode", config.op.mode == OperatorConfig::Mode::Rhc ? "rhc" : "sampler"}, {"beta", config.op.beta}}},
              {"seed", config.seed},
              {"session_ids",
               [&] {
                 json ids = json::array();
                 for (const auto& s : instance.sessions) ids.push_back(s.id);
                 return ids;
               }()},
              {"signals", r.signals},
              {"allocations", allocations},
              {"feedback_entropy_bits", entropy_bits},
              {"slot_costs", r.slot_costs},
              {"total_cost", r.total_cost},
              {"feasible", r.verdict.feasible},
              {"verdict", verdict},
              {"unmet_energy", unmet},
              {"metrics",
               {{"tracking_mse", r.mse},
                {"delivered", r.delivered},
                {"demanded", r.demanded},
                {"undelivered_fraction", r.delivery.undelivered_fraction},
                {"mpe_printed_formula", r.delivery.printed_formula}}}};
  if (!r.feedback_vectors.empty()) {
    json fbs = json::array();
    for (const auto& fb : r.feedback_vectors) fbs.push_back(fb.probabilities);
    out["feedback_vectors"] = fbs;
  }
  return out;
}

void write_slot_csv(std::ostream& out, const SimResult& result, LogBase base) {
  out << "slot,signal,delivered,entropy_bits,cost\n";
  for (std::size_t t = 0; t < result.signals.size(); ++t)
    out << t + 1 << ',' << fmt17(result.signals[t]) << ',' << fmt17(result.allocations[t].total()) << ','
        << fmt17(to_bits(result.feedback_entropies[t], base)) << ',' << fmt17(result.slot_costs[t]) << '\n';
}

}  // namespace flexfeed::io
