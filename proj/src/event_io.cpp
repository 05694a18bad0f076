#include "connguard/event_io.hpp"

#include <nlohmann/json.hpp>

namespace connguard {

ConnectionEvent parse_event_line(std::string_view line,
                                 std::uint64_t sequence_number) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw EventParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw EventParseError("event must be a JSON object");

  ConnectionEvent event;
  event.sequence_number = sequence_number;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    if (key == "_ts") {
      if (!it->is_string()) throw EventParseError("'_ts' must be a string");
      event.timestamp = it->get<std::string>();
      continue;
    }
    if (!is_valid_variable_name(key)) continue;
    if (!it->is_string()) {
      throw EventParseError("variable '" + key + "' must be a string");
    }
    event.values.emplace(key, it->get<std::string>());
  }
  return event;
}

std::string format_event(const ConnectionEvent& event) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [key, value] : event.values) doc[key] = value;
  if (event.timestamp) doc["_ts"] = *event.timestamp;
  return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string format_verdict(const Verdict& v) {
  nlohmann::ordered_json doc;
  doc["seq"] = v.sequence_number;
  doc["rule"] = v.rule_id;
  doc["decision"] = std::string(to_string(v.decision));
  doc["hash"] = to_hex(v.hash);
  doc["phase_before"] = std::string(to_string(v.phase_before));
  doc["phase_after"] = std::string(to_string(v.phase_after));
  doc["n"] = v.n_after;
  doc["N"] = v.observed_after;
  doc["threshold"] = v.threshold;
  if (v.timestamp) doc["_ts"] = *v.timestamp;
  return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace connguard
