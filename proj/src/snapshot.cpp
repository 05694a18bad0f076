#include "connguard/snapshot.hpp"

#include <fstream>
#include <set>

namespace connguard {

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                              const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SnapshotError(where + ": missing field '" + key + "'");
  }
  return *it;
}

std::uint64_t require_uint(const nlohmann::json& obj, const char* key,
                           const std::string& where) {
  const nlohmann::json& v = require(obj, key, where);
  if (!v.is_number_unsigned()) {
    throw SnapshotError(where + ": field '" + key +
                        "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

}  // namespace

nlohmann::json snapshot_document(const Registry& registry,
                                 std::uint64_t next_sequence) {
  nlohmann::json rules = nlohmann::json::array();
  for (std::size_t i = 0; i < registry.rules().size(); ++i) {
    const BaselineState& state = registry.state(i);
    nlohmann::json hashes = nlohmann::json::array();
    for (TupleHash h : state.hashes()) hashes.push_back(to_hex(h));
    rules.push_back({
        {"rule_id", registry.rules()[i].id},
        {"n", state.distinct_count()},
        {"N", state.observed_count()},
        {"phase", std::string(to_string(state.phase()))},
        {"hashes", std::move(hashes)},
    });
  }
  return {{"version", kSnapshotVersion},
          {"next_seq", next_sequence},
          {"rules", std::move(rules)}};
}

SnapshotContents parse_snapshot(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SnapshotError("snapshot must be a JSON object");
  const nlohmann::json& version = require(doc, "version", "snapshot");
  if (!version.is_number_integer() || version.get<long long>() != kSnapshotVersion) {
    throw SnapshotError("unsupported snapshot version " + version.dump() +
                        " (expected " + std::to_string(kSnapshotVersion) + ")");
  }

  SnapshotContents contents;
  if (doc.contains("next_seq")) {
    contents.next_sequence = require_uint(doc, "next_seq", "snapshot");
  }

  const nlohmann::json& rules = require(doc, "rules", "snapshot");
  if (!rules.is_array()) throw SnapshotError("snapshot: 'rules' must be an array");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const nlohmann::json& entry = rules[i];
    const std::string where = "snapshot rule #" + std::to_string(i);
    if (!entry.is_object()) throw SnapshotError(where + ": must be an object");

    const nlohmann::json& id = require(entry, "rule_id", where);
    if (!id.is_string()) throw SnapshotError(where + ": 'rule_id' must be a string");
    SnapshotEntry parsed;
    parsed.rule_id = id.get<std::string>();
    const std::string rule_where = "snapshot rule '" + parsed.rule_id + "'";
    if (!ids.insert(parsed.rule_id).second) {
      throw SnapshotError(rule_where + ": duplicate rule id");
    }

    const std::uint64_t n = require_uint(entry, "n", rule_where);
    const std::uint64_t big_n = require_uint(entry, "N", rule_where);
    const nlohmann::json& phase_json = require(entry, "phase", rule_where);
    const nlohmann::json& hashes_json = require(entry, "hashes", rule_where);
    if (!phase_json.is_string() || !hashes_json.is_array()) {
      throw SnapshotError(rule_where +
                          ": 'phase' must be a string and 'hashes' an array");
    }

    std::vector<TupleHash> hashes;
    hashes.reserve(hashes_json.size());
    try {
      for (const nlohmann::json& h : hashes_json) {
        if (!h.is_string()) throw std::invalid_argument("hash must be a string");
        hashes.push_back(hash_from_hex(h.get<std::string>()));
      }
      if (hashes.size() != n) {
        throw std::invalid_argument("n=" + std::to_string(n) +
                                    " but hashes has " +
                                    std::to_string(hashes.size()) + " entries");
      }
      const Phase phase = phase_from_string(phase_json.get<std::string>());
      parsed.state = BaselineState::from_parts(std::move(hashes), big_n, phase);
    } catch (const std::invalid_argument& e) {
      throw SnapshotError(rule_where + ": " + e.what());
    }
    contents.entries.push_back(std::move(parsed));
  }
  return contents;
}

RestoredRegistry restore_registry(const nlohmann::json& doc, Policy policy) {
  SnapshotContents contents = parse_snapshot(doc);
  std::vector<BaselineState> states(policy.rules.size());
  for (SnapshotEntry& entry : contents.entries) {
    std::size_t index = policy.rules.size();
    for (std::size_t i = 0; i < policy.rules.size(); ++i) {
      if (policy.rules[i].id == entry.rule_id) index = i;
    }
    if (index == policy.rules.size()) {
      throw SnapshotError("snapshot rule '" + entry.rule_id +
                          "' does not exist in the policy");
    }
    const Phase expected = evaluate_phase(entry.state, policy.rules[index]);
    if (expected != entry.state.phase()) {
      throw SnapshotError("snapshot rule '" + entry.rule_id + "': stored phase '" +
                          std::string(to_string(entry.state.phase())) +
                          "' disagrees with counters (expected '" +
                          std::string(to_string(expected)) + "')");
    }
    states[index] = std::move(entry.state);
  }
  return {Registry(std::move(policy), std::move(states)),
          contents.next_sequence};
}

void save_snapshot_file(const std::filesystem::path& path,
                        const nlohmann::json& doc) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write snapshot '" + tmp.string() + "'");
    }
    out << doc.dump() << '\n';
    out.flush();
    if (!out) {
      throw std::runtime_error("failed writing snapshot '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json load_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open snapshot '" + path.string() + "'");
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SnapshotError("snapshot '" + path.string() + "' is not valid JSON: " +
                        e.what());
  }
}

}  // namespace connguard
