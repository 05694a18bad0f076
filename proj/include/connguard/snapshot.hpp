// snapshot.hpp
//
// JSON persistence of every rule's baseline:
//
//   {"version":1,
//    "next_seq":int,
//    "rules":[{"rule_id":str,"n":int,"N":int,
//              "phase":"learning"|"detecting","hashes":[hex16,...]}]}
//
// Hashes are 16 lowercase hex digits in ascending order. `next_seq` is the
// sequence number the next ingested event receives; it is optional on load.
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "connguard/baseline.hpp"
#include "connguard/engine.hpp"

namespace connguard {

inline constexpr int kSnapshotVersion = 1;

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SnapshotEntry {
  std::string rule_id;
  BaselineState state;
};

struct SnapshotContents {
  std::uint64_t next_sequence = 0;
  std::vector<SnapshotEntry> entries;
};

nlohmann::json snapshot_document(const Registry& registry,
                                 std::uint64_t next_sequence = 0);

// Structural validation only: version, field types, hex format, ordering,
// N >= n. Phase consistency needs the policy; see restore_registry.
SnapshotContents parse_snapshot(const nlohmann::json& doc);

struct RestoredRegistry {
  Registry registry;
  std::uint64_t next_sequence = 0;
};

// Rebuilds a registry for `policy`. Rejects unknown or repeated rule ids and
// any stored phase that disagrees with evaluate_phase. Policy rules missing
// from the snapshot start with an empty baseline.
RestoredRegistry restore_registry(const nlohmann::json& doc, Policy policy);

// Writes via a temporary file and rename so readers never see a torn file.
void save_snapshot_file(const std::filesystem::path& path,
                        const nlohmann::json& doc);
nlohmann::json load_snapshot_file(const std::filesystem::path& path);

}  // namespace connguard
