// event_io.hpp
//
// JSON Lines codecs for connection events and verdicts.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "connguard/engine.hpp"
#include "connguard/policy.hpp"

namespace connguard {

class EventParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses one event object, e.g. {"DB_USER":"scott","OS_USER":"root"}.
// Keys that are not variable names are ignored, except "_ts", which becomes
// the event timestamp. A variable-named key must carry a string value.
ConnectionEvent parse_event_line(std::string_view line,
                                 std::uint64_t sequence_number);

std::string format_event(const ConnectionEvent& event);

// {"seq":..,"rule":..,"decision":..,"hash":..,"phase_before":..,
//  "phase_after":..,"n":..,"N":..,"threshold":..}, plus "_ts" when the event
// carried one.
std::string format_verdict(const Verdict& verdict);

}  // namespace connguard
