#pragma once

#include <string>
#include <vector>

namespace mtdg {

enum class PriceFlag { Change, NoChange };

inline const char* to_string(PriceFlag f) { return f == PriceFlag::Change ? "C" : "NC"; }

/// Joint symbol of trade sign and price-impact flag.
struct SignedEvent {
    int sign = 0;  // +1 buy, -1 sell
    PriceFlag flag = PriceFlag::Change;
};

/// Finite state alphabet. States are 1-based throughout the public API.
///
/// When `has_event_map` is set the space is the canonical four-state
/// signed-event alphabet:
///   1 = (-1, C), 2 = (-1, NC), 3 = (+1, NC), 4 = (+1, C).
struct StateSpace {
    int m = 0;
    std::vector<std::string> labels;
    bool has_event_map = false;

    static StateSpace plain(int m);
    static StateSpace signed_events();

    SignedEvent event(int state) const;
    int state_of(int sign, PriceFlag flag) const;

    /// Throws DomainError if m < 2, labels are inconsistent, or the event
    /// map is attached to anything but the m=4 alphabet.
    void check() const;
};

}  // namespace mtdg
