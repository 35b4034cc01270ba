#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mtdg/state_space.hpp"

namespace mtdg {

/// Day-partitioned categorical event stream with values in 1..m.
///
/// `day_offsets` holds the start index of each trading day; the first entry
/// is always 0 and entries are strictly increasing. `day_labels` is optional
/// bookkeeping (dates for ingested data, synthetic tags for simulations) and
/// carries no semantics beyond re-export.
struct EventSequence {
    std::vector<std::int32_t> states;
    std::vector<std::size_t> day_offsets;
    StateSpace space;
    std::vector<std::string> day_labels;

    std::size_t size() const { return states.size(); }
    std::size_t n_days() const { return day_offsets.size(); }

    /// Half-open event range [first, last) of day d.
    std::pair<std::size_t, std::size_t> day_span(std::size_t d) const;

    /// Sub-sequence covering days [first_day, first_day + n) with rebased offsets.
    EventSequence slice_days(std::size_t first_day, std::size_t n) const;

    /// Concatenation of the given days (repeats allowed), used by block bootstrap.
    EventSequence resample_days(const std::vector<std::size_t>& day_indices) const;

    /// Throws DomainError when a value falls outside 1..m or the day offsets
    /// are malformed.
    void check() const;
};

}  // namespace mtdg
