#include "mtdg/sequence.hpp"

#include "mtdg/errors.hpp"

namespace mtdg {

std::pair<std::size_t, std::size_t> EventSequence::day_span(std::size_t d) const {
    if (d >= day_offsets.size()) throw DomainError("day index out of range");
    std::size_t first = day_offsets[d];
    std::size_t last = (d + 1 < day_offsets.size()) ? day_offsets[d + 1] : states.size();
    return {first, last};
}

EventSequence EventSequence::slice_days(std::size_t first_day, std::size_t n) const {
    if (first_day + n > n_days()) throw DomainError("day slice out of range");
    EventSequence out;
    out.space = space;
    std::size_t base = day_offsets[first_day];
    for (std::size_t d = first_day; d < first_day + n; ++d) {
        out.day_offsets.push_back(day_offsets[d] - base);
        if (d < day_labels.size()) out.day_labels.push_back(day_labels[d]);
    }
    auto [lo, hi] = day_span(first_day + n - 1);
    (void)lo;
    out.states.assign(states.begin() + static_cast<std::ptrdiff_t>(base),
                      states.begin() + static_cast<std::ptrdiff_t>(hi));
    return out;
}

EventSequence EventSequence::resample_days(const std::vector<std::size_t>& day_indices) const {
    EventSequence out;
    out.space = space;
    for (std::size_t d : day_indices) {
        auto [first, last] = day_span(d);
        out.day_offsets.push_back(out.states.size());
        out.states.insert(out.states.end(), states.begin() + static_cast<std::ptrdiff_t>(first),
                          states.begin() + static_cast<std::ptrdiff_t>(last));
        if (d < day_labels.size()) out.day_labels.push_back(day_labels[d]);
    }
    return out;
}

void EventSequence::check() const {
    space.check();
    if (states.empty()) throw DomainError("event sequence is empty");
    for (std::size_t t = 0; t < states.size(); ++t) {
        if (states[t] < 1 || states[t] > space.m)
            throw DomainError("state out of range 1..m at index " + std::to_string(t));
    }
    if (day_offsets.empty() || day_offsets.front() != 0)
        throw DomainError("day offsets must start at 0");
    for (std::size_t d = 1; d < day_offsets.size(); ++d) {
        if (day_offsets[d] <= day_offsets[d - 1])
            throw DomainError("day offsets must be strictly increasing");
    }
    if (day_offsets.back() >= states.size())
        throw DomainError("last day offset past the end of the sequence");
}

}  // namespace mtdg
