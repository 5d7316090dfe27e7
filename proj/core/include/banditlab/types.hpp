#pragma once

#include <cstdint>
#include <vector>

namespace banditlab {

// Index into the global action catalog [0, a_max).
using ActionId = std::int32_t;

// One transaction-like round: what the logging side observes before acting.
struct Context {
    double amount = 0.0;  // currency units, >= 0
    std::int32_t country = 0;
    std::int32_t merchant = 0;
    std::int32_t mcc = 0;  // merchant category
    std::int32_t device = 0;
    std::vector<double> extra_numeric;

    bool operator==(const Context&) const = default;
};

// Per-round eligible actions with the provenance of every exclusion. The
// three lists are disjoint and partition the global catalog.
struct ActionSet {
    std::vector<ActionId> eligible;
    std::vector<ActionId> excluded_by_rule;
    std::vector<ActionId> excluded_by_risk;
};

// One unit of logged bandit feedback.
struct LogRecord {
    std::int32_t generation = 0;
    std::int64_t round = 0;
    Context context;
    std::vector<ActionId> eligible;
    ActionId chosen = 0;
    double propensity = 1.0;  // logging policy's probability of `chosen`, (0,1]
    std::int32_t reward = 0;  // binary
    bool was_greedy = false;  // chosen == policy argmax over eligible

    bool operator==(const LogRecord&) const = default;
};

// Throws ValidationError when a record violates its invariants
// (chosen not eligible, propensity outside (0,1], non-binary reward, ...).
void validate_record(const LogRecord& record);

}  // namespace banditlab
