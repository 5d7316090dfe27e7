#include "banditlab/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "banditlab/errors.hpp"

namespace banditlab {

void validate_record(const LogRecord& record) {
    if (record.generation < 0) {
        throw ValidationError("generation must be >= 0");
    }
    if (record.round < 0) {
        throw ValidationError("round must be >= 0");
    }
    if (!(record.context.amount >= 0.0)) {
        throw ValidationError("amount must be >= 0");
    }
    if (record.eligible.empty()) {
        throw ValidationError("eligible set must be non-empty");
    }
    if (std::find(record.eligible.begin(), record.eligible.end(),
                  record.chosen) == record.eligible.end()) {
        throw ValidationError("chosen action " + std::to_string(record.chosen) +
                              " not in eligible set");
    }
    if (!(record.propensity > 0.0) || record.propensity > 1.0 ||
        !std::isfinite(record.propensity)) {
        throw ValidationError("propensity must lie in (0,1], got " +
                              std::to_string(record.propensity));
    }
    if (record.reward != 0 && record.reward != 1) {
        throw ValidationError("reward must be binary, got " +
                              std::to_string(record.reward));
    }
}

}  // namespace banditlab
