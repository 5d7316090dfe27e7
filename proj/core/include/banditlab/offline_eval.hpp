#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "banditlab/features.hpp"
#include "banditlab/oracle.hpp"
#include "banditlab/policy.hpp"
#include "banditlab/types.hpp"

namespace banditlab {

struct OffPolicyEstimate {
    double value = 0.0;
    std::string estimator;        // "ips" | "snips"
    std::optional<double> clip;   // M, absent = unclipped
    std::int64_t n = 0;
    double effective_sample_size = 0.0;  // (sum w)^2 / sum w^2
    double max_weight = 0.0;
    double mean_weight = 0.0;
};

// The policy whose value is being estimated. The target distribution is
// always computed over the LOGGED eligible set of each record.
struct TargetPolicy {
    PolicyConfig policy;
    const Oracle* oracle = nullptr;
    const FeatureSchema* schema = nullptr;
};

// (1/n) sum_i r_i * min(pi(a_i|x_i)/p_i, M).
OffPolicyEstimate ips_value(std::span<const LogRecord> logs,
                            const TargetPolicy& target,
                            std::optional<double> clip = std::nullopt);

// sum_i r_i w_i / sum_i w_i with the same clipped weights; invariant to a
// constant rescaling of the logged propensities when unclipped.
OffPolicyEstimate snips_value(std::span<const LogRecord> logs,
                              const TargetPolicy& target,
                              std::optional<double> clip = std::nullopt);

}  // namespace banditlab
