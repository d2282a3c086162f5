#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bpve/construct.hpp"
#include "bpve/survival.hpp"

namespace bpve {

enum class CheckStatus
{
    certified,
    horizon_limited,
    violated,
};

std::string to_string(CheckStatus status);

/// Sum over n of 1 / M_n for a schedule: exact block sums over the built span
/// plus a bound on everything after it.
struct ConditionI
{
    BigInt span_end;
    double partial_sum = 0;
    double growth_contribution = 0;
    double critical_contribution = 0;
    double infinite_tail_bound = 0;
    double total = 0;
    CheckStatus status = CheckStatus::certified;
};

ConditionI condition_i_closed_form(Schedule const& schedule);

/// Closed-form sum of 1 / M_n restricted to n <= horizon.
double condition_i_closed_form_prefix(Schedule const& schedule, BigInt const& horizon);

/// Sum_{n<=horizon} prod_{k<=n} (m p_k)^{-1}, accumulated generation by
/// generation from retention_at.
double condition_i_bruteforce(Schedule const& schedule, std::uint64_t horizon,
                              std::uint64_t budget = 1'000'000);

struct BlockCheck
{
    std::size_t n = 0;
    BigInt r_index;               // u_n - t_n
    std::optional<double> bound;  // r_{u_n - t_n} K_n
    double threshold = 0;         // 2^{-n}
    std::optional<double> exact_survival;
    std::optional<double> exact_relative_error;
    CheckStatus status = CheckStatus::certified;
};

struct ConditionII
{
    std::vector<BlockCheck> blocks;
    bool monotone_evidence = true; // exact survival at u_n nonincreasing in n
    CheckStatus status = CheckStatus::certified;
};

struct ConditionIIOptions
{
    std::uint64_t exact_budget = 1'000'000; // generations of backward composition per block
    SurvivalOptions survival;
};

/// Per-block extinction bound r_{u-t} K < 2^{-n}, with the exact survival
/// probability P(Z_{u_n} > 0) when `base` is given and u_n fits the budget.
/// Throws ConditionViolation on any failed inequality.
ConditionII condition_ii_report(Schedule const& schedule, SurvivalTable const& table,
                                OffspringLaw const* base, ConditionIIOptions const& options = {});

struct VerificationReport
{
    ConditionI condition_i;
    ConditionII condition_ii;
    std::optional<double> bruteforce_sum;  // over the first `bruteforce_horizon` generations
    std::optional<double> closed_form_prefix;
    std::uint64_t bruteforce_horizon = 0;
    bool closed_form_agrees = true;

    bool passed() const;
};

struct VerifyOptions
{
    ConditionIIOptions condition_ii;
    std::uint64_t bruteforce_horizon = 10'000; // clipped to the built span
    double agreement_tolerance = 1e-9;         // relative
};

VerificationReport verify_schedule(OffspringLaw const& base, Schedule const& schedule, SurvivalTable const& table,
                                   VerifyOptions const& options = {});

nlohmann::json to_json(ConditionI const& c);
nlohmann::json to_json(ConditionII const& c);
nlohmann::json to_json(VerificationReport const& report);

/// CSV `block,r_index,bound,threshold,exact_survival,status`.
void write_condition_ii_csv(std::ostream& out, ConditionII const& report);

} // namespace bpve
