#include "bpve/verify.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "bpve/errors.hpp"

namespace bpve {

namespace {

constexpr char const* kModule = "verify";

std::string fmt(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// sum_{j=1}^{G} m^{-j}
ExtendedReal geometric_head(double m, BigInt const& G)
{
    ExtendedReal const mm(m);
    ExtendedReal const tail = boost::multiprecision::exp(-ExtendedReal(G) * boost::multiprecision::log(mm));
    return (1 - tail) / (mm - 1);
}

ExtendedReal block_term(BlockRecord const& b, BigInt const& length)
{
    return ExtendedReal(length) * boost::multiprecision::exp(-b.log_K);
}

} // namespace

std::string to_string(CheckStatus status)
{
    switch (status)
    {
        case CheckStatus::certified:
            return "certified";
        case CheckStatus::horizon_limited:
            return "horizon-limited";
        case CheckStatus::violated:
            return "violated";
    }
    return "violated";
}

//---------------------------------------------------------------------------//
ConditionI condition_i_closed_form(Schedule const& schedule)
{
    double const m = schedule.mean();
    if (!(m > 1))
        throw DomainError(kModule, "condition (i) needs m > 1");
    ConditionI out;
    out.span_end = schedule.span_end();

    BigInt const G = schedule.growth_positions_through(schedule.span_end());
    ExtendedReal const growth = geometric_head(m, G);
    ExtendedReal critical = 0;
    for (auto const& b : schedule.blocks())
        critical += block_term(b, b.u - b.t);

    out.growth_contribution = static_cast<double>(growth);
    out.critical_contribution = static_cast<double>(critical);
    out.partial_sum = static_cast<double>(growth + critical);

    // Unbuilt growth positions: sum_{j>G} m^{-j}. Unbuilt blocks n > N:
    // (u_n - t_n) / K_n < 2^{-n} + 1/K_n <= 2^{-n} + m^{-n}.
    ExtendedReal const mm(m);
    ExtendedReal const logm = boost::multiprecision::log(mm);
    auto const N = static_cast<long>(schedule.built_blocks());
    ExtendedReal const growth_rest = boost::multiprecision::exp(-ExtendedReal(G) * logm) / (mm - 1);
    ExtendedReal const block_rest =
        boost::multiprecision::pow(ExtendedReal(2), -N) + boost::multiprecision::exp(-ExtendedReal(N) * logm) / (mm - 1);
    out.infinite_tail_bound = static_cast<double>(growth_rest + block_rest);
    out.total = out.partial_sum + out.infinite_tail_bound;
    out.status = std::isfinite(out.total) ? CheckStatus::certified : CheckStatus::violated;
    return out;
}

double condition_i_closed_form_prefix(Schedule const& schedule, BigInt const& horizon)
{
    if (horizon < 0 || horizon > schedule.span_end())
        throw OutOfRange(kModule, "prefix horizon outside the built span");
    BigInt const G = schedule.growth_positions_through(horizon);
    ExtendedReal sum = geometric_head(schedule.mean(), G);
    for (auto const& b : schedule.blocks())
    {
        if (b.t > horizon)
            break;
        BigInt const stop = std::min<BigInt>(horizon + 1, b.u);
        sum += block_term(b, stop - b.t);
    }
    return static_cast<double>(sum);
}

double condition_i_bruteforce(Schedule const& schedule, std::uint64_t horizon, std::uint64_t budget)
{
    if (horizon > budget)
        throw BudgetExceeded(kModule, "brute-force horizon " + std::to_string(horizon) + " exceeds budget " +
                                          std::to_string(budget));
    if (BigInt(horizon) > schedule.span_end())
        throw OutOfRange(kModule, "brute-force horizon beyond the built span");
    double const m = schedule.mean();
    long double log_mean = 0;
    long double sum = 0;
    long double carry = 0;
    for (std::uint64_t n = 1; n <= horizon; ++n)
    {
        double const p = retention_at(schedule, BigInt(n));
        log_mean += std::log(static_cast<long double>(m) * p);
        long double const term = std::exp(-log_mean);
        long double const t = sum + term;
        carry += (sum - t) + term;
        sum = t;
    }
    return static_cast<double>(sum + carry);
}

//---------------------------------------------------------------------------//
ConditionII condition_ii_report(Schedule const& schedule, SurvivalTable const& table, OffspringLaw const* base,
                                ConditionIIOptions const& options)
{
    ConditionII out;
    std::optional<double> previous_exact;
    for (auto const& b : schedule.blocks())
    {
        BlockCheck check;
        check.n = b.index;
        check.r_index = b.u - b.t;
        check.threshold = std::ldexp(1.0, -static_cast<int>(b.index));

        if (check.r_index > BigInt(table.horizon()))
        {
            check.status = CheckStatus::horizon_limited;
        }
        else
        {
            double const r = table.at(check.r_index.convert_to<std::size_t>());
            ExtendedReal const bound = ExtendedReal(r) * boost::multiprecision::exp(b.log_K);
            check.bound = static_cast<double>(bound);
            check.status = bound < ExtendedReal(check.threshold) ? CheckStatus::certified : CheckStatus::violated;
        }

        if (base && b.u <= BigInt(options.exact_budget))
        {
            auto const span = b.u.convert_to<std::uint64_t>();
            std::vector<double> retentions(span);
            for (std::uint64_t n = 1; n <= span; ++n)
                retentions[n - 1] = retention_at(schedule, BigInt(n));
            auto const exact = bpve_survival_exact(*base, retentions, options.survival);
            check.exact_survival = exact.value;
            check.exact_relative_error = exact.relative_error;
            if (check.bound && exact.value * (1 - exact.relative_error) > *check.bound)
                check.status = CheckStatus::violated;
            if (previous_exact && exact.value > *previous_exact * (1 + exact.relative_error))
                out.monotone_evidence = false;
            previous_exact = exact.value;
        }

        if (check.status == CheckStatus::violated)
        {
            std::ostringstream dump;
            dump << "block " << b.index << " violates the extinction bound: L=" << b.L << " t=" << b.t
                 << " u=" << b.u << " growth_gens=" << b.growth_gens << " log10_K=" << fmt(b.log10_K())
                 << " r_index=" << check.r_index;
            if (check.r_index <= BigInt(table.horizon()))
                dump << " r=" << fmt(table.at(check.r_index.convert_to<std::size_t>()));
            if (check.bound)
                dump << " bound=" << fmt(*check.bound);
            dump << " threshold=" << fmt(check.threshold);
            if (check.exact_survival)
                dump << " exact_survival=" << fmt(*check.exact_survival);
            throw ConditionViolation(dump.str());
        }
        if (check.status == CheckStatus::horizon_limited && out.status == CheckStatus::certified)
            out.status = CheckStatus::horizon_limited;
        out.blocks.push_back(std::move(check));
    }
    return out;
}

bool VerificationReport::passed() const
{
    return condition_i.status == CheckStatus::certified && condition_ii.status == CheckStatus::certified &&
           condition_ii.monotone_evidence && closed_form_agrees;
}

VerificationReport verify_schedule(OffspringLaw const& base, Schedule const& schedule, SurvivalTable const& table,
                                   VerifyOptions const& options)
{
    VerificationReport report;
    report.condition_i = condition_i_closed_form(schedule);

    BigInt horizon = std::min<BigInt>(BigInt(options.bruteforce_horizon), schedule.span_end());
    report.bruteforce_horizon = horizon.convert_to<std::uint64_t>();
    double const brute = condition_i_bruteforce(schedule, report.bruteforce_horizon,
                                                std::max<std::uint64_t>(report.bruteforce_horizon, 1));
    double const closed = condition_i_closed_form_prefix(schedule, horizon);
    report.bruteforce_sum = brute;
    report.closed_form_prefix = closed;
    report.closed_form_agrees = std::abs(brute - closed) <= options.agreement_tolerance * std::abs(closed);

    report.condition_ii = condition_ii_report(schedule, table, &base, options.condition_ii);
    return report;
}

//---------------------------------------------------------------------------//
nlohmann::json to_json(ConditionI const& c)
{
    return {
        {"span_end", c.span_end.str()},
        {"partial_sum", c.partial_sum},
        {"growth_contribution", c.growth_contribution},
        {"critical_contribution", c.critical_contribution},
        {"infinite_tail_bound", c.infinite_tail_bound},
        {"total", c.total},
        {"status", to_string(c.status)},
    };
}

nlohmann::json to_json(ConditionII const& c)
{
    nlohmann::json blocks = nlohmann::json::array();
    for (auto const& b : c.blocks)
    {
        nlohmann::json row = {
            {"n", b.n},
            {"r_index", b.r_index.str()},
            {"bound", b.bound ? nlohmann::json(*b.bound) : nlohmann::json(nullptr)},
            {"threshold", b.threshold},
            {"exact_survival", b.exact_survival ? nlohmann::json(*b.exact_survival) : nlohmann::json(nullptr)},
            {"status", to_string(b.status)},
        };
        blocks.push_back(std::move(row));
    }
    return {{"blocks", blocks}, {"monotone_evidence", c.monotone_evidence}, {"status", to_string(c.status)}};
}

nlohmann::json to_json(VerificationReport const& report)
{
    nlohmann::json out = {
        {"condition_i", to_json(report.condition_i)},
        {"condition_ii", to_json(report.condition_ii)},
        {"bruteforce_horizon", report.bruteforce_horizon},
        {"closed_form_agrees", report.closed_form_agrees},
        {"passed", report.passed()},
    };
    if (report.bruteforce_sum)
        out["bruteforce_sum"] = *report.bruteforce_sum;
    if (report.closed_form_prefix)
        out["closed_form_prefix"] = *report.closed_form_prefix;
    return out;
}

void write_condition_ii_csv(std::ostream& out, ConditionII const& report)
{
    out << "block,r_index,bound,threshold,exact_survival,status\n";
    for (auto const& b : report.blocks)
    {
        out << b.n << ',' << b.r_index.str() << ',' << (b.bound ? fmt(*b.bound) : "") << ',' << fmt(b.threshold)
            << ',' << (b.exact_survival ? fmt(*b.exact_survival) : "") << ',' << to_string(b.status) << '\n';
    }
}

} // namespace bpve
