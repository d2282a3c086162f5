#include "bpve/survival.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "bpve/errors.hpp"

namespace bpve {

namespace {

constexpr char const* kModule = "survival";
constexpr double kConversion = 2 * std::numeric_limits<double>::epsilon();

template<class Real>
double relative(Certified<Real> const& c)
{
    if (c.value == 0)
        return c.error_bound == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return static_cast<double>(Real(c.error_bound / c.value));
}

// Runs the critical recursion at scalar Real. The complement h is concave with
// h(s) <= s for a critical law, so the elasticity s h'(s) / h(s) is at most 1
// and relative errors add up step by step.
template<class Real>
void critical_recursion(OffspringLaw const& g, std::size_t horizon, std::vector<double>& r,
                        std::vector<double>& err)
{
    r.resize(horizon);
    err.resize(horizon);
    Real s = 1;
    double acc = 0;
    for (std::size_t n = 0; n < horizon; ++n)
    {
        auto const c = pgf_complement_certified<Real>(g, s);
        Real next = c.value;
        if (next > s)
            next = s;
        acc += relative(c);
        s = next;
        r[n] = static_cast<double>(s);
        err[n] = std::is_same_v<Real, double> ? acc : acc + kConversion;
    }
}

template<class Real>
ExactSurvival backward(OffspringLaw const& f, std::span<double const> retentions)
{
    Real s = 1;
    double acc = 0;
    for (std::size_t i = retentions.size(); i > 0; --i)
    {
        auto const c = pgf_complement_certified<Real>(thin(f, retentions[i - 1]), s);
        acc += relative(c);
        s = c.value;
    }
    ExactSurvival out;
    out.value = static_cast<double>(s);
    out.relative_error = std::is_same_v<Real, double> ? acc : acc + kConversion;
    out.precision = std::is_same_v<Real, double> ? Precision::standard : Precision::extended;
    return out;
}

std::vector<std::size_t> checkpoints(std::size_t horizon)
{
    std::vector<std::size_t> out;
    for (std::size_t n = 1; n <= horizon; n *= 10)
    {
        out.push_back(n);
        if (n > std::numeric_limits<std::size_t>::max() / 10)
            break;
    }
    if (out.empty() || out.back() != horizon)
        out.push_back(horizon);
    return out;
}

bool power_of_ten(std::size_t n)
{
    while (n >= 10 && n % 10 == 0)
        n /= 10;
    return n == 1;
}

std::string fmt(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

//---------------------------------------------------------------------------//
SurvivalTable::SurvivalTable(std::string law_id, std::vector<double> r, std::vector<double> relative_error,
                             Precision precision, double tolerance)
    : law_id_(std::move(law_id)), r_(std::move(r)), err_(std::move(relative_error)), precision_(precision)
{
    if (err_.size() != r_.size())
        throw DomainError(kModule, "survival table error vector has the wrong length");
    for (std::size_t i = 0; i < err_.size(); ++i)
        if (err_[i] > tolerance)
            flagged_.push_back(i + 1);
}

SurvivalTable SurvivalTable::from_values(std::vector<double> r, std::string law_id)
{
    double prev = 1.0;
    for (double v : r)
    {
        if (!(v >= 0 && v <= 1))
            throw DomainError(kModule, "survival value outside [0,1]");
        if (v > prev)
            throw DomainError(kModule, "survival values must be nonincreasing");
        prev = v;
    }
    std::vector<double> err(r.size(), 0.0);
    return SurvivalTable(std::move(law_id), std::move(r), std::move(err), Precision::standard, 1.0);
}

double SurvivalTable::at(std::size_t n) const
{
    if (n == 0)
        return 1.0;
    if (n > r_.size())
        throw OutOfRange(kModule, "survival index " + std::to_string(n) + " beyond horizon " +
                                      std::to_string(r_.size()));
    return r_[n - 1];
}

double SurvivalTable::achieved_tolerance() const noexcept
{
    return err_.empty() ? 0.0 : *std::max_element(err_.begin(), err_.end());
}

//---------------------------------------------------------------------------//
SurvivalTable survival_table(OffspringLaw const& g, std::size_t horizon, SurvivalOptions const& options)
{
    if (horizon == 0)
        throw DomainError(kModule, "survival horizon must be positive");
    double const m = mean(g);
    if (std::abs(m - 1) > 1e-9)
        throw DomainError(kModule, "survival table needs a critical law, mean is " + fmt(m));

    std::vector<double> r;
    std::vector<double> err;
    Precision precision = Precision::standard;
    if (!options.force_extended)
        critical_recursion<double>(g, horizon, r, err);
    bool const short_of_target =
        options.force_extended ||
        std::any_of(err.begin(), err.end(), [&](double e) { return e > options.tolerance; });
    if (short_of_target && (options.allow_extended || options.force_extended))
    {
        critical_recursion<ExtendedReal>(g, horizon, r, err);
        precision = Precision::extended;
    }
    return SurvivalTable(g.spec(), std::move(r), std::move(err), precision, options.tolerance);
}

ExactSurvival bpve_survival_exact(OffspringLaw const& f, std::span<double const> retentions,
                                  SurvivalOptions const& options)
{
    for (double p : retentions)
        if (!(p > 0 && p <= 1))
            throw DomainError(kModule, "retention probabilities must lie in (0,1]");

    ExactSurvival out;
    if (!options.force_extended)
        out = backward<double>(f, retentions);
    if (options.force_extended ||
        (out.relative_error > options.tolerance && options.allow_extended))
        out = backward<ExtendedReal>(f, retentions);
    out.flagged = out.relative_error > options.tolerance;
    return out;
}

std::string to_string(KknsVerdict verdict)
{
    switch (verdict)
    {
        case KknsVerdict::converging:
            return "converging";
        case KknsVerdict::decaying:
            return "decaying";
        case KknsVerdict::inconclusive:
            return "inconclusive";
    }
    return "inconclusive";
}

KknsDiagnostic kkns_diagnostic(SurvivalTable const& table, SecondMomentClass const& moment,
                               KknsThresholds const& thresholds)
{
    KknsDiagnostic out;
    for (std::size_t n : checkpoints(table.horizon()))
        out.checkpoints.push_back({n, static_cast<double>(n) * table.at(n)});
    out.limit_estimate = out.checkpoints.back().n_times_r;

    auto const& cps = out.checkpoints;
    if (moment.finite)
    {
        if (!(moment.variance > 0))
            return out; // degenerate: no limit law
        double const expected = 2 / moment.variance;
        out.expected_limit = expected;
        if (cps.back().n < thresholds.min_n)
            return out;
        double const gap = std::abs(cps.back().n_times_r - expected);
        bool approaching = true;
        double prev = std::numeric_limits<double>::infinity();
        for (auto const& cp : cps)
        {
            if (cp.n < 100)
                continue;
            double const d = std::abs(cp.n_times_r - expected);
            if (d > prev)
                approaching = false;
            prev = d;
        }
        if (approaching && gap <= thresholds.converge_relative * expected)
            out.verdict = KknsVerdict::converging;
        return out;
    }

    out.expected_limit = 0.0;
    // Compare the top power-of-ten checkpoint with the one two decades below.
    for (auto hi = cps.rbegin(); hi != cps.rend(); ++hi)
    {
        if (!power_of_ten(hi->n) || hi->n < thresholds.min_n)
            continue;
        auto lo = std::find_if(cps.begin(), cps.end(),
                               [&](KknsCheckpoint const& c) { return c.n * 100 == hi->n; });
        if (lo == cps.end() || lo->n_times_r <= 0)
            break;
        if (hi->n_times_r < thresholds.decay_ratio * lo->n_times_r)
            out.verdict = KknsVerdict::decaying;
        break;
    }
    return out;
}

void write_survival_csv(std::ostream& out, SurvivalTable const& table, bool per_n)
{
    out << "n,r_n,n_times_r_n\n";
    auto row = [&](std::size_t n) {
        double const r = table.at(n);
        out << n << ',' << fmt(r) << ',' << fmt(static_cast<double>(n) * r) << '\n';
    };
    if (per_n)
    {
        for (std::size_t n = 1; n <= table.horizon(); ++n)
            row(n);
    }
    else
    {
        for (std::size_t n : checkpoints(table.horizon()))
            row(n);
    }
}

} // namespace bpve
