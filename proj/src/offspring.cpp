#include "bpve/offspring.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>

#include "bpve/errors.hpp"
#include "law_core.hpp"

namespace bpve {

namespace detail {

Kernel<ExtendedReal> const& LawCore::extended() const
{
    std::call_once(ext_once, [this] {
        switch (kind)
        {
            case LawKind::finite:
                ext = std::make_unique<Kernel<ExtendedReal>>(FiniteKernel<ExtendedReal>(probs));
                break;
            case LawKind::geometric:
                ext = std::make_unique<Kernel<ExtendedReal>>(GeometricKernel<ExtendedReal>(rho));
                break;
            case LawKind::power_tail:
                ext = std::make_unique<Kernel<ExtendedReal>>(
                    PowerTailKernel<ExtendedReal>(alpha, mean_param));
                break;
        }
    });
    return *ext;
}

} // namespace detail

namespace {

constexpr char const* kModule = "offspring";
constexpr std::size_t kTailTableSize = 4096;
constexpr std::uint64_t kCountLimit = std::uint64_t{1} << 62;

std::string fmt_real(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template<class Real>
Certified<Real> base_complement(detail::LawCore const& core, Real const& s)
{
    auto eval = [&](auto const& kernel) { return kernel.complement(s); };
    if constexpr (std::is_same_v<Real, double>)
        return std::visit(eval, core.kernel);
    else
        return std::visit(eval, core.extended());
}

// P(Bin(j, p) = k)
double binomial_mass(std::uint64_t j, double p, std::uint64_t k)
{
    if (k > j)
        return 0;
    boost::math::binomial_distribution<double> dist(static_cast<double>(j), p);
    return boost::math::pdf(dist, static_cast<double>(k));
}

double base_pmf(detail::LawCore const& core, std::uint64_t k)
{
    switch (core.kind)
    {
        case LawKind::finite:
            return k < core.probs.size() ? core.probs[k] : 0.0;
        case LawKind::geometric:
            return (1 - core.rho) * std::pow(core.rho, static_cast<double>(k));
        case LawKind::power_tail:
        {
            auto const& kernel = std::get<detail::PowerTailKernel<double>>(core.kernel);
            if (k == 0)
                return kernel.zero_mass();
            return kernel.scale() * kernel.weight(k);
        }
    }
    return 0;
}

} // namespace

//---------------------------------------------------------------------------//
OffspringLaw OffspringLaw::finite(std::vector<double> probs)
{
    if (probs.empty())
        throw DomainError(kModule, "finite law needs at least one probability");
    for (double q : probs)
        if (!(q >= 0) || !std::isfinite(q))
            throw DomainError(kModule, "finite law has a negative or non-finite probability");
    double const total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1) > 1e-12)
        throw DomainError(kModule, "finite law probabilities sum to " + fmt_real(total));
    while (probs.size() > 1 && probs.back() == 0)
        probs.pop_back();

    auto core = std::make_shared<detail::LawCore>(detail::FiniteKernel<double>(probs));
    core->kind = LawKind::finite;
    core->probs = probs;
    double m = 0;
    for (std::size_t k = 1; k < probs.size(); ++k)
        m += static_cast<double>(k) * probs[k];
    core->mean = m;

    core->cdf.resize(probs.size());
    std::partial_sum(probs.begin(), probs.end(), core->cdf.begin());
    return OffspringLaw(std::move(core), 1.0);
}

OffspringLaw OffspringLaw::power_tail(double alpha, double mean)
{
    if (!(alpha > 0 && alpha < 1))
        throw DomainError(kModule, "power tail needs alpha in (0,1), got " + fmt_real(alpha));
    if (!(mean > 0) || !std::isfinite(mean))
        throw DomainError(kModule, "power tail needs a positive mean, got " + fmt_real(mean));

    detail::PowerTailKernel<double> kernel(alpha, mean);
    double q0 = kernel.zero_mass();
    if (q0 < 0)
    {
        if (q0 < -1e-14)
        {
            double const max_mean = kernel.zeta_mean().value / kernel.zeta_mass().value;
            throw DomainError(kModule, "power tail mean " + fmt_real(mean) +
                                           " infeasible (q_0 < 0); maximum feasible mean is " +
                                           fmt_real(max_mean));
        }
    }

    auto core = std::make_shared<detail::LawCore>(std::move(kernel));
    core->kind = LawKind::power_tail;
    core->alpha = alpha;
    core->mean_param = mean;
    core->mean = mean;

    // P(X > k) accumulated downward from a certified anchor.
    auto const& pk = std::get<detail::PowerTailKernel<double>>(core->kernel);
    core->tail.resize(kTailTableSize + 1);
    core->tail[kTailTableSize] = pk.tail_mass(kTailTableSize).value;
    for (std::size_t k = kTailTableSize; k > 0; --k)
        core->tail[k - 1] = core->tail[k] + pk.scale() * pk.weight(k);
    return OffspringLaw(std::move(core), 1.0);
}

OffspringLaw OffspringLaw::geometric(double mean)
{
    if (!(mean > 0) || !std::isfinite(mean))
        throw DomainError(kModule, "geometric law needs a positive mean, got " + fmt_real(mean));
    double const rho = mean / (1 + mean);
    auto core = std::make_shared<detail::LawCore>(detail::GeometricKernel<double>(rho));
    core->kind = LawKind::geometric;
    core->mean_param = mean;
    core->rho = rho;
    core->mean = mean;
    return OffspringLaw(std::move(core), 1.0);
}

LawKind OffspringLaw::kind() const noexcept
{
    return core_->kind;
}

OffspringLaw OffspringLaw::base() const
{
    return OffspringLaw(core_, 1.0);
}

std::span<double const> OffspringLaw::probabilities() const
{
    if (core_->kind != LawKind::finite)
        throw DomainError(kModule, "probabilities() is only defined for finite laws");
    return core_->probs;
}

double OffspringLaw::alpha() const
{
    if (core_->kind != LawKind::power_tail)
        throw DomainError(kModule, "alpha() is only defined for power-tail laws");
    return core_->alpha;
}

double OffspringLaw::mean_parameter() const
{
    if (core_->kind == LawKind::finite)
        throw DomainError(kModule, "mean_parameter() is not defined for finite laws");
    return core_->mean_param;
}

std::string OffspringLaw::spec() const
{
    std::string out;
    switch (core_->kind)
    {
        case LawKind::finite:
            out = "finite:";
            for (std::size_t k = 0; k < core_->probs.size(); ++k)
            {
                if (k)
                    out += ',';
                out += fmt_real(core_->probs[k]);
            }
            break;
        case LawKind::power_tail:
            out = "powertail:alpha=" + fmt_real(core_->alpha) + ",mean=" + fmt_real(core_->mean_param);
            break;
        case LawKind::geometric:
            out = "geometric:mean=" + fmt_real(core_->mean_param);
            break;
    }
    if (thinned())
        out += "|thin=" + fmt_real(retention_);
    return out;
}

//---------------------------------------------------------------------------//
double pmf(OffspringLaw const& law, std::uint64_t k)
{
    auto const& core = law.core();
    double const p = law.retention();
    if (p == 1.0)
        return base_pmf(core, k);

    // Binomial mixture over the base count j >= k.
    if (core.kind == LawKind::finite)
    {
        double acc = 0;
        for (std::uint64_t j = k; j < core.probs.size(); ++j)
            acc += core.probs[j] * binomial_mass(j, p, k);
        return acc;
    }
    double acc = 0;
    auto const settle = static_cast<std::uint64_t>(2.0 * static_cast<double>(k + 1) / p) + 64;
    for (std::uint64_t j = k; j < std::uint64_t{1} << 40; ++j)
    {
        double const term = base_pmf(core, j) * binomial_mass(j, p, k);
        acc += term;
        if (j > settle && term < 1e-18 * acc)
            break;
    }
    return acc;
}

template<class Real>
Certified<Real> pgf_complement_certified(OffspringLaw const& law, Real const& s)
{
    if (s < 0 || s > 1)
        throw DomainError(kModule, "pgf_complement argument outside [0,1]");
    return base_complement<Real>(law.core(), Real(s * Real(law.retention())));
}

template Certified<double> pgf_complement_certified<double>(OffspringLaw const&, double const&);
template Certified<ExtendedReal>
pgf_complement_certified<ExtendedReal>(OffspringLaw const&, ExtendedReal const&);

double pgf_complement(OffspringLaw const& law, double s)
{
    auto const r = pgf_complement_certified(law, s);
    if (s >= 1e-12 && r.error_bound > 1e-10 * r.value)
        throw AccuracyError(kModule, "pgf_complement relative accuracy 1e-10 not reached",
                            r.error_bound / r.value);
    return r.value;
}

Certified<double> pgf_certified(OffspringLaw const& law, double s)
{
    if (!(s >= 0 && s <= 1))
        throw DomainError(kModule, "pgf argument outside [0,1]");
    auto const& core = law.core();
    double const p = law.retention();
    double const eps = std::numeric_limits<double>::epsilon();
    switch (core.kind)
    {
        case LawKind::finite:
        {
            double const x = 1 - p * (1 - s);
            double const v = std::get<detail::FiniteKernel<double>>(core.kernel).pgf(x);
            return {v, (static_cast<double>(core.probs.size()) + 4) * eps};
        }
        case LawKind::geometric:
        {
            double const x = 1 - p * (1 - s);
            double const v = std::get<detail::GeometricKernel<double>>(core.kernel).pgf(x);
            return {v, 8 * eps};
        }
        case LawKind::power_tail:
        {
            auto const h = base_complement<double>(core, p * (1 - s));
            return {1 - h.value, h.error_bound + 2 * eps};
        }
    }
    return {0, 0};
}

double pgf(OffspringLaw const& law, double s, double tolerance)
{
    auto const r = pgf_certified(law, s);
    if (r.error_bound > tolerance)
        throw AccuracyError(kModule, "pgf tolerance not reached", r.error_bound);
    return std::clamp(r.value, 0.0, 1.0);
}

double mean(OffspringLaw const& law)
{
    return law.retention() * law.core().mean;
}

SecondMomentClass second_moment_class(OffspringLaw const& law)
{
    auto const& core = law.core();
    double const p = law.retention();
    double second_factorial = 0; // f''(1)
    switch (core.kind)
    {
        case LawKind::power_tail:
            return {false, std::numeric_limits<double>::infinity()};
        case LawKind::finite:
            for (std::size_t k = 2; k < core.probs.size(); ++k)
                second_factorial += static_cast<double>(k * (k - 1)) * core.probs[k];
            break;
        case LawKind::geometric:
            second_factorial = 2 * core.mean * core.mean;
            break;
    }
    double const m = p * core.mean;
    double const var = p * p * second_factorial + m - m * m;
    return {true, std::max(var, 0.0)};
}

OffspringLaw thin(OffspringLaw const& law, double p)
{
    if (!(p > 0 && p <= 1))
        throw DomainError(kModule, "thinning probability must lie in (0,1], got " + fmt_real(p));
    return OffspringLaw(law.core_, law.retention_ * p);
}

OffspringLaw criticalize(OffspringLaw const& law)
{
    double const m = mean(law);
    if (!(m > 1))
        throw DomainError(kModule, "criticalize needs a supercritical law, mean is " + fmt_real(m));
    return thin(law, 1 / m);
}

//---------------------------------------------------------------------------//
double uniform_fine(Rng& rng)
{
    // Grid value on (0,1]; if it lands in (0, 2^-20] it is uniform there, so
    // redraw and rescale to keep full relative resolution.
    double scale = 1.0;
    double u = static_cast<double>((rng() >> 11) + 1) * 0x1p-53;
    while (u <= 0x1p-20 && scale > 0x1p-900)
    {
        scale *= 0x1p-20;
        u = static_cast<double>((rng() >> 11) + 1) * 0x1p-53;
    }
    return u * scale;
}

namespace {

std::uint64_t sample_power_tail(detail::LawCore const& core, Rng& rng)
{
    double const u = uniform_fine(rng);
    auto const& tail = core.tail;
    // X = least k with P(X > k) < u.
    auto it = std::partition_point(tail.begin(), tail.end(), [u](double t) { return t >= u; });
    if (it != tail.end())
        return static_cast<std::uint64_t>(it - tail.begin());

    auto const& kernel = std::get<detail::PowerTailKernel<double>>(core.kernel);
    std::uint64_t lo = tail.size() - 1; // P(X > lo) >= u
    std::uint64_t hi = 2 * lo;
    while (kernel.tail_mass(hi).value >= u)
    {
        lo = hi;
        if (hi >= kCountLimit)
            return kCountLimit;
        hi *= 2;
    }
    while (hi - lo > 1)
    {
        std::uint64_t const mid = lo + (hi - lo) / 2;
        if (kernel.tail_mass(mid).value >= u)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

std::uint64_t sample_base(detail::LawCore const& core, Rng& rng)
{
    switch (core.kind)
    {
        case LawKind::finite:
        {
            double const u = static_cast<double>(rng() >> 11) * 0x1p-53;
            auto it = std::upper_bound(core.cdf.begin(), core.cdf.end(), u);
            auto k = static_cast<std::uint64_t>(it - core.cdf.begin());
            // Rounding in the last cumulative value: fall back to the top atom.
            return std::min<std::uint64_t>(k, core.probs.size() - 1);
        }
        case LawKind::geometric:
        {
            std::geometric_distribution<std::uint64_t> dist(1 - core.rho);
            return dist(rng);
        }
        case LawKind::power_tail:
            return sample_power_tail(core, rng);
    }
    return 0;
}

std::uint64_t retain(std::uint64_t count, double p, Rng& rng)
{
    if (p >= 1.0 || count == 0)
        return count;
    if (p <= 0.0)
        return 0;
    std::binomial_distribution<std::uint64_t> dist(count, p);
    return dist(rng);
}

} // namespace

std::uint64_t sample(OffspringLaw const& law, Rng& rng)
{
    return retain(sample_base(law.core(), rng), law.retention(), rng);
}

std::uint64_t sample_total(OffspringLaw const& law, std::uint64_t parents, Rng& rng)
{
    auto const& core = law.core();
    if (parents == 0)
        return 0;
    std::uint64_t total = 0;
    if (core.kind == LawKind::geometric)
    {
        std::negative_binomial_distribution<std::uint64_t> dist(parents, 1 - core.rho);
        total = dist(rng);
    }
    else if (core.kind == LawKind::finite && core.probs.back() == 1.0)
    {
        auto const each = static_cast<std::uint64_t>(core.probs.size() - 1);
        if (each && parents > kCountLimit / each)
            throw OutOfRange(kModule, "offspring total exceeds 2^62");
        total = parents * each;
    }
    else
    {
        for (std::uint64_t i = 0; i < parents; ++i)
        {
            total += sample_base(core, rng);
            if (total > kCountLimit)
                throw OutOfRange(kModule, "offspring total exceeds 2^62");
        }
    }
    return retain(total, law.retention(), rng);
}

} // namespace bpve
