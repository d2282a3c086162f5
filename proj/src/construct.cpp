#include "bpve/construct.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <ostream>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "bpve/errors.hpp"

namespace bpve {

namespace {

constexpr char const* kModule = "construct";

using Float100 = boost::multiprecision::cpp_bin_float_100;

// Relative guard band for decisions taken in 100-digit floating point; inside
// it the exact dyadic route decides.
Float100 const kGuard("1e-85");

// The mean as the exact dyadic rational odd * 2^shift it is stored as.
class ExactMean
{
  public:
    explicit ExactMean(double m) : log_(boost::multiprecision::log(Float100(m)))
    {
        if (!(m > 0) || !std::isfinite(m))
            throw DomainError(kModule, "mean must be positive and finite");
        int exp = 0;
        double const frac = std::frexp(m, &exp);
        auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
        long shift = exp - 53;
        while (mant % 2 == 0)
        {
            mant /= 2;
            ++shift;
        }
        odd_ = mant;
        shift_ = shift;
    }

    Float100 const& log_m() const noexcept { return log_; }

    /// Sign of m^E - 2^s T (T > 0).
    int compare(BigInt const& E, long s, BigInt const& T) const
    {
        using boost::multiprecision::abs;
        using boost::multiprecision::log;
        Float100 const ln2 = boost::math::constants::ln_two<Float100>();
        Float100 const lhs = Float100(E) * log_;
        Float100 const rhs = Float100(s) * ln2 + log(Float100(T));
        Float100 const diff = lhs - rhs;
        Float100 const scale = abs(lhs) + abs(rhs) + 1;
        if (abs(diff) > kGuard * scale)
            return diff > 0 ? 1 : -1;

        BigInt const power = exact_odd_power(E);
        BigInt const net = BigInt(shift_) * E - s;
        BigInt lhs_int = power;
        BigInt rhs_int = T;
        if (net >= 0)
            lhs_int <<= to_shift(net);
        else
            rhs_int <<= to_shift(BigInt(-net));
        return lhs_int > rhs_int ? 1 : (lhs_int < rhs_int ? -1 : 0);
    }

    /// ceil(m^E / 2^n).
    BigInt ceil_over_pow2(BigInt const& E, long n) const
    {
        using boost::multiprecision::abs;
        using boost::multiprecision::exp;
        using boost::multiprecision::floor;
        Float100 const ln2 = boost::math::constants::ln_two<Float100>();
        Float100 const y_log = Float100(E) * log_ - Float100(n) * ln2;
        if (y_log < 150)
        {
            Float100 const y = exp(y_log);
            Float100 const fl = floor(y);
            Float100 const dist = std::min<Float100>(y - fl, fl + 1 - y);
            Float100 const tol = kGuard * (1 + abs(y_log)) * (y > 1 ? y : Float100(1));
            if (dist > tol)
                return static_cast<BigInt>(fl) + 1;
        }
        BigInt const power = exact_odd_power(E);
        BigInt const net = BigInt(shift_) * E - n;
        if (net >= 0)
            return power << to_shift(net);
        auto const d = to_shift(BigInt(-net));
        BigInt q = power >> d;
        if ((q << d) != power)
            q += 1;
        return q;
    }

    /// Least E >= E_min with m^E > 2^s T. Requires m > 1.
    BigInt least_exponent_above(BigInt const& E_min, long s, BigInt const& T) const
    {
        using boost::multiprecision::floor;
        using boost::multiprecision::log;
        Float100 const ln2 = boost::math::constants::ln_two<Float100>();
        Float100 const x = (log(Float100(T)) + Float100(s) * ln2) / log_;
        BigInt E = static_cast<BigInt>(floor(x)) + 1;
        if (E < E_min)
            E = E_min;
        while (E > E_min && compare(E - 1, s, T) > 0)
            --E;
        while (compare(E, s, T) <= 0)
            ++E;
        return E;
    }

  private:
    static unsigned long long to_shift(BigInt const& v)
    {
        if (v > BigInt(ULLONG_MAX / 2))
            throw OutOfRange(kModule, "exact power shift too large");
        return v.convert_to<unsigned long long>();
    }

    BigInt exact_odd_power(BigInt const& E) const
    {
        if (E < 0 || E > BigInt(UINT_MAX))
            throw OutOfRange(kModule, "exponent outside the exact range");
        return boost::multiprecision::pow(BigInt(odd_), E.convert_to<unsigned>());
    }

    std::uint64_t odd_ = 1;
    long shift_ = 0;
    Float100 log_;
};

ExtendedReal log_power(double m, BigInt const& E)
{
    return ExtendedReal(E) * boost::multiprecision::log(ExtendedReal(m));
}

} // namespace

//---------------------------------------------------------------------------//
double BlockRecord::log10_K() const
{
    return static_cast<double>(log_K / boost::multiprecision::log(ExtendedReal(10)));
}

double MeanValue::value() const
{
    return static_cast<double>(boost::multiprecision::exp(log_value));
}

Schedule::Schedule(double m, std::vector<BlockRecord> blocks, BigInt span_end, std::string law_id)
    : m_(m), blocks_(std::move(blocks)), span_end_(std::move(span_end)), law_id_(std::move(law_id))
{
    if (!(m > 0) || !std::isfinite(m))
        throw DomainError(kModule, "schedule mean must be positive");
    BigInt prev = 0;
    BigInt critical = 0;
    for (auto const& b : blocks_)
    {
        if (!(b.t > prev && b.u > b.t))
            throw DomainError(kModule, "blocks must satisfy 0 = u_0 < t_1 < u_1 < t_2 < ...");
        critical_prefix_.push_back(critical);
        critical += b.u - b.t;
        prev = b.u;
    }
    if (span_end_ < prev)
        throw DomainError(kModule, "schedule span ends before its last block");
}

BigInt Schedule::growth_positions_through(BigInt const& n) const
{
    if (n <= 0)
        return 0;
    auto it = std::upper_bound(blocks_.begin(), blocks_.end(), n,
                               [](BigInt const& v, BlockRecord const& b) { return v < b.t; });
    if (it == blocks_.begin())
        return n;
    auto const j = static_cast<std::size_t>(it - blocks_.begin()) - 1;
    auto const& b = blocks_[j];
    BigInt const stop = std::min<BigInt>(n + 1, b.u);
    return n - (critical_prefix_[j] + (stop - b.t));
}

//---------------------------------------------------------------------------//
LChoice choose_L(SurvivalTable const& table, std::size_t n)
{
    LChoice out;
    std::size_t const H = table.horizon();
    if (n == 0 || n > 500)
        throw DomainError(kModule, "block index must lie in [1, 500]");
    double const threshold = std::ldexp(1.0, -2 * static_cast<int>(n));
    auto krk = [&](std::size_t k) { return static_cast<double>(k) * table.at(k); };

    if (H == 0 || !(krk(H) < threshold))
    {
        out.reason = "k*r_k = " + std::to_string(H ? krk(H) : 1.0) + " at k = H = " + std::to_string(H) +
                     " is not below 4^-" + std::to_string(n) +
                     " (horizon too small, or finite variance keeps k*r_k near 2/sigma^2)";
        return out;
    }
    std::size_t L = H;
    while (L > 1 && krk(L - 1) < threshold)
        --L;
    out.L = L;

    std::size_t const from = std::max<std::size_t>(1, H / 10);
    for (std::size_t k = from; k < H; ++k)
    {
        if (krk(k + 1) > krk(k))
        {
            out.reason = "k*r_k increases at k = " + std::to_string(k) +
                         " within the last decade of the table; the bound may not persist beyond H";
            return out;
        }
    }
    out.status = LStatus::horizon_certified;
    return out;
}

Schedule build_schedule_from_thresholds(double m, std::span<BigInt const> thresholds, std::string law_id)
{
    if (!(m > 1))
        throw DomainError(kModule, "construction needs mean m > 1");
    ExactMean const exact(m);

    std::vector<BlockRecord> blocks;
    BigInt growth = 0;
    BigInt u_prev = 0;
    for (std::size_t i = 0; i < thresholds.size(); ++i)
    {
        auto const n = static_cast<long>(i + 1);
        BigInt const& L = thresholds[i];
        if (L < 1)
            throw DomainError(kModule, "thresholds L_n must be positive integers");

        // K_n = m^E > 2^n L_n, with at least one growth generation after u_{n-1}.
        BigInt const E_min = (i == 0) ? BigInt(0) : BigInt(growth + 1);
        BigInt const E = exact.least_exponent_above(E_min, n, L);

        BlockRecord b;
        b.index = i + 1;
        b.L = L;
        b.t = u_prev + (E - growth) + (i == 0 ? 1 : 0);
        b.u = b.t + exact.ceil_over_pow2(E, n);
        b.growth_gens = E;
        b.log_K = log_power(m, E);
        growth = E;
        u_prev = b.u;
        blocks.push_back(std::move(b));
    }
    return Schedule(m, std::move(blocks), u_prev, std::move(law_id));
}

Schedule build_schedule(double m, SurvivalTable const& table, std::size_t n_blocks, std::string law_id)
{
    std::vector<BigInt> thresholds;
    for (std::size_t n = 1; n <= n_blocks; ++n)
    {
        auto const choice = choose_L(table, n);
        if (choice.status != LStatus::horizon_certified)
            throw NotCertifiable(n, "block " + std::to_string(n) + ": " + choice.reason);
        thresholds.emplace_back(choice.L);
    }
    return build_schedule_from_thresholds(m, thresholds, std::move(law_id));
}

Schedule build_schedule(OffspringLaw const& f, SurvivalTable const& table, std::size_t n_blocks)
{
    double const m = mean(f);
    if (!(m > 1))
        throw DomainError(kModule, "construction needs a supercritical law");
    std::vector<std::string> warnings;
    if (second_moment_class(f).finite)
        warnings.emplace_back("offspring variance is finite; thresholds are not expected to certify");
    std::string const expected_id = criticalize(f).spec();
    if (table.law_id() != expected_id)
        warnings.push_back("survival table law '" + table.law_id() + "' differs from '" + expected_id + "'");

    auto schedule = build_schedule(m, table, n_blocks, f.spec());
    schedule.warnings = std::move(warnings);
    return schedule;
}

BigInt ceil_power_over_pow2(double m, BigInt const& exponent, long shift)
{
    return ExactMean(m).ceil_over_pow2(exponent, shift);
}

//---------------------------------------------------------------------------//
double retention_at(Schedule const& schedule, BigInt const& n)
{
    if (n < 1 || n > schedule.span_end())
        throw OutOfRange(kModule, "generation " + n.str() + " outside the built span [1, " +
                                      schedule.span_end().str() + "]");
    auto const& blocks = schedule.blocks();
    auto it = std::upper_bound(blocks.begin(), blocks.end(), n,
                               [](BigInt const& v, BlockRecord const& b) { return v < b.t; });
    if (it != blocks.begin() && n < std::prev(it)->u)
        return 1.0 / schedule.mean();
    return 1.0;
}

MeanValue mean_at(Schedule const& schedule, BigInt const& n)
{
    if (n < 0 || n > schedule.span_end())
        throw OutOfRange(kModule, "generation " + n.str() + " outside the built span [0, " +
                                      schedule.span_end().str() + "]");
    MeanValue out;
    out.growth_gens = schedule.growth_positions_through(n);
    out.log_value = log_power(schedule.mean(), out.growth_gens);
    return out;
}

std::vector<std::string> check_schedule(Schedule const& schedule)
{
    std::vector<std::string> issues;
    double const m = schedule.mean();
    if (!(m > 1))
    {
        issues.emplace_back("mean must exceed 1");
        return issues;
    }
    ExactMean const exact(m);
    BigInt critical_before = 0;
    for (auto const& b : schedule.blocks())
    {
        auto const n = static_cast<long>(b.index);
        std::string const tag = "block " + std::to_string(b.index) + ": ";
        BigInt const len = b.u - b.t;
        if (b.growth_gens != b.t - 1 - critical_before)
            issues.push_back(tag + "growth_gens does not match the block layout");
        if (len != exact.ceil_over_pow2(b.growth_gens, n))
            issues.push_back(tag + "u - t != ceil(2^-n K)");
        if (!(len > b.L))
            issues.push_back(tag + "u - t <= L");
        // 2^-n K > L  <=>  K > 2^n L
        if (exact.compare(b.growth_gens, n, b.L) <= 0)
            issues.push_back(tag + "K <= 2^n L");
        critical_before += len;
    }
    return issues;
}

void write_schedule_csv(std::ostream& out, Schedule const& schedule)
{
    out << "block,L,t,u,growth_gens,log10_K\n";
    for (auto const& b : schedule.blocks())
    {
        ExtendedReal const l10 = b.log_K / boost::multiprecision::log(ExtendedReal(10));
        out << b.index << ',' << b.L.str() << ',' << b.t.str() << ',' << b.u.str() << ','
            << b.growth_gens.str() << ',' << l10.str(17, std::ios_base::fixed) << '\n';
    }
}

} // namespace bpve
