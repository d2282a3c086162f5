#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "bpve/offspring.hpp"
#include "bpve/precision.hpp"
#include "bpve/survival.hpp"

namespace bpve {

using BigInt = boost::multiprecision::cpp_int;

/// One critical stretch [t, u) of the retention schedule.
///
/// K = E Z_t = m^{growth_gens}, where growth_gens counts the p = 1 generations
/// before t. The exponent is exact; log_K is its natural log at 50 digits.
struct BlockRecord
{
    std::size_t index = 0;
    BigInt L;
    BigInt t;
    BigInt u;
    BigInt growth_gens;
    ExtendedReal log_K;

    double log10_K() const;
};

/// Alternating growth (p = 1) and critical (p = 1/m) stretches:
/// p_n = 1/m on [t_j, u_j), p_n = 1 on [u_j, t_{j+1}) and on [1, t_1).
/// Generations 1..span_end are covered.
class Schedule
{
  public:
    Schedule(double m, std::vector<BlockRecord> blocks, BigInt span_end, std::string law_id = {});

    double mean() const noexcept { return m_; }
    std::vector<BlockRecord> const& blocks() const noexcept { return blocks_; }
    std::size_t built_blocks() const noexcept { return blocks_.size(); }
    BigInt const& span_end() const noexcept { return span_end_; }
    std::string const& law_id() const noexcept { return law_id_; }

    /// Number of p = 1 generations in [1, n].
    BigInt growth_positions_through(BigInt const& n) const;

    std::vector<std::string> warnings;

  private:
    double m_;
    std::vector<BlockRecord> blocks_;
    std::vector<BigInt> critical_prefix_; // total critical length of blocks before j
    BigInt span_end_;
    std::string law_id_;
};

enum class LStatus
{
    horizon_certified,
    not_certifiable,
};

struct LChoice
{
    std::size_t L = 0;
    LStatus status = LStatus::not_certifiable;
    std::string reason;
};

/// Least L <= H with k r_k < 4^{-n} for every k in [L, H], certified when
/// k r_k is also nonincreasing over the last decade of the table.
LChoice choose_L(SurvivalTable const& table, std::size_t n);

/// Builds `n_blocks` blocks for a base law f with mean m > 1; `table` must come
/// from criticalize(f). Throws NotCertifiable naming the failing block.
Schedule build_schedule(OffspringLaw const& f, SurvivalTable const& table, std::size_t n_blocks);

/// Same recursion with thresholds taken from any survival table.
Schedule build_schedule(double m, SurvivalTable const& table, std::size_t n_blocks, std::string law_id = {});

/// Same recursion with thresholds L_1..L_N supplied directly.
Schedule build_schedule_from_thresholds(double m, std::span<BigInt const> thresholds, std::string law_id = {});

/// p_n for 1 <= n <= span_end.
double retention_at(Schedule const& schedule, BigInt const& n);

struct MeanValue
{
    BigInt growth_gens; // M_n = m^{growth_gens}
    ExtendedReal log_value;

    double value() const;
};

/// M_n = E Z_n = prod_{k<=n} m p_k, for 0 <= n <= span_end.
MeanValue mean_at(Schedule const& schedule, BigInt const& n);

/// Violations of the construction invariants; empty when the schedule is sound.
std::vector<std::string> check_schedule(Schedule const& schedule);

/// CSV `block,L,t,u,growth_gens,log10_K`.
void write_schedule_csv(std::ostream& out, Schedule const& schedule);

/// ceil(m^exponent / 2^shift), exact.
BigInt ceil_power_over_pow2(double m, BigInt const& exponent, long shift);

} // namespace bpve
