#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "json.hpp"

#include "bpve/construct.hpp"
#include "bpve/offspring.hpp"

namespace bpve {

/// p_1, p_2, ... over a finite span; values in [0,1].
class RetentionSequence
{
  public:
    static RetentionSequence list(std::vector<double> values);
    static RetentionSequence constant(double p, std::uint64_t span);
    static RetentionSequence from_schedule(Schedule const& schedule, std::uint64_t span);

    /// p_n for 1 <= n <= span().
    double at(std::uint64_t n) const;
    std::uint64_t span() const noexcept { return values_.size(); }
    std::vector<double> const& values() const noexcept { return values_; }

  private:
    explicit RetentionSequence(std::vector<double> values);
    std::vector<double> values_;
};

struct McConfig
{
    std::uint64_t replicates = 1;
    std::uint64_t master_seed = 0;
    std::uint64_t generation_horizon = 0;
    std::uint64_t population_cap = 0; // 0 = no cap
    bool record_trajectories = false;
    unsigned workers = 1;
};

struct McSummary
{
    std::uint64_t replicates = 0;
    std::uint64_t survivals = 0;
    double frequency = 0;
    double ci95_low = 0;
    double ci95_high = 0;
    double ci95_halfwidth = 0; // half the Clopper-Pearson interval width
    std::uint64_t truncated = 0;
    std::uint64_t master_seed = 0;
    std::vector<std::vector<std::uint64_t>> trajectories; // Z_0, Z_1, ... per replicate

    bool operator==(McSummary const&) const = default;
};

/// Seed for one replicate: a bijective 64-bit mix of a counter offset by the
/// mixed master seed, so indices never collide under one master seed.
std::uint64_t derive_replicate_seed(std::uint64_t master_seed, std::uint64_t replicate_index);

/// Population-level simulation: Z_0 = 1, Z_{n+1} = total offspring of Z_n
/// individuals under thin(f, p_{n+1}); survival means Z_horizon > 0.
McSummary simulate_bpve(OffspringLaw const& f, RetentionSequence const& retentions, McConfig const& config);

/// Vertex percolation on a lazily grown Galton-Watson tree: a generation-n
/// vertex is kept with probability p_n (the root always), and a replicate
/// survives when a kept path reaches `depth`.
McSummary simulate_percolation(OffspringLaw const& f, RetentionSequence const& retentions, std::uint64_t depth,
                               McConfig const& config);

nlohmann::json to_json(McSummary const& summary);

/// CSV `replicate,n,Z_n`.
void write_trajectories_csv(std::ostream& out, McSummary const& summary);

} // namespace bpve
