#include "bpve/simulate.hpp"

#include <algorithm>
#include <ostream>
#include <thread>

#include <boost/math/distributions/binomial.hpp>

#include "bpve/errors.hpp"

namespace bpve {

namespace {

constexpr char const* kModule = "simulate";

std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Generation-indexed laws thin(f, p_n); p_n = 0 is allowed and kills every child.
struct GenerationLaws
{
    GenerationLaws(OffspringLaw const& f, RetentionSequence const& retentions, std::uint64_t horizon)
        : base(f.base()), keep(horizon + 1, 1.0)
    {
        double const outer = f.retention();
        for (std::uint64_t n = 1; n <= horizon; ++n)
            keep[n] = outer * retentions.at(n);
    }

    std::uint64_t total(std::uint64_t parents, std::uint64_t n, Rng& rng) const
    {
        if (keep[n] <= 0)
            return 0;
        return sample_total(thin(base, keep[n]), parents, rng);
    }

    OffspringLaw base;
    std::vector<double> keep; // index n = generation
};

template<class Replicate>
void run_replicates(McConfig const& config, McSummary& out, Replicate&& replicate)
{
    if (config.replicates == 0)
        throw ConfigError(kModule, "replicates must be at least 1");
    unsigned const workers = std::max(1u, config.workers);
    std::uint64_t const n = config.replicates;
    if (config.record_trajectories)
        out.trajectories.assign(n, {});

    struct Counts
    {
        std::uint64_t survivals = 0;
        std::uint64_t truncated = 0;
    };
    std::vector<Counts> counts(workers);
    std::vector<std::exception_ptr> errors(workers);

    auto work = [&](unsigned w) {
        try
        {
            std::uint64_t const lo = n * w / workers;
            std::uint64_t const hi = n * (w + 1) / workers;
            for (std::uint64_t i = lo; i < hi; ++i)
            {
                Rng rng(derive_replicate_seed(config.master_seed, i));
                std::vector<std::uint64_t>* path = config.record_trajectories ? &out.trajectories[i] : nullptr;
                auto const [alive, capped] = replicate(rng, path);
                counts[w].survivals += alive ? 1 : 0;
                counts[w].truncated += capped ? 1 : 0;
            }
        }
        catch (...)
        {
            errors[w] = std::current_exception();
        }
    };

    if (workers == 1)
    {
        work(0);
    }
    else
    {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work, w);
        for (auto& t : pool)
            t.join();
    }
    for (auto const& e : errors)
        if (e)
            std::rethrow_exception(e);

    out.replicates = n;
    out.master_seed = config.master_seed;
    for (auto const& c : counts)
    {
        out.survivals += c.survivals;
        out.truncated += c.truncated;
    }
    out.frequency = static_cast<double>(out.survivals) / static_cast<double>(n);

    using boost::math::binomial_distribution;
    auto const trials = static_cast<double>(n);
    auto const successes = static_cast<double>(out.survivals);
    out.ci95_low = binomial_distribution<>::find_lower_bound_on_p(trials, successes, 0.025);
    out.ci95_high = binomial_distribution<>::find_upper_bound_on_p(trials, successes, 0.025);
    out.ci95_halfwidth = (out.ci95_high - out.ci95_low) / 2;
}

} // namespace

//---------------------------------------------------------------------------//
RetentionSequence::RetentionSequence(std::vector<double> values) : values_(std::move(values))
{
    for (double p : values_)
        if (!(p >= 0 && p <= 1))
            throw ConfigError(kModule, "retention probabilities must lie in [0,1]");
}

RetentionSequence RetentionSequence::list(std::vector<double> values)
{
    return RetentionSequence(std::move(values));
}

RetentionSequence RetentionSequence::constant(double p, std::uint64_t span)
{
    return RetentionSequence(std::vector<double>(span, p));
}

RetentionSequence RetentionSequence::from_schedule(Schedule const& schedule, std::uint64_t span)
{
    if (BigInt(span) > schedule.span_end())
        throw OutOfRange(kModule, "retention span beyond the built schedule");
    std::vector<double> values(span);
    for (std::uint64_t n = 1; n <= span; ++n)
        values[n - 1] = retention_at(schedule, BigInt(n));
    return RetentionSequence(std::move(values));
}

double RetentionSequence::at(std::uint64_t n) const
{
    if (n < 1 || n > values_.size())
        throw OutOfRange(kModule, "generation " + std::to_string(n) + " outside the retention span [1, " +
                                      std::to_string(values_.size()) + "]");
    return values_[n - 1];
}

std::uint64_t derive_replicate_seed(std::uint64_t master_seed, std::uint64_t replicate_index)
{
    return mix64(mix64(master_seed) + (replicate_index + 1) * 0x9e3779b97f4a7c15ULL);
}

McSummary simulate_bpve(OffspringLaw const& f, RetentionSequence const& retentions, McConfig const& config)
{
    std::uint64_t const horizon = config.generation_horizon;
    if (horizon > retentions.span())
        throw ConfigError(kModule, "horizon " + std::to_string(horizon) + " beyond the retention span " +
                                       std::to_string(retentions.span()));
    GenerationLaws const laws(f, retentions, horizon);

    McSummary out;
    run_replicates(config, out, [&](Rng& rng, std::vector<std::uint64_t>* path) {
        std::uint64_t z = 1;
        if (path)
            path->push_back(z);
        for (std::uint64_t n = 1; n <= horizon; ++n)
        {
            z = laws.total(z, n, rng);
            if (path)
                path->push_back(z);
            if (z == 0)
                return std::pair{false, false};
            if (config.population_cap && z > config.population_cap && n < horizon)
                return std::pair{true, true};
        }
        return std::pair{z > 0, false};
    });
    return out;
}

McSummary simulate_percolation(OffspringLaw const& f, RetentionSequence const& retentions, std::uint64_t depth,
                               McConfig const& config)
{
    if (depth > retentions.span())
        throw ConfigError(kModule, "depth " + std::to_string(depth) + " beyond the retention span " +
                                       std::to_string(retentions.span()));
    GenerationLaws const laws(f, retentions, depth);

    McSummary out;
    run_replicates(config, out, [&](Rng& rng, std::vector<std::uint64_t>* path) {
        (void)path;
        if (depth == 0)
            return std::pair{true, false};
        // pending[d] = kept children of the current generation-d vertex still to explore.
        std::vector<std::uint64_t> pending;
        pending.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(depth, 1u << 20)));
        pending.push_back(laws.total(1, 1, rng));
        while (!pending.empty())
        {
            if (pending.back() == 0)
            {
                pending.pop_back();
                continue;
            }
            --pending.back();
            std::uint64_t const generation = pending.size();
            if (generation == depth)
                return std::pair{true, false};
            pending.push_back(laws.total(1, generation + 1, rng));
        }
        return std::pair{false, false};
    });
    return out;
}

nlohmann::json to_json(McSummary const& summary)
{
    return {
        {"replicates", summary.replicates},
        {"survivals", summary.survivals},
        {"frequency", summary.frequency},
        {"ci95", {summary.ci95_low, summary.ci95_high}},
        {"ci95_halfwidth", summary.ci95_halfwidth},
        {"truncated", summary.truncated},
        {"master_seed", summary.master_seed},
    };
}

void write_trajectories_csv(std::ostream& out, McSummary const& summary)
{
    out << "replicate,n,Z_n\n";
    for (std::size_t i = 0; i < summary.trajectories.size(); ++i)
        for (std::size_t n = 0; n < summary.trajectories[i].size(); ++n)
            out << i << ',' << n << ',' << summary.trajectories[i][n] << '\n';
}

} // namespace bpve
