#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpve/offspring.hpp"

namespace bpve {

enum class Precision
{
    standard,
    extended,
};

struct SurvivalOptions
{
    double tolerance = 1e-9; // per-entry relative accuracy target
    bool allow_extended = true;
    bool force_extended = false;
};

/// Survival probabilities r_1..r_H of a critical Galton-Watson process,
/// stored directly (never as 1 - extinction). r_0 = 1 by convention.
class SurvivalTable
{
  public:
    SurvivalTable(std::string law_id, std::vector<double> r, std::vector<double> relative_error,
                  Precision precision, double tolerance);

    /// Table from given values, e.g. a synthetic r_k sequence. Values must be
    /// in [0,1] and nonincreasing.
    static SurvivalTable from_values(std::vector<double> r, std::string law_id = "synthetic");

    std::string const& law_id() const noexcept { return law_id_; }
    std::size_t horizon() const noexcept { return r_.size(); }

    /// r_n for 0 <= n <= H.
    double at(std::size_t n) const;
    std::span<double const> values() const noexcept { return r_; }
    std::span<double const> relative_errors() const noexcept { return err_; }

    /// Largest relative error bound over all entries.
    double achieved_tolerance() const noexcept;
    /// 1-based indices whose bound exceeds the requested tolerance.
    std::vector<std::size_t> const& flagged() const noexcept { return flagged_; }
    Precision precision() const noexcept { return precision_; }

  private:
    std::string law_id_;
    std::vector<double> r_;
    std::vector<double> err_;
    std::vector<std::size_t> flagged_;
    Precision precision_;
};

/// r_{n+1} = 1 - g(1 - r_n), r_0 = 1. `g` must be critical (mean 1 within 1e-9).
SurvivalTable survival_table(OffspringLaw const& g, std::size_t horizon, SurvivalOptions const& options = {});

struct ExactSurvival
{
    double value = 0;
    double relative_error = 0;
    bool flagged = false;
    Precision precision = Precision::standard;
};

/// P(Z_n > 0) for the process with offspring laws thin(f, p_1), ..., thin(f, p_n),
/// by backward composition in the complement domain.
ExactSurvival bpve_survival_exact(OffspringLaw const& f, std::span<double const> retentions,
                                  SurvivalOptions const& options = {});

enum class KknsVerdict
{
    converging,
    decaying,
    inconclusive,
};

std::string to_string(KknsVerdict verdict);

struct KknsThresholds
{
    double converge_relative = 0.05; // |n r_n - 2/sigma^2| relative to 2/sigma^2
    double decay_ratio = 0.1;        // n r_n must shrink by this over two decades
    std::size_t min_n = 1000;        // last checkpoint needed for any verdict
};

struct KknsCheckpoint
{
    std::size_t n = 0;
    double n_times_r = 0;
};

struct KknsDiagnostic
{
    std::vector<KknsCheckpoint> checkpoints;
    KknsVerdict verdict = KknsVerdict::inconclusive;
    double limit_estimate = 0;
    std::optional<double> expected_limit; // 2 / sigma^2 when the variance is finite
};

/// n r_n at n = 1, 10, 100, ... (and H) with a trend verdict against the
/// critical-process limit 2 / sigma^2 (0 when sigma^2 is infinite).
KknsDiagnostic kkns_diagnostic(SurvivalTable const& table, SecondMomentClass const& moment,
                               KknsThresholds const& thresholds = {});

/// CSV `n,r_n,n_times_r_n`; every n when `per_n`, else the diagnostic checkpoints.
void write_survival_csv(std::ostream& out, SurvivalTable const& table, bool per_n);

} // namespace bpve
