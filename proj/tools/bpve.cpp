#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bpve/construct.hpp"
#include "bpve/errors.hpp"
#include "bpve/law_spec.hpp"
#include "bpve/simulate.hpp"
#include "bpve/survival.hpp"
#include "bpve/verify.hpp"

using nlohmann::json;

namespace {

// Everything a run needs; also embedded verbatim in every artifact.
struct Request
{
    std::string command;
    std::string law;
    std::size_t horizon = 100'000;
    bool criticalize = false;
    bool checkpoints = false;
    std::size_t blocks = 3;
    std::uint64_t exact_budget = 1'000'000;
    std::uint64_t bruteforce_horizon = 10'000;
    double tolerance = 1e-9;
    std::uint64_t replicates = 10'000;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    std::uint64_t population_cap = 0;
    std::uint64_t generations = 0;
    std::vector<double> retention;
    std::optional<double> retention_const;
    std::optional<std::size_t> schedule_blocks;
    std::string out;
    std::string csv;
    std::string trajectories;
};

json to_json(Request const& r)
{
    json j = {{"command", r.command}, {"law", r.law}};
    if (r.command == "survival" || r.command == "kkns")
    {
        j["horizon"] = r.horizon;
        j["criticalize"] = r.criticalize;
        j["tolerance"] = r.tolerance;
    }
    if (r.command == "survival")
        j["checkpoints"] = r.checkpoints;
    if (r.command == "construct" || r.command == "verify")
    {
        j["horizon"] = r.horizon;
        j["blocks"] = r.blocks;
        j["tolerance"] = r.tolerance;
    }
    if (r.command == "verify")
    {
        j["exact_budget"] = r.exact_budget;
        j["bruteforce_horizon"] = r.bruteforce_horizon;
    }
    if (r.command == "simulate" || r.command == "percolate")
    {
        j["generations"] = r.generations;
        j["replicates"] = r.replicates;
        j["seed"] = r.seed.value_or(0);
        j["workers"] = r.workers;
        if (r.command == "simulate")
            j["population_cap"] = r.population_cap;
        if (r.retention_const)
            j["retention_const"] = *r.retention_const;
        else if (r.schedule_blocks)
        {
            j["schedule_blocks"] = *r.schedule_blocks;
            j["horizon"] = r.horizon;
        }
        else
            j["retention"] = r.retention;
    }
    return j;
}

class Output
{
  public:
    explicit Output(std::string const& path)
    {
        if (!path.empty() && path != "-")
        {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_)
                throw bpve::ConfigError("cli", "cannot open '" + path + "' for writing");
        }
    }

    std::ostream& stream() { return file_ ? *file_ : std::cout; }

  private:
    std::unique_ptr<std::ofstream> file_;
};

void write_request_line(std::ostream& out, Request const& request)
{
    out << "# request: " << to_json(request).dump() << '\n';
}

void emit_error(std::string const& kind, std::string const& module, std::string const& detail)
{
    std::cerr << json{{"error", kind}, {"module", module}, {"detail", detail}}.dump() << '\n';
}

bpve::SurvivalOptions survival_options(Request const& r)
{
    bpve::SurvivalOptions opts;
    opts.tolerance = r.tolerance;
    return opts;
}

bpve::OffspringLaw critical_law(Request const& r)
{
    auto law = bpve::parse_law_spec(r.law);
    return r.criticalize ? bpve::criticalize(law) : law;
}

struct Built
{
    bpve::OffspringLaw base;
    bpve::SurvivalTable table;
    bpve::Schedule schedule;
};

Built build(Request const& r, std::size_t blocks)
{
    auto base = bpve::parse_law_spec(r.law);
    auto table = bpve::survival_table(bpve::criticalize(base), r.horizon, survival_options(r));
    auto schedule = bpve::build_schedule(base, table, blocks);
    return {std::move(base), std::move(table), std::move(schedule)};
}

int run_survival(Request const& r)
{
    auto const table = bpve::survival_table(critical_law(r), r.horizon, survival_options(r));
    Output out(r.out);
    write_request_line(out.stream(), r);
    bpve::write_survival_csv(out.stream(), table, !r.checkpoints);
    return 0;
}

int run_kkns(Request const& r)
{
    auto const g = critical_law(r);
    auto const table = bpve::survival_table(g, r.horizon, survival_options(r));
    auto const diag = bpve::kkns_diagnostic(table, bpve::second_moment_class(g));
    json points = json::array();
    for (auto const& c : diag.checkpoints)
        points.push_back({{"n", c.n}, {"n_times_r_n", c.n_times_r}});
    json report = {
        {"request", to_json(r)},
        {"checkpoints", points},
        {"verdict", bpve::to_string(diag.verdict)},
        {"limit_estimate", diag.limit_estimate},
        {"expected_limit", diag.expected_limit ? json(*diag.expected_limit) : json(nullptr)},
        {"precision", table.precision() == bpve::Precision::standard ? "standard" : "extended"},
        {"achieved_tolerance", table.achieved_tolerance()},
    };
    Output out(r.out);
    out.stream() << report.dump(2) << '\n';
    return 0;
}

int run_construct(Request const& r)
{
    auto const built = build(r, r.blocks);
    auto const problems = bpve::check_schedule(built.schedule);
    Output out(r.out);
    write_request_line(out.stream(), r);
    bpve::write_schedule_csv(out.stream(), built.schedule);
    for (auto const& w : built.schedule.warnings)
        emit_error("warning", "construct", w);
    for (auto const& p : problems)
        emit_error("violated", "construct", p);
    return problems.empty() ? 0 : 1;
}

int run_verify(Request const& r)
{
    auto const built = build(r, r.blocks);
    bpve::VerifyOptions opts;
    opts.bruteforce_horizon = r.bruteforce_horizon;
    opts.condition_ii.exact_budget = r.exact_budget;
    opts.condition_ii.survival = survival_options(r);
    auto const report = bpve::verify_schedule(built.base, built.schedule, built.table, opts);
    auto const problems = bpve::check_schedule(built.schedule);

    json j = bpve::to_json(report);
    j["request"] = to_json(r);
    j["schedule_span_end"] = built.schedule.span_end().str();
    j["schedule_problems"] = problems;
    Output out(r.out);
    out.stream() << j.dump(2) << '\n';
    if (!r.csv.empty())
    {
        Output csv(r.csv);
        write_request_line(csv.stream(), r);
        bpve::write_condition_ii_csv(csv.stream(), report.condition_ii);
    }
    return report.passed() && problems.empty() ? 0 : 1;
}

bpve::RetentionSequence retentions(Request const& r, std::uint64_t span)
{
    if (r.retention_const)
        return bpve::RetentionSequence::constant(*r.retention_const, span);
    if (r.schedule_blocks)
    {
        auto const built = build(r, *r.schedule_blocks);
        return bpve::RetentionSequence::from_schedule(built.schedule, span);
    }
    return bpve::RetentionSequence::list(r.retention);
}

int run_monte_carlo(Request& r)
{
    if (!r.seed)
        r.seed = (std::uint64_t(std::random_device{}()) << 32) ^ std::random_device{}();
    auto const law = bpve::parse_law_spec(r.law);
    auto const seq = retentions(r, r.generations);

    bpve::McConfig config;
    config.replicates = r.replicates;
    config.master_seed = *r.seed;
    config.generation_horizon = r.generations;
    config.population_cap = r.population_cap;
    config.workers = r.workers;
    config.record_trajectories = !r.trajectories.empty() && r.command == "simulate";

    auto const summary = r.command == "simulate" ? bpve::simulate_bpve(law, seq, config)
                                                 : bpve::simulate_percolation(law, seq, r.generations, config);
    json j = bpve::to_json(summary);
    j["request"] = to_json(r);
    Output out(r.out);
    out.stream() << j.dump(2) << '\n';
    if (config.record_trajectories)
    {
        Output traj(r.trajectories);
        write_request_line(traj.stream(), r);
        bpve::write_trajectories_csv(traj.stream(), summary);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    Request r;
    CLI::App app{"Branching processes in varying environments: survival tables, retention schedules, "
                 "certification and Monte Carlo."};
    app.require_subcommand(1);

    auto add_law = [&](CLI::App* cmd) {
        cmd->add_option("law", r.law, "law spec, e.g. powertail:alpha=0.5,mean=1.5")->required();
    };
    auto add_table = [&](CLI::App* cmd) {
        cmd->add_option("--horizon", r.horizon, "survival table length H")->check(CLI::Range(1ul, 100'000'000ul));
        cmd->add_option("--tolerance", r.tolerance, "relative tolerance on r_n")->check(CLI::PositiveNumber);
    };
    auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", r.out, "output path (default stdout)"); };

    auto* survival = app.add_subcommand("survival", "survival table r_n of a critical law (CSV)");
    add_law(survival);
    add_table(survival);
    survival->add_flag("--criticalize", r.criticalize, "thin the law to mean 1 first");
    survival->add_flag("--checkpoints", r.checkpoints, "only rows n = 1, 10, 100, ... and H");
    add_out(survival);

    auto* kkns = app.add_subcommand("kkns", "n r_n trend diagnostic (JSON)");
    add_law(kkns);
    add_table(kkns);
    kkns->add_flag("--criticalize", r.criticalize, "thin the law to mean 1 first");
    add_out(kkns);

    auto* construct = app.add_subcommand("construct", "retention schedule for a supercritical law (CSV)");
    add_law(construct);
    add_table(construct);
    construct->add_option("--blocks", r.blocks, "number of blocks")->check(CLI::Range(1ul, 500ul));
    add_out(construct);

    auto* verify = app.add_subcommand("verify", "build a schedule and certify both conditions (JSON)");
    add_law(verify);
    add_table(verify);
    verify->add_option("--blocks", r.blocks, "number of blocks")->check(CLI::Range(1ul, 500ul));
    verify->add_option("--exact-budget", r.exact_budget, "max generations for exact survival per block");
    verify->add_option("--bruteforce-horizon", r.bruteforce_horizon, "generations summed directly");
    verify->add_option("--csv", r.csv, "per-block CSV path");
    add_out(verify);

    for (char const* name : {"simulate", "percolate"})
    {
        bool const population = std::string(name) == "simulate";
        auto* cmd = app.add_subcommand(name, population ? "population Monte Carlo (JSON)"
                                                        : "tree percolation Monte Carlo (JSON)");
        add_law(cmd);
        cmd->add_option(population ? "--generations" : "--depth", r.generations,
                        population ? "generation horizon" : "percolation depth")
            ->required();
        cmd->add_option("--replicates", r.replicates)->check(CLI::Range(1ul, 1'000'000'000ul));
        cmd->add_option("--seed", r.seed, "master seed; generated and recorded when absent");
        cmd->add_option("--workers", r.workers)->check(CLI::Range(1u, 1024u));
        if (population)
        {
            cmd->add_option("--population-cap", r.population_cap, "0 = no cap");
            cmd->add_option("--trajectories", r.trajectories, "per-generation CSV path");
        }
        auto* list = cmd->add_option("--retention", r.retention, "p_1,p_2,... covering the horizon")->delimiter(',');
        auto* constant = cmd->add_option("--retention-const", r.retention_const, "constant p_n");
        auto* sched = cmd->add_option("--schedule-blocks", r.schedule_blocks, "p_n from a built schedule");
        cmd->add_option("--horizon", r.horizon, "survival table length for --schedule-blocks");
        list->excludes(constant)->excludes(sched);
        constant->excludes(sched);
        add_out(cmd);
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::CallForHelp const& e)
    {
        return app.exit(e);
    }
    catch (CLI::CallForAllHelp const& e)
    {
        return app.exit(e);
    }
    catch (CLI::ParseError const& e)
    {
        emit_error("parse_error", "cli", e.what());
        return 2;
    }

    r.command = app.get_subcommands().front()->get_name();
    try
    {
        r.law = bpve::parse_law_spec(r.law).spec();
        if (r.command == "survival")
            return run_survival(r);
        if (r.command == "kkns")
            return run_kkns(r);
        if (r.command == "construct")
            return run_construct(r);
        if (r.command == "verify")
            return run_verify(r);
        if ((r.command == "simulate" || r.command == "percolate") && !r.retention_const && !r.schedule_blocks &&
            r.retention.empty())
            throw bpve::ConfigError("cli", "one of --retention, --retention-const, --schedule-blocks is required");
        return run_monte_carlo(r);
    }
    catch (bpve::NotCertifiable const& e)
    {
        emit_error(e.kind(), e.module(), e.what());
        return 3;
    }
    catch (bpve::Error const& e)
    {
        emit_error(e.kind(), e.module(), e.what());
        return 2;
    }
    catch (std::exception const& e)
    {
        emit_error("internal_error", "cli", e.what());
        return 2;
    }
}
