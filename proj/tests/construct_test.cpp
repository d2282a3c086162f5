#include <sstream>

#include "doctest.h"

#include "bpve/construct.hpp"
#include "bpve/errors.hpp"

using namespace bpve;

namespace {

Schedule hand_schedule()
{
    std::vector<BigInt> L = {2, 10};
    return build_schedule_from_thresholds(2.0, L);
}

} // namespace

// m = 2, L = (2, 10) worked by hand:
// E_1 = 3 (8 > 4), t_1 = 4, u_1 = 4 + 8/2 = 8;
// E_2 = 6 (64 > 40), t_2 = 8 + 3 = 11, u_2 = 11 + 64/4 = 27.
TEST_CASE("hand traced schedule")
{
    auto const s = hand_schedule();
    REQUIRE(s.built_blocks() == 2);
    auto const& b = s.blocks();
    CHECK(b[0].t == 4);
    CHECK(b[0].u == 8);
    CHECK(b[0].growth_gens == 3);
    CHECK(b[1].t == 11);
    CHECK(b[1].u == 27);
    CHECK(b[1].growth_gens == 6);
    CHECK(b[1].log10_K() == doctest::Approx(std::log10(64.0)));
    CHECK(s.span_end() == 27);
    CHECK(check_schedule(s).empty());
}

TEST_CASE("retention pattern of the hand schedule")
{
    auto const s = hand_schedule();
    std::string pattern;
    for (int n = 1; n <= 26; ++n)
        pattern += retention_at(s, n) == 1.0 ? 'G' : (retention_at(s, n) == 0.5 ? 'c' : '?');
    CHECK(pattern == "GGGccccGGGcccccccccccccccc");
    CHECK_THROWS_AS(retention_at(s, 0), OutOfRange);
    CHECK_THROWS_AS(retention_at(s, 28), OutOfRange);
}

TEST_CASE("mean_at is the product of m p_k")
{
    auto const s = hand_schedule();
    CHECK(mean_at(s, 0).value() == 1.0);
    CHECK(mean_at(s, 3).value() == doctest::Approx(8.0));
    CHECK(mean_at(s, 7).value() == doctest::Approx(8.0));
    CHECK(mean_at(s, 8).value() == doctest::Approx(16.0));
    CHECK(mean_at(s, 9).value() == doctest::Approx(32.0));
    CHECK(mean_at(s, 26).value() == doctest::Approx(64.0));
    CHECK(mean_at(s, 10).growth_gens == 6);
}

TEST_CASE("exact ceilings")
{
    CHECK(ceil_power_over_pow2(2.0, 6, 2) == 16);
    CHECK(ceil_power_over_pow2(1.5, 2, 1) == 2);   // 2.25 / 2 = 1.125
    CHECK(ceil_power_over_pow2(1.5, 4, 2) == 2);   // 5.0625 / 4
    CHECK(ceil_power_over_pow2(3.0, 40, 3) == BigInt("1519708182382116101")); // 3^40 / 8 rounded up
}

TEST_CASE("choose_L on synthetic tables")
{
    std::vector<double> r;
    for (int k = 1; k <= 10'000; ++k)
        r.push_back(1.0 / (double(k) * k)); // k r_k = 1/k
    auto const table = SurvivalTable::from_values(r);
    auto const c1 = choose_L(table, 1);
    CHECK(c1.status == LStatus::horizon_certified);
    CHECK(c1.L == 5); // 1/k < 1/4
    auto const c3 = choose_L(table, 3);
    CHECK(c3.L == 65); // 1/k < 1/64
    CHECK(choose_L(table, 7).status == LStatus::not_certifiable); // 4^-7 beyond the table
    CHECK_THROWS(choose_L(table, 0));
    CHECK_THROWS(choose_L(table, 501));
}

TEST_CASE("finite variance is not certifiable")
{
    auto const f = OffspringLaw::finite({0, 0, 1});
    auto const table = survival_table(criticalize(f), 10'000);
    CHECK(choose_L(table, 1).status == LStatus::not_certifiable);
    CHECK_THROWS_AS(build_schedule(f, table, 1), NotCertifiable);
}

TEST_CASE("power tail schedule")
{
    auto const f = OffspringLaw::power_tail(0.5, 1.5);
    auto const table = survival_table(criticalize(f), 100'000);
    auto const s = build_schedule(f, table, 3);
    CHECK(s.warnings.empty());
    CHECK(check_schedule(s).empty());
    REQUIRE(s.built_blocks() == 3);
    CHECK(s.blocks()[0].L == 26);
    CHECK(s.blocks()[1].L == 115);
    CHECK(s.blocks()[2].L == 468);
    for (auto const& b : s.blocks())
    {
        // K > 2^n L and u - t = ceil(K / 2^n)
        auto const K = mean_at(s, b.t).value();
        CHECK(K > std::ldexp(b.L.convert_to<double>(), int(b.index)));
        CHECK((b.u - b.t) == ceil_power_over_pow2(1.5, b.growth_gens, long(b.index)));
    }

    std::ostringstream csv;
    write_schedule_csv(csv, s);
    CHECK(csv.str().rfind("block,L,t,u,growth_gens,log10_K\n", 0) == 0);
}

TEST_CASE("schedule warns about a mismatched table")
{
    auto const f = OffspringLaw::power_tail(0.5, 1.5);
    auto const other = criticalize(OffspringLaw::power_tail(0.6, 1.5));
    auto const s = build_schedule(f, survival_table(other, 100'000), 1);
    CHECK_FALSE(s.warnings.empty());
}
