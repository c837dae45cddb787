#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cbl/curriculum.hpp"

#include <algorithm>
#include <random>

using namespace cbl;

namespace {

ExecutionTrace trace_with(int64_t duration_ms) {
    ExecutionTrace t;
    t.case_id = "c";
    t.task_category = "x";
    t.duration_ms = duration_ms;
    return t;
}

SampleScore score_of(int score) {
    SampleScore s;
    s.sample_id = "c";
    s.score = score;
    return s;
}

CaseRecord rec(const std::string& id, double difficulty, bool success, int64_t created_at = 0) {
    CaseRecord r;
    r.case_id = id;
    r.task_category = "t";
    r.summary = "summary of " + id;
    r.difficulty = difficulty;
    r.success = success;
    r.score = success ? 4 : 1;
    r.created_at = created_at;
    return r;
}

std::vector<CaseRecord> random_cases(std::mt19937& rng, size_t max_n = 12) {
    std::uniform_int_distribution<size_t> n_dist(0, max_n);
    std::uniform_real_distribution<double> d_dist(0.0, 1.0);
    size_t n = n_dist(rng);
    std::vector<CaseRecord> cases;
    for (size_t i = 0; i < n; ++i) {
        // Coarse difficulty grid so ties are common and tie-breaks get exercised.
        double d = std::round(d_dist(rng) * 4.0) / 4.0;
        cases.push_back(rec("case-" + std::to_string(i), d, rng() % 2 == 0,
                            static_cast<int64_t>(rng() % 5)));
    }
    return cases;
}

} // namespace

TEST_CASE("difficulty formula") {
    // All terms zero.
    CHECK(estimate_difficulty(trace_with(0), score_of(4), 0, 60000) == doctest::Approx(0.0));
    // All terms maximal.
    CHECK(estimate_difficulty(trace_with(60000), score_of(0), 5, 60000) == doctest::Approx(1.0));
    // 0.4*0.2 + 0.3*0.5 + 0.3*0.5 = 0.38
    CHECK(estimate_difficulty(trace_with(30000), score_of(2), 1, 60000) == doctest::Approx(0.38));
    // Duration clamps at the deadline.
    CHECK(estimate_difficulty(trace_with(180000), score_of(4), 0, 60000) == doctest::Approx(0.3));

    CurriculumWeights heavy{1.0, 1.0, 1.0};
    CHECK(estimate_difficulty(trace_with(60000), score_of(0), 5, 60000, heavy) == doctest::Approx(1.0));
}

TEST_CASE("difficulty stays in [0,1] for arbitrary inputs") {
    std::mt19937 rng(11);
    for (int i = 0; i < 2000; ++i) {
        auto d = estimate_difficulty(trace_with(static_cast<int64_t>(rng() % 200000)),
                                     score_of(static_cast<int>(rng() % 5)), rng() % 9,
                                     60000);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
    }
}

TEST_CASE("order_cases sorts easier-first with documented tie-breaks") {
    CHECK(order_cases({}).ordered_case_ids.empty());

    auto order = order_cases({rec("A", 0.2, false), rec("B", 0.2, true)});
    CHECK(order.ordered_case_ids == std::vector<std::string>{"B", "A"});
    CHECK(order.key_of.at("B").success_rank == 0);
    CHECK(order.key_of.at("A").success_rank == 1);

    auto by_difficulty = order_cases({rec("A", 0.9, true), rec("B", 0.1, true), rec("C", 0.5, true)});
    CHECK(by_difficulty.ordered_case_ids == std::vector<std::string>{"B", "C", "A"});

    // created_at, then case_id.
    auto ties = order_cases({rec("Z", 0.3, true, 7), rec("Y", 0.3, true, 2),
                             rec("M", 0.3, true, 2)});
    CHECK(ties.ordered_case_ids == std::vector<std::string>{"M", "Y", "Z"});
}

TEST_CASE("select_for_context takes a greedy prefix") {
    std::vector<CaseRecord> cases = {rec("A", 0.1, true), rec("B", 0.2, true), rec("C", 0.3, true)};
    auto order = order_cases(cases);

    CHECK(select_for_context(order, cases, 0).empty());

    auto all = select_for_context(order, cases, 1 << 20);
    REQUIRE(all.size() == 3);
    CHECK(all[0].case_id == "A");

    // Budget for exactly the first two summaries (sizes plus one joining newline).
    int64_t two = static_cast<int64_t>(render_case_summary(cases[0]).size() +
                                       render_case_summary(cases[1]).size()) + 1;
    CHECK(select_for_context(order, cases, two).size() == 2);
    CHECK(select_for_context(order, cases, two - 1).size() == 1);
}

TEST_CASE("curriculum properties over random case lists") {
    std::mt19937 rng(1234);
    for (int iter = 0; iter < 1200; ++iter) {
        auto cases = random_cases(rng);
        auto order = order_cases(cases);

        // Permutation: nothing lost, nothing duplicated.
        REQUIRE(order.ordered_case_ids.size() == cases.size());
        std::vector<std::string> got = order.ordered_case_ids;
        std::vector<std::string> want;
        for (const auto& c : cases) want.push_back(c.case_id);
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        CHECK(got == want);

        // Easier-first: the documented key is non-decreasing along the order.
        for (size_t i = 1; i < order.ordered_case_ids.size(); ++i) {
            const auto& a = order.key_of.at(order.ordered_case_ids[i - 1]);
            const auto& b = order.key_of.at(order.ordered_case_ids[i]);
            bool ok = a.difficulty < b.difficulty ||
                      (a.difficulty == b.difficulty && a.success_rank <= b.success_rank);
            CHECK(ok);
        }

        // Prefix monotonicity: growing the budget never removes a selection.
        std::uniform_int_distribution<int64_t> b_dist(0, 600);
        int64_t b1 = b_dist(rng);
        int64_t b2 = b1 + b_dist(rng);
        auto s1 = select_for_context(order, cases, b1);
        auto s2 = select_for_context(order, cases, b2);
        REQUIRE(s1.size() <= s2.size());
        for (size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].case_id == s2[i].case_id);
    }
}
