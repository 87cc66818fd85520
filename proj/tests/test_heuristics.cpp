#include "tglearn/heuristics.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_set>

using namespace tglearn;
using namespace tglearn::pddl;
using namespace tglearn::heuristics;

namespace {

std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(TGLEARN_FIXTURE_DIR) + "/" + name);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

GroundTask bw3_task() {
    const Domain d = parse_domain(read_fixture("blocksworld.pddl"));
    const Problem p = parse_problem(read_fixture("bw3.pddl"), d);
    return ground(d, p);
}

// Independent h^max oracle: Bellman-style value iteration swept until the
// fixpoint, no priority queue, no supporter bookkeeping.
int hmax_value_iteration(const GroundTask& t, const State& s) {
    const long long inf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> cost(t.atoms.size(), inf);
    for (std::size_t i = 0; i < t.atoms.size(); ++i)
        if (s.test(i)) cost[i] = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& a : t.actions) {
            long long c = 0;
            for (int pre : a.pre)
                c = std::max(c, cost[static_cast<std::size_t>(pre)]);
            if (c >= inf) continue;
            for (int addp : a.add)
                if (c + 1 < cost[static_cast<std::size_t>(addp)]) {
                    cost[static_cast<std::size_t>(addp)] = c + 1;
                    changed = true;
                }
        }
    }
    long long h = 0;
    for (int g : t.goal) h = std::max(h, cost[static_cast<std::size_t>(g)]);
    return h >= inf ? kUnreachable : static_cast<int>(h);
}

// Minimum relaxed-plan length by breadth-first search over monotone states.
int optimal_relaxed_plan_length(const GroundTask& t, const State& s) {
    std::queue<State> open;
    std::unordered_set<State, BitsetHash> seen;
    open.push(s);
    seen.insert(s);
    int depth = 0;
    while (!open.empty()) {
        const std::size_t layer = open.size();
        for (std::size_t i = 0; i < layer; ++i) {
            State cur = open.front();
            open.pop();
            if (t.is_goal(cur)) return depth;
            for (const auto& a : t.actions) {
                if (!a.pre_mask.is_subset_of(cur)) continue;
                State next = cur;
                for (int addp : a.add) next.set(static_cast<std::size_t>(addp));
                if (seen.insert(next).second) open.push(next);
            }
        }
        ++depth;
        REQUIRE(depth < 64);
    }
    return kUnreachable;
}

}  // namespace

TEST_CASE("blind is 0 exactly on goal states") {
    const Domain d = parse_domain(read_fixture("blocksworld.pddl"));
    const Problem trivial = parse_problem(read_fixture("bw3_trivial.pddl"), d);
    const GroundTask tt = ground(d, trivial);
    CHECK(blind(tt, tt.init) == 0);

    const GroundTask t = bw3_task();
    CHECK(blind(t, t.init) == 1);
}

TEST_CASE("goal_count counts missing goal atoms and is monotone") {
    const GroundTask t = bw3_task();
    // goal: (on c b), (on b a), (ontable a); init satisfies only (ontable a)
    CHECK(goal_count(t, t.init) == 2);

    State more = t.init;
    for (int g : t.goal) {
        const int before = goal_count(t, more);
        more.set(static_cast<std::size_t>(g));
        CHECK(goal_count(t, more) <= before);
    }
    CHECK(goal_count(t, more) == 0);
}

TEST_CASE("hmax equals the value-iteration oracle on fixtures") {
    const GroundTask t = bw3_task();
    CHECK(hmax(t, t.init) == hmax_value_iteration(t, t.init));
    CHECK(hmax(t, t.init) > 0);

    // every state one step deep agrees too
    for (const auto& [idx, s] : successors(t, t.init)) {
        (void)idx;
        CHECK(hmax(t, s) == hmax_value_iteration(t, s));
        for (const auto& [idx2, s2] : successors(t, s)) {
            (void)idx2;
            CHECK(hmax(t, s2) == hmax_value_iteration(t, s2));
        }
    }

    const Domain dl = parse_domain(read_fixture("logistics.pddl"));
    const Problem pl = parse_problem(read_fixture("log1.pddl"), dl);
    const GroundTask tl = ground(dl, pl);
    CHECK(hmax(tl, tl.init) == hmax_value_iteration(tl, tl.init));
}

TEST_CASE("hmax is 0 on goal states and infinite when unreachable") {
    const Domain d = parse_domain(read_fixture("blocksworld.pddl"));
    const Problem trivial = parse_problem(read_fixture("bw3_trivial.pddl"), d);
    const GroundTask tt = ground(d, trivial);
    CHECK(hmax(tt, tt.init) == 0);

    const Problem bad = parse_problem(read_fixture("bw_unsolvable.pddl"), d);
    const GroundTask tb = ground(d, bad);
    CHECK(hmax(tb, tb.init) == kUnreachable);
}

TEST_CASE("ff on a goal state is the empty relaxed plan") {
    const Domain d = parse_domain(read_fixture("blocksworld.pddl"));
    const Problem trivial = parse_problem(read_fixture("bw3_trivial.pddl"), d);
    const GroundTask t = ground(d, trivial);
    const auto info = ff(t, t.init);
    CHECK(info.ff_value == 0);
    CHECK(info.total_ignored_effects == 0);
    CHECK(info.mean_ignored_effects == 0.0);
}

TEST_CASE("ff dominates hmax and at least matches the optimal relaxed plan") {
    const GroundTask t = bw3_task();
    const auto info = ff(t, t.init);
    CHECK(info.ff_value >= hmax(t, t.init));
    CHECK(info.ff_value >= optimal_relaxed_plan_length(t, t.init));
    CHECK(info.ff_value < kUnreachable);
    CHECK(info.total_ignored_effects >= 0);

    for (const auto& [idx, s] : successors(t, t.init)) {
        (void)idx;
        const auto fi = ff(t, s);
        CHECK(fi.ff_value >= hmax(t, s));
        CHECK(fi.ff_value >= optimal_relaxed_plan_length(t, s));
    }

    const Domain dl = parse_domain(read_fixture("logistics.pddl"));
    const Problem pl = parse_problem(read_fixture("log1.pddl"), dl);
    const GroundTask tl = ground(dl, pl);
    const auto li = ff(tl, tl.init);
    CHECK(li.ff_value >= hmax(tl, tl.init));
    CHECK(li.ff_value >= optimal_relaxed_plan_length(tl, tl.init));
}

TEST_CASE("ff is infinite exactly when hmax is") {
    const Domain d = parse_domain(read_fixture("blocksworld.pddl"));
    const Problem bad = parse_problem(read_fixture("bw_unsolvable.pddl"), d);
    const GroundTask t = ground(d, bad);
    CHECK(ff(t, t.init).ff_value == kUnreachable);
}

TEST_CASE("heuristics are deterministic") {
    const GroundTask t = bw3_task();
    const auto a = ff(t, t.init);
    const auto b = ff(t, t.init);
    CHECK(a.ff_value == b.ff_value);
    CHECK(a.total_ignored_effects == b.total_ignored_effects);
    CHECK(a.mean_ignored_effects == b.mean_ignored_effects);
    CHECK(hmax(t, t.init) == hmax(t, t.init));
}

TEST_CASE("mean ignored effects is total over plan length") {
    const GroundTask t = bw3_task();
    for (const auto& [idx, s] : successors(t, t.init)) {
        (void)idx;
        const auto info = ff(t, s);
        if (info.ff_value > 0)
            CHECK(info.mean_ignored_effects ==
                  Catch::Approx(static_cast<double>(info.total_ignored_effects) /
                                info.ff_value));
    }
}
