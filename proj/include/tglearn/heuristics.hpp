#pragma once

// Delete-relaxation heuristics over a GroundTask. All functions are pure and
// deterministic, including relaxed-plan tie-breaking: supporters are the
// cheapest achiever by h^max cost, then the lowest action index.

#include <limits>
#include <queue>
#include <vector>

#include "tglearn/pddl.hpp"

namespace tglearn::heuristics {

using pddl::GroundTask;
using pddl::State;

/// Sentinel for "goal unreachable in the delete relaxation".
inline constexpr int kUnreachable = std::numeric_limits<int>::max();

/// 0 on goal states, 1 elsewhere (unit costs); admissible.
inline int blind(const GroundTask& t, const State& s) {
    return t.is_goal(s) ? 0 : 1;
}

/// Number of goal atoms not satisfied by s. A feature, not a bound.
inline int goal_count(const GroundTask& t, const State& s) {
    int n = 0;
    for (int g : t.goal)
        if (!s.test(static_cast<std::size_t>(g))) ++n;
    return n;
}

namespace detail {

struct Relaxation {
    std::vector<int> atom_cost;       // kUnreachable if never achieved
    std::vector<int> supporter;       // achieving action, -1 for init atoms
    std::vector<int> action_cost;     // max precondition cost at firing
    int hmax = 0;
};

// Generalized Dijkstra over the delete relaxation: atoms are finalized in
// nondecreasing cost order; an action fires when its last precondition is
// finalized, at the cost of that precondition.
inline Relaxation relaxed_exploration(const GroundTask& t, const State& s) {
    const std::size_t n_atoms = t.atoms.size();
    const std::size_t n_actions = t.actions.size();

    Relaxation r;
    r.atom_cost.assign(n_atoms, kUnreachable);
    r.supporter.assign(n_atoms, -1);
    r.action_cost.assign(n_actions, kUnreachable);

    // atom -> actions with that atom as precondition
    // (rebuilt per call; tasks at desk scale keep this cheap)
    std::vector<std::vector<int>> consumers(n_atoms);
    std::vector<int> unsatisfied(n_actions);
    for (std::size_t a = 0; a < n_actions; ++a) {
        unsatisfied[a] = static_cast<int>(t.actions[a].pre.size());
        for (int pre : t.actions[a].pre)
            consumers[static_cast<std::size_t>(pre)].push_back(
                static_cast<int>(a));
    }

    using Entry = std::pair<int, int>;  // (cost, atom)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

    auto offer = [&](int atom, int cost, int action) {
        auto idx = static_cast<std::size_t>(atom);
        if (cost < r.atom_cost[idx]) {
            r.atom_cost[idx] = cost;
            r.supporter[idx] = action;
            open.emplace(cost, atom);
        } else if (cost == r.atom_cost[idx] && r.supporter[idx] >= 0 &&
                   action >= 0 && action < r.supporter[idx]) {
            r.supporter[idx] = action;  // equal-cost achiever, lower index wins
        }
    };

    auto fire = [&](int action, int cost) {
        r.action_cost[static_cast<std::size_t>(action)] = cost;
        for (int addp : t.actions[static_cast<std::size_t>(action)].add)
            offer(addp, cost + 1, action);
    };

    for (std::size_t i = 0; i < n_atoms; ++i)
        if (s.test(i)) {
            r.atom_cost[i] = 0;
            open.emplace(0, static_cast<int>(i));
        }
    for (std::size_t a = 0; a < n_actions; ++a)
        if (unsatisfied[a] == 0) fire(static_cast<int>(a), 0);

    std::vector<char> closed(n_atoms, 0);
    while (!open.empty()) {
        const auto [cost, atom] = open.top();
        open.pop();
        const auto idx = static_cast<std::size_t>(atom);
        if (closed[idx]) continue;
        if (cost > r.atom_cost[idx]) continue;
        closed[idx] = 1;
        for (int a : consumers[idx])
            if (--unsatisfied[static_cast<std::size_t>(a)] == 0) fire(a, cost);
    }

    r.hmax = 0;
    for (int g : t.goal) {
        const int c = r.atom_cost[static_cast<std::size_t>(g)];
        if (c == kUnreachable) {
            r.hmax = kUnreachable;
            break;
        }
        r.hmax = std::max(r.hmax, c);
    }
    return r;
}

}  // namespace detail

/// h^max: cost of the most expensive goal atom under the relaxation
/// fixpoint; admissible. kUnreachable iff the goal is unreachable in the
/// delete relaxation.
inline int hmax(const GroundTask& t, const State& s) {
    return detail::relaxed_exploration(t, s).hmax;
}

struct RelaxedPlanInfo {
    int ff_value = 0;                  // relaxed-plan length, kUnreachable if none
    int total_ignored_effects = 0;     // add effects already true during replay
    double mean_ignored_effects = 0.0; // total / plan length, 0 for empty plan
};

/// FF: extracts a relaxed plan by backward supporter marking from the goal
/// atoms, then replays it in layer order against the monotone relaxed state
/// to count ignored (already satisfied) add effects.
inline RelaxedPlanInfo ff(const GroundTask& t, const State& s) {
    const auto r = detail::relaxed_exploration(t, s);
    if (r.hmax == kUnreachable)
        return RelaxedPlanInfo{kUnreachable, 0, 0.0};

    std::vector<char> marked(t.atoms.size(), 0);
    std::vector<char> in_plan(t.actions.size(), 0);
    std::vector<int> stack;
    for (int g : t.goal)
        if (r.atom_cost[static_cast<std::size_t>(g)] > 0 &&
            !marked[static_cast<std::size_t>(g)]) {
            marked[static_cast<std::size_t>(g)] = 1;
            stack.push_back(g);
        }
    std::vector<int> plan;
    while (!stack.empty()) {
        const int atom = stack.back();
        stack.pop_back();
        const int a = r.supporter[static_cast<std::size_t>(atom)];
        if (a < 0 || in_plan[static_cast<std::size_t>(a)]) continue;
        in_plan[static_cast<std::size_t>(a)] = 1;
        plan.push_back(a);
        for (int pre : t.actions[static_cast<std::size_t>(a)].pre)
            if (r.atom_cost[static_cast<std::size_t>(pre)] > 0 &&
                !marked[static_cast<std::size_t>(pre)]) {
                marked[static_cast<std::size_t>(pre)] = 1;
                stack.push_back(pre);
            }
    }

    // layer order: firing cost, then action index
    std::sort(plan.begin(), plan.end(), [&](int a, int b) {
        const int ca = r.action_cost[static_cast<std::size_t>(a)];
        const int cb = r.action_cost[static_cast<std::size_t>(b)];
        return ca != cb ? ca < cb : a < b;
    });

    RelaxedPlanInfo info;
    info.ff_value = static_cast<int>(plan.size());
    State relaxed = s;
    for (int a : plan)
        for (int addp : t.actions[static_cast<std::size_t>(a)].add) {
            const auto idx = static_cast<std::size_t>(addp);
            if (relaxed.test(idx))
                ++info.total_ignored_effects;
            else
                relaxed.set(idx);
        }
    info.mean_ignored_effects =
        plan.empty() ? 0.0
                     : static_cast<double>(info.total_ignored_effects) /
                           static_cast<double>(plan.size());
    return info;
}

}  // namespace tglearn::heuristics
