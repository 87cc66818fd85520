#pragma once

// STRIPS + :typing subset of PDDL: positive conjunctive preconditions and
// goals, add/delete effects, unit action costs (:action-costs metadata is
// accepted and ignored). Anything outside the subset is a loud parse error
// naming the construct and source line.

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tglearn/bitset.hpp"

namespace tglearn::pddl {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// s-expressions

struct SExpr {
    bool is_list = false;
    std::string atom;          // meaningful when !is_list
    std::vector<SExpr> items;  // meaningful when is_list
    int line = 0;

    const std::string& head() const {
        static const std::string empty;
        if (!is_list || items.empty() || items[0].is_list) return empty;
        return items[0].atom;
    }
};

namespace detail {

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

struct Token {
    std::string text;
    int line;
};

inline std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    int line = 1;
    std::string cur;
    int cur_line = 1;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back({lower(cur), cur_line});
            cur.clear();
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == ';') {
            flush();
            while (i < text.size() && text[i] != '\n') ++i;
            --i;
        } else if (c == '\n') {
            flush();
            ++line;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (c == '(' || c == ')') {
            flush();
            out.push_back({std::string(1, c), line});
        } else {
            if (cur.empty()) cur_line = line;
            cur.push_back(c);
        }
    }
    flush();
    return out;
}

inline SExpr parse_sexpr(const std::vector<Token>& toks, std::size_t& pos) {
    if (pos >= toks.size()) throw ParseError("unexpected end of input");
    const Token& t = toks[pos];
    if (t.text == ")")
        throw ParseError("unexpected ')' at line " + std::to_string(t.line));
    if (t.text == "(") {
        SExpr e;
        e.is_list = true;
        e.line = t.line;
        ++pos;
        while (pos < toks.size() && toks[pos].text != ")")
            e.items.push_back(parse_sexpr(toks, pos));
        if (pos >= toks.size())
            throw ParseError("missing ')' for list opened at line " +
                             std::to_string(t.line));
        ++pos;  // consume ')'
        return e;
    }
    SExpr e;
    e.atom = t.text;
    e.line = t.line;
    ++pos;
    return e;
}

inline SExpr parse_top(const std::string& text) {
    const auto toks = tokenize(text);
    std::size_t pos = 0;
    SExpr e = parse_sexpr(toks, pos);
    if (pos != toks.size())
        throw ParseError("trailing tokens after top-level form at line " +
                         std::to_string(toks[pos].line));
    return e;
}

[[noreturn]] inline void fail(const std::string& what, int line) {
    throw ParseError(what + " (line " + std::to_string(line) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// domain / problem model

struct TypedName {
    std::string name;
    std::string type;  // parent type when used in :types
    bool operator==(const TypedName&) const = default;
};

struct Predicate {
    std::string name;
    std::vector<TypedName> params;
    bool operator==(const Predicate&) const = default;
};

struct Atom {
    std::string pred;
    std::vector<std::string> args;
    bool operator==(const Atom&) const = default;
};

struct ActionSchema {
    std::string name;
    std::vector<TypedName> params;
    std::vector<Atom> pre;
    std::vector<Atom> add;
    std::vector<Atom> del;
    bool operator==(const ActionSchema&) const = default;
};

struct Domain {
    std::string name;
    std::vector<std::string> requirements;
    std::vector<TypedName> types;  // (type, parent) in declaration order
    std::vector<TypedName> constants;
    std::vector<Predicate> predicates;
    std::vector<ActionSchema> actions;
    bool operator==(const Domain&) const = default;

    bool type_declared(const std::string& t) const {
        if (t == "object") return true;
        for (const auto& d : types)
            if (d.name == t || d.type == t) return true;
        return false;
    }

    /// true iff t == ancestor or ancestor is reachable via parent links
    bool is_subtype(const std::string& t, const std::string& ancestor) const {
        if (ancestor == "object" || t == ancestor) return true;
        std::string cur = t;
        for (std::size_t hops = 0; hops <= types.size(); ++hops) {
            bool advanced = false;
            for (const auto& d : types)
                if (d.name == cur) {
                    cur = d.type;
                    advanced = true;
                    break;
                }
            if (!advanced) return false;
            if (cur == ancestor) return true;
        }
        return false;
    }

    const Predicate* find_predicate(const std::string& name) const {
        for (const auto& p : predicates)
            if (p.name == name) return &p;
        return nullptr;
    }
};

struct Problem {
    std::string name;
    std::string domain_name;
    std::vector<TypedName> objects;  // problem objects plus domain constants
    std::vector<Atom> init;
    std::vector<Atom> goal;
    bool operator==(const Problem&) const = default;
};

// ---------------------------------------------------------------------------
// parsing

namespace detail {

// names... [- type] repeated; default_type applies to a trailing untyped run
inline std::vector<TypedName> parse_typed_list(const SExpr& list,
                                               std::size_t from,
                                               const std::string& default_type) {
    std::vector<TypedName> out;
    std::vector<std::string> pending;
    for (std::size_t i = from; i < list.items.size(); ++i) {
        const SExpr& it = list.items[i];
        if (it.is_list) fail("expected name in typed list", it.line);
        if (it.atom == "-") {
            if (i + 1 >= list.items.size() || list.items[i + 1].is_list)
                fail("expected type after '-'", it.line);
            const std::string& type = list.items[i + 1].atom;
            for (auto& n : pending) out.push_back({n, type});
            pending.clear();
            ++i;
        } else {
            pending.push_back(it.atom);
        }
    }
    for (auto& n : pending) out.push_back({n, default_type});
    return out;
}

inline Atom parse_atom(const SExpr& e) {
    if (!e.is_list || e.items.empty() || e.items[0].is_list)
        fail("expected atom", e.line);
    Atom a;
    a.pred = e.items[0].atom;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
        if (e.items[i].is_list) fail("expected atom argument", e.items[i].line);
        a.args.push_back(e.items[i].atom);
    }
    return a;
}

inline const std::set<std::string> kUnsupported = {
    "not", "or", "when", "forall", "exists", "imply", "=", ">=", "<=", "<",
    ">"};

inline std::vector<Atom> parse_conjunction(const SExpr& e,
                                           const char* context) {
    std::vector<Atom> out;
    auto add_atom = [&](const SExpr& item) {
        if (!item.is_list) fail(std::string("malformed ") + context, item.line);
        const std::string& h = item.head();
        if (kUnsupported.count(h))
            fail("unsupported construct \"" + h + "\" in " + context, item.line);
        out.push_back(parse_atom(item));
    };
    if (e.head() == "and") {
        for (std::size_t i = 1; i < e.items.size(); ++i) add_atom(e.items[i]);
    } else if (e.is_list && e.items.empty()) {
        // empty conjunction
    } else {
        add_atom(e);
    }
    return out;
}

inline void parse_effect(const SExpr& e, ActionSchema& schema) {
    auto one = [&](const SExpr& item) {
        if (!item.is_list) fail("malformed effect", item.line);
        const std::string& h = item.head();
        if (h == "not") {
            if (item.items.size() != 2 || !item.items[1].is_list)
                fail("malformed delete effect", item.line);
            schema.del.push_back(parse_atom(item.items[1]));
        } else if (h == "increase" || h == "decrease" || h == "assign") {
            // :action-costs metadata; unit costs are assumed throughout
        } else if (kUnsupported.count(h)) {
            fail("unsupported construct \"" + h + "\" in effect", item.line);
        } else {
            schema.add.push_back(parse_atom(item));
        }
    };
    if (e.head() == "and") {
        for (std::size_t i = 1; i < e.items.size(); ++i) one(e.items[i]);
    } else {
        one(e);
    }
}

inline void check_schema_atoms(const Domain& d, const ActionSchema& s,
                               const std::vector<Atom>& atoms, int line) {
    for (const auto& a : atoms) {
        const Predicate* p = d.find_predicate(a.pred);
        if (!p)
            fail("action " + s.name + " uses undeclared predicate \"" + a.pred +
                     "\"",
                 line);
        if (p->params.size() != a.args.size())
            fail("arity mismatch for predicate \"" + a.pred + "\" in action " +
                     s.name,
                 line);
        for (const auto& arg : a.args) {
            if (!arg.empty() && arg[0] == '?') {
                bool bound = false;
                for (const auto& prm : s.params) bound |= (prm.name == arg);
                if (!bound)
                    fail("unbound variable " + arg + " in action " + s.name,
                         line);
            } else {
                bool known = false;
                for (const auto& c : d.constants) known |= (c.name == arg);
                if (!known)
                    fail("unknown constant \"" + arg + "\" in action " + s.name,
                         line);
            }
        }
    }
}

}  // namespace detail

inline Domain parse_domain(const std::string& text) {
    using namespace detail;
    const SExpr top = parse_top(text);
    if (top.head() != "define") fail("expected (define (domain ...))", top.line);

    Domain d;
    for (std::size_t i = 1; i < top.items.size(); ++i) {
        const SExpr& sec = top.items[i];
        const std::string& h = sec.head();
        if (h == "domain") {
            if (sec.items.size() != 2) fail("malformed (domain name)", sec.line);
            d.name = sec.items[1].atom;
        } else if (h == ":requirements") {
            for (std::size_t k = 1; k < sec.items.size(); ++k) {
                const std::string& req = sec.items[k].atom;
                if (req != ":strips" && req != ":typing" &&
                    req != ":action-costs")
                    fail("unsupported requirement \"" + req + "\"",
                         sec.items[k].line);
                d.requirements.push_back(req);
            }
        } else if (h == ":types") {
            d.types = parse_typed_list(sec, 1, "object");
        } else if (h == ":constants") {
            d.constants = parse_typed_list(sec, 1, "object");
        } else if (h == ":predicates") {
            for (std::size_t k = 1; k < sec.items.size(); ++k) {
                const SExpr& pe = sec.items[k];
                if (!pe.is_list || pe.items.empty())
                    fail("malformed predicate declaration", pe.line);
                Predicate p;
                p.name = pe.items[0].atom;
                p.params = parse_typed_list(pe, 1, "object");
                d.predicates.push_back(p);
            }
        } else if (h == ":functions") {
            // accepted and ignored: carries (total-cost) under :action-costs
        } else if (h == ":action") {
            if (sec.items.size() < 2 || sec.items[1].is_list)
                fail("malformed :action", sec.line);
            ActionSchema s;
            s.name = sec.items[1].atom;
            for (std::size_t k = 2; k + 1 < sec.items.size(); k += 2) {
                const std::string& key = sec.items[k].atom;
                const SExpr& val = sec.items[k + 1];
                if (key == ":parameters") {
                    if (!val.is_list) fail("malformed :parameters", val.line);
                    s.params = parse_typed_list(val, 0, "object");
                } else if (key == ":precondition") {
                    s.pre = parse_conjunction(val, "precondition");
                } else if (key == ":effect") {
                    parse_effect(val, s);
                } else {
                    fail("unsupported action field \"" + key + "\"", val.line);
                }
            }
            d.actions.push_back(s);
        } else {
            fail("unsupported domain section \"" + h + "\"", sec.line);
        }
    }

    // referenced types and predicates must be declared
    for (const auto& t : d.types)
        if (!d.type_declared(t.type))
            throw ParseError("undeclared parent type \"" + t.type + "\"");
    for (const auto& p : d.predicates)
        for (const auto& prm : p.params)
            if (!d.type_declared(prm.type))
                throw ParseError("undeclared type \"" + prm.type +
                                 "\" in predicate " + p.name);
    for (const auto& s : d.actions) {
        for (const auto& prm : s.params)
            if (!d.type_declared(prm.type))
                throw ParseError("undeclared type \"" + prm.type +
                                 "\" in action " + s.name);
        detail::check_schema_atoms(d, s, s.pre, 0);
        detail::check_schema_atoms(d, s, s.add, 0);
        detail::check_schema_atoms(d, s, s.del, 0);
    }
    return d;
}

inline Problem parse_problem(const std::string& text, const Domain& d) {
    using namespace detail;
    const SExpr top = parse_top(text);
    if (top.head() != "define")
        fail("expected (define (problem ...))", top.line);

    Problem p;
    for (const auto& c : d.constants) p.objects.push_back(c);

    for (std::size_t i = 1; i < top.items.size(); ++i) {
        const SExpr& sec = top.items[i];
        const std::string& h = sec.head();
        if (h == "problem") {
            if (sec.items.size() != 2) fail("malformed (problem name)", sec.line);
            p.name = sec.items[1].atom;
        } else if (h == ":domain") {
            if (sec.items.size() != 2) fail("malformed (:domain name)", sec.line);
            p.domain_name = sec.items[1].atom;
            if (p.domain_name != d.name)
                fail("problem references domain \"" + p.domain_name +
                         "\" but got \"" + d.name + "\"",
                     sec.line);
        } else if (h == ":objects") {
            for (auto& o : parse_typed_list(sec, 1, "object"))
                p.objects.push_back(o);
        } else if (h == ":init") {
            for (std::size_t k = 1; k < sec.items.size(); ++k) {
                const SExpr& e = sec.items[k];
                if (e.head() == "=") continue;  // (= (total-cost) 0)
                p.init.push_back(parse_atom(e));
            }
        } else if (h == ":goal") {
            if (sec.items.size() != 2) fail("malformed :goal", sec.line);
            p.goal = parse_conjunction(sec.items[1], "goal");
        } else if (h == ":metric") {
            // minimize (total-cost): accepted and ignored
        } else {
            fail("unsupported problem section \"" + h + "\"", sec.line);
        }
    }

    // validation against the domain
    auto object_type = [&](const std::string& name) -> const std::string* {
        for (const auto& o : p.objects)
            if (o.name == name) return &o.type;
        return nullptr;
    };
    for (const auto& o : p.objects)
        if (!d.type_declared(o.type))
            throw ParseError("object " + o.name + " has undeclared type \"" +
                             o.type + "\"");
    auto check_ground = [&](const std::vector<Atom>& atoms, const char* where) {
        for (const auto& a : atoms) {
            const Predicate* pd = d.find_predicate(a.pred);
            if (!pd)
                throw ParseError(std::string(where) +
                                 " references undeclared predicate \"" + a.pred +
                                 "\"");
            if (pd->params.size() != a.args.size())
                throw ParseError("arity mismatch for \"" + a.pred + "\" in " +
                                 where);
            for (std::size_t k = 0; k < a.args.size(); ++k) {
                const std::string* t = object_type(a.args[k]);
                if (!t)
                    throw ParseError("unknown object \"" + a.args[k] + "\" in " +
                                     where);
                if (!d.is_subtype(*t, pd->params[k].type))
                    throw ParseError("object \"" + a.args[k] +
                                     "\" has incompatible type in " + where);
            }
        }
    };
    check_ground(p.init, "init");
    check_ground(p.goal, "goal");
    return p;
}

// ---------------------------------------------------------------------------
// grounding

using State = Bitset;

struct GroundAction {
    std::string name;  // e.g. "(stack b1 b2)"
    std::vector<int> pre;
    std::vector<int> add;
    std::vector<int> del;  // normalized: disjoint from add (delete-then-add)
    Bitset pre_mask;
    Bitset add_mask;
    Bitset del_mask;
};

struct GroundTask {
    std::vector<std::string> atoms;  // index = bit position, sorted
    std::map<std::string, int> atom_index;
    std::vector<GroundAction> actions;
    State init;
    std::vector<int> goal;
    Bitset goal_mask;

    bool is_goal(const State& s) const { return goal_mask.is_subset_of(s); }
};

namespace detail {

inline std::string atom_key(const Atom& a) {
    std::string s = "(" + a.pred;
    for (const auto& arg : a.args) {
        s += ' ';
        s += arg;
    }
    s += ')';
    return s;
}

inline Atom substitute(const Atom& a, const std::map<std::string, std::string>& bind) {
    Atom g;
    g.pred = a.pred;
    for (const auto& arg : a.args) {
        auto it = bind.find(arg);
        g.args.push_back(it == bind.end() ? arg : it->second);
    }
    return g;
}

}  // namespace detail

/// Grounds every type-consistent, injective instantiation of each schema
/// (an object may appear at most once per instance; self-referential
/// instances like stacking a block onto itself are never generated). Atom
/// indices are assigned lexicographically by predicate name then arguments.
inline GroundTask ground(const Domain& d, const Problem& p) {
    using detail::atom_key;

    struct Instance {
        std::string name;
        std::vector<Atom> pre, add, del;
    };
    std::vector<Instance> instances;

    for (const auto& schema : d.actions) {
        // candidate objects per parameter, in declaration order
        std::vector<std::vector<std::string>> cands(schema.params.size());
        for (std::size_t k = 0; k < schema.params.size(); ++k)
            for (const auto& o : p.objects)
                if (d.is_subtype(o.type, schema.params[k].type))
                    cands[k].push_back(o.name);

        std::vector<std::size_t> pick(schema.params.size(), 0);
        std::map<std::string, std::string> bind;
        std::vector<std::string> chosen;
        std::function<void(std::size_t)> enumerate = [&](std::size_t k) {
            if (k == schema.params.size()) {
                Instance inst;
                inst.name = "(" + schema.name;
                for (const auto& c : chosen) inst.name += ' ' + c;
                inst.name += ')';
                for (const auto& a : schema.pre)
                    inst.pre.push_back(detail::substitute(a, bind));
                for (const auto& a : schema.add)
                    inst.add.push_back(detail::substitute(a, bind));
                for (const auto& a : schema.del)
                    inst.del.push_back(detail::substitute(a, bind));
                instances.push_back(std::move(inst));
                return;
            }
            for (const auto& obj : cands[k]) {
                if (std::find(chosen.begin(), chosen.end(), obj) != chosen.end())
                    continue;  // injective binding
                bind[schema.params[k].name] = obj;
                chosen.push_back(obj);
                enumerate(k + 1);
                chosen.pop_back();
                bind.erase(schema.params[k].name);
            }
        };
        enumerate(0);
    }

    // atom universe: everything mentioned by init, goal, or a ground action
    std::set<std::string> atom_set;
    for (const auto& a : p.init) atom_set.insert(atom_key(a));
    for (const auto& a : p.goal) atom_set.insert(atom_key(a));
    for (const auto& inst : instances) {
        for (const auto& a : inst.pre) atom_set.insert(atom_key(a));
        for (const auto& a : inst.add) atom_set.insert(atom_key(a));
        for (const auto& a : inst.del) atom_set.insert(atom_key(a));
    }

    GroundTask t;
    t.atoms.assign(atom_set.begin(), atom_set.end());
    for (std::size_t i = 0; i < t.atoms.size(); ++i)
        t.atom_index[t.atoms[i]] = static_cast<int>(i);

    const std::size_t width = t.atoms.size();
    auto to_indices = [&](const std::vector<Atom>& atoms) {
        std::vector<int> out;
        for (const auto& a : atoms) out.push_back(t.atom_index.at(atom_key(a)));
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    };
    auto to_mask = [&](const std::vector<int>& idx) {
        Bitset b(width);
        for (int i : idx) b.set(static_cast<std::size_t>(i));
        return b;
    };

    for (auto& inst : instances) {
        GroundAction ga;
        ga.name = std::move(inst.name);
        ga.pre = to_indices(inst.pre);
        ga.add = to_indices(inst.add);
        ga.del = to_indices(inst.del);
        // delete-then-add semantics: an atom both deleted and added ends up
        // true, so drop it from the delete list
        std::vector<int> norm;
        std::set_difference(ga.del.begin(), ga.del.end(), ga.add.begin(),
                            ga.add.end(), std::back_inserter(norm));
        ga.del = std::move(norm);
        ga.pre_mask = to_mask(ga.pre);
        ga.add_mask = to_mask(ga.add);
        ga.del_mask = to_mask(ga.del);
        t.actions.push_back(std::move(ga));
    }

    t.init = State(width);
    for (const auto& a : p.init)
        t.init.set(static_cast<std::size_t>(t.atom_index.at(atom_key(a))));
    {
        std::vector<Atom> goal_atoms = p.goal;
        t.goal = to_indices(goal_atoms);
        t.goal_mask = to_mask(t.goal);
    }
    return t;
}

/// Applicable actions paired with their successor states, ordered by action
/// index.
inline std::vector<std::pair<int, State>> successors(const GroundTask& t,
                                                     const State& s) {
    std::vector<std::pair<int, State>> out;
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
        const GroundAction& a = t.actions[i];
        if (a.pre_mask.is_subset_of(s))
            out.emplace_back(static_cast<int>(i),
                             s.apply(a.del_mask, a.add_mask));
    }
    return out;
}

inline bool is_goal(const GroundTask& t, const State& s) {
    return t.is_goal(s);
}

// ---------------------------------------------------------------------------
// pretty-printing (round-trips through parse_domain / parse_problem)

namespace detail {

inline void print_typed_list(std::ostringstream& os,
                             const std::vector<TypedName>& list) {
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (i) os << ' ';
        os << list[i].name << " - " << list[i].type;
    }
}

inline void print_atom(std::ostringstream& os, const Atom& a) {
    os << '(' << a.pred;
    for (const auto& arg : a.args) os << ' ' << arg;
    os << ')';
}

inline void print_conjunction(std::ostringstream& os,
                              const std::vector<Atom>& atoms) {
    os << "(and";
    for (const auto& a : atoms) {
        os << ' ';
        print_atom(os, a);
    }
    os << ')';
}

}  // namespace detail

inline std::string to_pddl(const Domain& d) {
    std::ostringstream os;
    os << "(define (domain " << d.name << ")\n";
    if (!d.requirements.empty()) {
        os << "  (:requirements";
        for (const auto& r : d.requirements) os << ' ' << r;
        os << ")\n";
    }
    if (!d.types.empty()) {
        os << "  (:types ";
        detail::print_typed_list(os, d.types);
        os << ")\n";
    }
    if (!d.constants.empty()) {
        os << "  (:constants ";
        detail::print_typed_list(os, d.constants);
        os << ")\n";
    }
    os << "  (:predicates";
    for (const auto& p : d.predicates) {
        os << " (" << p.name;
        if (!p.params.empty()) {
            os << ' ';
            detail::print_typed_list(os, p.params);
        }
        os << ')';
    }
    os << ")\n";
    for (const auto& a : d.actions) {
        os << "  (:action " << a.name << "\n    :parameters (";
        detail::print_typed_list(os, a.params);
        os << ")\n    :precondition ";
        detail::print_conjunction(os, a.pre);
        os << "\n    :effect (and";
        for (const auto& atom : a.add) {
            os << ' ';
            detail::print_atom(os, atom);
        }
        for (const auto& atom : a.del) {
            os << " (not ";
            detail::print_atom(os, atom);
            os << ')';
        }
        os << "))\n";
    }
    os << ")\n";
    return os.str();
}

inline std::string to_pddl(const Problem& p, const Domain& d) {
    std::ostringstream os;
    os << "(define (problem " << p.name << ")\n  (:domain " << p.domain_name
       << ")\n  (:objects ";
    std::vector<TypedName> own;  // skip domain constants
    for (const auto& o : p.objects) {
        bool is_const = false;
        for (const auto& c : d.constants) is_const |= (c == o);
        if (!is_const) own.push_back(o);
    }
    detail::print_typed_list(os, own);
    os << ")\n  (:init";
    for (const auto& a : p.init) {
        os << ' ';
        detail::print_atom(os, a);
    }
    os << ")\n  (:goal ";
    detail::print_conjunction(os, p.goal);
    os << ")\n)\n";
    return os.str();
}

}  // namespace tglearn::pddl
