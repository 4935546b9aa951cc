#pragma once

// Enticement systems over the interval graph of a template, the
// inclusion-minimal peeling order, the greedy avoid-interval solver, and the
// significant / separated approximation pipeline.

#include "pgn/template.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pgn {

struct IntervalGraph {
    struct Node {
        IntervalRef ref;
        Rational start;
        Rational end;
    };
    std::vector<Node> nodes;
    std::vector<std::vector<int>> adjacency;

    bool edge(int i, int j) const;
    int index_of(const IntervalRef& ref) const;
};

IntervalGraph overlap_graph(const GTemplate& f);

// Peels inclusion-minimal intervals layer by layer; each peeled vertex must
// have residual degree <= 2n-4. Throws DegreeBoundViolated otherwise.
std::vector<std::vector<int>> constructible_peel(const IntervalGraph& g, int n);

struct Enticement {
    std::vector<IntervalRef> support;   // sorted, aligned with coefficients
    std::vector<Rational> coefficients;
    Rational constant;
    Rational avoid_upper;  // satisfied iff value is outside [0, avoid_upper]

    Rational evaluate(const std::map<IntervalRef, Rational>& nu) const;
    bool satisfied(const std::map<IntervalRef, Rational>& nu) const;
};

struct EnticementSystem {
    IntervalGraph graph;
    std::vector<Enticement> enticements;
    Rational c;        // base significance constant
    Rational c1;       // variable range [0, c1]
    Rational epsilon;  // min |coefficient| over the system
    int r = 0;         // max support size
    int R = 0;         // max enticements sharing one support
    int dim_n = 2;     // ambient dimension, for the degree bound 2n-4

    // C1 that the counting argument guarantees solvable.
    Rational theoretical_bound() const;
};

struct SolveResult {
    bool feasible = false;
    std::map<IntervalRef, Rational> nu;
    std::optional<IntervalRef> blocking;  // set when infeasible
    Rational theoretical_bound;
};

// Greedy assignment in reverse peel order; minimum feasible value with the
// exactness margin c/1024 above forbidden right endpoints.
SolveResult solve(const EnticementSystem& system);

// Enticements whose solutions make the shift by (c1, nu) C-significant.
EnticementSystem significance_system(const GTemplate& f, const Rational& c, const Rational& c1);

// Enticements forcing the shifted null vertices at least C away from every
// other vertex. Requires f to be 5*c1-significant.
EnticementSystem separation_system(const GTemplate& f, const Rational& c, const Rational& c1);

struct ApproximationResult {
    GTemplate result;
    Rational closeness;            // measured constant C' with closeness(f, f', C')
    Rational achieved_shift_bound; // total sup of the applied shift values
    Rational c1_used;              // final escalation value
};

// Pipeline: significance pass, separation pass, geometric escalation with
// post-verification. Throws ApproximationFailed when the cap is reached.
ApproximationResult make_significant_separated(const GTemplate& f, const Rational& c,
                                               int max_doublings = 12);

std::string system_to_json(const EnticementSystem& system);

} // namespace pgn
