#pragma once

// Constructive template families for the divergent-trajectory lower bound:
// the connecting template, single bumps (plain and plateau variant), the
// two-bump merger, and the cubic-schedule divergent stream.

#include "pgn/template.hpp"

namespace pgn {

struct ConnectingData {
    Rational eta_minus;  // largest negative weight
    Rational eta_plus;   // smallest positive weight
    Rational t_minus;    // n / ((n-1) eta_1 + eta_+) < 0
    Rational t_plus;     // n / ((n-1) eta_n + eta_-) > 0
};

ConnectingData connecting_data(const Weights& w);

// Template with the cap-shaped level-1 track peaking at height -1 at time 0
// and the level-2 cover of the illegal transition on [t_minus, t_plus].
// Window must contain [t_minus, t_plus].
GTemplate connecting_template(const Weights& w, const Rational& t_begin, const Rational& t_end);

// Single bump on [t0, t1] (zero outside); requires 0 not in Eall.
// The window defaults to exactly [t0, t1].
GTemplate bump_template(const Weights& w, const Rational& t0, const Rational& t1);
GTemplate bump_template(const Weights& w, const Rational& t0, const Rational& t1,
                        const Rational& t_begin, const Rational& t_end);

// Bump with a flat floor at -eps (t1 - t0) labeled {0}; requires 0 in Eall.
GTemplate bump_template_eps(const Weights& w, const Rational& t0, const Rational& t1,
                            const Rational& eps);
GTemplate bump_template_eps(const Weights& w, const Rational& t0, const Rational& t1,
                            const Rational& eps, const Rational& t_begin,
                            const Rational& t_end);

// Merger of two bumps (both plain or both plateau variant). Non-overlapping
// bumps concatenate; overlapping ones are spliced through a rescaled
// connecting template (plain) or an inter-bump plateau (plateau variant).
GTemplate merge(const GTemplate& f1, const GTemplate& f2);

struct DivergentResult {
    GTemplate tpl;
    int m_start = 0;                          // first schedule index used
    std::vector<Rational> inter_bump_maxima;  // level-1 heights between bumps
};

// Cubic-schedule merged bump stream on [0, horizon].
DivergentResult divergent_template(const Weights& w, const Rational& horizon);

} // namespace pgn
