#pragma once

// Closed-form dimension quantities for a weight vector: D, Xi, the sorted
// positive differences, the comparison functions and their conjugates, the
// single-level beta exponents, and the exhaustive inequality verifiers.

#include "pgn/convex.hpp"
#include "pgn/error.hpp"
#include "pgn/rational.hpp"
#include "pgn/weights.hpp"

#include <array>
#include <string>
#include <vector>

namespace pgn {

struct DimensionProfile {
    Weights weights;
    Rational d_total;           // D = sum of positive pairwise differences
    Rational xi;                // sum of positive weights
    std::vector<Rational> zetas;  // 0 < zeta_1 <= ... <= zeta_N
    PLFunction f_upper;         // [0, D] -> [0, N], concave
    PLFunction f_lower;         // [0, N] -> [0, D], convex
};

DimensionProfile dimension_profile(const Weights& w);

// chi_upper(d) = sum (zeta_i - d)^+ ; chi_lower(d) = sum (1 - d zeta_i)^+.
Rational chi_upper(const DimensionProfile& p, const Rational& d);
Rational chi_lower(const DimensionProfile& p, const Rational& d);

// Inverse of the upper comparison function computed through the convex
// conjugate: max over the breakpoint grid d' in {zeta_i} of
// d'*d'' - (chi_upper(d') + N d' - D). The correction term N d' - D turns the
// decreasing branch count into the covering-count exponent the conjugate
// identity needs.
Rational f_upper_inverse_conjugate(const DimensionProfile& p, const Rational& d2);

// beta_l = n_+/l for l <= n_+ and n_-/(n-l) otherwise.
Rational beta(int l, int n_plus, int n_minus);

struct PreHReport {
    bool all_hold = true;
    struct Case {
        int l;
        WeightMultiset e;
        Rational lhs;  // delta(E) - beta_l * eta_E
        Rational rhs;  // D - Xi
    };
    std::vector<Case> equality_cases;
    std::vector<Case> failures;
};

// Checks delta(E) - beta_l eta_E <= D - Xi over all levels and multisets.
// n_plus must admit the weights: #positive <= n_plus and #negative <= n - n_plus.
PreHReport check_preH(const Weights& w, int n_plus);

// delta(E) shorthand for the two-step filtration empty < E < Eall.
Rational delta_single(const Weights& w, const WeightMultiset& e);

// The appendix polynomial.
Rational appendix_V(long long a, long long b, long long c, long long a0, long long b0,
                    long long c0, long long n_plus);

struct AppendixReport {
    bool all_nonnegative = true;
    long long checked = 0;
    std::vector<std::array<long long, 7>> zero_cases;
    std::vector<std::array<long long, 7>> negative_cases;
};

// Exhaustive verification of V >= 0 over all admissible tuples with
// a, b, c <= max_value.
AppendixReport check_appendix(long long max_value);

} // namespace pgn
