#pragma once

// Exact lower convex hulls of sequences, height-sequence shifts, and the
// vanishing number of a nontrivial place under the quadratic shift family.

#include "pgn/error.hpp"
#include "pgn/rational.hpp"

#include <utility>
#include <vector>

namespace pgn {

// Piecewise-linear function through strictly increasing breakpoints.
class PLFunction {
public:
    PLFunction() = default;
    PLFunction(std::vector<Rational> xs, std::vector<Rational> ys);

    const std::vector<Rational>& xs() const { return xs_; }
    const std::vector<Rational>& ys() const { return ys_; }

    Rational operator()(const Rational& x) const;

    // Inverse of a strictly monotone PL function.
    Rational inverse(const Rational& y) const;

private:
    std::vector<Rational> xs_;
    std::vector<Rational> ys_;
};

// Second difference a_{l-1} - 2 a_l + a_{l+1}.
Rational second_difference(const std::vector<Rational>& a, int l);

// Convex sequence with a_0 = a_n = 0.
bool is_height_sequence(const std::vector<Rational>& a);

// Nontrivial places of a convex sequence: {0, n} plus interior l with
// second difference > 0.
std::vector<int> nontrivial_places(const std::vector<Rational>& a);

// Lower convex hull of values given at distinct indices (must include the
// endpoints 0 and n), evaluated back at every integer 0..n.
std::vector<Rational> convexify(const std::vector<std::pair<int, Rational>>& points, int n);

// Lower hull of a full sequence.
std::vector<Rational> convexify(const std::vector<Rational>& a);

// Lower hull of (a_l + rho_l); rho must be concave with rho_0 = rho_n = 0.
std::vector<Rational> shift_height(const std::vector<Rational>& a,
                                   const std::vector<Rational>& rho);

// min{zeta > 0 : l is a trivial place of a^(zeta * l(n-l))}; 0 when the
// second difference vanishes.
Rational vanishing_number(const std::vector<Rational>& a, int l);

// Lower hull over arbitrary rational abscissae; returns the hull vertices
// (subset of the input points, left to right).
std::vector<std::pair<Rational, Rational>> lower_hull_vertices(
    std::vector<std::pair<Rational, Rational>> points);

} // namespace pgn
