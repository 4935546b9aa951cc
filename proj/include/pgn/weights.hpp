#pragma once

// Weight vectors of a diagonal flow, multisets of weights with the increase
// order, direction filtrations, the local exponent delta, and the
// elementary-flip decomposition of the filtration poset.

#include "pgn/error.hpp"
#include "pgn/rational.hpp"

#include <optional>
#include <vector>

namespace pgn {

// Sorted zero-sum weight vector eta_1 <= ... <= eta_n.
class Weights {
public:
    static Weights create(std::vector<Rational> values);

    int n() const { return static_cast<int>(values_.size()); }
    const std::vector<Rational>& values() const { return values_; }
    const Rational& value(int i) const { return values_.at(i); }

    // Distinct values in increasing order with multiplicities.
    const std::vector<Rational>& distinct() const { return distinct_; }
    const std::vector<int>& multiplicities() const { return mult_; }

    int count_positive() const;
    int count_negative() const;
    bool contains_zero() const;

    // Elements proportional to -(n-1), 1, ..., 1.
    bool is_standard() const;

    bool operator==(const Weights& o) const { return values_ == o.values_; }

private:
    std::vector<Rational> values_;
    std::vector<Rational> distinct_;
    std::vector<int> mult_;
};

// Submultiset of Eall, stored as a sorted value list.
class WeightMultiset {
public:
    WeightMultiset() = default;
    explicit WeightMultiset(std::vector<Rational> sorted_values);

    static WeightMultiset empty() { return WeightMultiset(); }

    int size() const { return static_cast<int>(values_.size()); }
    const std::vector<Rational>& values() const { return values_; }

    int multiplicity(const Rational& x) const;
    bool contains_submultiset(const WeightMultiset& sub) const;
    bool is_submultiset_of(const Weights& w) const;

    // Multiset sum / difference; difference requires containment.
    WeightMultiset plus(const WeightMultiset& other) const;
    WeightMultiset minus(const WeightMultiset& other) const;

    bool operator==(const WeightMultiset& o) const { return values_ == o.values_; }
    bool operator!=(const WeightMultiset& o) const { return values_ != o.values_; }
    bool operator<(const WeightMultiset& o) const { return values_ < o.values_; }

private:
    std::vector<Rational> values_;  // sorted nondecreasing
};

// eta_E: sum with multiplicity.
Rational eta_sum(const WeightMultiset& e);

// The increase order on I_l: true iff E2 is obtained from E1 by increasing
// elements; computed as componentwise dominance of the sorted lists.
// Throws SizeMismatch when |E1| != |E2|.
bool leq(const WeightMultiset& e1, const WeightMultiset& e2);

// All size-l submultisets of Eall in lexicographic order.
std::vector<WeightMultiset> enumerate_multisets(const Weights& w, int l);

// Nested multisets indexed by levels L = {0 = l_0 < ... < l_k = n}.
class DirectionFiltration {
public:
    DirectionFiltration(const Weights& w, std::vector<int> levels,
                        std::vector<WeightMultiset> multisets);

    const Weights& weights() const { return weights_; }
    const std::vector<int>& levels() const { return levels_; }
    const std::vector<WeightMultiset>& multisets() const { return multisets_; }
    int k() const { return static_cast<int>(levels_.size()) - 1; }

    const WeightMultiset& at_index(int i) const { return multisets_.at(i); }

    bool operator==(const DirectionFiltration& o) const {
        return levels_ == o.levels_ && multisets_ == o.multisets_;
    }

private:
    Weights weights_;
    std::vector<int> levels_;
    std::vector<WeightMultiset> multisets_;
};

// delta(E_) = sum_i sum_{eta in E_{l_i}, eta' in E_{l_i} - E_{l_{i-1}}} (eta-eta')^+.
Rational delta(const DirectionFiltration& f);

// delta of a chain given as bare multisets (already nested, first empty, last Eall).
Rational delta_chain(const std::vector<WeightMultiset>& chain);

// true iff E' - E has at most one distinct value. Requires E subset E'.
bool is_scalar_pair(const WeightMultiset& e, const WeightMultiset& e_prime);

// E_low plus the (l - |E_low|) largest values of E_high - E_low; the
// increase-order maximum among nested multisets of size l.
WeightMultiset final_multiset(const WeightMultiset& e_low, const WeightMultiset& e_high, int l);

struct ElementaryFlip {
    Rational eta_from;
    Rational eta_to;
    int a = 0;  // 1-based filtration indices, 1 <= a < b <= k
    int b = 0;

    bool operator==(const ElementaryFlip& o) const {
        return eta_from == o.eta_from && eta_to == o.eta_to && a == o.a && b == o.b;
    }
};

// Applies one elementary flip; throws IllegalFlip when the multiplicity
// condition fails or a >= b.
DirectionFiltration flip_apply(const DirectionFiltration& f, const ElementaryFlip& flip);

// Levelwise increase order on filtrations with equal level sets.
bool filtration_leq(const DirectionFiltration& f, const DirectionFiltration& g);

// Decomposes f <= g into elementary flips following the sigma/tau index
// choices; throws NotComparable when the levelwise order fails.
std::vector<ElementaryFlip> flip_decompose(const DirectionFiltration& f,
                                           const DirectionFiltration& g);

// sigma(i, eta) = #(E_{l_i} intersect (-inf, eta]) over the distinct values.
// Row i corresponds to filtration index i = 0..k, column s to distinct value s.
std::vector<std::vector<int>> sigma_table(const DirectionFiltration& f);

// All direction filtrations over w with the full level set {0, 1, ..., n}.
std::vector<DirectionFiltration> enumerate_full_filtrations(const Weights& w);

} // namespace pgn
