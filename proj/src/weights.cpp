#include "pgn/weights.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace pgn {

Weights Weights::create(std::vector<Rational> values) {
    if (values.size() < 2) throw Error("DimensionTooSmall", "need n >= 2 weights");
    std::sort(values.begin(), values.end());
    Rational sum(0);
    for (const auto& v : values) sum += v;
    if (!sum.is_zero()) throw Error("SumNonZero", "weights sum to " + sum.str());
    Weights w;
    w.values_ = std::move(values);
    for (const auto& v : w.values_) {
        if (w.distinct_.empty() || !(w.distinct_.back() == v)) {
            w.distinct_.push_back(v);
            w.mult_.push_back(1);
        } else {
            w.mult_.back()++;
        }
    }
    return w;
}

int Weights::count_positive() const {
    int c = 0;
    for (const auto& v : values_) c += v.is_positive() ? 1 : 0;
    return c;
}

int Weights::count_negative() const {
    int c = 0;
    for (const auto& v : values_) c += v.is_negative() ? 1 : 0;
    return c;
}

bool Weights::contains_zero() const {
    for (const auto& v : values_) if (v.is_zero()) return true;
    return false;
}

bool Weights::is_standard() const {
    // Proportional to -(n-1), 1, ..., 1: one negative value, all others equal.
    int n = this->n();
    const Rational& top = values_[1];
    if (!values_[0].is_negative() || !top.is_positive()) return false;
    for (int i = 2; i < n; ++i)
        if (values_[i] != top) return false;
    return values_[0] == -Rational(n - 1) * top;
}

WeightMultiset::WeightMultiset(std::vector<Rational> sorted_values) : values_(std::move(sorted_values)) {
    std::sort(values_.begin(), values_.end());
}

int WeightMultiset::multiplicity(const Rational& x) const {
    int c = 0;
    for (const auto& v : values_) c += (v == x) ? 1 : 0;
    return c;
}

bool WeightMultiset::contains_submultiset(const WeightMultiset& sub) const {
    size_t i = 0;
    for (const auto& v : sub.values_) {
        while (i < values_.size() && values_[i] < v) ++i;
        if (i == values_.size() || values_[i] != v) return false;
        ++i;
    }
    return true;
}

bool WeightMultiset::is_submultiset_of(const Weights& w) const {
    return WeightMultiset(w.values()).contains_submultiset(*this);
}

WeightMultiset WeightMultiset::plus(const WeightMultiset& other) const {
    std::vector<Rational> merged;
    merged.reserve(values_.size() + other.values_.size());
    std::merge(values_.begin(), values_.end(), other.values_.begin(), other.values_.end(),
               std::back_inserter(merged));
    WeightMultiset r;
    r.values_ = std::move(merged);
    return r;
}

WeightMultiset WeightMultiset::minus(const WeightMultiset& other) const {
    if (!contains_submultiset(other))
        throw Error("NotNested", "multiset difference of non-contained multiset");
    std::vector<Rational> out;
    size_t j = 0;
    for (const auto& v : values_) {
        if (j < other.values_.size() && other.values_[j] == v) {
            ++j;
        } else {
            out.push_back(v);
        }
    }
    WeightMultiset r;
    r.values_ = std::move(out);
    return r;
}

Rational eta_sum(const WeightMultiset& e) {
    Rational s(0);
    for (const auto& v : e.values()) s += v;
    return s;
}

bool leq(const WeightMultiset& e1, const WeightMultiset& e2) {
    if (e1.size() != e2.size())
        throw Error("SizeMismatch", "increase order compares equal-size multisets");
    for (int i = 0; i < e1.size(); ++i)
        if (e2.values()[i] < e1.values()[i]) return false;
    return true;
}

std::vector<WeightMultiset> enumerate_multisets(const Weights& w, int l) {
    if (l < 0 || l > w.n()) throw Error("LevelOutOfRange", "multiset size out of [0, n]");
    std::vector<WeightMultiset> out;
    std::vector<Rational> current;
    const auto& vals = w.distinct();
    const auto& mult = w.multiplicities();
    // Choose a count per distinct value; lexicographic order in the value list.
    auto rec = [&](auto&& self, size_t idx, int remaining) -> void {
        if (remaining == 0) {
            out.emplace_back(current);
            return;
        }
        if (idx == vals.size()) return;
        int avail = std::min(mult[idx], remaining);
        for (int take = 0; take <= avail; ++take) {
            for (int t = 0; t < take; ++t) current.push_back(vals[idx]);
            self(self, idx + 1, remaining - take);
            for (int t = 0; t < take; ++t) current.pop_back();
        }
    };
    rec(rec, 0, l);
    std::sort(out.begin(), out.end());
    return out;
}

DirectionFiltration::DirectionFiltration(const Weights& w, std::vector<int> levels,
                                         std::vector<WeightMultiset> multisets)
    : weights_(w), levels_(std::move(levels)), multisets_(std::move(multisets)) {
    if (levels_.size() != multisets_.size() || levels_.size() < 2)
        throw Error("LevelMismatch", "levels and multisets must align");
    if (levels_.front() != 0 || levels_.back() != weights_.n())
        throw Error("LevelMismatch", "levels must run from 0 to n");
    for (size_t i = 0; i + 1 < levels_.size(); ++i)
        if (levels_[i] >= levels_[i + 1])
            throw Error("LevelMismatch", "levels must strictly increase");
    for (size_t i = 0; i < levels_.size(); ++i)
        if (multisets_[i].size() != levels_[i])
            throw Error("LevelMismatch", "multiset size must equal its level");
    for (size_t i = 0; i + 1 < multisets_.size(); ++i)
        if (!multisets_[i + 1].contains_submultiset(multisets_[i]))
            throw Error("NotNested", "filtration multisets must be nested");
    if (!multisets_.back().is_submultiset_of(weights_) ||
        multisets_.back().size() != weights_.n())
        throw Error("NotNested", "top multiset must be Eall");
}

Rational delta_chain(const std::vector<WeightMultiset>& chain) {
    Rational total(0);
    for (size_t i = 1; i < chain.size(); ++i) {
        WeightMultiset added = chain[i].minus(chain[i - 1]);
        for (const auto& eta : chain[i].values())
            for (const auto& eta_prime : added.values())
                total += (eta - eta_prime).positive_part();
    }
    return total;
}

Rational delta(const DirectionFiltration& f) { return delta_chain(f.multisets()); }

bool is_scalar_pair(const WeightMultiset& e, const WeightMultiset& e_prime) {
    if (!e_prime.contains_submultiset(e))
        throw Error("NotNested", "scalar pair requires nested multisets");
    WeightMultiset diff = e_prime.minus(e);
    for (int i = 1; i < diff.size(); ++i)
        if (diff.values()[i] != diff.values()[0]) return false;
    return true;
}

WeightMultiset final_multiset(const WeightMultiset& e_low, const WeightMultiset& e_high, int l) {
    if (!e_high.contains_submultiset(e_low))
        throw Error("NotNested", "final multiset requires nested bounds");
    if (l <= e_low.size() || l >= e_high.size())
        throw Error("LevelOutOfRange", "size must lie strictly between the bounds");
    WeightMultiset diff = e_high.minus(e_low);
    int take = l - e_low.size();
    std::vector<Rational> top(diff.values().end() - take, diff.values().end());
    return e_low.plus(WeightMultiset(std::move(top)));
}

DirectionFiltration flip_apply(const DirectionFiltration& f, const ElementaryFlip& flip) {
    int k = f.k();
    if (flip.a < 1 || flip.b <= flip.a || flip.b > k)
        throw Error("IllegalFlip", "flip indices must satisfy 1 <= a < b <= k");
    if (!(flip.eta_from < flip.eta_to))
        throw Error("IllegalFlip", "flip must increase the weight value");
    const auto& ms = f.multisets();
    if (!(ms[flip.a - 1].multiplicity(flip.eta_from) < ms[flip.a].multiplicity(flip.eta_from) &&
          ms[flip.b - 1].multiplicity(flip.eta_to) < ms[flip.b].multiplicity(flip.eta_to)))
        throw Error("IllegalFlip", "multiplicity condition fails");
    std::vector<WeightMultiset> out = ms;
    WeightMultiset from({flip.eta_from});
    WeightMultiset to({flip.eta_to});
    for (int i = flip.a; i < flip.b; ++i)
        out[i] = out[i].minus(from).plus(to);
    return DirectionFiltration(f.weights(), f.levels(), std::move(out));
}

bool filtration_leq(const DirectionFiltration& f, const DirectionFiltration& g) {
    if (f.levels() != g.levels())
        throw Error("LevelMismatch", "filtrations must share their level set");
    for (size_t i = 0; i < f.multisets().size(); ++i)
        if (!leq(f.multisets()[i], g.multisets()[i])) return false;
    return true;
}

std::vector<std::vector<int>> sigma_table(const DirectionFiltration& f) {
    const auto& distinct = f.weights().distinct();
    int k = f.k();
    std::vector<std::vector<int>> sigma(k + 1, std::vector<int>(distinct.size() + 1, 0));
    for (int i = 0; i <= k; ++i)
        for (size_t s = 0; s < distinct.size(); ++s) {
            int count = 0;
            for (const auto& v : f.at_index(i).values())
                if (v <= distinct[s]) ++count;
            sigma[i][s + 1] = count;  // column 0 is the -infinity threshold
        }
    return sigma;
}

std::vector<ElementaryFlip> flip_decompose(const DirectionFiltration& f,
                                           const DirectionFiltration& g) {
    if (f.levels() != g.levels())
        throw Error("LevelMismatch", "filtrations must share their level set");
    if (!filtration_leq(f, g))
        throw Error("NotComparable", "source does not precede target levelwise");

    const auto& distinct = f.weights().distinct();
    int nd = static_cast<int>(distinct.size());
    int k = f.k();
    auto sigma_g = sigma_table(g);

    std::vector<ElementaryFlip> flips;
    DirectionFiltration cur = f;
    while (!(cur == g)) {
        auto sigma = sigma_table(cur);
        // tau(i, s) over rows i = 1..k and distinct-value columns s = 0..nd (0 = -inf).
        auto tau = [&](int i, int s) {
            return sigma[i][s] - sigma_g[i][s] - sigma[i - 1][s] + sigma_g[i - 1][s];
        };
        // i2: minimal row attaining a negative value.
        int i2 = -1;
        for (int i = 1; i <= k && i2 < 0; ++i)
            for (int s = 0; s <= nd; ++s)
                if (tau(i, s) < 0) { i2 = i; break; }
        if (i2 < 0) throw Error("Internal", "flip decomposition stalled");
        // s2: tau(i2, eta_{s2-1}) < 0 and tau(i2, eta_s) >= 0 for s >= s2.
        int s2 = -1;
        for (int s = nd; s >= 1; --s)
            if (tau(i2, s) < 0) { s2 = s + 1; break; }
        // i1: minimal row below i2 with tau(i1, eta_{s2-1}) > 0.
        int i1 = -1;
        for (int i = 1; i < i2; ++i)
            if (tau(i, s2 - 1) > 0) { i1 = i; break; }
        if (i1 < 0 || s2 < 2 || s2 > nd)
            throw Error("Internal", "flip decomposition index selection failed");
        // s1: minimal index with tau(i1, eta_s) > 0 throughout [s1, s2-1].
        int s1 = s2 - 1;
        while (s1 - 1 >= 1 && tau(i1, s1 - 1) > 0) --s1;
        ElementaryFlip flip{distinct[s1 - 1], distinct[s2 - 1], i1, i2};
        cur = flip_apply(cur, flip);
        if (!filtration_leq(cur, g))
            throw Error("Internal", "flip decomposition left the interval");
        flips.push_back(flip);
    }
    return flips;
}

std::vector<DirectionFiltration> enumerate_full_filtrations(const Weights& w) {
    std::vector<int> levels(w.n() + 1);
    for (int i = 0; i <= w.n(); ++i) levels[i] = i;
    std::vector<DirectionFiltration> out;
    std::vector<WeightMultiset> chain{WeightMultiset::empty()};
    WeightMultiset all(w.values());
    auto rec = [&](auto&& self) -> void {
        if (chain.back().size() == w.n()) {
            out.emplace_back(w, levels, chain);
            return;
        }
        WeightMultiset remaining = all.minus(chain.back());
        std::set<Rational, std::less<Rational>> seen;
        for (const auto& v : remaining.values()) {
            if (seen.count(v)) continue;
            seen.insert(v);
            chain.push_back(chain.back().plus(WeightMultiset({v})));
            self(self);
            chain.pop_back();
        }
    };
    rec(rec);
    return out;
}

} // namespace pgn
