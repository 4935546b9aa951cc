#include "pgn/dimensions.hpp"

#include <algorithm>
#include <array>

namespace pgn {

DimensionProfile dimension_profile(const Weights& w) {
    DimensionProfile p{w, Rational(0), Rational(0), {}, {}, {}};
    const auto& v = w.values();
    int n = w.n();
    for (int i = 0; i < n; ++i) {
        if (v[i].is_positive()) p.xi += v[i];
        for (int j = 0; j < i; ++j) {
            Rational diff = v[i] - v[j];
            if (diff.is_positive()) p.zetas.push_back(diff);
        }
    }
    std::sort(p.zetas.begin(), p.zetas.end());
    for (const auto& z : p.zetas) p.d_total += z;

    // F_upper through (sum_{i<=k} zeta_i, k); F_lower through (k, sum of the k largest).
    std::vector<Rational> xs{Rational(0)}, ys{Rational(0)};
    Rational acc(0);
    for (size_t k = 0; k < p.zetas.size(); ++k) {
        acc += p.zetas[k];
        xs.push_back(acc);
        ys.push_back(Rational(static_cast<long long>(k + 1)));
    }
    p.f_upper = PLFunction(xs, ys);

    std::vector<Rational> xs2{Rational(0)}, ys2{Rational(0)};
    acc = Rational(0);
    for (size_t k = 0; k < p.zetas.size(); ++k) {
        acc += p.zetas[p.zetas.size() - 1 - k];
        xs2.push_back(Rational(static_cast<long long>(k + 1)));
        ys2.push_back(acc);
    }
    p.f_lower = PLFunction(xs2, ys2);
    return p;
}

Rational chi_upper(const DimensionProfile& p, const Rational& d) {
    Rational s(0);
    for (const auto& z : p.zetas) s += (z - d).positive_part();
    return s;
}

Rational chi_lower(const DimensionProfile& p, const Rational& d) {
    Rational s(0);
    for (const auto& z : p.zetas) s += (Rational(1) - d * z).positive_part();
    return s;
}

Rational f_upper_inverse_conjugate(const DimensionProfile& p, const Rational& d2) {
    Rational n_count(static_cast<long long>(p.zetas.size()));
    bool have = false;
    Rational best;
    for (const auto& dp : p.zetas) {
        Rational covering_exponent = chi_upper(p, dp) + n_count * dp - p.d_total;
        Rational candidate = dp * d2 - covering_exponent;
        if (!have || best < candidate) { best = candidate; have = true; }
    }
    if (!have) throw Error("DegenerateProfile", "no positive differences");
    return best;
}

Rational beta(int l, int n_plus, int n_minus) {
    int n = n_plus + n_minus;
    if (n_plus < 1 || n_minus < 1 || l < 1 || l > n - 1)
        throw Error("InvalidSplit", "need n_+ , n_- >= 1 and 1 <= l <= n-1");
    if (l <= n_plus) return Rational(n_plus) / Rational(l);
    return Rational(n_minus) / Rational(n - l);
}

Rational delta_single(const Weights& w, const WeightMultiset& e) {
    WeightMultiset all(w.values());
    if (e.size() == 0 || e.size() == w.n())
        return delta_chain({WeightMultiset::empty(), all});
    return delta_chain({WeightMultiset::empty(), e, all});
}

PreHReport check_preH(const Weights& w, int n_plus) {
    int n = w.n();
    int n_minus = n - n_plus;
    if (n_plus < 1 || n_minus < 1 || w.count_positive() > n_plus || w.count_negative() > n_minus)
        throw Error("InvalidSplit", "n_+ does not admit the weight signs");
    auto profile = dimension_profile(w);
    Rational rhs = profile.d_total - profile.xi;
    PreHReport report;
    for (int l = 1; l <= n - 1; ++l) {
        Rational b = beta(l, n_plus, n_minus);
        for (const auto& e : enumerate_multisets(w, l)) {
            Rational lhs = delta_single(w, e) - b * eta_sum(e);
            if (lhs == rhs)
                report.equality_cases.push_back({l, e, lhs, rhs});
            else if (rhs < lhs) {
                report.failures.push_back({l, e, lhs, rhs});
                report.all_hold = false;
            }
        }
    }
    return report;
}

Rational appendix_V(long long a, long long b, long long c, long long a0, long long b0,
                    long long c0, long long n_plus) {
    if (!(a >= a0 && a0 >= 0 && b >= b0 && b0 >= 0 && c >= c0 && c0 >= 0))
        throw Error("PreconditionViolated", "need a >= a0 >= 0 etc.");
    if (a0 + b0 + c0 < 1) throw Error("PreconditionViolated", "need a0+b0+c0 >= 1");
    if (n_plus < c || n_plus > c + b)
        throw Error("PreconditionViolated", "need n_+ in [c, c+b]");
    if (a0 + b0 + c0 > n_plus)
        throw Error("PreconditionViolated", "need a0+b0+c0 <= n_+");
    Rational A(a), B(b), C(c), A0(a0), B0(b0), C0(c0), NP(n_plus);
    return (C - C0) * A0 * (A + C) + (B - B0) * A0 * C + (C - C0) * B0 * A +
           NP / (A0 + B0 + C0) * (-A0 * C + C0 * A) - A * C;
}

AppendixReport check_appendix(long long max_value) {
    AppendixReport report;
    for (long long a = 0; a <= max_value; ++a)
        for (long long b = 0; b <= max_value; ++b)
            for (long long c = 0; c <= max_value; ++c)
                for (long long a0 = 0; a0 <= a; ++a0)
                    for (long long b0 = 0; b0 <= b; ++b0)
                        for (long long c0 = 0; c0 <= c; ++c0) {
                            if (a0 + b0 + c0 < 1) continue;
                            long long lo = std::max(c, a0 + b0 + c0);
                            for (long long np = lo; np <= c + b; ++np) {
                                Rational v = appendix_V(a, b, c, a0, b0, c0, np);
                                ++report.checked;
                                if (v.is_zero())
                                    report.zero_cases.push_back({a, b, c, a0, b0, c0, np});
                                else if (v.is_negative()) {
                                    report.negative_cases.push_back({a, b, c, a0, b0, c0, np});
                                    report.all_nonnegative = false;
                                }
                            }
                        }
    return report;
}

} // namespace pgn
