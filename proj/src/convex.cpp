#include "pgn/convex.hpp"

#include <algorithm>

namespace pgn {

PLFunction::PLFunction(std::vector<Rational> xs, std::vector<Rational> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size() || xs_.empty())
        throw Error("BadBreakpoints", "breakpoints and values must align");
    for (size_t i = 0; i + 1 < xs_.size(); ++i)
        if (!(xs_[i] < xs_[i + 1]))
            throw Error("BadBreakpoints", "breakpoints must strictly increase");
}

Rational PLFunction::operator()(const Rational& x) const {
    if (x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    size_t hi = 1;
    while (xs_[hi] < x) ++hi;
    const Rational& x0 = xs_[hi - 1];
    const Rational& x1 = xs_[hi];
    return ys_[hi - 1] + (ys_[hi] - ys_[hi - 1]) * (x - x0) / (x1 - x0);
}

Rational PLFunction::inverse(const Rational& y) const {
    bool increasing = ys_.back() > ys_.front();
    for (size_t i = 0; i + 1 < ys_.size(); ++i) {
        const Rational& y0 = ys_[i];
        const Rational& y1 = ys_[i + 1];
        bool inside = increasing ? (y0 <= y && y <= y1) : (y1 <= y && y <= y0);
        if (inside) {
            if (y1 == y0) return xs_[i];
            return xs_[i] + (xs_[i + 1] - xs_[i]) * (y - y0) / (y1 - y0);
        }
    }
    throw Error("OutOfRange", "value outside the function range");
}

Rational second_difference(const std::vector<Rational>& a, int l) {
    if (l < 1 || l + 1 >= static_cast<int>(a.size()))
        throw Error("LevelOutOfRange", "second difference needs an interior index");
    return a[l - 1] - a[l] - a[l] + a[l + 1];
}

bool is_height_sequence(const std::vector<Rational>& a) {
    if (a.size() < 2 || !a.front().is_zero() || !a.back().is_zero()) return false;
    for (int l = 1; l + 1 < static_cast<int>(a.size()); ++l)
        if (second_difference(a, l).is_negative()) return false;
    return true;
}

std::vector<int> nontrivial_places(const std::vector<Rational>& a) {
    int n = static_cast<int>(a.size()) - 1;
    std::vector<int> out{0};
    for (int l = 1; l < n; ++l)
        if (second_difference(a, l).is_positive()) out.push_back(l);
    out.push_back(n);
    return out;
}

std::vector<std::pair<Rational, Rational>> lower_hull_vertices(
    std::vector<std::pair<Rational, Rational>> points) {
    std::sort(points.begin(), points.end(),
              [](const auto& p, const auto& q) { return p.first < q.first; });
    std::vector<std::pair<Rational, Rational>> hull;
    for (const auto& p : points) {
        if (!hull.empty() && hull.back().first == p.first) {
            if (p.second < hull.back().second) hull.back() = p;
            continue;
        }
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            // Keep b only if it lies strictly below chord(a, p).
            Rational cross = (b.second - a.second) * (p.first - a.first) -
                             (p.second - a.second) * (b.first - a.first);
            if (cross.is_negative()) break;
            hull.pop_back();
        }
        hull.push_back(p);
    }
    return hull;
}

std::vector<Rational> convexify(const std::vector<std::pair<int, Rational>>& points, int n) {
    std::vector<std::pair<Rational, Rational>> pts;
    bool has0 = false, hasn = false;
    for (const auto& [idx, v] : points) {
        if (idx < 0 || idx > n) throw Error("LevelOutOfRange", "index outside [0, n]");
        has0 |= idx == 0;
        hasn |= idx == n;
        pts.emplace_back(Rational(idx), v);
    }
    if (!has0 || !hasn) throw Error("MissingEndpoints", "hull input must include 0 and n");
    auto hull = lower_hull_vertices(std::move(pts));
    PLFunction f(
        [&] { std::vector<Rational> xs; for (auto& p : hull) xs.push_back(p.first); return xs; }(),
        [&] { std::vector<Rational> ys; for (auto& p : hull) ys.push_back(p.second); return ys; }());
    std::vector<Rational> out;
    out.reserve(n + 1);
    for (int l = 0; l <= n; ++l) out.push_back(f(Rational(l)));
    return out;
}

std::vector<Rational> convexify(const std::vector<Rational>& a) {
    std::vector<std::pair<int, Rational>> pts;
    for (int l = 0; l < static_cast<int>(a.size()); ++l) pts.emplace_back(l, a[l]);
    return convexify(pts, static_cast<int>(a.size()) - 1);
}

std::vector<Rational> shift_height(const std::vector<Rational>& a,
                                   const std::vector<Rational>& rho) {
    if (rho.size() != a.size())
        throw Error("SizeMismatch", "shift sequence length must match");
    if (!rho.front().is_zero() || !rho.back().is_zero())
        throw Error("NotConcave", "shift sequence must vanish at 0 and n");
    for (int l = 1; l + 1 < static_cast<int>(rho.size()); ++l)
        if (second_difference(rho, l).is_positive())
            throw Error("NotConcave", "shift sequence must be concave");
    std::vector<Rational> sum(a.size());
    for (size_t i = 0; i < a.size(); ++i) sum[i] = a[i] + rho[i];
    return convexify(sum);
}

Rational vanishing_number(const std::vector<Rational>& a, int l) {
    int n = static_cast<int>(a.size()) - 1;
    if (l < 1 || l > n - 1) throw Error("LevelOutOfRange", "vanishing number needs 1 <= l <= n-1");
    if (!second_difference(a, l).is_positive()) return Rational(0);
    Rational best;
    bool have = false;
    for (int l1 = 0; l1 < l; ++l1)
        for (int l2 = l + 1; l2 <= n; ++l2) {
            Rational alpha = Rational(l2 - l) / Rational(l2 - l1);
            Rational chord0 = alpha * a[l1] + (Rational(1) - alpha) * a[l2];
            // The quadratic profile q is strictly concave, so the gap to the
            // chord closes at rate (l-l1)(l2-l).
            Rational rate = Rational(l - l1) * Rational(l2 - l);
            Rational root = (chord0 - a[l]) / rate;
            if (!have || root < best) { best = root; have = true; }
        }
    return best;
}

} // namespace pgn
