#include "pgn/constructions.hpp"

#include <algorithm>

namespace pgn {

namespace {

struct SignedWeights {
    Rational eta_minus;  // largest negative
    Rational eta_plus;   // smallest positive
};

SignedWeights signed_extremes(const Weights& w) {
    SignedWeights s;
    bool have_neg = false, have_pos = false;
    for (const auto& v : w.values()) {
        if (v.is_negative()) {
            if (!have_neg || s.eta_minus < v) s.eta_minus = v;
            have_neg = true;
        }
        if (v.is_positive()) {
            if (!have_pos || v < s.eta_plus) s.eta_plus = v;
            have_pos = true;
        }
    }
    if (!have_neg || !have_pos)
        throw Error("NoSignedWeights", "need both positive and negative weights");
    return s;
}

Rational kappa_of(const SignedWeights& s) {
    // 1 / (eta_+^{-1} - eta_-^{-1}); positive since eta_- < 0 < eta_+.
    return Rational(1) / (Rational(1) / s.eta_plus - Rational(1) / s.eta_minus);
}

TrackSegment seg(const Rational& until, WeightMultiset label) {
    return TrackSegment{until, std::move(label)};
}

}  // namespace

ConnectingData connecting_data(const Weights& w) {
    if (w.n() < 3) throw Error("DimensionTooSmall", "connecting template needs n >= 3");
    if (w.is_standard()) throw Error("StandardWeights", "standard weights excluded");
    if (w.contains_zero())
        throw Error("NoSignedWeights", "connecting template requires 0 outside Eall");
    SignedWeights s = signed_extremes(w);
    int n = w.n();
    Rational denom_plus = Rational(n - 1) * w.value(n - 1) + s.eta_minus;
    Rational denom_minus = Rational(n - 1) * w.value(0) + s.eta_plus;
    if (!denom_plus.is_positive() || !denom_minus.is_negative())
        throw Error("StandardWeights", "degenerate connecting times");
    return ConnectingData{s.eta_minus, s.eta_plus, Rational(n) / denom_minus,
                          Rational(n) / denom_plus};
}

GTemplate connecting_template(const Weights& w, const Rational& t_begin, const Rational& t_end) {
    ConnectingData cd = connecting_data(w);
    if (t_begin > cd.t_minus || t_end < cd.t_plus)
        throw Error("TimeOutOfWindow", "window must contain [t_minus, t_plus]");
    int n = w.n();
    std::vector<std::vector<TrackInterval>> tracks(n - 1);

    // Level 1: rising branch up to 0, then falling branch; isolated null point at 0.
    {
        TrackInterval left;
        left.start = t_begin;
        left.end = Rational(0);
        left.height_start = cd.eta_plus * t_begin - Rational(1);
        left.segments = {seg(Rational(0), WeightMultiset({cd.eta_plus}))};
        TrackInterval right;
        right.start = Rational(0);
        right.end = t_end;
        right.height_start = Rational(-1);
        right.segments = {seg(t_end, WeightMultiset({cd.eta_minus}))};
        tracks[0] = {left, right};
    }
    // Level 2: the cover of the transition.
    {
        WeightMultiset before({w.value(0), cd.eta_plus});
        WeightMultiset after({cd.eta_minus, w.value(n - 1)});
        TrackInterval iv;
        iv.start = cd.t_minus;
        iv.end = cd.t_plus;
        iv.height_start = (cd.eta_plus + w.value(0)) * cd.t_minus - Rational(2);
        if (before == after) {
            iv.segments = {seg(cd.t_plus, before)};
        } else {
            iv.segments = {seg(Rational(0), before), seg(cd.t_plus, after)};
        }
        tracks[1] = {iv};
    }
    return GTemplate(w, t_begin, t_end, std::move(tracks));
}

GTemplate bump_template(const Weights& w, const Rational& t0, const Rational& t1) {
    return bump_template(w, t0, t1, t0, t1);
}

GTemplate bump_template(const Weights& w, const Rational& t0, const Rational& t1,
                        const Rational& t_begin, const Rational& t_end) {
    if (!(t0 < t1)) throw Error("BadInterval", "bump needs t0 < t1");
    if (w.contains_zero())
        throw Error("WrongZeroBranch", "plain bump requires 0 outside Eall");
    if (t_begin > t0 || t_end < t1)
        throw Error("TimeOutOfWindow", "window must contain [t0, t1]");
    SignedWeights s = signed_extremes(w);
    Rational t_half = (s.eta_plus * t1 - s.eta_minus * t0) / (s.eta_plus - s.eta_minus);
    std::vector<std::vector<TrackInterval>> tracks(w.n() - 1);
    TrackInterval iv;
    iv.start = t0;
    iv.end = t1;
    iv.height_start = Rational(0);
    iv.segments = {seg(t_half, WeightMultiset({s.eta_minus})),
                   seg(t1, WeightMultiset({s.eta_plus}))};
    tracks[0] = {iv};
    return GTemplate(w, t_begin, t_end, std::move(tracks));
}

GTemplate bump_template_eps(const Weights& w, const Rational& t0, const Rational& t1,
                            const Rational& eps) {
    return bump_template_eps(w, t0, t1, eps, t0, t1);
}

GTemplate bump_template_eps(const Weights& w, const Rational& t0, const Rational& t1,
                            const Rational& eps, const Rational& t_begin,
                            const Rational& t_end) {
    if (!(t0 < t1)) throw Error("BadInterval", "bump needs t0 < t1");
    if (!w.contains_zero())
        throw Error("WrongZeroBranch", "plateau bump requires 0 in Eall");
    if (t_begin > t0 || t_end < t1)
        throw Error("TimeOutOfWindow", "window must contain [t0, t1]");
    SignedWeights s = signed_extremes(w);
    Rational depth = eps * (t1 - t0);
    if (!eps.is_positive() || !(depth < kappa_of(s) * (t1 - t0)))
        throw Error("BadInterval", "plateau depth must lie strictly inside the cap");
    Rational t13 = t0 - depth / s.eta_minus;
    Rational t23 = t1 - depth / s.eta_plus;
    std::vector<std::vector<TrackInterval>> tracks(w.n() - 1);
    TrackInterval iv;
    iv.start = t0;
    iv.end = t1;
    iv.height_start = Rational(0);
    iv.segments = {seg(t13, WeightMultiset({s.eta_minus})), seg(t23, WeightMultiset({Rational(0)})),
                   seg(t1, WeightMultiset({s.eta_plus}))};
    tracks[0] = {iv};
    return GTemplate(w, t_begin, t_end, std::move(tracks));
}

namespace {

struct BumpSpec {
    Rational t0;
    Rational t1;
    bool plateau = false;
    Rational floor;  // plateau depth as a positive number, when plateau
};

BumpSpec detect_bump(const GTemplate& f) {
    for (int l = 2; l <= f.n() - 1; ++l)
        if (!f.track(l).empty()) throw Error("BadInterval", "merge expects single bumps");
    if (f.track(1).size() != 1) throw Error("BadInterval", "merge expects single bumps");
    const auto& iv = f.track(1)[0];
    BumpSpec spec;
    spec.t0 = iv.start;
    spec.t1 = iv.end;
    if (iv.segments.size() == 2) {
        spec.plateau = false;
    } else if (iv.segments.size() == 3 && eta_sum(iv.segments[1].label).is_zero()) {
        spec.plateau = true;
        SignedWeights s = signed_extremes(f.weights());
        spec.floor = -s.eta_minus * (iv.segments[0].until - iv.start);
    } else {
        throw Error("BadInterval", "merge expects single bumps");
    }
    return spec;
}

struct PlainMergePlan {
    Rational t_half_1, t_half_2;  // inner vertices of the two bumps
    Rational t_mid;               // crossing time of the two branches
    Rational splice_a, splice_b;  // level-2 cover interval
    Rational scale;               // homothety factor of the connecting template
};

PlainMergePlan plan_plain_splice(const Weights& w, const BumpSpec& b1, const BumpSpec& b2) {
    SignedWeights s = signed_extremes(w);
    ConnectingData cd = connecting_data(w);
    PlainMergePlan plan;
    plan.t_half_1 = (s.eta_plus * b1.t1 - s.eta_minus * b1.t0) / (s.eta_plus - s.eta_minus);
    plan.t_half_2 = (s.eta_plus * b2.t1 - s.eta_minus * b2.t0) / (s.eta_plus - s.eta_minus);
    if (!(plan.t_half_1 < b2.t0 && b2.t0 < b1.t1 && b1.t1 < plan.t_half_2))
        throw Error("GapConditionFailed", "bumps do not overlap in the required pattern");
    plan.t_mid = (s.eta_plus * b1.t1 - s.eta_minus * b2.t0) / (s.eta_plus - s.eta_minus);
    plan.scale = (b1.t1 - b2.t0) * kappa_of(s);
    plan.splice_a = plan.t_mid + plan.scale * cd.t_minus;
    plan.splice_b = plan.t_mid + plan.scale * cd.t_plus;
    if (!(plan.t_half_1 < plan.splice_a && plan.splice_b < plan.t_half_2))
        throw Error("GapConditionFailed", "connecting splice exceeds the bump branches");
    return plan;
}

}  // namespace

GTemplate merge(const GTemplate& f1, const GTemplate& f2) {
    if (!(f1.weights() == f2.weights()))
        throw Error("WindowMismatch", "merging templates over different weights");
    const Weights& w = f1.weights();
    BumpSpec b1 = detect_bump(f1);
    BumpSpec b2 = detect_bump(f2);
    if (b1.plateau != b2.plateau)
        throw Error("BadInterval", "cannot merge mixed bump variants");
    if (b2.t0 < b1.t0) return merge(f2, f1);
    Rational t_begin = Rational::min(f1.t_begin(), f2.t_begin());
    Rational t_end = Rational::max(f1.t_end(), f2.t_end());
    std::vector<std::vector<TrackInterval>> tracks(w.n() - 1);
    SignedWeights s = signed_extremes(w);

    if (!(b1.t1 > b2.t0)) {
        // Degenerate merger: the bumps do not overlap.
        tracks[0] = {f1.track(1)[0], f2.track(1)[0]};
        return GTemplate(w, t_begin, t_end, std::move(tracks));
    }

    if (!b1.plateau) {
        PlainMergePlan plan = plan_plain_splice(w, b1, b2);
        ConnectingData cd = connecting_data(w);
        TrackInterval left;
        left.start = b1.t0;
        left.end = plan.t_mid;
        left.height_start = Rational(0);
        left.segments = {seg(plan.t_half_1, WeightMultiset({s.eta_minus})),
                         seg(plan.t_mid, WeightMultiset({s.eta_plus}))};
        TrackInterval right;
        right.start = plan.t_mid;
        right.end = b2.t1;
        right.height_start = -plan.scale;  // common branch value at the crossing
        right.segments = {seg(plan.t_half_2, WeightMultiset({s.eta_minus})),
                          seg(b2.t1, WeightMultiset({s.eta_plus}))};
        tracks[0] = {left, right};
        WeightMultiset before({w.value(0), s.eta_plus});
        WeightMultiset after({s.eta_minus, w.value(w.n() - 1)});
        TrackInterval cover;
        cover.start = plan.splice_a;
        cover.end = plan.splice_b;
        cover.height_start =
            plan.scale * ((cd.eta_plus + w.value(0)) * cd.t_minus - Rational(2));
        if (before == after)
            cover.segments = {seg(plan.splice_b, before)};
        else
            cover.segments = {seg(plan.t_mid, before), seg(plan.splice_b, after)};
        tracks[1] = {cover};
        return GTemplate(w, t_begin, t_end, std::move(tracks));
    }

    // Plateau splice: flat inter-bump stretch labeled {0}.
    Rational t_half_1 = (s.eta_plus * b1.t1 - s.eta_minus * b1.t0) / (s.eta_plus - s.eta_minus);
    Rational t_half_2 = (s.eta_plus * b2.t1 - s.eta_minus * b2.t0) / (s.eta_plus - s.eta_minus);
    if (!(t_half_1 < b2.t0 && b1.t1 < t_half_2))
        throw Error("GapConditionFailed", "bumps do not overlap in the required pattern");
    Rational d = b1.t1 - b2.t0;
    Rational kd = kappa_of(s) * d;
    if (!(kd < b1.floor) || !(kd < b2.floor))
        throw Error("GapConditionFailed", "inter-bump plateau would cut the bump floors");
    Rational h = Rational::min(kd + kd, Rational::min((kd + b1.floor) / Rational(2),
                                                      (kd + b2.floor) / Rational(2)));
    Rational ta = b1.t1 - h / s.eta_plus;
    Rational tb = b2.t0 - h / s.eta_minus;
    const auto& iv1 = f1.track(1)[0];
    const auto& iv2 = f2.track(1)[0];
    TrackInterval left;
    left.start = b1.t0;
    left.end = ta;
    left.height_start = Rational(0);
    left.segments = {iv1.segments[0], iv1.segments[1], seg(ta, iv1.segments[2].label)};
    TrackInterval flat;
    flat.start = ta;
    flat.end = tb;
    flat.height_start = -h;
    flat.segments = {seg(tb, WeightMultiset({Rational(0)}))};
    TrackInterval right;
    right.start = tb;
    right.end = b2.t1;
    right.height_start = -h;
    right.segments = {seg(iv2.segments[0].until, iv2.segments[0].label), iv2.segments[1],
                      iv2.segments[2]};
    tracks[0] = {left, flat, right};
    return GTemplate(w, t_begin, t_end, std::move(tracks));
}

namespace {

Rational sched_t0(long long m) { return Rational(m * m * m - m); }
Rational sched_t1(long long m) { return Rational((m + 1) * (m + 1) * (m + 1) + m); }

}  // namespace

DivergentResult divergent_template(const Weights& w, const Rational& horizon) {
    if (w.n() < 3) throw Error("DimensionTooSmall", "divergent construction needs n >= 3");
    if (w.is_standard()) throw Error("StandardWeights", "standard weights are out of scope");
    if (!horizon.is_positive()) throw Error("BadInterval", "horizon must be positive");
    SignedWeights s = signed_extremes(w);
    Rational kappa = kappa_of(s);
    bool plateau = w.contains_zero();
    Rational c0 = Rational::max(Rational(1), Rational(4) * kappa);  // plateau eps_m = c0 / m

    auto t_half = [&](long long m) {
        return (s.eta_plus * sched_t1(m) - s.eta_minus * sched_t0(m)) / (s.eta_plus - s.eta_minus);
    };
    auto eps_m = [&](long long m) { return c0 / Rational(m); };

    // Splice feasibility for the pair (m, m+1).
    auto pair_ok = [&](long long m) {
        Rational d = sched_t1(m) - sched_t0(m + 1);  // = 2m+1 > 0
        if (!(t_half(m) < sched_t0(m + 1)) || !(sched_t1(m) < t_half(m + 1))) return false;
        if (!plateau) {
            ConnectingData cd = connecting_data(w);
            Rational t_mid =
                (s.eta_plus * sched_t1(m) - s.eta_minus * sched_t0(m + 1)) / (s.eta_plus - s.eta_minus);
            Rational scale = d * kappa;
            return t_half(m) < t_mid + scale * cd.t_minus &&
                   t_mid + scale * cd.t_plus < t_half(m + 1);
        }
        Rational kd = kappa * d;
        Rational floor1 = eps_m(m) * (sched_t1(m) - sched_t0(m));
        Rational floor2 = eps_m(m + 1) * (sched_t1(m + 1) - sched_t0(m + 1));
        Rational cap1 = kappa * (sched_t1(m) - sched_t0(m));
        Rational cap2 = kappa * (sched_t1(m + 1) - sched_t0(m + 1));
        return kd < floor1 && kd < floor2 && floor1 < cap1 && floor2 < cap2;
    };

    // First schedule index from which a long run of pairs splices cleanly;
    // window-independent so larger horizons extend the same stream.
    long long m_start = 1;
    for (;; ++m_start) {
        bool ok = true;
        for (long long m = m_start; m < m_start + 40 && ok; ++m) ok = pair_ok(m);
        if (ok) break;
        if (m_start > 1000000) throw Error("Internal", "no feasible schedule start");
    }

    Rational origin = sched_t0(m_start);
    Rational end_abs = origin + horizon;
    long long m_last = m_start;
    while (sched_t0(m_last + 1) < end_abs && pair_ok(m_last)) ++m_last;

    // Assemble the merged chain directly: level-1 intervals split at the
    // splice centers (plain) or by flat plateaus, level-2 covers per splice.
    std::vector<TrackInterval> level1;
    std::vector<TrackInterval> level2;
    std::vector<Rational> maxima;
    WeightMultiset lab_minus({s.eta_minus});
    WeightMultiset lab_plus({s.eta_plus});

    if (!plateau) {
        ConnectingData cd = connecting_data(w);
        auto t_mid = [&](long long m) {
            return (s.eta_plus * sched_t1(m) - s.eta_minus * sched_t0(m + 1)) /
                   (s.eta_plus - s.eta_minus);
        };
        auto scale = [&](long long m) { return (sched_t1(m) - sched_t0(m + 1)) * kappa; };
        WeightMultiset before({w.value(0), s.eta_plus});
        WeightMultiset after({s.eta_minus, w.value(w.n() - 1)});
        for (long long m = m_start; m <= m_last; ++m) {
            TrackInterval iv;
            iv.start = m == m_start ? sched_t0(m) : t_mid(m - 1);
            iv.height_start = m == m_start ? Rational(0) : -scale(m - 1);
            iv.end = m == m_last ? sched_t1(m) : t_mid(m);
            if (t_half(m) < iv.end) {
                iv.segments = {seg(t_half(m), lab_minus), seg(iv.end, lab_plus)};
            } else {
                iv.segments = {seg(iv.end, lab_minus)};
            }
            level1.push_back(std::move(iv));
            if (m < m_last) {
                maxima.push_back(-scale(m));
                TrackInterval cover;
                cover.start = t_mid(m) + scale(m) * cd.t_minus;
                cover.end = t_mid(m) + scale(m) * cd.t_plus;
                cover.height_start =
                    scale(m) * ((cd.eta_plus + w.value(0)) * cd.t_minus - Rational(2));
                if (before == after)
                    cover.segments = {seg(cover.end, before)};
                else
                    cover.segments = {seg(t_mid(m), before), seg(cover.end, after)};
                level2.push_back(std::move(cover));
            }
        }
    } else {
        WeightMultiset lab_zero({Rational(0)});
        auto floor_m = [&](long long m) { return eps_m(m) * (sched_t1(m) - sched_t0(m)); };
        auto h_of = [&](long long m) {
            Rational kd = kappa * (sched_t1(m) - sched_t0(m + 1));
            return Rational::min(kd + kd, Rational::min((kd + floor_m(m)) / Rational(2),
                                                        (kd + floor_m(m + 1)) / Rational(2)));
        };
        for (long long m = m_start; m <= m_last; ++m) {
            Rational t13 = sched_t0(m) - floor_m(m) / s.eta_minus;
            Rational t23 = sched_t1(m) - floor_m(m) / s.eta_plus;
            TrackInterval iv;
            iv.start = m == m_start ? sched_t0(m)
                                    : sched_t0(m) - h_of(m - 1) / s.eta_minus;
            iv.height_start = m == m_start ? Rational(0) : -h_of(m - 1);
            iv.end = m == m_last ? sched_t1(m) : sched_t1(m) - h_of(m) / s.eta_plus;
            iv.segments = {seg(t13, lab_minus), seg(t23, lab_zero), seg(iv.end, lab_plus)};
            level1.push_back(std::move(iv));
            if (m < m_last) {
                Rational h = h_of(m);
                maxima.push_back(-h);
                TrackInterval flat;
                flat.start = sched_t1(m) - h / s.eta_plus;
                flat.end = sched_t0(m + 1) - h / s.eta_minus;
                flat.height_start = -h;
                flat.segments = {seg(flat.end, lab_zero)};
                level1.push_back(std::move(flat));
            }
        }
    }

    // Clip to [origin, end_abs] and shift so the window starts at 0.
    std::vector<std::vector<TrackInterval>> tracks(w.n() - 1);
    auto clip_into = [&](const std::vector<TrackInterval>& src, int l) {
        for (const auto& iv : src) {
            if (!(iv.start < end_abs)) continue;
            TrackInterval out;
            out.start = iv.start - origin;
            out.height_start = iv.height_start;
            Rational clip_end = Rational::min(iv.end, end_abs);
            out.end = clip_end - origin;
            Rational prev = iv.start;
            for (const auto& sg : iv.segments) {
                Rational until = Rational::min(sg.until, clip_end);
                if (prev < until) out.segments.push_back(seg(until - origin, sg.label));
                prev = until;
                if (!(sg.until < clip_end)) break;
            }
            if (!out.segments.empty() && out.start < out.end)
                tracks[l - 1].push_back(std::move(out));
        }
    };
    clip_into(level1, 1);
    if (w.n() >= 3) clip_into(level2, 2);
    DivergentResult result{GTemplate(w, Rational(0), horizon, std::move(tracks)), (int)m_start,
                           std::move(maxima)};
    return result;
}

} // namespace pgn
