#include "pgn/template.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace pgn {

namespace {

Rational interval_height(const TrackInterval& iv, const Rational& t) {
    Rational h = iv.height_start;
    Rational prev = iv.start;
    for (const auto& seg : iv.segments) {
        Rational upto = Rational::min(seg.until, t);
        if (prev < upto) {
            h += eta_sum(seg.label) * (upto - prev);
            prev = upto;
        }
        if (!(seg.until < t)) break;
    }
    return h;
}

// Piecewise-linear cross-section through the given (level, height) nodes,
// evaluated at every level 0..n. Nodes must include 0 and n.
std::vector<Rational> interpolate_cross_section(const std::vector<std::pair<int, Rational>>& nodes,
                                                int n) {
    std::vector<Rational> xs, ys;
    for (const auto& [l, h] : nodes) {
        xs.push_back(Rational(l));
        ys.push_back(h);
    }
    PLFunction pl(xs, ys);
    std::vector<Rational> out;
    out.reserve(n + 1);
    for (int l = 0; l <= n; ++l) out.push_back(pl(Rational(l)));
    return out;
}

}  // namespace

GTemplate::GTemplate(Weights w, Rational t_begin, Rational t_end,
                     std::vector<std::vector<TrackInterval>> tracks)
    : weights_(std::move(w)), t_begin_(std::move(t_begin)), t_end_(std::move(t_end)),
      tracks_(std::move(tracks)) {
    if (t_end_ < t_begin_) throw Error("DegenerateWindow", "window must be ordered");
    if (static_cast<int>(tracks_.size()) != weights_.n() - 1)
        throw Error("LevelMismatch", "need one track per level 1..n-1");
    for (auto& track : tracks_) {
        for (size_t i = 0; i < track.size(); ++i) {
            const auto& iv = track[i];
            if (!(iv.start < iv.end))
                throw Error("BadInterval", "interval must have positive length");
            if (iv.start < t_begin_ || t_end_ < iv.end)
                throw Error("TimeOutOfWindow", "interval outside the window");
            if (iv.segments.empty())
                throw Error("BadInterval", "interval needs at least one segment");
            Rational prev = iv.start;
            for (const auto& seg : iv.segments) {
                if (!(prev < seg.until))
                    throw Error("BadInterval", "segment breakpoints must increase");
                prev = seg.until;
            }
            if (iv.segments.back().until != iv.end)
                throw Error("BadInterval", "last segment must reach the interval end");
            if (i + 1 < track.size() && track[i + 1].start < iv.end)
                throw Error("BadInterval", "intervals must be disjoint and ordered");
        }
    }
}

GTemplate GTemplate::trivial(const Weights& w, const Rational& t_begin, const Rational& t_end) {
    return GTemplate(w, t_begin, t_end,
                     std::vector<std::vector<TrackInterval>>(w.n() - 1));
}

std::vector<Rational> GTemplate::breakpoints() const {
    std::set<Rational> pts{t_begin_, t_end_};
    for (const auto& track : tracks_)
        for (const auto& iv : track) {
            pts.insert(iv.start);
            for (const auto& seg : iv.segments) pts.insert(seg.until);
        }
    return std::vector<Rational>(pts.begin(), pts.end());
}

std::vector<int> GTemplate::active_levels(const Rational& t) const {
    std::vector<int> out{0};
    for (int l = 1; l <= n() - 1; ++l)
        for (const auto& iv : track(l)) {
            // Intervals touching the window boundary count as active there:
            // the window edge carries no vertex, so heights continue to the
            // one-sided limit.
            bool inside = iv.start < t && t < iv.end;
            bool at_left_edge = t == t_begin_ && iv.start == t;
            bool at_right_edge = t == t_end_ && iv.end == t;
            if (inside || at_left_edge || at_right_edge) {
                out.push_back(l);
                break;
            }
        }
    out.push_back(n());
    return out;
}

std::optional<WeightMultiset> GTemplate::label_at(int l, const Rational& t) const {
    for (const auto& iv : track(l)) {
        if (t < iv.start || !(t < iv.end)) continue;
        Rational prev = iv.start;
        for (const auto& seg : iv.segments) {
            if (!(t < prev) && t < seg.until) return seg.label;
            prev = seg.until;
        }
    }
    return std::nullopt;
}

std::optional<Rational> GTemplate::track_height(int l, const Rational& t) const {
    for (const auto& iv : track(l))
        if (!(t < iv.start) && !(iv.end < t)) return interval_height(iv, t);
    return std::nullopt;
}

std::vector<Rational> GTemplate::full_heights(const Rational& t) const {
    std::vector<std::pair<int, Rational>> nodes{{0, Rational(0)}};
    for (int l = 1; l <= n() - 1; ++l)
        for (const auto& iv : track(l)) {
            bool inside = iv.start < t && t < iv.end;
            bool at_left_edge = t == t_begin_ && iv.start == t;
            bool at_right_edge = t == t_end_ && iv.end == t;
            if (inside || at_left_edge || at_right_edge) {
                nodes.emplace_back(l, interval_height(iv, t));
                break;
            }
        }
    nodes.emplace_back(n(), Rational(0));
    return interpolate_cross_section(nodes, n());
}

Rational GTemplate::second_difference_at(int l, const Rational& t) const {
    return second_difference(full_heights(t), l);
}

bool GTemplate::operator==(const GTemplate& o) const {
    if (!(weights_ == o.weights_) || t_begin_ != o.t_begin_ || t_end_ != o.t_end_) return false;
    if (tracks_.size() != o.tracks_.size()) return false;
    for (size_t l = 0; l < tracks_.size(); ++l) {
        if (tracks_[l].size() != o.tracks_[l].size()) return false;
        for (size_t i = 0; i < tracks_[l].size(); ++i) {
            const auto& a = tracks_[l][i];
            const auto& b = o.tracks_[l][i];
            if (a.start != b.start || a.end != b.end || a.height_start != b.height_start)
                return false;
            if (a.segments.size() != b.segments.size()) return false;
            for (size_t j = 0; j < a.segments.size(); ++j)
                if (a.segments[j].until != b.segments[j].until ||
                    !(a.segments[j].label == b.segments[j].label))
                    return false;
        }
    }
    return true;
}

namespace {

// Heights at time t with a prescribed active set (used for one-sided limits
// at breakpoints, where the strict active set drops closing levels).
std::vector<Rational> heights_with_actives(const GTemplate& f, const std::vector<int>& actives,
                                           const Rational& t) {
    std::vector<std::pair<int, Rational>> nodes{{0, Rational(0)}};
    for (int l : actives) {
        if (l == 0 || l == f.n()) continue;
        auto h = f.track_height(l, t);
        nodes.emplace_back(l, h ? *h : Rational(0));
    }
    nodes.emplace_back(f.n(), Rational(0));
    return interpolate_cross_section(nodes, f.n());
}

}  // namespace

std::vector<Violation> validate(const GTemplate& f) {
    std::vector<Violation> report;
    const Weights& w = f.weights();
    int n = f.n();

    // Per-track label checks.
    for (int l = 1; l <= n - 1; ++l) {
        for (const auto& iv : f.track(l)) {
            const WeightMultiset* prev = nullptr;
            for (const auto& seg : iv.segments) {
                if (seg.label.size() != l)
                    report.push_back({"LabelSize", l, seg.until,
                                      "label size " + std::to_string(seg.label.size())});
                else if (!seg.label.is_submultiset_of(w))
                    report.push_back({"LabelNotSubmultiset", l, seg.until, ""});
                else if (prev && prev->size() == l) {
                    bool ok = leq(*prev, seg.label) && !(*prev == seg.label);
                    if (!ok)
                        report.push_back({"IllegalTransition", l, seg.until,
                                          "labels must strictly increase"});
                }
                prev = &seg.label;
            }
        }
    }
    if (!report.empty()) return report;  // later checks assume well-typed labels

    auto bps = f.breakpoints();

    // Mid-segment checks: compatibility (nesting) and strict convexity.
    for (size_t j = 0; j + 1 < bps.size(); ++j) {
        Rational mid = (bps[j] + bps[j + 1]) / Rational(2);
        auto actives = f.active_levels(mid);
        std::optional<WeightMultiset> prev;
        for (int l : actives) {
            if (l == 0) continue;
            WeightMultiset cur = (l == n) ? WeightMultiset(w.values()) : *f.label_at(l, mid);
            if (prev && !cur.contains_submultiset(*prev))
                report.push_back({"Compatibility", l, mid, "active labels are not nested"});
            prev = std::move(cur);
        }
        auto hs = f.full_heights(mid);
        for (int l : actives)
            if (l >= 1 && l <= n - 1 && !second_difference(hs, l).is_positive())
                report.push_back({"ConvexityNotStrict", l, mid,
                                  "active level with nonpositive second difference"});
        // One-sided limits at the segment endpoints must stay convex.
        for (const Rational& t : {bps[j], bps[j + 1]}) {
            auto hl = heights_with_actives(f, actives, t);
            for (int l : actives)
                if (l >= 1 && l <= n - 1 && second_difference(hl, l).is_negative())
                    report.push_back({"ConvexityBroken", l, t,
                                      "negative second difference at segment boundary"});
        }
    }

    // Continuity at interior breakpoints: the one-sided limits of the full
    // height sequence must agree. This covers interval openings, closings,
    // and isolated null points where a track closes and reopens at once.
    auto one_sided_heights = [&](const Rational& t, bool left) {
        std::vector<std::pair<int, Rational>> nodes{{0, Rational(0)}};
        for (int l = 1; l <= n - 1; ++l)
            for (const auto& iv : f.track(l)) {
                bool active = left ? (iv.start < t && !(iv.end < t))
                                   : (!(t < iv.start) && t < iv.end);
                if (active) {
                    nodes.emplace_back(l, interval_height(iv, t));
                    break;
                }
            }
        nodes.emplace_back(n, Rational(0));
        return interpolate_cross_section(nodes, n);
    };
    for (const auto& t : bps) {
        if (!(f.t_begin() < t) || !(t < f.t_end())) continue;
        auto left = one_sided_heights(t, true);
        auto right = one_sided_heights(t, false);
        for (int l = 1; l <= n - 1; ++l)
            if (left[l] != right[l]) {
                report.push_back({"ContinuityViolation", l, t,
                                  "left limit " + left[l].str() + " vs right limit " +
                                      right[l].str()});
                break;
            }
    }
    return report;
}

std::vector<Vertex> vertices(const GTemplate& f) {
    std::vector<Vertex> out;
    int n = f.n();
    auto impacted_of = [&](const Rational& t, int l0) {
        auto act = f.active_levels(t);
        int lo = 0, hi = n;
        for (int l : act) {
            if (l < l0) lo = std::max(lo, l);
            if (l > l0) hi = std::min(hi, l);
        }
        // For a non-null vertex l0 is itself active; take its neighbors.
        return std::vector<int>{lo, l0, hi};
    };
    for (int l = 1; l <= n - 1; ++l) {
        for (const auto& iv : f.track(l)) {
            if (f.t_begin() < iv.start) {
                Vertex v{iv.start, l, VertexKind::NullOpen, std::nullopt,
                         iv.segments.front().label, impacted_of(iv.start, l)};
                out.push_back(std::move(v));
            }
            for (size_t j = 0; j + 1 < iv.segments.size(); ++j) {
                Vertex v{iv.segments[j].until, l, VertexKind::NonNull, iv.segments[j].label,
                         iv.segments[j + 1].label, impacted_of(iv.segments[j].until, l)};
                out.push_back(std::move(v));
            }
            if (iv.end < f.t_end()) {
                Vertex v{iv.end, l, VertexKind::NullClose, iv.segments.back().label,
                         std::nullopt, impacted_of(iv.end, l)};
                out.push_back(std::move(v));
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Vertex& a, const Vertex& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.level < b.level;
    });
    return out;
}

std::vector<DeltaPiece> delta_profile(const GTemplate& f) {
    auto bps = f.breakpoints();
    WeightMultiset all(f.weights().values());
    std::vector<DeltaPiece> out;
    for (size_t j = 0; j + 1 < bps.size(); ++j) {
        Rational mid = (bps[j] + bps[j + 1]) / Rational(2);
        std::vector<WeightMultiset> chain{WeightMultiset::empty()};
        for (int l : f.active_levels(mid))
            if (l >= 1 && l <= f.n() - 1) chain.push_back(*f.label_at(l, mid));
        chain.push_back(all);
        Rational d = delta_chain(chain);
        if (!out.empty() && out.back().value == d && out.back().to == bps[j])
            out.back().to = bps[j + 1];
        else
            out.push_back({bps[j], bps[j + 1], d});
    }
    return out;
}

Rational delta0(const GTemplate& f) {
    Rational len = f.window_length();
    if (len.is_zero()) throw Error("DegenerateWindow", "cannot average over an empty window");
    Rational total(0);
    for (const auto& piece : delta_profile(f)) total += piece.value * (piece.to - piece.from);
    return total / len;
}

bool is_significant(const GTemplate& f, const Rational& c) {
    for (const auto& v : vertices(f)) {
        auto hs = f.full_heights(v.time);
        for (int l : v.impacted) {
            if (l < 1 || l > f.n() - 1) continue;
            Rational d = second_difference(hs, l);
            if (!d.is_zero() && !(d > c)) return false;
        }
    }
    return true;
}

bool is_separated(const GTemplate& f, const Rational& c) {
    auto verts = vertices(f);
    for (size_t i = 0; i < verts.size(); ++i) {
        if (verts[i].kind == VertexKind::NonNull) continue;
        for (size_t j = 0; j < verts.size(); ++j) {
            if (j == i) continue;
            if ((verts[i].time - verts[j].time).abs() < c) return false;
        }
    }
    return true;
}

namespace {

// Maximal stretches where f's label at l is constant E and the second
// difference stays >= c.
struct LabelRun {
    Rational from;
    Rational to;
    WeightMultiset label;
};

std::vector<LabelRun> significant_label_runs(const GTemplate& f, int l, const Rational& c) {
    auto bps = f.breakpoints();
    std::vector<LabelRun> runs;
    for (size_t j = 0; j + 1 < bps.size(); ++j) {
        const Rational& a = bps[j];
        const Rational& b = bps[j + 1];
        Rational mid = (a + b) / Rational(2);
        auto label = f.label_at(l, mid);
        if (!label) continue;
        // Second difference is affine on the segment; find {d2 >= c}.
        Rational da = second_difference(heights_with_actives(f, f.active_levels(mid), a), l);
        Rational db = second_difference(heights_with_actives(f, f.active_levels(mid), b), l);
        Rational lo = a, hi = b;
        if (da < c && db < c) continue;
        if (da < c) lo = a + (b - a) * (c - da) / (db - da);
        if (db < c) hi = a + (b - a) * (c - da) / (db - da);
        if (hi < lo) continue;
        if (!runs.empty() && runs.back().to == lo && runs.back().label == *label)
            runs.back().to = hi;
        else
            runs.push_back({lo, hi, *label});
    }
    std::vector<LabelRun> out;
    for (const auto& r : runs)
        if (r.from < r.to) out.push_back(r);
    return out;
}

// All of g's labels at level l on the open interval (lo, hi) equal E.
bool label_constant_on(const GTemplate& g, int l, const Rational& lo, const Rational& hi,
                       const WeightMultiset& e) {
    auto bps = g.breakpoints();
    std::vector<Rational> cuts{lo};
    for (const auto& t : bps)
        if (lo < t && t < hi) cuts.push_back(t);
    cuts.push_back(hi);
    for (size_t j = 0; j + 1 < cuts.size(); ++j) {
        Rational mid = (cuts[j] + cuts[j + 1]) / Rational(2);
        auto label = g.label_at(l, mid);
        if (!label || !(*label == e)) return false;
    }
    return true;
}

}  // namespace

bool closeness(const GTemplate& f, const GTemplate& g, const Rational& c) {
    if (!(f.weights() == g.weights()) || f.t_begin() != g.t_begin() || f.t_end() != g.t_end())
        throw Error("WindowMismatch", "closeness requires equal weights and window");
    std::set<Rational> pts;
    for (const auto& t : f.breakpoints()) pts.insert(t);
    for (const auto& t : g.breakpoints()) pts.insert(t);
    for (const auto& t : pts)
        for (int l = 1; l <= f.n() - 1; ++l) {
            // Second differences are continuous and piecewise affine, so the
            // sup of their gap is attained at a union breakpoint.
            Rational gap = (f.second_difference_at(l, t) - g.second_difference_at(l, t)).abs();
            if (!(gap < c)) return false;
        }
    auto check_direction = [&](const GTemplate& a, const GTemplate& b) {
        for (int l = 1; l <= a.n() - 1; ++l)
            for (const auto& run : significant_label_runs(a, l, c)) {
                if (run.to - run.from < c + c) continue;
                Rational lo = run.from + c;
                Rational hi = run.to - c;
                if (!(lo < hi)) continue;
                if (!label_constant_on(b, l, lo, hi, run.label)) return false;
            }
        return true;
    };
    return check_direction(f, g) && check_direction(g, f);
}

std::vector<SampleRow> sample(const GTemplate& f, const std::vector<Rational>& grid) {
    std::vector<SampleRow> rows;
    for (const auto& t : grid) {
        if (t < f.t_begin() || f.t_end() < t)
            throw Error("TimeOutOfWindow", "sample time outside the window");
        SampleRow row;
        row.t = t;
        auto hs = f.full_heights(t);
        for (int l = 1; l <= f.n() - 1; ++l) {
            row.heights.push_back(hs[l]);
            row.labels.push_back(f.label_at(l, t));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<IntervalRef> interval_refs(const GTemplate& f) {
    std::vector<IntervalRef> out;
    for (int l = 1; l <= f.n() - 1; ++l)
        for (int i = 0; i < static_cast<int>(f.track(l).size()); ++i)
            out.push_back({l, i});
    return out;
}

ShiftSequence ShiftSequence::constant(const GTemplate& f, const std::vector<Rational>& per_level) {
    if (static_cast<int>(per_level.size()) != f.n() + 1)
        throw Error("SizeMismatch", "need one shift value per level 0..n");
    if (!per_level.front().is_zero() || !per_level.back().is_zero())
        throw Error("NotConcave", "shift must vanish at levels 0 and n");
    for (int l = 1; l < f.n(); ++l)
        if (second_difference(per_level, l).is_positive())
            throw Error("NotConcave", "per-level shift must be concave");
    ShiftSequence s;
    for (const auto& ref : interval_refs(f)) s.values_[ref] = per_level[ref.level];
    return s;
}

ShiftSequence ShiftSequence::independent(const GTemplate& f, const Rational& c,
                                         const std::map<IntervalRef, Rational>& nu) {
    ShiftSequence s;
    for (const auto& ref : interval_refs(f)) {
        Rational base = Rational(ref.level) * Rational(f.n() - ref.level) * c;
        auto it = nu.find(ref);
        Rational extra = it == nu.end() ? Rational(0) : it->second;
        if (extra.is_negative() || extra > c)
            throw Error("NotConcave", "independent shift needs nu in [0, C]");
        s.values_[ref] = base + extra;
    }
    return s;
}

Rational ShiftSequence::at(const IntervalRef& ref) const {
    auto it = values_.find(ref);
    if (it == values_.end()) throw Error("NotLocallyConstant", "missing shift value");
    return it->second;
}

namespace {

struct ActivePiece {
    int level;
    int interval_index;
    Rational slope;      // eta of the label on this elementary segment
    Rational intercept;  // height(t) = slope * t + intercept
};

// Affine description of every active level on the open segment (a, b).
std::vector<ActivePiece> segment_pieces(const GTemplate& f, const Rational& a, const Rational& b) {
    Rational mid = (a + b) / Rational(2);
    std::vector<ActivePiece> out;
    for (int l = 1; l <= f.n() - 1; ++l) {
        const auto& track = f.track(l);
        for (int i = 0; i < static_cast<int>(track.size()); ++i) {
            if (!(track[i].start < mid && mid < track[i].end)) continue;
            Rational slope = eta_sum(*f.label_at(l, mid));
            Rational h_mid = interval_height(track[i], mid);
            out.push_back({l, i, slope, h_mid - slope * mid});
        }
    }
    return out;
}

}  // namespace

GTemplate shift_template(const GTemplate& f, const ShiftSequence& rho) {
    int n = f.n();
    auto bps = f.breakpoints();

    // Survival test at an exact time t: level strictly below every chord of
    // the shifted cross-section.
    auto survives_at = [&](int l, const Rational& t) {
        auto actives = f.active_levels(t);
        bool found = false;
        for (int a : actives) found |= (a == l);
        if (!found) return false;
        std::vector<std::pair<int, Rational>> pts;
        for (int a : actives) {
            Rational v(0);
            if (a >= 1 && a <= n - 1) {
                const auto& track = f.track(a);
                int idx = -1;
                for (int i = 0; i < static_cast<int>(track.size()); ++i)
                    if (track[i].start < t && t < track[i].end) idx = i;
                v = *f.track_height(a, t) + rho.at({a, idx});
            }
            pts.emplace_back(a, v);
        }
        Rational mine(0);
        for (const auto& [lm, vm] : pts)
            if (lm == l) mine = vm;
        for (const auto& [l1, v1] : pts)
            for (const auto& [l2, v2] : pts) {
                if (!(l1 < l && l < l2)) continue;
                Rational alpha = Rational(l2 - l) / Rational(l2 - l1);
                Rational chord = alpha * v1 + (Rational(1) - alpha) * v2;
                if (!(mine < chord)) return false;
            }
        return true;
    };

    // Raw survival pieces per level: closed [lo, hi] per elementary segment.
    struct Piece {
        Rational lo, hi;
        int interval_index;
    };
    std::vector<std::vector<Piece>> pieces(n - 1);

    for (size_t j = 0; j + 1 < bps.size(); ++j) {
        const Rational& a = bps[j];
        const Rational& b = bps[j + 1];
        auto actives = segment_pieces(f, a, b);

        // Concavity of the shift over this cross-section.
        {
            std::vector<std::pair<int, Rational>> rho_pts{{0, Rational(0)}};
            for (const auto& p : actives) rho_pts.emplace_back(p.level, rho.at({p.level, p.interval_index}));
            rho_pts.emplace_back(n, Rational(0));
            for (size_t i = 1; i + 1 < rho_pts.size(); ++i) {
                auto [l0, v0] = rho_pts[i - 1];
                auto [l1, v1] = rho_pts[i];
                auto [l2, v2] = rho_pts[i + 1];
                Rational alpha = Rational(l2 - l1) / Rational(l2 - l0);
                Rational chord = alpha * v0 + (Rational(1) - alpha) * v2;
                if (v1 < chord) throw Error("NotConcave", "shift sequence fails concavity");
            }
        }

        // Shifted affine values per node (level 0 and n pinned at zero).
        std::vector<std::tuple<int, Rational, Rational>> nodes;  // level, slope, intercept
        nodes.emplace_back(0, Rational(0), Rational(0));
        for (const auto& p : actives)
            nodes.emplace_back(p.level, p.slope, p.intercept + rho.at({p.level, p.interval_index}));
        nodes.emplace_back(n, Rational(0), Rational(0));

        for (const auto& p : actives) {
            // Survival region: all chords strictly above, intersected with [a, b].
            Rational lo = a, hi = b;
            bool empty = false;
            for (const auto& [l1, s1, c1] : nodes)
                for (const auto& [l2, s2, c2] : nodes) {
                    if (!(l1 < p.level && p.level < l2)) continue;
                    Rational alpha = Rational(l2 - p.level) / Rational(l2 - l1);
                    Rational gs = alpha * s1 + (Rational(1) - alpha) * s2 - p.slope;
                    Rational gc = alpha * c1 + (Rational(1) - alpha) * c2 -
                                  (p.intercept + rho.at({p.level, p.interval_index}));
                    // chord - value = gs * t + gc must be > 0.
                    if (gs.is_zero()) {
                        if (!gc.is_positive()) empty = true;
                    } else if (gs.is_positive()) {
                        lo = Rational::max(lo, -gc / gs);
                    } else {
                        hi = Rational::min(hi, -gc / gs);
                    }
                }
            if (empty || !(lo < hi)) continue;
            pieces[p.level - 1].push_back({lo, hi, p.interval_index});
        }
    }

    // Stitch pieces into intervals; adjacent pieces merge when the level
    // genuinely survives at the shared time.
    std::vector<std::vector<TrackInterval>> tracks(n - 1);
    for (int l = 1; l <= n - 1; ++l) {
        auto& ps = pieces[l - 1];
        std::sort(ps.begin(), ps.end(), [](const Piece& x, const Piece& y) { return x.lo < y.lo; });
        size_t i = 0;
        while (i < ps.size()) {
            Rational lo = ps[i].lo;
            Rational hi = ps[i].hi;
            int idx = ps[i].interval_index;
            size_t j = i + 1;
            while (j < ps.size() && ps[j].interval_index == idx && ps[j].lo == hi &&
                   survives_at(l, hi)) {
                hi = ps[j].hi;
                ++j;
            }
            i = j;
            if (!(lo < hi)) continue;
            TrackInterval iv;
            iv.start = lo;
            iv.end = hi;
            iv.height_start = interval_height(f.track(l)[idx], lo) + rho.at({l, idx});
            const auto& src = f.track(l)[idx];
            for (const auto& seg : src.segments) {
                if (!(lo < seg.until)) continue;
                TrackSegment out_seg;
                out_seg.until = Rational::min(seg.until, hi);
                out_seg.label = seg.label;
                if (iv.segments.empty() || !(iv.segments.back().label == out_seg.label))
                    iv.segments.push_back(std::move(out_seg));
                else
                    iv.segments.back().until = out_seg.until;
                if (!(iv.segments.back().until < hi)) break;
            }
            tracks[l - 1].push_back(std::move(iv));
        }
    }
    return GTemplate(f.weights(), f.t_begin(), f.t_end(), std::move(tracks));
}

// --- serialization ---

namespace {

nlohmann::json multiset_json(const WeightMultiset& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : m.values()) arr.push_back(v.str());
    return arr;
}

WeightMultiset multiset_from_json(const nlohmann::json& arr) {
    std::vector<Rational> vals;
    for (const auto& s : arr) vals.push_back(Rational::parse(s.get<std::string>()));
    return WeightMultiset(std::move(vals));
}

}  // namespace

std::string to_json(const GTemplate& f) {
    nlohmann::json j;
    j["weights"] = nlohmann::json::array();
    for (const auto& v : f.weights().values()) j["weights"].push_back(v.str());
    j["window"] = {f.t_begin().str(), f.t_end().str()};
    j["levels"] = nlohmann::json::array();
    for (int l = 1; l <= f.n() - 1; ++l) {
        nlohmann::json level;
        level["l"] = l;
        level["intervals"] = nlohmann::json::array();
        for (const auto& iv : f.track(l)) {
            nlohmann::json jiv;
            jiv["start"] = iv.start.str();
            jiv["end"] = iv.end.str();
            jiv["height_start"] = iv.height_start.str();
            jiv["segments"] = nlohmann::json::array();
            for (const auto& seg : iv.segments) {
                nlohmann::json js;
                js["until"] = seg.until.str();
                js["multiset"] = multiset_json(seg.label);
                jiv["segments"].push_back(js);
            }
            level["intervals"].push_back(jiv);
        }
        j["levels"].push_back(level);
    }
    return j.dump(2);
}

GTemplate template_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<Rational> wvals;
    for (const auto& s : j.at("weights")) wvals.push_back(Rational::parse(s.get<std::string>()));
    Weights w = Weights::create(std::move(wvals));
    Rational t0 = Rational::parse(j.at("window").at(0).get<std::string>());
    Rational t1 = Rational::parse(j.at("window").at(1).get<std::string>());
    std::vector<std::vector<TrackInterval>> tracks(w.n() - 1);
    for (const auto& level : j.at("levels")) {
        int l = level.at("l").get<int>();
        if (l < 1 || l > w.n() - 1) throw Error("LevelOutOfRange", "level outside 1..n-1");
        for (const auto& jiv : level.at("intervals")) {
            TrackInterval iv;
            iv.start = Rational::parse(jiv.at("start").get<std::string>());
            iv.end = Rational::parse(jiv.at("end").get<std::string>());
            iv.height_start = Rational::parse(jiv.at("height_start").get<std::string>());
            for (const auto& js : jiv.at("segments")) {
                TrackSegment seg;
                seg.until = Rational::parse(js.at("until").get<std::string>());
                seg.label = multiset_from_json(js.at("multiset"));
                iv.segments.push_back(std::move(seg));
            }
            tracks[l - 1].push_back(std::move(iv));
        }
    }
    return GTemplate(std::move(w), std::move(t0), std::move(t1), std::move(tracks));
}

std::string to_csv(const std::vector<SampleRow>& rows, int n) {
    std::ostringstream out;
    out << "t";
    for (int l = 1; l <= n - 1; ++l) out << ",fH" << l;
    for (int l = 1; l <= n - 1; ++l) out << ",labels" << l;
    out << "\n";
    for (const auto& row : rows) {
        out << row.t.str();
        for (const auto& h : row.heights) out << "," << h.str();
        for (const auto& label : row.labels) {
            out << ",";
            if (!label) {
                out << "*";
            } else {
                const auto& vs = label->values();
                for (size_t i = 0; i < vs.size(); ++i) {
                    if (i) out << "|";
                    out << vs[i].str();
                }
            }
        }
        out << "\n";
    }
    return out.str();
}

std::string to_svg(const GTemplate& f) {
    // A plain polyline plot of the height tracks over the breakpoint grid.
    auto bps = f.breakpoints();
    double t0 = f.t_begin().to_double(), t1 = f.t_end().to_double();
    double hmin = 0.0;
    std::vector<std::vector<std::pair<double, double>>> lines(f.n() - 1);
    for (const auto& t : bps) {
        auto hs = f.full_heights(t);
        for (int l = 1; l <= f.n() - 1; ++l) {
            double y = hs[l].to_double();
            hmin = std::min(hmin, y);
            lines[l - 1].emplace_back(t.to_double(), y);
        }
    }
    double width = 800, height = 400;
    double yspan = hmin < -1e-12 ? -hmin : 1.0;
    auto px = [&](double t) { return (t - t0) / std::max(1e-12, t1 - t0) * (width - 40) + 20; };
    auto py = [&](double h) { return 20 - h / yspan * (height - 60); };
    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n";
    svg << "<line x1='" << px(t0) << "' y1='" << py(0) << "' x2='" << px(t1) << "' y2='" << py(0)
        << "' stroke='black' stroke-width='1'/>\n";
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
    for (int l = 1; l <= f.n() - 1; ++l) {
        svg << "<polyline fill='none' stroke='" << colors[(l - 1) % 5] << "' stroke-width='2' points='";
        for (const auto& [x, y] : lines[l - 1]) svg << px(x) << "," << py(y) << " ";
        svg << "'/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace pgn
