#include "pgn/approximator.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace pgn {

bool IntervalGraph::edge(int i, int j) const {
    const auto& a = nodes[i];
    const auto& b = nodes[j];
    return a.start < b.end && b.start < a.end;  // open intervals intersect
}

int IntervalGraph::index_of(const IntervalRef& ref) const {
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
        if (nodes[i].ref == ref) return i;
    return -1;
}

IntervalGraph overlap_graph(const GTemplate& f) {
    IntervalGraph g;
    for (int l = 1; l <= f.n() - 1; ++l)
        for (int i = 0; i < static_cast<int>(f.track(l).size()); ++i)
            g.nodes.push_back({{l, i}, f.track(l)[i].start, f.track(l)[i].end});
    g.adjacency.assign(g.nodes.size(), {});
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i)
        for (int j = i + 1; j < static_cast<int>(g.nodes.size()); ++j)
            if (g.edge(i, j)) {
                g.adjacency[i].push_back(j);
                g.adjacency[j].push_back(i);
            }
    return g;
}

std::vector<std::vector<int>> constructible_peel(const IntervalGraph& g, int n) {
    int d = 2 * n - 4;
    std::vector<bool> removed(g.nodes.size(), false);
    std::vector<std::vector<int>> layers;
    size_t remaining = g.nodes.size();
    while (remaining > 0) {
        std::vector<int> layer;
        for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
            if (removed[i]) continue;
            bool minimal = true;
            for (int j = 0; j < static_cast<int>(g.nodes.size()) && minimal; ++j) {
                if (j == i || removed[j]) continue;
                const auto& a = g.nodes[i];
                const auto& b = g.nodes[j];
                bool strictly_inside =
                    !(b.start < a.start) && !(a.end < b.end) &&
                    (a.start != b.start || a.end != b.end);
                if (strictly_inside) minimal = false;
            }
            if (minimal) layer.push_back(i);
        }
        if (layer.empty()) throw Error("Internal", "peeling stalled");
        for (int i : layer) {
            int degree = 0;
            for (int j : g.adjacency[i])
                if (!removed[j]) ++degree;
            // Do not count same-layer vertices that were not yet conceptually
            // removed: residual degree is measured in the graph before this
            // whole layer is peeled, matching the inclusion-minimal argument.
            if (degree > d)
                throw Error("DegreeBoundViolated",
                            "residual degree " + std::to_string(degree) + " exceeds " +
                                std::to_string(d));
        }
        for (int i : layer) {
            removed[i] = true;
            --remaining;
        }
        layers.push_back(std::move(layer));
    }
    return layers;
}

Rational Enticement::evaluate(const std::map<IntervalRef, Rational>& nu) const {
    Rational v = constant;
    for (size_t i = 0; i < support.size(); ++i) {
        auto it = nu.find(support[i]);
        v += coefficients[i] * (it == nu.end() ? Rational(0) : it->second);
    }
    return v;
}

bool Enticement::satisfied(const std::map<IntervalRef, Rational>& nu) const {
    Rational v = evaluate(nu);
    return v.is_negative() || avoid_upper < v;
}

Rational EnticementSystem::theoretical_bound() const {
    int d = std::max(0, 2 * dim_n - 4);
    Rational binom_sum(0);
    Rational binom(1);
    for (int rp = 0; rp < r; ++rp) {
        binom_sum += binom;
        binom = binom * Rational(d - rp) / Rational(rp + 1);
        if (d - rp <= 0) break;
    }
    if (epsilon.is_zero()) return c1;
    return Rational(std::max(R, 1)) * binom_sum * c / epsilon;
}

SolveResult solve(const EnticementSystem& system) {
    SolveResult out;
    out.theoretical_bound = system.theoretical_bound();

    auto layers = constructible_peel(system.graph, 2 + static_cast<int>(system.graph.nodes.size()));
    // Reverse peel order: process the deepest layer first so that each vertex
    // sees at most the residual-degree many processed neighbors.
    std::vector<int> order;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
        std::vector<int> layer = *it;
        std::sort(layer.begin(), layer.end(), [&](int a, int b) {
            const auto& na = system.graph.nodes[a];
            const auto& nb = system.graph.nodes[b];
            if (na.ref.level != nb.ref.level) return na.ref.level < nb.ref.level;
            return na.start < nb.start;
        });
        for (int v : layer) order.push_back(v);
    }

    Rational margin = system.c / Rational(1024);
    if (margin.is_zero()) margin = Rational(1, 1024);
    std::map<IntervalRef, Rational> nu;
    std::set<IntervalRef> assigned;

    for (int vi : order) {
        const IntervalRef ref = system.graph.nodes[vi].ref;
        // Forbidden closed intervals for nu_ref.
        std::vector<std::pair<Rational, Rational>> forbidden;
        for (const auto& ent : system.enticements) {
            bool contains = false;
            bool ready = true;
            Rational coeff(0);
            Rational known = ent.constant;
            for (size_t i = 0; i < ent.support.size(); ++i) {
                if (ent.support[i] == ref) {
                    contains = true;
                    coeff = ent.coefficients[i];
                } else if (assigned.count(ent.support[i])) {
                    known += ent.coefficients[i] * nu.at(ent.support[i]);
                } else {
                    ready = false;
                }
            }
            if (!contains || !ready || coeff.is_zero()) continue;
            Rational lo = (Rational(0) - known) / coeff;
            Rational hi = (ent.avoid_upper - known) / coeff;
            if (hi < lo) std::swap(lo, hi);
            forbidden.emplace_back(lo, hi);
        }
        std::vector<Rational> candidates{Rational(0)};
        for (const auto& [lo, hi] : forbidden) candidates.push_back(hi + margin);
        std::sort(candidates.begin(), candidates.end(),
                  [](const Rational& a, const Rational& b) { return a < b; });
        bool chosen = false;
        for (const auto& cand : candidates) {
            if (cand.is_negative() || system.c1 < cand) continue;
            bool ok = true;
            for (const auto& [lo, hi] : forbidden)
                if (!(cand < lo) && !(hi < cand)) { ok = false; break; }
            if (ok) {
                nu[ref] = cand;
                assigned.insert(ref);
                chosen = true;
                break;
            }
        }
        if (!chosen) {
            out.feasible = false;
            out.blocking = ref;
            return out;
        }
    }
    out.feasible = true;
    out.nu = std::move(nu);
    return out;
}

namespace {

// Linear piece of a level's height track, already including the l(n-l)*C1
// base of the independent shift: tilde f = slope * t + intercept + nu_J.
struct Piece {
    int level;
    IntervalRef ref;       // {0,0} placeholder for levels 0 and n
    bool boundary_level;   // level 0 or n: no variable, zero piece
    Rational dom_lo, dom_hi;
    Rational slope;
    Rational intercept;
};

struct PieceTable {
    std::vector<std::vector<Piece>> by_level;  // index 0..n
};

PieceTable build_pieces(const GTemplate& f, const Rational& c1) {
    int n = f.n();
    PieceTable table;
    table.by_level.resize(n + 1);
    table.by_level[0].push_back(
        {0, {0, 0}, true, f.t_begin(), f.t_end(), Rational(0), Rational(0)});
    table.by_level[n].push_back(
        {n, {n, 0}, true, f.t_begin(), f.t_end(), Rational(0), Rational(0)});
    for (int l = 1; l <= n - 1; ++l) {
        Rational base = Rational(l) * Rational(n - l) * c1;
        const auto& track = f.track(l);
        for (int i = 0; i < static_cast<int>(track.size()); ++i) {
            const auto& iv = track[i];
            Rational seg_start = iv.start;
            Rational h = iv.height_start;
            for (const auto& seg : iv.segments) {
                Rational slope = eta_sum(seg.label);
                table.by_level[l].push_back(
                    {l, {l, i}, false, seg_start, seg.until, slope, h - slope * seg_start + base});
                h += slope * (seg.until - seg_start);
                seg_start = seg.until;
            }
        }
    }
    return table;
}

bool domains_share_point(const std::vector<const Piece*>& ps) {
    Rational lo = ps[0]->dom_lo, hi = ps[0]->dom_hi;
    for (const auto* p : ps) {
        lo = Rational::max(lo, p->dom_lo);
        hi = Rational::min(hi, p->dom_hi);
    }
    return !(hi < lo);
}

// Pairwise open-interval intersection over the interior pieces (clique
// condition in the overlap graph; boundary levels span the window).
bool pieces_clique(const GTemplate& f, const std::vector<const Piece*>& ps) {
    for (size_t i = 0; i < ps.size(); ++i)
        for (size_t j = i + 1; j < ps.size(); ++j) {
            if (ps[i]->boundary_level || ps[j]->boundary_level) continue;
            const auto& a = f.track(ps[i]->ref.level)[ps[i]->ref.index];
            const auto& b = f.track(ps[j]->ref.level)[ps[j]->ref.index];
            if (!(a.start < b.end && b.start < a.end)) return false;
        }
    return true;
}

void add_enticement(std::vector<Enticement>& list, std::vector<std::pair<IntervalRef, Rational>> terms,
                    const Rational& constant, const Rational& avoid_upper) {
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Enticement ent;
    ent.constant = constant;
    ent.avoid_upper = avoid_upper;
    for (auto& [ref, coeff] : terms) {
        if (coeff.is_zero()) continue;
        if (!ent.support.empty() && ent.support.back() == ref) {
            ent.coefficients.back() += coeff;
            if (ent.coefficients.back().is_zero()) {
                ent.support.pop_back();
                ent.coefficients.pop_back();
            }
            continue;
        }
        ent.support.push_back(ref);
        ent.coefficients.push_back(coeff);
    }
    if (ent.support.empty()) return;  // identically-zero candidates carry no threat
    list.push_back(std::move(ent));
}

void finalize_system(EnticementSystem& system) {
    // Dedup identical enticements, then compute the finitary data.
    std::sort(system.enticements.begin(), system.enticements.end(),
              [](const Enticement& a, const Enticement& b) {
                  auto key = [](const Enticement& e) {
                      std::string s;
                      for (size_t i = 0; i < e.support.size(); ++i)
                          s += std::to_string(e.support[i].level) + ":" +
                               std::to_string(e.support[i].index) + ":" +
                               e.coefficients[i].str() + ";";
                      s += "|" + e.constant.str() + "|" + e.avoid_upper.str();
                      return s;
                  };
                  return key(a) < key(b);
              });
    std::vector<Enticement> dedup;
    for (auto& e : system.enticements) {
        bool same = false;
        if (!dedup.empty()) {
            const auto& d = dedup.back();
            same = d.support == e.support && d.constant == e.constant &&
                   d.avoid_upper == e.avoid_upper && d.coefficients == e.coefficients;
        }
        if (!same) dedup.push_back(std::move(e));
    }
    system.enticements = std::move(dedup);

    system.r = 0;
    system.epsilon = Rational(0);
    std::map<std::string, int> support_counts;
    for (const auto& e : system.enticements) {
        system.r = std::max(system.r, static_cast<int>(e.support.size()));
        for (const auto& coeff : e.coefficients) {
            Rational a = coeff.abs();
            if (system.epsilon.is_zero() || a < system.epsilon) system.epsilon = a;
        }
        std::string key;
        for (const auto& ref : e.support)
            key += std::to_string(ref.level) + ":" + std::to_string(ref.index) + ";";
        support_counts[key]++;
    }
    system.R = 0;
    for (const auto& [k, c] : support_counts) system.R = std::max(system.R, c);
}

}  // namespace

EnticementSystem significance_system(const GTemplate& f, const Rational& c, const Rational& c1) {
    EnticementSystem system;
    system.graph = overlap_graph(f);
    system.c = c;
    system.c1 = c1;
    system.dim_n = f.n();
    int n = f.n();
    PieceTable pieces = build_pieces(f, c1);

    // Case 1: non-null vertices of f keep their time under shifts.
    for (const auto& v : vertices(f)) {
        if (v.kind != VertexKind::NonNull) continue;
        auto actives = f.active_levels(v.time);
        auto heights = f.full_heights(v.time);
        int count = static_cast<int>(actives.size());
        for (int i = 0; i < count; ++i)
            for (int j = i + 1; j < count; ++j)
                for (int k = j + 1; k < count; ++k) {
                    int lm = actives[i], l0 = actives[j], lp = actives[k];
                    if (v.level != lm && v.level != l0 && v.level != lp) continue;
                    Rational cm = Rational(1) / Rational(l0 - lm);
                    Rational cp = Rational(1) / Rational(lp - l0);
                    Rational c0 = -Rational(lp - lm) / (Rational(lp - l0) * Rational(l0 - lm));
                    std::vector<std::pair<IntervalRef, Rational>> terms;
                    Rational constant(0);
                    auto add_level = [&](int l, const Rational& coeff) {
                        if (l == 0 || l == n) return;  // zero height, zero shift
                        const auto& track = f.track(l);
                        for (int t = 0; t < static_cast<int>(track.size()); ++t)
                            if (track[t].start < v.time && v.time < track[t].end) {
                                terms.push_back({{l, t}, coeff});
                                Rational base = Rational(l) * Rational(n - l) * c1;
                                constant += coeff * (heights[l] + base);
                                return;
                            }
                    };
                    add_level(lm, cm);
                    add_level(l0, c0);
                    add_level(lp, cp);
                    add_enticement(system.enticements, std::move(terms), constant, c);
                }
    }

    // Cases 2 and 3: null vertices of the shifted template, with the collision
    // time eliminated from the affine threat expression.
    // side = +1 places the vanishing level above l0, side = -1 below.
    for (int side : {+1, -1}) {
        for (int lm = 0; lm <= n - 3; ++lm)
            for (int l0 = lm + 1; l0 <= n - 1; ++l0)
                for (int lh = l0 + 1; lh <= n - 1 + 1; ++lh)
                    for (int lp = lh + 1; lp <= n; ++lp) {
                        // Interpret (lm < l0 < lh < lp); the vanishing level is lh
                        // for side = +1 and the roles shift for side = -1.
                        int Lm, L0, Lhalf, Lp;
                        if (side > 0) {
                            Lm = lm; L0 = l0; Lhalf = lh; Lp = lp;
                        } else {
                            Lm = lm; Lhalf = l0; L0 = lh; Lp = lp;
                        }
                        if (Lhalf <= 0 || Lhalf >= n) continue;
                        if (L0 <= 0 || L0 >= n) continue;
                        for (const auto& p_m : pieces.by_level[Lm])
                            for (const auto& p_0 : pieces.by_level[L0])
                                for (const auto& p_h : pieces.by_level[Lhalf])
                                    for (const auto& p_p : pieces.by_level[Lp]) {
                                        std::vector<const Piece*> ps{&p_m, &p_0, &p_h, &p_p};
                                        if (!domains_share_point(ps)) continue;
                                        if (!pieces_clique(f, ps)) continue;
                                        // Collision equation for the vanishing level.
                                        Rational P, Q, Rr, denom;
                                        const Piece *e0, *e1;
                                        if (side > 0) {
                                            P = Rational(Lp - Lhalf);
                                            Q = Rational(Lhalf - L0);
                                            Rr = Rational(Lp - L0);
                                            e0 = &p_0;
                                            e1 = &p_p;
                                        } else {
                                            P = Rational(L0 - Lhalf);
                                            Q = Rational(Lhalf - Lm);
                                            Rr = Rational(L0 - Lm);
                                            e0 = &p_m;
                                            e1 = &p_0;
                                        }
                                        denom = P * e0->slope + Q * e1->slope - Rr * p_h.slope;
                                        if (denom.is_zero()) continue;
                                        // t0(nu) = -(P b0 + Q b1 - R bh + matching nu's) / denom
                                        Rational t_const =
                                            -(P * e0->intercept + Q * e1->intercept -
                                              Rr * p_h.intercept) / denom;
                                        std::map<const Piece*, Rational> t_coeff;
                                        t_coeff[e0] = -(P / denom);
                                        t_coeff[e1] += -(Q / denom);
                                        t_coeff[&p_h] += Rr / denom;
                                        // Threat expression at the base triple.
                                        Rational cm = Rational(1) / Rational(L0 - Lm);
                                        Rational cp = Rational(1) / Rational(Lp - L0);
                                        Rational c0 =
                                            -Rational(Lp - Lm) /
                                            (Rational(Lp - L0) * Rational(L0 - Lm));
                                        Rational A = cm * p_m.slope + cp * p_p.slope + c0 * p_0.slope;
                                        std::vector<std::pair<const Piece*, Rational>> raw{
                                            {&p_m, cm}, {&p_0, c0}, {&p_p, cp}};
                                        // constant = A * t_const + sum of base-term intercepts;
                                        // the nu coefficients combine base and collision parts.
                                        Rational constant = A * t_const;
                                        for (auto& [pp, coeff] : raw)
                                            constant += coeff * pp->intercept;
                                        std::map<const Piece*, Rational> total;
                                        for (auto& [pp, coeff] : raw) total[pp] += coeff;
                                        for (auto& [pp, tc] : t_coeff) total[pp] += A * tc;
                                        std::vector<std::pair<IntervalRef, Rational>> terms;
                                        for (auto& [pp, coeff] : total)
                                            if (!pp->boundary_level && !coeff.is_zero())
                                                terms.push_back({pp->ref, coeff});
                                        add_enticement(system.enticements, std::move(terms),
                                                       constant, c);
                                    }
                    }
    }
    finalize_system(system);
    return system;
}

namespace {

// Affine description of a potential null vertex time of the shifted template.
struct NullCandidate {
    int level;                 // level whose interval endpoint this is
    IntervalRef home;          // the interval of that level
    Rational t_const;
    std::vector<std::pair<IntervalRef, Rational>> t_coeffs;
    Rational range_lo, range_hi;  // over nu in [0, c1]^refs

    bool same_time_function(const NullCandidate& o) const {
        return t_const == o.t_const && t_coeffs == o.t_coeffs;
    }
};

}  // namespace

EnticementSystem separation_system(const GTemplate& f, const Rational& c, const Rational& c1) {
    if (!is_significant(f, Rational(5) * c1))
        throw Error("NotSignificantEnough", "separation pass requires a 5*C1-significant input");
    EnticementSystem system;
    system.graph = overlap_graph(f);
    system.c = c;
    system.c1 = c1;
    system.dim_n = f.n();
    int n = f.n();
    PieceTable pieces = build_pieces(f, c1);
    Rational avoid = c + c;  // |t - t'| < C becomes t - t' + C in [0, 2C]

    std::vector<NullCandidate> candidates;
    for (int l0 = 1; l0 <= n - 1; ++l0) {
        for (const auto& p_0 : pieces.by_level[l0]) {
            for (int lm = 0; lm < l0; ++lm)
                for (int lp = l0 + 1; lp <= n; ++lp)
                    for (const auto& p_m : pieces.by_level[lm])
                        for (const auto& p_p : pieces.by_level[lp]) {
                            std::vector<const Piece*> ps{&p_m, &p_0, &p_p};
                            if (!domains_share_point(ps)) continue;
                            if (!pieces_clique(f, ps)) continue;
                            Rational P(lp - l0), Q(l0 - lm), Rr(lp - lm);
                            Rational denom = P * p_m.slope + Q * p_p.slope - Rr * p_0.slope;
                            if (denom.is_zero()) continue;
                            NullCandidate cand;
                            cand.level = l0;
                            cand.home = p_0.ref;
                            cand.t_const =
                                -(P * p_m.intercept + Q * p_p.intercept - Rr * p_0.intercept) /
                                denom;
                            std::map<IntervalRef, Rational> coeffs;
                            if (!p_m.boundary_level) coeffs[p_m.ref] += -(P / denom);
                            if (!p_p.boundary_level) coeffs[p_p.ref] += -(Q / denom);
                            coeffs[p_0.ref] += Rr / denom;
                            cand.range_lo = cand.t_const;
                            cand.range_hi = cand.t_const;
                            for (auto& [ref, coeff] : coeffs) {
                                if (coeff.is_zero()) continue;
                                cand.t_coeffs.push_back({ref, coeff});
                                if (coeff.is_positive())
                                    cand.range_hi += coeff * c1;
                                else
                                    cand.range_lo += coeff * c1;
                            }
                            candidates.push_back(std::move(cand));
                        }
        }
    }

    // Null vertex against a fixed non-null vertex of f.
    std::vector<Rational> fixed_times;
    for (const auto& v : vertices(f))
        if (v.kind == VertexKind::NonNull) fixed_times.push_back(v.time);
    for (const auto& cand : candidates) {
        for (const auto& t_fixed : fixed_times) {
            if (cand.range_hi + avoid < t_fixed || t_fixed < cand.range_lo - avoid) continue;
            std::vector<std::pair<IntervalRef, Rational>> terms = cand.t_coeffs;
            add_enticement(system.enticements, std::move(terms), cand.t_const - t_fixed + c,
                           avoid);
        }
    }

    // Null vertex against null vertex.
    for (size_t i = 0; i < candidates.size(); ++i)
        for (size_t j = i + 1; j < candidates.size(); ++j) {
            const auto& u = candidates[i];
            const auto& v = candidates[j];
            if (u.level == v.level && u.home == v.home) continue;  // endpoints of one interval
            if (u.same_time_function(v)) continue;
            if (u.range_hi + avoid < v.range_lo || v.range_hi + avoid < u.range_lo) continue;
            std::vector<std::pair<IntervalRef, Rational>> terms = u.t_coeffs;
            for (const auto& [ref, coeff] : v.t_coeffs) terms.push_back({ref, -coeff});
            add_enticement(system.enticements, std::move(terms), u.t_const - v.t_const + c,
                           avoid);
        }

    finalize_system(system);
    return system;
}

namespace {

ShiftSequence shift_from_solution(const GTemplate& f, const Rational& c1,
                                  const std::map<IntervalRef, Rational>& nu) {
    std::map<IntervalRef, Rational> clipped;
    for (const auto& ref : interval_refs(f)) {
        auto it = nu.find(ref);
        clipped[ref] = it == nu.end() ? Rational(0) : it->second;
    }
    return ShiftSequence::independent(f, c1, clipped);
}

Rational max_d2_gap(const GTemplate& f, const GTemplate& g) {
    std::set<Rational> pts;
    for (const auto& t : f.breakpoints()) pts.insert(t);
    for (const auto& t : g.breakpoints()) pts.insert(t);
    Rational best(0);
    for (const auto& t : pts)
        for (int l = 1; l <= f.n() - 1; ++l) {
            Rational gap = (f.second_difference_at(l, t) - g.second_difference_at(l, t)).abs();
            if (best < gap) best = gap;
        }
    return best;
}

}  // namespace

ApproximationResult make_significant_separated(const GTemplate& f, const Rational& c,
                                               int max_doublings) {
    Rational esc = Rational(8) * c;
    Rational last_bound(0);
    for (int attempt = 0; attempt <= max_doublings; ++attempt, esc += esc) {
        // Pass 1: raise significance to 5*esc so the separation pass applies.
        Rational sig_target = Rational(5) * esc;
        Rational c1_stage1 = Rational(8) * sig_target;
        GTemplate stage1 = f;
        bool stage1_ok = false;
        for (int inner = 0; inner <= max_doublings; ++inner, c1_stage1 += c1_stage1) {
            EnticementSystem sig = significance_system(f, sig_target, c1_stage1);
            last_bound = sig.theoretical_bound();
            SolveResult sol = solve(sig);
            if (!sol.feasible) continue;
            GTemplate candidate = shift_template(f, shift_from_solution(f, c1_stage1, sol.nu));
            if (is_significant(candidate, sig_target)) {
                stage1 = candidate;
                stage1_ok = true;
                break;
            }
        }
        if (!stage1_ok) continue;

        // Pass 2: joint significance + separation at the requested constant.
        EnticementSystem sig2 = significance_system(stage1, c, esc);
        EnticementSystem sep = separation_system(stage1, c, esc);
        EnticementSystem joint = sig2;
        for (auto& e : sep.enticements) joint.enticements.push_back(std::move(e));
        joint.c = c;
        joint.c1 = esc;
        finalize_system(joint);
        SolveResult sol = solve(joint);
        last_bound = joint.theoretical_bound();
        if (!sol.feasible) continue;
        GTemplate result = shift_template(stage1, shift_from_solution(stage1, esc, sol.nu));
        if (!is_significant(result, c) || !is_separated(result, c)) continue;

        ApproximationResult out{result, Rational(0), Rational(0), esc};
        // Total shift magnitude: both passes move heights by at most their
        // base-plus-margin values.
        Rational m(0);
        for (int l = 1; l <= f.n() - 1; ++l) {
            Rational lev = Rational(l) * Rational(f.n() - l);
            Rational total = lev * (c1_stage1 + esc) + c1_stage1 + esc;
            if (m < total) m = total;
        }
        out.achieved_shift_bound = m;
        Rational cp = max_d2_gap(f, result);
        cp = cp + Rational::max(cp, Rational(1)) / Rational(1024);
        while (!closeness(f, result, cp)) cp += cp;
        out.closeness = cp;
        return out;
    }
    throw Error("ApproximationFailed",
                "escalation cap reached; counting bound suggests C1 > " + last_bound.str());
}

std::string system_to_json(const EnticementSystem& system) {
    nlohmann::json j;
    j["C"] = system.c.str();
    j["C1"] = system.c1.str();
    j["epsilon"] = system.epsilon.str();
    j["r"] = system.r;
    j["R"] = system.R;
    j["vertices"] = nlohmann::json::array();
    for (const auto& node : system.graph.nodes) {
        nlohmann::json v;
        v["level"] = node.ref.level;
        v["index"] = node.ref.index;
        v["start"] = node.start.str();
        v["end"] = node.end.str();
        j["vertices"].push_back(v);
    }
    j["enticements"] = nlohmann::json::array();
    for (const auto& e : system.enticements) {
        nlohmann::json je;
        je["constant"] = e.constant.str();
        je["avoid_upper"] = e.avoid_upper.str();
        je["support"] = nlohmann::json::array();
        for (size_t i = 0; i < e.support.size(); ++i) {
            nlohmann::json term;
            term["level"] = e.support[i].level;
            term["index"] = e.support[i].index;
            term["coefficient"] = e.coefficients[i].str();
            je["support"].push_back(term);
        }
        j["enticements"].push_back(je);
    }
    return j.dump(2);
}

} // namespace pgn
