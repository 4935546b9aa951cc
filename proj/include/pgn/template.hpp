#pragma once

// Piecewise-linear g-templates: multiset-labeled tracks per level plus height
// tracks obeying the slope law, with validation, vertices, shift operation,
// significance / separation / closeness predicates and the delta profile.

#include "pgn/convex.hpp"
#include "pgn/error.hpp"
#include "pgn/rational.hpp"
#include "pgn/weights.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pgn {

struct TrackSegment {
    Rational until;
    WeightMultiset label;
};

struct TrackInterval {
    Rational start;
    Rational end;
    Rational height_start;
    std::vector<TrackSegment> segments;  // last until == end; labels strictly increase
};

class GTemplate {
public:
    GTemplate(Weights w, Rational t_begin, Rational t_end,
              std::vector<std::vector<TrackInterval>> tracks);

    static GTemplate trivial(const Weights& w, const Rational& t_begin, const Rational& t_end);

    const Weights& weights() const { return weights_; }
    int n() const { return weights_.n(); }
    const Rational& t_begin() const { return t_begin_; }
    const Rational& t_end() const { return t_end_; }
    Rational window_length() const { return t_end_ - t_begin_; }

    const std::vector<TrackInterval>& track(int l) const { return tracks_.at(l - 1); }
    const std::vector<std::vector<TrackInterval>>& tracks() const { return tracks_; }

    // All structure-changing times, including the window endpoints.
    std::vector<Rational> breakpoints() const;

    // Levels whose nontriviality interval strictly contains t, plus 0 and n.
    std::vector<int> active_levels(const Rational& t) const;

    // Label of the track at level l; half-open convention [start, end) and
    // [segment start, until) so evaluation at breakpoints is deterministic.
    std::optional<WeightMultiset> label_at(int l, const Rational& t) const;

    // Height of the track at level l for t inside the closure of an interval.
    std::optional<Rational> track_height(int l, const Rational& t) const;

    // Full height sequence at t: active levels carry track heights, trivial
    // levels interpolate linearly between active neighbors.
    std::vector<Rational> full_heights(const Rational& t) const;

    Rational height(int l, const Rational& t) const { return full_heights(t).at(l); }
    Rational second_difference_at(int l, const Rational& t) const;

    bool operator==(const GTemplate& o) const;

private:
    Weights weights_;
    Rational t_begin_;
    Rational t_end_;
    std::vector<std::vector<TrackInterval>> tracks_;
};

struct Violation {
    std::string code;
    int level = 0;
    Rational time;
    std::string detail;
};

// Empty report means the template satisfies all invariants.
std::vector<Violation> validate(const GTemplate& f);

enum class VertexKind { NullOpen, NullClose, NonNull };

struct Vertex {
    Rational time;
    int level = 0;
    VertexKind kind = VertexKind::NonNull;
    std::optional<WeightMultiset> from;
    std::optional<WeightMultiset> to;
    std::vector<int> impacted;  // l and its neighbors in L_f(t), clipped to [0, n]
};

std::vector<Vertex> vertices(const GTemplate& f);

struct DeltaPiece {
    Rational from;
    Rational to;
    Rational value;
};

// Piecewise-constant t -> delta(active filtration).
std::vector<DeltaPiece> delta_profile(const GTemplate& f);

// Average of the delta profile over the window.
Rational delta0(const GTemplate& f);

bool is_significant(const GTemplate& f, const Rational& c);
bool is_separated(const GTemplate& f, const Rational& c);
bool closeness(const GTemplate& f, const GTemplate& g, const Rational& c);

struct SampleRow {
    Rational t;
    std::vector<Rational> heights;              // levels 1..n-1
    std::vector<std::optional<WeightMultiset>> labels;
};

std::vector<SampleRow> sample(const GTemplate& f, const std::vector<Rational>& grid);

// Interval identifier within a template: level and interval index.
struct IntervalRef {
    int level = 0;
    int index = 0;
    bool operator<(const IntervalRef& o) const {
        return level != o.level ? level < o.level : index < o.index;
    }
    bool operator==(const IntervalRef& o) const { return level == o.level && index == o.index; }
};

// All nontriviality intervals of levels 1..n-1 in (level, index) order.
std::vector<IntervalRef> interval_refs(const GTemplate& f);

// Shift sequence: one constant per nontriviality interval (levels 0 and n are
// implicitly zero).
class ShiftSequence {
public:
    ShiftSequence() = default;

    // rho_l constant per level; rho must be a concave sequence with
    // rho_0 = rho_n = 0.
    static ShiftSequence constant(const GTemplate& f, const std::vector<Rational>& per_level);

    // Independent shift: rho_l|_J = l(n-l) * c + nu_J.
    static ShiftSequence independent(const GTemplate& f, const Rational& c,
                                     const std::map<IntervalRef, Rational>& nu);

    Rational at(const IntervalRef& ref) const;
    void set(const IntervalRef& ref, const Rational& v) { values_[ref] = v; }

private:
    std::map<IntervalRef, Rational> values_;
};

// Shifted template f^rho; nontriviality intervals shrink, labels persist.
// Throws NotConcave when the shift fails concavity on some cross-section.
GTemplate shift_template(const GTemplate& f, const ShiftSequence& rho);

// Serialization (canonical rational strings, sorted keys).
std::string to_json(const GTemplate& f);
GTemplate template_from_json(const std::string& text);

std::string to_csv(const std::vector<SampleRow>& rows, int n);

// Cosmetic SVG of the height tracks.
std::string to_svg(const GTemplate& f);

} // namespace pgn
