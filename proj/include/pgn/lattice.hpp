#pragma once

// Desk-scale lattice laboratory: explicit bases, covolumes, bounded-search
// Harder-Narasimhan filtrations, diagonal-flow tracks, signature profiles on
// subspaces, direction labeling by principal angles, and template extraction.

#include "pgn/error.hpp"
#include "pgn/template.hpp"
#include "pgn/weights.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pgn {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // column-major list of basis vectors

struct Lattice {
    int n = 0;      // ambient dimension
    Mat basis;      // rank many columns of length n

    int rank() const { return static_cast<int>(basis.size()); }
};

Lattice lattice_from_json(const std::string& text);
std::string lattice_to_json(const Lattice& l);

double covolume(const Lattice& g);
double log_covolume(const Lattice& g);

// log cov G1 - ((l2-l1)/(l2-l0)) log cov G0 - ((l1-l0)/(l2-l0)) log cov G2.
double relative_covolume(const Lattice& g0, const Lattice& g1, const Lattice& g2);

Lattice flow_apply(const Weights& w, double t, const Lattice& l);

struct HNEntry {
    int rank = 0;
    double log_cov = 0.0;
    Mat sublattice;  // basis columns in the ambient coordinates
};

struct HNFiltration {
    std::vector<HNEntry> entries;  // extreme points, ranks increasing 0..n
    int bound = 0;
    bool stable = false;
    std::vector<double> min_log_cov;  // per rank 0..k, before the hull

    // Heights extended piecewise linearly over all ranks.
    double height(int l) const;
};

// Minimum log-covolume per rank over primitive sublattices whose Hermite-form
// coefficient basis has entries bounded by B; lower-hull extreme points.
HNFiltration hn_filtration(const Lattice& l, int bound, int threads = 1);

struct HNTrackRow {
    double t = 0.0;
    std::vector<double> heights;  // levels 0..n
    HNFiltration filtration;
};

std::vector<HNTrackRow> hn_track(const Lattice& l, const Weights& w,
                                 const std::vector<double>& grid, int bound, int threads = 1);

struct SignatureProfile {
    struct Interval {
        double from = 0.0;
        double to = 0.0;
        WeightMultiset label;
    };
    std::vector<Interval> intervals;  // labels increase in the multiset order
    std::vector<std::pair<double, double>> gaps;
    bool monotone = true;  // sigma^+ nondecreasing at all samples
};

struct SignatureOptions {
    double t_scan = 0.0;  // 0: choose from the weight gaps
    double step = 0.25;
    double degenerate_tol = 1e-9;
};

SignatureProfile signature_intervals(const Mat& subspace, const Weights& w,
                                     const SignatureOptions& opts = {});

struct BladeTrackRow {
    double t = 0.0;
    double log_norm = 0.0;
};

struct BladeSegment {
    double from = 0.0;
    double to = 0.0;
    double fitted_slope = 0.0;
    WeightMultiset label;
};

struct BladeTrack {
    std::vector<BladeTrackRow> rows;
    std::vector<BladeSegment> segments;
    bool labels_monotone = true;
};

BladeTrack blade_track(const Lattice& g, const Weights& w, const std::vector<double>& grid);

// Nearest invariant multiset by block projection; nullopt when the principal
// angle distance exceeds eps.
std::optional<WeightMultiset> direction_label(const Mat& subspace, const Weights& w, double eps);

// Distance (max principal angle) from the subspace to the nearest invariant
// space with multiset e.
double direction_distance(const Mat& subspace, const Weights& w, const WeightMultiset& e);

// One third of the sampled minimal separation between distinct invariant
// components at rank l; the default labeling tolerance.
double default_label_eps(const Weights& w, int l, int samples = 64, unsigned seed = 1);

struct ExtractParams {
    int bound = 3;
    double eps = 0.0;  // <= 0: sampled default per level
    double grid_step = 0.25;
    double c_seg = 0.0;           // 0: 2 * grid_step * sum |eta|
    long long max_denominator = 1000000;
};

GTemplate extract_template(const Lattice& l, const Weights& w, double t_begin, double t_end,
                           const ExtractParams& params = {});

struct MatchReport {
    bool matched = false;
    double worst_height_gap = 0.0;  // sup |HN_H - f_H| over the grid
    double worst_direction_distance = 0.0;
    std::vector<std::string> notes;
};

MatchReport matches(const Lattice& l, const GTemplate& f, double eps, double c,
                    double grid_step, int bound);

// Functoriality audit over one filtration: all labeled nested witnesses must
// have nested multisets.
bool nested_labels_consistent(const HNFiltration& hn, const Weights& w, double eps);

} // namespace pgn
