#include "pgn/lattice.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <thread>

namespace pgn {

namespace {

double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Determinant of a small symmetric positive matrix by Gaussian elimination.
double det_small(std::vector<Vec> m) {
    int k = static_cast<int>(m.size());
    double det = 1.0;
    for (int i = 0; i < k; ++i) {
        int piv = i;
        for (int r = i + 1; r < k; ++r)
            if (std::fabs(m[r][i]) > std::fabs(m[piv][i])) piv = r;
        if (std::fabs(m[piv][i]) < 1e-300) return 0.0;
        if (piv != i) {
            std::swap(m[piv], m[i]);
            det = -det;
        }
        det *= m[i][i];
        for (int r = i + 1; r < k; ++r) {
            double f = m[r][i] / m[i][i];
            for (int cidx = i; cidx < k; ++cidx) m[r][cidx] -= f * m[i][cidx];
        }
    }
    return det;
}

double gram_det(const Mat& basis) {
    int k = static_cast<int>(basis.size());
    if (k == 0) return 1.0;
    std::vector<Vec> g(k, Vec(k));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) g[i][j] = dot(basis[i], basis[j]);
    return det_small(std::move(g));
}

// Jacobi eigenvalues of a small symmetric matrix.
std::vector<double> sym_eigenvalues(std::vector<Vec> a) {
    int k = static_cast<int>(a.size());
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0;
        for (int p = 0; p < k; ++p)
            for (int q = p + 1; q < k; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-24) break;
        for (int p = 0; p < k; ++p)
            for (int q = p + 1; q < k; ++q) {
                if (std::fabs(a[p][q]) < 1e-18) continue;
                double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1));
                double ccos = 1 / std::sqrt(t * t + 1);
                double ssin = t * ccos;
                for (int i = 0; i < k; ++i) {
                    double aip = a[i][p], aiq = a[i][q];
                    a[i][p] = ccos * aip - ssin * aiq;
                    a[i][q] = ssin * aip + ccos * aiq;
                }
                for (int i = 0; i < k; ++i) {
                    double api = a[p][i], aqi = a[q][i];
                    a[p][i] = ccos * api - ssin * aqi;
                    a[q][i] = ssin * api + ccos * aqi;
                }
            }
    }
    std::vector<double> ev(k);
    for (int i = 0; i < k; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

// Orthonormalize columns (modified Gram-Schmidt); drops near-null columns.
Mat orthonormalize(Mat m) {
    Mat out;
    for (auto& col : m) {
        Vec v = col;
        for (const auto& u : out) {
            double c = dot(v, u);
            for (size_t i = 0; i < v.size(); ++i) v[i] -= c * u[i];
        }
        double norm = std::sqrt(dot(v, v));
        if (norm > 1e-12) {
            for (auto& x : v) x /= norm;
            out.push_back(std::move(v));
        }
    }
    return out;
}

// Principal angles between equal-rank orthonormal frames; returns max angle.
double max_principal_angle(const Mat& a_on, const Mat& b_on) {
    int l = static_cast<int>(a_on.size());
    if (l == 0 || static_cast<int>(b_on.size()) != l) return M_PI / 2;
    // Singular values of A^T B via eigenvalues of (A^T B)^T (A^T B).
    std::vector<Vec> atb(l, Vec(l));
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j) atb[i][j] = dot(a_on[i], b_on[j]);
    std::vector<Vec> m(l, Vec(l, 0.0));
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j)
            for (int r = 0; r < l; ++r) m[i][j] += atb[r][i] * atb[r][j];
    auto ev = sym_eigenvalues(std::move(m));
    double smin = std::sqrt(std::max(0.0, ev.front()));
    smin = std::min(1.0, std::max(-1.0, smin));
    return std::acos(smin);
}

}  // namespace

Lattice lattice_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Lattice l;
    l.n = j.at("n").get<int>();
    for (const auto& col : j.at("basis")) {
        Vec v;
        for (const auto& x : col) {
            if (x.is_string())
                v.push_back(Rational::parse(x.get<std::string>()).to_double());
            else
                v.push_back(x.get<double>());
        }
        if (static_cast<int>(v.size()) != l.n)
            throw Error("BadBasis", "basis vector length must equal n");
        l.basis.push_back(std::move(v));
    }
    return l;
}

std::string lattice_to_json(const Lattice& l) {
    nlohmann::json j;
    j["n"] = l.n;
    j["basis"] = nlohmann::json::array();
    for (const auto& col : l.basis) {
        nlohmann::json jc = nlohmann::json::array();
        for (double x : col) jc.push_back(x);
        j["basis"].push_back(jc);
    }
    return j.dump(2);
}

double covolume(const Lattice& g) {
    if (g.rank() == 0) return 1.0;  // cov{0} = 1 by convention
    double d = gram_det(g.basis);
    if (d <= 0) throw Error("SingularBasis", "basis columns are dependent");
    return std::sqrt(d);
}

double log_covolume(const Lattice& g) { return std::log(covolume(g)); }

namespace {

// Coefficients of v in the column span of basis, least squares via Gram.
std::optional<Vec> solve_in_span(const Mat& basis, const Vec& v, double tol) {
    int k = static_cast<int>(basis.size());
    std::vector<Vec> g(k, Vec(k + 1));
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) g[i][j] = dot(basis[i], basis[j]);
        g[i][k] = dot(basis[i], v);
    }
    // Gaussian elimination with partial pivoting.
    for (int i = 0; i < k; ++i) {
        int piv = i;
        for (int r = i + 1; r < k; ++r)
            if (std::fabs(g[r][i]) > std::fabs(g[piv][i])) piv = r;
        if (std::fabs(g[piv][i]) < 1e-14) return std::nullopt;
        std::swap(g[piv], g[i]);
        for (int r = 0; r < k; ++r) {
            if (r == i) continue;
            double ff = g[r][i] / g[i][i];
            for (int cidx = i; cidx <= k; ++cidx) g[r][cidx] -= ff * g[i][cidx];
        }
    }
    Vec coeff(k);
    for (int i = 0; i < k; ++i) coeff[i] = g[i][k] / g[i][i];
    // Residual check: v must lie in the span.
    Vec recon(v.size(), 0.0);
    for (int i = 0; i < k; ++i)
        for (size_t r = 0; r < v.size(); ++r) recon[r] += coeff[i] * basis[i][r];
    double err = 0;
    for (size_t r = 0; r < v.size(); ++r) err += (recon[r] - v[r]) * (recon[r] - v[r]);
    if (std::sqrt(err) > tol) return std::nullopt;
    return coeff;
}

bool contains_lattice(const Lattice& outer, const Lattice& inner, double tol) {
    for (const auto& v : inner.basis) {
        auto coeff = solve_in_span(outer.basis, v, tol);
        if (!coeff) return false;
        for (double x : *coeff)
            if (std::fabs(x - std::round(x)) > tol) return false;
    }
    return true;
}

}  // namespace

double relative_covolume(const Lattice& g0, const Lattice& g1, const Lattice& g2) {
    if (!contains_lattice(g1, g0, 1e-6) || !contains_lattice(g2, g1, 1e-6))
        throw Error("NotNested", "relative covolume requires nested lattices");
    double l0 = g0.rank(), l1 = g1.rank(), l2 = g2.rank();
    if (l2 == l0) return 0.0;
    return log_covolume(g1) - (l2 - l1) / (l2 - l0) * log_covolume(g0) -
           (l1 - l0) / (l2 - l0) * log_covolume(g2);
}

Lattice flow_apply(const Weights& w, double t, const Lattice& l) {
    if (w.n() != l.n) throw Error("SizeMismatch", "weights and lattice dimension differ");
    Lattice out = l;
    for (auto& col : out.basis)
        for (int i = 0; i < l.n; ++i) col[i] *= std::exp(t * w.value(i).to_double());
    return out;
}

namespace {

// Enumerates primitive rank-l coefficient sublattices of Z^k in column
// Hermite form with entries bounded by B, reporting the minimal Gram
// determinant of basis * H.
struct RankMin {
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::vector<long long>> witness;
};

long long gcd_ll(long long a, long long b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b) { long long t = a % b; a = b; b = t; }
    return a;
}

// gcd of all l x l minors (primitivity of the coefficient sublattice).
long long minors_gcd(const std::vector<std::vector<long long>>& h, int k, int l) {
    std::vector<int> rows(l);
    for (int i = 0; i < l; ++i) rows[i] = i;
    long long g = 0;
    while (true) {
        // determinant of the selected rows (integer, small sizes)
        std::vector<std::vector<double>> sub(l, std::vector<double>(l));
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < l; ++j) sub[i][j] = static_cast<double>(h[rows[i]][j]);
        double d = det_small(sub);
        long long di = std::llround(d);
        g = gcd_ll(g, di);
        int pos = l - 1;
        while (pos >= 0 && rows[pos] == k - l + pos) --pos;
        if (pos < 0) break;
        ++rows[pos];
        for (int i = pos + 1; i < l; ++i) rows[i] = rows[i - 1] + 1;
    }
    return g;
}

void enumerate_hnf(int k, int l, int bound,
                   const std::function<void(const std::vector<std::vector<long long>>&)>& emit) {
    // Choose pivot rows r_0 < ... < r_{l-1}; column j: zero above pivot,
    // positive pivot d_j <= bound, entries in later pivot rows reduced
    // mod d, free entries in [-bound, bound].
    std::vector<int> pivots(l);
    std::vector<std::vector<long long>> h(k, std::vector<long long>(l, 0));
    std::vector<int> pivot_of_row(k, -1);

    // Fill columns right-to-left so that reduced entries in later pivot rows
    // already know their pivot value.
    std::function<void(int, int)> fill2 = [&](int col, int row) {
        if (col < 0) {
            if (minors_gcd(h, k, l) == 1) emit(h);
            return;
        }
        if (row == k) {
            fill2(col - 1, 0);
            return;
        }
        if (row < pivots[col]) {
            h[row][col] = 0;
            fill2(col, row + 1);
            return;
        }
        if (row == pivots[col]) {
            for (long long d = 1; d <= bound; ++d) {
                h[row][col] = d;
                fill2(col, row + 1);
            }
            h[row][col] = 0;
            return;
        }
        int pr = pivot_of_row[row];
        if (pr > col) {
            long long dj = h[row][pr];
            for (long long v = 0; v < dj; ++v) {
                h[row][col] = v;
                fill2(col, row + 1);
            }
            h[row][col] = 0;
            return;
        }
        for (long long v = -bound; v <= bound; ++v) {
            h[row][col] = v;
            fill2(col, row + 1);
        }
        h[row][col] = 0;
    };

    std::function<void(int, int)> choose2 = [&](int idx, int from) {
        if (idx == l) {
            for (int r = 0; r < k; ++r) pivot_of_row[r] = -1;
            for (int j = 0; j < l; ++j) pivot_of_row[pivots[j]] = j;
            fill2(l - 1, 0);
            return;
        }
        for (int r = from; r < k; ++r) {
            pivots[idx] = r;
            choose2(idx + 1, r + 1);
        }
    };
    choose2(0, 0);
}

std::vector<double> rank_minima(const Lattice& lat, int bound,
                                std::vector<std::vector<std::vector<long long>>>& witnesses) {
    int k = lat.rank();
    std::vector<double> mins(k + 1, 0.0);
    witnesses.assign(k + 1, {});
    mins[0] = 0.0;
    mins[k] = log_covolume(lat);
    for (int l = 1; l < k; ++l) {
        RankMin rm;
        enumerate_hnf(k, l, bound, [&](const std::vector<std::vector<long long>>& h) {
            Mat sub;
            for (int j = 0; j < l; ++j) {
                Vec v(lat.n, 0.0);
                for (int i = 0; i < k; ++i)
                    for (int r = 0; r < lat.n; ++r) v[r] += h[i][j] * lat.basis[i][r];
                sub.push_back(std::move(v));
            }
            double d = gram_det(sub);
            if (d <= 0) return;
            double log_cov = 0.5 * std::log(d);
            if (log_cov < rm.best - 1e-15) {
                rm.best = log_cov;
                rm.witness = h;
            }
        });
        mins[l] = rm.best;
        witnesses[l] = rm.witness;
    }
    return mins;
}

}  // namespace

double HNFiltration::height(int l) const {
    for (size_t i = 0; i + 1 < entries.size(); ++i) {
        if (entries[i].rank <= l && l <= entries[i + 1].rank) {
            double a = entries[i].log_cov, b = entries[i + 1].log_cov;
            double alpha = double(l - entries[i].rank) /
                           double(entries[i + 1].rank - entries[i].rank);
            return a + alpha * (b - a);
        }
    }
    return 0.0;
}

HNFiltration hn_filtration(const Lattice& l, int bound, int /*threads*/) {
    if (bound < 1) throw Error("LevelOutOfRange", "search bound must be >= 1");
    int k = l.rank();
    std::vector<std::vector<std::vector<long long>>> wit, wit2;
    auto mins = rank_minima(l, bound, wit);
    auto mins2 = rank_minima(l, bound + 1, wit2);

    auto hull_entries = [&](const std::vector<double>& m,
                            const std::vector<std::vector<std::vector<long long>>>& ws) {
        // Strict lower-hull extreme points of (rank, min log cov).
        std::vector<HNEntry> out;
        std::vector<int> hull{0};
        for (int r = 1; r <= k; ++r) {
            while (hull.size() >= 2) {
                int a = hull[hull.size() - 2], b = hull.back();
                double cross = (m[b] - m[a]) * (r - a) - (m[r] - m[a]) * (b - a);
                if (cross < -1e-12) break;
                hull.pop_back();
            }
            hull.push_back(r);
        }
        for (int r : hull) {
            HNEntry e;
            e.rank = r;
            e.log_cov = m[r];
            if (r > 0 && r < k) {
                for (int j = 0; j < r; ++j) {
                    Vec v(l.n, 0.0);
                    for (int i = 0; i < k; ++i)
                        for (int rr = 0; rr < l.n; ++rr) v[rr] += ws[r][i][j] * l.basis[i][rr];
                    e.sublattice.push_back(std::move(v));
                }
            } else if (r == k) {
                e.sublattice = l.basis;
            }
            out.push_back(std::move(e));
        }
        return out;
    };

    HNFiltration hn;
    hn.bound = bound;
    hn.entries = hull_entries(mins, wit);
    hn.min_log_cov = mins;
    auto entries2 = hull_entries(mins2, wit2);
    hn.stable = entries2.size() == hn.entries.size();
    if (hn.stable)
        for (size_t i = 0; i < entries2.size(); ++i)
            if (entries2[i].rank != hn.entries[i].rank ||
                std::fabs(entries2[i].log_cov - hn.entries[i].log_cov) > 1e-9)
                hn.stable = false;
    return hn;
}

std::vector<HNTrackRow> hn_track(const Lattice& l, const Weights& w,
                                 const std::vector<double>& grid, int bound, int threads) {
    std::vector<HNTrackRow> rows(grid.size());
    auto worker = [&](size_t from, size_t to) {
        for (size_t i = from; i < to; ++i) {
            HNTrackRow row;
            row.t = grid[i];
            row.filtration = hn_filtration(flow_apply(w, grid[i], l), bound);
            for (int lev = 0; lev <= l.rank(); ++lev)
                row.heights.push_back(row.filtration.height(lev));
            rows[i] = std::move(row);
        }
    };
    if (threads <= 1 || grid.size() < 4) {
        worker(0, grid.size());
    } else {
        size_t per = (grid.size() + threads - 1) / threads;
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            size_t from = t * per, to = std::min(grid.size(), (t + 1) * per);
            if (from < to) pool.emplace_back(worker, from, to);
        }
        for (auto& th : pool) th.join();
    }
    return rows;
}

namespace {

// Signature of Q_s restricted to the column span (eigenvalues of M^T D_s M).
struct Signature {
    int plus = 0, minus = 0, zero = 0;
};

Signature signature_at(const Mat& cols, const Weights& w, int s, double tol) {
    const auto& distinct = w.distinct();
    int l = static_cast<int>(cols.size());
    std::vector<Vec> m(l, Vec(l, 0.0));
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j) {
            double acc = 0;
            for (int r = 0; r < w.n(); ++r) {
                double sign = w.value(r) > distinct[s - 1] ? 1.0 : -1.0;
                acc += sign * cols[i][r] * cols[j][r];
            }
            m[i][j] = acc;
        }
    Signature sig;
    for (double ev : sym_eigenvalues(std::move(m))) {
        if (ev > tol) ++sig.plus;
        else if (ev < -tol) ++sig.minus;
        else ++sig.zero;
    }
    return sig;
}

Mat scaled_subspace(const Mat& sub, const Weights& w, double t) {
    Mat out = sub;
    for (auto& col : out)
        for (int i = 0; i < w.n(); ++i) col[i] *= std::exp(t * w.value(i).to_double());
    // Rescale columns to keep the numbers in range; signatures are invariant.
    out = orthonormalize(std::move(out));
    return out;
}

}  // namespace

SignatureProfile signature_intervals(const Mat& subspace, const Weights& w,
                                     const SignatureOptions& opts) {
    int l = static_cast<int>(subspace.size());
    if (l < 1 || l > w.n() - 1) throw Error("RankOutOfRange", "need 1 <= rank <= n-1");
    int k = static_cast<int>(w.distinct().size());
    double min_gap = 1e9;
    for (int s = 1; s < k; ++s)
        min_gap = std::min(min_gap, w.distinct()[s].to_double() - w.distinct()[s - 1].to_double());
    double t_scan = opts.t_scan > 0 ? opts.t_scan : 60.0 / std::max(1e-6, min_gap);

    // Propagate an orthonormal frame of g_t V incrementally: applying the
    // flow over one step and re-orthonormalizing keeps the subspace numerics
    // stable over the whole scan, while one-shot scaling collapses frames.
    std::vector<double> ts;
    for (double t = -t_scan; t <= t_scan + 1e-12; t += opts.step) ts.push_back(t);
    std::vector<Mat> frames(ts.size());
    Mat base = orthonormalize(subspace);
    size_t zero_index = 0;
    for (size_t i = 0; i < ts.size(); ++i)
        if (std::fabs(ts[i]) < std::fabs(ts[zero_index])) zero_index = i;
    frames[zero_index] = scaled_subspace(base, w, ts[zero_index]);
    for (size_t i = zero_index + 1; i < ts.size(); ++i)
        frames[i] = scaled_subspace(frames[i - 1], w, ts[i] - ts[i - 1]);
    for (size_t i = zero_index; i-- > 0;)
        frames[i] = scaled_subspace(frames[i + 1], w, ts[i] - ts[i + 1]);

    auto sig_vector_frame = [&](const Mat& frame, double dt) {
        Mat cols = scaled_subspace(frame, w, dt);
        std::vector<Signature> sigs;
        for (int s = 1; s < k; ++s) sigs.push_back(signature_at(cols, w, s, 1e-9));
        return sigs;
    };
    auto sig_vector_at_index = [&](size_t i) { return sig_vector_frame(frames[i], 0.0); };
    auto to_multiset = [&](const std::vector<Signature>& sigs) -> std::optional<WeightMultiset> {
        // sigma^+_{s-1} - sigma^+_s gives the multiplicity of the s-th value.
        std::vector<int> plus(k + 1);
        plus[0] = l;
        for (int s = 1; s < k; ++s) {
            if (sigs[s - 1].zero != 0) return std::nullopt;
            plus[s] = sigs[s - 1].plus;
        }
        plus[k] = 0;
        std::vector<Rational> vals;
        for (int s = 1; s <= k; ++s) {
            int mult = plus[s - 1] - plus[s];
            if (mult < 0 || mult > w.multiplicities()[s - 1]) return std::nullopt;
            for (int c = 0; c < mult; ++c) vals.push_back(w.distinct()[s - 1]);
        }
        if (static_cast<int>(vals.size()) != l) return std::nullopt;
        return WeightMultiset(std::move(vals));
    };

    SignatureProfile profile;
    std::vector<std::optional<WeightMultiset>> labels;
    std::vector<int> plus_total;
    for (size_t i = 0; i < ts.size(); ++i) {
        auto sigs = sig_vector_at_index(i);
        int ptot = 0;
        for (const auto& s : sigs) ptot += s.plus;
        plus_total.push_back(ptot);
        labels.push_back(to_multiset(sigs));
    }
    for (size_t i = 1; i < plus_total.size(); ++i)
        if (plus_total[i] < plus_total[i - 1]) profile.monotone = false;

    size_t i = 0;
    while (i < ts.size()) {
        if (!labels[i]) {
            size_t j = i;
            while (j < ts.size() && !labels[j]) ++j;
            profile.gaps.emplace_back(ts[i], j < ts.size() ? ts[j] : ts.back());
            i = j;
            continue;
        }
        size_t j = i;
        while (j + 1 < ts.size() && labels[j + 1] && *labels[j + 1] == *labels[i]) ++j;
        double from = ts[i], to = ts[j];
        // Refine the boundaries by bisection toward adjacent regimes,
        // flowing from the nearest maintained frame.
        if (i > 0) {
            double lo = 0, hi = opts.step;
            for (int it = 0; it < 60 && hi - lo > opts.degenerate_tol; ++it) {
                double mid = (lo + hi) / 2;
                auto lab = to_multiset(sig_vector_frame(frames[i - 1], mid));
                if (lab && *lab == *labels[i]) hi = mid; else lo = mid;
            }
            from = ts[i - 1] + hi;
        }
        if (j + 1 < ts.size()) {
            double lo = 0, hi = opts.step;
            for (int it = 0; it < 60 && hi - lo > opts.degenerate_tol; ++it) {
                double mid = (lo + hi) / 2;
                auto lab = to_multiset(sig_vector_frame(frames[j], mid));
                if (lab && *lab == *labels[j]) lo = mid; else hi = mid;
            }
            to = ts[j] + lo;
        }
        profile.intervals.push_back({from, to, *labels[i]});
        i = j + 1;
    }
    return profile;
}

BladeTrack blade_track(const Lattice& g, const Weights& w, const std::vector<double>& grid) {
    if (g.rank() < 1) throw Error("RankOutOfRange", "blade track needs rank >= 1");
    BladeTrack track;
    for (double t : grid)
        track.rows.push_back({t, log_covolume(flow_apply(w, t, g))});

    // Candidate slopes: eta_E over multisets of the blade's rank.
    auto multisets = enumerate_multisets(w, g.rank());
    auto nearest = [&](double slope) {
        size_t best = 0;
        double err = 1e18;
        for (size_t i = 0; i < multisets.size(); ++i) {
            double e = std::fabs(eta_sum(multisets[i]).to_double() - slope);
            if (e < err) { err = e; best = i; }
        }
        return best;
    };

    std::optional<WeightMultiset> prev_label;
    size_t start = 0;
    auto flush = [&](size_t from, size_t to, size_t label_idx) {
        if (to <= from) return;
        BladeSegment seg;
        seg.from = track.rows[from].t;
        seg.to = track.rows[to].t;
        // Median difference quotient: robust against the bends at the ends
        // of the run.
        std::vector<double> quotients;
        for (size_t i = from; i < to; ++i)
            quotients.push_back((track.rows[i + 1].log_norm - track.rows[i].log_norm) /
                                (track.rows[i + 1].t - track.rows[i].t));
        std::sort(quotients.begin(), quotients.end());
        seg.fitted_slope = quotients[quotients.size() / 2];
        // Among multisets matching the quantized slope, prefer one that keeps
        // the sequence monotone in the increase order.
        double target = eta_sum(multisets[label_idx]).to_double();
        std::optional<WeightMultiset> chosen;
        for (const auto& m : multisets) {
            if (std::fabs(eta_sum(m).to_double() - target) > 1e-9) continue;
            if (!prev_label || leq(*prev_label, m)) {
                if (!chosen || leq(m, *chosen)) chosen = m;
            }
        }
        if (!chosen) {
            chosen = multisets[label_idx];
            if (prev_label && !leq(*prev_label, *chosen)) track.labels_monotone = false;
        }
        seg.label = *chosen;
        prev_label = seg.label;
        track.segments.push_back(std::move(seg));
    };

    if (grid.size() >= 2) {
        size_t current = nearest((track.rows[1].log_norm - track.rows[0].log_norm) /
                                 (track.rows[1].t - track.rows[0].t));
        for (size_t i = 1; i + 1 < grid.size(); ++i) {
            size_t next = nearest((track.rows[i + 1].log_norm - track.rows[i].log_norm) /
                                  (track.rows[i + 1].t - track.rows[i].t));
            if (next != current) {
                flush(start, i, current);
                start = i;
                current = next;
            }
        }
        flush(start, grid.size() - 1, current);
    }
    return track;
}

double direction_distance(const Mat& subspace, const Weights& w, const WeightMultiset& e) {
    int l = static_cast<int>(subspace.size());
    Mat m_on = orthonormalize(subspace);
    if (static_cast<int>(m_on.size()) != l) return M_PI / 2;
    const auto& distinct = w.distinct();
    Mat candidate;
    for (size_t s = 0; s < distinct.size(); ++s) {
        int alpha = e.multiplicity(distinct[s]);
        if (alpha == 0) continue;
        // Rows of the block, projected basis (n_s x l); take leading left
        // singular vectors via the Gram of the projected columns.
        std::vector<int> rows;
        for (int i = 0; i < w.n(); ++i)
            if (w.value(i) == distinct[s]) rows.push_back(i);
        if (alpha > static_cast<int>(rows.size())) return M_PI / 2;
        // Build P_s M as columns restricted to block rows.
        Mat block_cols;
        for (const auto& col : m_on) {
            Vec v(rows.size());
            for (size_t r = 0; r < rows.size(); ++r) v[r] = col[rows[r]];
            block_cols.push_back(std::move(v));
        }
        // Leading alpha left singular vectors of the block matrix B (n_s x l):
        // eigenvectors of B B^T. Use power iteration with deflation.
        size_t ns = rows.size();
        std::vector<Vec> bbt(ns, Vec(ns, 0.0));
        for (size_t i = 0; i < ns; ++i)
            for (size_t j = 0; j < ns; ++j)
                for (const auto& col : block_cols) bbt[i][j] += col[i] * col[j];
        // Jacobi eigenvectors for the small symmetric matrix.
        int kk = static_cast<int>(ns);
        std::vector<Vec> a = bbt;
        std::vector<Vec> vecs(kk, Vec(kk, 0.0));
        for (int i = 0; i < kk; ++i) vecs[i][i] = 1.0;
        for (int sweep = 0; sweep < 64; ++sweep) {
            double off = 0;
            for (int p = 0; p < kk; ++p)
                for (int q = p + 1; q < kk; ++q) off += a[p][q] * a[p][q];
            if (off < 1e-24) break;
            for (int p = 0; p < kk; ++p)
                for (int q = p + 1; q < kk; ++q) {
                    if (std::fabs(a[p][q]) < 1e-18) continue;
                    double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
                    double t = (theta >= 0 ? 1.0 : -1.0) /
                               (std::fabs(theta) + std::sqrt(theta * theta + 1));
                    double ccos = 1 / std::sqrt(t * t + 1);
                    double ssin = t * ccos;
                    for (int i2 = 0; i2 < kk; ++i2) {
                        double aip = a[i2][p], aiq = a[i2][q];
                        a[i2][p] = ccos * aip - ssin * aiq;
                        a[i2][q] = ssin * aip + ccos * aiq;
                        double vip = vecs[i2][p], viq = vecs[i2][q];
                        vecs[i2][p] = ccos * vip - ssin * viq;
                        vecs[i2][q] = ssin * vip + ccos * viq;
                    }
                    for (int i2 = 0; i2 < kk; ++i2) {
                        double api = a[p][i2], aqi = a[q][i2];
                        a[p][i2] = ccos * api - ssin * aqi;
                        a[q][i2] = ssin * api + ccos * aqi;
                    }
                }
        }
        std::vector<std::pair<double, int>> order;
        for (int i = 0; i < kk; ++i) order.emplace_back(a[i][i], i);
        std::sort(order.rbegin(), order.rend());
        for (int c = 0; c < alpha; ++c) {
            Vec full(w.n(), 0.0);
            for (size_t r = 0; r < rows.size(); ++r) full[rows[r]] = vecs[r][order[c].second];
            candidate.push_back(std::move(full));
        }
    }
    candidate = orthonormalize(std::move(candidate));
    if (static_cast<int>(candidate.size()) != l) return M_PI / 2;
    return max_principal_angle(m_on, candidate);
}

double default_label_eps(const Weights& w, int l, int samples, unsigned seed) {
    auto multisets = enumerate_multisets(w, l);
    if (multisets.size() < 2) return M_PI / 6;
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double min_sep = M_PI / 2;
    for (const auto& e1 : multisets) {
        for (int trial = 0; trial < samples; ++trial) {
            // Random invariant space with multiset e1: random frames inside
            // each eigenvalue block.
            Mat v;
            for (size_t s = 0; s < w.distinct().size(); ++s) {
                int alpha = e1.multiplicity(w.distinct()[s]);
                if (alpha == 0) continue;
                std::vector<int> rows;
                for (int i = 0; i < w.n(); ++i)
                    if (w.value(i) == w.distinct()[s]) rows.push_back(i);
                Mat block;
                for (int c = 0; c < alpha; ++c) {
                    Vec col(w.n(), 0.0);
                    for (int r : rows) col[r] = gauss(rng);
                    block.push_back(std::move(col));
                }
                for (auto& col : orthonormalize(std::move(block))) v.push_back(std::move(col));
            }
            if (static_cast<int>(v.size()) != l) continue;
            for (const auto& e2 : multisets) {
                if (e2 == e1) continue;
                min_sep = std::min(min_sep, direction_distance(v, w, e2));
            }
        }
    }
    return min_sep / 3;
}

std::optional<WeightMultiset> direction_label(const Mat& subspace, const Weights& w, double eps) {
    int l = static_cast<int>(subspace.size());
    if (l < 1 || l > w.n() - 1) throw Error("RankOutOfRange", "need 1 <= rank <= n-1");
    std::optional<WeightMultiset> best;
    double best_d = eps;
    for (const auto& e : enumerate_multisets(w, l)) {
        double d = direction_distance(subspace, w, e);
        if (d < best_d) {
            best_d = d;
            best = e;
        }
    }
    return best;
}

bool nested_labels_consistent(const HNFiltration& hn, const Weights& w, double eps) {
    std::vector<std::pair<int, WeightMultiset>> labeled;
    for (const auto& e : hn.entries) {
        if (e.rank == 0 || e.rank == w.n()) continue;
        auto lab = direction_label(e.sublattice, w, eps);
        if (lab) labeled.emplace_back(e.rank, *lab);
    }
    for (size_t i = 0; i + 1 < labeled.size(); ++i)
        if (!labeled[i + 1].second.contains_submultiset(labeled[i].second)) return false;
    return true;
}

namespace {

// Exact re-synthesis of a template from observed events. Data supplies the
// opening times, labels, and switch times; heights follow the slope law from
// exact interpolated openings, and levels close exactly where their second
// difference returns to zero, so the result is valid by construction.
struct ObservedEvent {
    Rational time;
    int level;
    WeightMultiset label;
    bool is_open;                       // otherwise a label switch
    std::optional<Rational> height;     // pinned height for window-edge openings
};

GTemplate synthesize_from_events(const Weights& w, const Rational& t0, const Rational& t1,
                                 std::vector<ObservedEvent> events) {
    int n = w.n();
    std::sort(events.begin(), events.end(), [](const ObservedEvent& a, const ObservedEvent& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.level != b.level) return a.level < b.level;
        return a.is_open && !b.is_open;
    });

    struct ActiveLevel {
        WeightMultiset label;
        Rational height;
        Rational opened_at;
        Rational height_at_open;
        std::vector<TrackSegment> segments;
    };
    std::map<int, ActiveLevel> active;
    std::vector<std::vector<TrackInterval>> tracks(n - 1);
    Rational t = t0;

    auto label_of = [&](int lev) -> WeightMultiset {
        if (lev == 0) return WeightMultiset::empty();
        if (lev == n) return WeightMultiset(w.values());
        return active.at(lev).label;
    };
    auto height_of = [&](int lev) -> Rational {
        if (lev == 0 || lev == n) return Rational(0);
        return active.at(lev).height;
    };
    auto neighbors = [&](int lev) {
        int lo = 0, hi = n;
        for (const auto& [al, a] : active) {
            if (al < lev) lo = std::max(lo, al);
            if (al > lev) hi = std::min(hi, al);
        }
        return std::pair<int, int>{lo, hi};
    };
    auto d2_affine = [&](int lev) {
        auto [lo, hi] = neighbors(lev);
        Rational cm = Rational(1) / Rational(lev - lo);
        Rational cp = Rational(1) / Rational(hi - lev);
        Rational cc = -Rational(hi - lo) / (Rational(hi - lev) * Rational(lev - lo));
        Rational value = cm * height_of(lo) + cp * height_of(hi) + cc * height_of(lev);
        Rational rate = cm * eta_sum(label_of(lo)) + cp * eta_sum(label_of(hi)) +
                        cc * eta_sum(label_of(lev));
        return std::pair<Rational, Rational>{value, rate};
    };
    auto advance = [&](const Rational& dt) {
        for (auto& [lev, a] : active) a.height += eta_sum(a.label) * dt;
        t += dt;
    };
    auto close_level = [&](int lev) {
        auto& a = active.at(lev);
        if (a.opened_at < t) {
            TrackInterval iv;
            iv.start = a.opened_at;
            iv.end = t;
            iv.height_start = a.height_at_open;
            iv.segments = a.segments;
            if (iv.segments.empty() || iv.segments.back().until < t)
                iv.segments.push_back({t, a.label});
            tracks[lev - 1].push_back(std::move(iv));
        }
        active.erase(lev);
    };
    // Run until the target time, closing levels exactly where forced.
    auto run_until = [&](const Rational& target) {
        while (t < target) {
            Rational hit = target;
            int hit_level = -1;
            for (const auto& [lev, a] : active) {
                auto [value, rate] = d2_affine(lev);
                if (rate.is_negative()) {
                    Rational when = t - value / rate;
                    if (when < hit) {
                        hit = when;
                        hit_level = lev;
                    }
                }
            }
            advance(hit - t);
            if (hit_level > 0 && t < target) close_level(hit_level);
            if (hit_level < 0) break;
        }
    };

    for (const auto& ev : events) {
        if (!(t < ev.time) && !(t == ev.time)) continue;
        run_until(ev.time);
        if (t != ev.time) continue;  // the window ended first
        if (ev.is_open) {
            if (active.count(ev.level)) continue;
            auto [lo, hi] = neighbors(ev.level);
            if (static_cast<int>(label_of(hi).size()) - static_cast<int>(label_of(lo).size()) < 2)
                continue;
            if (!ev.label.contains_submultiset(label_of(lo))) continue;
            if (!label_of(hi).contains_submultiset(ev.label)) continue;
            Rational alpha = Rational(hi - ev.level) / Rational(hi - lo);
            Rational h = ev.height ? *ev.height
                                   : alpha * height_of(lo) +
                                         (Rational(1) - alpha) * height_of(hi);
            active[ev.level] = ActiveLevel{ev.label, h, t, h, {}};
            auto [value, rate] = d2_affine(ev.level);
            if (!ev.height && !rate.is_positive()) active.erase(ev.level);  // would not grow
        } else {
            auto it = active.find(ev.level);
            if (it == active.end()) continue;
            auto& a = it->second;
            if (a.label == ev.label || !leq(a.label, ev.label)) continue;
            auto [lo, hi] = neighbors(ev.level);
            if (!ev.label.contains_submultiset(label_of(lo))) continue;
            if (!label_of(hi).contains_submultiset(ev.label)) continue;
            if (!(a.opened_at < t)) {
                a.label = ev.label;  // relabel a just-opened interval
                continue;
            }
            if (!a.segments.empty() && !(a.segments.back().until < t)) continue;
            a.segments.push_back({t, a.label});
            a.label = ev.label;
        }
    }
    run_until(t1);
    if (t < t1) advance(t1 - t);
    std::vector<int> open_levels;
    for (const auto& [lev, a] : active) open_levels.push_back(lev);
    for (int lev : open_levels) close_level(lev);
    return GTemplate(w, t0, t1, std::move(tracks));
}

}  // namespace

GTemplate extract_template(const Lattice& l, const Weights& w, double t_begin, double t_end,
                           const ExtractParams& params) {
    if (!(t_begin < t_end) || t_end - t_begin < params.grid_step)
        throw Error("ExtractionAmbiguous", "window shorter than one grid step");
    int n = w.n();
    double sum_abs = 0;
    for (const auto& v : w.values()) sum_abs += std::fabs(v.to_double());
    double c_seg = params.c_seg > 0 ? params.c_seg : 2 * params.grid_step * sum_abs;
    std::vector<double> eps_by_level(n, params.eps);
    if (params.eps <= 0)
        for (int lev = 1; lev <= n - 1; ++lev) eps_by_level[lev] = default_label_eps(w, lev);

    std::vector<double> grid;
    for (double t = t_begin; t <= t_end + 1e-12; t += params.grid_step) grid.push_back(t);
    auto rows = hn_track(l, w, grid, params.bound);

    auto to_rational = [&](double x) {
        long long den = params.max_denominator;
        return Rational(std::llround(x * den), den);
    };
    Rational rt0 = to_rational(t_begin);
    Rational rt1 = to_rational(t_end);

    // Observed structure: stretches where the penalized cross-section keeps
    // the level extremal, with witness labels bridged across short gaps.
    std::vector<ObservedEvent> events;
    bool saw_any = false;
    for (int lev = 1; lev <= n - 1; ++lev) {
        std::vector<std::optional<WeightMultiset>> labels(grid.size());
        std::vector<bool> strong(grid.size(), false);
        for (size_t i = 0; i < grid.size(); ++i) {
            const auto& hs = rows[i].heights;
            double d2 = hs[lev - 1] - 2 * hs[lev] + hs[lev + 1];
            if (d2 <= c_seg) continue;
            strong[i] = true;
            for (const auto& entry : rows[i].filtration.entries)
                if (entry.rank == lev)
                    labels[i] = direction_label(entry.sublattice, w,
                                                params.eps > 0 ? params.eps
                                                               : eps_by_level[lev]);
        }
        size_t i = 0;
        while (i < grid.size()) {
            if (!strong[i]) {
                ++i;
                continue;
            }
            size_t j = i;
            while (j + 1 < grid.size() && strong[j + 1]) ++j;
            // Trim to the labeled extent inside [i, j].
            size_t a = i, b = j;
            while (a <= b && !labels[a]) ++a;
            while (b > a && !labels[b]) --b;
            if (a > b || !labels[a]) {
                i = j + 1;
                continue;
            }
            saw_any = true;
            // Label runs with gaps absorbed at their midpoints. Stretches
            // reaching back to the first sample anchor at the window edge,
            // where the observed height can be pinned directly.
            bool at_edge = grid[a] - params.grid_step <= t_begin + 1e-12;
            double open_t = at_edge ? t_begin : grid[a] - params.grid_step / 2;
            ObservedEvent open_ev{at_edge ? rt0 : to_rational(open_t), lev, *labels[a], true,
                                  std::nullopt};
            if (at_edge) open_ev.height = to_rational(rows[0].heights[lev]);
            events.push_back(std::move(open_ev));
            WeightMultiset current = *labels[a];
            size_t last_labeled = a;
            for (size_t r = a + 1; r <= b; ++r) {
                if (!labels[r]) continue;
                if (*labels[r] == current) {
                    last_labeled = r;
                    continue;
                }
                if (leq(current, *labels[r])) {
                    double switch_t = (grid[last_labeled] + grid[r]) / 2;
                    events.push_back(
                        {to_rational(switch_t), lev, *labels[r], false, std::nullopt});
                    current = *labels[r];
                }
                last_labeled = r;
            }
            i = j + 1;
        }
    }
    if (!saw_any)
        return GTemplate::trivial(w, rt0, rt1);

    GTemplate out = synthesize_from_events(w, rt0, rt1, std::move(events));
    if (!validate(out).empty())
        throw Error("ExtractionAmbiguous", "extracted tracks fail template validation");
    return out;
}

MatchReport matches(const Lattice& l, const GTemplate& f, double eps, double c,
                    double grid_step, int bound) {
    MatchReport report;
    double t0 = f.t_begin().to_double();
    double t1 = f.t_end().to_double();
    std::vector<double> grid;
    for (double t = t0; t <= t1 + 1e-12; t += grid_step) grid.push_back(t);
    auto rows = hn_track(l, f.weights(), grid, bound);
    for (size_t i = 0; i < grid.size(); ++i) {
        auto hs = f.full_heights(Rational(std::llround(grid[i] * 1024), 1024));
        for (int lev = 1; lev <= f.n() - 1; ++lev) {
            double gap = std::fabs(rows[i].heights[lev] - hs[lev].to_double());
            report.worst_height_gap = std::max(report.worst_height_gap, gap);
        }
    }
    bool cond1 = report.worst_height_gap < c;

    bool cond2 = true;
    Rational c_rat(std::llround(c * 1024), 1024);
    for (int lev = 1; lev <= f.n() - 1; ++lev) {
        for (const auto& iv : f.track(lev)) {
            Rational seg_start = iv.start;
            for (const auto& seg : iv.segments) {
                double a = seg_start.to_double() + c;
                double b = seg.until.to_double() - c;
                seg_start = seg.until;
                if (b - a < 1e-9) continue;
                for (size_t i = 0; i < grid.size(); ++i) {
                    if (grid[i] < a || grid[i] > b) continue;
                    Rational tq(std::llround(grid[i] * 1024), 1024);
                    if (f.second_difference_at(lev, tq) < c_rat) continue;
                    // Witness at this rank must carry the label of the segment.
                    const HNFiltration& hn = rows[i].filtration;
                    const HNEntry* witness = nullptr;
                    for (const auto& e : hn.entries)
                        if (e.rank == lev) witness = &e;
                    if (!witness) { cond2 = false; continue; }
                    double dist = direction_distance(witness->sublattice, f.weights(), seg.label);
                    report.worst_direction_distance =
                        std::max(report.worst_direction_distance, dist);
                    if (dist >= eps) cond2 = false;
                }
            }
        }
    }
    report.matched = cond1 && cond2;
    if (!cond1)
        report.notes.push_back("height condition fails: worst gap " +
                               std::to_string(report.worst_height_gap));
    if (!cond2) report.notes.push_back("direction condition fails");
    return report;
}

} // namespace pgn
