#include "rectify/pointset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rectify/rng.hpp"

namespace rectify {

namespace {
double dist(const Point& a, const Point& b, int d) {
    double s = 0;
    for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}
constexpr double kTau = 1.6180339887498949; // (1+sqrt(5))/2
} // namespace

PointSet::PointSet(int d, std::vector<Point> pts, std::array<long long, 3> wlo,
                   std::array<long long, 3> whi)
    : d_(d), pts_(std::move(pts)), wlo_(wlo), whi_(whi) {
    if (d < 1 || d > 3) throw InvalidParam("dimension must be 1..3");
    for (int a = 0; a < d_; ++a)
        if (whi_[a] <= wlo_[a]) throw InvalidParam("degenerate window");
    for (int a = d_; a < 3; ++a) {
        wlo_[a] = 0;
        whi_[a] = 1;
    }
    for (const Point& p : pts_)
        for (int a = 0; a < d_; ++a)
            if (p[a] < wlo_[a] - 1e-9 || p[a] > whi_[a] + 1e-9)
                throw InvalidParam("point outside window");
    build_index();
}

double PointSet::window_volume() const {
    double v = 1;
    for (int a = 0; a < d_; ++a) v *= (double)(whi_[a] - wlo_[a]);
    return v;
}

void PointSet::build_index() {
    for (int a = 0; a < 3; ++a) gdim_[a] = (a < d_) ? (whi_[a] - wlo_[a]) : 1;
    long long ncells = gdim_[0] * gdim_[1] * gdim_[2];
    cells_.assign((size_t)ncells, {});
    for (int i = 0; i < (int)pts_.size(); ++i) {
        long long c = cell_of(pts_[i]);
        if (c >= 0) cells_[(size_t)c].push_back(i);
    }
    // prefix sums over unit-cell counts, dimensions padded to 3
    long long n0 = gdim_[0], n1 = gdim_[1], n2 = gdim_[2];
    prefix_.assign((size_t)((n0 + 1) * (n1 + 1) * (n2 + 1)), 0);
    auto P = [&](long long i, long long j, long long k) -> long long& {
        return prefix_[(size_t)((i * (n1 + 1) + j) * (n2 + 1) + k)];
    };
    for (long long i = 1; i <= n0; ++i)
        for (long long j = 1; j <= n1; ++j)
            for (long long k = 1; k <= n2; ++k) {
                long long cellCount =
                    (long long)cells_[(size_t)(((i - 1) * n1 + (j - 1)) * n2 + (k - 1))].size();
                P(i, j, k) = cellCount + P(i - 1, j, k) + P(i, j - 1, k) + P(i, j, k - 1) -
                             P(i - 1, j - 1, k) - P(i - 1, j, k - 1) - P(i, j - 1, k - 1) +
                             P(i - 1, j - 1, k - 1);
            }
}

long long PointSet::cell_of(const Point& p) const {
    std::array<long long, 3> ix{0, 0, 0};
    for (int a = 0; a < d_; ++a) {
        long long i = (long long)std::floor(p[a]) - wlo_[a];
        if (i < 0 || i >= gdim_[a]) return -1; // boundary points on the high face
        ix[a] = i;
    }
    return (ix[0] * gdim_[1] + ix[1]) * gdim_[2] + ix[2];
}

long long PointSet::count(const IntegerCube& c) const {
    std::array<long long, 3> a{0, 0, 1}, b{0, 0, 1};
    for (int ax = 0; ax < d_; ++ax) {
        a[ax] = c.corner[ax] - wlo_[ax];
        b[ax] = a[ax] + c.side;
        if (a[ax] < 0 || b[ax] > gdim_[ax]) throw InvalidParam("cube not inside window");
    }
    if (d_ < 3) { a[2] = 0; b[2] = 1; }
    if (d_ < 2) { a[1] = 0; b[1] = 1; }
    long long n1 = gdim_[1], n2 = gdim_[2];
    auto P = [&](long long i, long long j, long long k) {
        return prefix_[(size_t)((i * (n1 + 1) + j) * (n2 + 1) + k)];
    };
    return P(b[0], b[1], b[2]) - P(a[0], b[1], b[2]) - P(b[0], a[1], b[2]) -
           P(b[0], b[1], a[2]) + P(a[0], a[1], b[2]) + P(a[0], b[1], a[2]) +
           P(b[0], a[1], a[2]) - P(a[0], a[1], a[2]);
}

long long PointSet::count_window() const {
    IntegerCube w;
    w.d = d_;
    w.corner = wlo_;
    w.side = whi_[0] - wlo_[0];
    // non-cubic windows: count via full prefix
    long long n1 = gdim_[1], n2 = gdim_[2];
    auto P = [&](long long i, long long j, long long k) {
        return prefix_[(size_t)((i * (n1 + 1) + j) * (n2 + 1) + k)];
    };
    return P(gdim_[0], gdim_[1], gdim_[2]);
}

std::vector<int> PointSet::ball(const Point& center, double r) const {
    std::vector<int> out;
    std::array<long long, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < d_; ++a) {
        lo[a] = std::max<long long>(0, (long long)std::floor(center[a] - r) - wlo_[a]);
        hi[a] = std::min<long long>(gdim_[a] - 1, (long long)std::floor(center[a] + r) - wlo_[a]);
    }
    for (long long i = lo[0]; i <= hi[0]; ++i)
        for (long long j = (d_ > 1 ? lo[1] : 0); j <= (d_ > 1 ? hi[1] : 0); ++j)
            for (long long k = (d_ > 2 ? lo[2] : 0); k <= (d_ > 2 ? hi[2] : 0); ++k) {
                const auto& cell = cells_[(size_t)((i * gdim_[1] + j) * gdim_[2] + k)];
                for (int idx : cell)
                    if (dist(pts_[(size_t)idx], center, d_) <= r + 1e-12) out.push_back(idx);
            }
    return out;
}

double PointSet::min_pairwise_distance() const {
    double best = std::numeric_limits<double>::infinity();
    long long n0 = gdim_[0], n1 = gdim_[1], n2 = gdim_[2];
    // neighbor cells within the current best radius; start with radius 1 ring
    for (long long i = 0; i < n0; ++i)
        for (long long j = 0; j < n1; ++j)
            for (long long k = 0; k < n2; ++k) {
                const auto& cell = cells_[(size_t)((i * n1 + j) * n2 + k)];
                if (cell.empty()) continue;
                long long reach = std::max<long long>(1, (long long)std::ceil(best));
                for (long long di = 0; di <= reach && i + di < n0; ++di)
                    for (long long dj = (d_ > 1 ? -reach : 0); dj <= (d_ > 1 ? reach : 0); ++dj)
                        for (long long dk = (d_ > 2 ? -reach : 0); dk <= (d_ > 2 ? reach : 0);
                             ++dk) {
                            if (di == 0 && (dj < 0 || (dj == 0 && dk < 0))) continue;
                            long long jj = j + dj, kk = k + dk;
                            if (jj < 0 || jj >= n1 || kk < 0 || kk >= n2) continue;
                            const auto& other =
                                cells_[(size_t)(((i + di) * n1 + jj) * n2 + kk)];
                            bool same = (di == 0 && dj == 0 && dk == 0);
                            for (size_t a = 0; a < cell.size(); ++a)
                                for (size_t b = same ? a + 1 : 0; b < other.size(); ++b) {
                                    double d0 = dist(pts_[(size_t)cell[a]],
                                                     pts_[(size_t)other[b]], d_);
                                    best = std::min(best, d0);
                                }
                        }
            }
    if (!std::isfinite(best)) {
        // sparse fallback
        for (size_t a = 0; a < pts_.size(); ++a)
            for (size_t b = a + 1; b < pts_.size(); ++b)
                best = std::min(best, dist(pts_[a], pts_[b], d_));
    }
    return best;
}

double PointSet::covering_estimate(double pitch) const {
    double worst = 0;
    std::array<long long, 3> steps{1, 1, 1};
    for (int a = 0; a < d_; ++a)
        steps[a] = (long long)std::floor((double)(whi_[a] - wlo_[a]) / pitch) + 1;
    Point s{0, 0, 0};
    for (long long i = 0; i <= steps[0]; ++i) {
        s[0] = std::min((double)whi_[0], wlo_[0] + i * pitch);
        for (long long j = 0; j <= (d_ > 1 ? steps[1] : 0); ++j) {
            if (d_ > 1) s[1] = std::min((double)whi_[1], wlo_[1] + j * pitch);
            for (long long k = 0; k <= (d_ > 2 ? steps[2] : 0); ++k) {
                if (d_ > 2) s[2] = std::min((double)whi_[2], wlo_[2] + k * pitch);
                // expanding search
                double r = pitch;
                std::vector<int> near;
                while ((near = ball(s, r)).empty()) {
                    r *= 2;
                    if (r > 4.0 * (double)(whi_[0] - wlo_[0])) break;
                }
                double dmin = std::numeric_limits<double>::infinity();
                for (int idx : near) dmin = std::min(dmin, dist(pts_[(size_t)idx], s, d_));
                if (std::isfinite(dmin)) worst = std::max(worst, dmin);
            }
        }
    }
    return worst + pitch * std::sqrt((double)d_) / 2;
}

void PointSet::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidParam("cannot write " + path);
    out.precision(17);
    out << d_ << " " << packing_ << " " << covering_ << " " << pts_.size() << "\n";
    for (const Point& p : pts_) {
        for (int a = 0; a < d_; ++a) out << (a ? " " : "") << p[a];
        out << "\n";
    }
}

PointSet PointSet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParam("cannot open " + path);
    int d;
    double rho_pack, theta_cover;
    size_t n;
    if (!(in >> d >> rho_pack >> theta_cover >> n)) throw InvalidParam("bad point-set header");
    std::vector<Point> pts(n, Point{0, 0, 0});
    for (size_t i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a)
            if (!(in >> pts[i][a])) throw InvalidParam("truncated point-set file");
    // window inferred as the integer bounding box
    std::array<long long, 3> lo{0, 0, 0}, hi{1, 1, 1};
    for (int a = 0; a < d; ++a) {
        double mn = 0, mx = 1;
        if (!pts.empty()) {
            mn = mx = pts[0][a];
            for (const Point& p : pts) {
                mn = std::min(mn, p[a]);
                mx = std::max(mx, p[a]);
            }
        }
        lo[a] = (long long)std::floor(mn);
        hi[a] = (long long)std::ceil(mx);
        if (hi[a] == lo[a]) hi[a] = lo[a] + 1;
    }
    PointSet ps(d, std::move(pts), lo, hi);
    ps.set_delone_constants(rho_pack, theta_cover);
    return ps;
}

PointSet make_lattice(int d, double spacing, long long side) {
    if (!(spacing > 0)) throw InvalidParam("spacing must be positive");
    std::vector<Point> pts;
    long long per_axis = (long long)std::floor((double)side / spacing);
    std::array<long long, 3> idx{0, 0, 0};
    std::array<long long, 3> top{0, 0, 0};
    for (int a = 0; a < d; ++a) top[a] = per_axis;
    for (idx[0] = 0; idx[0] <= top[0]; ++idx[0])
        for (idx[1] = 0; idx[1] <= top[1]; ++idx[1])
            for (idx[2] = 0; idx[2] <= top[2]; ++idx[2]) {
                Point p{0, 0, 0};
                for (int a = 0; a < d; ++a) p[a] = idx[a] * spacing;
                pts.push_back(p);
            }
    PointSet ps(d, std::move(pts), {0, 0, 0}, {side, d > 1 ? side : 1, d > 2 ? side : 1});
    ps.set_delone_constants(spacing, spacing * std::sqrt((double)d) / 2);
    return ps;
}

PointSet make_perturbed(int d, double amplitude, uint64_t seed, long long side, double spacing) {
    if (!(amplitude >= 0) || amplitude >= spacing / 2 - 1e-12)
        throw InvalidParam("amplitude must stay below spacing/2");
    Rng rng(seed);
    std::vector<Point> pts;
    long long per_axis = (long long)std::floor((double)side / spacing);
    std::array<long long, 3> idx{0, 0, 0}, top{0, 0, 0};
    for (int a = 0; a < d; ++a) top[a] = per_axis;
    for (idx[0] = 0; idx[0] <= top[0]; ++idx[0])
        for (idx[1] = 0; idx[1] <= top[1]; ++idx[1])
            for (idx[2] = 0; idx[2] <= top[2]; ++idx[2]) {
                // uniform in the d-ball of radius amplitude, by rejection
                Point u{0, 0, 0};
                for (;;) {
                    double s = 0;
                    for (int a = 0; a < d; ++a) {
                        u[a] = rng.uniform(-1, 1);
                        s += u[a] * u[a];
                    }
                    if (s <= 1.0) break;
                }
                Point p{0, 0, 0};
                for (int a = 0; a < d; ++a) {
                    p[a] = idx[a] * spacing + amplitude * u[a];
                    p[a] = std::min(std::max(p[a], 0.0), (double)side); // clamp to window
                }
                pts.push_back(p);
            }
    PointSet ps(d, std::move(pts), {0, 0, 0}, {side, d > 1 ? side : 1, d > 2 ? side : 1});
    double pack = ps.min_pairwise_distance();
    double cover = spacing * std::sqrt((double)d) / 2 + amplitude;
    ps.set_delone_constants(pack, cover);
    return ps;
}

PointSet make_fibonacci(int n_letters) {
    if (n_letters < 1) throw InvalidParam("n_letters must be >= 1");
    std::string w = "a";
    for (int i = 0; i < n_letters; ++i) {
        std::string next;
        next.reserve(w.size() * 2);
        for (char ch : w) next += (ch == 'a') ? "ab" : "a";
        w = std::move(next);
    }
    // interval lengths (1, tau); points at the interior breakpoints
    std::vector<Point> pts;
    double pos = 0;
    for (size_t i = 0; i + 1 < w.size(); ++i) {
        pos += (w[i] == 'a') ? 1.0 : kTau;
        pts.push_back(Point{pos, 0, 0});
    }
    double total = pos + ((w.back() == 'a') ? 1.0 : kTau);
    long long hi = (long long)std::ceil(total);
    PointSet ps(1, std::move(pts), {0, 0, 0}, {hi, 1, 1});
    // exact 1-D Delone constants from the gap structure
    double pack = std::numeric_limits<double>::infinity();
    double cover = 0;
    const auto& q = ps.points();
    for (size_t i = 0; i + 1 < q.size(); ++i) {
        double g = q[i + 1][0] - q[i][0];
        pack = std::min(pack, g);
        cover = std::max(cover, g / 2);
    }
    if (!q.empty()) {
        cover = std::max(cover, q.front()[0] - 0.0);
        cover = std::max(cover, (double)hi - q.back()[0]);
    }
    ps.set_delone_constants(pack, cover);
    return ps;
}

std::string DeviationProfile::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "i,E\n";
    for (auto [i, e] : entries) os << i << "," << e << "\n";
    return os.str();
}

DeviationProfile DeviationProfile::from_csv(const std::string& text) {
    DeviationProfile p;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        int i;
        double e;
        if (!(row >> i >> e)) throw InvalidParam("bad profile row: " + line);
        p.entries.emplace_back(i, e);
    }
    std::sort(p.entries.begin(), p.entries.end());
    return p;
}

double deviation(const PointSet& x, double rho, const IntegerCube& c) {
    if (!(rho > 0)) throw InvalidParam("rho must be positive");
    long long n = x.count(c);
    if (n == 0) throw EmptyCube("cube holds no points");
    double mass = rho * c.volume();
    return std::max(mass / (double)n, (double)n / mass);
}

DeviationProfile deviation_profile(const PointSet& x, double rho, const IntegerCube& w,
                                   int i_max) {
    if ((1LL << i_max) > w.side) throw InvalidParam("2^i_max exceeds window side");
    DeviationProfile prof;
    prof.rho = rho;
    prof.window = w;
    int d = x.dim();
    for (int i = 0; i <= i_max; ++i) {
        long long side = 1LL << i;
        double worst = 1.0;
        std::array<long long, 3> c{0, 0, 0}, top{0, 0, 0};
        for (int a = 0; a < d; ++a) top[a] = w.side - side;
        for (c[0] = 0; c[0] <= top[0]; ++c[0])
            for (c[1] = 0; c[1] <= top[1]; ++c[1])
                for (c[2] = 0; c[2] <= top[2]; ++c[2]) {
                    IntegerCube cube;
                    cube.d = d;
                    cube.side = side;
                    for (int a = 0; a < d; ++a) cube.corner[a] = w.corner[a] + c[a];
                    worst = std::max(worst, deviation(x, rho, cube));
                }
        prof.entries.emplace_back(i, worst);
    }
    return prof;
}

double fit_inverse_linear(const DeviationProfile& p) {
    double k = 0;
    for (auto [j, e] : p.entries) k = std::max(k, (double)(j + 2) * (e - 1.0));
    return k;
}

double deviation_bound_from_delone_constants(int d, double rho, double packing,
                                             double covering) {
    if (!(rho > 0 && packing > 0 && covering > 0)) throw InvalidParam("bad Delone constants");
    static const double ball_vol[4] = {0, 2.0, M_PI, 4.0 * M_PI / 3.0};
    double under = rho * std::pow(4.0 * covering, d);
    double over = std::pow(2.0, d) / (rho * ball_vol[d] * std::pow(packing / 2.0, d));
    return std::max(under, over);
}

namespace {
// snapped offsets of a patch, sorted: translation-invariant signature
using PatchKey = std::vector<std::array<long long, 3>>;

PatchKey patch_key(const PointSet& x, int center, double r, double snap) {
    PatchKey key;
    const Point& c = x.points()[(size_t)center];
    for (int idx : x.ball(c, r)) {
        const Point& p = x.points()[(size_t)idx];
        std::array<long long, 3> off{0, 0, 0};
        for (int a = 0; a < x.dim(); ++a) off[a] = llround((p[a] - c[a]) / snap);
        key.push_back(off);
    }
    std::sort(key.begin(), key.end());
    return key;
}

bool ball_inside(const PointSet& x, const Point& c, double r) {
    for (int a = 0; a < x.dim(); ++a)
        if (c[a] - r < x.window_lo()[a] || c[a] + r > x.window_hi()[a]) return false;
    return true;
}
} // namespace

std::optional<double> repetitivity_radius(const PointSet& x, double r, const IntegerCube& w,
                                          double snap) {
    if (!(snap > 0)) throw InvalidParam("snap must be positive");
    if (!(r < (double)w.side / 4)) throw InvalidParam("r must be below side/4");

    // library of distinct fully-observed r-patches; id per point
    std::map<PatchKey, int> lib;
    std::vector<int> id(x.points().size(), -1);
    for (int i = 0; i < (int)x.points().size(); ++i) {
        if (!ball_inside(x, x.points()[(size_t)i], r)) continue;
        PatchKey key = patch_key(x, i, r, snap);
        auto [it, fresh] = lib.emplace(key, (int)lib.size());
        (void)fresh;
        id[(size_t)i] = it->second;
    }
    if (lib.empty()) return std::nullopt;
    const int nlib = (int)lib.size();

    for (double R = r;; R *= 2) {
        bool any_core = false;
        bool all_ok = true;
        for (int i = 0; i < (int)x.points().size(); ++i) {
            const Point& c = x.points()[(size_t)i];
            if (!ball_inside(x, c, R)) continue;
            any_core = true;
            std::vector<char> seen((size_t)nlib, 0);
            int found = 0;
            for (int idx : x.ball(c, R)) {
                int pid = id[(size_t)idx];
                if (pid >= 0 && !seen[(size_t)pid]) {
                    seen[(size_t)pid] = 1;
                    ++found;
                }
            }
            if (found < nlib) {
                all_ok = false;
                break;
            }
        }
        if (!any_core) return std::nullopt;
        if (all_ok) return R;
    }
}

} // namespace rectify
