#include "rectify/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rectify {

DyadicField::DyadicField(int d, Box window, std::array<int, 3> cells, std::vector<double> values)
    : d_(d), window_(window), cells_(cells) {
    if (d < 1 || d > 3) throw InvalidParam("dimension must be 1..3");
    window_.d = d;
    size_t n = 1;
    for (int a = 0; a < 3; ++a) {
        if (a >= d) cells_[a] = 1;
        if (cells_[a] < 1) throw InvalidParam("cell counts must be >= 1");
        n *= (size_t)cells_[a];
    }
    for (int a = d; a < 3; ++a) {
        window_.lo[a] = 0;
        window_.hi[a] = 1;
    }
    if (values.size() != n) throw InvalidParam("value count mismatch");
    v_ = std::move(values);
    inf_ = *std::min_element(v_.begin(), v_.end());
    sup_ = *std::max_element(v_.begin(), v_.end());
    if (!(inf_ > 0)) throw InvalidParam("density values must be positive");
    double cellvol = 1;
    for (int a = 0; a < d_; ++a) cellvol *= cell_extent(a);
    double s = 0;
    for (double x : v_) s += x;
    mass_ = s * cellvol;
}

int DyadicField::depth() const {
    int best = 0;
    for (int a = 0; a < d_; ++a) {
        int n = cells_[a];
        if (n == 1) continue;
        int k = 0;
        while ((1 << k) < n) ++k;
        if ((1 << k) != n) throw InvalidParam("grid is not a power of two");
        best = std::max(best, k);
    }
    return best;
}

double DyadicField::value(std::array<int, 3> ix) const {
    for (int a = 0; a < 3; ++a)
        if (ix[a] < 0 || ix[a] >= cells_[a]) throw InvalidParam("cell index out of range");
    return v_[index(ix)];
}

double DyadicField::value_at(const std::array<double, 3>& p) const {
    std::array<int, 3> ix{0, 0, 0};
    for (int a = 0; a < d_; ++a) {
        double rel = (p[a] - window_.lo[a]) / cell_extent(a);
        int i = (int)std::floor(rel);
        if (i == cells_[a] && rel <= (double)cells_[a] + 1e-12) i = cells_[a] - 1;
        if (i < 0 || i >= cells_[a]) throw OutOfWindow("point outside field window");
        ix[a] = i;
    }
    return v_[index(ix)];
}

bool DyadicField::aligned(const Box& b) const {
    const double tol = 1e-9;
    for (int a = 0; a < d_; ++a) {
        double w = cell_extent(a);
        double rlo = (b.lo[a] - window_.lo[a]) / w;
        double rhi = (b.hi[a] - window_.lo[a]) / w;
        if (std::abs(rlo - std::round(rlo)) > tol) return false;
        if (std::abs(rhi - std::round(rhi)) > tol) return false;
        if (std::round(rlo) < 0 || std::round(rhi) > cells_[a]) return false;
        if (std::round(rhi) <= std::round(rlo)) return false;
    }
    return true;
}

double DyadicField::mass(const Box& b) const {
    if (!aligned(b)) throw InvalidParam("box not aligned with the cell grid");
    std::array<int, 3> lo{0, 0, 0}, hi{1, 1, 1};
    double cellvol = 1;
    for (int a = 0; a < d_; ++a) {
        double w = cell_extent(a);
        lo[a] = (int)std::round((b.lo[a] - window_.lo[a]) / w);
        hi[a] = (int)std::round((b.hi[a] - window_.lo[a]) / w);
        cellvol *= w;
    }
    double s = 0;
    for (int i = lo[0]; i < hi[0]; ++i)
        for (int j = (d_ > 1 ? lo[1] : 0); j < (d_ > 1 ? hi[1] : 1); ++j)
            for (int k = (d_ > 2 ? lo[2] : 0); k < (d_ > 2 ? hi[2] : 1); ++k)
                s += v_[index({i, j, k})];
    return s * cellvol;
}

DyadicField DyadicField::average(int depth_target) const {
    int dep = depth();
    if (depth_target > dep || depth_target < 0) throw InvalidParam("bad average depth");
    int shift = dep - depth_target;
    std::array<int, 3> nc{1, 1, 1};
    for (int a = 0; a < d_; ++a) {
        if (cells_[a] == 1) {
            nc[a] = 1;
            continue;
        }
        if (cells_[a] >> shift < 1) throw InvalidParam("axis too shallow for average depth");
        nc[a] = cells_[a] >> shift;
    }
    std::vector<double> nv((size_t)nc[0] * nc[1] * nc[2], 0.0);
    auto nindex = [&](int i, int j, int k) { return ((size_t)i * nc[1] + j) * nc[2] + k; };
    std::array<int, 3> fac{cells_[0] / nc[0], cells_[1] / nc[1], cells_[2] / nc[2]};
    double inv = 1.0 / ((double)fac[0] * fac[1] * fac[2]);
    for (int i = 0; i < cells_[0]; ++i)
        for (int j = 0; j < cells_[1]; ++j)
            for (int k = 0; k < cells_[2]; ++k)
                nv[nindex(i / fac[0], j / fac[1], k / fac[2])] += v_[index({i, j, k})] * inv;
    return DyadicField(d_, window_, nc, std::move(nv));
}

double DyadicField::mean_osc(const Box& b) const {
    if (!aligned(b)) throw InvalidParam("box not aligned with the cell grid");
    double vol = 1;
    for (int a = 0; a < d_; ++a) vol *= b.extent(a);
    double mu = mass(b) / vol;
    std::array<int, 3> lo{0, 0, 0}, hi{1, 1, 1};
    double cellvol = 1;
    for (int a = 0; a < d_; ++a) {
        double w = cell_extent(a);
        lo[a] = (int)std::round((b.lo[a] - window_.lo[a]) / w);
        hi[a] = (int)std::round((b.hi[a] - window_.lo[a]) / w);
        cellvol *= w;
    }
    double s = 0;
    for (int i = lo[0]; i < hi[0]; ++i)
        for (int j = (d_ > 1 ? lo[1] : 0); j < (d_ > 1 ? hi[1] : 1); ++j)
            for (int k = (d_ > 2 ? lo[2] : 0); k < (d_ > 2 ? hi[2] : 1); ++k)
                s += std::abs(v_[index({i, j, k})] - mu) * cellvol;
    return s / vol;
}

std::string DyadicField::to_json() const {
    nlohmann::json j;
    j["schema"] = "rectify/density/v1";
    j["d"] = d_;
    j["window"] = {{"lo", std::vector<double>(window_.lo.begin(), window_.lo.begin() + d_)},
                   {"hi", std::vector<double>(window_.hi.begin(), window_.hi.begin() + d_)}};
    int dep = -1;
    try {
        dep = depth();
    } catch (const InvalidParam&) {
    }
    j["depth"] = dep;
    j["ncells"] = std::vector<int>(cells_.begin(), cells_.begin() + d_);
    j["values"] = v_;
    j["inf_bound"] = inf_;
    j["sup_bound"] = sup_;
    return j.dump();
}

DyadicField DyadicField::from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    int d = j.at("d").get<int>();
    Box w;
    w.d = d;
    auto lo = j.at("window").at("lo").get<std::vector<double>>();
    auto hi = j.at("window").at("hi").get<std::vector<double>>();
    for (int a = 0; a < d; ++a) {
        w.lo[a] = lo[(size_t)a];
        w.hi[a] = hi[(size_t)a];
    }
    std::array<int, 3> nc{1, 1, 1};
    if (j.contains("ncells")) {
        auto n = j.at("ncells").get<std::vector<int>>();
        for (int a = 0; a < d; ++a) nc[a] = n[(size_t)a];
    } else {
        int dep = j.at("depth").get<int>();
        for (int a = 0; a < d; ++a) nc[a] = 1 << dep;
    }
    return DyadicField(d, w, nc, j.at("values").get<std::vector<double>>());
}

void DyadicField::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidParam("cannot write " + path);
    out << to_json() << "\n";
}

DyadicField DyadicField::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParam("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

DyadicField checkerboard(double c, int n) {
    if (c < 0) throw InvalidParam("contrast must be >= 0");
    if (n < 2 || n % 2 != 0) throw InvalidParam("N must be even and >= 2");
    Box w;
    w.d = 2;
    w.lo = {0, 0, 0};
    w.hi = {1.0, 1.0 / n, 1};
    std::vector<double> vals((size_t)n);
    for (int i = 1; i <= n; ++i) vals[(size_t)i - 1] = (i % 2 == 1) ? 1.0 : 1.0 + c;
    return DyadicField(2, w, {n, 1, 1}, std::move(vals));
}

std::pair<double, double> split_ratios(const DyadicField& f, const Box& block, int axis) {
    if (axis < 0 || axis >= f.dim()) throw InvalidParam("bad split axis");
    Box a = block;
    a.hi[axis] = 0.5 * (block.lo[axis] + block.hi[axis]);
    double ma = f.mass(a);
    double md = f.mass(block);
    if (!(md > 0)) throw InvalidParam("block carries no mass");
    double alpha = ma / md;
    return {alpha, 1.0 - alpha};
}

DeviationProfile density_deviation_profile(const DyadicField& f, double rho) {
    if (!(rho > 0)) throw InvalidParam("rho must be positive");
    DeviationProfile prof;
    prof.rho = rho;
    int d = f.dim();
    // integer-corner cubes require an integer-aligned window
    std::array<long long, 3> wlo{0, 0, 0}, whi{1, 1, 1};
    for (int a = 0; a < d; ++a) {
        wlo[a] = (long long)std::llround(f.window().lo[a]);
        whi[a] = (long long)std::llround(f.window().hi[a]);
        if (std::abs(f.window().lo[a] - wlo[a]) > 1e-9 ||
            std::abs(f.window().hi[a] - whi[a]) > 1e-9)
            throw InvalidParam("window is not integer-aligned");
    }
    long long min_extent = whi[0] - wlo[0];
    for (int a = 0; a < d; ++a) min_extent = std::min(min_extent, whi[a] - wlo[a]);
    prof.window.d = d;
    prof.window.corner = wlo;
    prof.window.side = min_extent;

    for (int i = 0; (1LL << i) <= min_extent; ++i) {
        long long side = 1LL << i;
        double worst = 1.0;
        std::array<long long, 3> c{0, 0, 0}, top{0, 0, 0};
        for (int a = 0; a < d; ++a) top[a] = (whi[a] - wlo[a]) - side;
        for (c[0] = 0; c[0] <= top[0]; ++c[0])
            for (c[1] = 0; c[1] <= (d > 1 ? top[1] : 0); ++c[1])
                for (c[2] = 0; c[2] <= (d > 2 ? top[2] : 0); ++c[2]) {
                    Box b;
                    b.d = d;
                    for (int a = 0; a < d; ++a) {
                        b.lo[a] = (double)(wlo[a] + c[a]);
                        b.hi[a] = (double)(wlo[a] + c[a] + side);
                    }
                    double avg = f.mass(b) / b.volume();
                    worst = std::max(worst, std::max(rho / avg, avg / rho));
                }
        prof.entries.emplace_back(i, worst);
    }
    return prof;
}

DyadicField from_delone(const PointSet& x, double eps_floor, int* flagged_empty) {
    if (!(eps_floor > 0)) throw InvalidParam("eps_floor must be positive");
    int d = x.dim();
    Box w;
    w.d = d;
    std::array<int, 3> nc{1, 1, 1};
    for (int a = 0; a < d; ++a) {
        w.lo[a] = (double)x.window_lo()[a];
        w.hi[a] = (double)x.window_hi()[a];
        nc[a] = (int)(x.window_hi()[a] - x.window_lo()[a]);
    }
    std::vector<double> vals((size_t)nc[0] * nc[1] * nc[2]);
    int empties = 0;
    std::array<long long, 3> c{0, 0, 0};
    size_t at = 0;
    for (c[0] = 0; c[0] < nc[0]; ++c[0])
        for (c[1] = 0; c[1] < (d > 1 ? nc[1] : 1); ++c[1])
            for (c[2] = 0; c[2] < (d > 2 ? nc[2] : 1); ++c[2]) {
                IntegerCube cell;
                cell.d = d;
                cell.side = 1;
                for (int a = 0; a < d; ++a) cell.corner[a] = x.window_lo()[a] + c[a];
                long long n = x.count(cell);
                at = ((size_t)c[0] * nc[1] + (size_t)c[1]) * nc[2] + (size_t)c[2];
                if (n == 0) {
                    vals[at] = eps_floor;
                    ++empties;
                } else {
                    vals[at] = (double)n;
                }
            }
    if (flagged_empty) *flagged_empty = empties;
    return DyadicField(d, w, nc, std::move(vals));
}

PointSet points_from_density(const DyadicField& f) {
    int d = f.dim();
    std::array<long long, 3> wlo{0, 0, 0}, whi{1, 1, 1};
    for (int a = 0; a < d; ++a) {
        wlo[a] = (long long)std::llround(f.window().lo[a]);
        whi[a] = (long long)std::llround(f.window().hi[a]);
    }
    std::vector<Point> pts;
    std::array<long long, 3> c{0, 0, 0};
    for (c[0] = wlo[0]; c[0] < whi[0]; ++c[0])
        for (c[1] = wlo[1]; c[1] < (d > 1 ? whi[1] : wlo[1] + 1); ++c[1])
            for (c[2] = wlo[2]; c[2] < (d > 2 ? whi[2] : wlo[2] + 1); ++c[2]) {
                Box cell;
                cell.d = d;
                for (int a = 0; a < d; ++a) {
                    cell.lo[a] = (double)c[a];
                    cell.hi[a] = (double)(c[a] + 1);
                }
                long long n = std::llround(f.mass(cell));
                if (n <= 0) continue;
                int k = (int)std::ceil(std::pow((double)n, 1.0 / d));
                long long placed = 0;
                std::array<int, 3> g{0, 0, 0};
                for (g[0] = 0; g[0] < k && placed < n; ++g[0])
                    for (g[1] = 0; g[1] < (d > 1 ? k : 1) && placed < n; ++g[1])
                        for (g[2] = 0; g[2] < (d > 2 ? k : 1) && placed < n; ++g[2]) {
                            Point p{0, 0, 0};
                            for (int a = 0; a < d; ++a)
                                p[a] = (double)c[a] + (2.0 * g[a] + 1.0) / (2.0 * k);
                            pts.push_back(p);
                            ++placed;
                        }
            }
    PointSet ps(d, std::move(pts), wlo, whi);
    double pack = ps.points().size() > 1 ? ps.min_pairwise_distance() : 1.0;
    double cover = ps.covering_estimate(0.25);
    ps.set_delone_constants(pack, cover);
    return ps;
}

} // namespace rectify
