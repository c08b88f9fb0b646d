#include "rectify/bk.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rectify {

PhiFunction PhiFunction::power(double a, double c) {
    if (!(a > 0) || !(c > 0)) throw InvalidParam("power phi needs a > 0, c > 0");
    PhiFunction f;
    f.a_ = a;
    f.b_ = 0;
    f.c_ = c;
    return f;
}

PhiFunction PhiFunction::power_log(double a, double b) {
    if (!(a > 0)) throw InvalidParam("power_log phi needs a > 0");
    PhiFunction f;
    f.a_ = a;
    f.b_ = b;
    return f;
}

PhiFunction PhiFunction::inv_log(double p) {
    if (!(p > 0)) throw InvalidParam("inv_log phi needs p > 0");
    PhiFunction f;
    f.a_ = 0;
    f.b_ = -p;
    return f;
}

PhiFunction PhiFunction::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : text) {
        if (ch == ':') {
            parts.push_back(cur);
            cur.clear();
        } else
            cur.push_back(ch);
    }
    parts.push_back(cur);
    auto num = [&](size_t i, double dflt) { return parts.size() > i ? std::stod(parts[i]) : dflt; };
    if (parts[0] == "pow") return power(num(1, 2.0), num(2, 1.0));
    if (parts[0] == "powlog") return power_log(num(1, 1.0), num(2, 1.0));
    if (parts[0] == "invlog") return inv_log(num(1, 1.0));
    throw InvalidParam("unknown phi spec: " + text);
}

double PhiFunction::eval(double t) const {
    if (!(t > 0) || !(t < 1)) throw DomainError("phi argument outside (0,1)");
    double lg = std::log(1.0 / t);
    return c_ * std::pow(t, a_) * (b_ == 0 ? 1.0 : std::pow(lg, b_));
}

std::string PhiFunction::describe() const {
    std::ostringstream os;
    os << c_ << "*t^" << a_;
    if (b_ != 0) os << "*(log 1/t)^" << b_;
    return os.str();
}

OscillationBound OscillationBound::make(PhiFunction f, int n_samples) {
    OscillationBound ob;
    ob.phi = f;
    bool sub = true, incr = true;
    double prev = -1;
    for (int k = 1; k <= n_samples; ++k) {
        double t = 0.5 * k / (n_samples + 1);
        double v = f.eval(t);
        if (v > t + 1e-12) sub = false;
        if (prev >= 0 && v < prev) incr = false;
        prev = v;
    }
    if (!incr) throw InvalidParam("phi is not increasing on samples");
    ob.sub_linear = sub;
    return ob;
}

double phi_tilde(double phi_value) {
    if (!(phi_value > 0) || phi_value > 1) throw DomainError("phi value outside (0,1]");
    double q = std::floor(1.0 / phi_value);
    return 1.0 / q;
}

double phi_tilde_dyadic(double phi_value) {
    if (!(phi_value > 0) || phi_value > 1) throw DomainError("phi value outside (0,1]");
    long long q = (long long)std::floor(1.0 / phi_value);
    long long p2 = 1;
    while (p2 < q) p2 <<= 1;
    return 1.0 / (double)p2;
}

namespace {
bool is_pow2(long long v) { return v > 0 && (v & (v - 1)) == 0; }
int log2_exact(long long v) {
    int k = 0;
    while ((1LL << k) < v) ++k;
    return k;
}
} // namespace

BKField bk_construct(const BKParams& p) {
    if (p.c <= 0) throw InvalidParam("contrast must be positive");
    if (p.n < 2 || !is_pow2(p.n)) throw InvalidParam("N must be an even power of two here");
    if (p.m < 2 || !is_pow2(p.m)) throw InvalidParam("M must be a power of two here");
    if (p.levels < 1) throw InvalidParam("levels must be >= 1");

    BKField f;
    f.c_ = p.c;
    f.n_ = p.n;
    f.m_ = p.m;

    // scale ladder: s1 = 1/N (base cells); level 2 pitch s1/M, height
    // pitch * phi~(s1); level k >= 3 pitch = previous height, height =
    // pitch * phi~(pitch).
    std::vector<double> pitches, heights;
    double s_prev = 1.0 / p.n;
    for (int lvl = 2; lvl <= p.levels; ++lvl) {
        double pitch = (lvl == 2) ? s_prev / p.m : s_prev;
        double pt_raw = phi_tilde(p.phi.phi.eval(lvl == 2 ? s_prev : pitch));
        double pt_dyadic = phi_tilde_dyadic(p.phi.phi.eval(lvl == 2 ? s_prev : pitch));
        double h_raw = pitch * pt_raw;
        double h = pitch * pt_dyadic;
        BKLevel rec;
        rec.level = lvl;
        rec.pitch = pitch;
        rec.height = h;
        rec.height_raw = h_raw;
        rec.l_s = (lvl == 2) ? s_prev : pitch;
        rec.bound = rec.l_s * p.phi.phi.eval(rec.l_s);
        f.lvls_.push_back(rec);
        pitches.push_back(pitch);
        heights.push_back(h);
        s_prev = h;
    }

    // finest unit: the last height (or the base cell for one level)
    double unit = f.lvls_.empty() ? 1.0 / p.n : f.lvls_.back().height;
    long long denom = (long long)std::llround(1.0 / unit);
    if (!is_pow2(denom)) throw DepthOverflow("non-dyadic unit, construction out of range");
    f.k_ = log2_exact(denom);
    if (f.k_ > 50) throw DepthOverflow("resolution finer than 2^-50 is not supported");
    f.wx_ = 1LL << f.k_;
    f.wy_ = f.wx_ / p.n;
    for (size_t i = 0; i < pitches.size(); ++i) {
        f.pitch_u_.push_back((long long)std::llround(pitches[i] / unit));
        f.height_u_.push_back((long long)std::llround(heights[i] / unit));
    }
    return f;
}

Box BKField::window() const {
    Box b;
    b.d = 2;
    b.lo = {0, 0, 0};
    b.hi = {1.0, 1.0 / n_, 1};
    return b;
}

double BKField::value_at(double x, double y) const {
    double unit = std::ldexp(1.0, -k_);
    long long ux = (long long)std::floor(x / unit);
    long long uy = (long long)std::floor(y / unit);
    ux = std::clamp(ux, 0LL, wx_ - 1);
    uy = std::clamp(uy, 0LL, wy_ - 1);
    // deepest implant first
    for (int li = (int)pitch_u_.size() - 1; li >= 0; --li) {
        long long g = pitch_u_[(size_t)li], h = height_u_[(size_t)li];
        if (uy % g < h) {
            long long col = (ux % g) / h;
            return (col % 2 == 0) ? 1.0 : 1.0 + c_;
        }
    }
    long long base = wx_ / n_;
    long long col = ux / base;
    return (col % 2 == 0) ? 1.0 : 1.0 + c_;
}

// stripe integral: area at value-index-even over [x0,x1) for period cells of
// width w (starting phase: even at 0); returns the even-cell length
namespace {
long long even_len(long long x0, long long x1, long long w) {
    auto F = [&](long long x) {
        long long k = x / w, r = x % w;
        long long evens = (k + 1) / 2;
        long long len = evens * w;
        if (k % 2 == 0) len += r;
        return len;
    };
    return F(x1) - F(x0);
}
} // namespace

std::pair<long long, long long> BKField::count_level(int level, const UnitsBox& b) const {
    if (b.x0 >= b.x1 || b.y0 >= b.y1) return {0, 0};
    long long area = (b.x1 - b.x0) * (b.y1 - b.y0);
    if (level == 1) {
        long long base = wx_ / n_;
        long long e = even_len(b.x0, b.x1, base) * (b.y1 - b.y0);
        return {e, area - e};
    }
    int li = level - 2;
    long long g = pitch_u_[(size_t)li], h = height_u_[(size_t)li];
    auto [c1, c2] = count_level(level - 1, b);
    // implant rows intersecting [y0, y1): rows j with [j*g, j*g + h) ∩ box
    long long j0 = b.y0 / g, j1 = (b.y1 - 1) / g;
    for (long long j = j0; j <= j1; ++j) {
        long long ry0 = std::max(b.y0, j * g);
        long long ry1 = std::min(b.y1, j * g + h);
        if (ry0 >= ry1) continue;
        // columns i with [i*g, (i+1)*g) ∩ [x0, x1)
        long long i0 = b.x0 / g, i1 = (b.x1 - 1) / g;
        for (long long i = i0; i <= i1; ++i) {
            UnitsBox sub;
            sub.x0 = std::max(b.x0, i * g);
            sub.x1 = std::min(b.x1, (i + 1) * g);
            sub.y0 = ry0;
            sub.y1 = ry1;
            if (sub.x0 >= sub.x1) continue;
            auto [p1, p2] = count_level(level - 1, sub);
            c1 -= p1;
            c2 -= p2;
            // implant checkerboard, cells of side h, phase even at i*g
            long long rel0 = sub.x0 - i * g, rel1 = sub.x1 - i * g;
            long long e = even_len(rel0, rel1, h) * (sub.y1 - sub.y0);
            long long subarea = (sub.x1 - sub.x0) * (sub.y1 - sub.y0);
            c1 += e;
            c2 += subarea - e;
        }
    }
    return {c1, c2};
}

std::pair<long long, long long> BKField::value_areas(int i, long long cx, long long cy) const {
    if (i < 0 || i > k_) throw InvalidParam("bad dyadic depth");
    long long side = 1LL << (k_ - i);
    UnitsBox b{cx * side, (cx + 1) * side, cy * side, (cy + 1) * side};
    if (b.x1 > wx_ || b.y1 > wy_ || b.x0 < 0 || b.y0 < 0)
        throw InvalidParam("cube outside the strip window");
    int top = 1 + (int)pitch_u_.size();
    return count_level(top, b);
}

double BKField::mean_osc_cube(int i, long long cx, long long cy) const {
    auto [a1, a2] = value_areas(i, cx, cy);
    double s = (double)(a1 + a2);
    double mu = ((double)a1 + (1.0 + c_) * (double)a2) / s;
    return ((double)a1 * (mu - 1.0) + (double)a2 * (1.0 + c_ - mu)) / s;
}

double BKField::osc_accounting_bound(int i, long long cx, long long cy) const {
    auto [a1, a2] = value_areas(i, cx, cy);
    double s = (double)(a1 + a2);
    return 2.0 * c_ * (double)a1 * (double)a2 / (s * s);
}

double BKField::mass_cube(int i, long long cx, long long cy) const {
    auto [a1, a2] = value_areas(i, cx, cy);
    double unit2 = std::ldexp(1.0, -2 * k_);
    return ((double)a1 + (1.0 + c_) * (double)a2) * unit2;
}

double BKField::total_mass() const {
    int top = 1 + (int)pitch_u_.size();
    auto [a1, a2] = count_level(top, UnitsBox{0, wx_, 0, wy_});
    double unit2 = std::ldexp(1.0, -2 * k_);
    return ((double)a1 + (1.0 + c_) * (double)a2) * unit2;
}

DyadicField BKField::to_dense(int max_depth) const {
    if (k_ > max_depth)
        throw DepthOverflow("construction needs depth " + std::to_string(k_) +
                            " > max " + std::to_string(max_depth));
    std::array<int, 3> nc{(int)wx_, (int)wy_, 1};
    std::vector<double> vals((size_t)wx_ * (size_t)wy_);
    double unit = std::ldexp(1.0, -k_);
    for (long long x = 0; x < wx_; ++x)
        for (long long y = 0; y < wy_; ++y)
            vals[(size_t)x * (size_t)wy_ + (size_t)y] =
                value_at((x + 0.5) * unit, (y + 0.5) * unit);
    return DyadicField(2, window(), nc, std::move(vals));
}

} // namespace rectify
