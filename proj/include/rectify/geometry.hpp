#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace rectify {

struct Vec2 {
    double x = 0, y = 0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

// Signed twice-area of (a,b,c); long double keeps the predicate stable for
// the well-scaled inputs this project produces.
inline double orient2d(Vec2 a, Vec2 b, Vec2 c) {
    long double acx = (long double)a.x - c.x, acy = (long double)a.y - c.y;
    long double bcx = (long double)b.x - c.x, bcy = (long double)b.y - c.y;
    return (double)(acx * bcy - acy * bcx);
}

// Axis-aligned box, d <= 3. Unused axes carry [0,0].
struct Box {
    int d = 2;
    std::array<double, 3> lo{0, 0, 0};
    std::array<double, 3> hi{0, 0, 0};

    double extent(int axis) const { return hi[axis] - lo[axis]; }
    double volume() const {
        double v = 1;
        for (int a = 0; a < d; ++a) v *= extent(a);
        return v;
    }
    bool contains(const std::array<double, 3>& p, double tol = 0.0) const {
        for (int a = 0; a < d; ++a)
            if (p[a] < lo[a] - tol || p[a] > hi[a] + tol) return false;
        return true;
    }
};

// Integer-corner cube with integer side.
struct IntegerCube {
    int d = 2;
    std::array<long long, 3> corner{0, 0, 0};
    long long side = 1;

    Box box() const {
        Box b;
        b.d = d;
        for (int a = 0; a < d; ++a) {
            b.lo[a] = (double)corner[a];
            b.hi[a] = (double)(corner[a] + side);
        }
        return b;
    }
    double volume() const {
        double v = 1;
        for (int a = 0; a < d; ++a) v *= (double)side;
        return v;
    }
};

// Convex polygon, counter-clockwise.
struct Poly {
    std::vector<Vec2> pts;

    double area() const {
        double s = 0;
        size_t n = pts.size();
        for (size_t i = 0; i < n; ++i) {
            const Vec2& p = pts[i];
            const Vec2& q = pts[(i + 1) % n];
            s += cross(p, q);
        }
        return 0.5 * s;
    }
};

// Clip a convex polygon against the half-plane cross(b-a, p-a) >= 0.
inline Poly clip_halfplane(const Poly& poly, Vec2 a, Vec2 b) {
    Poly out;
    size_t n = poly.pts.size();
    if (n == 0) return out;
    for (size_t i = 0; i < n; ++i) {
        Vec2 p = poly.pts[i];
        Vec2 q = poly.pts[(i + 1) % n];
        double sp = cross(b - a, p - a);
        double sq = cross(b - a, q - a);
        if (sp >= 0) out.pts.push_back(p);
        if ((sp > 0 && sq < 0) || (sp < 0 && sq > 0)) {
            double w = sp / (sp - sq);
            out.pts.push_back(p + w * (q - p));
        }
    }
    return out;
}

// Clip against a CCW triangle.
inline Poly clip_triangle(const Poly& poly, Vec2 t0, Vec2 t1, Vec2 t2) {
    Poly r = clip_halfplane(poly, t0, t1);
    r = clip_halfplane(r, t1, t2);
    r = clip_halfplane(r, t2, t0);
    return r;
}

// 2x2 matrix in row-major order.
struct Mat2 {
    double a = 1, b = 0, c = 0, d = 1;

    double det() const { return a * d - b * c; }
    Mat2 inverse() const {
        double dt = det();
        return {d / dt, -b / dt, -c / dt, a / dt};
    }
    Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
};

// Largest singular value.
inline double sigma_max(const Mat2& m) {
    // singular values of [[a,b],[c,d]] from the exact 2x2 formula
    double e = (m.a + m.d) / 2, f = (m.a - m.d) / 2;
    double g = (m.c + m.b) / 2, h = (m.c - m.b) / 2;
    return std::sqrt(e * e + h * h) + std::sqrt(f * f + g * g);
}

// Affine piece of a triangulated map: the affine map sending source
// triangle (s0,s1,s2) onto target triangle (t0,t1,t2).
struct AffinePiece {
    Vec2 s0, s1, s2;
    Vec2 t0, t1, t2;
    Mat2 lin;   // derivative
    Vec2 shift; // t = lin*s + shift
    double det = 1;

    bool contains_source(Vec2 p, double tol = 1e-12) const {
        return orient2d(s0, s1, p) >= -tol && orient2d(s1, s2, p) >= -tol &&
               orient2d(s2, s0, p) >= -tol;
    }
    bool contains_target(Vec2 p, double tol = 1e-12) const {
        return orient2d(t0, t1, p) >= -tol && orient2d(t1, t2, p) >= -tol &&
               orient2d(t2, t0, p) >= -tol;
    }
    Vec2 forward(Vec2 p) const { return lin.apply(p) + shift; }
    Vec2 backward(Vec2 p) const {
        Mat2 inv = lin.inverse();
        return inv.apply(p - shift);
    }
};

inline AffinePiece make_piece(Vec2 s0, Vec2 s1, Vec2 s2, Vec2 t0, Vec2 t1, Vec2 t2) {
    AffinePiece ap;
    ap.s0 = s0; ap.s1 = s1; ap.s2 = s2;
    ap.t0 = t0; ap.t1 = t1; ap.t2 = t2;
    Vec2 u = s1 - s0, v = s2 - s0;
    Vec2 U = t1 - t0, V = t2 - t0;
    double den = cross(u, v);
    // lin = [U V] * [u v]^{-1}
    ap.lin.a = (U.x * v.y - V.x * u.y) / den;
    ap.lin.b = (V.x * u.x - U.x * v.x) / den;
    ap.lin.c = (U.y * v.y - V.y * u.y) / den;
    ap.lin.d = (V.y * u.x - U.y * v.x) / den;
    ap.shift = t0 - ap.lin.apply(s0);
    ap.det = ap.lin.det();
    return ap;
}

} // namespace rectify
