#include <algorithm>
#include <cmath>

#include "rectify/transport.hpp"

namespace rectify {

// ------------------------------------------------------------------- 1-D

double Interval1DMap::eval(double t) const {
    if (t < breaks.front() - 1e-12 || t > breaks.back() + 1e-12)
        throw OutOfWindow("1d map argument outside domain");
    t = std::clamp(t, breaks.front(), breaks.back());
    auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
    size_t j = (size_t)std::max<std::ptrdiff_t>(1, it - breaks.begin()) - 1;
    if (j >= breaks.size() - 1) j = breaks.size() - 2;
    double w = (t - breaks[j]) / (breaks[j + 1] - breaks[j]);
    return values[j] + w * (values[j + 1] - values[j]);
}

double Interval1DMap::eval_inv(double v) const {
    if (v < values.front() - 1e-12 || v > values.back() + 1e-12)
        throw OutOfWindow("1d inverse argument outside range");
    v = std::clamp(v, values.front(), values.back());
    auto it = std::upper_bound(values.begin(), values.end(), v);
    size_t j = (size_t)std::max<std::ptrdiff_t>(1, it - values.begin()) - 1;
    if (j >= values.size() - 1) j = values.size() - 2;
    double w = (v - values[j]) / (values[j + 1] - values[j]);
    return breaks[j] + w * (breaks[j + 1] - breaks[j]);
}

std::vector<double> Interval1DMap::slopes() const {
    std::vector<double> s;
    for (size_t j = 0; j + 1 < breaks.size(); ++j)
        s.push_back((values[j + 1] - values[j]) / (breaks[j + 1] - breaks[j]));
    return s;
}

Interval1DMap box_map_1d(const std::vector<double>& alphas) {
    if (alphas.empty()) throw InvalidParam("need at least one ratio");
    double sum = 0;
    for (double a : alphas) {
        if (!(a > 0)) throw InvalidParam("ratios must be positive");
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidParam("ratios must sum to 1");
    size_t m = alphas.size();
    Interval1DMap map;
    map.breaks.push_back(0);
    map.values.push_back(0);
    double acc = 0;
    for (size_t j = 0; j < m; ++j) {
        acc += alphas[j];
        map.breaks.push_back((double)(j + 1) / (double)m);
        map.values.push_back(j + 1 == m ? 1.0 : acc);
    }
    return map;
}

// ------------------------------------------------------------------- 2-D

namespace {

// Tent solve, canonical square, A = [0,1]x[0,1/2], lambda = target det on A.
// The constraint lambda*a = 1/(4*(1-s0)) makes every fan determinant equal
// lambda exactly; apex height h = lambda - 1/2 fixes the image area.
struct TentSide {
    double h, s0, s1, a, ap, b, bp;
};

TentSide tent_solve(double lambda) {
    TentSide t;
    double lo = 1.0 / (4.0 * lambda);
    double hi = std::min(0.5, 1.0 / (2.0 * lambda));
    double a = 0.5 * (lo + hi);
    double s0 = 1.0 - 1.0 / (4.0 * lambda * a);
    t.h = lambda - 0.5;
    t.a = a;
    t.ap = lambda * a;
    t.s0 = s0;
    t.s1 = lambda * s0;
    t.b = s0 * a + 0.25;
    t.bp = lambda * t.b + 2.0 * lambda * (lambda - 1.0) * s0 * a;
    return t;
}

void push_tri(std::vector<AffinePiece>& out, Vec2 a0, Vec2 a1, Vec2 a2, Vec2 b0, Vec2 b1,
              Vec2 b2) {
    if (orient2d(a0, a1, a2) < 0) {
        std::swap(a1, a2);
        std::swap(b1, b2);
    }
    out.push_back(make_piece(a0, a1, a2, b0, b1, b2));
}

// One half of the tent map in canonical coordinates; flip mirrors the
// construction into the top half (used with the complementary ratio).
void emit_tent_side(double lambda, bool flip, std::vector<AffinePiece>& out) {
    TentSide t = tent_solve(lambda);
    auto F = [&](double x, double y) { return flip ? Vec2{x, 1.0 - y} : Vec2{x, y}; };
    Vec2 c00 = F(0, 0), c10 = F(1, 0), wl = F(0, 0.5), wr = F(1, 0.5);
    Vec2 mt_s = F(0.5, 0.5), mt_t = F(0.5, t.h);
    Vec2 s_s = F(0.5, t.s0), s_t = F(0.5, t.s1);
    Vec2 ql_s = F(t.a, t.b), ql_t = F(t.ap, t.bp);
    Vec2 qr_s = F(1 - t.a, t.b), qr_t = F(1 - t.ap, t.bp);

    push_tri(out, c00, c10, s_s, c00, c10, s_t);
    push_tri(out, c10, wr, qr_s, c10, wr, qr_t);
    push_tri(out, c00, ql_s, wl, c00, ql_t, wl);
    push_tri(out, c00, s_s, ql_s, c00, s_t, ql_t);
    push_tri(out, c10, qr_s, s_s, c10, qr_t, s_t);
    push_tri(out, s_s, qr_s, mt_s, s_t, qr_t, mt_t);
    push_tri(out, s_s, mt_s, ql_s, s_t, mt_t, ql_t);
    push_tri(out, qr_s, wr, mt_s, qr_t, wr, mt_t);
    push_tri(out, ql_s, mt_s, wl, ql_t, mt_t, wl);
}

struct PanelSide {
    double sigma, aw, bw, ar, br; // sources
    double xt, xi, eta;           // interface node, source x and image
    double lambda;
};

// Solve the wall-panel fan: the three bridge equations are linear in
// (xi, eta, xt); the image-area identity is then zeroed by a secant sweep
// over the source height bw.
bool panel_solve_A(double lambda, PanelSide& out) {
    double alpha = lambda / 2;
    const double sigma = 0.45, aw = 0.20, ar = 0.75, br = 0.28;
    auto attempt = [&](double bw, PanelSide& ps) -> bool {
        // rows: E5, E6, E7 as linear equations in (xi, eta, xt)
        double A[3][3], rhs[3];
        A[0][0] = -lambda * br;
        A[0][1] = (ar - sigma);
        A[0][2] = lambda * br;
        rhs[0] = lambda * (ar - sigma) / 2;
        A[1][0] = lambda * bw;
        A[1][1] = -(lambda * aw - sigma);
        A[1][2] = -lambda * bw;
        rhs[1] = -lambda * (aw - sigma) / 2;
        A[2][0] = 0.5 - lambda * bw;
        A[2][1] = lambda * aw;
        A[2][2] = -lambda * (0.5 - bw);
        rhs[2] = lambda * aw / 2;
        // Gaussian elimination
        double M[3][4];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) M[i][j] = A[i][j];
            M[i][3] = rhs[i];
        }
        for (int col = 0; col < 3; ++col) {
            int piv = col;
            for (int r = col + 1; r < 3; ++r)
                if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
            if (std::abs(M[piv][col]) < 1e-14) return false;
            std::swap(M[piv], M[col]);
            for (int r = 0; r < 3; ++r) {
                if (r == col) continue;
                double f = M[r][col] / M[col][col];
                for (int j = col; j < 4; ++j) M[r][j] -= f * M[col][j];
            }
        }
        ps.xi = M[0][3] / M[0][0];
        ps.eta = M[1][3] / M[1][1];
        ps.xt = M[2][3] / M[2][2];
        ps.sigma = sigma;
        ps.aw = aw;
        ps.bw = bw;
        ps.ar = ar;
        ps.br = br;
        ps.lambda = lambda;
        return true;
    };
    auto residual = [&](const PanelSide& ps) {
        // image polygon area condition: eta = alpha - xi*(1/2 - alpha)
        return ps.eta - (alpha - ps.xi * (0.5 - alpha));
    };
    // secant on bw
    double b0 = 0.22, b1 = 0.34;
    PanelSide p0, p1;
    if (!attempt(b0, p0) || !attempt(b1, p1)) return false;
    double r0 = residual(p0), r1 = residual(p1);
    for (int it = 0; it < 80; ++it) {
        if (std::abs(r1) < 1e-14) break;
        double db = r1 * (b1 - b0) / (r1 - r0);
        if (!std::isfinite(db)) break;
        b0 = b1;
        r0 = r1;
        b1 = b1 - db;
        b1 = std::clamp(b1, 0.02, 0.48);
        if (!attempt(b1, p1)) return false;
        r1 = residual(p1);
    }
    if (std::abs(r1) > 1e-11) return false;
    out = p1;
    return true;
}

// B side: the interface node is shared with the A side, so the three bridge
// equations pin the source parameters in closed form.
bool panel_solve_B(double lambda, double xt, double xi, double eta_flipped, PanelSide& out) {
    const double aw = 0.20, ar = 0.75;
    double denom = lambda * (xt - xi);
    if (std::abs(denom) < 1e-13) return false;
    // E7: bw
    double bw = (lambda * aw / 2 + lambda * xt / 2 - xi / 2 - lambda * aw * eta_flipped) / denom;
    // E6: sigma
    double dsig = eta_flipped - lambda / 2;
    if (std::abs(dsig) < 1e-13) return false;
    double sigma = (-lambda * bw * xi + lambda * aw * eta_flipped + lambda * bw * xt -
                    lambda * aw / 2) /
                   dsig;
    // E5: br
    double br = (ar - sigma) * (lambda / 2 - eta_flipped) / denom;
    out.sigma = sigma;
    out.aw = aw;
    out.bw = bw;
    out.ar = ar;
    out.br = br;
    out.xt = xt;
    out.xi = xi;
    out.eta = eta_flipped;
    out.lambda = lambda;
    if (!(sigma > 0.02 && sigma < 0.98)) return false;
    if (!(bw > 0.01 && bw < 0.49)) return false;
    if (!(br > 0.01 && br < 0.49)) return false;
    return true;
}

// Emit the eight panel triangles (panel coordinates, A side at the bottom).
// flip mirrors into the top half.
void emit_panel_side(const PanelSide& p, bool flip, std::vector<AffinePiece>& out) {
    double lambda = p.lambda, alpha = p.lambda / 2;
    auto F = [&](double x, double y) { return flip ? Vec2{x, 1.0 - y} : Vec2{x, y}; };
    Vec2 c00 = F(0, 0), s = F(p.sigma, 0), c10 = F(1, 0), wl = F(0, 0.5);
    Vec2 rm_s = F(1, 0.5), rm_t = F(1, alpha);
    Vec2 tm_s = F(p.xt, 0.5), tm_t = F(p.xi, p.eta);
    Vec2 qw_s = F(p.aw, p.bw), qw_t = F(lambda * p.aw, lambda * p.bw);
    Vec2 qr_s = F(p.ar, p.br), qr_t = F(p.ar, lambda * p.br);

    push_tri(out, c00, s, qw_s, c00, s, qw_t);            // bottom left
    push_tri(out, s, c10, qr_s, s, c10, qr_t);            // bottom right
    push_tri(out, c10, rm_s, qr_s, c10, rm_t, qr_t);      // prescribed edge
    push_tri(out, rm_s, tm_s, qr_s, rm_t, tm_t, qr_t);    // interface right
    push_tri(out, s, qr_s, tm_s, s, qr_t, tm_t);          // bridge right
    push_tri(out, s, tm_s, qw_s, s, tm_t, qw_t);          // bridge left
    push_tri(out, tm_s, wl, qw_s, tm_t, wl, qw_t);        // interface left
    push_tri(out, c00, qw_s, wl, c00, qw_t, wl);          // wall
}

// Panel pieces for the whole canonical square, all alpha in (0,1).
std::vector<AffinePiece> panel_pieces(double alpha) {
    double la = 2 * alpha, lb = 2 - 2 * alpha;
    PanelSide A;
    if (!panel_solve_A(la, A)) throw DegenerateFan("panel solve failed (A side)");
    PanelSide B;
    if (!panel_solve_B(lb, A.xt, A.xi, 1.0 - A.eta, B))
        throw DegenerateFan("panel solve failed (B side)");

    std::vector<AffinePiece> half;
    emit_panel_side(A, false, half);
    emit_panel_side(B, true, half);

    // left column: panel x in [0,1] -> block x in [0,1/2]; right column mirrored
    std::vector<AffinePiece> out;
    auto remap = [&](Vec2 v, bool right) {
        double x = v.x / 2;
        if (right) x = 1.0 - x;
        return Vec2{x, v.y};
    };
    for (const AffinePiece& p : half)
        for (bool right : {false, true}) {
            Vec2 s0 = remap(p.s0, right), s1 = remap(p.s1, right), s2 = remap(p.s2, right);
            Vec2 t0 = remap(p.t0, right), t1 = remap(p.t1, right), t2 = remap(p.t2, right);
            push_tri(out, s0, s1, s2, t0, t1, t2);
        }
    return out;
}

void validate_pieces(const std::vector<AffinePiece>& pieces, double alpha) {
    double la = 2 * alpha, lb = 2 - 2 * alpha;
    for (const AffinePiece& p : pieces) {
        double so = orient2d(p.s0, p.s1, p.s2);
        double to = orient2d(p.t0, p.t1, p.t2);
        if (!(so > 1e-9)) throw DegenerateFan("degenerate source triangle");
        if (!(to > 1e-12)) throw DegenerateFan("image triangle lost orientation");
        double want = (p.s0.y + p.s1.y + p.s2.y) / 3 < 0.5 ? la : lb;
        if (std::abs(p.det - want) > 1e-11) throw DegenerateFan("determinant drift");
    }
}

// conjugate canonical pieces (unit square, split along y) onto a block
std::vector<AffinePiece> conjugate(const std::vector<AffinePiece>& canon, const Box& block,
                                   int axis) {
    double x0 = block.lo[0], w = block.extent(0);
    double y0 = block.lo[1], h = block.extent(1);
    auto from_canon = [&](Vec2 c) {
        if (axis == 1) return Vec2{x0 + c.x * w, y0 + c.y * h};
        return Vec2{x0 + c.y * w, y0 + c.x * h}; // canonical split-axis -> block x
    };
    std::vector<AffinePiece> out;
    out.reserve(canon.size());
    for (const AffinePiece& p : canon) {
        Vec2 s0 = from_canon(p.s0), s1 = from_canon(p.s1), s2 = from_canon(p.s2);
        Vec2 t0 = from_canon(p.t0), t1 = from_canon(p.t1), t2 = from_canon(p.t2);
        push_tri(out, s0, s1, s2, t0, t1, t2);
    }
    return out;
}

Box unit_square() {
    Box b;
    b.d = 2;
    b.lo = {0, 0, 0};
    b.hi = {1, 1, 1};
    return b;
}

} // namespace

Vec2 BoxMap2D::eval(Vec2 p) const {
    for (double tol : {1e-12, 1e-9, 1e-6}) {
        for (const AffinePiece& ap : pieces)
            if (ap.contains_source(p, tol)) return ap.forward(p);
    }
    return p; // block boundary is fixed pointwise
}

Vec2 BoxMap2D::eval_inv(Vec2 p) const {
    for (double tol : {1e-12, 1e-9, 1e-6}) {
        for (const AffinePiece& ap : pieces)
            if (ap.contains_target(p, tol)) return ap.backward(p);
    }
    return p;
}

double BoxMap2D::grad_dev_forward() const {
    double worst = 0;
    for (const AffinePiece& p : pieces) {
        Mat2 dev{p.lin.a - 1, p.lin.b, p.lin.c, p.lin.d - 1};
        worst = std::max(worst, sigma_max(dev));
    }
    return worst;
}

double BoxMap2D::grad_dev_inverse() const {
    double worst = 0;
    for (const AffinePiece& p : pieces) {
        Mat2 inv = p.lin.inverse();
        Mat2 dev{inv.a - 1, inv.b, inv.c, inv.d - 1};
        worst = std::max(worst, sigma_max(dev));
    }
    return worst;
}

BoxMap2D box_map_2d(double alpha, int axis, const Box* block) {
    if (!(alpha > 0 && alpha < 1)) throw InvalidParam("alpha must lie in (0,1)");
    if (std::abs(alpha - 0.5) >= 0.25)
        throw SplitRequired("tent apex leaves the block for |alpha-1/2| >= 1/4");
    std::vector<AffinePiece> canon;
    emit_tent_side(2 * alpha, false, canon);
    emit_tent_side(2 - 2 * alpha, true, canon);
    validate_pieces(canon, alpha);
    BoxMap2D m;
    m.block = block ? *block : unit_square();
    m.axis = axis;
    m.alpha = alpha;
    m.pieces = conjugate(canon, m.block, axis);
    return m;
}

BoxMap2D box_map_2d_extended(double alpha, int axis, const Box* block) {
    if (!(alpha > 0 && alpha < 1)) throw InvalidParam("alpha must lie in (0,1)");
    if (std::abs(alpha - 0.5) < 0.24) return box_map_2d(alpha, axis, block);
    std::vector<AffinePiece> canon = panel_pieces(alpha);
    validate_pieces(canon, alpha);
    BoxMap2D m;
    m.block = block ? *block : unit_square();
    m.axis = axis;
    m.alpha = alpha;
    m.pieces = conjugate(canon, m.block, axis);
    return m;
}

std::vector<double> split_alpha(double alpha) {
    if (!(alpha > 0 && alpha < 1)) throw InvalidParam("alpha must lie in (0,1)");
    double target = 2 * alpha;
    for (int k = 1;; ++k) {
        double step = std::pow(target, 1.0 / k);
        double a = step / 2;
        if (std::abs(a - 0.5) < 0.25) return std::vector<double>((size_t)k, a);
        if (k > 64) throw Error("split_alpha failed to converge");
    }
}

double calibrated_c_eta() {
    static double cached = [] {
        double worst = 0;
        Box square = unit_square();
        Box row; // the 2:1 block an x-sweep produces, before conjugation
        row.d = 2;
        row.lo = {0, 0, 0};
        row.hi = {1, 0.5, 1};
        for (int i = 1; i < 400; ++i) {
            double alpha = 0.02 + 0.96 * i / 400.0;
            if (std::abs(alpha - 0.5) < 1e-9) continue;
            for (int axis : {0, 1}) {
                for (const Box* blk : {&square, &row}) {
                    BoxMap2D m;
                    try {
                        m = box_map_2d_extended(alpha, axis, blk);
                    } catch (const DegenerateFan&) {
                        continue;
                    }
                    double dev = std::max(m.grad_dev_forward(), m.grad_dev_inverse());
                    worst = std::max(worst, dev / std::abs(alpha - 0.5));
                }
            }
        }
        return worst * 1.0000001; // guard the grid maximum by one part in 1e7
    }();
    return cached;
}

} // namespace rectify
