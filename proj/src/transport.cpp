#include "rectify/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "rectify/rng.hpp"

namespace rectify {

namespace {
int exact_log2(int n) {
    int k = 0;
    while ((1 << k) < n) ++k;
    if ((1 << k) != n) throw InvalidParam("cell count is not a power of two");
    return k;
}
} // namespace

const AffinePiece* ComposedMap::Sweep::locate_src(Vec2 p) const {
    int bx = std::clamp((int)std::floor((p.x - lox) / bw), 0, nbx - 1);
    int by = std::clamp((int)std::floor((p.y - loy) / bh), 0, nby - 1);
    size_t blk = (size_t)by * nbx + bx;
    if (is_identity[blk]) return nullptr;
    for (double tol : {1e-12, 1e-9, 1e-6}) {
        for (const AffinePiece& ap : by_block[blk])
            if (ap.contains_source(p, tol)) return &ap;
    }
    return nullptr;
}

const AffinePiece* ComposedMap::Sweep::locate_tgt(Vec2 p) const {
    int bx = std::clamp((int)std::floor((p.x - lox) / bw), 0, nbx - 1);
    int by = std::clamp((int)std::floor((p.y - loy) / bh), 0, nby - 1);
    size_t blk = (size_t)by * nbx + bx;
    if (is_identity[blk]) return nullptr;
    for (double tol : {1e-12, 1e-9, 1e-6}) {
        for (const AffinePiece& ap : by_block[blk])
            if (ap.contains_target(p, tol)) return &ap;
    }
    return nullptr;
}

ComposedMap compose(const DyadicField& f, int m, MapMode mode, double rho_scale) {
    int d = f.dim();
    if (mode == MapMode::Exact1D && d != 1) throw InvalidParam("Exact1D needs a 1-d field");
    if (mode == MapMode::Exact2D && d != 2) throw InvalidParam("Exact2D needs a 2-d field");
    if (!(rho_scale > 0)) throw InvalidParam("rho scale must be positive");

    int n = f.cells(0);
    for (int a = 1; a < d; ++a)
        if (f.cells(a) != n) throw InvalidParam("transport needs a square cell grid");
    double ext = f.window().extent(0);
    for (int a = 1; a < d; ++a)
        if (std::abs(f.window().extent(a) - ext) > 1e-9)
            throw InvalidParam("transport needs a cube window");
    int kmax = exact_log2(n);
    if (m < 0 || m > kmax) throw InvalidParam("depth out of range");

    ComposedMap cm;
    cm.mode_ = mode;
    cm.d_ = d;
    cm.m_ = m;
    cm.window_ = f.window();
    cm.field_ = f;
    cm.out_scale_ = std::pow(rho_scale, 1.0 / d);

    if (mode == MapMode::VolumeOnly) return cm;

    double h = ext / n;
    double lox = f.window().lo[0], loy = f.window().lo[1];

    if (d == 1) {
        for (int k = 1; k <= m; ++k) {
            int L = 1 << k;
            double P = L * h;
            int nparents = n / L;
            Interval1DMap st;
            st.breaks.push_back(lox);
            st.values.push_back(lox);
            for (int i = 0; i < nparents; ++i) {
                Box parent, left;
                parent.d = 1;
                parent.lo[0] = lox + i * P;
                parent.hi[0] = lox + (i + 1) * P;
                left = parent;
                left.hi[0] = parent.lo[0] + P / 2;
                double alpha = f.mass(left) / f.mass(parent);
                cm.ratios_.push_back({k, 0, alpha});
                st.breaks.push_back(parent.lo[0] + P / 2);
                st.values.push_back(parent.lo[0] + alpha * P);
                st.breaks.push_back(parent.hi[0]);
                st.values.push_back(parent.hi[0]);
            }
            cm.stages1d_.push_back(std::move(st));
        }
        return cm;
    }

    // d == 2
    for (int k = 1; k <= m; ++k) {
        int L = 1 << k;
        double P = L * h;
        int nparents = n / L;
        ComposedMap::Stage stage;

        ComposedMap::Sweep sx;
        sx.axis = 0;
        sx.lox = lox;
        sx.loy = loy;
        sx.bw = P;
        sx.bh = P / 2;
        sx.nbx = nparents;
        sx.nby = nparents * 2;
        sx.by_block.resize((size_t)sx.nbx * sx.nby);
        sx.is_identity.assign((size_t)sx.nbx * sx.nby, 0);
        for (int i = 0; i < nparents; ++i)
            for (int j = 0; j < nparents; ++j)
                for (int r = 0; r < 2; ++r) {
                    Box blk;
                    blk.d = 2;
                    blk.lo[0] = lox + i * P;
                    blk.hi[0] = lox + (i + 1) * P;
                    blk.lo[1] = loy + j * P + r * P / 2;
                    blk.hi[1] = blk.lo[1] + P / 2;
                    Box left = blk;
                    left.hi[0] = blk.lo[0] + P / 2;
                    double alpha = f.mass(left) / f.mass(blk);
                    cm.ratios_.push_back({k, 0, alpha});
                    size_t at = (size_t)(2 * j + r) * sx.nbx + i;
                    if (alpha == 0.5) {
                        sx.is_identity[at] = 1;
                        continue;
                    }
                    sx.by_block[at] = box_map_2d_extended(alpha, 0, &blk).pieces;
                }
        stage.sweeps.push_back(std::move(sx));

        ComposedMap::Sweep sy;
        sy.axis = 1;
        sy.lox = lox;
        sy.loy = loy;
        sy.bw = P;
        sy.bh = P;
        sy.nbx = nparents;
        sy.nby = nparents;
        sy.by_block.resize((size_t)sy.nbx * sy.nby);
        sy.is_identity.assign((size_t)sy.nbx * sy.nby, 0);
        for (int i = 0; i < nparents; ++i)
            for (int j = 0; j < nparents; ++j) {
                Box blk;
                blk.d = 2;
                blk.lo[0] = lox + i * P;
                blk.hi[0] = lox + (i + 1) * P;
                blk.lo[1] = loy + j * P;
                blk.hi[1] = loy + (j + 1) * P;
                Box bottom = blk;
                bottom.hi[1] = blk.lo[1] + P / 2;
                double alpha = f.mass(bottom) / f.mass(blk);
                cm.ratios_.push_back({k, 1, alpha});
                size_t at = (size_t)j * sy.nbx + i;
                if (alpha == 0.5) {
                    sy.is_identity[at] = 1;
                    continue;
                }
                sy.by_block[at] = box_map_2d_extended(alpha, 1, &blk).pieces;
            }
        stage.sweeps.push_back(std::move(sy));
        cm.stages_.push_back(std::move(stage));
    }
    return cm;
}

Vec2 ComposedMap::eval2(Vec2 p) const {
    for (const Stage& st : stages_)
        for (const Sweep& sw : st.sweeps) {
            const AffinePiece* ap = sw.locate_src(p);
            if (ap) p = ap->forward(p);
        }
    return p;
}

Vec2 ComposedMap::eval2_inv(Vec2 p) const {
    for (auto st = stages_.rbegin(); st != stages_.rend(); ++st)
        for (auto sw = st->sweeps.rbegin(); sw != st->sweeps.rend(); ++sw) {
            const AffinePiece* ap = sw->locate_tgt(p);
            if (ap) p = ap->backward(p);
        }
    return p;
}

std::array<double, 3> ComposedMap::eval(const std::array<double, 3>& p) const {
    if (mode_ == MapMode::VolumeOnly)
        throw InvalidParam("pointwise evaluation unavailable in VolumeOnly mode");
    for (int a = 0; a < d_; ++a)
        if (p[a] < window_.lo[a] - 1e-9 || p[a] > window_.hi[a] + 1e-9)
            throw OutOfWindow("point outside the map window");
    if (d_ == 1) {
        double x = p[0];
        for (const auto& st : stages1d_) x = st.eval(x);
        return {x * out_scale_, 0, 0};
    }
    Vec2 q = eval2({p[0], p[1]});
    return {q.x * out_scale_, q.y * out_scale_, 0};
}

std::array<double, 3> ComposedMap::eval_inv(const std::array<double, 3>& p) const {
    if (mode_ == MapMode::VolumeOnly)
        throw InvalidParam("pointwise evaluation unavailable in VolumeOnly mode");
    if (d_ == 1) {
        double x = p[0] / out_scale_;
        for (auto st = stages1d_.rbegin(); st != stages1d_.rend(); ++st) x = st->eval_inv(x);
        return {x, 0, 0};
    }
    Vec2 q = eval2_inv({p[0] / out_scale_, p[1] / out_scale_});
    return {q.x, q.y, 0};
}

double ComposedMap::ledger_volume(const Box& c) const {
    double scale = std::pow(out_scale_, d_);
    return field_.mass(c) / field_.mean() * scale;
}

double ComposedMap::image_volume(const Box& c) const {
    double scale = std::pow(out_scale_, d_);
    if (mode_ == MapMode::VolumeOnly) return ledger_volume(c);
    if (d_ == 1) {
        double a = c.lo[0], b = c.hi[0];
        for (const auto& st : stages1d_) {
            a = st.eval(a);
            b = st.eval(b);
        }
        return (b - a) * scale;
    }
    std::vector<Poly> polys;
    Poly rect;
    rect.pts = {{c.lo[0], c.lo[1]}, {c.hi[0], c.lo[1]}, {c.hi[0], c.hi[1]}, {c.lo[0], c.hi[1]}};
    polys.push_back(rect);

    for (const Stage& st : stages_)
        for (const Sweep& sw : st.sweeps) {
            std::vector<Poly> next;
            for (const Poly& poly : polys) {
                double mnx = 1e300, mxx = -1e300, mny = 1e300, mxy = -1e300;
                for (const Vec2& v : poly.pts) {
                    mnx = std::min(mnx, v.x);
                    mxx = std::max(mxx, v.x);
                    mny = std::min(mny, v.y);
                    mxy = std::max(mxy, v.y);
                }
                int bx0 = std::clamp((int)std::floor((mnx - sw.lox) / sw.bw), 0, sw.nbx - 1);
                int bx1 = std::clamp((int)std::floor((mxx - sw.lox) / sw.bw - 1e-12), 0,
                                     sw.nbx - 1);
                int by0 = std::clamp((int)std::floor((mny - sw.loy) / sw.bh), 0, sw.nby - 1);
                int by1 = std::clamp((int)std::floor((mxy - sw.loy) / sw.bh - 1e-12), 0,
                                     sw.nby - 1);
                for (int by = by0; by <= by1; ++by)
                    for (int bx = bx0; bx <= bx1; ++bx) {
                        size_t blk = (size_t)by * sw.nbx + bx;
                        Vec2 blo{sw.lox + bx * sw.bw, sw.loy + by * sw.bh};
                        Vec2 bhi{blo.x + sw.bw, blo.y + sw.bh};
                        if (sw.is_identity[blk]) {
                            Poly cl = clip_halfplane(poly, blo, {bhi.x, blo.y});
                            cl = clip_halfplane(cl, {bhi.x, blo.y}, bhi);
                            cl = clip_halfplane(cl, bhi, {blo.x, bhi.y});
                            cl = clip_halfplane(cl, {blo.x, bhi.y}, blo);
                            if (cl.pts.size() >= 3 && std::abs(cl.area()) > 1e-18)
                                next.push_back(std::move(cl));
                            continue;
                        }
                        for (const AffinePiece& ap : sw.by_block[blk]) {
                            Poly cl = clip_triangle(poly, ap.s0, ap.s1, ap.s2);
                            if (cl.pts.size() < 3 || std::abs(cl.area()) < 1e-18) continue;
                            for (Vec2& v : cl.pts) v = ap.forward(v);
                            next.push_back(std::move(cl));
                        }
                    }
            }
            polys = std::move(next);
        }
    double s = 0;
    for (const Poly& p : polys) s += p.area();
    return s * scale;
}

GradProfile ComposedMap::grad_profile() const {
    if (mode_ == MapMode::VolumeOnly)
        throw InvalidParam("gradient profile unavailable in VolumeOnly mode");
    GradProfile g;
    if (d_ == 1) {
        for (const auto& st : stages1d_) {
            double fwd = 1, inv = 1;
            for (double s : st.slopes()) {
                fwd = std::max(fwd, s);
                inv = std::max(inv, 1.0 / s);
            }
            g.stage_forward.push_back(fwd);
            g.stage_inverse.push_back(inv);
            g.total_forward *= fwd;
            g.total_inverse *= inv;
        }
        return g;
    }
    for (const Stage& st : stages_) {
        double fwd = 1, inv = 1;
        for (const Sweep& sw : st.sweeps) {
            double sf = 1, si = 1;
            for (const auto& blockPieces : sw.by_block)
                for (const AffinePiece& ap : blockPieces) {
                    double smax = sigma_max(ap.lin);
                    double smin = std::abs(ap.det) / smax;
                    sf = std::max(sf, smax);
                    si = std::max(si, 1.0 / smin);
                }
            fwd *= sf;
            inv *= si;
        }
        g.stage_forward.push_back(fwd);
        g.stage_inverse.push_back(inv);
        g.total_forward *= fwd;
        g.total_inverse *= inv;
    }
    return g;
}

ModulusEstimate ComposedMap::empirical_modulus(const Modulus& omega, int n_pairs,
                                               uint64_t seed) const {
    if (n_pairs < 1) throw InvalidParam("need at least one pair");
    Rng rng(seed);
    double R = window_.extent(0);
    double dmax = R * omega.domain_hi() * (1 - 1e-12);
    ModulusEstimate est;
    auto sample_point = [&]() {
        std::array<double, 3> p{0, 0, 0};
        for (int a = 0; a < d_; ++a) p[a] = rng.uniform(window_.lo[a], window_.hi[a]);
        return p;
    };
    auto distance = [&](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        double s = 0;
        for (int i = 0; i < d_; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    };
    for (int i = 0; i < n_pairs; ++i) {
        std::array<double, 3> x, y;
        double dist = 0;
        do {
            x = sample_point();
            y = sample_point();
            dist = distance(x, y);
        } while (!(dist > 0 && dist < dmax));
        double denom = R * omega.eval(dist / R);
        // forward (unscaled window bijection)
        std::array<double, 3> ux, uy;
        if (d_ == 1) {
            double ax = x[0], ay = y[0];
            for (const auto& st : stages1d_) {
                ax = st.eval(ax);
                ay = st.eval(ay);
            }
            ux = {ax, 0, 0};
            uy = {ay, 0, 0};
        } else {
            Vec2 a = eval2({x[0], x[1]}), b = eval2({y[0], y[1]});
            ux = {a.x, a.y, 0};
            uy = {b.x, b.y, 0};
        }
        est.forward = std::max(est.forward, distance(ux, uy) / denom);
        // inverse
        if (d_ == 1) {
            double ax = x[0], ay = y[0];
            for (auto st = stages1d_.rbegin(); st != stages1d_.rend(); ++st) {
                ax = st->eval_inv(ax);
                ay = st->eval_inv(ay);
            }
            ux = {ax, 0, 0};
            uy = {ay, 0, 0};
        } else {
            Vec2 a = eval2_inv({x[0], x[1]}), b = eval2_inv({y[0], y[1]});
            ux = {a.x, a.y, 0};
            uy = {b.x, b.y, 0};
        }
        est.inverse = std::max(est.inverse, distance(ux, uy) / denom);
        ++est.pairs_used;
    }
    return est;
}

std::string ComposedMap::to_json() const {
    nlohmann::json j;
    j["schema"] = "rectify/composed-map/v1";
    j["mode"] = mode_ == MapMode::Exact1D    ? "exact1d"
                : mode_ == MapMode::Exact2D ? "exact2d"
                                            : "volume";
    j["d"] = d_;
    j["depth"] = m_;
    j["output_scale"] = out_scale_;
    j["window"] = {{"lo", std::vector<double>(window_.lo.begin(), window_.lo.begin() + d_)},
                   {"hi", std::vector<double>(window_.hi.begin(), window_.hi.begin() + d_)}};
    nlohmann::json ratios = nlohmann::json::array();
    for (const auto& r : ratios_)
        ratios.push_back({{"stage", r.stage}, {"axis", r.axis}, {"alpha", r.alpha}});
    j["sweep_ratios"] = ratios;
    if (d_ == 1) {
        nlohmann::json st = nlohmann::json::array();
        for (const auto& s : stages1d_) st.push_back({{"breaks", s.breaks}, {"values", s.values}});
        j["stages"] = st;
    } else if (mode_ == MapMode::Exact2D) {
        nlohmann::json st = nlohmann::json::array();
        for (const auto& s : stages_) {
            nlohmann::json sweeps = nlohmann::json::array();
            for (const auto& sw : s.sweeps) {
                nlohmann::json pieces = nlohmann::json::array();
                for (const auto& blockPieces : sw.by_block)
                    for (const AffinePiece& ap : blockPieces)
                        pieces.push_back({{"src", {ap.s0.x, ap.s0.y, ap.s1.x, ap.s1.y, ap.s2.x,
                                                   ap.s2.y}},
                                          {"dst", {ap.t0.x, ap.t0.y, ap.t1.x, ap.t1.y, ap.t2.x,
                                                   ap.t2.y}}});
                sweeps.push_back({{"axis", sw.axis}, {"triangles", pieces}});
            }
            st.push_back(sweeps);
        }
        j["stages"] = st;
    }
    return j.dump();
}

std::string ComposedMap::to_svg(int grid) const {
    if (d_ != 2) throw InvalidParam("svg output needs a 2-d map");
    const int samples = 8;
    double ext = window_.extent(0);
    double sz = 640;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << sz << "\" height=\"" << sz
       << "\" viewBox=\"0 0 " << sz << " " << sz << "\" data-depth=\"" << m_
       << "\" data-stages=\"" << stages_.size() << "\">\n";
    os << "<rect width=\"" << sz << "\" height=\"" << sz << "\" fill=\"white\"/>\n";
    auto emit_line = [&](bool horizontal, int g) {
        os << "<polyline fill=\"none\" stroke=\"#334\" stroke-width=\"1\" points=\"";
        int total = grid * samples;
        for (int s = 0; s <= total; ++s) {
            double t = (double)s / total;
            double gx = horizontal ? t : (double)g / grid;
            double gy = horizontal ? (double)g / grid : t;
            Vec2 p = eval2({window_.lo[0] + gx * ext, window_.lo[1] + gy * ext});
            double px = (p.x - window_.lo[0]) / ext * sz;
            double py = sz - (p.y - window_.lo[1]) / ext * sz;
            os << px << "," << py << " ";
        }
        os << "\"/>\n";
    };
    for (int g = 0; g <= grid; ++g) {
        emit_line(true, g);
        emit_line(false, g);
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace rectify
