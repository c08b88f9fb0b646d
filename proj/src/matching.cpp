#include "rectify/matching.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rectify/rng.hpp"

namespace rectify {

namespace {

double dist(const Point& a, const Point& b, int d) {
    double s = 0;
    for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// left = window points, right = lattice points, adjacency by index
struct Bipartite {
    int nl = 0, nr = 0;
    std::vector<std::vector<int>> adj;
    std::vector<int> match_l, match_r;

    int solve() {
        match_l.assign((size_t)nl, -1);
        match_r.assign((size_t)nr, -1);
        int matched = 0;
        for (;;) {
            // BFS layering from free left vertices
            std::vector<int> depth((size_t)nl, -1);
            std::queue<int> q;
            for (int u = 0; u < nl; ++u)
                if (match_l[(size_t)u] < 0) {
                    depth[(size_t)u] = 0;
                    q.push(u);
                }
            bool reachable_free = false;
            while (!q.empty()) {
                int u = q.front();
                q.pop();
                for (int v : adj[(size_t)u]) {
                    int w = match_r[(size_t)v];
                    if (w < 0)
                        reachable_free = true;
                    else if (depth[(size_t)w] < 0) {
                        depth[(size_t)w] = depth[(size_t)u] + 1;
                        q.push(w);
                    }
                }
            }
            if (!reachable_free) break;
            // layered DFS augmentation
            std::vector<char> used((size_t)nl, 0);
            std::function<bool(int)> dfs = [&](int u) -> bool {
                used[(size_t)u] = 1;
                for (int v : adj[(size_t)u]) {
                    int w = match_r[(size_t)v];
                    if (w < 0 || (!used[(size_t)w] && depth[(size_t)w] == depth[(size_t)u] + 1 &&
                                  dfs(w))) {
                        match_l[(size_t)u] = v;
                        match_r[(size_t)v] = u;
                        return true;
                    }
                }
                return false;
            };
            int found = 0;
            for (int u = 0; u < nl; ++u)
                if (match_l[(size_t)u] < 0 && dfs(u)) ++found;
            if (found == 0) break;
            matched += found;
        }
        return matched;
    }

    // Hall violator from the final residual: left vertices reachable from
    // free left vertices by alternating paths.
    std::pair<std::vector<int>, std::vector<int>> violator() const {
        std::vector<char> seen_l((size_t)nl, 0), seen_r((size_t)nr, 0);
        std::queue<int> q;
        for (int u = 0; u < nl; ++u)
            if (match_l[(size_t)u] < 0) {
                seen_l[(size_t)u] = 1;
                q.push(u);
            }
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[(size_t)u]) {
                if (seen_r[(size_t)v]) continue;
                seen_r[(size_t)v] = 1;
                int w = match_r[(size_t)v];
                if (w >= 0 && !seen_l[(size_t)w]) {
                    seen_l[(size_t)w] = 1;
                    q.push(w);
                }
            }
        }
        std::vector<int> s, ns;
        for (int u = 0; u < nl; ++u)
            if (seen_l[(size_t)u]) s.push_back(u);
        for (int v = 0; v < nr; ++v)
            if (seen_r[(size_t)v]) ns.push_back(v);
        return {s, ns};
    }
};

struct Instance {
    std::vector<int> left;                            // indices into x.points()
    std::vector<std::array<long long, 3>> lattice;    // halo lattice points
    std::map<std::array<long long, 3>, int> lattice_id;

    int id_of(const std::array<long long, 3>& z) {
        auto it = lattice_id.find(z);
        if (it != lattice_id.end()) return it->second;
        int id = (int)lattice.size();
        lattice.push_back(z);
        lattice_id.emplace(z, id);
        return id;
    }
};

bool in_halfopen_window(const Point& p, const IntegerCube& w, int d) {
    for (int a = 0; a < d; ++a)
        if (p[a] < (double)w.corner[a] || p[a] >= (double)(w.corner[a] + w.side)) return false;
    return true;
}

Instance make_instance(const PointSet& x, const IntegerCube& w) {
    Instance inst;
    for (int i = 0; i < (int)x.points().size(); ++i)
        if (in_halfopen_window(x.points()[(size_t)i], w, x.dim())) inst.left.push_back(i);
    return inst;
}

long long halo_width(const PointSet& x) { return (long long)std::ceil(x.covering()) + 1; }

// lattice points of the halo within distance r of p
void lattice_near(const PointSet& x, const IntegerCube& w, const Point& p, double r,
                  Instance& inst, std::vector<int>& out) {
    int d = x.dim();
    long long halo = halo_width(x);
    std::array<long long, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < d; ++a) {
        lo[a] = std::max(w.corner[a] - halo, (long long)std::ceil(p[a] - r));
        hi[a] = std::min(w.corner[a] + w.side + halo, (long long)std::floor(p[a] + r));
    }
    std::array<long long, 3> z{0, 0, 0};
    for (z[0] = lo[0]; z[0] <= hi[0]; ++z[0])
        for (z[1] = (d > 1 ? lo[1] : 0); z[1] <= (d > 1 ? hi[1] : 0); ++z[1])
            for (z[2] = (d > 2 ? lo[2] : 0); z[2] <= (d > 2 ? hi[2] : 0); ++z[2]) {
                Point q{(double)z[0], (double)z[1], (double)z[2]};
                if (dist(p, q, d) <= r + 1e-12) out.push_back(inst.id_of(z));
            }
}

Matching matching_from(const PointSet& x, const IntegerCube& w, const Instance& inst,
                       const Bipartite& bp, const std::string& via) {
    Matching m;
    m.d = x.dim();
    m.window = w;
    m.via = via;
    for (size_t u = 0; u < inst.left.size(); ++u) {
        int v = bp.match_l[u];
        const Point& p = x.points()[(size_t)inst.left[u]];
        m.sources.push_back(p);
        m.targets.push_back(inst.lattice[(size_t)v]);
        Point q{(double)inst.lattice[(size_t)v][0], (double)inst.lattice[(size_t)v][1],
                (double)inst.lattice[(size_t)v][2]};
        m.radius = std::max(m.radius, dist(p, q, x.dim()));
    }
    return m;
}

} // namespace

MatchOutcome hall_match(const PointSet& x, const IntegerCube& w, double r) {
    if (!(r >= 0)) throw InvalidParam("radius must be >= 0");
    Instance inst = make_instance(x, w);
    Bipartite bp;
    bp.nl = (int)inst.left.size();
    bp.adj.resize((size_t)bp.nl);
    for (size_t u = 0; u < inst.left.size(); ++u)
        lattice_near(x, w, x.points()[(size_t)inst.left[u]], r, inst, bp.adj[u]);
    bp.nr = (int)inst.lattice.size();
    int matched = bp.solve();
    if (matched == bp.nl) return matching_from(x, w, inst, bp, "hall");
    auto [s, ns] = bp.violator();
    DeficiencyWitness dw;
    for (int u : s) dw.set.push_back(x.points()[(size_t)inst.left[(size_t)u]]);
    dw.neighborhood = (long long)ns.size();
    return dw;
}

std::pair<double, Matching> min_radius(const PointSet& x, const IntegerCube& w) {
    Instance inst = make_instance(x, w);
    int d = x.dim();
    double cap = x.covering() + 2 * std::sqrt((double)d) + 2;
    for (int attempt = 0; attempt < 4; ++attempt) {
        // candidate radii: all realized point-to-lattice distances below cap
        std::set<double> cand_set;
        long long halo = halo_width(x);
        for (int i : inst.left) {
            const Point& p = x.points()[(size_t)i];
            std::array<long long, 3> lo{0, 0, 0}, hi{0, 0, 0};
            for (int a = 0; a < d; ++a) {
                lo[a] = std::max(w.corner[a] - halo, (long long)std::ceil(p[a] - cap));
                hi[a] = std::min(w.corner[a] + w.side + halo, (long long)std::floor(p[a] + cap));
            }
            std::array<long long, 3> z{0, 0, 0};
            for (z[0] = lo[0]; z[0] <= hi[0]; ++z[0])
                for (z[1] = (d > 1 ? lo[1] : 0); z[1] <= (d > 1 ? hi[1] : 0); ++z[1])
                    for (z[2] = (d > 2 ? lo[2] : 0); z[2] <= (d > 2 ? hi[2] : 0); ++z[2]) {
                        Point q{(double)z[0], (double)z[1], (double)z[2]};
                        double dd = dist(p, q, d);
                        if (dd <= cap) cand_set.insert(dd);
                    }
        }
        std::vector<double> cand(cand_set.begin(), cand_set.end());
        if (cand.empty()) {
            cap *= 2;
            continue;
        }
        auto feasible = [&](double r) {
            MatchOutcome out = hall_match(x, w, r);
            return std::holds_alternative<Matching>(out);
        };
        if (!feasible(cand.back())) {
            cap *= 2;
            continue;
        }
        size_t lo_i = 0, hi_i = cand.size() - 1;
        if (feasible(cand[0])) hi_i = 0;
        while (lo_i < hi_i) {
            size_t mid = (lo_i + hi_i) / 2;
            if (feasible(cand[mid]))
                hi_i = mid;
            else
                lo_i = mid + 1;
        }
        MatchOutcome out = hall_match(x, w, cand[hi_i]);
        Matching m = std::get<Matching>(out);
        m.via = "min-radius";
        return {cand[hi_i], std::move(m)};
    }
    throw Infeasible("no perfect matching within the candidate radius cap");
}

Matching transport_match(const PointSet& x, const ComposedMap& u) {
    if (u.mode() == MapMode::VolumeOnly)
        throw InvalidParam("transport matching needs an exact map mode");
    IntegerCube w;
    w.d = x.dim();
    w.corner = x.window_lo();
    w.side = x.window_hi()[0] - x.window_lo()[0];
    Instance inst = make_instance(x, w);
    int d = x.dim();
    double reach = 2 * std::sqrt((double)d);

    Bipartite bp;
    bp.nl = (int)inst.left.size();
    bp.adj.resize((size_t)bp.nl);
    for (size_t i = 0; i < inst.left.size(); ++i) {
        const Point& p = x.points()[(size_t)inst.left[i]];
        std::array<double, 3> img = u.eval(p);
        std::array<long long, 3> lo{0, 0, 0}, hi{0, 0, 0};
        long long halo = halo_width(x);
        for (int a = 0; a < d; ++a) {
            lo[a] = std::max(w.corner[a] - halo, (long long)std::ceil(img[a] - reach));
            hi[a] = std::min(w.corner[a] + w.side + halo, (long long)std::floor(img[a] + reach));
        }
        std::array<long long, 3> z{0, 0, 0};
        Point ip{img[0], img[1], img[2]};
        for (z[0] = lo[0]; z[0] <= hi[0]; ++z[0])
            for (z[1] = (d > 1 ? lo[1] : 0); z[1] <= (d > 1 ? hi[1] : 0); ++z[1])
                for (z[2] = (d > 2 ? lo[2] : 0); z[2] <= (d > 2 ? hi[2] : 0); ++z[2]) {
                    Point q{(double)z[0], (double)z[1], (double)z[2]};
                    if (dist(ip, q, d) <= reach + 1e-12) bp.adj[i].push_back(inst.id_of(z));
                }
    }
    bp.nr = (int)inst.lattice.size();
    int matched = bp.solve();
    if (matched == bp.nl) {
        Matching m = matching_from(x, w, inst, bp, "transport");
        return m;
    }
    auto [r, m] = min_radius(x, w);
    (void)r;
    m.via = "transport-fallback";
    return m;
}

std::string Matching::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    for (int a = 0; a < d; ++a) os << "x" << a + 1 << ",";
    for (int a = 0; a < d; ++a) os << "z" << a + 1 << (a + 1 < d ? "," : "\n");
    for (size_t i = 0; i < sources.size(); ++i) {
        for (int a = 0; a < d; ++a) os << sources[i][a] << ",";
        for (int a = 0; a < d; ++a) os << targets[i][a] << (a + 1 < d ? "," : "\n");
    }
    return os.str();
}

Matching Matching::from_csv(const std::string& text, int d) {
    Matching m;
    m.d = d;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        Point p{0, 0, 0};
        std::array<long long, 3> z{0, 0, 0};
        for (int a = 0; a < d; ++a) row >> p[a];
        for (int a = 0; a < d; ++a) row >> z[a];
        if (!row) throw InvalidParam("bad matching row: " + line);
        m.sources.push_back(p);
        m.targets.push_back(z);
        Point q{(double)z[0], (double)z[1], (double)z[2]};
        m.radius = std::max(m.radius, dist(p, q, d));
    }
    return m;
}

std::string DistortionReport::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "rectify/distortion/v1";
    j["omega"] = omega;
    j["c_forward"] = c_forward;
    j["c_backward"] = c_backward;
    j["radii"] = radii;
    j["n_pairs"] = n_pairs;
    j["seed"] = seed;
    j["label"] = label;
    return j.dump();
}

DistortionReport bi_omega_distortion(const Matching& f, const Modulus& omega,
                                     const std::vector<double>& radii, int n_pairs,
                                     uint64_t seed) {
    if (f.sources.empty()) throw InvalidParam("empty matching");
    DistortionReport rep;
    rep.omega = omega.describe();
    rep.radii = radii;
    rep.n_pairs = n_pairs;
    rep.seed = seed;
    int d = f.d;

    Point center{0, 0, 0};
    for (const Point& p : f.sources)
        for (int a = 0; a < d; ++a) center[a] += p[a] / (double)f.sources.size();

    Rng rng(seed);
    for (double r : radii) {
        if (!(r > 0)) throw InvalidParam("radii must be positive");
        std::vector<int> in_ball_src, in_ball_tgt;
        for (int i = 0; i < (int)f.sources.size(); ++i) {
            if (dist(f.sources[(size_t)i], center, d) <= r) in_ball_src.push_back(i);
            Point q{(double)f.targets[(size_t)i][0], (double)f.targets[(size_t)i][1],
                    (double)f.targets[(size_t)i][2]};
            if (dist(q, center, d) <= r) in_ball_tgt.push_back(i);
        }
        double dmax = r * omega.domain_hi() * (1 - 1e-12);
        auto sample = [&](const std::vector<int>& pool, bool forward) {
            if (pool.size() < 2) return;
            for (int k = 0; k < n_pairs; ++k) {
                int i = pool[(size_t)rng.below(pool.size())];
                int j = pool[(size_t)rng.below(pool.size())];
                if (i == j) continue;
                Point a = f.sources[(size_t)i], b = f.sources[(size_t)j];
                Point za{(double)f.targets[(size_t)i][0], (double)f.targets[(size_t)i][1],
                         (double)f.targets[(size_t)i][2]};
                Point zb{(double)f.targets[(size_t)j][0], (double)f.targets[(size_t)j][1],
                         (double)f.targets[(size_t)j][2]};
                const Point &pa = forward ? a : za, &pb = forward ? b : zb;
                const Point &qa = forward ? za : a, &qb = forward ? zb : b;
                double sep = dist(pa, pb, d);
                if (!(sep > 0 && sep < dmax)) continue;
                double ratio = dist(qa, qb, d) / (r * omega.eval(sep / r));
                if (forward)
                    rep.c_forward = std::max(rep.c_forward, ratio);
                else
                    rep.c_backward = std::max(rep.c_backward, ratio);
            }
        };
        sample(in_ball_src, true);
        sample(in_ball_tgt, false);
    }
    return rep;
}

} // namespace rectify
