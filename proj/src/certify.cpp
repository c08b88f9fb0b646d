#include "rectify/certify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "rectify/transport.hpp"

namespace rectify {

namespace {
constexpr double kLn2 = 0.6931471805599453;

double binom(int n, int k) {
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}
} // namespace

std::string verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "Pass";
    case Verdict::Fail: return "Fail";
    default: return "Inconclusive";
    }
}

double Certificate::get(const std::string& name) const {
    for (const auto& [k, v] : constants)
        if (k == name) return v;
    throw InvalidParam("certificate has no constant " + name);
}

std::string Certificate::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "rectify/certificate/v1";
    j["kind"] = kind;
    j["verdict"] = verdict_name(verdict);
    nlohmann::ordered_json cs;
    for (const auto& [k, v] : constants) cs[k] = v;
    j["constants"] = cs;
    j["inputs_hash"] = inputs_hash;
    return j.dump();
}

std::string inputs_hash(const std::string& canonical) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::pair<double, double> alpha_bounds(double e) {
    if (!(e >= 1)) throw InvalidParam("deviation must be >= 1");
    return {1.0 / (2.0 * e * e), e * e / 2.0};
}

double grad_bound(const std::vector<double>& es, int d, double c_eta, int i0) {
    if (i0 < 1) throw InvalidParam("i0 must be >= 1");
    if (!(c_eta > 0)) throw InvalidParam("c_eta must be positive");
    double prod = 1;
    for (size_t idx = (size_t)i0 - 1; idx < es.size(); ++idx) {
        double e = es[idx];
        if (!(e >= 1)) throw InvalidParam("deviations must be >= 1");
        double x = 0.5 * c_eta * (e * e - 1.0 / (e * e));
        prod *= std::pow(1.0 + x, d);
    }
    return prod;
}

Certificate deviation_series_certificate(const std::vector<double>& es, const Modulus& omega,
                                         const CertifyParams& params, int d) {
    if (es.empty()) throw InvalidParam("empty deviation profile");
    if (!(params.alpha_exp > 0 && params.alpha_exp <= 1))
        throw InvalidParam("series exponent must lie in (0,1]");
    int m = (int)es.size();
    double c_eta = params.c_eta > 0 ? params.c_eta : calibrated_c_eta();
    double alpha = params.alpha_exp;

    Certificate cert;
    cert.kind = "deviation-series";
    {
        std::ostringstream os;
        os.precision(17);
        os << omega.describe() << "|d=" << d << "|a=" << alpha << "|ce=" << c_eta;
        for (double e : es) os << "," << e;
        cert.inputs_hash = inputs_hash(os.str());
    }

    // gate constant and the x-sequence feeding the product bound
    double k_hat = 0;
    std::vector<double> xs(es.size());
    for (int i = 1; i <= m; ++i) {
        double e = es[(size_t)i - 1];
        if (!(e >= 1)) throw InvalidParam("deviations must be >= 1");
        k_hat = std::max(k_hat, (1.0 + i) * (e - 1.0));
        xs[(size_t)i - 1] = 0.5 * c_eta * (e * e - 1.0 / (e * e));
    }

    int i0 = params.i0;
    if (i0 <= 0) {
        i0 = -1;
        for (int i = 2; i <= m; ++i) {
            bool ok = true;
            for (int j = i; j <= m; ++j)
                if ((1.0 + j) * xs[(size_t)j - 1] > 1.0) {
                    ok = false;
                    break;
                }
            if (ok) {
                i0 = i;
                break;
            }
        }
    }
    bool gate_ok = i0 > 0;

    // series partial sums (terms start at i = 2 so omega stays in-domain)
    double s_all = 0;
    for (int i = 2; i <= m; ++i) {
        double t = std::ldexp(1.0, -(i - 1));
        double denom = std::pow(std::ldexp(1.0, i - 1) * omega.eval(t), 1.0 / d);
        s_all += std::pow(1.0 + i, alpha) * (es[(size_t)i - 1] - 1.0) / denom;
    }

    SeriesVerdict membership = series_membership(omega, d, std::max(8, m + 2));
    std::optional<double> tail;
    if (gate_ok && membership.status == SeriesStatus::Converges && membership.tail_bound)
        tail = k_hat * *membership.tail_bound;

    cert.verdict = !gate_ok ? Verdict::Inconclusive
                   : membership.status == SeriesStatus::Converges   ? Verdict::Pass
                   : membership.status == SeriesStatus::Diverges    ? Verdict::Fail
                                                                    : Verdict::Inconclusive;

    double n_bar = 1;
    for (double x : xs) n_bar *= std::pow(1.0 + x, d);

    int i0_eff = gate_ok ? std::max(i0, 2) : 2;
    double c1 = 1;
    for (int i = 1; i < i0_eff; ++i) c1 *= std::pow(1.0 + xs[(size_t)i - 1], d);
    double c_alpha = (double)(m + 2) / (double)(i0_eff + 1);

    double y = 0;
    for (int i = i0_eff; i <= m; ++i) {
        double t = std::ldexp(1.0, -(i - 1));
        double denom = std::pow(std::ldexp(1.0, i - 1) * omega.eval(t), 1.0 / d);
        y += std::pow(1.0 + i, alpha) * xs[(size_t)i - 1] / denom;
    }

    // homogeneity constants: series route (pair separations below 1) and the
    // direct route covering every admissible separation
    double psi = std::ldexp(1.0, m + 1) * omega.eval(std::ldexp(1.0, -(m + 1)));
    double c_series = 0;
    for (int k = 0; k <= d; ++k)
        c_series += binom(d, k) * std::pow(c_alpha * y, k) *
                    std::pow(psi, (double)(k - d) / (double)d);
    c_series *= 2.0 * c1;
    double t_star = omega.domain_hi();
    double c_direct = n_bar * t_star / omega.eval(t_star);
    double c_cert = std::max(c_series, c_direct);

    cert.put("c_eta", c_eta);
    cert.put("alpha_exp", alpha);
    cert.put("K_hat", k_hat);
    cert.put("gate_ok", gate_ok ? 1 : 0);
    cert.put("i0", i0_eff);
    cert.put("series_partial", s_all);
    cert.put("series_tail_bound", tail ? *tail : std::numeric_limits<double>::infinity());
    cert.put("C1", c1);
    cert.put("C_alpha", c_alpha);
    cert.put("N_bar", n_bar);
    cert.put("Y", y);
    cert.put("psi_next", psi);
    cert.put("C_series", c_series);
    cert.put("C_direct", c_direct);
    cert.put("C_cert", c_cert);
    return cert;
}

GatedProductCheck gated_product_check(const std::vector<double>& a, double alpha_exp) {
    if (!(alpha_exp > 0 && alpha_exp <= 1)) throw InvalidParam("exponent must lie in (0,1]");
    GatedProductCheck g;
    for (size_t idx = 0; idx < a.size(); ++idx) {
        int i = (int)idx + 1;
        if (!(a[idx] > 0) || a[idx] > 1.0 / (i + 1) + 1e-15)
            throw InvalidParam("sequence violates the 1/(i+1) gate");
        g.lhs *= 1.0 + a[idx];
        g.rhs_basis += std::pow(1.0 + i, alpha_exp) * a[idx];
    }
    g.c_needed = g.rhs_basis > 0 ? (g.lhs - 1.0) / g.rhs_basis : 0.0;
    return g;
}

double gated_product_constant(int m) { return (double)(m + 2) / 2.0; }

SummableProductCheck summable_product_check(const std::vector<double>& a) {
    SummableProductCheck r;
    for (double x : a) {
        if (!(x > 0)) throw InvalidParam("sequence must be strictly positive");
        r.total += x;
    }
    if (!(r.total > 0)) throw InvalidParam("empty sequence");
    r.constant = 2.0 * std::exp(r.total) / r.total;
    double partial = 0, lhs = 1;
    r.threshold_n = -1;
    r.holds_past_threshold = true;
    for (size_t n = 0; n < a.size(); ++n) {
        partial += a[n];
        lhs *= 1.0 + a[n];
        if (r.threshold_n < 0 && partial >= r.total / 2) r.threshold_n = (int)n + 1;
        if (r.threshold_n > 0) {
            double ratio = lhs / (r.constant * partial);
            r.worst_ratio = std::max(r.worst_ratio, ratio);
            if (ratio > 1.0) r.holds_past_threshold = false;
        }
    }
    return r;
}

LagariasResult lagarias_sequence(const LagariasParams& params, int j_max) {
    if (!(params.c1 > 0 && params.c1 < 1)) throw InvalidParam("c1 must lie in (0,1)");
    if (!(params.c5 > 2)) throw InvalidParam("C5 must exceed 2");
    if (!(params.u2 > std::exp(1.0))) throw InvalidParam("U2 must exceed e");
    if (!(params.p >= 0)) throw InvalidParam("p must be >= 0");
    if (params.d < 1) throw InvalidParam("dimension must be >= 1");

    LagariasResult r;
    double top = std::ldexp(1.0, j_max);
    r.u.push_back(params.u2);
    while (r.u.back() <= top) {
        double u = r.u.back();
        double next = params.c5 * u * std::pow(std::log(u), params.p);
        if (!std::isfinite(next) || next <= u) throw Error("recursion stalled");
        r.u.push_back(next);
        if (r.u.size() > 100000) throw Error("recursion too long");
    }

    r.j_lo = (int)std::ceil(std::log2(params.u2));
    double pd = params.p * params.d;
    int prev_mj = -1;
    for (int j = r.j_lo; j <= j_max; ++j) {
        double bound = std::ldexp(1.0, j);
        int mj = 0;
        for (size_t idx = 0; idx < r.u.size(); ++idx)
            if (r.u[idx] <= bound) mj = (int)idx + 2; // U indices start at 2
        r.m_j.push_back(mj);
        double b = 1;
        for (int k = 2; k <= mj; ++k) {
            double lg = std::log(r.u[(size_t)k - 2]);
            b *= 1.0 - params.c1 / std::pow(lg, pd);
        }
        r.b.push_back(b);
        double s = 0;
        for (int k = 2; k <= j - 1; ++k) s += std::pow((double)k, -pd);
        r.b_model.push_back(std::exp(-s));
        if (prev_mj >= 0 && mj - 1 != prev_mj)
            r.claim_shift_violations.push_back(j);
        prev_mj = mj;
    }
    return r;
}

DecayFit decay_fit(const std::vector<int>& js, const std::vector<double>& b, double p, int d) {
    if (js.size() != b.size() || js.size() < 3) throw InvalidParam("need >= 3 fit points");
    double pd = p * d;
    DecayFit fit;
    fit.model = (pd == 1.0) ? "power" : "stretched";
    std::vector<double> xs(js.size()), ys(js.size());
    for (size_t k = 0; k < js.size(); ++k) {
        double jm1 = js[k] - 1.0;
        if (!(jm1 > 0) || !(b[k] > 0)) throw InvalidParam("fit needs j > 1 and B > 0");
        xs[k] = (pd == 1.0) ? -std::log(jm1) : -std::pow(jm1, 1.0 - pd) / (1.0 - pd);
        ys[k] = std::log(b[k]);
    }
    double n = (double)xs.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
        sx += xs[k];
        sy += ys[k];
        sxx += xs[k] * xs[k];
        sxy += xs[k] * ys[k];
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) throw InvalidParam("degenerate regressor");
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0, ybar = sy / n;
    for (size_t k = 0; k < xs.size(); ++k) {
        double pred = fit.slope * xs[k] + fit.intercept;
        ss_res += (ys[k] - pred) * (ys[k] - pred);
        ss_tot += (ys[k] - ybar) * (ys[k] - ybar);
    }
    fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, double fa,
               double fm, double fb, double eps, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15 * eps)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, eps / 2, depth - 1) +
           simpson(f, m, b, fm, frm, fb, eps / 2, depth - 1);
}

double adaptive_quad(const std::function<double(double)>& f, double a, double b, double eps) {
    double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb))
        throw QuadratureFailure("integrand not finite on samples");
    return simpson(f, a, b, fa, fm, fb, eps, 40);
}

// exponents of omega as t^a (log 1/t)^b (loglog 1/t)^g near zero
struct OmegaExponents {
    double a = 1, b = 0, g = 0, scale = 1;
};

OmegaExponents omega_exponents(const Modulus& omega) {
    OmegaExponents e;
    switch (omega.family()) {
    case ModulusFamily::Lipschitz: e = {1, 0, 0, omega.scale()}; break;
    case ModulusFamily::Hoelder: e = {omega.param(), 0, 0, omega.scale()}; break;
    case ModulusFamily::LogPower: e = {1, omega.param(), 0, 1}; break;
    case ModulusFamily::LogLogPower: e = {1, 0, omega.param(), 1}; break;
    case ModulusFamily::IteratedLog: e = {1, 1, omega.param(), 1}; break;
    case ModulusFamily::Tabulated: throw InvalidParam("tabulated omega has no symbolic tail");
    }
    return e;
}

} // namespace

Certificate osc_certificate(const OscillationBound& phi, const Modulus& omega,
                            const OscCertifyOptions& opts) {
    double c_eta = opts.c_eta > 0 ? opts.c_eta : calibrated_c_eta();
    if (!(opts.inf_f > 0)) throw InvalidParam("inf f must be positive");

    Certificate cert;
    cert.kind = "oscillation-integral";
    {
        std::ostringstream os;
        os.precision(17);
        os << phi.phi.describe() << "|" << omega.describe() << "|" << c_eta << "|" << opts.inf_f
           << "|" << opts.dim;
        cert.inputs_hash = inputs_hash(os.str());
    }

    // symbolic verdicts near zero
    bool tab = omega.family() == ModulusFamily::Tabulated;
    bool integral_finite = false, sum_finite = false;
    if (!tab) {
        OmegaExponents oe = omega_exponents(omega);
        double s = phi.phi.exp_t() - oe.a;   // t exponent of phi/omega
        double q = phi.phi.exp_log() - oe.b; // log exponent
        double g = -oe.g;                    // loglog exponent
        if (s > -1)
            integral_finite = true;
        else if (s < -1)
            integral_finite = false;
        else
            integral_finite = (q < -1) || (q == -1 && g < -1);
    }
    {
        double a = phi.phi.exp_t(), b = phi.phi.exp_log();
        sum_finite = (a > 0) || (a == 0 && b < -1);
    }

    // numeric pieces
    double hi = std::min(0.5, omega.domain_hi());
    double quad = adaptive_quad(
        [&](double t) { return phi.phi.eval(t) / omega.eval(t); }, opts.quad_eps, hi, 1e-12);
    double dy_sum = 0;
    for (int k = 1; k <= opts.i_max; ++k) dy_sum += phi.phi.eval(std::ldexp(1.0, -k));
    double dy_tail = 0;
    if (sum_finite) {
        double a = phi.phi.exp_t();
        if (a > 0) {
            double term = phi.phi.eval(std::ldexp(1.0, -(opts.i_max + 1)));
            double ratio = std::pow(2.0, -a) *
                           std::pow(1.0 + 1.0 / opts.i_max,
                                    std::max(phi.phi.exp_log(), 0.0));
            if (ratio < 1) dy_tail = term / (1 - ratio);
        } else {
            // a == 0, b < -1: integral comparison on (log k)^b
            double b = phi.phi.exp_log();
            double lk = std::log((double)opts.i_max) * kLn2 + 0; // log(k ln 2) scale
            dy_tail = phi.phi.scale() * std::pow(lk, b + 1) / (-(b + 1) * kLn2);
        }
    }

    // gradient chain
    double c1 = 2.0 * c_eta / opts.inf_f;
    int i0 = -1;
    for (int i = 1; i <= opts.i_max; ++i) {
        double f = std::pow(1.0 + c1 * phi.phi.eval(std::ldexp(1.0, -i)), opts.dim);
        if (f < 2.0) {
            i0 = i;
            break;
        }
    }
    double c2 = std::numeric_limits<double>::infinity();
    double c_omega = std::numeric_limits<double>::infinity();
    double half_product = 0;
    double n_i0 = std::numeric_limits<double>::infinity();
    if (i0 > 0) {
        double q = 0.5 * std::pow(1.0 + c1 * phi.phi.eval(std::ldexp(1.0, -(i0 + 1))),
                                  opts.dim);
        c2 = q < 1 ? 1.0 / (1.0 - q) : std::numeric_limits<double>::infinity();
        // N_i, T_i sweep; the homogeneity ratio is maximized over scales
        double n_i = 1;
        double worst = 0;
        half_product = 1;
        for (int i = 1; i <= opts.i_max; ++i) {
            double fk = std::pow(1.0 + c1 * phi.phi.eval(std::ldexp(1.0, -i)), opts.dim);
            n_i *= fk;
            half_product *= fk / 2.0;
            if (i == i0) n_i0 = n_i;
            if (i < i0 || !std::isfinite(c2)) continue;
            double t_i = std::sqrt((double)opts.dim) * std::ldexp(1.0, -i) * n_i * c2;
            double sep = std::ldexp(1.0, -(i + 1));
            if (sep >= omega.domain_hi()) continue;
            double ratio = (2 * t_i + n_i * std::ldexp(1.0, -i)) / omega.eval(sep);
            worst = std::max(worst, ratio);
        }
        c_omega = worst;
    }

    cert.verdict = tab                             ? Verdict::Inconclusive
                   : (integral_finite && sum_finite) ? Verdict::Pass
                                                     : Verdict::Fail;
    cert.put("c_eta", c_eta);
    cert.put("inf_f", opts.inf_f);
    cert.put("integral_finite", integral_finite ? 1 : 0);
    cert.put("sum_finite", sum_finite ? 1 : 0);
    cert.put("integral_value", quad);
    cert.put("dyadic_sum", dy_sum);
    cert.put("dyadic_sum_tail", dy_tail);
    cert.put("C1", c1);
    cert.put("i0", i0);
    cert.put("C2", c2);
    cert.put("N_i0", n_i0);
    cert.put("half_product", half_product);
    cert.put("C_omega", c_omega);
    return cert;
}

} // namespace rectify
