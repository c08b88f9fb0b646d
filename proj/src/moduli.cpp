#include "rectify/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rectify {

namespace {
constexpr double kLn2 = 0.6931471805599453;

double checked_positive(double v, const char* what) {
    if (!(v > 0) || !std::isfinite(v)) throw InvalidParam(std::string(what) + " must be positive");
    return v;
}
} // namespace

Modulus Modulus::lipschitz(double c) {
    Modulus m;
    m.family_ = ModulusFamily::Lipschitz;
    m.p2_ = checked_positive(c, "lipschitz scale");
    m.hi_ = 1.0;
    return m;
}

Modulus Modulus::hoelder(double alpha, double c) {
    if (!(alpha > 0 && alpha < 1)) throw InvalidParam("hoelder exponent must lie in (0,1)");
    Modulus m;
    m.family_ = ModulusFamily::Hoelder;
    m.p1_ = alpha;
    m.p2_ = checked_positive(c, "hoelder scale");
    m.hi_ = 1.0;
    return m;
}

Modulus Modulus::log_power(double p) {
    if (p < 0) throw InvalidParam("log power must be >= 0");
    Modulus m;
    m.family_ = ModulusFamily::LogPower;
    m.p1_ = p;
    m.hi_ = 0.5;
    return m;
}

Modulus Modulus::loglog_power(double gamma) {
    if (gamma < 0) throw InvalidParam("loglog power must be >= 0");
    Modulus m;
    m.family_ = ModulusFamily::LogLogPower;
    m.p1_ = gamma;
    m.hi_ = 0.25; // keeps log(log(1/t)) > 0
    return m;
}

Modulus Modulus::iterated_log(double p) {
    if (p < 0) throw InvalidParam("iterated-log power must be >= 0");
    Modulus m;
    m.family_ = ModulusFamily::IteratedLog;
    m.p1_ = p;
    m.hi_ = 0.25;
    return m;
}

Modulus Modulus::tabulated(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw InvalidParam("tabulated modulus needs at least two knots");
    for (size_t i = 0; i < knots.size(); ++i) {
        if (!(knots[i].first > 0 && knots[i].first < 1)) throw InvalidParam("tabulated t outside (0,1)");
        if (i > 0 && !(knots[i].first > knots[i - 1].first))
            throw InvalidParam("tabulated t not strictly increasing");
        if (!(knots[i].second > 0)) throw InvalidParam("tabulated omega values must be positive");
    }
    Modulus m;
    m.family_ = ModulusFamily::Tabulated;
    m.hi_ = knots.back().first;
    m.knots_ = std::move(knots);
    return m;
}

Modulus Modulus::tabulated_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParam("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw InvalidParam("empty table " + path);
    std::vector<std::pair<double, double>> knots;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double t, v;
        if (!(row >> t >> v)) throw InvalidParam("bad table row: " + line);
        knots.emplace_back(t, v);
    }
    return tabulated(std::move(knots));
}

Modulus Modulus::parse(const std::string& text) {
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::string cur;
        for (char ch : s) {
            if (ch == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        parts.push_back(cur);
        return parts;
    };
    auto parts = split(text);
    const std::string& kind = parts[0];
    auto num = [&](size_t i, double dflt) { return parts.size() > i ? std::stod(parts[i]) : dflt; };
    if (kind == "lip" || kind == "lipschitz") return lipschitz(num(1, 1.0));
    if (kind == "holder" || kind == "hoelder") return hoelder(num(1, 0.5), num(2, 1.0));
    if (kind == "logpow") return log_power(num(1, 1.0));
    if (kind == "loglog") return loglog_power(num(1, 1.0));
    if (kind == "itlog") return iterated_log(num(1, 1.0));
    if (kind == "table") {
        if (parts.size() < 2) throw InvalidParam("table: needs a path");
        return tabulated_from_csv(parts[1]);
    }
    throw InvalidParam("unknown modulus spec: " + text);
}

double Modulus::eval(double t) const {
    if (!(t > 0) || !(t < hi_) || !std::isfinite(t)) {
        if (t != hi_) // allow the closed upper endpoint, useful for sup-ratios
            throw DomainError("modulus argument outside (0, " + std::to_string(hi_) + "]");
    }
    switch (family_) {
    case ModulusFamily::Lipschitz:
        return p2_ * t;
    case ModulusFamily::Hoelder:
        return p2_ * std::pow(t, p1_);
    case ModulusFamily::LogPower:
        return t * std::pow(std::log(1.0 / t), p1_);
    case ModulusFamily::LogLogPower:
        return t * std::pow(std::log(std::log(1.0 / t)), p1_);
    case ModulusFamily::IteratedLog:
        return t * std::log(1.0 / t) * std::pow(std::log(std::log(1.0 / t)), p1_);
    case ModulusFamily::Tabulated: {
        if (t < knots_.front().first)
            throw DomainError("tabulated modulus argument below table range");
        auto it = std::lower_bound(knots_.begin(), knots_.end(), t,
                                   [](const auto& kv, double x) { return kv.first < x; });
        if (it == knots_.begin()) return it->second;
        if (it == knots_.end()) return knots_.back().second;
        auto [t1, v1] = *(it - 1);
        auto [t2, v2] = *it;
        double w = (t - t1) / (t2 - t1);
        return v1 + w * (v2 - v1);
    }
    }
    throw Error("unreachable");
}

double Modulus::domain_lo() const {
    return family_ == ModulusFamily::Tabulated ? knots_.front().first : 0.0;
}

std::string Modulus::describe() const {
    std::ostringstream os;
    switch (family_) {
    case ModulusFamily::Lipschitz: os << "lip:" << p2_; break;
    case ModulusFamily::Hoelder: os << "holder:" << p1_ << ":" << p2_; break;
    case ModulusFamily::LogPower: os << "logpow:" << p1_; break;
    case ModulusFamily::LogLogPower: os << "loglog:" << p1_; break;
    case ModulusFamily::IteratedLog: os << "itlog:" << p1_; break;
    case ModulusFamily::Tabulated: os << "table[" << knots_.size() << "]"; break;
    }
    return os.str();
}

double Modulus::series_term(int d, int i) const {
    if (d < 1) throw InvalidParam("dimension must be >= 1");
    if (i < 2) throw InvalidParam("series index starts at 2");
    double t = std::ldexp(1.0, -(i - 1)); // 2^{-(i-1)}
    double denom = std::ldexp(1.0, i - 1) * eval(t);
    return std::pow(1.0 / denom, 1.0 / d);
}

double Modulus::repetitivity_function(double r) const {
    if (!(r > 1)) throw InvalidParam("repetitivity radius must exceed 1");
    return r * r * eval(1.0 / r);
}

std::string SeriesVerdict::to_json() const {
    nlohmann::json j;
    j["status"] = status == SeriesStatus::Converges   ? "Converges"
                  : status == SeriesStatus::Diverges ? "Diverges"
                                                     : "Inconclusive";
    j["partial_sum"] = partial_sum;
    if (tail_bound)
        j["tail_bound"] = *tail_bound;
    else
        j["tail_bound"] = nullptr;
    j["terms_used"] = terms_used;
    return j.dump();
}

SeriesVerdict series_membership(const Modulus& m, int d, int i_max) {
    if (i_max < 8) throw InvalidParam("i_max must be >= 8");
    SeriesVerdict v;
    for (int i = 2; i <= i_max; ++i) {
        v.partial_sum += m.series_term(d, i);
        ++v.terms_used;
    }

    const double p = m.param();
    switch (m.family()) {
    case ModulusFamily::Lipschitz:
        // constant terms c^{-1/d}
        v.status = SeriesStatus::Diverges;
        break;
    case ModulusFamily::Hoelder: {
        // geometric with ratio 2^{-(1-alpha)/d} < 1
        v.status = SeriesStatus::Converges;
        double r = std::pow(2.0, -(1.0 - p) / d);
        v.tail_bound = m.series_term(d, i_max + 1) / (1.0 - r);
        break;
    }
    case ModulusFamily::LogPower: {
        // term_i = ((i-1) ln 2)^{-p/d}: p-series, converges iff p > d
        if (p > d) {
            v.status = SeriesStatus::Converges;
            double q = p / d;
            // integral comparison: sum_{i>i_max} f(i-1) <= int_{i_max-1}^inf
            double a = i_max - 1;
            v.tail_bound = std::pow(kLn2, -q) * std::pow(a, 1.0 - q) / (q - 1.0);
        } else {
            v.status = SeriesStatus::Diverges;
        }
        break;
    }
    case ModulusFamily::LogLogPower:
        // terms ~ (log((i-1) ln 2))^{-p/d} decay slower than any p-series
        v.status = SeriesStatus::Diverges;
        break;
    case ModulusFamily::IteratedLog: {
        // terms ((i-1)ln2)^{-1/d} (log((i-1)ln2))^{-p/d}; for d >= 2 the
        // leading exponent 1/d < 1 diverges; for d = 1 this is a Bertrand
        // series, convergent iff p > 1.
        if (d == 1 && p > 1) {
            v.status = SeriesStatus::Converges;
            double a = (i_max - 1) * kLn2;
            v.tail_bound = std::pow(std::log(a), 1.0 - p) / ((p - 1.0) * kLn2);
        } else {
            v.status = SeriesStatus::Diverges;
        }
        break;
    }
    case ModulusFamily::Tabulated:
        v.status = SeriesStatus::Inconclusive;
        break;
    }
    if (v.status != SeriesStatus::Converges) v.tail_bound.reset();
    return v;
}

ValidationReport validate(const Modulus& m, int n_samples) {
    if (n_samples < 3) throw InvalidParam("need at least 3 samples");
    ValidationReport rep;
    const double tol = 1e-9;
    const double hi = m.domain_hi();
    const double lo = std::max(m.domain_lo(), hi * 1e-9);

    std::vector<double> ts(n_samples), vs(n_samples);
    for (int k = 0; k < n_samples; ++k) {
        double u = (double)(k + 1) / (n_samples + 1);
        if (m.family() == ModulusFamily::Tabulated)
            ts[k] = lo + u * (hi - lo); // linear sweep across the table
        else
            ts[k] = lo * std::pow(hi / lo, u); // geometric sweep into small t
    }
    for (int k = 0; k < n_samples; ++k) vs[k] = m.eval(ts[k]);

    rep.smallest_sample = ts[0];
    rep.value_at_smallest = vs[0];

    for (int k = 0; k + 1 < n_samples; ++k) {
        if (!(vs[k] < vs[k + 1])) {
            rep.issues.push_back({"monotonicity", ts[k], ts[k + 1], vs[k], vs[k + 1], 0});
        }
        double mid = 0.5 * (ts[k] + ts[k + 1]);
        double vmid = m.eval(mid);
        if (vmid < 0.5 * (vs[k] + vs[k + 1]) - tol) {
            rep.issues.push_back({"concavity", ts[k], ts[k + 1], vs[k], vs[k + 1], vmid});
        }
    }
    return rep;
}

} // namespace rectify
