#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rectify/errors.hpp"

namespace rectify {

// Modulus of continuity families. Log-based families restrict the domain so
// every logarithm involved stays positive: t*(log 1/t)^p needs t < 1, and the
// iterated-log families need log(1/t) > 1, so their default upper endpoint is
// 1/4 rather than 1/2.
enum class ModulusFamily {
    Lipschitz,   // c*t
    Hoelder,     // c*t^alpha, alpha in (0,1)
    LogPower,    // t*(log 1/t)^p
    LogLogPower, // t*(log log 1/t)^gamma
    IteratedLog, // t*(log 1/t)*(log log 1/t)^p
    Tabulated,   // monotone table, linear interpolation
};

class Modulus {
  public:
    static Modulus lipschitz(double c = 1.0);
    static Modulus hoelder(double alpha, double c = 1.0);
    static Modulus log_power(double p);
    static Modulus loglog_power(double gamma);
    static Modulus iterated_log(double p);
    static Modulus tabulated(std::vector<std::pair<double, double>> knots);

    // CSV with header "t,omega", rows strictly increasing in t.
    static Modulus tabulated_from_csv(const std::string& path);

    // Parse "lip:c", "holder:a[:c]", "logpow:p", "loglog:g", "itlog:p",
    // "table:path.csv".
    static Modulus parse(const std::string& text);

    double eval(double t) const; // throws DomainError outside (0, domain_hi)

    double domain_hi() const { return hi_; }
    // 0 for the closed forms; the first knot for tables.
    double domain_lo() const;
    ModulusFamily family() const { return family_; }
    double param() const { return p1_; }
    double scale() const { return p2_; }
    std::string describe() const;

    // Term of the dimension-d membership series at index i >= 2:
    //   (1 / (2^{i-1} * omega(2^{-(i-1)})))^{1/d}.
    double series_term(int d, int i) const;

    // r^2 * omega(1/r), the repetitivity growth law attached to omega.
    double repetitivity_function(double r) const;

  private:
    ModulusFamily family_ = ModulusFamily::Lipschitz;
    double p1_ = 1.0; // exponent / power
    double p2_ = 1.0; // scale for Lipschitz / Hoelder
    double hi_ = 1.0;
    std::vector<std::pair<double, double>> knots_;
};

enum class SeriesStatus { Converges, Diverges, Inconclusive };

struct SeriesVerdict {
    SeriesStatus status = SeriesStatus::Inconclusive;
    double partial_sum = 0;
    std::optional<double> tail_bound;
    int terms_used = 0;

    std::string to_json() const;
};

// Decide the membership series sum_{i>=2} series_term(d, i) symbolically for
// the closed-form families; tabulated moduli only report the partial sum.
SeriesVerdict series_membership(const Modulus& m, int d, int i_max);

struct ValidationIssue {
    std::string kind; // "monotonicity" or "concavity"
    double t1 = 0, t2 = 0;
    double v1 = 0, v2 = 0, vmid = 0;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    double smallest_sample = 0;
    double value_at_smallest = 0;
    bool ok() const { return issues.empty(); }
};

// Sampled monotonicity and midpoint-concavity check (tolerance 1e-9).
ValidationReport validate(const Modulus& m, int n_samples);

} // namespace rectify
