#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rectify/bk.hpp"
#include "rectify/errors.hpp"
#include "rectify/moduli.hpp"

namespace rectify {

enum class Verdict { Pass, Fail, Inconclusive };

std::string verdict_name(Verdict v);

// Named-constant chain with a deterministic serialization.
struct Certificate {
    std::string kind;
    Verdict verdict = Verdict::Inconclusive;
    std::vector<std::pair<std::string, double>> constants;
    std::string inputs_hash;

    void put(const std::string& name, double v) { constants.emplace_back(name, v); }
    double get(const std::string& name) const;
    std::string to_json() const;
};

struct CertifyParams {
    double alpha_exp = 0.5; // series exponent in (0,1]
    double c_eta = 0;       // measured box-map constant; 0 = calibrate
    int i0 = 0;             // base scale; 0 = select from the gate
};

// [1/(2E^2), E^2/2]: the admissible split-ratio interval at deviation E.
std::pair<double, double> alpha_bounds(double e);

// prod_{i=i0}^{len(Es)} (1 + c_eta/2 (E_i^2 - E_i^{-2}))^d with Es[i-1] = E(2^{i-1}).
double grad_bound(const std::vector<double>& es, int d, double c_eta, int i0 = 1);

// Certificate for the deviation-series criterion: series partial sums with a
// tail bound under the K/(1+i) gate, the gradient-bound chain, and a
// homogeneity constant valid for the finite depth. Constants:
//   K_hat, i0, C1 (prefix), C_alpha, N_bar (full gradient bound), Y
//   (weighted ratio sum), C_series, C_direct, C_cert = max of the two.
Certificate deviation_series_certificate(const std::vector<double>& es, const Modulus& omega,
                                         const CertifyParams& params, int d);

struct GatedProductCheck {
    double lhs = 1;        // prod (1 + a_i)
    double rhs_basis = 0;  // sum (1+i)^alpha a_i
    double c_needed = 0;   // (lhs - 1) / rhs_basis
};

// Requires 0 < a_i <= 1/(i+1) (i starting at 1).
GatedProductCheck gated_product_check(const std::vector<double>& a, double alpha_exp);

// Sound bound for c_needed over gated sequences of length m: (m+2)/2.
double gated_product_constant(int m);

struct SummableProductCheck {
    double total = 0;      // L = sum a_k
    double constant = 0;   // 2 e^L / L
    int threshold_n = 0;   // first n with partial sum >= L/2
    bool holds_past_threshold = false;
    double worst_ratio = 0; // max over n >= threshold of lhs / (C * partial)
};

SummableProductCheck summable_product_check(const std::vector<double>& a);

struct LagariasParams {
    double p = 1;
    int d = 1;
    double c1 = 0.5;  // in (0,1)
    double c5 = 3.0;  // > 2
    double u2 = 10.0; // > e
};

struct LagariasResult {
    std::vector<double> u;       // U_2, U_3, ... (stops past 2^j_max)
    int j_lo = 1;                // first j with U_2 <= 2^j
    std::vector<int> m_j;        // indexed j = j_lo..j_max
    std::vector<double> b;       // literal bound products, same indexing
    std::vector<double> b_model; // normalized decay model exp(-sum_{k=2}^{j-1} k^-pd)
    std::vector<int> claim_shift_violations; // j where m_j - 1 != m_{j-1}
};

LagariasResult lagarias_sequence(const LagariasParams& params, int j_max);

struct DecayFit {
    std::string model; // "power" (pd = 1) or "stretched" (pd != 1)
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
};

// Fits log B_j against the decay-model regressor -(j-1)^{1-pd}/(1-pd)
// (pd != 1) or -log(j-1) (pd = 1), over the given j indices.
DecayFit decay_fit(const std::vector<int>& js, const std::vector<double>& b, double p, int d);

struct OscCertifyOptions {
    double c_eta = 0;  // 0 = calibrate
    double inf_f = 1;  // lower density bound a
    int dim = 2;
    int i_max = 60;
    double quad_eps = 0x1.0p-40;
};

// Certificate for the oscillation-integral criterion: quadrature of
// int phi/omega with a symbolic tail verdict, the dyadic sum of phi, and the
// gradient/limit constant chain (C1 = 2 c_eta / a, contraction point, tail
// constant, and the resulting homogeneity constant).
Certificate osc_certificate(const OscillationBound& phi, const Modulus& omega,
                            const OscCertifyOptions& opts = {});

// FNV-1a of a canonical input string, for certificate reproducibility.
std::string inputs_hash(const std::string& canonical);

} // namespace rectify
