#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rectify/density.hpp"
#include "rectify/errors.hpp"

namespace rectify {

// Increasing positive function of the form c * t^a * (log 1/t)^b, the shapes
// the oscillation machinery needs (pure powers, powers with log factors, and
// inverse logs).
class PhiFunction {
  public:
    static PhiFunction power(double a, double c = 1.0);      // c*t^a
    static PhiFunction power_log(double a, double b);        // t^a (log 1/t)^b
    static PhiFunction inv_log(double p);                    // (log 1/t)^{-p}
    static PhiFunction parse(const std::string& text);       // "pow:a[:c]", "powlog:a:b", "invlog:p"

    double eval(double t) const;
    double exp_t() const { return a_; }
    double exp_log() const { return b_; }
    double scale() const { return c_; }
    std::string describe() const;

  private:
    double c_ = 1, a_ = 1, b_ = 0;
};

// phi with sampled monotonicity and sub-linearity checks attached.
struct OscillationBound {
    PhiFunction phi;
    bool sub_linear = false; // phi(t) <= t at all sampled t

    static OscillationBound make(PhiFunction f, int n_samples = 64);
};

// 1 / floor(1/phi_value); the reciprocal is a positive integer.
double phi_tilde(double phi_value);
// Same, with the reciprocal rounded up to the next power of two, so implant
// heights stay dyadic. Rounding down the height preserves every height bound.
double phi_tilde_dyadic(double phi_value);

struct BKParams {
    double c = 1.0;  // contrast
    int n = 4;       // base checkerboard count, even (power of two here)
    int m = 2;       // first-level refinement factor (power of two here)
    int levels = 1;  // implantation rounds
    OscillationBound phi;
};

struct BKLevel {
    int level = 2;
    double pitch = 0;      // implant grid pitch
    double height = 0;     // implant height (dyadic)
    double height_raw = 0; // before dyadic rounding
    double l_s = 0;        // cell side the height bound compares against
    double bound = 0;      // l_s * phi(l_s)
};

// The implanted checkerboard density on R_N = [0,1] x [0,1/N], values in
// {1, 1+c}. Level 1 is the plain checkerboard; each further level implants a
// rescaled checkerboard strip at the bottom of every grid cell of the current
// scale. All geometry is dyadic, and areas are counted in exact integer units
// of the finest cell, so deep constructions stay exact without a dense grid.
class BKField {
  public:
    int unit_exp() const { return k_; } // finest cell = 2^{-k}
    double contrast() const { return c_; }
    int base_n() const { return n_; }
    const std::vector<BKLevel>& implant_levels() const { return lvls_; }
    Box window() const;

    double value_at(double x, double y) const;

    // Exact areas at values {1, 1+c} inside the dyadic cube of side 2^{-i}
    // whose corner sits at (cx, cy) * 2^{-i}; returned in units of the finest
    // cell area.
    std::pair<long long, long long> value_areas(int i, long long cx, long long cy) const;

    double mean_osc_cube(int i, long long cx, long long cy) const;
    double osc_accounting_bound(int i, long long cx, long long cy) const;
    double mass_cube(int i, long long cx, long long cy) const;
    double total_mass() const;

    // Dense field; throws DepthOverflow when the finest resolution exceeds
    // 2^{-max_depth}.
    DyadicField to_dense(int max_depth = 12) const;

    friend BKField bk_construct(const BKParams& p);

  private:
    struct UnitsBox {
        long long x0, x1, y0, y1;
    };
    std::pair<long long, long long> count_level(int level, const UnitsBox& b) const;

    double c_ = 1;
    int n_ = 4, m_ = 2;
    int k_ = 2;                   // unit exponent
    long long wx_ = 0, wy_ = 0;   // window extent in units
    std::vector<BKLevel> lvls_;
    std::vector<long long> pitch_u_, height_u_; // per implant level, in units
};

BKField bk_construct(const BKParams& p);

} // namespace rectify
