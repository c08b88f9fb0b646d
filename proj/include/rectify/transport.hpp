#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rectify/density.hpp"
#include "rectify/errors.hpp"
#include "rectify/geometry.hpp"
#include "rectify/moduli.hpp"

namespace rectify {

// ---------------------------------------------------------------- 1-D maps

// Piecewise-linear increasing self-map of [breaks.front(), breaks.back()]
// with fixed endpoints.
struct Interval1DMap {
    std::vector<double> breaks; // source knots, increasing
    std::vector<double> values; // image knots, increasing, same endpoints

    double eval(double t) const;
    double eval_inv(double v) const;
    std::vector<double> slopes() const;
};

// Slab map on [0,1]: slope M*alpha_j on [(j-1)/M, j/M]; requires sum = 1.
Interval1DMap box_map_1d(const std::vector<double>& alphas);

// ---------------------------------------------------------------- 2-D maps

// Piecewise-affine boundary-fixing self-map of a rectangular block with
// constant determinant on each of the two halves along the split axis.
struct BoxMap2D {
    Box block;
    int axis = 1;        // split axis
    double alpha = 0.5;  // low-half volume fraction
    std::vector<AffinePiece> pieces;

    Vec2 eval(Vec2 p) const;
    Vec2 eval_inv(Vec2 p) const;
    // max over pieces of sigma_max(lin - I) and sigma_max(lin^{-1} - I)
    double grad_dev_forward() const;
    double grad_dev_inverse() const;
};

// Tent construction; the fan is solvable for |alpha - 1/2| < 1/4 and the
// apex height 2*alpha - 1/2 stays inside the block. SplitRequired outside.
BoxMap2D box_map_2d(double alpha, int axis = 1, const Box* block = nullptr);

// Panel construction covering all alpha in (0,1): two wall panels whose
// shared midline carries the one-dimensional slab map, solved per side.
// Falls back from the tent where that one does not reach.
BoxMap2D box_map_2d_extended(double alpha, int axis = 1, const Box* block = nullptr);

// Factor an out-of-range ratio into K equal composable in-range steps with
// prod(2 alpha_k) = 2 alpha; K minimal with 2 alpha_k = (2 alpha)^{1/K}.
std::vector<double> split_alpha(double alpha);

// Measured box-map distortion constant: max over a calibration grid of
// ||grad(Phi - Id)|| / |alpha - 1/2|, forward and inverse, on both block
// aspect ratios the dyadic sweeps produce. Cached after the first call.
double calibrated_c_eta();

// ------------------------------------------------------------ composed map

enum class MapMode { Exact1D, Exact2D, VolumeOnly };

struct SweepAlpha {
    int stage = 1;   // parent side 2^stage cells
    int axis = 0;
    double alpha = 0.5;
};

struct GradProfile {
    std::vector<double> stage_forward;  // per-stage norm bound (product of sweeps)
    std::vector<double> stage_inverse;
    double total_forward = 1;
    double total_inverse = 1;
};

struct ModulusEstimate {
    double forward = 0;
    double inverse = 0;
    int pairs_used = 0;
};

// The multi-scale dyadic transport map of a density: per scale, every
// 2^k-cell cube is equalized among its 2^d children by one box map per axis
// sweep; finest scale applies first. The composed Jacobian on each cell
// equals the density normalized by its window mean.
class ComposedMap {
  public:
    MapMode mode() const { return mode_; }
    int dim() const { return d_; }
    int depth() const { return m_; }
    const Box& window() const { return window_; }
    const DyadicField& field() const { return field_; }
    const std::vector<SweepAlpha>& sweep_ratios() const { return ratios_; }
    // coordinate scale applied after the window map (identity when 1)
    double output_scale() const { return out_scale_; }

    std::array<double, 3> eval(const std::array<double, 3>& p) const;
    std::array<double, 3> eval_inv(const std::array<double, 3>& p) const;

    // Exact image volume of an aligned box: polygon pushforward with convex
    // clipping in 2-D, interval arithmetic in 1-D, mass ledger otherwise.
    double image_volume(const Box& c) const;

    // Expected image volume from the mass ledger: mass(C) / window mean.
    double ledger_volume(const Box& c) const;

    GradProfile grad_profile() const;

    // Empirical homogeneity constant: max over sampled pairs inside the
    // window, separation below extent * omega.domain_hi(), of
    //   ||u(x)-u(y)|| / (R * omega(||x-y|| / R)),  R = window extent,
    // for the map and its inverse.
    ModulusEstimate empirical_modulus(const Modulus& omega, int n_pairs,
                                      uint64_t seed) const;

    std::string to_json() const;
    std::string to_svg(int grid) const;

    friend ComposedMap compose(const DyadicField& f, int m, MapMode mode, double rho_scale);

  private:
    struct Sweep {
        int axis = 0;
        double lox = 0, loy = 0;
        double bw = 1, bh = 1; // block extents
        int nbx = 1, nby = 1;
        std::vector<std::vector<AffinePiece>> by_block;
        std::vector<char> is_identity;
        const AffinePiece* locate_src(Vec2 p) const;
        const AffinePiece* locate_tgt(Vec2 p) const;
    };
    struct Stage {
        std::vector<Sweep> sweeps; // applied in axis order
    };

    Vec2 eval2(Vec2 p) const;
    Vec2 eval2_inv(Vec2 p) const;

    MapMode mode_ = MapMode::VolumeOnly;
    int d_ = 2, m_ = 0;
    Box window_;
    DyadicField field_{1, Box{1, {0, 0, 0}, {1, 1, 1}}, {1, 1, 1}, {1.0}};
    double out_scale_ = 1.0;
    std::vector<Stage> stages_;
    std::vector<Interval1DMap> stages1d_;
    std::vector<SweepAlpha> ratios_;
};

// Builds the depth-m composed map; m <= log2(cells per axis). `rho_scale`
// rescales output coordinates by rho^{1/d} so image volumes scale by rho
// (pass 1 for the plain window bijection).
ComposedMap compose(const DyadicField& f, int m, MapMode mode = MapMode::Exact2D,
                    double rho_scale = 1.0);

} // namespace rectify
