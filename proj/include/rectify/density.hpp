#pragma once

#include <array>
#include <string>
#include <vector>

#include "rectify/errors.hpp"
#include "rectify/geometry.hpp"
#include "rectify/pointset.hpp"

namespace rectify {

// Piecewise-constant density on a rectangular grid of equal cells per axis.
// Square windows with power-of-two grids are the dyadic case the transport
// and certificate machinery consume; strips (e.g. checkerboards on
// [0,1]x[0,1/N]) use per-axis cell counts.
class DyadicField {
  public:
    DyadicField(int d, Box window, std::array<int, 3> cells, std::vector<double> values);

    int dim() const { return d_; }
    const Box& window() const { return window_; }
    int cells(int axis) const { return cells_[axis]; }
    double cell_extent(int axis) const { return window_.extent(axis) / cells_[axis]; }
    const std::vector<double>& values() const { return v_; }
    double inf_bound() const { return inf_; }
    double sup_bound() const { return sup_; }
    double total_mass() const { return mass_; }
    double mean() const { return mass_ / window_.volume(); }

    // max i with 2^i cells per subdivided axis; throws when counts are not
    // powers of two.
    int depth() const;

    double value(std::array<int, 3> ix) const;
    double value_at(const std::array<double, 3>& p) const;

    // Exact integral over a box aligned with the cell grid.
    double mass(const Box& b) const;
    bool aligned(const Box& b) const;

    // Block means at a coarser dyadic depth; mass preserved exactly.
    DyadicField average(int depth) const;

    // Mean oscillation of f over an aligned box: avg |f - avg f|.
    double mean_osc(const Box& b) const;

    std::string to_json() const;
    static DyadicField from_json(const std::string& text);
    void save(const std::string& path) const;
    static DyadicField load(const std::string& path);

  private:
    size_t index(std::array<int, 3> ix) const {
        return ((size_t)ix[0] * cells_[1] + ix[1]) * cells_[2] + ix[2];
    }

    int d_;
    Box window_;
    std::array<int, 3> cells_{1, 1, 1};
    std::vector<double> v_;
    double inf_ = 0, sup_ = 0, mass_ = 0;
};

// The alternating {1, 1+c} strip on [0,1] x [0,1/N]: value 1 on odd cells,
// 1+c on even cells (1-indexed).
DyadicField checkerboard(double c, int n);

// Split the block D along `axis` into equal halves A (low) and B (high);
// returns (alpha, beta) = (mass(A)/mass(D), 1 - alpha).
std::pair<double, double> split_ratios(const DyadicField& f, const Box& block, int axis);

// Continuous-density deviation profile over integer-corner cubes of side 2^i.
DeviationProfile density_deviation_profile(const DyadicField& f, double rho);

// Unit-cell counts of a point set as a density; empty cells are floored at
// eps_floor > 0 and reported through `flagged_empty`.
DyadicField from_delone(const PointSet& x, double eps_floor = 0.5,
                        int* flagged_empty = nullptr);

// Place round(mass per unit cell) points on a centered subgrid in each cell.
PointSet points_from_density(const DyadicField& f);

} // namespace rectify
