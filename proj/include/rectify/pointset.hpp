#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rectify/errors.hpp"
#include "rectify/geometry.hpp"

namespace rectify {

using Point = std::array<double, 3>;

// Finite window of a Delone set. The window is an integer-corner box; cube
// counting is half-open so integer cubes partition additively.
class PointSet {
  public:
    PointSet(int d, std::vector<Point> pts, std::array<long long, 3> wlo,
             std::array<long long, 3> whi);

    int dim() const { return d_; }
    const std::vector<Point>& points() const { return pts_; }
    std::array<long long, 3> window_lo() const { return wlo_; }
    std::array<long long, 3> window_hi() const { return whi_; }
    long long window_extent(int axis) const { return whi_[axis] - wlo_[axis]; }
    double window_volume() const;

    double packing() const { return packing_; }   // min pairwise distance
    double covering() const { return covering_; } // covering radius estimate

    void set_delone_constants(double packing, double covering) {
        packing_ = packing;
        covering_ = covering;
    }

    // Half-open count |X ∩ prod [c_l, c_l + side)|.
    long long count(const IntegerCube& c) const;
    long long count_window() const;

    // Empirical density |X∩W| / Vol(W) with half-open counting.
    double default_rho() const { return (double)count_window() / window_volume(); }

    // Points within closed Euclidean ball B(center, r).
    std::vector<int> ball(const Point& center, double r) const;

    void save(const std::string& path) const;
    static PointSet load(const std::string& path);

    // Exact min pairwise distance over the window.
    double min_pairwise_distance() const;
    // Max over a pitch-h sample grid of the nearest-point distance, plus the
    // grid slack h*sqrt(d)/2; an upper bound for the covering radius.
    double covering_estimate(double pitch) const;

  private:
    void build_index();
    long long cell_of(const Point& p) const;

    int d_;
    std::vector<Point> pts_;
    std::array<long long, 3> wlo_, whi_;
    double packing_ = 0, covering_ = 0;

    // uniform grid buckets of cell size 1
    std::array<long long, 3> gdim_{1, 1, 1};
    std::vector<std::vector<int>> cells_;
    std::vector<long long> prefix_; // (n+1)^d prefix sums of unit-cell counts
};

// Generators. Windows are [0, side]^d unless stated otherwise.
PointSet make_lattice(int d, double spacing, long long side);
// Each lattice site displaced uniformly in the ball of radius `amplitude`;
// requires amplitude < spacing/2 so the Delone property survives.
PointSet make_perturbed(int d, double amplitude, uint64_t seed, long long side,
                        double spacing = 1.0);
// Substitution a -> ab, b -> a starting from "a", n_letters rounds; interval
// lengths (1, tau); points at the interior breakpoints of the tiling.
PointSet make_fibonacci(int n_letters);

struct DeviationProfile {
    double rho = 1;
    IntegerCube window;
    std::vector<std::pair<int, double>> entries; // (i, E(2^i))

    std::string to_csv() const;
    static DeviationProfile from_csv(const std::string& text);
};

// max(rho*Vol/count, count/(rho*Vol)) on the half-open cube; throws EmptyCube
// when the cube holds no points.
double deviation(const PointSet& x, double rho, const IntegerCube& c);

// E(2^i) = max deviation over all integer-corner cubes of side 2^i inside W,
// for i = 0..i_max; exhaustive scan.
DeviationProfile deviation_profile(const PointSet& x, double rho, const IntegerCube& w,
                                   int i_max);

// K-hat = max over entries (side 2^j) of (j+2) * (E(2^j) - 1): the smallest K
// such that E(2^{i-1}) - 1 <= K/(1+i) holds across the window.
double fit_inverse_linear(const DeviationProfile& p);

// Window-independent deviation bound from the Delone constants; valid for
// cube sides >= max(2*covering, packing).
double deviation_bound_from_delone_constants(int d, double rho, double packing,
                                             double covering);

// Smallest R from {r, 2r, 4r, ...} such that every R-patch centered at a core
// point (ball inside W) contains the center of a translated copy of every
// distinct r-patch. Patch equality is exact after snapping coordinates to the
// given pitch. Empty optional when the window is exhausted first.
std::optional<double> repetitivity_radius(const PointSet& x, double r,
                                          const IntegerCube& w, double snap);

} // namespace rectify
