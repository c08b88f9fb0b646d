#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rectify/moduli.hpp"
#include "rectify/pointset.hpp"
#include "rectify/transport.hpp"

namespace rectify {

// Bijection between the window points and a subset of the integer lattice.
struct Matching {
    int d = 2;
    std::vector<Point> sources;
    std::vector<std::array<long long, 3>> targets;
    double radius = 0; // max matched source-space distance
    IntegerCube window;
    std::string via; // "hall", "min-radius", "transport", ...

    std::string to_csv() const;
    static Matching from_csv(const std::string& text, int d);
};

// A Hall violator: |N(S)| < |S| for the returned set of window points.
struct DeficiencyWitness {
    std::vector<Point> set;
    long long neighborhood = 0;
};

using MatchOutcome = std::variant<Matching, DeficiencyWitness>;

// Maximum bipartite matching (Hopcroft-Karp) between X ∩ W (half-open) and
// the lattice points of a halo around W, with edges ||x - z|| <= r. Perfect
// matchings come back as Matching; otherwise the residual cut yields the
// witness.
MatchOutcome hall_match(const PointSet& x, const IntegerCube& w, double r);

// Smallest r among the realized point-to-lattice distances that admits a
// perfect matching; exact, by bisection over the sorted candidate set.
std::pair<double, Matching> min_radius(const PointSet& x, const IntegerCube& w);

// Matching guided by the transport map: each point proposes the nearest
// lattice point to its image; conflicts resolve by augmenting paths within
// 2*sqrt(d) of the proposals, falling back to min_radius when the proposal
// graph has no perfect matching.
Matching transport_match(const PointSet& x, const ComposedMap& u);

struct DistortionReport {
    std::string omega;
    double c_forward = 0;  // empirical lower bound for the map constant
    double c_backward = 0;
    std::vector<double> radii;
    int n_pairs = 0;
    uint64_t seed = 0;
    std::string label = "empirical_lower_bound";

    std::string to_json() const;
};

// max over R in radii and sampled matched pairs inside B(center, R) of
// ||F(x)-F(y)|| / (R * omega(||x-y||/R)), both directions; pair separations
// stay below R * omega.domain_hi().
DistortionReport bi_omega_distortion(const Matching& f, const Modulus& omega,
                                     const std::vector<double>& radii, int n_pairs,
                                     uint64_t seed);

} // namespace rectify
