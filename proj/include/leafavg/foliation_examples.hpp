#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "leafavg/core.hpp"

namespace leafavg {

/// Level-n Koch curve from (0,0) to (1,0), bumps on the left (y > 0):
/// 4^level segments of length 3^-level.
PiecewiseLinearCurve koch_curve(int level);

enum class BandRule { alternating, zero };

/// Block values in {+1, 0, -1}. Alternating rule, for m >= 1:
/// +1 on b^(2m-1)+1 <= n <= b^(2m)-1, -1 on b^(2m)+1 <= n <= b^(2m+1)-1,
/// 0 on the remaining (buffer) blocks.
struct BandFunction {
  int base = 3;
  BandRule rule = BandRule::alternating;
  double block_length = 1.0;

  int value(std::uint64_t n) const;
  /// Sum of value(k) for k = 1..n, in O(log n).
  long long prefix_sum(std::uint64_t n) const;
};

BandFunction make_band(int base, BandRule rule = BandRule::alternating, double block_length = 1.0);

/// Average of the block values over blocks 1..n, sampled at block boundaries
/// (parameter n * block_length) on the grid 2^(k/4) together with b^k and
/// b^k +- 1, up to n_blocks.
RunningAverage band_running_average(const BandFunction& band, std::uint64_t n_blocks);

/// Leaf made of Koch blocks n = 1..N: block n is the level-n Koch curve scaled
/// by (3/4)^n, occupying the square column x in [X_n, X_n + (3/4)^n] with
/// X_n = sum_{k<n} (3/4)^k. Consecutive blocks are joined by a vertical
/// connector on their shared side.
struct KochLeaf {
  /// block 1, connector 1, block 2, ..., block N.
  std::vector<PiecewiseLinearCurve> pieces;
  std::vector<double> block_left;      // X_n, index n - 1
  std::vector<double> block_baseline;  // y_n
  double connector_fraction = 0.01;

  std::size_t block_count() const { return (pieces.size() + 1) / 2; }
  const PiecewiseLinearCurve& block(std::size_t n) const { return pieces[2 * (n - 1)]; }
  const PiecewiseLinearCurve& connector(std::size_t n) const { return pieces[2 * n - 1]; }
  double block_side(std::size_t n) const;
  double total_length() const;
  /// Arclength from the start of block 1 to the end of block n.
  double boundary_parameter(std::size_t n) const;
};

/// Band observable matched to a Koch leaf: equal to the block value on block
/// n, linear in y along each connector, and continuous in the plane.
Observable koch_band_observable(const KochLeaf& leaf, const BandFunction& band);

struct KochBandLeaf {
  KochLeaf leaf;
  BandFunction band;
  Observable phi;
};

/// Baseline of block n is -connector_fraction * (3/4)^n, so the connectors
/// total at most 3/4 * connector_fraction.
KochBandLeaf koch_leaf(int n_blocks, int base = 3, double connector_fraction = 0.01);

/// Curve average of the band observable at the end of each block.
RunningAverage koch_block_average(const KochBandLeaf& kl);

enum class CircleMapKind { rotation, north_south };

/// Circle map P on [0,1) with its inverse; the fibre over each point has unit length.
struct SuspensionSystem {
  CircleMapKind kind = CircleMapKind::rotation;
  double rho = 0.0;    // rotation
  double kappa = 0.0;  // north-south: theta - kappa sin(2 pi theta)
  Observable phi;      // evaluated at (theta, 0, 0)
  /// Repelling fixed point of the north-south map.
  std::optional<double> source;

  double forward(double theta) const;
  /// Inverse on the increasing branch containing 1/2 (bisection to 1e-14).
  double backward(double theta) const;
};

SuspensionSystem make_rotation_suspension(double rho, const Observable& phi);
/// Catalog domain 0 <= kappa < 1/pi (0 attracting, 1/2 repelling); throws
/// InputError outside it.
SuspensionSystem make_north_south_suspension(double kappa, const Observable& phi);

/// (sum_{j<n} phi(P^j x) + sum_{1<=j<=n} phi(P^-j x)) / (2n) on a geometric n-grid.
RunningAverage suspension_length_average(const SuspensionSystem& sys, double x, std::uint64_t n_max);

}  // namespace leafavg
