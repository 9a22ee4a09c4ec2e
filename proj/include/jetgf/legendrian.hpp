#pragma once

#include <string>
#include <vector>

#include "jetgf/flow.hpp"
#include "jetgf/types.hpp"

// Sampling of the Legendrian obtained by flowing the zero section to time 1,
// its wave front (q, z) projection, and the spectrum: the set of z-values at
// crossings of the zero wall {p = 0}, i.e. the critical values of the
// generating function.

namespace jetgf {
namespace legendrian {

// Axis-aligned product grid of base points.
struct GridSpec {
  Vec min;
  Vec max;
  std::vector<int> count;  // per axis, >= 1 (>= 2 when min < max)
};

void validate(const GridSpec& grid);
std::vector<Vec> grid_nodes(const GridSpec& grid);
// Nodes along one axis; refining count -> 2*count - 1 keeps shared nodes
// bit-identical.
std::vector<double> axis_nodes(double lo, double hi, int count);

struct LegendrianSample {
  Vec q0;
  ContactPoint y;  // time-1 flow of (q0, 0, 0)
  double g = 0.0;
  bool ok = false;
  std::string error;
};

std::vector<LegendrianSample> sample_legendrian(const HamiltonianExpr& h, const GridSpec& grid,
                                                const flow::FlowSpec& spec, int jobs = 1);

struct FrontPoint {
  Vec q;
  double z = 0.0;
};

// Drops the momentum component of successful samples.
std::vector<FrontPoint> wave_front(const std::vector<LegendrianSample>& samples);

struct SpectrumRoot {
  Vec q0;
  double value = 0.0;      // z at the crossing
  bool degenerate = false; // |p| below tolerance over a whole grid plateau
};

struct SpectrumReport {
  std::vector<SpectrumRoot> roots;  // ordered by q0 (dim 1) / discovery (dim > 1)
  std::vector<double> values;       // distinct critical values, ascending
};

// Finds the roots of q0 -> p-component of the time-1 flow.  Dimension 1 uses
// sign-change bisection refined until |p| <= tol; runs of more than three
// consecutive grid nodes with |p| <= tol are flagged as one degenerate root.
// Higher dimensions run Newton from every grid node and deduplicate.
SpectrumReport spectrum(const HamiltonianExpr& h, const GridSpec& grid, const flow::FlowSpec& spec,
                        double tol = 1e-10);

// Points (q, 0, z) of the Legendrian on the zero wall, one per spectrum root.
std::vector<ContactPoint> zero_wall_crossings(const HamiltonianExpr& h, const GridSpec& grid,
                                              const flow::FlowSpec& spec, double tol = 1e-10);

}  // namespace legendrian
}  // namespace jetgf
