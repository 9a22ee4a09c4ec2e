#include "jetgf/legendrian.hpp"

#include <algorithm>
#include <cmath>

#include "jetgf/errors.hpp"
#include "jetgf/parallel.hpp"

namespace jetgf {
namespace legendrian {

void validate(const GridSpec& grid) {
  const int n = static_cast<int>(grid.min.size());
  if (n < 1) throw ConfigError("grid must have at least one axis");
  if (grid.max.size() != n || static_cast<int>(grid.count.size()) != n)
    throw ConfigError("grid min/max/count must agree in dimension");
  for (int i = 0; i < n; ++i) {
    if (!(grid.min(i) <= grid.max(i))) throw ConfigError("grid min must not exceed max");
    if (grid.count[i] < 1) throw ConfigError("grid count must be positive");
    if (grid.min(i) < grid.max(i) && grid.count[i] < 2)
      throw ConfigError("grid needs at least 2 nodes on a non-degenerate axis");
  }
}

std::vector<double> axis_nodes(double lo, double hi, int count) {
  if (count == 1) return {lo};
  // node = lo + i * step: halving the step is exact in floating point, so a
  // refinement count -> 2*count - 1 reproduces the coarse nodes bit for bit.
  const double step = (hi - lo) / (count - 1);
  std::vector<double> nodes(count);
  for (int i = 0; i < count; ++i) nodes[i] = lo + i * step;
  return nodes;
}

std::vector<Vec> grid_nodes(const GridSpec& grid) {
  validate(grid);
  const int n = static_cast<int>(grid.min.size());
  std::vector<std::vector<double>> axes(n);
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    axes[i] = axis_nodes(grid.min(i), grid.max(i), grid.count[i]);
    total *= axes[i].size();
  }
  std::vector<Vec> nodes;
  nodes.reserve(total);
  std::vector<int> idx(n, 0);
  for (std::size_t k = 0; k < total; ++k) {
    Vec q(n);
    for (int i = 0; i < n; ++i) q(i) = axes[i][idx[i]];
    nodes.push_back(std::move(q));
    for (int i = n - 1; i >= 0; --i) {  // last axis fastest
      if (++idx[i] < static_cast<int>(axes[i].size())) break;
      idx[i] = 0;
    }
  }
  return nodes;
}

std::vector<LegendrianSample> sample_legendrian(const HamiltonianExpr& h, const GridSpec& grid,
                                                const flow::FlowSpec& spec, int jobs) {
  const std::vector<Vec> nodes = grid_nodes(grid);
  std::vector<LegendrianSample> out(nodes.size());
  parallel_for(jobs, nodes.size(), [&](std::size_t i) {
    LegendrianSample& s = out[i];
    s.q0 = nodes[i];
    try {
      const ContactPoint y0(nodes[i], Vec::Zero(nodes[i].size()), 0.0);
      auto [y, g] = flow::psi(h, 1.0, y0, spec);
      s.y = std::move(y);
      s.g = g;
      s.ok = true;
    } catch (const std::exception& ex) {
      s.ok = false;
      s.error = ex.what();
    }
  });
  return out;
}

std::vector<FrontPoint> wave_front(const std::vector<LegendrianSample>& samples) {
  std::vector<FrontPoint> out;
  out.reserve(samples.size());
  for (const LegendrianSample& s : samples)
    if (s.ok) out.push_back({s.y.q, s.y.z});
  return out;
}

namespace {

ContactPoint flow_of_base(const HamiltonianExpr& h, const Vec& q0, const flow::FlowSpec& spec) {
  return flow::psi(h, 1.0, ContactPoint(q0, Vec::Zero(q0.size()), 0.0), spec).first;
}

void append_value(std::vector<double>& values, double v) { values.push_back(v); }

std::vector<double> distinct_ascending(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  for (double v : values)
    if (out.empty() || v - out.back() > 1e-7) out.push_back(v);
  return out;
}

SpectrumReport spectrum_1d(const HamiltonianExpr& h, const GridSpec& grid,
                           const flow::FlowSpec& spec, double tol) {
  const std::vector<double> nodes = axis_nodes(grid.min(0), grid.max(0), grid.count[0]);
  const int m = static_cast<int>(nodes.size());
  std::vector<double> pval(m), zval(m);
  for (int i = 0; i < m; ++i) {
    const ContactPoint y = flow_of_base(h, Vec::Constant(1, nodes[i]), spec);
    pval[i] = y.p(0);
    zval[i] = y.z;
  }

  SpectrumReport rep;
  std::vector<bool> is_zero(m);
  for (int i = 0; i < m; ++i) is_zero[i] = std::abs(pval[i]) <= tol;

  // Runs of nodes already on the zero wall: long runs are one degenerate
  // root, short ones a simple root at the best node of the run.
  int i = 0;
  while (i < m) {
    if (!is_zero[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < m && is_zero[j + 1]) ++j;
    const int len = j - i + 1;
    SpectrumRoot root;
    if (len > 3) {
      const int mid = i + len / 2;
      root.q0 = Vec::Constant(1, nodes[mid]);
      root.value = zval[mid];
      root.degenerate = true;
    } else {
      int best = i;
      for (int k = i + 1; k <= j; ++k)
        if (std::abs(pval[k]) < std::abs(pval[best])) best = k;
      root.q0 = Vec::Constant(1, nodes[best]);
      root.value = zval[best];
    }
    rep.roots.push_back(std::move(root));
    i = j + 1;
  }

  // Sign changes between consecutive off-wall nodes, refined by bisection on
  // the numerically integrated p-component.
  for (int k = 0; k + 1 < m; ++k) {
    if (is_zero[k] || is_zero[k + 1]) continue;
    if (!(pval[k] < 0.0) != !(pval[k + 1] < 0.0)) {
      double a = nodes[k], b = nodes[k + 1];
      double pa = pval[k];
      double mid = 0.5 * (a + b);
      ContactPoint ymid;
      for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (a + b);
        ymid = flow_of_base(h, Vec::Constant(1, mid), spec);
        const double pm = ymid.p(0);
        if (std::abs(pm) <= tol) break;
        if ((pm < 0.0) == (pa < 0.0)) {
          a = mid;
          pa = pm;
        } else {
          b = mid;
        }
      }
      SpectrumRoot root;
      root.q0 = Vec::Constant(1, mid);
      root.value = ymid.z;
      rep.roots.push_back(std::move(root));
    }
  }

  std::sort(rep.roots.begin(), rep.roots.end(),
            [](const SpectrumRoot& a, const SpectrumRoot& b) { return a.q0(0) < b.q0(0); });
  std::vector<double> values;
  for (const SpectrumRoot& r : rep.roots) append_value(values, r.value);
  rep.values = distinct_ascending(std::move(values));
  return rep;
}

SpectrumReport spectrum_nd(const HamiltonianExpr& h, const GridSpec& grid,
                           const flow::FlowSpec& spec, double tol) {
  const int n = static_cast<int>(grid.min.size());
  const std::vector<Vec> nodes = grid_nodes(grid);

  auto p_of = [&](const Vec& q0) { return flow_of_base(h, q0, spec).p; };

  const Vec span = grid.max - grid.min;
  const Vec lo = grid.min - 0.1 * span;
  const Vec hi = grid.max + 0.1 * span;

  SpectrumReport rep;
  for (const Vec& start : nodes) {
    Vec q = start;
    Vec f = p_of(q);
    bool converged = f.lpNorm<Eigen::Infinity>() <= tol;
    for (int iter = 0; iter < 30 && !converged; ++iter) {
      const double step = 1e-6 * (1.0 + q.lpNorm<Eigen::Infinity>());
      Mat J(n, n);
      Vec w = q;
      for (int j = 0; j < n; ++j) {
        w(j) = q(j) + step;
        const Vec fp = p_of(w);
        w(j) = q(j) - step;
        const Vec fm = p_of(w);
        w(j) = q(j);
        J.col(j) = (fp - fm) / (2.0 * step);
      }
      q += Eigen::PartialPivLU<Mat>(J).solve(-f);
      if (!q.allFinite()) break;
      f = p_of(q);
      converged = f.lpNorm<Eigen::Infinity>() <= tol;
    }
    if (!converged) continue;
    if (((q - lo).minCoeff() < 0.0) || ((hi - q).minCoeff() < 0.0)) continue;
    bool duplicate = false;
    for (const SpectrumRoot& r : rep.roots)
      if ((r.q0 - q).lpNorm<Eigen::Infinity>() <= 1e-6) {
        duplicate = true;
        break;
      }
    if (duplicate) continue;
    SpectrumRoot root;
    root.q0 = q;
    root.value = flow_of_base(h, q, spec).z;
    rep.roots.push_back(std::move(root));
  }

  std::vector<double> values;
  for (const SpectrumRoot& r : rep.roots) append_value(values, r.value);
  rep.values = distinct_ascending(std::move(values));
  return rep;
}

}  // namespace

SpectrumReport spectrum(const HamiltonianExpr& h, const GridSpec& grid, const flow::FlowSpec& spec,
                        double tol) {
  validate(grid);
  if (grid.min.size() != h.dim()) throw ConfigError("spectrum: grid dimension mismatch");
  return grid.min.size() == 1 ? spectrum_1d(h, grid, spec, tol)
                              : spectrum_nd(h, grid, spec, tol);
}

std::vector<ContactPoint> zero_wall_crossings(const HamiltonianExpr& h, const GridSpec& grid,
                                              const flow::FlowSpec& spec, double tol) {
  const SpectrumReport rep = spectrum(h, grid, spec, tol);
  std::vector<ContactPoint> out;
  out.reserve(rep.roots.size());
  for (const SpectrumRoot& r : rep.roots) {
    const ContactPoint y = flow_of_base(h, r.q0, spec);
    out.emplace_back(y.q, Vec::Zero(y.dim()), y.z);
  }
  return out;
}

}  // namespace legendrian
}  // namespace jetgf
