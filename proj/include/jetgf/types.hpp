#pragma once

#include <Eigen/Dense>

#include "jetgf/errors.hpp"

namespace jetgf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Point of the 1-jet space of R^n in canonical coordinates (q, p, z).
// The contact form throughout is lambda = dz - p . dq.
struct ContactPoint {
  Vec q;
  Vec p;
  double z = 0.0;

  ContactPoint() = default;
  ContactPoint(Vec q_, Vec p_, double z_) : q(std::move(q_)), p(std::move(p_)), z(z_) {
    if (q.size() != p.size()) throw Error("ContactPoint: q and p must have equal dimension");
  }

  int dim() const { return static_cast<int>(q.size()); }

  static ContactPoint zero(int n) { return ContactPoint(Vec::Zero(n), Vec::Zero(n), 0.0); }

  // Coordinates stacked as (q, p, z); handy for finite differences and norms.
  Vec packed() const {
    Vec v(2 * dim() + 1);
    v.head(dim()) = q;
    v.segment(dim(), dim()) = p;
    v(2 * dim()) = z;
    return v;
  }

  static ContactPoint from_packed(const Vec& v) {
    if (v.size() % 2 == 0) throw Error("ContactPoint: packed vector must have odd length");
    const int n = static_cast<int>((v.size() - 1) / 2);
    return ContactPoint(v.head(n), v.segment(n, n), v(2 * n));
  }
};

// Tangent vector at a point of the jet space, components in the same frame.
struct TangentVector {
  Vec dq;
  Vec dp;
  double dz = 0.0;

  TangentVector() = default;
  TangentVector(Vec dq_, Vec dp_, double dz_) : dq(std::move(dq_)), dp(std::move(dp_)), dz(dz_) {
    if (dq.size() != dp.size()) throw Error("TangentVector: dq and dp must have equal dimension");
  }

  int dim() const { return static_cast<int>(dq.size()); }

  static TangentVector zero(int n) { return TangentVector(Vec::Zero(n), Vec::Zero(n), 0.0); }

  Vec packed() const {
    Vec v(2 * dim() + 1);
    v.head(dim()) = dq;
    v.segment(dim(), dim()) = dp;
    v(2 * dim()) = dz;
    return v;
  }

  static TangentVector from_packed(const Vec& v) {
    ContactPoint tmp = ContactPoint::from_packed(v);
    return TangentVector(std::move(tmp.q), std::move(tmp.p), tmp.z);
  }
};

inline void require_dim(const ContactPoint& y, int n, const char* where) {
  if (y.dim() != n) throw Error(std::string(where) + ": point dimension mismatch");
}

inline void require_dim(const TangentVector& v, int n, const char* where) {
  if (v.dim() != n) throw Error(std::string(where) + ": tangent vector dimension mismatch");
}

}  // namespace jetgf
