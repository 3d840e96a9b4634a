#pragma once

// Central finite differences shared by the unit and acceptance tests.

#include <cmath>
#include <functional>

#include "sgdct/linalg.hpp"

namespace fd {

using sgdct::Mat;
using sgdct::Vec;

/// Jacobian of a vector function: J(i, k) = d out_i / d p_k.
inline Mat jacobian(const std::function<Vec(const Vec&)>& f, const Vec& p, double h = 1e-6) {
  const Vec f0 = f(p);
  Mat J(f0.size(), p.size());
  Vec q = p;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    q[k] = p[k] + h;
    const Vec up = f(q);
    q[k] = p[k] - h;
    const Vec dn = f(q);
    q[k] = p[k];
    J.col(k) = (up - dn) / (2.0 * h);
  }
  return J;
}

inline Vec gradient(const std::function<double(const Vec&)>& f, const Vec& p, double h = 1e-6) {
  Vec g(p.size());
  Vec q = p;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    q[k] = p[k] + h;
    const double up = f(q);
    q[k] = p[k] - h;
    const double dn = f(q);
    q[k] = p[k];
    g[k] = (up - dn) / (2.0 * h);
  }
  return g;
}

/// Second-order stencil for the Hessian of a scalar function.
inline Mat hessian(const std::function<double(const Vec&)>& f, const Vec& p, double h = 1e-4) {
  const Eigen::Index n = p.size();
  Mat H(n, n);
  Vec q = p;
  const double f0 = f(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        q[i] = p[i] + h;
        const double up = f(q);
        q[i] = p[i] - h;
        const double dn = f(q);
        q[i] = p[i];
        H(i, i) = (up - 2.0 * f0 + dn) / (h * h);
      } else {
        double s = 0.0;
        for (int a = -1; a <= 1; a += 2) {
          for (int b = -1; b <= 1; b += 2) {
            q[i] = p[i] + a * h;
            q[j] = p[j] + b * h;
            s += a * b * f(q);
          }
        }
        q[i] = p[i];
        q[j] = p[j];
        H(i, j) = s / (4.0 * h * h);
      }
    }
  }
  return H;
}

/// max |a - b| / max(1, |b|) entrywise: relative for large entries, absolute near zero.
inline double rel_err(const Mat& a, const Mat& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(1.0, std::abs(b(i, j))));
    }
  }
  return worst;
}

}  // namespace fd
