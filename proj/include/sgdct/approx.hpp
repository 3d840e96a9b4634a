#pragma once

// Single-hidden-layer networks y = W2 act(W1 x + b1) + b2 with analytic
// parameter gradients, input gradient/Hessian, and parameter gradients of
// input-derivative functionals (tanh only).
//
// Flat parameter order: W1 (row-major), b1, W2 (row-major), b2.

#include <cmath>
#include <iosfwd>
#include <random>
#include <string>

#include "sgdct/linalg.hpp"

namespace sgdct::approx {

enum class Activation { Relu, Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct ShallowNet {
  Mat W1;  ///< h x n_in
  Vec b1;  ///< h
  Mat W2;  ///< n_out x h
  Vec b2;  ///< n_out
  Activation activation = Activation::Tanh;

  ShallowNet() = default;
  /// All parameters zero.
  ShallowNet(Eigen::Index n_in, Eigen::Index hidden, Eigen::Index n_out, Activation act);

  Eigen::Index n_in() const { return W1.cols(); }
  Eigen::Index hidden() const { return W1.rows(); }
  Eigen::Index n_out() const { return W2.rows(); }
  Eigen::Index param_count() const { return hidden() * n_in() + hidden() + n_out() * hidden() + n_out(); }

  /// Throws DimensionError unless shapes are mutually consistent.
  void validate() const;

  ParamVector params() const;
  void set_params(const Eigen::Ref<const Vec>& p);
  /// Adds `delta` to the flat parameter vector in place.
  void add_to_params(const Eigen::Ref<const Vec>& delta);

  /// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; fan_in is n_in for
  /// the hidden layer and h for the output layer. Biases likewise.
  template <class Rng>
  static ShallowNet random(Eigen::Index n_in, Eigen::Index hidden, Eigen::Index n_out, Activation act,
                           Rng& rng);
};

/// W2 act(W1 x + b1) + b2.
Vec net_eval(const ShallowNet& net, const Eigen::Ref<const Vec>& x);

/// Jacobian (n_out x param_count) of every output w.r.t. the flat parameters.
Mat net_param_grad(const ShallowNet& net, const Eigen::Ref<const Vec>& x);

struct InputDerivs {
  double value;
  Vec grad;  ///< dQ/dx, n_in
  Mat hess;  ///< d2Q/dx dx, n_in x n_in
};

/// Scalar-output tanh nets only; throws UnsupportedDerivativeError for relu.
InputDerivs net_input_derivs(const ShallowNet& net, const Eigen::Ref<const Vec>& x);

struct MixedDerivs {
  Vec grad_value;  ///< param_count
  Mat grad_dx;     ///< n_in x param_count, row i = grad_theta dQ/dx_i
  Mat grad_dxx;    ///< n_in^2 x param_count, row i + n*j = grad_theta d2Q/dx_i dx_j
};

/// Parameter gradients of Q, dQ/dx_i and d2Q/dx_i dx_j (tanh, scalar output).
MixedDerivs net_mixed_derivs(const ShallowNet& net, const Eigen::Ref<const Vec>& x);

/// Linear functional F = c0 Q + g . dQ/dx + sum_ij H_ij d2Q/dx_i dx_j with its
/// parameter gradient, computed without forming the full mixed blocks.
/// H is symmetrized internally.
struct FunctionalValue {
  double value;
  double q;  ///< Q(x) itself
  Vec grad;  ///< param_count
};

FunctionalValue net_functional(const ShallowNet& net, const Eigen::Ref<const Vec>& x, double c0,
                               const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Mat>& H);

/// Writes the model in the flat CSV format: four header lines
/// `n_in,<n>`, `hidden,<h>`, `n_out,<k>`, `activation,<relu|tanh>`, then one
/// parameter per line in flat order (shortest round-trip decimals).
void write_net_csv(std::ostream& out, const ShallowNet& net);
ShallowNet read_net_csv(std::istream& in);

// ---------------------------------------------------------------------------

template <class Rng>
ShallowNet ShallowNet::random(Eigen::Index n_in, Eigen::Index hidden, Eigen::Index n_out, Activation act,
                              Rng& rng) {
  ShallowNet net(n_in, hidden, n_out, act);
  auto fill = [&rng](auto& m, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  };
  const double b_in = 1.0 / std::sqrt(static_cast<double>(n_in));
  const double b_h = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill(net.W1, b_in);
  fill(net.b1, b_in);
  fill(net.W2, b_h);
  fill(net.b2, b_h);
  return net;
}

}  // namespace sgdct::approx
