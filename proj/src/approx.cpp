#include "sgdct/approx.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sgdct/error.hpp"
#include "sgdct/format.hpp"

namespace sgdct::approx {

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw DomainError("unknown activation: " + s);
}

ShallowNet::ShallowNet(Eigen::Index n_in, Eigen::Index hidden, Eigen::Index n_out, Activation act)
    : W1(Mat::Zero(hidden, n_in)),
      b1(Vec::Zero(hidden)),
      W2(Mat::Zero(n_out, hidden)),
      b2(Vec::Zero(n_out)),
      activation(act) {}

void ShallowNet::validate() const {
  if (b1.size() != W1.rows() || W2.cols() != W1.rows() || b2.size() != W2.rows()) {
    throw DimensionError("ShallowNet: inconsistent layer shapes");
  }
}

namespace {

struct Offsets {
  Eigen::Index b1, W2, b2;
};

Offsets offsets(const ShallowNet& net) {
  const Eigen::Index h = net.hidden();
  const Eigen::Index n = net.n_in();
  return {h * n, h * n + h, h * n + h + net.n_out() * h};
}

void check_input(const ShallowNet& net, const Eigen::Ref<const Vec>& x) {
  net.validate();
  if (x.size() != net.n_in()) throw DimensionError("ShallowNet: input dimension mismatch");
}

void require_scalar_tanh(const ShallowNet& net, const char* what) {
  if (net.activation != Activation::Tanh) {
    throw UnsupportedDerivativeError(std::string(what) + " requires a tanh network");
  }
  if (net.n_out() != 1) throw DimensionError(std::string(what) + " requires a scalar-output network");
}

}  // namespace

ParamVector ShallowNet::params() const {
  validate();
  ParamVector p(param_count());
  const Offsets o = offsets(*this);
  const Eigen::Index h = hidden(), n = n_in(), k = n_out();
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) p[r * n + c] = W1(r, c);
  }
  p.segment(o.b1, h) = b1;
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < h; ++c) p[o.W2 + r * h + c] = W2(r, c);
  }
  p.segment(o.b2, k) = b2;
  return p;
}

void ShallowNet::set_params(const Eigen::Ref<const Vec>& p) {
  validate();
  if (p.size() != param_count()) throw DimensionError("ShallowNet::set_params: wrong parameter count");
  const Offsets o = offsets(*this);
  const Eigen::Index h = hidden(), n = n_in(), k = n_out();
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) W1(r, c) = p[r * n + c];
  }
  b1 = p.segment(o.b1, h);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < h; ++c) W2(r, c) = p[o.W2 + r * h + c];
  }
  b2 = p.segment(o.b2, k);
}

void ShallowNet::add_to_params(const Eigen::Ref<const Vec>& delta) {
  if (delta.size() != param_count()) throw DimensionError("ShallowNet::add_to_params: wrong size");
  const Offsets o = offsets(*this);
  const Eigen::Index h = hidden(), n = n_in(), k = n_out();
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) W1(r, c) += delta[r * n + c];
  }
  b1 += delta.segment(o.b1, h);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < h; ++c) W2(r, c) += delta[o.W2 + r * h + c];
  }
  b2 += delta.segment(o.b2, k);
}

Vec net_eval(const ShallowNet& net, const Eigen::Ref<const Vec>& x) {
  check_input(net, x);
  Vec z = net.W1 * x + net.b1;
  if (net.activation == Activation::Tanh) {
    z = z.array().tanh();
  } else {
    z = z.cwiseMax(0.0);
  }
  return net.W2 * z + net.b2;
}

Mat net_param_grad(const ShallowNet& net, const Eigen::Ref<const Vec>& x) {
  check_input(net, x);
  const Eigen::Index h = net.hidden(), n = net.n_in(), k = net.n_out();
  const Offsets o = offsets(net);
  const Vec z = net.W1 * x + net.b1;
  Vec a(h), da(h);
  for (Eigen::Index j = 0; j < h; ++j) {
    if (net.activation == Activation::Tanh) {
      a[j] = std::tanh(z[j]);
      da[j] = 1.0 - a[j] * a[j];
    } else {
      a[j] = z[j] > 0.0 ? z[j] : 0.0;
      da[j] = z[j] > 0.0 ? 1.0 : 0.0;
    }
  }
  Mat jac = Mat::Zero(k, net.param_count());
  for (Eigen::Index out = 0; out < k; ++out) {
    for (Eigen::Index j = 0; j < h; ++j) {
      const double back = net.W2(out, j) * da[j];
      if (back != 0.0) {
        for (Eigen::Index c = 0; c < n; ++c) jac(out, j * n + c) = back * x[c];
      }
      jac(out, o.b1 + j) = back;
      jac(out, o.W2 + out * h + j) = a[j];
    }
    jac(out, o.b2 + out) = 1.0;
  }
  return jac;
}

namespace {

struct TanhLayer {
  Vec a, s, s1, s2;  // tanh, sech^2 and its first two z-derivatives
};

TanhLayer tanh_layer(const ShallowNet& net, const Eigen::Ref<const Vec>& x) {
  const Vec z = net.W1 * x + net.b1;
  TanhLayer l{z.array().tanh(), Vec(z.size()), Vec(z.size()), Vec(z.size())};
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const double a = l.a[k];
    const double s = 1.0 - a * a;
    l.s[k] = s;
    l.s1[k] = -2.0 * a * s;
    l.s2[k] = -2.0 * s * s + 4.0 * a * a * s;
  }
  return l;
}

}  // namespace

InputDerivs net_input_derivs(const ShallowNet& net, const Eigen::Ref<const Vec>& x) {
  check_input(net, x);
  require_scalar_tanh(net, "net_input_derivs");
  const TanhLayer l = tanh_layer(net, x);
  const Vec w2 = net.W2.row(0).transpose();
  InputDerivs d;
  d.value = w2.dot(l.a) + net.b2[0];
  d.grad = net.W1.transpose() * w2.cwiseProduct(l.s);
  d.hess = net.W1.transpose() * w2.cwiseProduct(l.s1).asDiagonal() * net.W1;
  return d;
}

MixedDerivs net_mixed_derivs(const ShallowNet& net, const Eigen::Ref<const Vec>& x) {
  check_input(net, x);
  require_scalar_tanh(net, "net_mixed_derivs");
  const Eigen::Index h = net.hidden(), n = net.n_in();
  const Offsets o = offsets(net);
  const TanhLayer l = tanh_layer(net, x);
  const auto& W1 = net.W1;
  MixedDerivs out{Vec::Zero(net.param_count()), Mat::Zero(n, net.param_count()),
                  Mat::Zero(n * n, net.param_count())};

  for (Eigen::Index k = 0; k < h; ++k) {
    const double w2 = net.W2(0, k);
    // Q
    for (Eigen::Index c = 0; c < n; ++c) out.grad_value[k * n + c] = w2 * l.s[k] * x[c];
    out.grad_value[o.b1 + k] = w2 * l.s[k];
    out.grad_value[o.W2 + k] = l.a[k];
    // dQ/dx_i
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < n; ++c) {
        out.grad_dx(i, k * n + c) = w2 * (l.s1[k] * x[c] * W1(k, i) + (i == c ? l.s[k] : 0.0));
      }
      out.grad_dx(i, o.b1 + k) = w2 * l.s1[k] * W1(k, i);
      out.grad_dx(i, o.W2 + k) = l.s[k] * W1(k, i);
    }
    // d2Q/dx_i dx_j
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index row = i + n * j;
        const double ww = W1(k, i) * W1(k, j);
        for (Eigen::Index c = 0; c < n; ++c) {
          double v = l.s2[k] * x[c] * ww;
          if (c == i) v += l.s1[k] * W1(k, j);
          if (c == j) v += l.s1[k] * W1(k, i);
          out.grad_dxx(row, k * n + c) = w2 * v;
        }
        out.grad_dxx(row, o.b1 + k) = w2 * l.s2[k] * ww;
        out.grad_dxx(row, o.W2 + k) = l.s1[k] * ww;
      }
    }
  }
  out.grad_value[o.b2] = 1.0;
  return out;
}

FunctionalValue net_functional(const ShallowNet& net, const Eigen::Ref<const Vec>& x, double c0,
                               const Eigen::Ref<const Vec>& g, const Eigen::Ref<const Mat>& H) {
  check_input(net, x);
  require_scalar_tanh(net, "net_functional");
  const Eigen::Index h = net.hidden(), n = net.n_in();
  if (g.size() != n || H.rows() != n || H.cols() != n) {
    throw DimensionError("net_functional: coefficient shapes do not match the input dimension");
  }
  const Offsets o = offsets(net);
  const TanhLayer l = tanh_layer(net, x);
  const Mat Hs = 0.5 * (H + H.transpose());
  const Vec u = net.W1 * g;
  const Mat W1H = net.W1 * Hs;  // h x n
  FunctionalValue out{0.0, net.b2[0], Vec(net.param_count())};
  double value = c0 * net.b2[0];
  for (Eigen::Index k = 0; k < h; ++k) {
    const double w2 = net.W2(0, k);
    const double v = W1H.row(k).dot(net.W1.row(k));
    const double phi = c0 * l.a[k] + l.s[k] * u[k] + l.s1[k] * v;
    const double psi = c0 * l.s[k] + l.s1[k] * u[k] + l.s2[k] * v;
    value += w2 * phi;
    out.q += w2 * l.a[k];
    for (Eigen::Index c = 0; c < n; ++c) {
      out.grad[k * n + c] = w2 * (psi * x[c] + l.s[k] * g[c] + 2.0 * l.s1[k] * W1H(k, c));
    }
    out.grad[o.b1 + k] = w2 * psi;
    out.grad[o.W2 + k] = phi;
  }
  out.grad[o.b2] = c0;
  out.value = value;
  return out;
}

void write_net_csv(std::ostream& out, const ShallowNet& net) {
  net.validate();
  out << "n_in," << net.n_in() << '\n'
      << "hidden," << net.hidden() << '\n'
      << "n_out," << net.n_out() << '\n'
      << "activation," << to_string(net.activation) << '\n';
  const ParamVector p = net.params();
  for (Eigen::Index i = 0; i < p.size(); ++i) out << format_double(p[i]) << '\n';
}

ShallowNet read_net_csv(std::istream& in) {
  auto header = [&in](const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("net csv: missing header " + key);
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.substr(0, comma) != key) {
      throw DomainError("net csv: expected header " + key);
    }
    return line.substr(comma + 1);
  };
  const long n_in = std::stol(header("n_in"));
  const long hidden = std::stol(header("hidden"));
  const long n_out = std::stol(header("n_out"));
  const Activation act = activation_from_string(header("activation"));
  if (n_in < 1 || hidden < 1 || n_out < 1) throw DomainError("net csv: dimensions must be positive");
  ShallowNet net(n_in, hidden, n_out, act);
  ParamVector p(net.param_count());
  std::string line;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::getline(in, line)) throw DomainError("net csv: truncated parameter list");
    p[i] = std::stod(line);
  }
  net.set_params(p);
  return net;
}

}  // namespace sgdct::approx
