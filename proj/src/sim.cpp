#include "sgdct/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "sgdct/error.hpp"
#include "sgdct/format.hpp"

namespace sgdct::sim {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(RngSpec spec) {
  const std::uint64_t a = mix64(spec.seed);
  const std::uint64_t b = mix64(a ^ mix64(spec.stream_id + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

void Rng::fill_normal(Eigen::Ref<Vec> out) {
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal_(engine_);
}

BrownianSpec BrownianSpec::identity(Eigen::Index d) { return BrownianSpec{d, Mat::Identity(d, d)}; }

BrownianSpec BrownianSpec::equicorrelated(Eigen::Index d, double rho) {
  Mat c = Mat::Constant(d, d, rho);
  c.diagonal().setOnes();
  return BrownianSpec{d, c};
}

CorrelatedBrownian::CorrelatedBrownian(const BrownianSpec& spec) {
  const Eigen::Index d = spec.d;
  if (d < 1) throw FactorizationError("BrownianSpec: d must be >= 1");
  Mat rho = spec.correlation.size() == 0 ? Mat::Identity(d, d) : spec.correlation;
  if (rho.rows() != d || rho.cols() != d) throw FactorizationError("BrownianSpec: correlation must be d x d");
  if ((rho - rho.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw FactorizationError("BrownianSpec: correlation is not symmetric");
  }
  if ((rho.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) {
    throw FactorizationError("BrownianSpec: correlation needs a unit diagonal");
  }
  identity_ = rho.isIdentity(0.0);
  Eigen::LLT<Mat> llt(rho);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
    return;
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(rho);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw FactorizationError("BrownianSpec: correlation is not positive semidefinite");
  }
  factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

void CorrelatedBrownian::increments_into(double dt, Rng& rng, Eigen::Ref<Vec> out,
                                         Eigen::Ref<Vec> scratch) const {
  if (dt < 0.0) throw std::invalid_argument("increments: dt must be >= 0");
  const double s = std::sqrt(dt);
  if (identity_) {
    rng.fill_normal(out);
    out *= s;
    return;
  }
  rng.fill_normal(scratch);
  out.noalias() = factor_ * scratch;
  out *= s;
}

Vec CorrelatedBrownian::increments(double dt, Rng& rng) const {
  Vec out(dim());
  Vec scratch(dim());
  increments_into(dt, rng, out, scratch);
  return out;
}

Vec correlated_increments(const BrownianSpec& spec, double dt, Rng& rng) {
  return CorrelatedBrownian(spec).increments(dt, rng);
}

Vec euler_step(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& drift,
               const std::function<Vec(const Eigen::Ref<const Vec>&)>& diffusion_apply, double dt,
               const Eigen::Ref<const Vec>& dW) {
  if (!(dt > 0.0)) throw std::invalid_argument("euler_step: dt must be positive");
  if (drift.size() != x.size()) throw DimensionError("euler_step: drift size differs from state size");
  Vec next = x + drift * dt + diffusion_apply(dW);
  if (!next.allFinite()) throw DivergenceError("euler_step produced a non-finite state", -1, 0.0);
  return next;
}

Vec euler_step(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& drift, const Mat& sigma,
               double dt, const Eigen::Ref<const Vec>& dW) {
  if (sigma.rows() != x.size() || sigma.cols() != dW.size()) {
    throw DimensionError("euler_step: sigma has the wrong shape");
  }
  return euler_step(x, drift, [&](const Eigen::Ref<const Vec>& w) -> Vec { return sigma * w; }, dt, dW);
}

Vec cir_step(const Eigen::Ref<const Vec>& x, const models::CirParams& p, double dt,
             const Eigen::Ref<const Vec>& dW) {
  const Eigen::Index d = p.dim();
  if (x.size() != d || dW.size() != d) throw DimensionError("cir_step: dimension mismatch");
  const Vec xp = x.cwiseMax(0.0);
  Vec next = x + p.c * (p.m - xp) * dt + xp.cwiseSqrt().asDiagonal() * (p.nu * dW);
  if (!next.allFinite()) throw DivergenceError("cir_step produced a non-finite state", -1, 0.0);
  return next.cwiseMax(0.0);
}

void burgers_step_inplace(Eigen::Ref<Vec> u, const models::BurgersParams& p, double dt,
                          const Eigen::Ref<const Vec>& dW, Eigen::Ref<Vec> f, Eigen::Ref<Vec> lap) {
  if (dW.size() != p.n_interior) throw DimensionError("burgers_step: dW has the wrong size");
  models::burgers_drift_into(u, p, p.theta, f, lap);
  const double noise = p.sigma_noise / std::sqrt(p.dx_grid);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double v = u[i] + f[i] * dt + noise * dW[i];
    if (!std::isfinite(v)) {
      throw DivergenceError("burgers_step: non-finite value at node " + std::to_string(i), -1, 0.0);
    }
    u[i] = v;
  }
}

Vec burgers_step(const Eigen::Ref<const Vec>& u, const models::BurgersParams& p, double dt,
                 const Eigen::Ref<const Vec>& dW) {
  Vec out = u;
  Vec f(p.n_interior), lap(p.n_interior);
  burgers_step_inplace(out, p, dt, dW, f, lap);
  return out;
}

int burgers_stable_substeps(double theta, double dt, double dx, double max_number) {
  const double number = models::burgers_diffusion_number(theta, dt, dx);
  return std::max(1, static_cast<int>(std::ceil(number / max_number - 1e-12)));
}

// ---------------------------------------------------------------------------

core::ObservationStream path_to_stream(const SampledPath& path, StreamMode mode, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("path_to_stream: stride must be >= 1");
  if (path.t.size() != path.x.size()) throw DimensionError("path_to_stream: t and x lengths differ");
  for (std::size_t k = 1; k < path.t.size(); ++k) {
    if (!(path.t[k] > path.t[k - 1])) throw DomainError("path_to_stream: timestamps must be strictly increasing");
  }
  core::ObservationStream stream;
  for (std::size_t k = 0; k + stride < path.size(); k += stride) {
    Vec dx = path.x[k + stride] - path.x[k];
    Mat dqv;
    if (mode == StreamMode::DriftAndQv) dqv = dx * dx.transpose();
    stream.emplace_back(path.t[k], path.x[k], std::move(dx), std::move(dqv), path.t[k + stride] - path.t[k]);
  }
  return stream;
}

void write_path_csv(std::ostream& out, const SampledPath& path, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("write_path_csv: stride must be >= 1");
  const Eigen::Index m = path.x.empty() ? 0 : path.x.front().size();
  out << "t";
  for (Eigen::Index i = 1; i <= m; ++i) out << ",x_" << i;
  out << '\n';
  for (std::size_t k = 0; k < path.size(); k += stride) {
    out << format_double(path.t[k]);
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double(path.x[k][i]);
    out << '\n';
  }
}

SampledPath simulate_ou1d(const models::Ou1dParams& p, double x0, double dt, std::int64_t n_steps, Rng& rng) {
  SampledPath path;
  path.t.reserve(static_cast<std::size_t>(n_steps) + 1);
  path.x.reserve(static_cast<std::size_t>(n_steps) + 1);
  double x = x0;
  const double s = std::sqrt(dt);
  path.push(0.0, Vec::Constant(1, x));
  for (std::int64_t k = 1; k <= n_steps; ++k) {
    x += p.c * (p.m - x) * dt + s * rng.normal();
    path.push(dt * static_cast<double>(k), Vec::Constant(1, x));
  }
  return path;
}

SampledPath simulate_cir(const models::CirParams& p, const Vec& x0, double dt, std::int64_t n_steps,
                         Rng& rng) {
  SampledPath path;
  Vec x = x0;
  Vec dW(p.dim());
  const double s = std::sqrt(dt);
  path.push(0.0, x);
  for (std::int64_t k = 1; k <= n_steps; ++k) {
    rng.fill_normal(dW);
    dW *= s;
    x = cir_step(x, p, dt, dW);
    path.push(dt * static_cast<double>(k), x);
  }
  return path;
}

}  // namespace sgdct::sim
