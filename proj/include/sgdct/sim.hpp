#pragma once

// Path simulation: Euler-Maruyama with correlated Brownian increments, the
// full-truncation CIR scheme and the explicit Burgers scheme, plus conversion
// of sampled paths into observation streams.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "sgdct/core.hpp"
#include "sgdct/linalg.hpp"
#include "sgdct/models.hpp"

namespace sgdct::sim {

/// (seed, stream_id) identifies an independent, reproducible substream.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// splitmix64 finalizer; used to decorrelate (seed, stream_id) pairs.
std::uint64_t mix64(std::uint64_t z);

/// Seeded generator with a standard normal source. Value type; copy to fork.
class Rng {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit Rng(RngSpec spec);
  Rng(std::uint64_t seed, std::uint64_t stream_id) : Rng(RngSpec{seed, stream_id}) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  void fill_normal(Eigen::Ref<Vec> out);

  // UniformRandomBitGenerator
  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

struct BrownianSpec {
  Eigen::Index d = 1;
  Mat correlation;  ///< d x d, unit diagonal, symmetric PSD; empty means identity

  static BrownianSpec identity(Eigen::Index d);
  static BrownianSpec equicorrelated(Eigen::Index d, double rho);
};

/// Precomputed factor L with L L^T = correlation (Cholesky, or a symmetric
/// eigen factor when the matrix is only semidefinite).
class CorrelatedBrownian {
 public:
  /// Throws FactorizationError when the correlation is not symmetric PSD with
  /// unit diagonal.
  explicit CorrelatedBrownian(const BrownianSpec& spec);

  Eigen::Index dim() const { return factor_.rows(); }
  const Mat& factor() const { return factor_; }

  /// L z sqrt(dt), z standard normal.
  Vec increments(double dt, Rng& rng) const;
  void increments_into(double dt, Rng& rng, Eigen::Ref<Vec> out, Eigen::Ref<Vec> scratch) const;

 private:
  Mat factor_;
  bool identity_ = false;
};

Vec correlated_increments(const BrownianSpec& spec, double dt, Rng& rng);

/// x' = x + drift dt + diffusion_apply(dW). Throws DivergenceError (step -1)
/// for a non-finite result and std::invalid_argument for dt <= 0.
Vec euler_step(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& drift,
               const std::function<Vec(const Eigen::Ref<const Vec>&)>& diffusion_apply, double dt,
               const Eigen::Ref<const Vec>& dW);

/// Constant-matrix diffusion overload: x' = x + drift dt + sigma dW.
Vec euler_step(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& drift, const Mat& sigma,
               double dt, const Eigen::Ref<const Vec>& dW);

/// Full truncation: x+ = max(x, 0),
/// x' = max(x + c (m - x+) dt + diag(sqrt(x+)) nu dW, 0).
Vec cir_step(const Eigen::Ref<const Vec>& x, const models::CirParams& p, double dt,
             const Eigen::Ref<const Vec>& dW);

/// u'_i = u_i + f_i(u) dt + sigma_noise / sqrt(dx) dW_i. Throws DivergenceError
/// naming the node on a non-finite value.
Vec burgers_step(const Eigen::Ref<const Vec>& u, const models::BurgersParams& p, double dt,
                 const Eigen::Ref<const Vec>& dW);

/// In-place variant; `f` and `lap` are scratch of size n_interior.
void burgers_step_inplace(Eigen::Ref<Vec> u, const models::BurgersParams& p, double dt,
                          const Eigen::Ref<const Vec>& dW, Eigen::Ref<Vec> f, Eigen::Ref<Vec> lap);

/// Number of equal substeps of `dt` that keeps theta dt_sub / dx^2 <= max_number.
int burgers_stable_substeps(double theta, double dt, double dx, double max_number = 0.4);

// ---------------------------------------------------------------------------
// Sampled paths and streams

struct SampledPath {
  std::vector<double> t;
  std::vector<Vec> x;

  std::size_t size() const { return t.size(); }
  void push(double time, Vec state) {
    t.push_back(time);
    x.push_back(std::move(state));
  }
};

enum class StreamMode { DriftOnly, DriftAndQv };

/// Increments between consecutive retained points (every `stride` points).
/// dqv = dx dx^T in DriftAndQv mode. Throws DomainError for non-increasing t.
core::ObservationStream path_to_stream(const SampledPath& path, StreamMode mode, std::size_t stride = 1);

/// CSV with header `t,x_1,...,x_m`, every `stride`-th point.
void write_path_csv(std::ostream& out, const SampledPath& path, std::size_t stride = 1);

/// 1-d OU path by Euler-Maruyama with unit diffusion.
SampledPath simulate_ou1d(const models::Ou1dParams& p, double x0, double dt, std::int64_t n_steps, Rng& rng);

/// CIR path with the full-truncation scheme.
SampledPath simulate_cir(const models::CirParams& p, const Vec& x0, double dt, std::int64_t n_steps,
                         Rng& rng);

}  // namespace sgdct::sim
