/*
 * Copyright 2026 The CGP Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Covariance functions for outcome processes. A KernelSpec is a tagged union
// over the supported families; sums compose them. Every family exposes its
// parameters in an unconstrained coordinate system (logs of scales, Cholesky
// factor entries for the polynomial weight matrix) so optimizers can work
// without bounds.

#ifndef CGP_KERNELS_H_
#define CGP_KERNELS_H_

#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace cgp {

struct Matern32 {
  double variance = 1.0;
  double lengthscale = 1.0;
  bool operator==(const Matern32&) const = default;
};

// Integrated Ornstein-Uhlenbeck process started at zero at t = 0.
struct IOU {
  double alpha = 1.0;
  double nu = 1.0;
  bool operator==(const IOU&) const = default;
};

// phi(t1)' Sigma phi(t2) with phi(t) = [1, t, t^2].
struct QuadPoly {
  Eigen::Matrix3d sigma = Eigen::Matrix3d::Identity();
  bool operator==(const QuadPoly& o) const { return sigma == o.sigma; }
};

// Independent observation noise with standard deviation `sigma`.
struct WhiteNoise {
  double sigma = 0.1;
  bool operator==(const WhiteNoise&) const = default;
};

struct KernelSpec;

struct SumKernel {
  std::vector<KernelSpec> terms;
  bool operator==(const SumKernel&) const;
};

struct KernelSpec {
  std::variant<Matern32, IOU, QuadPoly, WhiteNoise, SumKernel> v;

  KernelSpec() = default;
  template <typename T>
  KernelSpec(T term) : v(std::move(term)) {}  // NOLINT: implicit by design

  bool operator==(const KernelSpec&) const = default;
};

inline bool SumKernel::operator==(const SumKernel& o) const {
  return terms == o.terms;
}

KernelSpec Sum(std::vector<KernelSpec> terms);

// Throws ValidationError for non-positive scales or a Sigma that is not
// symmetric positive definite.
void ValidateKernel(const KernelSpec& spec);

// k(t1, t2). White noise contributes sigma^2 iff t1 == t2.
double KernelEval(const KernelSpec& spec, double t1, double t2);

// Gram matrix over `times`. White noise is placed on the diagonal by index, so
// repeated times still get independent noise. No jitter is added here.
Eigen::MatrixXd KernelMatrix(const KernelSpec& spec,
                             std::span<const double> times);

// Noise-free covariance between two sets of times.
Eigen::MatrixXd LatentCrossCovariance(const KernelSpec& spec,
                                      std::span<const double> a,
                                      std::span<const double> b);

// Number of WhiteNoise terms anywhere in the spec and their summed variance.
int CountWhiteNoise(const KernelSpec& spec);
double NoiseVariance(const KernelSpec& spec);

// Cholesky factorization with jitter escalation: first tries the matrix as
// given, then adds 1e-8, 1e-7, ..., 1e-4 times the mean diagonal. Throws
// NumericalError when every attempt fails.
struct GramFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};
GramFactor FactorGram(Eigen::MatrixXd gram);

// Unconstrained parameterization.
//   Matern32   [log variance, log lengthscale]
//   IOU        [log alpha, log nu]
//   QuadPoly   [log L00, r10, log L11, r20, r21, log L22], Sigma = L L',
//              with off-diagonals relative to their row: L(i,j) = r_ij L(i,i)
//   WhiteNoise [log sigma]
//   Sum        concatenation of its terms
int KernelParamCount(const KernelSpec& spec);
void KernelGetParams(const KernelSpec& spec, std::span<double> out);
KernelSpec KernelWithParams(const KernelSpec& spec,
                            std::span<const double> params);

// A spec with sums flattened into a list of leaves and per-leaf parameter
// offsets precomputed. Used in the inner loops of likelihood evaluation.
class FlatKernel {
 public:
  explicit FlatKernel(const KernelSpec& spec);

  // `same_index` marks diagonal Gram entries, where white noise is active.
  double operator()(double t1, double t2, bool same_index) const;

  // out[p] += scale * d k(t1, t2) / d param_p in unconstrained coordinates.
  void GradientAccumulate(double t1, double t2, bool same_index, double scale,
                          std::span<double> out) const;

  int param_count() const { return param_count_; }

 private:
  struct PolyLeaf {
    Eigen::Matrix3d sigma;
    Eigen::Matrix3d chol;  // lower factor of sigma
  };
  using Leaf = std::variant<Matern32, IOU, PolyLeaf, WhiteNoise>;
  void Add(const KernelSpec& spec);

  std::vector<Leaf> leaves_;
  std::vector<int> offsets_;
  int param_count_ = 0;
};

}  // namespace cgp

#endif  // CGP_KERNELS_H_
