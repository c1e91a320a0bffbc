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

#include "cgp/kernels.h"

#include <cmath>
#include <string>

#include "cgp/errors.h"

namespace cgp {
namespace {

constexpr double kSqrt3 = 1.7320508075688772;

double MaternValue(const Matern32& k, double t1, double t2) {
  const double s = kSqrt3 * std::abs(t1 - t2) / k.lengthscale;
  return k.variance * (1.0 + s) * std::exp(-s);
}

double IouValue(const IOU& k, double t1, double t2) {
  const double a = k.alpha;
  const double m = std::min(t1, t2);
  const double d = std::abs(t1 - t2);
  const double c = k.nu * k.nu / (2.0 * a * a * a);
  return c * (2.0 * a * m + std::exp(-a * t1) + std::exp(-a * t2) - 1.0 -
              std::exp(-a * d));
}

Eigen::Vector3d Phi(double t) { return {1.0, t, t * t}; }

int LowerIndex(int i, int j) { return i * (i + 1) / 2 + j; }

void GetParamsRec(const KernelSpec& spec, std::span<double> out, int& pos) {
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Matern32>) {
          out[pos++] = std::log(k.variance);
          out[pos++] = std::log(k.lengthscale);
        } else if constexpr (std::is_same_v<T, IOU>) {
          out[pos++] = std::log(k.alpha);
          out[pos++] = std::log(k.nu);
        } else if constexpr (std::is_same_v<T, QuadPoly>) {
          Eigen::LLT<Eigen::Matrix3d> llt(k.sigma);
          if (llt.info() != Eigen::Success) {
            throw ValidationError("QuadPoly sigma is not positive definite");
          }
          const Eigen::Matrix3d l = llt.matrixL();
          for (int i = 0; i < 3; ++i) {
            for (int j = 0; j <= i; ++j) {
              out[pos++] = i == j ? std::log(l(i, i)) : l(i, j) / l(i, i);
            }
          }
        } else if constexpr (std::is_same_v<T, WhiteNoise>) {
          out[pos++] = std::log(k.sigma);
        } else {
          for (const KernelSpec& t : k.terms) GetParamsRec(t, out, pos);
        }
      },
      spec.v);
}

KernelSpec WithParamsRec(const KernelSpec& spec, std::span<const double> p,
                         int& pos) {
  return std::visit(
      [&](const auto& k) -> KernelSpec {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Matern32>) {
          Matern32 r{std::exp(p[pos]), std::exp(p[pos + 1])};
          pos += 2;
          return r;
        } else if constexpr (std::is_same_v<T, IOU>) {
          IOU r{std::exp(p[pos]), std::exp(p[pos + 1])};
          pos += 2;
          return r;
        } else if constexpr (std::is_same_v<T, QuadPoly>) {
          Eigen::Matrix3d l = Eigen::Matrix3d::Zero();
          for (int i = 0; i < 3; ++i) {
            const double diag = std::exp(p[pos + LowerIndex(i, i)]);
            for (int j = 0; j < i; ++j) l(i, j) = p[pos + LowerIndex(i, j)] * diag;
            l(i, i) = diag;
          }
          pos += 6;
          QuadPoly r;
          r.sigma = l * l.transpose();
          return r;
        } else if constexpr (std::is_same_v<T, WhiteNoise>) {
          return WhiteNoise{std::exp(p[pos++])};
        } else {
          SumKernel s;
          for (const KernelSpec& t : k.terms) {
            s.terms.push_back(WithParamsRec(t, p, pos));
          }
          return s;
        }
      },
      spec.v);
}

}  // namespace

KernelSpec Sum(std::vector<KernelSpec> terms) {
  return SumKernel{std::move(terms)};
}

void ValidateKernel(const KernelSpec& spec) {
  std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        auto positive = [](double v, const char* name) {
          if (!(v > 0) || !std::isfinite(v)) {
            throw ValidationError(std::string("kernel parameter ") + name +
                                  " must be positive and finite");
          }
        };
        if constexpr (std::is_same_v<T, Matern32>) {
          positive(k.variance, "variance");
          positive(k.lengthscale, "lengthscale");
        } else if constexpr (std::is_same_v<T, IOU>) {
          positive(k.alpha, "alpha");
          positive(k.nu, "nu");
        } else if constexpr (std::is_same_v<T, QuadPoly>) {
          if (!k.sigma.allFinite() ||
              (k.sigma - k.sigma.transpose()).cwiseAbs().maxCoeff() >
                  1e-12 * (1.0 + k.sigma.cwiseAbs().maxCoeff())) {
            throw ValidationError("QuadPoly sigma must be symmetric");
          }
          Eigen::LLT<Eigen::Matrix3d> llt(k.sigma);
          if (llt.info() != Eigen::Success) {
            throw ValidationError("QuadPoly sigma must be positive definite");
          }
        } else if constexpr (std::is_same_v<T, WhiteNoise>) {
          positive(k.sigma, "sigma");
        } else {
          if (k.terms.empty()) throw ValidationError("empty kernel sum");
          for (const KernelSpec& t : k.terms) ValidateKernel(t);
        }
      },
      spec.v);
}

FlatKernel::FlatKernel(const KernelSpec& spec) { Add(spec); }

void FlatKernel::Add(const KernelSpec& spec) {
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, SumKernel>) {
          for (const KernelSpec& t : k.terms) Add(t);
        } else {
          offsets_.push_back(param_count_);
          if constexpr (std::is_same_v<T, QuadPoly>) {
            Eigen::LLT<Eigen::Matrix3d> llt(k.sigma);
            leaves_.push_back(PolyLeaf{k.sigma, llt.matrixL()});
            param_count_ += 6;
          } else if constexpr (std::is_same_v<T, WhiteNoise>) {
            leaves_.push_back(k);
            param_count_ += 1;
          } else {
            leaves_.push_back(k);
            param_count_ += 2;
          }
        }
      },
      spec.v);
}

double FlatKernel::operator()(double t1, double t2, bool same_index) const {
  double total = 0.0;
  for (const Leaf& leaf : leaves_) {
    total += std::visit(
        [&](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Matern32>) {
            return MaternValue(k, t1, t2);
          } else if constexpr (std::is_same_v<T, IOU>) {
            return IouValue(k, t1, t2);
          } else if constexpr (std::is_same_v<T, PolyLeaf>) {
            return Phi(t1).dot(k.sigma * Phi(t2));
          } else {
            return same_index ? k.sigma * k.sigma : 0.0;
          }
        },
        leaf);
  }
  return total;
}

void FlatKernel::GradientAccumulate(double t1, double t2, bool same_index,
                                    double scale,
                                    std::span<double> out) const {
  for (size_t li = 0; li < leaves_.size(); ++li) {
    double* g = out.data() + offsets_[li];
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Matern32>) {
            const double s = kSqrt3 * std::abs(t1 - t2) / k.lengthscale;
            const double e = std::exp(-s);
            g[0] += scale * k.variance * (1.0 + s) * e;
            g[1] += scale * k.variance * s * s * e;
          } else if constexpr (std::is_same_v<T, IOU>) {
            const double a = k.alpha;
            const double m = std::min(t1, t2);
            const double d = std::abs(t1 - t2);
            const double c = k.nu * k.nu / (2.0 * a * a * a);
            const double e1 = std::exp(-a * t1);
            const double e2 = std::exp(-a * t2);
            const double ed = std::exp(-a * d);
            const double value = c * (2.0 * a * m + e1 + e2 - 1.0 - ed);
            const double dvalue_da =
                -3.0 * value / a + c * (2.0 * m - t1 * e1 - t2 * e2 + d * ed);
            g[0] += scale * a * dvalue_da;
            g[1] += scale * 2.0 * value;
          } else if constexpr (std::is_same_v<T, PolyLeaf>) {
            const Eigen::Vector3d p1 = Phi(t1);
            const Eigen::Vector3d p2 = Phi(t2);
            const Eigen::Vector3d lp1 = k.chol.transpose() * p1;
            const Eigen::Vector3d lp2 = k.chol.transpose() * p2;
            for (int i = 0; i < 3; ++i) {
              double row = 0.0;  // d k / d log L(i,i) scales the whole row
              for (int j = 0; j <= i; ++j) {
                const double dk = p1[i] * lp2[j] + p2[i] * lp1[j];
                row += k.chol(i, j) * dk;
                if (j < i) g[LowerIndex(i, j)] += scale * k.chol(i, i) * dk;
              }
              g[LowerIndex(i, i)] += scale * row;
            }
          } else {
            if (same_index) g[0] += scale * 2.0 * k.sigma * k.sigma;
          }
        },
        leaves_[li]);
  }
}

double KernelEval(const KernelSpec& spec, double t1, double t2) {
  return FlatKernel(spec)(t1, t2, t1 == t2);
}

Eigen::MatrixXd KernelMatrix(const KernelSpec& spec,
                             std::span<const double> times) {
  const FlatKernel k(spec);
  const Eigen::Index n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = k(times[i], times[j], i == j);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

Eigen::MatrixXd LatentCrossCovariance(const KernelSpec& spec,
                                      std::span<const double> a,
                                      std::span<const double> b) {
  const FlatKernel k(spec);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()),
                      static_cast<Eigen::Index>(b.size()));
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) out(i, j) = k(a[i], b[j], false);
  }
  return out;
}

int CountWhiteNoise(const KernelSpec& spec) {
  if (std::holds_alternative<WhiteNoise>(spec.v)) return 1;
  if (const auto* s = std::get_if<SumKernel>(&spec.v)) {
    int n = 0;
    for (const KernelSpec& t : s->terms) n += CountWhiteNoise(t);
    return n;
  }
  return 0;
}

double NoiseVariance(const KernelSpec& spec) {
  if (const auto* w = std::get_if<WhiteNoise>(&spec.v)) {
    return w->sigma * w->sigma;
  }
  if (const auto* s = std::get_if<SumKernel>(&spec.v)) {
    double v = 0.0;
    for (const KernelSpec& t : s->terms) v += NoiseVariance(t);
    return v;
  }
  return 0.0;
}

GramFactor FactorGram(Eigen::MatrixXd gram) {
  GramFactor f;
  const Eigen::Index n = gram.rows();
  if (n == 0) {
    f.llt.compute(gram);
    return f;
  }
  if (!gram.allFinite()) throw NumericalError("non-finite Gram matrix");
  const double mean_diag = gram.diagonal().mean();
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 5; ++attempt) {
    if (attempt > 0) {
      const double next = mean_diag * std::pow(10.0, -9 + attempt);
      gram.diagonal().array() += next - jitter;
      jitter = next;
    }
    f.llt.compute(gram);
    if (f.llt.info() == Eigen::Success &&
        (f.llt.matrixLLT().diagonal().array() > 0).all()) {
      f.jitter = jitter;
      return f;
    }
  }
  throw NumericalError("Gram matrix not positive definite after jitter " +
                       std::to_string(jitter));
}

int KernelParamCount(const KernelSpec& spec) {
  return FlatKernel(spec).param_count();
}

void KernelGetParams(const KernelSpec& spec, std::span<double> out) {
  int pos = 0;
  GetParamsRec(spec, out, pos);
}

KernelSpec KernelWithParams(const KernelSpec& spec,
                            std::span<const double> params) {
  int pos = 0;
  return WithParamsRec(spec, params, pos);
}

}  // namespace cgp
