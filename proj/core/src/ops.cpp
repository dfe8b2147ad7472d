// Copyright 2026 The BoltzGate Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "boltzgate/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <string>

#include "linalg.hpp"

namespace boltzgate {
namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void gemm_acc(const double* a, std::size_t a_rows, std::size_t a_cols, bool trans_a,
              const double* b, std::size_t b_rows, std::size_t b_cols, bool trans_b,
              double* c) {
  const auto ar = static_cast<Eigen::Index>(a_rows);
  const auto ac = static_cast<Eigen::Index>(a_cols);
  const auto br = static_cast<Eigen::Index>(b_rows);
  const auto bc = static_cast<Eigen::Index>(b_cols);
  Eigen::Map<const RowMat> A(a, ar, ac);
  Eigen::Map<const RowMat> B(b, br, bc);
  const Eigen::Index n = trans_a ? ac : ar;
  const Eigen::Index m = trans_b ? br : bc;
  Eigen::Map<RowMat> C(c, n, m);
  if (!trans_a && !trans_b) {
    C.noalias() += A * B;
  } else if (trans_a && !trans_b) {
    C.noalias() += A.transpose() * B;
  } else if (!trans_a && trans_b) {
    C.noalias() += A * B.transpose();
  } else {
    C.noalias() += A.transpose() * B.transpose();
  }
}

}  // namespace detail

namespace ops {
namespace {

void check_same(const Var& a, const Var& b, const char* what) {
  require_same_shape(a.value(), b.value(), what);
}

void check_rank(const Var& a, std::size_t rank, const char* what) {
  if (a.value().rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                     ", got " + shape_to_string(a.shape()));
  }
}

template <typename F>
Tensor map_values(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

// Records an elementwise unary op whose derivative depends on input x and output y.
template <typename F, typename D>
Var unary(Var a, F f, D dfdx) {
  Tensor out = map_values(a.value(), f);
  return a.tape().record(std::move(out), {a}, [a, dfdx](Tape& tape, const Tensor& g) {
    Tensor* ga = tape.grad_target(a);
    if (!ga) return;
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < x.size(); ++i) (*ga)[i] += g[i] * dfdx(x[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  check_same(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    if (Tensor* ga = tape.grad_target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (Tensor* gb = tape.grad_target(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
  });
}

Var sub(Var a, Var b) {
  check_same(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    if (Tensor* ga = tape.grad_target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (Tensor* gb = tape.grad_target(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  check_same(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (Tensor* ga = tape.grad_target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    if (Tensor* gb = tape.grad_target(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double) { return c; });
}

Var scale_by(Var a, Var c) {
  if (c.value().size() != 1) throw ShapeError("scale_by: factor must be a scalar");
  const double cv = c.value()[0];
  Tensor out = a.value();
  for (auto& v : out.data()) v *= cv;
  return a.tape().record(std::move(out), {a, c}, [a, c](Tape& tape, const Tensor& g) {
    const double cv = c.value()[0];
    if (Tensor* ga = tape.grad_target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * cv;
    if (Tensor* gc = tape.grad_target(c)) {
      const Tensor& av = a.value();
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
      (*gc)[0] += acc;
    }
  });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Var add_const(Var a, const Tensor& c) {
  require_same_shape(a.value(), c, "add_const");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return a.tape().record(std::move(out), {a}, [a](Tape& tape, const Tensor& g) {
    if (Tensor* ga = tape.grad_target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
  });
}

Var mul_const(Var a, const Tensor& c) {
  require_same_shape(a.value(), c, "mul_const");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
  return a.tape().record(std::move(out), {a}, [a, c](Tape& tape, const Tensor& g) {
    if (Tensor* ga = tape.grad_target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * c[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record(Tensor::scalar(s), {a}, [a](Tape& tape, const Tensor& g) {
    if (Tensor* ga = tape.grad_target(a))
      for (auto& v : ga->data()) v += g[0];
  });
}

Var sigmoid(Var a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.value()[i];
    out[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  if (!a.requires_grad()) return a.tape().record(std::move(out), {a}, {});
  Tensor y = out;
  return a.tape().record(std::move(out), {a}, [a, y](Tape& tape, const Tensor& g) {
    Tensor* ga = tape.grad_target(a);
    if (!ga) return;
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var gelu(Var a) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [inv_sqrt_2pi](double x) {
        return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) +
               x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
      });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](double x) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var matmul(Var a, Var b, bool trans_a, bool trans_b) {
  check_rank(a, 2, "matmul");
  check_rank(b, 2, "matmul");
  const std::size_t ar = a.shape()[0], ac = a.shape()[1];
  const std::size_t br = b.shape()[0], bc = b.shape()[1];
  const std::size_t n = trans_a ? ac : ar;
  const std::size_t k = trans_a ? ar : ac;
  const std::size_t kb = trans_b ? bc : br;
  const std::size_t m = trans_b ? br : bc;
  if (k != kb) {
    throw ShapeError("matmul: inner dimensions differ " + shape_to_string(a.shape()) +
                     " vs " + shape_to_string(b.shape()));
  }
  Tensor out({n, m});
  detail::gemm_acc(a.value().data().data(), ar, ac, trans_a, b.value().data().data(), br,
                   bc, trans_b, out.data().data());
  return a.tape().record(
      std::move(out), {a, b},
      [a, b, trans_a, trans_b, n, m, ar, ac, br, bc](Tape& tape, const Tensor& g) {
        const double* av = a.value().data().data();
        const double* bv = b.value().data().data();
        if (Tensor* ga = tape.grad_target(a)) {
          if (!trans_a) {
            detail::gemm_acc(g.data().data(), n, m, false, bv, br, bc, !trans_b,
                             ga->data().data());
          } else {
            detail::gemm_acc(bv, br, bc, trans_b, g.data().data(), n, m, true,
                             ga->data().data());
          }
        }
        if (Tensor* gb = tape.grad_target(b)) {
          if (!trans_b) {
            detail::gemm_acc(av, ar, ac, !trans_a, g.data().data(), n, m, false,
                             gb->data().data());
          } else {
            detail::gemm_acc(g.data().data(), n, m, true, av, ar, ac, trans_a,
                             gb->data().data());
          }
        }
      });
}

Var bmm(Var a, Var b, bool trans_a, bool trans_b) {
  check_rank(a, 3, "bmm");
  check_rank(b, 3, "bmm");
  const std::size_t batch = a.shape()[0];
  if (b.shape()[0] != batch) throw ShapeError("bmm: batch sizes differ");
  const std::size_t ar = a.shape()[1], ac = a.shape()[2];
  const std::size_t br = b.shape()[1], bc = b.shape()[2];
  const std::size_t n = trans_a ? ac : ar;
  const std::size_t k = trans_a ? ar : ac;
  const std::size_t kb = trans_b ? bc : br;
  const std::size_t m = trans_b ? br : bc;
  if (k != kb) {
    throw ShapeError("bmm: inner dimensions differ " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  Tensor out({batch, n, m});
  for (std::size_t i = 0; i < batch; ++i) {
    detail::gemm_acc(a.value().data().data() + i * ar * ac, ar, ac, trans_a,
                     b.value().data().data() + i * br * bc, br, bc, trans_b,
                     out.data().data() + i * n * m);
  }
  return a.tape().record(
      std::move(out), {a, b},
      [a, b, trans_a, trans_b, batch, n, m, ar, ac, br, bc](Tape& tape, const Tensor& g) {
        Tensor* ga = tape.grad_target(a);
        Tensor* gb = tape.grad_target(b);
        for (std::size_t i = 0; i < batch; ++i) {
          const double* av = a.value().data().data() + i * ar * ac;
          const double* bv = b.value().data().data() + i * br * bc;
          const double* gv = g.data().data() + i * n * m;
          if (ga) {
            double* gav = ga->data().data() + i * ar * ac;
            if (!trans_a) {
              detail::gemm_acc(gv, n, m, false, bv, br, bc, !trans_b, gav);
            } else {
              detail::gemm_acc(bv, br, bc, trans_b, gv, n, m, true, gav);
            }
          }
          if (gb) {
            double* gbv = gb->data().data() + i * br * bc;
            if (!trans_b) {
              detail::gemm_acc(av, ar, ac, !trans_a, gv, n, m, false, gbv);
            } else {
              detail::gemm_acc(gv, n, m, true, av, ar, ac, trans_a, gbv);
            }
          }
        }
      });
}

Var add_row_bias(Var x, Var bias) {
  check_rank(bias, 1, "add_row_bias");
  const std::size_t width = bias.shape()[0];
  if (x.value().rank() == 0 || x.shape().back() != width) {
    throw ShapeError("add_row_bias: bias " + shape_to_string(bias.shape()) +
                     " does not match " + shape_to_string(x.shape()));
  }
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias.value()[i % width];
  return x.tape().record(std::move(out), {x, bias}, [x, bias, width](Tape& tape, const Tensor& g) {
    if (Tensor* gx = tape.grad_target(x))
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
    if (Tensor* gb = tape.grad_target(bias))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % width] += g[i];
  });
}

Var add_batch_bias(Var x, Var bias) {
  check_rank(x, 3, "add_batch_bias");
  check_rank(bias, 2, "add_batch_bias");
  const std::size_t batch = x.shape()[0], rows = x.shape()[1], cols = x.shape()[2];
  if (bias.shape()[0] != batch || bias.shape()[1] != cols) {
    throw ShapeError("add_batch_bias: bias " + shape_to_string(bias.shape()) +
                     " does not match " + shape_to_string(x.shape()));
  }
  Tensor out = x.value();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out.at(b, r, c) += bias.value().at(b, c);
  return x.tape().record(std::move(out), {x, bias},
                         [x, bias, batch, rows, cols](Tape& tape, const Tensor& g) {
                           if (Tensor* gx = tape.grad_target(x))
                             for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
                           if (Tensor* gb = tape.grad_target(bias))
                             for (std::size_t b = 0; b < batch; ++b)
                               for (std::size_t r = 0; r < rows; ++r)
                                 for (std::size_t c = 0; c < cols; ++c)
                                   gb->at(b, c) += g.at(b, r, c);
                         });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  check_rank(x, 2, "layer_norm");
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  if (gamma.value().size() != d || beta.value().size() != d) {
    throw ShapeError("layer_norm: affine parameters must have width " + std::to_string(d));
  }
  Tensor normed({rows, d});
  Tensor inv_std({rows});
  Tensor out({rows, d});
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += x.value().at(r, c);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double dx = x.value().at(r, c) - mean;
      var += dx * dx;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t c = 0; c < d; ++c) {
      const double n = (x.value().at(r, c) - mean) * is;
      normed.at(r, c) = n;
      out.at(r, c) = n * gamma.value()[c] + beta.value()[c];
    }
  }
  return x.tape().record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, normed, inv_std, rows, d](Tape& tape, const Tensor& g) {
        Tensor* gx = tape.grad_target(x);
        Tensor* gg = tape.grad_target(gamma);
        Tensor* gbeta = tape.grad_target(beta);
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_dn = 0.0, mean_dn_n = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            const double dn = g.at(r, c) * gamma.value()[c];
            mean_dn += dn;
            mean_dn_n += dn * normed.at(r, c);
            if (gg) (*gg)[c] += g.at(r, c) * normed.at(r, c);
            if (gbeta) (*gbeta)[c] += g.at(r, c);
          }
          mean_dn *= inv_d;
          mean_dn_n *= inv_d;
          if (gx) {
            for (std::size_t c = 0; c < d; ++c) {
              const double dn = g.at(r, c) * gamma.value()[c];
              gx->at(r, c) += inv_std[r] * (dn - mean_dn - normed.at(r, c) * mean_dn_n);
            }
          }
        }
      });
}

Var embedding(Var table, std::span<const int> tokens) {
  check_rank(table, 2, "embedding");
  const std::size_t vocab = table.shape()[0], d = table.shape()[1];
  std::vector<int> ids(tokens.begin(), tokens.end());
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw std::out_of_range("embedding: token id " + std::to_string(ids[i]) +
                              " outside vocabulary of size " + std::to_string(vocab));
    }
    for (std::size_t c = 0; c < d; ++c) out.at(i, c) = table.value().at(ids[i], c);
  }
  return table.tape().record(std::move(out), {table}, [table, ids, d](Tape& tape, const Tensor& g) {
    Tensor* gt = tape.grad_target(table);
    if (!gt) return;
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t c = 0; c < d; ++c) gt->at(ids[i], c) += g.at(i, c);
  });
}

Var conv1d(Var x, Var weight, Var bias, std::size_t stride, std::size_t left_pad,
           std::size_t out_len) {
  check_rank(x, 2, "conv1d");
  check_rank(weight, 3, "conv1d");
  const std::size_t len = x.shape()[0], cin = x.shape()[1];
  const std::size_t k = weight.shape()[0], cout = weight.shape()[2];
  if (weight.shape()[1] != cin) throw ShapeError("conv1d: input channel mismatch");
  if (bias.value().size() != cout) throw ShapeError("conv1d: bias width mismatch");
  if (stride == 0) throw std::invalid_argument("conv1d: stride must be positive");

  // im2col: column block j holds input row i*stride - left_pad + j.
  Tensor cols({out_len, k * cin});
  for (std::size_t i = 0; i < out_len; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const long src = static_cast<long>(i * stride + j) - static_cast<long>(left_pad);
      if (src < 0 || src >= static_cast<long>(len)) continue;
      for (std::size_t c = 0; c < cin; ++c)
        cols.at(i, j * cin + c) = x.value().at(static_cast<std::size_t>(src), c);
    }
  }
  Tensor out({out_len, cout});
  for (std::size_t i = 0; i < out_len; ++i)
    for (std::size_t o = 0; o < cout; ++o) out[i * cout + o] = bias.value()[o];
  detail::gemm_acc(cols.data().data(), out_len, k * cin, false, weight.value().data().data(),
                   k * cin, cout, false, out.data().data());
  return x.tape().record(
      std::move(out), {x, weight, bias},
      [x, weight, bias, cols, stride, left_pad, out_len, len, cin, k, cout](
          Tape& tape, const Tensor& g) {
        if (Tensor* gw = tape.grad_target(weight)) {
          detail::gemm_acc(cols.data().data(), out_len, k * cin, true, g.data().data(),
                           out_len, cout, false, gw->data().data());
        }
        if (Tensor* gb = tape.grad_target(bias)) {
          for (std::size_t i = 0; i < out_len; ++i)
            for (std::size_t o = 0; o < cout; ++o) (*gb)[o] += g[i * cout + o];
        }
        if (Tensor* gx = tape.grad_target(x)) {
          Tensor dcols({out_len, k * cin});
          detail::gemm_acc(g.data().data(), out_len, cout, false, weight.value().data().data(),
                           k * cin, cout, true, dcols.data().data());
          for (std::size_t i = 0; i < out_len; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
              const long src = static_cast<long>(i * stride + j) - static_cast<long>(left_pad);
              if (src < 0 || src >= static_cast<long>(len)) continue;
              for (std::size_t c = 0; c < cin; ++c)
                gx->at(static_cast<std::size_t>(src), c) += dcols.at(i, j * cin + c);
            }
          }
        }
      });
}

Var split_heads(Var x, std::size_t heads) {
  check_rank(x, 2, "split_heads");
  const std::size_t t = x.shape()[0], width = x.shape()[1];
  if (heads == 0 || width % heads != 0) {
    throw ShapeError("split_heads: width " + std::to_string(width) +
                     " not divisible by heads " + std::to_string(heads));
  }
  const std::size_t d = width / heads;
  Tensor out({heads, t, d});
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t c = 0; c < d; ++c) out.at(h, i, c) = x.value().at(i, h * d + c);
  return x.tape().record(std::move(out), {x}, [x, heads, t, d](Tape& tape, const Tensor& g) {
    Tensor* gx = tape.grad_target(x);
    if (!gx) return;
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < t; ++i)
        for (std::size_t c = 0; c < d; ++c) gx->at(i, h * d + c) += g.at(h, i, c);
  });
}

Var merge_heads(Var x) {
  check_rank(x, 3, "merge_heads");
  const std::size_t heads = x.shape()[0], t = x.shape()[1], d = x.shape()[2];
  Tensor out({t, heads * d});
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t c = 0; c < d; ++c) out.at(i, h * d + c) = x.value().at(h, i, c);
  return x.tape().record(std::move(out), {x}, [x, heads, t, d](Tape& tape, const Tensor& g) {
    Tensor* gx = tape.grad_target(x);
    if (!gx) return;
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < t; ++i)
        for (std::size_t c = 0; c < d; ++c) gx->at(h, i, c) += g.at(i, h * d + c);
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor& g) {
    if (Tensor* gx = tape.grad_target(x))
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
  });
}

Var softmax_last(Var x) {
  if (x.value().rank() == 0) throw ShapeError("softmax_last: scalar input");
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.value().size() / width;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.value().data().data() + r * width;
    double* o = out.data().data() + r * width;
    double mx = in[0];
    for (std::size_t c = 1; c < width; ++c) mx = std::max(mx, in[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      o[c] = std::exp(in[c] - mx);
      z += o[c];
    }
    for (std::size_t c = 0; c < width; ++c) o[c] /= z;
  }
  Tape& tape = x.tape();
  if (!x.requires_grad()) return tape.record(std::move(out), {x}, {});
  Tensor y = out;
  return tape.record(std::move(out), {x}, [x, y, rows, width](Tape& tape, const Tensor& g) {
    Tensor* gx = tape.grad_target(x);
    if (!gx) return;
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < width; ++c) dot += g[r * width + c] * y[r * width + c];
      for (std::size_t c = 0; c < width; ++c)
        (*gx)[r * width + c] += y[r * width + c] * (g[r * width + c] - dot);
    }
  });
}

Var masked_mean_rows(Var x, std::span<const double> row_mask) {
  check_rank(x, 2, "masked_mean_rows");
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  if (row_mask.size() != rows) throw ShapeError("masked_mean_rows: mask length mismatch");
  double count = 0.0;
  for (double m : row_mask) count += m;
  if (count <= 0.0) throw std::invalid_argument("masked_mean_rows: no valid rows to pool");
  std::vector<double> w(row_mask.begin(), row_mask.end());
  for (auto& v : w) v /= count;
  Tensor out({d});
  for (std::size_t r = 0; r < rows; ++r) {
    if (w[r] == 0.0) continue;
    for (std::size_t c = 0; c < d; ++c) out[c] += w[r] * x.value().at(r, c);
  }
  return x.tape().record(std::move(out), {x}, [x, w, rows, d](Tape& tape, const Tensor& g) {
    Tensor* gx = tape.grad_target(x);
    if (!gx) return;
    for (std::size_t r = 0; r < rows; ++r) {
      if (w[r] == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) gx->at(r, c) += w[r] * g[c];
    }
  });
}

Var bce_with_logits(Var logit, double label) {
  if (logit.value().size() != 1) throw ShapeError("bce_with_logits: expects one logit");
  const double z = logit.value()[0];
  const double loss = std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
  return logit.tape().record(Tensor::scalar(loss), {logit},
                             [logit, label](Tape& tape, const Tensor& g) {
                               Tensor* gl = tape.grad_target(logit);
                               if (!gl) return;
                               const double z = logit.value()[0];
                               const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                                                       : std::exp(z) / (1.0 + std::exp(z));
                               (*gl)[0] += g[0] * (p - label);
                             });
}

}  // namespace ops
}  // namespace boltzgate
