#include "kgaug/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kgaug/error.hpp"

namespace kgaug::num {
namespace {

Graph& same_graph(Var a, Var b) {
  if (&a.graph() != &b.graph()) throw Error("operands belong to different graphs");
  return a.graph();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

// c[p x s] += a[p x q] * b[q x s]
void gemm_nn(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
             std::size_t s) {
  for (std::size_t i = 0; i < p; ++i) {
    double* ci = c + i * s;
    const double* ai = a + i * q;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b + k * s;
      for (std::size_t j = 0; j < s; ++j) ci[j] += aik * bk[j];
    }
  }
}

// da[p x q] += dc[p x s] * b[q x s]^T
void gemm_nt(const double* dc, const double* b, double* da, std::size_t p, std::size_t q,
             std::size_t s) {
  for (std::size_t i = 0; i < p; ++i) {
    const double* dci = dc + i * s;
    double* dai = da + i * q;
    for (std::size_t k = 0; k < q; ++k) {
      const double* bk = b + k * s;
      double acc = 0.0;
      for (std::size_t j = 0; j < s; ++j) acc += dci[j] * bk[j];
      dai[k] += acc;
    }
  }
}

// db[q x s] += a[p x q]^T * dc[p x s]
void gemm_tn(const double* a, const double* dc, double* db, std::size_t p, std::size_t q,
             std::size_t s) {
  for (std::size_t i = 0; i < p; ++i) {
    const double* ai = a + i * q;
    const double* dci = dc + i * s;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      double* dbk = db + k * s;
      for (std::size_t j = 0; j < s; ++j) dbk[j] += aik * dci[j];
    }
  }
}

template <typename Fwd, typename Deriv>
Var unary(const char* op, Var a, Fwd fwd, Deriv deriv) {
  Graph& g = a.graph();
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
  const std::size_t ia = a.id();
  return g.push(op, std::move(out), {ia}, [ia, deriv](Graph& gr, std::size_t self) {
    const Tensor& y = gr.value(self);
    const Tensor& x = gr.value(ia);
    const Tensor& gy = gr.grad_ref(self);
    Tensor& gx = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t p = A.rows(), q = A.cols(), s = B.cols();
  if (B.rows() != q) {
    throw DimensionError("matmul: inner extents differ, " + shape_string(A.shape()) + " x " +
                         shape_string(B.shape()));
  }
  Tensor C({p, s});
  gemm_nn(A.data().data(), B.data().data(), C.data().data(), p, q, s);
  const std::size_t ia = a.id(), ib = b.id();
  return g.push("matmul", std::move(C), {ia, ib}, [ia, ib, p, q, s](Graph& gr, std::size_t self) {
    const Tensor& dC = gr.grad_ref(self);
    if (gr.requires_grad(ia)) {
      gemm_nt(dC.data().data(), gr.value(ib).data().data(), gr.grad_buffer(ia).data().data(), p,
              q, s);
    }
    if (gr.requires_grad(ib)) {
      gemm_tn(gr.value(ia).data().data(), dC.data().data(), gr.grad_buffer(ib).data().data(), p,
              q, s);
    }
  });
}

Var transpose(Var a) {
  Graph& g = a.graph();
  const Tensor& A = a.value();
  const std::size_t r = A.rows(), c = A.cols();
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = A.at(i, j);
  const std::size_t ia = a.id();
  return g.push("transpose", std::move(out), {ia}, [ia, r, c](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_ref(self);
    Tensor& gx = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += gy[j * r + i];
  });
}

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  const std::size_t ia = a.id(), ib = b.id();
  return g.push("add", std::move(out), {ia, ib}, [ia, ib](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_ref(self);
    for (std::size_t id : {ia, ib}) {
      if (!gr.requires_grad(id)) continue;
      Tensor& gx = gr.grad_buffer(id);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
  });
}

Var sub(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  const std::size_t ia = a.id(), ib = b.id();
  return g.push("sub", std::move(out), {ia, ib}, [ia, ib](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_ref(self);
    if (gr.requires_grad(ia)) {
      Tensor& gx = gr.grad_buffer(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
    if (gr.requires_grad(ib)) {
      Tensor& gx = gr.grad_buffer(ib);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] -= gy[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  const std::size_t ia = a.id(), ib = b.id();
  return g.push("mul", std::move(out), {ia, ib}, [ia, ib](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_ref(self);
    if (gr.requires_grad(ia)) {
      const Tensor& y = gr.value(ib);
      Tensor& gx = gr.grad_buffer(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * y[i];
    }
    if (gr.requires_grad(ib)) {
      const Tensor& x = gr.value(ia);
      Tensor& gx = gr.grad_buffer(ib);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * x[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var add_row(Var a, Var bias) {
  Graph& g = same_graph(a, bias);
  const Tensor& A = a.value();
  const Tensor& b = bias.value();
  const std::size_t r = A.rows(), c = A.cols();
  if (b.size() != c) {
    throw DimensionError("add_row: bias " + shape_string(b.shape()) + " does not match " +
                         shape_string(A.shape()));
  }
  Tensor out = A;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += b[j];
  const std::size_t ia = a.id(), ib = bias.id();
  return g.push("add_row", std::move(out), {ia, ib}, [ia, ib, r, c](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_ref(self);
    if (gr.requires_grad(ia)) {
      Tensor& gx = gr.grad_buffer(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
    if (gr.requires_grad(ib)) {
      Tensor& gb = gr.grad_buffer(ib);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += gy[i * c + j];
    }
  });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  Graph& g = a.graph();
  const Tensor& A = a.value();
  const std::size_t r = A.rows(), c = A.cols();
  if (begin + count > c) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_string(A.shape()));
  }
  Tensor out({r, count});
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(A.data().data() + i * c + begin, count, out.data().data() + i * count);
  const std::size_t ia = a.id();
  return g.push("slice_cols", std::move(out), {ia},
                [ia, r, c, begin, count](Graph& gr, std::size_t self) {
                  const Tensor& gy = gr.grad_ref(self);
                  Tensor& gx = gr.grad_buffer(ia);
                  for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < count; ++j)
                      gx[i * c + begin + j] += gy[i * count + j];
                });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DomainError("concat_cols: no inputs");
  Graph& g = parts.front().graph();
  const std::size_t r = parts.front().value().rows();
  std::size_t total = 0;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    same_graph(parts.front(), p);
    if (p.value().rows() != r) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(parts.front().shape()) +
                           " vs " + shape_string(p.shape()));
    }
    ids.push_back(p.id());
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Tensor out({r, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& P = parts[k].value();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(P.data().data() + i * widths[k], widths[k],
                  out.data().data() + i * total + offset);
    offset += widths[k];
  }
  return g.push("concat_cols", std::move(out), ids,
                [ids, widths, r, total](Graph& gr, std::size_t self) {
                  const Tensor& gy = gr.grad_ref(self);
                  std::size_t off = 0;
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    if (gr.requires_grad(ids[k])) {
                      Tensor& gx = gr.grad_buffer(ids[k]);
                      for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < widths[k]; ++j)
                          gx[i * widths[k] + j] += gy[i * total + off + j];
                    }
                    off += widths[k];
                  }
                });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DomainError("concat_rows: no inputs");
  Graph& g = parts.front().graph();
  const std::size_t c = parts.front().value().cols();
  std::size_t total = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    same_graph(parts.front(), p);
    if (p.value().cols() != c) {
      throw DimensionError("concat_rows: column mismatch " +
                           shape_string(parts.front().shape()) + " vs " + shape_string(p.shape()));
    }
    ids.push_back(p.id());
    total += p.value().rows();
  }
  Tensor out({total, c});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + offset);
    offset += p.value().size();
  }
  return g.push("concat_rows", std::move(out), ids, [ids](Graph& gr, std::size_t self) {
    const Tensor& gy = gr.grad_ref(self);
    std::size_t off = 0;
    for (std::size_t id : ids) {
      const std::size_t n = gr.value(id).size();
      if (gr.requires_grad(id)) {
        Tensor& gx = gr.grad_buffer(id);
        for (std::size_t i = 0; i < n; ++i) gx[i] += gy[off + i];
      }
      off += n;
    }
  });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  Graph& g = table.graph();
  const Tensor& T = table.value();
  const std::size_t n = T.rows(), d = T.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= n) {
      throw IndexError("gather_rows: id " + std::to_string(ids[i]) + " out of " +
                       std::to_string(n) + " rows");
    }
    std::copy_n(T.data().data() + ids[i] * d, d, out.data().data() + i * d);
  }
  const std::size_t it = table.id();
  std::vector<std::size_t> rows(ids.begin(), ids.end());
  return g.push("gather_rows", std::move(out), {it},
                [it, rows = std::move(rows), d](Graph& gr, std::size_t self) {
                  const Tensor& gy = gr.grad_ref(self);
                  Tensor& gx = gr.grad_buffer(it);
                  for (std::size_t i = 0; i < rows.size(); ++i)
                    for (std::size_t j = 0; j < d; ++j) gx[rows[i] * d + j] += gy[i * d + j];
                });
}

Var softmax(Var z) {
  Graph& g = z.graph();
  const Tensor& Z = z.value();
  if (Z.size() == 0) throw DomainError("softmax of an empty input");
  const std::size_t r = Z.rows(), c = Z.cols();
  Tensor out(Z.shape());
  for (std::size_t i = 0; i < r; ++i) {
    auto zi = Z.row(i);
    auto yi = out.row(i);
    const double mx = *std::max_element(zi.begin(), zi.end());
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      yi[j] = std::exp(zi[j] - mx);
      total += yi[j];
    }
    for (std::size_t j = 0; j < c; ++j) yi[j] /= total;
  }
  const std::size_t iz = z.id();
  return g.push("softmax", std::move(out), {iz}, [iz, r, c](Graph& gr, std::size_t self) {
    const Tensor& y = gr.value(self);
    const Tensor& gy = gr.grad_ref(self);
    Tensor& gz = gr.grad_buffer(iz);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += gy[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j) gz[i * c + j] += y[i * c + j] * (gy[i * c + j] - dot);
    }
  });
}

Var cross_entropy(Var probs, std::span<const std::size_t> labels) {
  Graph& g = probs.graph();
  const Tensor& P = probs.value();
  const std::size_t r = P.rows(), k = P.cols();
  if (labels.size() != r) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(r) + " rows");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (labels[i] >= k) {
      throw IndexError("cross_entropy: label " + std::to_string(labels[i]) + " out of " +
                       std::to_string(k) + " classes");
    }
    total -= std::log(P[i * k + labels[i]]);
  }
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  const std::size_t ip = probs.id();
  return g.push("cross_entropy", Tensor::scalar(total / static_cast<double>(r)), {ip},
                [ip, lab = std::move(lab), r, k](Graph& gr, std::size_t self) {
                  const double gy = gr.grad_ref(self)[0] / static_cast<double>(r);
                  const Tensor& P = gr.value(ip);
                  Tensor& gp = gr.grad_buffer(ip);
                  for (std::size_t i = 0; i < r; ++i) gp[i * k + lab[i]] -= gy / P[i * k + lab[i]];
                });
}

Var sum(Var a) {
  Graph& g = a.graph();
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const std::size_t ia = a.id();
  return g.push("sum", Tensor::scalar(total), {ia}, [ia](Graph& gr, std::size_t self) {
    const double gy = gr.grad_ref(self)[0];
    Tensor& gx = gr.grad_buffer(ia);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw DomainError("mean of an empty input");
  return scale(sum(a), 1.0 / n);
}

Var masked_mean(std::span<const Var> steps, const std::vector<std::vector<bool>>& mask) {
  if (steps.empty()) throw DomainError("masked_mean: no steps");
  Graph& g = steps.front().graph();
  const std::size_t b = steps.front().value().rows(), n = steps.front().value().cols();
  if (mask.size() != b) {
    throw DimensionError("masked_mean: mask has " + std::to_string(mask.size()) + " rows for " +
                         std::to_string(b));
  }
  std::vector<double> weight(b * steps.size(), 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    if (mask[i].size() != steps.size()) throw DimensionError("masked_mean: mask length mismatch");
    const auto count = std::count(mask[i].begin(), mask[i].end(), true);
    if (count == 0) throw DomainError("masked_mean: sequence without real steps");
    for (std::size_t t = 0; t < steps.size(); ++t)
      weight[i * steps.size() + t] = mask[i][t] ? 1.0 / static_cast<double>(count) : 0.0;
  }
  Tensor out({b, n});
  std::vector<std::size_t> ids;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const Tensor& H = steps[t].value();
    if (H.rows() != b || H.cols() != n) throw DimensionError("masked_mean: step shape mismatch");
    ids.push_back(steps[t].id());
    for (std::size_t i = 0; i < b; ++i) {
      const double w = weight[i * steps.size() + t];
      if (w == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += w * H[i * n + j];
    }
  }
  return g.push("masked_mean", std::move(out), ids,
                [ids, weight = std::move(weight), b, n](Graph& gr, std::size_t self) {
                  const Tensor& gy = gr.grad_ref(self);
                  const std::size_t steps = ids.size();
                  for (std::size_t t = 0; t < steps; ++t) {
                    if (!gr.requires_grad(ids[t])) continue;
                    Tensor& gh = gr.grad_buffer(ids[t]);
                    for (std::size_t i = 0; i < b; ++i) {
                      const double w = weight[i * steps + t];
                      if (w == 0.0) continue;
                      for (std::size_t j = 0; j < n; ++j) gh[i * n + j] += w * gy[i * n + j];
                    }
                  }
                });
}

std::size_t conv_output_rows(std::size_t rows, std::size_t kernel, std::size_t stride) {
  if (kernel == 0 || stride == 0) throw DomainError("conv1d_col: kernel and stride must be >= 1");
  if (kernel > rows) {
    throw DimensionError("conv1d_col: kernel " + std::to_string(kernel) + " exceeds " +
                         std::to_string(rows) + " rows");
  }
  return (rows - kernel) / stride + 1;
}

MaskedVar conv1d_col(Var x, const std::vector<bool>& valid, Var filter, std::size_t stride) {
  Graph& g = same_graph(x, filter);
  const Tensor& X = x.value();
  const Tensor& W = filter.value();
  const std::size_t q = X.rows(), m = X.cols(), k = W.size();
  if (valid.size() != q) throw DimensionError("conv1d_col: mask length mismatch");
  const std::size_t out_rows = conv_output_rows(q, k, stride);
  Tensor out({out_rows, m});
  std::vector<bool> out_valid(out_rows, false);
  for (std::size_t i = 0; i < out_rows; ++i) {
    for (std::size_t t = 0; t < k; ++t) out_valid[i] = out_valid[i] || valid[i * stride + t];
    if (!out_valid[i]) continue;
    for (std::size_t t = 0; t < k; ++t) {
      const double w = W[t];
      const double* xr = X.data().data() + (i * stride + t) * m;
      double* yr = out.data().data() + i * m;
      for (std::size_t j = 0; j < m; ++j) yr[j] += w * xr[j];
    }
  }
  const std::size_t ix = x.id(), iw = filter.id();
  Var y = g.push("conv1d_col", std::move(out), {ix, iw},
                 [ix, iw, out_valid, stride, k, m](Graph& gr, std::size_t self) {
                   const Tensor& gy = gr.grad_ref(self);
                   const Tensor& X = gr.value(ix);
                   const Tensor& W = gr.value(iw);
                   const bool need_x = gr.requires_grad(ix), need_w = gr.requires_grad(iw);
                   for (std::size_t i = 0; i < out_valid.size(); ++i) {
                     if (!out_valid[i]) continue;
                     const double* gyr = gy.data().data() + i * m;
                     for (std::size_t t = 0; t < k; ++t) {
                       const std::size_t row = i * stride + t;
                       if (need_x) {
                         double* gxr = gr.grad_buffer(ix).data().data() + row * m;
                         for (std::size_t j = 0; j < m; ++j) gxr[j] += W[t] * gyr[j];
                       }
                       if (need_w) {
                         const double* xr = X.data().data() + row * m;
                         double acc = 0.0;
                         for (std::size_t j = 0; j < m; ++j) acc += xr[j] * gyr[j];
                         gr.grad_buffer(iw)[t] += acc;
                       }
                     }
                   }
                 });
  return {y, std::move(out_valid)};
}

Var conv1d_col(Var x, Var filter, std::size_t stride) {
  return conv1d_col(x, std::vector<bool>(x.value().rows(), true), filter, stride).value;
}

std::size_t pool_output_rows(std::size_t rows, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw DomainError("maxpool_col: window and stride must be >= 1");
  if (window > rows) {
    throw DimensionError("maxpool_col: window " + std::to_string(window) + " exceeds " +
                         std::to_string(rows) + " rows");
  }
  return (rows - window + stride - 1) / stride + 1;
}

MaskedVar maxpool_col(Var x, const std::vector<bool>& valid, std::size_t window,
                      std::size_t stride) {
  Graph& g = x.graph();
  const Tensor& X = x.value();
  const std::size_t p = X.rows(), m = X.cols();
  if (valid.size() != p) throw DimensionError("maxpool_col: mask length mismatch");
  const std::size_t out_rows = pool_output_rows(p, window, stride);
  Tensor out({out_rows, m});
  std::vector<bool> out_valid(out_rows, false);
  // Source row of each output element; p marks "no source".
  std::vector<std::size_t> argmax(out_rows * m, p);
  for (std::size_t i = 0; i < out_rows; ++i) {
    const std::size_t lo = i * stride, hi = std::min(p, lo + window);
    for (std::size_t j = 0; j < m; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t r = lo; r < hi; ++r) {
        if (!valid[r]) continue;
        const double v = X[r * m + j];
        if (v > best) {
          best = v;
          argmax[i * m + j] = r;
        }
      }
      if (argmax[i * m + j] != p) {
        out[i * m + j] = best;
        out_valid[i] = true;
      }
    }
  }
  const std::size_t ix = x.id();
  Var y = g.push("maxpool_col", std::move(out), {ix},
                 [ix, argmax = std::move(argmax), p, m](Graph& gr, std::size_t self) {
                   const Tensor& gy = gr.grad_ref(self);
                   Tensor& gx = gr.grad_buffer(ix);
                   for (std::size_t e = 0; e < argmax.size(); ++e) {
                     if (argmax[e] == p) continue;
                     gx[argmax[e] * m + e % m] += gy[e];
                   }
                 });
  return {y, std::move(out_valid)};
}

Var maxpool_col(Var x, std::size_t window) {
  return maxpool_col(x, std::vector<bool>(x.value().rows(), true), window, window).value;
}

}  // namespace kgaug::num
