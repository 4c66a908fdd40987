#pragma once

// Dense-tensor reverse-mode differentiation engine.
//
// Define-by-run: each op computes its forward value immediately and, when any
// input is tracked, appends a node with a backward closure to the tape. The
// tape is rebuilt per batch and must stay on one thread; independent tapes may
// run concurrently.
//
// Scalars are shape {}, vectors {n}, matrices {r, c}, all row-major f32 for
// training. The whole engine is templated on the scalar type so gradient
// checking can re-run in f64.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "coodkit/common.hpp"
#include "coodkit/gemm.hpp"

namespace cood::ad {

COOD_DEFINE_ERROR(ShapeMismatch);
COOD_DEFINE_ERROR(NonFinite);
COOD_DEFINE_ERROR(NotScalar);
COOD_DEFINE_ERROR(OutOfRange);

template <typename T>
struct TensorT {
    std::vector<int> shape;   // {} scalar, {n} vector, {r,c} matrix
    std::vector<T> values;    // row-major, size == numel(shape)
    bool requires_grad = false;
    int node = -1;            // id on the active tape, -1 for constants

    int numel() const {
        int n = 1;
        for (int d : shape) n *= d;
        return n;
    }
    int rank() const { return static_cast<int>(shape.size()); }
    bool is_scalar() const { return shape.empty(); }
    T scalar_value() const { return values[0]; }
    int rows() const { return shape[0]; }
    int cols() const { return shape[1]; }
};

template <typename T>
inline void check_finite(const std::vector<T>& v, const char* where) {
    for (T x : v) {
        if (!std::isfinite(static_cast<double>(x)))
            throw NonFinite(std::string("non-finite value in ") + where);
    }
}

// When true, every op output is scanned for NaN/Inf. Creation-time checks on
// leaves and constants are unconditional.
inline bool& debug_finite_checks() {
    static bool on = false;
    return on;
}

template <typename T>
class TapeT {
public:
    TapeT() = default;
    TapeT(const TapeT&) = delete;
    TapeT& operator=(const TapeT&) = delete;

    // ---- tensor creation ----

    TensorT<T> constant(std::vector<int> shape, std::vector<T> values) const {
        check_numel(shape, values.size());
        check_finite(values, "constant");
        return TensorT<T>{std::move(shape), std::move(values), false, -1};
    }
    TensorT<T> scalar(T v) const { return constant({}, {v}); }
    TensorT<T> vec(std::vector<T> v) const {
        int n = static_cast<int>(v.size());
        return constant({n}, std::move(v));
    }
    TensorT<T> mat(int r, int c, std::vector<T> v) const { return constant({r, c}, std::move(v)); }

    TensorT<T> zeros(std::vector<int> shape) const {
        std::vector<int> s = shape;
        int n = 1;
        for (int d : s) n *= d;
        return TensorT<T>{std::move(s), std::vector<T>(static_cast<std::size_t>(n), T(0)), false, -1};
    }

    // Registers a trainable leaf. Gradients of leaves never touched by the
    // loss come back as zeros.
    TensorT<T> leaf(std::vector<int> shape, std::vector<T> values) {
        check_numel(shape, values.size());
        check_finite(values, "leaf");
        TensorT<T> t{std::move(shape), std::move(values), true, -1};
        t.node = push_node(t.numel(), nullptr);
        return t;
    }

    // ---- elementwise ----

    TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
        require_same_shape(a, b, "add");
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) out.values[i] = a.values[i] + b.values[i];
        return finish(out, {&a, &b}, [this, an = a.node, bn = b.node](const std::vector<T>& g) {
            accumulate(an, g);
            accumulate(bn, g);
        });
    }

    TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
        require_same_shape(a, b, "sub");
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) out.values[i] = a.values[i] - b.values[i];
        return finish(out, {&a, &b}, [this, an = a.node, bn = b.node](const std::vector<T>& g) {
            accumulate(an, g);
            if (bn >= 0) {
                std::vector<T> neg(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
                accumulate(bn, neg);
            }
        });
    }

    TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
        require_same_shape(a, b, "mul");
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) out.values[i] = a.values[i] * b.values[i];
        return finish(out, {&a, &b},
                      [this, an = a.node, bn = b.node, av = a.values, bv = b.values](const std::vector<T>& g) {
                          if (an >= 0) {
                              std::vector<T> ga(g.size());
                              for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * bv[i];
                              accumulate(an, ga);
                          }
                          if (bn >= 0) {
                              std::vector<T> gb(g.size());
                              for (std::size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * av[i];
                              accumulate(bn, gb);
                          }
                      });
    }

    TensorT<T> scale(const TensorT<T>& a, T c) {
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) out.values[i] = a.values[i] * c;
        return finish(out, {&a}, [this, an = a.node, c](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * c;
            accumulate(an, ga);
        });
    }

    TensorT<T> add_scalar(const TensorT<T>& a, T c) {
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) out.values[i] = a.values[i] + c;
        return finish(out, {&a},
                      [this, an = a.node](const std::vector<T>& g) { accumulate(an, g); });
    }

    TensorT<T> neg(const TensorT<T>& a) { return scale(a, T(-1)); }

    // ---- nonlinearities ----

    TensorT<T> tanh(const TensorT<T>& a) {
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) out.values[i] = std::tanh(a.values[i]);
        return finish(out, {&a}, [this, an = a.node, y = out.values](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * (T(1) - y[i] * y[i]);
            accumulate(an, ga);
        });
    }

    TensorT<T> sigmoid(const TensorT<T>& a) {
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) {
            T x = a.values[i];
            out.values[i] = x >= 0 ? T(1) / (T(1) + std::exp(-x))
                                   : std::exp(x) / (T(1) + std::exp(x));
        }
        return finish(out, {&a}, [this, an = a.node, y = out.values](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * y[i] * (T(1) - y[i]);
            accumulate(an, ga);
        });
    }

    TensorT<T> exp(const TensorT<T>& a) {
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) out.values[i] = std::exp(a.values[i]);
        return finish(out, {&a}, [this, an = a.node, y = out.values](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * y[i];
            accumulate(an, ga);
        });
    }

    TensorT<T> log(const TensorT<T>& a) {
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) out.values[i] = std::log(a.values[i]);
        return finish(out, {&a}, [this, an = a.node, x = a.values](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / x[i];
            accumulate(an, ga);
        });
    }

    // hinge max(0, x); subgradient at 0 is 0
    TensorT<T> relu(const TensorT<T>& a) {
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) out.values[i] = a.values[i] > 0 ? a.values[i] : T(0);
        return finish(out, {&a}, [this, an = a.node, x = a.values](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] = x[i] > 0 ? g[i] : T(0);
            accumulate(an, ga);
        });
    }

    // pass-through gradient inside (lo, hi), zero outside
    TensorT<T> clamp(const TensorT<T>& a, T lo, T hi) {
        TensorT<T> out = raw(a.shape);
        for (int i = 0; i < out.numel(); ++i) out.values[i] = std::min(hi, std::max(lo, a.values[i]));
        return finish(out, {&a}, [this, an = a.node, x = a.values, lo, hi](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(g.size());
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] = (x[i] > lo && x[i] < hi) ? g[i] : T(0);
            accumulate(an, ga);
        });
    }

    // ---- linear algebra ----

    TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
        require_rank(a, 2, "matmul lhs");
        require_rank(b, 2, "matmul rhs");
        if (a.cols() != b.rows())
            throw ShapeMismatch("matmul inner dims " + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()));
        const int m = a.rows(), k = a.cols(), n = b.cols();
        TensorT<T> out = raw({m, n});
        std::fill(out.values.begin(), out.values.end(), T(0));
        if constexpr (std::is_same_v<T, float>) {
            detail::sgemm_nn(m, k, n, a.values.data(), b.values.data(), out.values.data());
        } else {
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    const T aip = a.values[i * k + p];
                    const T* brow = &b.values[p * n];
                    T* crow = &out.values[i * n];
                    for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
                }
        }
        return finish(out, {&a, &b},
                      [this, an = a.node, bn = b.node, av = a.values, bv = b.values, m, k, n](const std::vector<T>& g) {
                          if (an >= 0) {
                              // dA = g @ B^T
                              std::vector<T> ga(static_cast<std::size_t>(m) * k, T(0));
                              if constexpr (std::is_same_v<T, float>) {
                                  detail::sgemm_nt(m, n, k, g.data(), bv.data(), ga.data());
                              } else {
                                  for (int i = 0; i < m; ++i)
                                      for (int j = 0; j < n; ++j) {
                                          const T gij = g[i * n + j];
                                          const T* brow = &bv[j];  // column j strided
                                          for (int p = 0; p < k; ++p)
                                              ga[i * k + p] += gij * brow[p * n];
                                      }
                              }
                              accumulate(an, ga);
                          }
                          if (bn >= 0) {
                              // dB = A^T @ g
                              std::vector<T> gb(static_cast<std::size_t>(k) * n, T(0));
                              if constexpr (std::is_same_v<T, float>) {
                                  detail::sgemm_tn(m, k, n, av.data(), g.data(), gb.data());
                              } else {
                                  for (int i = 0; i < m; ++i)
                                      for (int p = 0; p < k; ++p) {
                                          const T aip = av[i * k + p];
                                          const T* grow = &g[i * n];
                                          T* gbrow = &gb[p * n];
                                          for (int j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
                                      }
                              }
                              accumulate(bn, gb);
                          }
                      });
    }

    // a @ b^T with b given row-major [n, k]; rows of both operands are contiguous
    TensorT<T> matmul_nt(const TensorT<T>& a, const TensorT<T>& b) {
        require_rank(a, 2, "matmul_nt lhs");
        require_rank(b, 2, "matmul_nt rhs");
        if (a.cols() != b.cols())
            throw ShapeMismatch("matmul_nt inner dims " + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.cols()));
        const int m = a.rows(), k = a.cols(), n = b.rows();
        TensorT<T> out = raw({m, n});
        if constexpr (std::is_same_v<T, float>) {
            std::fill(out.values.begin(), out.values.end(), 0.f);
            detail::sgemm_nt(m, k, n, a.values.data(), b.values.data(), out.values.data());
        } else {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const T* ar = &a.values[i * k];
                    const T* br = &b.values[j * k];
                    T s = 0;
                    for (int p = 0; p < k; ++p) s += ar[p] * br[p];
                    out.values[i * n + j] = s;
                }
        }
        return finish(out, {&a, &b},
                      [this, an = a.node, bn = b.node, av = a.values, bv = b.values, m, k, n](const std::vector<T>& g) {
                          if (an >= 0) {
                              // dA = g @ B
                              std::vector<T> ga(static_cast<std::size_t>(m) * k, T(0));
                              if constexpr (std::is_same_v<T, float>) {
                                  detail::sgemm_nn(m, n, k, g.data(), bv.data(), ga.data());
                              } else {
                                  for (int i = 0; i < m; ++i)
                                      for (int j = 0; j < n; ++j) {
                                          const T gij = g[i * n + j];
                                          const T* br = &bv[j * k];
                                          T* gr = &ga[i * k];
                                          for (int p = 0; p < k; ++p) gr[p] += gij * br[p];
                                      }
                              }
                              accumulate(an, ga);
                          }
                          if (bn >= 0) {
                              // dB = g^T @ A
                              std::vector<T> gb(static_cast<std::size_t>(n) * k, T(0));
                              if constexpr (std::is_same_v<T, float>) {
                                  detail::sgemm_tn(m, n, k, g.data(), av.data(), gb.data());
                              } else {
                                  for (int i = 0; i < m; ++i)
                                      for (int j = 0; j < n; ++j) {
                                          const T gij = g[i * n + j];
                                          const T* ar = &av[i * k];
                                          T* gr = &gb[j * k];
                                          for (int p = 0; p < k; ++p) gr[p] += gij * ar[p];
                                      }
                              }
                              accumulate(bn, gb);
                          }
                      });
    }

    TensorT<T> transpose(const TensorT<T>& a) {
        require_rank(a, 2, "transpose");
        const int m = a.rows(), n = a.cols();
        TensorT<T> out = raw({n, m});
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) out.values[j * m + i] = a.values[i * n + j];
        return finish(out, {&a}, [this, an = a.node, m, n](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(static_cast<std::size_t>(m) * n);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) ga[i * n + j] = g[j * m + i];
            accumulate(an, ga);
        });
    }

    // ---- reductions and row ops ----

    TensorT<T> row_softmax(const TensorT<T>& a) {
        require_rank(a, 2, "row_softmax");
        const int m = a.rows(), n = a.cols();
        TensorT<T> out = raw({m, n});
        for (int i = 0; i < m; ++i) {
            const T* x = &a.values[i * n];
            T mx = x[0];
            for (int j = 1; j < n; ++j) mx = std::max(mx, x[j]);
            T z = 0;
            for (int j = 0; j < n; ++j) z += std::exp(x[j] - mx);
            for (int j = 0; j < n; ++j) out.values[i * n + j] = std::exp(x[j] - mx) / z;
        }
        return finish(out, {&a}, [this, an = a.node, y = out.values, m, n](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(static_cast<std::size_t>(m) * n);
            for (int i = 0; i < m; ++i) {
                T dot = 0;
                for (int j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
                for (int j = 0; j < n; ++j)
                    ga[i * n + j] = y[i * n + j] * (g[i * n + j] - dot);
            }
            accumulate(an, ga);
        });
    }

    // log-sum-exp over the last axis of a matrix -> vector of row LSEs
    TensorT<T> lse_rows(const TensorT<T>& a) {
        require_rank(a, 2, "lse_rows");
        const int m = a.rows(), n = a.cols();
        TensorT<T> out = raw({m});
        for (int i = 0; i < m; ++i) {
            const T* x = &a.values[i * n];
            T mx = x[0];
            for (int j = 1; j < n; ++j) mx = std::max(mx, x[j]);
            T z = 0;
            for (int j = 0; j < n; ++j) z += std::exp(x[j] - mx);
            out.values[i] = mx + std::log(z);
        }
        return finish(out, {&a},
                      [this, an = a.node, x = a.values, y = out.values, m, n](const std::vector<T>& g) {
                          if (an < 0) return;
                          std::vector<T> ga(static_cast<std::size_t>(m) * n);
                          for (int i = 0; i < m; ++i)
                              for (int j = 0; j < n; ++j)
                                  ga[i * n + j] = g[i] * std::exp(x[i * n + j] - y[i]);
                          accumulate(an, ga);
                      });
    }

    // mean over axis 0 of a matrix -> vector of column means
    TensorT<T> mean_rows(const TensorT<T>& a) {
        require_rank(a, 2, "mean_rows");
        const int m = a.rows(), n = a.cols();
        TensorT<T> out = raw({n});
        std::fill(out.values.begin(), out.values.end(), T(0));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) out.values[j] += a.values[i * n + j];
        for (int j = 0; j < n; ++j) out.values[j] /= T(m);
        return finish(out, {&a}, [this, an = a.node, m, n](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(static_cast<std::size_t>(m) * n);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) ga[i * n + j] = g[j] / T(m);
            accumulate(an, ga);
        });
    }

    TensorT<T> sum_all(const TensorT<T>& a) {
        TensorT<T> out = raw({});
        T s = 0;
        for (T v : a.values) s += v;
        out.values[0] = s;
        return finish(out, {&a}, [this, an = a.node, n = a.numel()](const std::vector<T>& g) {
            if (an < 0) return;
            accumulate(an, std::vector<T>(static_cast<std::size_t>(n), g[0]));
        });
    }

    TensorT<T> mean_all(const TensorT<T>& a) {
        TensorT<T> out = raw({});
        T s = 0;
        for (T v : a.values) s += v;
        out.values[0] = s / T(a.numel());
        return finish(out, {&a}, [this, an = a.node, n = a.numel()](const std::vector<T>& g) {
            if (an < 0) return;
            accumulate(an, std::vector<T>(static_cast<std::size_t>(n), g[0] / T(n)));
        });
    }

    TensorT<T> diag(const TensorT<T>& a) {
        require_rank(a, 2, "diag");
        if (a.rows() != a.cols()) throw ShapeMismatch("diag needs a square matrix");
        const int n = a.rows();
        TensorT<T> out = raw({n});
        for (int i = 0; i < n; ++i) out.values[i] = a.values[i * n + i];
        return finish(out, {&a}, [this, an = a.node, n](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(static_cast<std::size_t>(n) * n, T(0));
            for (int i = 0; i < n; ++i) ga[i * n + i] = g[i];
            accumulate(an, ga);
        });
    }

    // ---- shape ops ----

    TensorT<T> reshape(const TensorT<T>& a, std::vector<int> shape) {
        int n = 1;
        for (int d : shape) n *= d;
        if (n != a.numel()) throw ShapeMismatch("reshape numel mismatch");
        TensorT<T> out = raw(shape);
        out.values = a.values;
        return finish(out, {&a},
                      [this, an = a.node](const std::vector<T>& g) { accumulate(an, g); });
    }

    // concat along the last axis; all parts share leading dims (rank 1 or 2)
    TensorT<T> concat_last(const std::vector<TensorT<T>>& parts) {
        if (parts.empty()) throw ShapeMismatch("concat_last of nothing");
        const int rank = parts[0].rank();
        if (rank != 1 && rank != 2) throw ShapeMismatch("concat_last supports rank 1 or 2");
        const int m = rank == 2 ? parts[0].rows() : 1;
        int total = 0;
        for (const auto& p : parts) {
            if (p.rank() != rank || (rank == 2 && p.rows() != m))
                throw ShapeMismatch("concat_last ragged parts");
            total += rank == 2 ? p.cols() : p.shape[0];
        }
        TensorT<T> out = rank == 2 ? raw({m, total}) : raw({total});
        std::vector<int> widths, nodes;
        int off = 0;
        for (const auto& p : parts) {
            const int w = rank == 2 ? p.cols() : p.shape[0];
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < w; ++j)
                    out.values[i * total + off + j] = p.values[i * w + j];
            widths.push_back(w);
            nodes.push_back(p.node);
            off += w;
        }
        std::vector<const TensorT<T>*> refs;
        for (const auto& p : parts) refs.push_back(&p);
        return finish_multi(out, refs,
                            [this, widths, nodes, m, total](const std::vector<T>& g) {
                                int off = 0;
                                for (std::size_t k = 0; k < widths.size(); ++k) {
                                    const int w = widths[k];
                                    if (nodes[k] >= 0) {
                                        std::vector<T> gp(static_cast<std::size_t>(m) * w);
                                        for (int i = 0; i < m; ++i)
                                            for (int j = 0; j < w; ++j)
                                                gp[i * w + j] = g[i * total + off + j];
                                        accumulate(nodes[k], gp);
                                    }
                                    off += w;
                                }
                            });
    }

    // columns [c0, c0+w) of a matrix
    TensorT<T> slice_cols(const TensorT<T>& a, int c0, int w) {
        require_rank(a, 2, "slice_cols");
        const int m = a.rows(), n = a.cols();
        if (c0 < 0 || w <= 0 || c0 + w > n) throw ShapeMismatch("slice_cols out of range");
        TensorT<T> out = raw({m, w});
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < w; ++j) out.values[i * w + j] = a.values[i * n + c0 + j];
        return finish(out, {&a}, [this, an = a.node, m, n, c0, w](const std::vector<T>& g) {
            if (an < 0) return;
            std::vector<T> ga(static_cast<std::size_t>(m) * n, T(0));
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < w; ++j) ga[i * n + c0 + j] = g[i * w + j];
            accumulate(an, ga);
        });
    }

    // stack k vectors of equal length into a [k, n] matrix
    TensorT<T> stack_rows(const std::vector<TensorT<T>>& parts) {
        if (parts.empty()) throw ShapeMismatch("stack_rows of nothing");
        const int n = parts[0].numel();
        for (const auto& p : parts)
            if (p.rank() != 1 || p.numel() != n) throw ShapeMismatch("stack_rows ragged parts");
        const int k = static_cast<int>(parts.size());
        TensorT<T> out = raw({k, n});
        std::vector<int> nodes;
        for (int i = 0; i < k; ++i) {
            std::copy(parts[i].values.begin(), parts[i].values.end(), out.values.begin() + i * n);
            nodes.push_back(parts[i].node);
        }
        std::vector<const TensorT<T>*> refs;
        for (const auto& p : parts) refs.push_back(&p);
        return finish_multi(out, refs, [this, nodes, n](const std::vector<T>& g) {
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                if (nodes[i] < 0) continue;
                accumulate(nodes[i],
                           std::vector<T>(g.begin() + i * n, g.begin() + (i + 1) * n));
            }
        });
    }

    // broadcast-add a row vector to every row of a matrix
    TensorT<T> add_rowvec(const TensorT<T>& a, const TensorT<T>& v) {
        require_rank(a, 2, "add_rowvec lhs");
        require_rank(v, 1, "add_rowvec rhs");
        const int m = a.rows(), n = a.cols();
        if (v.numel() != n) throw ShapeMismatch("add_rowvec width mismatch");
        TensorT<T> out = raw({m, n});
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) out.values[i * n + j] = a.values[i * n + j] + v.values[j];
        return finish(out, {&a, &v},
                      [this, an = a.node, vn = v.node, m, n](const std::vector<T>& g) {
                          accumulate(an, g);
                          if (vn >= 0) {
                              std::vector<T> gv(static_cast<std::size_t>(n), T(0));
                              for (int i = 0; i < m; ++i)
                                  for (int j = 0; j < n; ++j) gv[j] += g[i * n + j];
                              accumulate(vn, gv);
                          }
                      });
    }

    // ---- embedding, normalization, similarity ----

    // gather rows of `table` ([V, d]) at the given indices
    TensorT<T> embedding(const TensorT<T>& table, const std::vector<int>& ids) {
        require_rank(table, 2, "embedding table");
        const int v = table.rows(), d = table.cols();
        for (int id : ids)
            if (id < 0 || id >= v) throw OutOfRange("embedding id " + std::to_string(id));
        const int len = static_cast<int>(ids.size());
        TensorT<T> out = raw({len, d});
        for (int i = 0; i < len; ++i)
            std::copy(table.values.begin() + ids[i] * d, table.values.begin() + (ids[i] + 1) * d,
                      out.values.begin() + i * d);
        return finish(out, {&table}, [this, tn = table.node, ids, v, d](const std::vector<T>& g) {
            if (tn < 0) return;
            std::vector<T> gt(static_cast<std::size_t>(v) * d, T(0));
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (int j = 0; j < d; ++j) gt[ids[i] * d + j] += g[i * d + j];
            accumulate(tn, gt);
        });
    }

    // per-row y = (x - mu) / sqrt(var + eps) * gain + bias
    TensorT<T> layer_norm(const TensorT<T>& x, const TensorT<T>& gain, const TensorT<T>& bias,
                          T eps = T(1e-5)) {
        require_rank(x, 2, "layer_norm input");
        const int m = x.rows(), n = x.cols();
        if (gain.numel() != n || bias.numel() != n) throw ShapeMismatch("layer_norm gain/bias width");
        TensorT<T> out = raw({m, n});
        std::vector<T> xhat(static_cast<std::size_t>(m) * n), inv_sd(m);
        for (int i = 0; i < m; ++i) {
            const T* xr = &x.values[i * n];
            T mu = 0;
            for (int j = 0; j < n; ++j) mu += xr[j];
            mu /= T(n);
            T var = 0;
            for (int j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
            var /= T(n);
            const T is = T(1) / std::sqrt(var + eps);
            inv_sd[i] = is;
            for (int j = 0; j < n; ++j) {
                xhat[i * n + j] = (xr[j] - mu) * is;
                out.values[i * n + j] = xhat[i * n + j] * gain.values[j] + bias.values[j];
            }
        }
        return finish(out, {&x, &gain, &bias},
                      [this, xn = x.node, gn = gain.node, bn = bias.node, gv = gain.values, xhat,
                       inv_sd, m, n](const std::vector<T>& g) {
                          if (gn >= 0) {
                              std::vector<T> gg(static_cast<std::size_t>(n), T(0));
                              for (int i = 0; i < m; ++i)
                                  for (int j = 0; j < n; ++j) gg[j] += g[i * n + j] * xhat[i * n + j];
                              accumulate(gn, gg);
                          }
                          if (bn >= 0) {
                              std::vector<T> gb(static_cast<std::size_t>(n), T(0));
                              for (int i = 0; i < m; ++i)
                                  for (int j = 0; j < n; ++j) gb[j] += g[i * n + j];
                              accumulate(bn, gb);
                          }
                          if (xn >= 0) {
                              std::vector<T> gx(static_cast<std::size_t>(m) * n);
                              for (int i = 0; i < m; ++i) {
                                  T mean_d = 0, mean_dx = 0;
                                  for (int j = 0; j < n; ++j) {
                                      const T d = g[i * n + j] * gv[j];
                                      mean_d += d;
                                      mean_dx += d * xhat[i * n + j];
                                  }
                                  mean_d /= T(n);
                                  mean_dx /= T(n);
                                  for (int j = 0; j < n; ++j) {
                                      const T d = g[i * n + j] * gv[j];
                                      gx[i * n + j] =
                                          inv_sd[i] * (d - mean_d - xhat[i * n + j] * mean_dx);
                                  }
                              }
                              accumulate(xn, gx);
                          }
                      });
    }

    // rows scaled to unit L2 norm; eps added to each norm before division
    TensorT<T> normalize_rows(const TensorT<T>& a, T eps = T(1e-8)) {
        require_rank(a, 2, "normalize_rows");
        const int m = a.rows(), n = a.cols();
        TensorT<T> out = raw({m, n});
        std::vector<T> norms(m);
        for (int i = 0; i < m; ++i) {
            T s = 0;
            for (int j = 0; j < n; ++j) s += a.values[i * n + j] * a.values[i * n + j];
            norms[i] = std::sqrt(s);
            const T inv = T(1) / (norms[i] + eps);
            for (int j = 0; j < n; ++j) out.values[i * n + j] = a.values[i * n + j] * inv;
        }
        return finish(out, {&a},
                      [this, an = a.node, x = a.values, norms, eps, m, n](const std::vector<T>& g) {
                          if (an < 0) return;
                          std::vector<T> ga(static_cast<std::size_t>(m) * n);
                          for (int i = 0; i < m; ++i) {
                              const T r = norms[i];
                              const T inv = T(1) / (r + eps);
                              T dot = 0;
                              for (int j = 0; j < n; ++j) dot += g[i * n + j] * x[i * n + j];
                              for (int j = 0; j < n; ++j) {
                                  T t = g[i * n + j] * inv;
                                  if (r > T(0)) t -= dot * x[i * n + j] / (r * (r + eps) * (r + eps));
                                  ga[i * n + j] = t;
                              }
                          }
                          accumulate(an, ga);
                      });
    }

    // cosine similarity of two vectors; eps on each norm guards zero vectors
    TensorT<T> cosine(const TensorT<T>& a, const TensorT<T>& b, T eps = T(1e-8)) {
        require_rank(a, 1, "cosine lhs");
        require_rank(b, 1, "cosine rhs");
        if (a.numel() != b.numel()) throw ShapeMismatch("cosine dim mismatch");
        const int n = a.numel();
        T dot = 0, na2 = 0, nb2 = 0;
        for (int i = 0; i < n; ++i) {
            dot += a.values[i] * b.values[i];
            na2 += a.values[i] * a.values[i];
            nb2 += b.values[i] * b.values[i];
        }
        const T na = std::sqrt(na2), nb = std::sqrt(nb2);
        const T denom = (na + eps) * (nb + eps);
        TensorT<T> out = raw({});
        out.values[0] = dot / denom;
        return finish(out, {&a, &b},
                      [this, an = a.node, bn = b.node, av = a.values, bv = b.values, dot, na, nb,
                       eps, n](const std::vector<T>& g) {
                          const T denom = (na + eps) * (nb + eps);
                          if (an >= 0) {
                              std::vector<T> ga(static_cast<std::size_t>(n));
                              for (int i = 0; i < n; ++i) {
                                  T t = bv[i] / denom;
                                  if (na > T(0))
                                      t -= dot * av[i] / (na * (na + eps) * (na + eps) * (nb + eps));
                                  ga[i] = g[0] * t;
                              }
                              accumulate(an, ga);
                          }
                          if (bn >= 0) {
                              std::vector<T> gb(static_cast<std::size_t>(n));
                              for (int i = 0; i < n; ++i) {
                                  T t = av[i] / denom;
                                  if (nb > T(0))
                                      t -= dot * bv[i] / (nb * (nb + eps) * (nb + eps) * (na + eps));
                                  gb[i] = g[0] * t;
                              }
                              accumulate(bn, gb);
                          }
                      });
    }

    // ---- backward ----

    void backward(const TensorT<T>& loss) {
        if (!loss.is_scalar())
            throw NotScalar("backward needs a scalar loss, got numel " +
                            std::to_string(loss.numel()));
        if (loss.node < 0) return;  // constant loss: all gradients stay zero
        for (auto& n : nodes_)
            if (!n.grad.empty()) std::fill(n.grad.begin(), n.grad.end(), T(0));
        grad_slot(loss.node).assign(1, T(1));
        // nodes were appended in topological order, so one reverse sweep
        // visits each exactly once
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
            if (!nodes_[i].back || nodes_[i].grad.empty()) continue;
            nodes_[i].back(nodes_[i].grad);
        }
    }

    std::vector<T> grad(const TensorT<T>& t) const {
        if (t.node < 0) return std::vector<T>(static_cast<std::size_t>(t.numel()), T(0));
        const auto& g = nodes_[t.node].grad;
        if (g.empty()) return std::vector<T>(static_cast<std::size_t>(t.numel()), T(0));
        return g;
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        int numel = 0;
        std::vector<T> grad;  // lazily sized
        std::function<void(const std::vector<T>&)> back;
    };
    std::vector<Node> nodes_;

    static void check_numel(const std::vector<int>& shape, std::size_t n) {
        std::size_t expect = 1;
        for (int d : shape) {
            if (d <= 0) throw ShapeMismatch("non-positive dimension");
            expect *= static_cast<std::size_t>(d);
        }
        if (expect != n)
            throw ShapeMismatch("shape wants " + std::to_string(expect) + " values, got " +
                                std::to_string(n));
    }

    static void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
        if (a.shape != b.shape) throw ShapeMismatch(std::string(op) + ": shapes differ");
    }
    static void require_rank(const TensorT<T>& a, int r, const char* what) {
        if (a.rank() != r)
            throw ShapeMismatch(std::string(what) + ": expected rank " + std::to_string(r));
    }

    TensorT<T> raw(std::vector<int> shape) const {
        TensorT<T> t;
        t.shape = std::move(shape);
        t.values.resize(static_cast<std::size_t>(t.numel()));
        return t;
    }

    int push_node(int numel, std::function<void(const std::vector<T>&)> back) {
        nodes_.push_back(Node{numel, {}, std::move(back)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    std::vector<T>& grad_slot(int node) {
        auto& n = nodes_[node];
        if (n.grad.empty()) n.grad.assign(static_cast<std::size_t>(n.numel), T(0));
        return n.grad;
    }

    void accumulate(int node, const std::vector<T>& g) {
        if (node < 0) return;
        auto& slot = grad_slot(node);
        for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i];
    }

    static bool tracked(std::initializer_list<const TensorT<T>*> ins) {
        for (const auto* t : ins)
            if (t->node >= 0 || t->requires_grad) return true;
        return false;
    }

    TensorT<T> finish(TensorT<T> out, std::initializer_list<const TensorT<T>*> ins,
                      std::function<void(const std::vector<T>&)> back) {
        if (debug_finite_checks()) check_finite(out.values, "op output");
        if (tracked(ins)) {
            out.requires_grad = true;
            out.node = push_node(out.numel(), std::move(back));
        }
        return out;
    }

    TensorT<T> finish_multi(TensorT<T> out, const std::vector<const TensorT<T>*>& ins,
                            std::function<void(const std::vector<T>&)> back) {
        if (debug_finite_checks()) check_finite(out.values, "op output");
        bool t = false;
        for (const auto* p : ins)
            if (p->node >= 0 || p->requires_grad) t = true;
        if (t) {
            out.requires_grad = true;
            out.node = push_node(out.numel(), std::move(back));
        }
        return out;
    }
};

using Tensor = TensorT<float>;
using Tape = TapeT<float>;

} // namespace cood::ad
