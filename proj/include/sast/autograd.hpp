#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "sast/tensor.hpp"

namespace sast::ag {

/// Tape-based reverse-mode autodiff over sast::Tensor. The graph is built
/// dynamically; creation order doubles as a topological order.

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    uint64_t id = 0;
    std::vector<Var> parents;
    std::function<void()> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad = Tensor(value.shape());
    }
};

inline uint64_t next_id() {
    static thread_local uint64_t counter = 0;
    return ++counter;
}

inline Var leaf(Tensor v, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    n->id = next_id();
    return n;
}

inline Var make_node(Tensor value, std::vector<Var> parents, std::function<void()>* out_hook) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->id = next_id();
    for (const auto& p : parents) n->requires_grad |= p->requires_grad;
    n->parents = std::move(parents);
    (void)out_hook;
    return n;
}

inline void backward(const Var& loss) {
    if (loss->value.size() != 1)
        throw std::invalid_argument("backward: loss must be scalar");
    // Collect reachable nodes, then run in reverse creation order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Var> stack{loss};
    std::vector<Var> keep;  // keep shared ownership during traversal
    while (!stack.empty()) {
        Var v = stack.back();
        stack.pop_back();
        if (!seen.insert(v.get()).second) continue;
        keep.push_back(v);
        order.push_back(v.get());
        for (const auto& p : v->parents) stack.push_back(p);
    }
    std::sort(order.begin(), order.end(),
              [](const Node* a, const Node* b) { return a->id > b->id; });
    loss->ensure_grad();
    loss->grad[0] = 1.0;
    for (Node* n : order) {
        if (n->backward_fn && n->requires_grad) n->backward_fn();
    }
}

inline void zero_grad(const Var& v) { v->grad = Tensor(); }

// ---------------------------------------------------------------------------
// Elementwise and broadcast ops

inline Var add(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("ag::add: shape mismatch");
    Tensor out = a->value;
    out += b->value;
    Var n = make_node(std::move(out), {a, b}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, a, b]() {
        if (a->requires_grad) {
            a->ensure_grad();
            for (int64_t i = 0; i < np->grad.size(); ++i) a->grad[i] += np->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int64_t i = 0; i < np->grad.size(); ++i) b->grad[i] += np->grad[i];
        }
    };
    return n;
}

inline Var sub(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("ag::sub: shape mismatch");
    Tensor out = a->value;
    for (int64_t i = 0; i < out.size(); ++i) out[i] -= b->value[i];
    Var n = make_node(std::move(out), {a, b}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, a, b]() {
        if (a->requires_grad) {
            a->ensure_grad();
            for (int64_t i = 0; i < np->grad.size(); ++i) a->grad[i] += np->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int64_t i = 0; i < np->grad.size(); ++i) b->grad[i] -= np->grad[i];
        }
    };
    return n;
}

inline Var mul(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("ag::mul: shape mismatch");
    Tensor out = a->value;
    for (int64_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
    Var n = make_node(std::move(out), {a, b}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, a, b]() {
        if (a->requires_grad) {
            a->ensure_grad();
            for (int64_t i = 0; i < np->grad.size(); ++i)
                a->grad[i] += np->grad[i] * b->value[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int64_t i = 0; i < np->grad.size(); ++i)
                b->grad[i] += np->grad[i] * a->value[i];
        }
    };
    return n;
}

inline Var scale(const Var& a, double s) {
    Tensor out = a->value;
    out *= s;
    Var n = make_node(std::move(out), {a}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, a, s]() {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (int64_t i = 0; i < np->grad.size(); ++i) a->grad[i] += s * np->grad[i];
    };
    return n;
}

/// x: (T, D), v: (D) added to every row.
inline Var add_row(const Var& x, const Var& v) {
    const int64_t T = x->value.dim(0), D = x->value.dim(1);
    if (v->value.size() != D) throw std::invalid_argument("ag::add_row: size mismatch");
    Tensor out = x->value;
    for (int64_t t = 0; t < T; ++t)
        for (int64_t d = 0; d < D; ++d) out.at2(t, d) += v->value[d];
    Var n = make_node(std::move(out), {x, v}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x, v, T, D]() {
        if (x->requires_grad) {
            x->ensure_grad();
            for (int64_t i = 0; i < np->grad.size(); ++i) x->grad[i] += np->grad[i];
        }
        if (v->requires_grad) {
            v->ensure_grad();
            for (int64_t t = 0; t < T; ++t)
                for (int64_t d = 0; d < D; ++d) v->grad[d] += np->grad.at2(t, d);
        }
    };
    return n;
}

/// x: (C, L), v: (C) added along every column position.
inline Var add_col(const Var& x, const Var& v) {
    const int64_t C = x->value.dim(0), L = x->value.dim(1);
    if (v->value.size() != C) throw std::invalid_argument("ag::add_col: size mismatch");
    Tensor out = x->value;
    for (int64_t c = 0; c < C; ++c)
        for (int64_t l = 0; l < L; ++l) out.at2(c, l) += v->value[c];
    Var n = make_node(std::move(out), {x, v}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x, v, C, L]() {
        if (x->requires_grad) {
            x->ensure_grad();
            for (int64_t i = 0; i < np->grad.size(); ++i) x->grad[i] += np->grad[i];
        }
        if (v->requires_grad) {
            v->ensure_grad();
            for (int64_t c = 0; c < C; ++c)
                for (int64_t l = 0; l < L; ++l) v->grad[c] += np->grad.at2(c, l);
        }
    };
    return n;
}

// ---------------------------------------------------------------------------
// Linear algebra

inline Var matmul(const Var& a, const Var& b) {
    const int64_t m = a->value.dim(0), k = a->value.dim(1);
    if (b->value.dim(0) != k) throw std::invalid_argument("ag::matmul: inner dim mismatch");
    const int64_t p = b->value.dim(1);
    Tensor out({m, p});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < k; ++j) {
            double av = a->value.at2(i, j);
            if (av == 0.0) continue;
            for (int64_t c = 0; c < p; ++c) out.at2(i, c) += av * b->value.at2(j, c);
        }
    Var n = make_node(std::move(out), {a, b}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, a, b, m, k, p]() {
        if (a->requires_grad) {
            a->ensure_grad();
            for (int64_t i = 0; i < m; ++i)
                for (int64_t c = 0; c < p; ++c) {
                    double g = np->grad.at2(i, c);
                    if (g == 0.0) continue;
                    for (int64_t j = 0; j < k; ++j) a->grad.at2(i, j) += g * b->value.at2(j, c);
                }
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < k; ++j) {
                    double av = a->value.at2(i, j);
                    if (av == 0.0) continue;
                    for (int64_t c = 0; c < p; ++c) b->grad.at2(j, c) += av * np->grad.at2(i, c);
                }
        }
    };
    return n;
}

inline Var transpose(const Var& a) {
    const int64_t m = a->value.dim(0), k = a->value.dim(1);
    Tensor out({k, m});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < k; ++j) out.at2(j, i) = a->value.at2(i, j);
    Var n = make_node(std::move(out), {a}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, a, m, k]() {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < k; ++j) a->grad.at2(i, j) += np->grad.at2(j, i);
    };
    return n;
}

/// x: (T, in) @ W: (in, out) + bias (out).
inline Var linear(const Var& x, const Var& W, const Var& b) {
    return add_row(matmul(x, W), b);
}

// ---------------------------------------------------------------------------
// Nonlinearities

inline Var relu(const Var& a) {
    Tensor out = a->value;
    for (int64_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
    Var n = make_node(std::move(out), {a}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, a]() {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (int64_t i = 0; i < np->grad.size(); ++i)
            if (a->value[i] > 0.0) a->grad[i] += np->grad[i];
    };
    return n;
}

inline Var silu(const Var& a) {
    Tensor out = a->value;
    for (int64_t i = 0; i < out.size(); ++i) {
        double s = 1.0 / (1.0 + std::exp(-out[i]));
        out[i] *= s;
    }
    Var n = make_node(std::move(out), {a}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, a]() {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (int64_t i = 0; i < np->grad.size(); ++i) {
            double x = a->value[i];
            double s = 1.0 / (1.0 + std::exp(-x));
            a->grad[i] += np->grad[i] * (s + x * s * (1.0 - s));
        }
    };
    return n;
}

inline Var sigmoid(const Var& a) {
    Tensor out = a->value;
    for (int64_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    Var n = make_node(std::move(out), {a}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, a]() {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (int64_t i = 0; i < np->grad.size(); ++i) {
            double y = np->value[i];
            a->grad[i] += np->grad[i] * y * (1.0 - y);
        }
    };
    return n;
}

// ---------------------------------------------------------------------------
// Normalization

/// Row-wise layer norm on (T, D) with per-feature gamma/beta.
inline Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5) {
    const int64_t T = x->value.dim(0), D = x->value.dim(1);
    Tensor out({T, D});
    std::vector<double> means(static_cast<size_t>(T)), inv_stds(static_cast<size_t>(T));
    for (int64_t t = 0; t < T; ++t) {
        double mean = 0;
        for (int64_t d = 0; d < D; ++d) mean += x->value.at2(t, d);
        mean /= static_cast<double>(D);
        double var = 0;
        for (int64_t d = 0; d < D; ++d) {
            double c = x->value.at2(t, d) - mean;
            var += c * c;
        }
        var /= static_cast<double>(D);
        double inv = 1.0 / std::sqrt(var + eps);
        means[static_cast<size_t>(t)] = mean;
        inv_stds[static_cast<size_t>(t)] = inv;
        for (int64_t d = 0; d < D; ++d)
            out.at2(t, d) = gamma->value[d] * (x->value.at2(t, d) - mean) * inv + beta->value[d];
    }
    Var n = make_node(std::move(out), {x, gamma, beta}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x, gamma, beta, T, D, means, inv_stds]() {
        for (int64_t t = 0; t < T; ++t) {
            double mean = means[static_cast<size_t>(t)];
            double inv = inv_stds[static_cast<size_t>(t)];
            double sum_gy = 0, sum_gyx = 0;
            for (int64_t d = 0; d < D; ++d) {
                double xhat = (x->value.at2(t, d) - mean) * inv;
                double gy = np->grad.at2(t, d) * gamma->value[d];
                sum_gy += gy;
                sum_gyx += gy * xhat;
                if (gamma->requires_grad) {
                    gamma->ensure_grad();
                    gamma->grad[d] += np->grad.at2(t, d) * xhat;
                }
                if (beta->requires_grad) {
                    beta->ensure_grad();
                    beta->grad[d] += np->grad.at2(t, d);
                }
            }
            if (x->requires_grad) {
                x->ensure_grad();
                for (int64_t d = 0; d < D; ++d) {
                    double xhat = (x->value.at2(t, d) - mean) * inv;
                    double gy = np->grad.at2(t, d) * gamma->value[d];
                    x->grad.at2(t, d) +=
                        inv * (gy - sum_gy / static_cast<double>(D) -
                               xhat * sum_gyx / static_cast<double>(D));
                }
            }
        }
    };
    return n;
}

/// Group norm on (C, L) with per-channel gamma/beta. Statistics are taken
/// over each channel group and all positions.
/// Statistics are taken per time step (over the group's channels only) so
/// the op stays strictly causal along the time axis.
inline Var group_norm(const Var& x, const Var& gamma, const Var& beta, int64_t groups,
                      double eps = 1e-5) {
    const int64_t C = x->value.dim(0), L = x->value.dim(1);
    if (C % groups != 0) throw std::invalid_argument("ag::group_norm: C not divisible by groups");
    const int64_t gsize = C / groups;
    Tensor out({C, L});
    std::vector<double> means(static_cast<size_t>(groups * L)),
        inv_stds(static_cast<size_t>(groups * L));
    for (int64_t g = 0; g < groups; ++g)
        for (int64_t l = 0; l < L; ++l) {
            double mean = 0;
            for (int64_t c = g * gsize; c < (g + 1) * gsize; ++c) mean += x->value.at2(c, l);
            mean /= static_cast<double>(gsize);
            double var = 0;
            for (int64_t c = g * gsize; c < (g + 1) * gsize; ++c) {
                double d = x->value.at2(c, l) - mean;
                var += d * d;
            }
            var /= static_cast<double>(gsize);
            double inv = 1.0 / std::sqrt(var + eps);
            means[static_cast<size_t>(g * L + l)] = mean;
            inv_stds[static_cast<size_t>(g * L + l)] = inv;
            for (int64_t c = g * gsize; c < (g + 1) * gsize; ++c)
                out.at2(c, l) =
                    gamma->value[c] * (x->value.at2(c, l) - mean) * inv + beta->value[c];
        }
    Var n = make_node(std::move(out), {x, gamma, beta}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x, gamma, beta, groups, gsize, L, means, inv_stds]() {
        for (int64_t g = 0; g < groups; ++g)
            for (int64_t l = 0; l < L; ++l) {
                const double mean = means[static_cast<size_t>(g * L + l)];
                const double inv = inv_stds[static_cast<size_t>(g * L + l)];
                const double cnt = static_cast<double>(gsize);
                double sum_gy = 0, sum_gyx = 0;
                for (int64_t c = g * gsize; c < (g + 1) * gsize; ++c) {
                    double xhat = (x->value.at2(c, l) - mean) * inv;
                    double gy = np->grad.at2(c, l) * gamma->value[c];
                    sum_gy += gy;
                    sum_gyx += gy * xhat;
                    if (gamma->requires_grad) {
                        gamma->ensure_grad();
                        gamma->grad[c] += np->grad.at2(c, l) * xhat;
                    }
                    if (beta->requires_grad) {
                        beta->ensure_grad();
                        beta->grad[c] += np->grad.at2(c, l);
                    }
                }
                if (x->requires_grad) {
                    x->ensure_grad();
                    for (int64_t c = g * gsize; c < (g + 1) * gsize; ++c) {
                        double xhat = (x->value.at2(c, l) - mean) * inv;
                        double gy = np->grad.at2(c, l) * gamma->value[c];
                        x->grad.at2(c, l) += inv * (gy - sum_gy / cnt - xhat * sum_gyx / cnt);
                    }
                }
            }
    };
    return n;
}

// ---------------------------------------------------------------------------
// Convolution and resampling on (C, L)

/// Causal 1-d convolution: left-padded with zeros so position t only sees
/// inputs <= t; stride subsamples the output.
inline Var conv1d_causal(const Var& x, const Var& W, const Var& b, int64_t stride = 1) {
    const int64_t Cin = x->value.dim(0), L = x->value.dim(1);
    const int64_t Cout = W->value.dim(0), K = W->value.dim(2);
    if (W->value.dim(1) != Cin) throw std::invalid_argument("ag::conv1d: channel mismatch");
    const int64_t Lout = (L + stride - 1) / stride;
    Tensor out({Cout, Lout});
    for (int64_t oc = 0; oc < Cout; ++oc)
        for (int64_t ot = 0; ot < Lout; ++ot) {
            double acc = b->value[oc];
            const int64_t t = ot * stride;
            for (int64_t k = 0; k < K; ++k) {
                const int64_t it = t - (K - 1) + k;
                if (it < 0) continue;
                for (int64_t ic = 0; ic < Cin; ++ic)
                    acc += W->value.at3(oc, ic, k) * x->value.at2(ic, it);
            }
            out.at2(oc, ot) = acc;
        }
    Var n = make_node(std::move(out), {x, W, b}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x, W, b, Cin, L, Cout, K, stride]() {
        const int64_t Lout = np->value.dim(1);
        if (b->requires_grad) {
            b->ensure_grad();
            for (int64_t oc = 0; oc < Cout; ++oc)
                for (int64_t ot = 0; ot < Lout; ++ot) b->grad[oc] += np->grad.at2(oc, ot);
        }
        const bool gx = x->requires_grad, gw = W->requires_grad;
        if (gx) x->ensure_grad();
        if (gw) W->ensure_grad();
        if (!gx && !gw) return;
        for (int64_t oc = 0; oc < Cout; ++oc)
            for (int64_t ot = 0; ot < Lout; ++ot) {
                double g = np->grad.at2(oc, ot);
                if (g == 0.0) continue;
                const int64_t t = ot * stride;
                for (int64_t k = 0; k < K; ++k) {
                    const int64_t it = t - (K - 1) + k;
                    if (it < 0) continue;
                    for (int64_t ic = 0; ic < Cin; ++ic) {
                        if (gw) W->grad.at3(oc, ic, k) += g * x->value.at2(ic, it);
                        if (gx) x->grad.at2(ic, it) += g * W->value.at3(oc, ic, k);
                    }
                }
            }
    };
    return n;
}

/// Linear 2x upsampling along the time axis: even positions copy, odd
/// positions average neighbors (last one replicates).
/// Nearest-neighbour repeat; interpolation with the next position would
/// leak future frames across block boundaries.
inline Var upsample2(const Var& x) {
    const int64_t C = x->value.dim(0), L = x->value.dim(1);
    Tensor out({C, 2 * L});
    for (int64_t c = 0; c < C; ++c)
        for (int64_t l = 0; l < L; ++l) {
            double a = x->value.at2(c, l);
            out.at2(c, 2 * l) = a;
            out.at2(c, 2 * l + 1) = a;
        }
    Var n = make_node(std::move(out), {x}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x, C, L]() {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int64_t c = 0; c < C; ++c)
            for (int64_t l = 0; l < L; ++l)
                x->grad.at2(c, l) += np->grad.at2(c, 2 * l) + np->grad.at2(c, 2 * l + 1);
    };
    return n;
}

// ---------------------------------------------------------------------------
// Shape surgery on 2-d tensors

inline Var slice_rows(const Var& x, int64_t r0, int64_t r1) {
    const int64_t D = x->value.dim(1);
    Tensor out({r1 - r0, D});
    for (int64_t r = r0; r < r1; ++r)
        for (int64_t d = 0; d < D; ++d) out.at2(r - r0, d) = x->value.at2(r, d);
    Var n = make_node(std::move(out), {x}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x, r0, r1, D]() {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int64_t r = r0; r < r1; ++r)
            for (int64_t d = 0; d < D; ++d) x->grad.at2(r, d) += np->grad.at2(r - r0, d);
    };
    return n;
}

inline Var slice_cols(const Var& x, int64_t c0, int64_t c1) {
    const int64_t T = x->value.dim(0);
    Tensor out({T, c1 - c0});
    for (int64_t t = 0; t < T; ++t)
        for (int64_t c = c0; c < c1; ++c) out.at2(t, c - c0) = x->value.at2(t, c);
    Var n = make_node(std::move(out), {x}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x, c0, c1, T]() {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int64_t t = 0; t < T; ++t)
            for (int64_t c = c0; c < c1; ++c) x->grad.at2(t, c) += np->grad.at2(t, c - c0);
    };
    return n;
}

inline Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("ag::concat_rows: empty");
    const int64_t D = parts[0]->value.dim(1);
    int64_t T = 0;
    for (const auto& p : parts) {
        if (p->value.dim(1) != D) throw std::invalid_argument("ag::concat_rows: width mismatch");
        T += p->value.dim(0);
    }
    Tensor out({T, D});
    int64_t r = 0;
    for (const auto& p : parts) {
        for (int64_t i = 0; i < p->value.dim(0); ++i)
            for (int64_t d = 0; d < D; ++d) out.at2(r + i, d) = p->value.at2(i, d);
        r += p->value.dim(0);
    }
    Var n = make_node(std::move(out), parts, nullptr);
    Node* np = n.get();
    std::vector<Var> ps = parts;
    n->backward_fn = [np, ps, D]() {
        int64_t r = 0;
        for (const auto& p : ps) {
            if (p->requires_grad) {
                p->ensure_grad();
                for (int64_t i = 0; i < p->value.dim(0); ++i)
                    for (int64_t d = 0; d < D; ++d) p->grad.at2(i, d) += np->grad.at2(r + i, d);
            }
            r += p->value.dim(0);
        }
    };
    return n;
}

inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("ag::concat_cols: empty");
    const int64_t T = parts[0]->value.dim(0);
    int64_t D = 0;
    for (const auto& p : parts) {
        if (p->value.dim(0) != T) throw std::invalid_argument("ag::concat_cols: height mismatch");
        D += p->value.dim(1);
    }
    Tensor out({T, D});
    int64_t c = 0;
    for (const auto& p : parts) {
        for (int64_t t = 0; t < T; ++t)
            for (int64_t d = 0; d < p->value.dim(1); ++d) out.at2(t, c + d) = p->value.at2(t, d);
        c += p->value.dim(1);
    }
    Var n = make_node(std::move(out), parts, nullptr);
    Node* np = n.get();
    std::vector<Var> ps = parts;
    n->backward_fn = [np, ps]() {
        int64_t c = 0;
        for (const auto& p : ps) {
            if (p->requires_grad) {
                p->ensure_grad();
                for (int64_t t = 0; t < p->value.dim(0); ++t)
                    for (int64_t d = 0; d < p->value.dim(1); ++d)
                        p->grad.at2(t, d) += np->grad.at2(t, c + d);
            }
            c += p->value.dim(1);
        }
    };
    return n;
}

// ---------------------------------------------------------------------------
// Attention building blocks

/// Row-wise softmax with an optional additive mask (use -inf to forbid).
inline Var softmax_rows(const Var& x, const Tensor* addmask = nullptr) {
    const int64_t T = x->value.dim(0), D = x->value.dim(1);
    if (addmask && !(addmask->dim(0) == T && addmask->dim(1) == D))
        throw std::invalid_argument("ag::softmax_rows: mask shape mismatch");
    Tensor out({T, D});
    for (int64_t t = 0; t < T; ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int64_t d = 0; d < D; ++d) {
            double v = x->value.at2(t, d) + (addmask ? addmask->at2(t, d) : 0.0);
            mx = std::max(mx, v);
        }
        double sum = 0;
        for (int64_t d = 0; d < D; ++d) {
            double v = x->value.at2(t, d) + (addmask ? addmask->at2(t, d) : 0.0);
            double e = std::exp(v - mx);
            out.at2(t, d) = e;
            sum += e;
        }
        for (int64_t d = 0; d < D; ++d) out.at2(t, d) /= sum;
    }
    Var n = make_node(std::move(out), {x}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x, T, D]() {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int64_t t = 0; t < T; ++t) {
            double dot = 0;
            for (int64_t d = 0; d < D; ++d) dot += np->grad.at2(t, d) * np->value.at2(t, d);
            for (int64_t d = 0; d < D; ++d)
                x->grad.at2(t, d) += np->value.at2(t, d) * (np->grad.at2(t, d) - dot);
        }
    };
    return n;
}

inline Var reshape(const Var& x, std::vector<int64_t> shape) {
    Tensor out(std::move(shape), x->value.vec());
    Var n = make_node(std::move(out), {x}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x]() {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int64_t i = 0; i < np->grad.size(); ++i) x->grad[i] += np->grad[i];
    };
    return n;
}

// ---------------------------------------------------------------------------
// Losses

/// sum(weights .* |pred - target|); `target` and `weights` are constants.
inline Var weighted_l1(const Var& pred, const Tensor& target, const Tensor& weights) {
    if (!pred->value.same_shape(target) || !pred->value.same_shape(weights))
        throw std::invalid_argument("ag::weighted_l1: shape mismatch");
    double sum = 0;
    for (int64_t i = 0; i < pred->value.size(); ++i)
        sum += weights[i] * std::abs(pred->value[i] - target[i]);
    Var n = make_node(Tensor::scalar(sum), {pred}, nullptr);
    Node* np = n.get();
    Tensor tgt = target, w = weights;
    n->backward_fn = [np, pred, tgt, w]() {
        if (!pred->requires_grad) return;
        pred->ensure_grad();
        double g = np->grad[0];
        for (int64_t i = 0; i < pred->value.size(); ++i) {
            double d = pred->value[i] - tgt[i];
            double s = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            pred->grad[i] += g * w[i] * s;
        }
    };
    return n;
}

inline Var sum_all(const Var& x) {
    double s = 0;
    for (int64_t i = 0; i < x->value.size(); ++i) s += x->value[i];
    Var n = make_node(Tensor::scalar(s), {x}, nullptr);
    Node* np = n.get();
    n->backward_fn = [np, x]() {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (int64_t i = 0; i < x->value.size(); ++i) x->grad[i] += np->grad[0];
    };
    return n;
}

}  // namespace sast::ag
