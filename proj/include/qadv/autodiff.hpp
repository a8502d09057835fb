#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qadv/errors.hpp"
#include "qadv/tensor.hpp"

namespace qadv {

using NodeId = std::size_t;

// Stable two-way softmax, shared by the loss node and by prediction code.
inline std::array<double, 2> softmax2(double l0, double l1) {
    const double m = std::max(l0, l1);
    const double e0 = std::exp(l0 - m);
    const double e1 = std::exp(l1 - m);
    const double z = e0 + e1;
    return {e0 / z, e1 / z};
}

// Reverse-mode tape. Every op records its inputs and a closure that maps the
// node's gradient back onto them. Tapes are single-use: build a graph, call
// backward once on a scalar, read grads.
class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    NodeId leaf(Tensor value) { return push(std::move(value), nullptr); }

    const Tensor& value(NodeId id) const { return node(id).value; }

    const Tensor& grad(NodeId id) const {
        if (!ran_backward_) {
            throw ContractError("gradient requested before backward()");
        }
        return node(id).grad;
    }

    std::size_t size() const { return nodes_.size(); }

    // y = W x + b with x:[in], W:[out,in], b:[out].
    NodeId dense(NodeId x_id, NodeId w_id, NodeId b_id) {
        const Tensor& x = value(x_id);
        const Tensor& w = value(w_id);
        const Tensor& b = value(b_id);
        if (x.rank() != 1 || w.rank() != 2 || b.rank() != 1 || w.dim(1) != x.dim(0) ||
            w.dim(0) != b.dim(0)) {
            throw DimensionError("dense: incompatible shapes x" + shape_string(x) + " w" +
                                 shape_string(w) + " b" + shape_string(b));
        }
        const std::size_t out = w.dim(0);
        const std::size_t in = w.dim(1);
        Tensor y({out});
        for (std::size_t o = 0; o < out; ++o) {
            double acc = b[o];
            for (std::size_t i = 0; i < in; ++i) {
                acc += w.at(o, i) * x[i];
            }
            y[o] = acc;
        }
        NodeId id = push(std::move(y), nullptr);
        node(id).back = [id, x_id, w_id, b_id, out, in](Tape& t) {
            const Tensor& g = t.node(id).grad;
            const Tensor& xv = t.value(x_id);
            const Tensor& wv = t.value(w_id);
            Tensor gx({in});
            Tensor gw({out, in});
            Tensor gb({out});
            for (std::size_t o = 0; o < out; ++o) {
                gb[o] = g[o];
                for (std::size_t i = 0; i < in; ++i) {
                    gx[i] += wv.at(o, i) * g[o];
                    gw.at(o, i) = g[o] * xv[i];
                }
            }
            t.accumulate(x_id, gx);
            t.accumulate(w_id, gw);
            t.accumulate(b_id, gb);
        };
        return id;
    }

    // Valid (no padding), stride-1 cross-correlation. x:[C,H,W], k:[K,C,kh,kw], b:[K].
    NodeId conv2d(NodeId x_id, NodeId k_id, NodeId b_id) {
        const Tensor& x = value(x_id);
        const Tensor& k = value(k_id);
        const Tensor& b = value(b_id);
        if (x.rank() != 3 || k.rank() != 4 || b.rank() != 1) {
            throw DimensionError("conv2d: need x rank 3, kernel rank 4, bias rank 1; got x" +
                                 shape_string(x) + " k" + shape_string(k) + " b" +
                                 shape_string(b));
        }
        const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
        const std::size_t K = k.dim(0), kh = k.dim(2), kw = k.dim(3);
        if (k.dim(1) != C) {
            throw DimensionError("conv2d: kernel channels " + std::to_string(k.dim(1)) +
                                 " != input channels " + std::to_string(C));
        }
        if (b.dim(0) != K) {
            throw DimensionError("conv2d: bias size " + std::to_string(b.dim(0)) +
                                 " != kernel count " + std::to_string(K));
        }
        if (kh > H || kw > W) {
            throw DimensionError("conv2d: kernel " + std::to_string(kh) + "x" +
                                 std::to_string(kw) + " larger than input " + std::to_string(H) +
                                 "x" + std::to_string(W));
        }
        const std::size_t OH = H - kh + 1, OW = W - kw + 1;
        Tensor y({K, OH, OW});
        for (std::size_t f = 0; f < K; ++f) {
            for (std::size_t i = 0; i < OH; ++i) {
                for (std::size_t j = 0; j < OW; ++j) {
                    double acc = b[f];
                    for (std::size_t c = 0; c < C; ++c) {
                        for (std::size_t u = 0; u < kh; ++u) {
                            for (std::size_t v = 0; v < kw; ++v) {
                                acc += k.at(f, c, u, v) * x.at(c, i + u, j + v);
                            }
                        }
                    }
                    y.at(f, i, j) = acc;
                }
            }
        }
        NodeId id = push(std::move(y), nullptr);
        node(id).back = [id, x_id, k_id, b_id, C, kh, kw, K, OH, OW](Tape& t) {
            const Tensor& g = t.node(id).grad;
            const Tensor& xv = t.value(x_id);
            const Tensor& kv = t.value(k_id);
            Tensor gx = Tensor::zeros_like(xv);
            Tensor gk = Tensor::zeros_like(kv);
            Tensor gb({K});
            for (std::size_t f = 0; f < K; ++f) {
                for (std::size_t i = 0; i < OH; ++i) {
                    for (std::size_t j = 0; j < OW; ++j) {
                        const double go = g.at(f, i, j);
                        gb[f] += go;
                        for (std::size_t c = 0; c < C; ++c) {
                            for (std::size_t u = 0; u < kh; ++u) {
                                for (std::size_t v = 0; v < kw; ++v) {
                                    gx.at(c, i + u, j + v) += go * kv.at(f, c, u, v);
                                    gk.at(f, c, u, v) += go * xv.at(c, i + u, j + v);
                                }
                            }
                        }
                    }
                }
            }
            t.accumulate(x_id, gx);
            t.accumulate(k_id, gk);
            t.accumulate(b_id, gb);
        };
        return id;
    }

    NodeId relu(NodeId x_id) {
        const Tensor& x = value(x_id);
        Tensor y = x;
        for (std::size_t i = 0; i < y.numel(); ++i) {
            if (y[i] < 0.0) {
                y[i] = 0.0;
            }
        }
        NodeId id = push(std::move(y), nullptr);
        node(id).back = [id, x_id](Tape& t) {
            const Tensor& g = t.node(id).grad;
            const Tensor& xv = t.value(x_id);
            Tensor gx = Tensor::zeros_like(xv);
            // Subgradient at 0 is 0: strictly positive inputs pass gradient.
            for (std::size_t i = 0; i < gx.numel(); ++i) {
                gx[i] = xv[i] > 0.0 ? g[i] : 0.0;
            }
            t.accumulate(x_id, gx);
        };
        return id;
    }

    // 2x2 max pooling, stride 2. Ties go to the first maximum in row-major
    // order within the window.
    NodeId maxpool2x2(NodeId x_id) {
        const Tensor& x = value(x_id);
        if (x.rank() != 3) {
            throw DimensionError("maxpool2x2: need rank-3 input, got " + shape_string(x));
        }
        const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
        if (H % 2 != 0 || W % 2 != 0) {
            throw DimensionError("maxpool2x2: spatial dims must be even, got " +
                                 std::to_string(H) + "x" + std::to_string(W));
        }
        const std::size_t OH = H / 2, OW = W / 2;
        Tensor y({C, OH, OW});
        auto argmax = std::make_shared<std::vector<std::size_t>>(C * OH * OW);
        std::size_t o = 0;
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t i = 0; i < OH; ++i) {
                for (std::size_t j = 0; j < OW; ++j, ++o) {
                    double best = x.at(c, 2 * i, 2 * j);
                    std::size_t best_h = 2 * i, best_w = 2 * j;
                    for (std::size_t u = 0; u < 2; ++u) {
                        for (std::size_t v = 0; v < 2; ++v) {
                            const double cand = x.at(c, 2 * i + u, 2 * j + v);
                            if (cand > best) {
                                best = cand;
                                best_h = 2 * i + u;
                                best_w = 2 * j + v;
                            }
                        }
                    }
                    y.at(c, i, j) = best;
                    (*argmax)[o] = (c * H + best_h) * W + best_w;
                }
            }
        }
        NodeId id = push(std::move(y), nullptr);
        node(id).back = [id, x_id, argmax](Tape& t) {
            const Tensor& g = t.node(id).grad;
            Tensor gx = Tensor::zeros_like(t.value(x_id));
            for (std::size_t i = 0; i < g.numel(); ++i) {
                gx[(*argmax)[i]] += g[i];
            }
            t.accumulate(x_id, gx);
        };
        return id;
    }

    NodeId reshape(NodeId x_id, std::vector<std::size_t> new_shape) {
        const Tensor& x = value(x_id);
        if (Tensor::count(new_shape) != x.numel()) {
            throw DimensionError("reshape: cannot view " + shape_string(x) + " as " +
                                 Tensor::shape_string(new_shape));
        }
        Tensor y(std::move(new_shape), x.raw());
        NodeId id = push(std::move(y), nullptr);
        node(id).back = [id, x_id](Tape& t) {
            const Tensor& g = t.node(id).grad;
            Tensor gx(t.value(x_id).shape(), g.raw());
            t.accumulate(x_id, gx);
        };
        return id;
    }

    NodeId flatten(NodeId x_id) { return reshape(x_id, {value(x_id).numel()}); }

    NodeId add(NodeId a_id, NodeId b_id) {
        const Tensor& a = value(a_id);
        const Tensor& b = value(b_id);
        if (!a.same_shape(b)) {
            throw DimensionError("add: shape mismatch " + shape_string(a) + " vs " +
                                 shape_string(b));
        }
        Tensor y = a;
        y += b;
        NodeId id = push(std::move(y), nullptr);
        node(id).back = [id, a_id, b_id](Tape& t) {
            const Tensor& g = t.node(id).grad;
            t.accumulate(a_id, g);
            t.accumulate(b_id, g);
        };
        return id;
    }

    // Cross-entropy of softmax(logits) against a hard binary label.
    // Computed through log-sum-exp; never materializes probabilities forward.
    NodeId softmax_cross_entropy(NodeId logits_id, int label) {
        const Tensor& lg = value(logits_id);
        if (lg.rank() != 1 || lg.dim(0) != 2) {
            throw DimensionError("softmax_cross_entropy: logits must be [2], got " +
                                 shape_string(lg));
        }
        if (label != 0 && label != 1) {
            throw InputError("softmax_cross_entropy: label must be 0 or 1, got " +
                             std::to_string(label));
        }
        const double m = std::max(lg[0], lg[1]);
        const double lse = m + std::log(std::exp(lg[0] - m) + std::exp(lg[1] - m));
        Tensor y = Tensor::scalar(lse - lg[label]);
        NodeId id = push(std::move(y), nullptr);
        node(id).back = [id, logits_id, label](Tape& t) {
            const double g = t.node(id).grad[0];
            const Tensor& lg2 = t.value(logits_id);
            const auto p = softmax2(lg2[0], lg2[1]);
            Tensor gl({2});
            gl[0] = g * (p[0] - (label == 0 ? 1.0 : 0.0));
            gl[1] = g * (p[1] - (label == 1 ? 1.0 : 0.0));
            t.accumulate(logits_id, gl);
        };
        return id;
    }

    // Escape hatch for ops computed outside the tape. vjp receives the
    // upstream gradient and must return one tensor per input, same shapes.
    NodeId custom(std::vector<NodeId> inputs, Tensor out,
                  std::function<std::vector<Tensor>(const Tensor&)> vjp) {
        for (NodeId in : inputs) {
            (void)node(in); // bounds check
        }
        NodeId id = push(std::move(out), nullptr);
        node(id).back = [id, inputs = std::move(inputs), vjp = std::move(vjp)](Tape& t) {
            std::vector<Tensor> gs = vjp(t.node(id).grad);
            if (gs.size() != inputs.size()) {
                throw ContractError("custom node vjp returned " + std::to_string(gs.size()) +
                                    " gradients for " + std::to_string(inputs.size()) +
                                    " inputs");
            }
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                if (!gs[i].same_shape(t.value(inputs[i]))) {
                    throw ContractError("custom node vjp gradient " + std::to_string(i) +
                                        " has shape " + shape_string(gs[i]) + ", input has " +
                                        shape_string(t.value(inputs[i])));
                }
                t.accumulate(inputs[i], gs[i]);
            }
        };
        return id;
    }

    // Reverse sweep from a scalar. Grads of nodes the loss does not depend on
    // are left at zero; their backward closures never run.
    void backward(NodeId loss_id) {
        if (value(loss_id).numel() != 1) {
            throw ContractError("backward: loss must be a scalar, got " +
                                shape_string(value(loss_id)));
        }
        for (auto& n : nodes_) {
            n.grad = Tensor(n.value.shape());
            n.touched = false;
        }
        ran_backward_ = true;
        nodes_[loss_id].grad[0] = 1.0;
        nodes_[loss_id].touched = true;
        for (std::size_t i = loss_id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.touched && n.back) {
                n.back(*this);
            }
        }
    }

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&)> back;
        bool touched = false;
    };

    Node& node(NodeId id) {
        if (id >= nodes_.size()) {
            throw ContractError("node id " + std::to_string(id) + " out of range");
        }
        return nodes_[id];
    }
    const Node& node(NodeId id) const {
        if (id >= nodes_.size()) {
            throw ContractError("node id " + std::to_string(id) + " out of range");
        }
        return nodes_[id];
    }

    NodeId push(Tensor value, std::function<void(Tape&)> back) {
        nodes_.push_back(Node{std::move(value), Tensor(), std::move(back), false});
        return nodes_.size() - 1;
    }

    void accumulate(NodeId id, const Tensor& delta) {
        Node& n = node(id);
        if (!delta.same_shape(n.grad)) {
            throw ContractError("gradient shape " + shape_string(delta) +
                                " does not match value shape " + shape_string(n.value));
        }
        n.grad += delta;
        n.touched = true;
    }

    std::vector<Node> nodes_;
    bool ran_backward_ = false;
};

// Central-difference check of d(loss)/d(x). `build` maps (tape, leaf id for x)
// to a scalar loss node; it must be a pure function of the tape inputs.
// Returns the worst relative error over all elements of x.
template <typename BuildFn>
double grad_check(BuildFn&& build, const Tensor& x, double h = 1e-5) {
    Tape tape;
    NodeId x_id = tape.leaf(x);
    NodeId loss = build(tape, x_id);
    tape.backward(loss);
    Tensor analytic = tape.grad(x_id);

    auto eval = [&](const Tensor& probe) {
        Tape t;
        NodeId id = t.leaf(probe);
        NodeId l = build(t, id);
        return t.value(l)[0];
    };

    double worst = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        Tensor hi = x, lo = x;
        hi[i] += h;
        lo[i] -= h;
        const double fd = (eval(hi) - eval(lo)) / (2.0 * h);
        worst = std::max(worst, relative_error(fd, analytic[i]));
    }
    return worst;
}

} // namespace qadv
