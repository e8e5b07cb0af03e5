#pragma once
// Reverse-mode automatic differentiation on a single-use dynamic tape.
//
// A Tape records every intermediate Tensor produced during one forward pass.
// Each node optionally carries a backward closure that scatters its output
// gradient into its parents' gradient buffers. backward() replays closures in
// reverse creation order. Parameters live outside the tape and are registered
// as leaves per forward pass; their gradients are read back by leaf index.
//
// A tape is confined to one thread and one backward call.

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "logo/errors.hpp"
#include "logo/tensor.hpp"

namespace logo {

struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

class Tape {
 public:
  // Registers an external tensor as a leaf. `track` requests a gradient.
  Var leaf(const Tensor& t, bool track) {
    return push(t, track, {});
  }

  // Leaf that follows the tensor's own requires_grad flag.
  Var leaf(const Tensor& t) { return leaf(t, t.requires_grad); }

  // Untracked value (no gradient flows).
  Var constant(Tensor t) { return push(std::move(t), false, {}); }

  const Tensor& value(Var v) const { return nodes_[check(v)].value; }
  const Tensor& grad(Var v) const { return nodes_[check(v)].grad; }

  std::size_t size() const { return nodes_.size(); }

  // ---- element-wise ----

  Var add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "add");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += tb[i];
    return binary(std::move(out), a, b, [](Tape& tp, const Tensor& g, int ia, int ib) {
      tp.accumulate(ia, [&](Tensor& ga) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      });
      tp.accumulate(ib, [&](Tensor& gb) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      });
    });
  }

  Var add(Var a, Var b, Var c) { return add(add(a, b), c); }

  Var sub(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "sub");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= tb[i];
    return binary(std::move(out), a, b, [](Tape& tp, const Tensor& g, int ia, int ib) {
      tp.accumulate(ia, [&](Tensor& ga) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      });
      tp.accumulate(ib, [&](Tensor& gb) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      });
    });
  }

  Var mul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "mul");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= tb[i];
    Tensor va = ta, vb = tb;  // captured for backward
    return binary(std::move(out), a, b,
                  [va = std::move(va), vb = std::move(vb)](Tape& tp, const Tensor& g, int ia, int ib) {
                    tp.accumulate(ia, [&](Tensor& ga) {
                      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
                    });
                    tp.accumulate(ib, [&](Tensor& gb) {
                      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
                    });
                  });
  }

  Var scale(Var a, double c) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
    return unary(std::move(out), a, [c](Tape& tp, const Tensor& g, int ia) {
      tp.accumulate(ia, [&](Tensor& ga) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
      });
    });
  }

  // Adds a length-d row vector to every row of an n×d matrix.
  Var add_rowvec(Var x, Var b) {
    const Tensor& tx = value(x);
    const Tensor& tb = value(b);
    if (tx.ndim() != 2 || tb.ndim() != 1 || tx.extent(1) != tb.extent(0)) {
      throw ShapeMismatch("add_rowvec: " + tx.shape_string() + " vs " + tb.shape_string());
    }
    std::size_t n = tx.extent(0), d = tx.extent(1);
    Tensor out = tx;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) out.at2(i, j) += tb[j];
    return binary(std::move(out), x, b, [n, d](Tape& tp, const Tensor& g, int ix, int ib) {
      tp.accumulate(ix, [&](Tensor& gx) {
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      });
      tp.accumulate(ib, [&](Tensor& gb) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) gb[j] += g.at2(i, j);
      });
    });
  }

  // ---- matrix products ----

  // A (n×k) · B (k×m) → n×m
  Var matmul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.extent(1) != tb.extent(0)) {
      throw ShapeMismatch("matmul: " + ta.shape_string() + " vs " + tb.shape_string());
    }
    std::size_t n = ta.extent(0), k = ta.extent(1), m = tb.extent(1);
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        double av = ta.at2(i, p);
        if (av == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) out.at2(i, j) += av * tb.at2(p, j);
      }
    Tensor va = ta, vb = tb;
    return binary(std::move(out), a, b,
                  [va = std::move(va), vb = std::move(vb), n, k, m](Tape& tp, const Tensor& g,
                                                                    int ia, int ib) {
                    // gA += g · Bᵀ ; gB += Aᵀ · g
                    tp.accumulate(ia, [&](Tensor& ga) {
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < m; ++j) {
                          double gv = g.at2(i, j);
                          if (gv == 0.0) continue;
                          for (std::size_t p = 0; p < k; ++p) ga.at2(i, p) += gv * vb.at2(p, j);
                        }
                    });
                    tp.accumulate(ib, [&](Tensor& gb) {
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          double av = va.at2(i, p);
                          if (av == 0.0) continue;
                          for (std::size_t j = 0; j < m; ++j) gb.at2(p, j) += av * g.at2(i, j);
                        }
                    });
                  });
  }

  // A (n×d) · Bᵀ (B is m×d) → n×m
  Var matmul_nt(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.extent(1) != tb.extent(1)) {
      throw ShapeMismatch("matmul_nt: " + ta.shape_string() + " vs " + tb.shape_string());
    }
    std::size_t n = ta.extent(0), d = ta.extent(1), m = tb.extent(0);
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0;
        for (std::size_t p = 0; p < d; ++p) s += ta.at2(i, p) * tb.at2(j, p);
        out.at2(i, j) = s;
      }
    Tensor va = ta, vb = tb;
    return binary(std::move(out), a, b,
                  [va = std::move(va), vb = std::move(vb), n, d, m](Tape& tp, const Tensor& g,
                                                                    int ia, int ib) {
                    // gA += g · B ; gB += gᵀ · A
                    tp.accumulate(ia, [&](Tensor& ga) {
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < m; ++j) {
                          double gv = g.at2(i, j);
                          if (gv == 0.0) continue;
                          for (std::size_t p = 0; p < d; ++p) ga.at2(i, p) += gv * vb.at2(j, p);
                        }
                    });
                    tp.accumulate(ib, [&](Tensor& gb) {
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < m; ++j) {
                          double gv = g.at2(i, j);
                          if (gv == 0.0) continue;
                          for (std::size_t p = 0; p < d; ++p) gb.at2(j, p) += gv * va.at2(i, p);
                        }
                    });
                  });
  }

  // X (n×i) · Wᵀ (W is o×i) → n×o. Convention for layer weights.
  Var linear(Var x, Var w) { return matmul_nt(x, w); }

  // ---- indexing ----

  // rows[i] selects a row of E (N×d) → len(rows)×d
  Var gather_rows(Var e, std::vector<int> rows) {
    const Tensor& te = value(e);
    if (te.ndim() != 2) throw ShapeMismatch("gather_rows: want 2-D, got " + te.shape_string());
    std::size_t nr = te.extent(0), d = te.extent(1);
    for (int r : rows) {
      if (r < 0 || static_cast<std::size_t>(r) >= nr) {
        throw ShapeMismatch("gather_rows: row " + std::to_string(r) + " out of " +
                            std::to_string(nr));
      }
    }
    Tensor out({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        out.at2(i, j) = te.at2(static_cast<std::size_t>(rows[i]), j);
    return unary(std::move(out), e,
                 [rows = std::move(rows), d](Tape& tp, const Tensor& g, int ie) {
                   tp.accumulate(ie, [&](Tensor& ge) {
                     for (std::size_t i = 0; i < rows.size(); ++i)
                       for (std::size_t j = 0; j < d; ++j)
                         ge.at2(static_cast<std::size_t>(rows[i]), j) += g.at2(i, j);
                   });
                 });
  }

  // Averages rows of P (n×d) into an N×d output grouped by target row ids;
  // rows with no contribution stay zero.
  Var scatter_mean_rows(Var p, std::vector<int> targets, std::size_t n_out) {
    const Tensor& tp_ = value(p);
    if (tp_.ndim() != 2 || targets.size() != tp_.extent(0)) {
      throw ShapeMismatch("scatter_mean_rows: " + tp_.shape_string() + " with " +
                          std::to_string(targets.size()) + " targets");
    }
    std::size_t d = tp_.extent(1);
    std::vector<double> deg(n_out, 0.0);
    for (int t : targets) {
      if (t < 0 || static_cast<std::size_t>(t) >= n_out) {
        throw ShapeMismatch("scatter_mean_rows: target " + std::to_string(t) + " out of " +
                            std::to_string(n_out));
      }
      deg[static_cast<std::size_t>(t)] += 1.0;
    }
    Tensor out({n_out, d});
    for (std::size_t i = 0; i < targets.size(); ++i) {
      std::size_t o = static_cast<std::size_t>(targets[i]);
      for (std::size_t j = 0; j < d; ++j) out.at2(o, j) += tp_.at2(i, j);
    }
    for (std::size_t o = 0; o < n_out; ++o) {
      if (deg[o] > 0)
        for (std::size_t j = 0; j < d; ++j) out.at2(o, j) /= deg[o];
    }
    return unary(std::move(out), p,
                 [targets = std::move(targets), deg = std::move(deg), d](Tape& tp, const Tensor& g,
                                                                         int ip) {
                   tp.accumulate(ip, [&](Tensor& gp) {
                     for (std::size_t i = 0; i < targets.size(); ++i) {
                       std::size_t o = static_cast<std::size_t>(targets[i]);
                       for (std::size_t j = 0; j < d; ++j)
                         gp.at2(i, j) += g.at2(o, j) / deg[o];
                     }
                   });
                 });
  }

  // ---- nonlinearities ----

  Var sigmoid(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    Tensor vo = out;
    return unary(std::move(out), a, [vo = std::move(vo)](Tape& tp, const Tensor& g, int ia) {
      tp.accumulate(ia, [&](Tensor& ga) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vo[i] * (1.0 - vo[i]);
      });
    });
  }

  Var tanh_(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    Tensor vo = out;
    return unary(std::move(out), a, [vo = std::move(vo)](Tape& tp, const Tensor& g, int ia) {
      tp.accumulate(ia, [&](Tensor& ga) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - vo[i] * vo[i]);
      });
    });
  }

  // Leaky activation: x ≥ 0 → x, x < 0 → slope·x. Subgradient 1 at exactly 0.
  Var leaky(Var a, double slope) {
    const Tensor& ta = value(a);
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i] < 0) out[i] *= slope;
    Tensor va = ta;
    return unary(std::move(out), a,
                 [va = std::move(va), slope](Tape& tp, const Tensor& g, int ia) {
                   tp.accumulate(ia, [&](Tensor& ga) {
                     for (std::size_t i = 0; i < g.size(); ++i)
                       ga[i] += g[i] * (va[i] < 0 ? slope : 1.0);
                   });
                 });
  }

  // ---- decoder convolution ----

  // Stacks paired rows of S and R (both B×d) as a 2×d grid per row pair and
  // applies C same-padded 1-D convolutions of width k along d.
  // kernels: C×2×k (k odd), bias: C. Output: B×(C·d), channel-major.
  Var conv_pair_rows(Var s, Var r, Var kernels, Var bias) {
    const Tensor& ts = value(s);
    const Tensor& tr = value(r);
    const Tensor& tk = value(kernels);
    const Tensor& tb = value(bias);
    if (ts.ndim() != 2 || !ts.same_shape(tr)) {
      throw ShapeMismatch("conv_pair_rows: subject " + ts.shape_string() + " vs relation " +
                          tr.shape_string());
    }
    if (tk.ndim() != 3 || tk.extent(1) != 2) {
      throw ShapeMismatch("conv_pair_rows: kernels want (C,2,k), got " + tk.shape_string());
    }
    if (tk.extent(2) % 2 == 0) throw ShapeMismatch("conv_pair_rows: kernel width must be odd");
    if (tb.ndim() != 1 || tb.extent(0) != tk.extent(0)) {
      throw ShapeMismatch("conv_pair_rows: bias " + tb.shape_string() + " vs kernels " +
                          tk.shape_string());
    }
    std::size_t bsz = ts.extent(0), d = ts.extent(1);
    std::size_t c = tk.extent(0), k = tk.extent(2);
    std::size_t half = k / 2;
    Tensor out({bsz, c * d});
    for (std::size_t b = 0; b < bsz; ++b)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < d; ++i) {
          double acc = tb[ch];
          for (std::size_t j = 0; j < k; ++j) {
            std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(i + j) - static_cast<std::ptrdiff_t>(half);
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(d)) continue;
            acc += tk.at3(ch, 0, j) * ts.at2(b, static_cast<std::size_t>(pos));
            acc += tk.at3(ch, 1, j) * tr.at2(b, static_cast<std::size_t>(pos));
          }
          out.at2(b, ch * d + i) = acc;
        }
    Tensor vs = ts, vr = tr, vk = tk;
    std::vector<int> parents = {s.idx, r.idx, kernels.idx, bias.idx};
    return push(std::move(out), any_tracked(parents),
                [vs = std::move(vs), vr = std::move(vr), vk = std::move(vk), bsz, d, c, k, half,
                 is = s.idx, ir = r.idx, ik = kernels.idx, ib = bias.idx](Tape& tp,
                                                                          const Tensor& g) {
                  for (std::size_t b = 0; b < bsz; ++b)
                    for (std::size_t ch = 0; ch < c; ++ch)
                      for (std::size_t i = 0; i < d; ++i) {
                        double go = g.at2(b, ch * d + i);
                        if (go == 0.0) continue;
                        tp.accumulate(ib, [&](Tensor& gb) { gb[ch] += go; });
                        for (std::size_t j = 0; j < k; ++j) {
                          std::ptrdiff_t pos =
                              static_cast<std::ptrdiff_t>(i + j) - static_cast<std::ptrdiff_t>(half);
                          if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(d)) continue;
                          std::size_t p = static_cast<std::size_t>(pos);
                          tp.accumulate(ik, [&](Tensor& gk) {
                            gk.at3(ch, 0, j) += go * vs.at2(b, p);
                            gk.at3(ch, 1, j) += go * vr.at2(b, p);
                          });
                          tp.accumulate(is, [&](Tensor& gs) { gs.at2(b, p) += go * vk.at3(ch, 0, j); });
                          tp.accumulate(ir, [&](Tensor& gr) { gr.at2(b, p) += go * vk.at3(ch, 1, j); });
                        }
                      }
                });
  }

  // Sum of all coordinates → scalar node.
  Var sum_all(Var a) {
    const Tensor& ta = value(a);
    double s = 0;
    for (std::size_t i = 0; i < ta.size(); ++i) s += ta[i];
    return unary(Tensor::scalar(s), a, [](Tape& tp, const Tensor& g, int ia) {
      tp.accumulate(ia, [&](Tensor& ga) {
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
      });
    });
  }

  // ---- loss ----

  // Summed cross-entropy of row-softmax distributions against gold columns.
  // logits: B×N, golds: B indices. Returns a scalar node. Numerically stable
  // via per-row max subtraction.
  Var softmax_xent_sum(Var logits, std::vector<int> golds) {
    const Tensor& tl = value(logits);
    if (tl.ndim() != 2 || golds.size() != tl.extent(0)) {
      throw ShapeMismatch("softmax_xent_sum: " + tl.shape_string() + " with " +
                          std::to_string(golds.size()) + " golds");
    }
    std::size_t bsz = tl.extent(0), n = tl.extent(1);
    for (int gd : golds) {
      if (gd < 0 || static_cast<std::size_t>(gd) >= n) {
        throw ShapeMismatch("softmax_xent_sum: gold " + std::to_string(gd) + " out of " +
                            std::to_string(n));
      }
    }
    Tensor probs({bsz, n});
    double loss = 0;
    for (std::size_t b = 0; b < bsz; ++b) {
      double mx = tl.at2(b, 0);
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, tl.at2(b, j));
      double sum = 0;
      for (std::size_t j = 0; j < n; ++j) sum += std::exp(tl.at2(b, j) - mx);
      double lse = mx + std::log(sum);
      for (std::size_t j = 0; j < n; ++j) probs.at2(b, j) = std::exp(tl.at2(b, j) - lse);
      loss += lse - tl.at2(b, static_cast<std::size_t>(golds[b]));
    }
    return unary(Tensor::scalar(loss), logits,
                 [probs = std::move(probs), golds = std::move(golds), bsz, n](
                     Tape& tp, const Tensor& g, int il) {
                   double gs = g[0];
                   tp.accumulate(il, [&](Tensor& gl) {
                     for (std::size_t b = 0; b < bsz; ++b)
                       for (std::size_t j = 0; j < n; ++j) {
                         double delta = (static_cast<std::size_t>(golds[b]) == j) ? 1.0 : 0.0;
                         gl.at2(b, j) += gs * (probs.at2(b, j) - delta);
                       }
                   });
                 });
  }

  // ---- backward ----

  void backward(Var loss) {
    int li = check(loss);
    if (nodes_[li].value.size() != 1) {
      throw ShapeMismatch("backward: loss must be scalar, got " +
                          nodes_[li].value.shape_string());
    }
    if (ran_backward_) throw Error("backward: tape already consumed");
    ran_backward_ = true;
    if (!nodes_[li].tracked) return;
    nodes_[li].grad[0] = 1.0;
    for (int i = li; i >= 0; --i) {
      if (nodes_[i].tracked && nodes_[i].back) nodes_[i].back(*this, nodes_[i].grad);
    }
  }

  // Applies fn to the gradient buffer of node i, if tracked.
  template <class Fn>
  void accumulate(int i, Fn&& fn) {
    if (i >= 0 && nodes_[static_cast<std::size_t>(i)].tracked) {
      fn(nodes_[static_cast<std::size_t>(i)].grad);
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated only when tracked
    std::function<void(Tape&, const Tensor&)> back;
    bool tracked = false;
  };

  int check(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.idx) >= nodes_.size()) {
      throw Error("tape: invalid var");
    }
    return v.idx;
  }

  bool any_tracked(const std::vector<int>& parents) const {
    for (int p : parents)
      if (p >= 0 && nodes_[static_cast<std::size_t>(p)].tracked) return true;
    return false;
  }

  Var push(Tensor value, bool tracked, std::function<void(Tape&, const Tensor&)> back) {
    Node n;
    n.tracked = tracked;
    if (tracked) n.grad = Tensor(value.shape());
    n.value = std::move(value);
    n.back = tracked ? std::move(back) : nullptr;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
  }

  template <class Fn>
  Var unary(Tensor out, Var a, Fn&& fn) {
    bool req = nodes_[check(a)].tracked;
    int ia = a.idx;
    return push(std::move(out), req,
                [fn = std::forward<Fn>(fn), ia](Tape& tp, const Tensor& g) { fn(tp, g, ia); });
  }

  template <class Fn>
  Var binary(Tensor out, Var a, Var b, Fn&& fn) {
    bool req = nodes_[check(a)].tracked || nodes_[check(b)].tracked;
    int ia = a.idx, ib = b.idx;
    return push(std::move(out), req,
                [fn = std::forward<Fn>(fn), ia, ib](Tape& tp, const Tensor& g) { fn(tp, g, ia, ib); });
  }

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

// Row-wise softmax as a plain forward computation (used for reporting
// probabilities outside any gradient context).
inline Tensor softmax_rows(const Tensor& logits) {
  if (logits.ndim() != 2) {
    throw ShapeMismatch("softmax_rows: want 2-D, got " + logits.shape_string());
  }
  std::size_t b = logits.extent(0), n = logits.extent(1);
  Tensor out({b, n});
  for (std::size_t i = 0; i < b; ++i) {
    double mx = logits.at2(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logits.at2(i, j));
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(logits.at2(i, j) - mx);
    for (std::size_t j = 0; j < n; ++j) out.at2(i, j) = std::exp(logits.at2(i, j) - mx) / sum;
  }
  return out;
}

}  // namespace logo
