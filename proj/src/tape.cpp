#include "pinnse/tape.hpp"

#include <algorithm>
#include <cmath>

#include "pinnse/activations.hpp"
#include "pinnse/kernels.hpp"

namespace pinnse::ad {

namespace {

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Value and up to three derivatives of the non-activation unary kinds.
inline void unary_derivs(UnaryKind k, double x, int order, double& f0, double& f1, double& f2,
                         double& f3) {
    switch (k) {
        case UnaryKind::neg:
            f0 = -x; f1 = -1.0; f2 = 0.0; f3 = 0.0;
            return;
        case UnaryKind::abs_v:
            f0 = std::fabs(x); f1 = sign_of(x); f2 = 0.0; f3 = 0.0;
            return;
        case UnaryKind::square:
            f0 = x * x; f1 = 2.0 * x; f2 = 2.0; f3 = 0.0;
            return;
        case UnaryKind::sin_v:
            f0 = std::sin(x); f1 = std::cos(x); f2 = -f0; f3 = -f1;
            return;
        case UnaryKind::cos_v:
            f0 = std::cos(x); f1 = -std::sin(x); f2 = -f0; f3 = -f1;
            return;
        case UnaryKind::act:
            break;  // handled by activation_jet
    }
    (void)order;
    f0 = f1 = f2 = f3 = 0.0;
}

}  // namespace

Var Tape::push(Node&& n) {
    PINNSE_CHECK(!swept_, "tape already swept; build a new tape");
    n.numel = shape_numel(n.shape);
    if (n.val.empty()) n.val.assign(size_t(n.planes) * n.numel, 0.0);
    nodes_.push_back(std::move(n));
    return Var{int32_t(nodes_.size() - 1)};
}

double* Tape::adj_plane(Node& n, int p) { return n.adj.data() + size_t(p) * n.numel; }

void Tape::ensure_adj(Node& n) {
    if (n.adj.empty()) n.adj.assign(size_t(n.planes) * n.numel, 0.0);
}

// ---------------------------------------------------------------- leaves

Var Tape::leaf(const Tensor& t, bool requires_grad) {
    Node n;
    n.kind = OpKind::leaf;
    n.shape = t.shape();
    n.planes = 1;
    n.requires_grad = requires_grad;
    n.val = t.vec();
    return push(std::move(n));
}

Var Tape::leaf_seeded(const Tensor& t, const std::vector<SeedSpec>& seeds) {
    PINNSE_CHECK(layout_.n_dirs > 0, "leaf_seeded requires a jet layout");
    Node n;
    n.kind = OpKind::leaf;
    n.shape = t.shape();
    n.planes = layout_.planes();
    n.requires_grad = false;
    const int64_t numel = shape_numel(n.shape);
    const int64_t cols = n.shape.empty() ? 1 : n.shape.back();
    n.val.assign(size_t(n.planes) * numel, 0.0);
    std::copy(t.vec().begin(), t.vec().end(), n.val.begin());
    for (const SeedSpec& s : seeds) {
        PINNSE_CHECK(s.dir >= 0 && s.dir < layout_.n_dirs, "seed direction out of range");
        PINNSE_CHECK(s.col >= 0 && int64_t(s.col) < cols, "seed column out of range");
        double* d = n.val.data() + size_t(layout_.d_plane(s.dir)) * numel;
        for (int64_t i = s.col; i < numel; i += cols) d[i] = s.seed;
    }
    return push(std::move(n));
}

// ---------------------------------------------------------------- linear

Var Tape::linear(Var xv, Var Wv, Var bv) {
    const Node& x = node(xv);
    const Node& W = node(Wv);
    PINNSE_CHECK(W.shape.size() == 2, "linear: weight must be 2-D");
    PINNSE_CHECK(W.planes == 1, "linear: weights must be primal-only");
    const int64_t Ci = W.shape[0], Co = W.shape[1];
    PINNSE_CHECK(!x.shape.empty() && x.shape.back() == Ci,
                 "linear: input last dim " + shape_str(x.shape) + " does not match weight " +
                     shape_str(W.shape));
    Node n;
    n.kind = OpKind::linear;
    n.shape = x.shape;
    n.shape.back() = Co;
    n.planes = x.planes;
    n.requires_grad = x.requires_grad || W.requires_grad || (bv.valid() && node(bv).requires_grad);
    n.args[0] = xv.id;
    n.args[1] = Wv.id;
    n.args[2] = bv.valid() ? bv.id : -1;
    Var out = push(std::move(n));

    Node& o = node(out);
    const Node& xn = node(xv);
    const Node& Wn = node(Wv);
    const int64_t R = xn.numel / Ci;
    for (int p = 0; p < o.planes; ++p)
        kern::gemm_nn(size_t(R), size_t(Co), size_t(Ci), plane(const_cast<Node&>(xn), p),
                      Wn.val.data(), plane(o, p), false);
    if (bv.valid()) {
        const Node& bn = node(bv);
        PINNSE_CHECK(bn.numel == Co && bn.planes == 1, "linear: bad bias");
        double* v = plane(o, 0);
        for (int64_t r = 0; r < R; ++r) kern::axpy(size_t(Co), 1.0, bn.val.data(), v + r * Co);
    }
    return out;
}

// ---------------------------------------------------------------- unary

Var Tape::activation(Var x, ActivationKind k, double c) {
    return unary(UnaryKind::act, x, c, uint8_t(k));
}

Var Tape::unary(UnaryKind k, Var xv, double c, uint8_t act_kind) {
    const Node& x = node(xv);
    Node n;
    n.kind = OpKind::unary;
    n.sub = uint8_t(k);
    n.sub2 = act_kind;
    n.shape = x.shape;
    n.planes = x.planes;
    n.requires_grad = x.requires_grad;
    n.args[0] = xv.id;
    n.s0 = c;
    Var out = push(std::move(n));

    Node& o = node(out);
    const Node& xn = node(xv);
    const int P = o.planes;
    const int64_t m = o.numel;
    // forward needs derivatives up to the highest tangent order present
    int max_ord = 0;
    for (int d = 0; d < layout_.n_dirs && P > 1; ++d) max_ord = std::max(max_ord, layout_.order[d]);
    const double* xvp = xn.val.data();
    double* ovp = o.val.data();
    for (int64_t i = 0; i < m; ++i) {
        double f0, f1, f2, f3;
        if (UnaryKind(o.sub) == UnaryKind::act) {
            ActJet j = activation_jet(ActivationKind(o.sub2), xvp[i], o.s0, max_ord);
            f0 = j.f0; f1 = j.f1; f2 = j.f2; f3 = j.f3;
        } else {
            unary_derivs(UnaryKind(o.sub), xvp[i], max_ord, f0, f1, f2, f3);
        }
        ovp[i] = f0;
        for (int d = 0; d < layout_.n_dirs && P > 1; ++d) {
            const double xd = xvp[size_t(layout_.d_plane(d)) * m + i];
            o.val[size_t(layout_.d_plane(d)) * m + i] = f1 * xd;
            const int ddp = layout_.dd_plane(d);
            if (ddp >= 0) {
                const double xdd = xvp[size_t(ddp) * m + i];
                o.val[size_t(ddp) * m + i] = f1 * xdd + f2 * xd * xd;
            }
        }
    }
    return out;
}

// NOTE: activation kind travels in s1 (as a small integer); the sinusoid
// constant in s0. Set at the call site below.
Var Tape::binary(BinaryKind k, Var av, Var bv) {
    const Node& a = node(av);
    const Node& b = node(bv);
    PINNSE_CHECK(a.numel == node(bv).numel, "binary: shape mismatch " + shape_str(a.shape) +
                                                " vs " + shape_str(b.shape));
    Node n;
    n.kind = OpKind::binary;
    n.sub = uint8_t(k);
    n.shape = a.shape;
    n.planes = std::max(a.planes, b.planes);
    n.requires_grad = a.requires_grad || b.requires_grad;
    n.args[0] = av.id;
    n.args[1] = bv.id;
    Var out = push(std::move(n));

    Node& o = node(out);
    const Node& an = node(av);
    const Node& bn = node(bv);
    const int64_t m = o.numel;
    const size_t um = size_t(m);
    switch (k) {
        case BinaryKind::add:
        case BinaryKind::sub: {
            const double sb = (k == BinaryKind::add) ? 1.0 : -1.0;
            for (int p = 0; p < o.planes; ++p) {
                const double* ap = plane_or_null(an, p);
                const double* bp = plane_or_null(bn, p);
                double* op = plane(o, p);
                if (ap && bp) {
                    if (sb > 0)
                        kern::add(um, ap, bp, op);
                    else
                        kern::sub(um, ap, bp, op);
                } else if (ap) {
                    std::copy(ap, ap + m, op);
                } else if (bp) {
                    kern::scale(um, sb, bp, op);
                }
            }
            break;
        }
        case BinaryKind::mul: {
            const double* a0 = plane(const_cast<Node&>(an), 0);
            const double* b0 = plane(const_cast<Node&>(bn), 0);
            kern::mul(um, a0, b0, plane(o, 0));
            for (int d = 0; d < layout_.n_dirs && o.planes > 1; ++d) {
                const int dp = layout_.d_plane(d);
                const int ddp = layout_.dd_plane(d);
                const double* ad = plane_or_null(an, dp);
                const double* bd = plane_or_null(bn, dp);
                double* od = plane(o, dp);
                std::fill(od, od + m, 0.0);
                if (ad) kern::mul_acc(um, ad, b0, od);
                if (bd) kern::mul_acc(um, a0, bd, od);
                if (ddp >= 0) {
                    const double* add = plane_or_null(an, ddp);
                    const double* bdd = plane_or_null(bn, ddp);
                    double* odd = plane(o, ddp);
                    std::fill(odd, odd + m, 0.0);
                    if (add) kern::mul_acc(um, add, b0, odd);
                    if (bdd) kern::mul_acc(um, a0, bdd, odd);
                    if (ad && bd)
                        for (int64_t i = 0; i < m; ++i) odd[i] += 2.0 * ad[i] * bd[i];
                }
            }
            break;
        }
    }
    return out;
}

Var Tape::binary_bcast(BinaryKind k, Var xv, Var yv) {
    const Node& x = node(xv);
    const Node& y = node(yv);
    PINNSE_CHECK(!x.shape.empty(), "binary_bcast: x must have a leading axis");
    const int64_t b = x.shape[0];
    PINNSE_CHECK(y.numel == b, "binary_bcast: y must hold one scalar per sample");
    Node n;
    n.kind = OpKind::binary_bcast;
    n.sub = uint8_t(k);
    n.shape = x.shape;
    n.planes = std::max(x.planes, y.planes);
    n.requires_grad = x.requires_grad || y.requires_grad;
    n.args[0] = xv.id;
    n.args[1] = yv.id;
    Var out = push(std::move(n));

    Node& o = node(out);
    const Node& xn = node(xv);
    const Node& yn = node(yv);
    const int64_t m = o.numel / b;  // per-sample block
    for (int64_t s = 0; s < b; ++s) {
        for (int p = 0; p < o.planes; ++p) {
            const double* xp = plane_or_null(xn, p);
            const double* yp = plane_or_null(yn, p);
            double* op = plane(o, p) + s * m;
            const double ys0 = plane(const_cast<Node&>(yn), 0)[s];
            const double* xs0 = plane(const_cast<Node&>(xn), 0) + s * m;
            switch (k) {
                case BinaryKind::add:
                case BinaryKind::sub: {
                    const double sb = (k == BinaryKind::add) ? 1.0 : -1.0;
                    const double yv_p = yp ? sb * yp[s] : 0.0;
                    if (xp)
                        for (int64_t i = 0; i < m; ++i) op[i] = xp[s * m + i] + yv_p;
                    else
                        for (int64_t i = 0; i < m; ++i) op[i] = yv_p;
                    break;
                }
                case BinaryKind::mul: {
                    if (p == 0) {
                        for (int64_t i = 0; i < m; ++i) op[i] = xs0[i] * ys0;
                    } else {
                        // out.d = x.d*y.v + x.v*y.d ; out.dd analogous with cross term
                        int d = -1, ord = 0;
                        for (int kk = 0; kk < layout_.n_dirs; ++kk) {
                            if (layout_.d_plane(kk) == p) { d = kk; ord = 1; }
                            if (layout_.dd_plane(kk) == p) { d = kk; ord = 2; }
                        }
                        (void)d;
                        if (ord == 1) {
                            const double yd = yp ? yp[s] : 0.0;
                            for (int64_t i = 0; i < m; ++i) {
                                const double xd = xp ? xp[s * m + i] : 0.0;
                                op[i] = xd * ys0 + xs0[i] * yd;
                            }
                        } else {
                            const int dp = layout_.d_plane(d);
                            const double* xdp = plane_or_null(xn, dp);
                            const double* ydp = plane_or_null(yn, dp);
                            const double ydd = yp ? yp[s] : 0.0;
                            const double yd = ydp ? ydp[s] : 0.0;
                            for (int64_t i = 0; i < m; ++i) {
                                const double xdd = xp ? xp[s * m + i] : 0.0;
                                const double xd = xdp ? xdp[s * m + i] : 0.0;
                                op[i] = xdd * ys0 + 2.0 * xd * yd + xs0[i] * ydd;
                            }
                        }
                    }
                    break;
                }
            }
        }
    }
    return out;
}

Var Tape::scalar_affine(Var xv, double a, double c) {
    const Node& x = node(xv);
    Node n;
    n.kind = OpKind::scalar_affine;
    n.shape = x.shape;
    n.planes = x.planes;
    n.requires_grad = x.requires_grad;
    n.args[0] = xv.id;
    n.s0 = a;
    n.s1 = c;
    Var out = push(std::move(n));
    Node& o = node(out);
    const Node& xn = node(xv);
    for (int p = 0; p < o.planes; ++p) {
        kern::scale(size_t(o.numel), a, plane(const_cast<Node&>(xn), p), plane(o, p));
        if (p == 0 && c != 0.0) {
            double* v = plane(o, 0);
            for (int64_t i = 0; i < o.numel; ++i) v[i] += c;
        }
    }
    return out;
}

Var Tape::affine_cols(Var xv, const std::vector<double>& scale,
                      const std::vector<double>& offset) {
    const Node& x = node(xv);
    const int64_t C = x.shape.back();
    PINNSE_CHECK(int64_t(scale.size()) == C && int64_t(offset.size()) == C,
                 "affine_cols: payload size mismatch");
    Node n;
    n.kind = OpKind::affine_cols;
    n.shape = x.shape;
    n.planes = x.planes;
    n.requires_grad = x.requires_grad;
    n.args[0] = xv.id;
    n.aux = scale;
    n.aux.insert(n.aux.end(), offset.begin(), offset.end());
    Var out = push(std::move(n));
    Node& o = node(out);
    const Node& xn = node(xv);
    for (int p = 0; p < o.planes; ++p) {
        const double* xp = plane(const_cast<Node&>(xn), p);
        double* op = plane(o, p);
        for (int64_t i = 0; i < o.numel; ++i) {
            const int64_t j = i % C;
            op[i] = o.aux[size_t(j)] * xp[i] + (p == 0 ? o.aux[size_t(C + j)] : 0.0);
        }
    }
    return out;
}

// ---------------------------------------------------------------- pooling

Var Tape::pool(PoolKind kind, Var phiv, const std::vector<double>& mask) {
    const Node& phi = node(phiv);
    PINNSE_CHECK(phi.shape.size() == 3, "pool: input must be [batch, N, features]");
    PINNSE_CHECK(phi.planes == 1, "pool: encoder path must be primal-only");
    const int64_t B = phi.shape[0], N = phi.shape[1], D = phi.shape[2];
    PINNSE_CHECK(int64_t(mask.size()) == B * N, "pool: mask size mismatch");
    Node n;
    n.kind = OpKind::pool;
    n.sub = uint8_t(kind);
    n.shape = {B, 1, D};
    n.planes = 1;
    n.requires_grad = phi.requires_grad;
    n.args[0] = phiv.id;
    n.aux = mask;
    Var out = push(std::move(n));

    Node& o = node(out);
    const Node& pn = node(phiv);
    const double* pv = pn.val.data();
    double* ov = o.val.data();
    std::vector<double> vals;
    vals.reserve(size_t(N));
    for (int64_t s = 0; s < B; ++s) {
        int64_t count = 0;
        for (int64_t r = 0; r < N; ++r)
            if (mask[size_t(s * N + r)] != 0.0) ++count;
        PINNSE_CHECK(count >= 1, "pool: sample with no valid rows");
        for (int64_t j = 0; j < D; ++j) {
            vals.clear();
            for (int64_t r = 0; r < N; ++r) {
                if (mask[size_t(s * N + r)] == 0.0) continue;
                const double v = pv[(s * N + r) * D + j];
                switch (kind) {
                    case PoolKind::mean_square: vals.push_back(v * v); break;
                    case PoolKind::sum: vals.push_back(v); break;
                    case PoolKind::sum_abs: vals.push_back(std::fabs(v)); break;
                }
            }
            // accumulate in value order so any permutation of the rows sums
            // in exactly the same sequence
            std::sort(vals.begin(), vals.end());
            double acc = 0.0;
            for (double v : vals) acc += v;
            if (kind == PoolKind::mean_square) acc /= double(count);
            ov[s * D + j] = acc;
        }
    }
    return out;
}

// ---------------------------------------------------------------- concat

Var Tape::concat_query(Var qpv, Var fvv) {
    const Node& qp = node(qpv);
    const Node& fv = node(fvv);
    PINNSE_CHECK(qp.shape.size() == 3 && fv.shape.size() == 3, "concat_query: rank-3 inputs");
    PINNSE_CHECK(qp.shape[0] == fv.shape[0], "concat_query: batch mismatch");
    PINNSE_CHECK(fv.shape[1] == 1, "concat_query: feature vector must have a single row");
    const int64_t B = qp.shape[0], Nq = qp.shape[1], dq = qp.shape[2], nf = fv.shape[2];
    Node n;
    n.kind = OpKind::concat_query;
    n.shape = {B, Nq, dq + nf};
    n.planes = std::max(qp.planes, fv.planes);
    n.requires_grad = qp.requires_grad || fv.requires_grad;
    n.args[0] = qpv.id;
    n.args[1] = fvv.id;
    Var out = push(std::move(n));

    Node& o = node(out);
    const Node& qn = node(qpv);
    const Node& fn = node(fvv);
    const int64_t C = dq + nf;
    for (int p = 0; p < o.planes; ++p) {
        const double* qpl = plane_or_null(qn, p);
        const double* fpl = plane_or_null(fn, p);
        double* op = plane(o, p);
        for (int64_t s = 0; s < B; ++s) {
            for (int64_t r = 0; r < Nq; ++r) {
                double* row = op + (s * Nq + r) * C;
                if (qpl)
                    std::copy(qpl + (s * Nq + r) * dq, qpl + (s * Nq + r + 1) * dq, row);
                if (fpl)
                    std::copy(fpl + s * nf, fpl + (s + 1) * nf, row + dq);
            }
        }
    }
    return out;
}

Var Tape::concat_last(Var av, Var bv) {
    const Node& a = node(av);
    const Node& b = node(bv);
    PINNSE_CHECK(a.shape.size() == b.shape.size() && a.shape.size() >= 1,
                 "concat_last: rank mismatch");
    for (size_t i = 0; i + 1 < a.shape.size(); ++i)
        PINNSE_CHECK(a.shape[i] == b.shape[i], "concat_last: leading dims differ");
    const int64_t Ca = a.shape.back(), Cb = b.shape.back();
    const int64_t R = a.numel / Ca;
    Node n;
    n.kind = OpKind::concat_last;
    n.shape = a.shape;
    n.shape.back() = Ca + Cb;
    n.planes = std::max(a.planes, b.planes);
    n.requires_grad = a.requires_grad || b.requires_grad;
    n.args[0] = av.id;
    n.args[1] = bv.id;
    Var out = push(std::move(n));
    Node& o = node(out);
    const Node& an = node(av);
    const Node& bn = node(bv);
    for (int p = 0; p < o.planes; ++p) {
        const double* ap = plane_or_null(an, p);
        const double* bp = plane_or_null(bn, p);
        double* op = plane(o, p);
        for (int64_t r = 0; r < R; ++r) {
            if (ap) std::copy(ap + r * Ca, ap + (r + 1) * Ca, op + r * (Ca + Cb));
            if (bp) std::copy(bp + r * Cb, bp + (r + 1) * Cb, op + r * (Ca + Cb) + Ca);
        }
    }
    return out;
}

Var Tape::select_col(Var xv, int64_t col) {
    const Node& x = node(xv);
    PINNSE_CHECK(x.shape.size() >= 2, "select_col: needs rank >= 2");
    const int64_t C = x.shape.back();
    PINNSE_CHECK(col >= 0 && col < C, "select_col: column out of range");
    Node n;
    n.kind = OpKind::select_col;
    n.shape = Shape(x.shape.begin(), x.shape.end() - 1);
    n.planes = x.planes;
    n.requires_grad = x.requires_grad;
    n.args[0] = xv.id;
    n.i0 = col;
    Var out = push(std::move(n));
    Node& o = node(out);
    const Node& xn = node(xv);
    for (int p = 0; p < o.planes; ++p) {
        const double* xp = plane(const_cast<Node&>(xn), p);
        double* op = plane(o, p);
        for (int64_t r = 0; r < o.numel; ++r) op[r] = xp[r * C + col];
    }
    return out;
}

Var Tape::deriv_part(Var xv, int dir, int order) {
    PINNSE_CHECK(order == 1 || order == 2, "unsupported derivative order");
    PINNSE_CHECK(dir >= 0 && dir < layout_.n_dirs, "deriv_part: direction out of range");
    PINNSE_CHECK(order <= layout_.order[dir], "deriv_part: order not carried for this direction");
    const Node& x = node(xv);
    Node n;
    n.kind = OpKind::deriv_part;
    n.shape = x.shape;
    n.planes = 1;
    n.requires_grad = x.requires_grad && x.planes > 1;
    n.args[0] = xv.id;
    n.i0 = dir;
    n.i1 = order;
    Var out = push(std::move(n));
    Node& o = node(out);
    const Node& xn = node(xv);
    const int p = (order == 1) ? layout_.d_plane(dir) : layout_.dd_plane(dir);
    if (xn.planes > p) {
        const double* xp = plane(const_cast<Node&>(xn), p);
        std::copy(xp, xp + o.numel, o.val.begin());
    }
    return out;
}

Var Tape::drop_tangents(Var xv) {
    const Node& x = node(xv);
    if (x.planes == 1) return xv;
    Node n;
    n.kind = OpKind::drop_tangents;
    n.shape = x.shape;
    n.planes = 1;
    n.requires_grad = x.requires_grad;
    n.args[0] = xv.id;
    Var out = push(std::move(n));
    Node& o = node(out);
    const Node& xn = node(xv);
    std::copy(xn.val.begin(), xn.val.begin() + o.numel, o.val.begin());
    return out;
}

Var Tape::mean_all(Var xv) {
    const Node& x = node(xv);
    Node n;
    n.kind = OpKind::reduce_mean;
    n.shape = {1};
    n.planes = x.planes;
    n.requires_grad = x.requires_grad;
    n.args[0] = xv.id;
    Var out = push(std::move(n));
    Node& o = node(out);
    const Node& xn = node(xv);
    for (int p = 0; p < o.planes; ++p)
        o.val[size_t(p)] = kern::sum(size_t(xn.numel), plane(const_cast<Node&>(xn), p)) /
                           double(xn.numel);
    return out;
}

Var Tape::sum_all(Var xv) {
    const Node& x = node(xv);
    Node n;
    n.kind = OpKind::reduce_sum;
    n.shape = {1};
    n.planes = x.planes;
    n.requires_grad = x.requires_grad;
    n.args[0] = xv.id;
    Var out = push(std::move(n));
    Node& o = node(out);
    const Node& xn = node(xv);
    for (int p = 0; p < o.planes; ++p)
        o.val[size_t(p)] = kern::sum(size_t(xn.numel), plane(const_cast<Node&>(xn), p));
    return out;
}

Var Tape::reshape(Var xv, Shape s) {
    const Node& x = node(xv);
    PINNSE_CHECK(shape_numel(s) == x.numel, "reshape: element count mismatch");
    Node n;
    n.kind = OpKind::copy_reshape;
    n.shape = std::move(s);
    n.planes = x.planes;
    n.requires_grad = x.requires_grad;
    n.args[0] = xv.id;
    Var out = push(std::move(n));
    Node& o = node(out);
    o.val = node(xv).val;
    return out;
}

// ---------------------------------------------------------------- access

Tensor Tape::value(Var v) const {
    const Node& n = node(v);
    return Tensor(n.shape, std::vector<double>(n.val.begin(), n.val.begin() + n.numel));
}

double Tape::scalar_value(Var v) const {
    const Node& n = node(v);
    PINNSE_CHECK(n.numel == 1, "scalar_value: not a scalar");
    return n.val[0];
}

Tensor Tape::jet_plane(Var v, int dir, int order) const {
    const Node& n = node(v);
    const int p = (order == 1) ? layout_.d_plane(dir) : layout_.dd_plane(dir);
    PINNSE_CHECK(p >= 0, "jet_plane: plane not carried");
    Tensor t(n.shape);
    if (n.planes > p)
        std::copy(n.val.begin() + size_t(p) * n.numel, n.val.begin() + size_t(p + 1) * n.numel,
                  t.vec().begin());
    return t;
}

Tensor Tape::grad(Var v) const {
    const Node& n = node(v);
    Tensor t(n.shape);
    if (!n.adj.empty()) std::copy(n.adj.begin(), n.adj.begin() + n.numel, t.vec().begin());
    return t;
}

// ---------------------------------------------------------------- backward

void Tape::backward(Var loss) {
    Node& ln = node(loss);
    PINNSE_CHECK(ln.numel == 1, "backward: loss must be scalar");
    PINNSE_CHECK(!swept_, "backward: tape already swept");
    swept_ = true;
    if (!ln.requires_grad) return;
    ensure_adj(ln);
    ln.adj[0] = 1.0;
    for (size_t idx = nodes_.size(); idx-- > 0;) backward_node(idx);
}

void Tape::backward_node(size_t idx) {
    Node& o = nodes_[idx];
    if (!o.requires_grad || o.adj.empty()) return;
    const int64_t m = o.numel;
    const size_t um = size_t(m);

    auto arg = [&](int i) -> Node& { return nodes_[size_t(o.args[i])]; };
    auto want = [&](int i) {
        return o.args[i] >= 0 && nodes_[size_t(o.args[i])].requires_grad;
    };

    switch (o.kind) {
        case OpKind::leaf:
            return;

        case OpKind::linear: {
            Node& x = arg(0);
            Node& W = arg(1);
            const int64_t Ci = W.shape[0], Co = W.shape[1];
            const int64_t R = x.numel / Ci;
            if (want(0)) {
                ensure_adj(x);
                for (int p = 0; p < o.planes; ++p)
                    kern::gemm_nt(size_t(R), size_t(Ci), size_t(Co), adj_plane(o, p),
                                  W.val.data(), adj_plane(x, p), true);
            }
            if (want(1)) {
                ensure_adj(W);
                for (int p = 0; p < o.planes; ++p) {
                    const double* xp = plane_or_null(x, p);
                    if (!xp) continue;
                    kern::gemm_tn(size_t(R), size_t(Co), size_t(Ci), xp, adj_plane(o, p),
                                  W.adj.data(), true);
                }
            }
            if (o.args[2] >= 0 && want(2)) {
                Node& b = arg(2);
                ensure_adj(b);
                const double* op = adj_plane(o, 0);
                for (int64_t r = 0; r < R; ++r)
                    kern::axpy(size_t(Co), 1.0, op + r * Co, b.adj.data());
            }
            return;
        }

        case OpKind::unary: {
            if (!want(0)) return;
            Node& x = arg(0);
            ensure_adj(x);
            const UnaryKind k = UnaryKind(o.sub);
            int max_ord = 0;
            for (int d = 0; d < layout_.n_dirs && o.planes > 1; ++d)
                max_ord = std::max(max_ord, layout_.order[d]);
            // reverse rule needs one extra derivative order than the forward
            const int need = (o.planes > 1) ? max_ord + 1 : 1;
            const double* xv = x.val.data();
            for (int64_t i = 0; i < m; ++i) {
                double f0, f1, f2, f3;
                if (k == UnaryKind::act) {
                    ActJet j = activation_jet(ActivationKind(o.sub2), xv[i], o.s0,
                                              std::min(need, 3));
                    f0 = j.f0; f1 = j.f1; f2 = j.f2; f3 = j.f3;
                } else {
                    unary_derivs(k, xv[i], need, f0, f1, f2, f3);
                }
                double accv = o.adj[size_t(i)] * f1;
                for (int d = 0; d < layout_.n_dirs && o.planes > 1; ++d) {
                    const int dp = layout_.d_plane(d);
                    const int ddp = layout_.dd_plane(d);
                    const double xd = x.planes > dp ? xv[size_t(dp) * m + i] : 0.0;
                    const double oda = o.adj[size_t(dp) * m + i];
                    accv += oda * f2 * xd;
                    double accd = oda * f1;
                    if (ddp >= 0) {
                        const double xdd = x.planes > ddp ? xv[size_t(ddp) * m + i] : 0.0;
                        const double odda = o.adj[size_t(ddp) * m + i];
                        accv += odda * (f2 * xdd + f3 * xd * xd);
                        accd += odda * 2.0 * f2 * xd;
                        if (x.planes > ddp) x.adj[size_t(ddp) * m + i] += odda * f1;
                    }
                    if (x.planes > dp) x.adj[size_t(dp) * m + i] += accd;
                }
                x.adj[size_t(i)] += accv;
            }
            return;
        }

        case OpKind::binary: {
            const BinaryKind k = BinaryKind(o.sub);
            if (k == BinaryKind::add || k == BinaryKind::sub) {
                const double sb = (k == BinaryKind::add) ? 1.0 : -1.0;
                for (int side = 0; side < 2; ++side) {
                    if (!want(side)) continue;
                    Node& x = arg(side);
                    ensure_adj(x);
                    const double sgn = side == 0 ? 1.0 : sb;
                    for (int p = 0; p < std::min(o.planes, x.planes); ++p)
                        kern::axpy(um, sgn, adj_plane(o, p), adj_plane(x, p));
                }
                return;
            }
            // mul: transposed jet multiply by the other operand
            for (int side = 0; side < 2; ++side) {
                if (!want(side)) continue;
                Node& x = arg(side);
                Node& y = arg(1 - side);
                ensure_adj(x);
                const double* y0 = y.val.data();
                // value component
                kern::mul_acc(um, adj_plane(o, 0), y0, x.adj.data());
                for (int d = 0; d < layout_.n_dirs && o.planes > 1; ++d) {
                    const int dp = layout_.d_plane(d);
                    const int ddp = layout_.dd_plane(d);
                    const double* yd = plane_or_null(y, dp);
                    const double* ydd = ddp >= 0 ? plane_or_null(y, ddp) : nullptr;
                    if (yd) kern::mul_acc(um, adj_plane(o, dp), yd, x.adj.data());
                    if (ydd) kern::mul_acc(um, adj_plane(o, ddp), ydd, x.adj.data());
                    if (x.planes > dp) {
                        kern::mul_acc(um, adj_plane(o, dp), y0, adj_plane(x, dp));
                        if (ddp >= 0 && yd) {
                            const double* oa = adj_plane(o, ddp);
                            double* xa = adj_plane(x, dp);
                            for (int64_t i = 0; i < m; ++i) xa[i] += 2.0 * oa[i] * yd[i];
                        }
                    }
                    if (ddp >= 0 && x.planes > ddp)
                        kern::mul_acc(um, adj_plane(o, ddp), y0, adj_plane(x, ddp));
                }
            }
            return;
        }

        case OpKind::binary_bcast: {
            const BinaryKind k = BinaryKind(o.sub);
            Node& x = arg(0);
            Node& y = arg(1);
            const int64_t B = o.shape[0];
            const int64_t blk = m / B;
            if (k == BinaryKind::add || k == BinaryKind::sub) {
                const double sb = (k == BinaryKind::add) ? 1.0 : -1.0;
                if (want(0)) {
                    ensure_adj(x);
                    for (int p = 0; p < std::min(o.planes, x.planes); ++p)
                        kern::axpy(um, 1.0, adj_plane(o, p), adj_plane(x, p));
                }
                if (want(1)) {
                    ensure_adj(y);
                    for (int p = 0; p < std::min(o.planes, y.planes); ++p) {
                        const double* op = adj_plane(o, p);
                        double* yp = adj_plane(y, p);
                        for (int64_t s = 0; s < B; ++s)
                            yp[s] += sb * kern::sum(size_t(blk), op + s * blk);
                    }
                }
                return;
            }
            // mul
            const double* x0 = x.val.data();
            const double* y0 = y.val.data();
            for (int64_t s = 0; s < B; ++s) {
                const double ys = y0[s];
                if (want(0)) {
                    ensure_adj(x);
                    const double* oa0 = adj_plane(o, 0) + s * blk;
                    double* xa0 = x.adj.data() + s * blk;
                    for (int64_t i = 0; i < blk; ++i) xa0[i] += oa0[i] * ys;
                    for (int dd = 0; dd < layout_.n_dirs && o.planes > 1; ++dd) {
                        const int dp = layout_.d_plane(dd);
                        const int ddp = layout_.dd_plane(dd);
                        const double yd = y.planes > dp ? plane(y, dp)[s] : 0.0;
                        const double* oad = adj_plane(o, dp) + s * blk;
                        for (int64_t i = 0; i < blk; ++i) xa0[i] += oad[i] * yd;
                        if (x.planes > dp) {
                            double* xad = adj_plane(x, dp) + s * blk;
                            for (int64_t i = 0; i < blk; ++i) xad[i] += oad[i] * ys;
                        }
                        if (ddp >= 0) {
                            const double ydd2 = y.planes > ddp ? plane(y, ddp)[s] : 0.0;
                            const double* oadd = adj_plane(o, ddp) + s * blk;
                            for (int64_t i = 0; i < blk; ++i) xa0[i] += oadd[i] * ydd2;
                            if (x.planes > dp) {
                                double* xad = adj_plane(x, dp) + s * blk;
                                for (int64_t i = 0; i < blk; ++i) xad[i] += 2.0 * oadd[i] * yd;
                            }
                            if (x.planes > ddp) {
                                double* xadd = adj_plane(x, ddp) + s * blk;
                                for (int64_t i = 0; i < blk; ++i) xadd[i] += oadd[i] * ys;
                            }
                        }
                    }
                }
                if (want(1)) {
                    ensure_adj(y);
                    const double* xs0 = x0 + s * blk;
                    const double* oa0 = adj_plane(o, 0) + s * blk;
                    double acc0 = 0.0;
                    for (int64_t i = 0; i < blk; ++i) acc0 += oa0[i] * xs0[i];
                    y.adj[size_t(s)] += acc0;
                    for (int dd = 0; dd < layout_.n_dirs && o.planes > 1; ++dd) {
                        const int dp = layout_.d_plane(dd);
                        const int ddp = layout_.dd_plane(dd);
                        const double* xd = x.planes > dp ? plane(x, dp) + s * blk : nullptr;
                        const double* oad = adj_plane(o, dp) + s * blk;
                        double accv = 0.0;
                        if (xd)
                            for (int64_t i = 0; i < blk; ++i) accv += oad[i] * xd[i];
                        y.adj[size_t(s)] += accv;
                        double accd = 0.0;
                        for (int64_t i = 0; i < blk; ++i) accd += oad[i] * xs0[i];
                        if (y.planes > dp) y.adj[size_t(dp) * y.numel + s] += accd;
                        if (ddp >= 0) {
                            const double* xdd =
                                x.planes > ddp ? plane(x, ddp) + s * blk : nullptr;
                            const double* oadd = adj_plane(o, ddp) + s * blk;
                            double av = 0.0, ad = 0.0, add2 = 0.0;
                            for (int64_t i = 0; i < blk; ++i) {
                                if (xdd) av += oadd[i] * xdd[i];
                                if (xd) ad += 2.0 * oadd[i] * xd[i];
                                add2 += oadd[i] * xs0[i];
                            }
                            y.adj[size_t(s)] += av;
                            if (y.planes > dp) y.adj[size_t(dp) * y.numel + s] += ad;
                            if (y.planes > ddp) y.adj[size_t(ddp) * y.numel + s] += add2;
                        }
                    }
                }
            }
            return;
        }

        case OpKind::scalar_affine: {
            if (!want(0)) return;
            Node& x = arg(0);
            ensure_adj(x);
            for (int p = 0; p < o.planes; ++p)
                kern::axpy(um, o.s0, adj_plane(o, p), adj_plane(x, p));
            return;
        }

        case OpKind::affine_cols: {
            if (!want(0)) return;
            Node& x = arg(0);
            ensure_adj(x);
            const int64_t C = o.shape.back();
            for (int p = 0; p < o.planes; ++p) {
                const double* op = adj_plane(o, p);
                double* xp = adj_plane(x, p);
                for (int64_t i = 0; i < m; ++i) xp[i] += o.aux[size_t(i % C)] * op[i];
            }
            return;
        }

        case OpKind::pool: {
            if (!want(0)) return;
            Node& phi = arg(0);
            ensure_adj(phi);
            const PoolKind k = PoolKind(o.sub);
            const int64_t B = o.shape[0], D = o.shape[2];
            const int64_t N = phi.shape[1];
            const double* pv = phi.val.data();
            const double* oa = o.adj.data();
            double* pa = phi.adj.data();
            for (int64_t s = 0; s < B; ++s) {
                int64_t count = 0;
                for (int64_t r = 0; r < N; ++r)
                    if (o.aux[size_t(s * N + r)] != 0.0) ++count;
                for (int64_t r = 0; r < N; ++r) {
                    if (o.aux[size_t(s * N + r)] == 0.0) continue;
                    for (int64_t j = 0; j < D; ++j) {
                        const int64_t pi = (s * N + r) * D + j;
                        const double g = oa[s * D + j];
                        switch (k) {
                            case PoolKind::mean_square:
                                pa[pi] += g * 2.0 * pv[pi] / double(count);
                                break;
                            case PoolKind::sum:
                                pa[pi] += g;
                                break;
                            case PoolKind::sum_abs:
                                pa[pi] += g * sign_of(pv[pi]);
                                break;
                        }
                    }
                }
            }
            return;
        }

        case OpKind::concat_query: {
            Node& qp = arg(0);
            Node& fv = arg(1);
            const int64_t B = o.shape[0], Nq = o.shape[1], C = o.shape[2];
            const int64_t dq = qp.shape[2], nf = fv.shape[2];
            if (want(0)) {
                ensure_adj(qp);
                for (int p = 0; p < std::min(o.planes, qp.planes); ++p) {
                    const double* op = adj_plane(o, p);
                    double* ap = adj_plane(qp, p);
                    for (int64_t r = 0; r < B * Nq; ++r)
                        kern::axpy(size_t(dq), 1.0, op + r * C, ap + r * dq);
                }
            }
            if (want(1)) {
                ensure_adj(fv);
                for (int p = 0; p < std::min(o.planes, fv.planes); ++p) {
                    const double* op = adj_plane(o, p);
                    double* ap = adj_plane(fv, p);
                    for (int64_t s = 0; s < B; ++s)
                        for (int64_t r = 0; r < Nq; ++r)
                            kern::axpy(size_t(nf), 1.0, op + (s * Nq + r) * C + dq, ap + s * nf);
                }
            }
            return;
        }

        case OpKind::concat_last: {
            Node& a = arg(0);
            Node& b = arg(1);
            const int64_t Ca = a.shape.back(), Cb = b.shape.back();
            const int64_t R = a.numel / Ca;
            if (want(0)) {
                ensure_adj(a);
                for (int p = 0; p < std::min(o.planes, a.planes); ++p) {
                    const double* op = adj_plane(o, p);
                    double* ap = adj_plane(a, p);
                    for (int64_t r = 0; r < R; ++r)
                        kern::axpy(size_t(Ca), 1.0, op + r * (Ca + Cb), ap + r * Ca);
                }
            }
            if (want(1)) {
                ensure_adj(b);
                for (int p = 0; p < std::min(o.planes, b.planes); ++p) {
                    const double* op = adj_plane(o, p);
                    double* bp = adj_plane(b, p);
                    for (int64_t r = 0; r < R; ++r)
                        kern::axpy(size_t(Cb), 1.0, op + r * (Ca + Cb) + Ca, bp + r * Cb);
                }
            }
            return;
        }

        case OpKind::select_col: {
            if (!want(0)) return;
            Node& x = arg(0);
            ensure_adj(x);
            const int64_t C = x.shape.back();
            for (int p = 0; p < o.planes; ++p) {
                const double* op = adj_plane(o, p);
                double* xp = adj_plane(x, p);
                for (int64_t r = 0; r < m; ++r) xp[r * C + o.i0] += op[r];
            }
            return;
        }

        case OpKind::deriv_part: {
            if (!want(0)) return;
            Node& x = arg(0);
            const int p = (o.i1 == 1) ? layout_.d_plane(int(o.i0)) : layout_.dd_plane(int(o.i0));
            if (x.planes <= p) return;
            ensure_adj(x);
            kern::axpy(um, 1.0, o.adj.data(), adj_plane(x, p));
            return;
        }

        case OpKind::drop_tangents: {
            if (!want(0)) return;
            Node& x = arg(0);
            ensure_adj(x);
            kern::axpy(um, 1.0, o.adj.data(), x.adj.data());
            return;
        }

        case OpKind::reduce_mean:
        case OpKind::reduce_sum: {
            if (!want(0)) return;
            Node& x = arg(0);
            ensure_adj(x);
            const double w = o.kind == OpKind::reduce_mean ? 1.0 / double(x.numel) : 1.0;
            for (int p = 0; p < o.planes; ++p) {
                const double g = o.adj[size_t(p)] * w;
                if (g == 0.0) continue;
                double* xp = adj_plane(x, p);
                for (int64_t i = 0; i < x.numel; ++i) xp[i] += g;
            }
            return;
        }

        case OpKind::copy_reshape: {
            if (!want(0)) return;
            Node& x = arg(0);
            ensure_adj(x);
            for (int p = 0; p < o.planes; ++p)
                kern::axpy(um, 1.0, adj_plane(o, p), adj_plane(x, p));
            return;
        }
    }
}

}  // namespace pinnse::ad
