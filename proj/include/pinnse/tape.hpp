#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pinnse/common.hpp"
#include "pinnse/tensor.hpp"

namespace pinnse::ad {

/// Layout of the derivative planes carried through a forward pass.
///
/// Every tape variable holds its primal values plus, optionally, one
/// first-order tangent plane per seeded input direction and one second-order
/// plane per direction of order 2. Weight gradients are obtained by a reverse
/// sweep over all planes, so losses built from tangent components (PDE
/// residuals) stay differentiable with respect to the weights.
struct JetLayout {
    int n_dirs = 0;
    std::array<int, 3> order{{0, 0, 0}};  // 1 or 2 per direction

    int planes() const {
        int p = 1;
        for (int k = 0; k < n_dirs; ++k) p += order[k];
        return p;
    }
    int d_plane(int k) const { return 1 + k; }
    int dd_plane(int k) const {
        if (k >= n_dirs || order[k] < 2) return -1;
        int idx = 1 + n_dirs;
        for (int j = 0; j < k; ++j)
            if (order[j] == 2) ++idx;
        return idx;
    }

    static JetLayout none() { return {}; }
    static JetLayout dirs(std::initializer_list<int> orders) {
        JetLayout l;
        for (int o : orders) {
            PINNSE_CHECK(o == 1 || o == 2, "jet direction order must be 1 or 2");
            PINNSE_CHECK(l.n_dirs < 3, "at most 3 jet directions supported");
            l.order[l.n_dirs++] = o;
        }
        return l;
    }
};

struct Var {
    int32_t id = -1;
    bool valid() const { return id >= 0; }
};

enum class OpKind : uint8_t {
    leaf,
    linear,        // args: x, W, b(optional)
    unary,
    binary,        // same-shape elementwise
    binary_bcast,  // x[b,...] (op) y[b] per-sample scalar
    scalar_affine, // a*x + c
    affine_cols,   // per-column a_j*x + c_j over the last axis
    pool,          // deep-set pooling over axis 1 with mask
    concat_query,  // [qp | repeat(fvec)] along last axis
    concat_last,   // concat along last axis, equal leading dims
    select_col,    // drop last axis, keep one column
    deriv_part,    // extract a tangent plane as a primal value
    drop_tangents, // keep only the primal plane
    reduce_mean,
    reduce_sum,
    copy_reshape,
};

enum class UnaryKind : uint8_t { neg, abs_v, square, sin_v, cos_v, act };
enum class BinaryKind : uint8_t { add, sub, mul };

struct SeedSpec {
    int dir = 0;       // jet direction index
    int col = 0;       // input column carrying this coordinate
    double seed = 1.0; // tangent magnitude (1/scale folds input normalization)
};

struct Node {
    OpKind kind;
    uint8_t sub = 0;    // UnaryKind / BinaryKind / PoolKind / activation kind
    uint8_t sub2 = 0;
    int32_t args[3] = {-1, -1, -1};
    Shape shape;
    int64_t numel = 0;
    int planes = 1;
    bool requires_grad = false;
    double s0 = 0.0, s1 = 0.0;  // scalar payload
    int64_t i0 = 0, i1 = 0;     // integer payload
    std::vector<double> val;    // planes * numel, plane-major
    std::vector<double> adj;    // allocated lazily during backward
    std::vector<double> aux;    // masks / per-column payloads
};

/// Single-threaded record of tensor operations over jet values. Build the
/// forward pass once, then call backward() on a scalar to populate adjoints.
class Tape {
  public:
    explicit Tape(JetLayout layout = JetLayout::none()) : layout_(layout) {}

    const JetLayout& layout() const { return layout_; }
    size_t size() const { return nodes_.size(); }

    // ---- leaves ----
    Var leaf(const Tensor& t, bool requires_grad = false);
    /// Leaf with first-order (and second-order, when the layout says so)
    /// tangents seeded on the given columns.
    Var leaf_seeded(const Tensor& t, const std::vector<SeedSpec>& seeds);

    // ---- operations ----
    Var linear(Var x, Var W, Var b = {});
    Var activation(Var x, ActivationKind k, double c = 3.14);
    Var neg(Var x) { return unary(UnaryKind::neg, x); }
    Var abs(Var x) { return unary(UnaryKind::abs_v, x); }
    Var square(Var x) { return unary(UnaryKind::square, x); }
    Var sin(Var x) { return unary(UnaryKind::sin_v, x); }
    Var cos(Var x) { return unary(UnaryKind::cos_v, x); }
    Var add(Var a, Var b) { return binary(BinaryKind::add, a, b); }
    Var sub(Var a, Var b) { return binary(BinaryKind::sub, a, b); }
    Var mul(Var a, Var b) { return binary(BinaryKind::mul, a, b); }
    /// y holds one scalar per sample (leading-axis entry of x).
    Var add_bcast(Var x, Var y) { return binary_bcast(BinaryKind::add, x, y); }
    Var sub_bcast(Var x, Var y) { return binary_bcast(BinaryKind::sub, x, y); }
    Var mul_bcast(Var x, Var y) { return binary_bcast(BinaryKind::mul, x, y); }
    Var scalar_affine(Var x, double a, double c);
    Var affine_cols(Var x, const std::vector<double>& scale, const std::vector<double>& offset);
    Var pool(PoolKind kind, Var phi, const std::vector<double>& mask);
    Var concat_query(Var qp, Var fvec);
    Var concat_last(Var a, Var b);
    Var select_col(Var x, int64_t col);
    Var deriv_part(Var x, int dir, int order);
    Var drop_tangents(Var x);
    Var mean_all(Var x);
    Var sum_all(Var x);
    Var reshape(Var x, Shape s);

    // ---- execution ----
    /// Reverse sweep from a scalar. Throws if `loss` is not a single element.
    void backward(Var loss);

    // ---- access ----
    const Shape& shape(Var v) const { return node(v).shape; }
    int planes_of(Var v) const { return node(v).planes; }
    /// Primal values.
    Tensor value(Var v) const;
    double scalar_value(Var v) const;
    /// Tangent plane dir/order as a tensor (zeros if the variable is primal-only).
    Tensor jet_plane(Var v, int dir, int order) const;
    /// Adjoint of the primal plane (the gradient, for weight leaves).
    Tensor grad(Var v) const;
    bool has_grad(Var v) const { return !node(v).adj.empty(); }

  private:
    Var unary(UnaryKind k, Var x, double c = 0.0, uint8_t act_kind = 0);
    Var binary(BinaryKind k, Var a, Var b);
    Var binary_bcast(BinaryKind k, Var x, Var y);
    Var push(Node&& n);
    Node& node(Var v) { return nodes_[size_t(v.id)]; }
    const Node& node(Var v) const { return nodes_[size_t(v.id)]; }
    double* plane(Node& n, int p) { return n.val.data() + size_t(p) * n.numel; }
    const double* plane(const Node& n, int p) const { return n.val.data() + size_t(p) * n.numel; }
    const double* plane_or_null(const Node& n, int p) const {
        return p < n.planes ? n.val.data() + size_t(p) * n.numel : nullptr;
    }
    double* adj_plane(Node& n, int p);
    void ensure_adj(Node& n);

    void backward_node(size_t idx);

    JetLayout layout_;
    std::vector<Node> nodes_;
    bool swept_ = false;
};

}  // namespace pinnse::ad
