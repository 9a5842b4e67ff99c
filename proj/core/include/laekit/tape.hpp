#pragma once

#include <functional>
#include <span>
#include <vector>

#include "laekit/tensor.hpp"

namespace laekit {

// Reverse-mode autodiff over whole tensors. One Tape per forward pass;
// nodes are appended in topological order, so backward() is a reverse
// sweep over the node list. All ops are deterministic with a fixed
// summation order.
class Tape {
public:
    using VarId = int;

    VarId leaf(Tensor value, bool requires_grad = false);

    const Tensor& value(VarId id) const { return nodes_[static_cast<size_t>(id)].value; }
    const Tensor& grad(VarId id) const { return nodes_[static_cast<size_t>(id)].grad; }
    float scalar(VarId id) const;

    // Seeds d(root)/d(root) = 1 and accumulates gradients into every node.
    // root must be a scalar (size-1) node.
    void backward(VarId root);

    // Elementwise; operands must share sizes.
    VarId add(VarId a, VarId b);
    VarId sub(VarId a, VarId b);
    VarId mul(VarId a, VarId b);
    VarId div(VarId a, VarId b);
    // y = k * x + c
    VarId affine(VarId x, float k, float c);
    VarId sigmoid(VarId x);
    VarId tanh(VarId x);

    VarId concat(VarId a, VarId b);
    // Flat view of len elements starting at offset.
    VarId slice(VarId a, int offset, int len);
    // Same data, new shape; sizes must agree.
    VarId reshape(VarId a, std::vector<int> shape);
    // Mean of equally sized vectors.
    VarId mean_of(std::span<const VarId> xs);
    // y = W x + b with W of shape (out, in); b may be -1 for no bias.
    VarId matvec(VarId w, VarId x, VarId b = -1);

    VarId dot(VarId a, VarId b);           // scalar
    VarId l2norm(VarId a);                 // scalar, sqrt(dot(a, a))
    VarId div_by_scalar(VarId a, VarId s); // y = a / s, s scalar
    // dot(a, b) / sqrt(dot(a, a) * dot(b, b)); exactly 1 for bit-identical
    // inputs. Throws on a zero-norm operand.
    VarId cosine(VarId a, VarId b);

    // Mean over non-overlapping factor x factor spatial blocks of an
    // (H, W, C) image.
    VarId avgpool(VarId img, int factor);

    // Bilinear sample of an (H, W, C) image at (x + dx, y + dy) with zero
    // padding outside the frame.
    VarId shift_sample(VarId img, float dx, float dy);

    // Back-to-front over-compositing onto a black background. colors and
    // alphas are ordered near-to-far ((H, H, 3) and (H, H, 1) per plane).
    VarId over_composite(std::span<const VarId> colors, std::span<const VarId> alphas);

    VarId sum(std::span<const VarId> scalars);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void(Tape&)> back;
    };

    VarId push(Tensor value, std::function<void(Tape&)> back);
    Tensor& grad_mut(VarId id) { return nodes_[static_cast<size_t>(id)].grad; }

    std::vector<Node> nodes_;
};

}  // namespace laekit
