#include "laekit/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace laekit {

Tape::VarId Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.grad = Tensor::zeros(n.value.shape);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<VarId>(nodes_.size()) - 1;
}

Tape::VarId Tape::push(Tensor value, std::function<void(Tape&)> back) {
    Node n;
    n.value = std::move(value);
    n.grad = Tensor::zeros(n.value.shape);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<VarId>(nodes_.size()) - 1;
}

float Tape::scalar(VarId id) const {
    const Tensor& v = value(id);
    if (v.size() != 1) throw std::logic_error("scalar() on non-scalar node");
    return v.data[0];
}

void Tape::backward(VarId root) {
    if (value(root).size() != 1) throw std::logic_error("backward root must be scalar");
    for (Node& n : nodes_)
        std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0f);
    grad_mut(root).data[0] = 1.0f;
    for (VarId id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.back) n.back(*this);
    }
}

static void check_same_size(const Tensor& a, const Tensor& b, const char* op) {
    if (a.size() != b.size()) throw std::invalid_argument(std::string(op) + ": size mismatch");
}

Tape::VarId Tape::add(VarId a, VarId b) {
    const Tensor &va = value(a), &vb = value(b);
    check_same_size(va, vb, "add");
    Tensor out = va;
    for (int i = 0; i < out.size(); ++i) out[i] += vb[i];
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [a, b, id](Tape& t) {
        const Tensor& g = t.grad(id);
        for (int i = 0; i < g.size(); ++i) {
            t.grad_mut(a)[i] += g[i];
            t.grad_mut(b)[i] += g[i];
        }
    };
    return id;
}

Tape::VarId Tape::sub(VarId a, VarId b) {
    const Tensor &va = value(a), &vb = value(b);
    check_same_size(va, vb, "sub");
    Tensor out = va;
    for (int i = 0; i < out.size(); ++i) out[i] -= vb[i];
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [a, b, id](Tape& t) {
        const Tensor& g = t.grad(id);
        for (int i = 0; i < g.size(); ++i) {
            t.grad_mut(a)[i] += g[i];
            t.grad_mut(b)[i] -= g[i];
        }
    };
    return id;
}

Tape::VarId Tape::mul(VarId a, VarId b) {
    const Tensor &va = value(a), &vb = value(b);
    check_same_size(va, vb, "mul");
    Tensor out = va;
    for (int i = 0; i < out.size(); ++i) out[i] *= vb[i];
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [a, b, id](Tape& t) {
        const Tensor& g = t.grad(id);
        const Tensor &va2 = t.value(a), &vb2 = t.value(b);
        for (int i = 0; i < g.size(); ++i) {
            t.grad_mut(a)[i] += g[i] * vb2[i];
            t.grad_mut(b)[i] += g[i] * va2[i];
        }
    };
    return id;
}

Tape::VarId Tape::div(VarId a, VarId b) {
    const Tensor &va = value(a), &vb = value(b);
    check_same_size(va, vb, "div");
    Tensor out = va;
    for (int i = 0; i < out.size(); ++i) out[i] /= vb[i];
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [a, b, id](Tape& t) {
        const Tensor& g = t.grad(id);
        const Tensor &va2 = t.value(a), &vb2 = t.value(b);
        for (int i = 0; i < g.size(); ++i) {
            t.grad_mut(a)[i] += g[i] / vb2[i];
            t.grad_mut(b)[i] -= g[i] * va2[i] / (vb2[i] * vb2[i]);
        }
    };
    return id;
}

Tape::VarId Tape::affine(VarId x, float k, float c) {
    Tensor out = value(x);
    for (float& v : out.data) v = k * v + c;
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [x, k, id](Tape& t) {
        const Tensor& g = t.grad(id);
        for (int i = 0; i < g.size(); ++i) t.grad_mut(x)[i] += k * g[i];
    };
    return id;
}

Tape::VarId Tape::sigmoid(VarId x) {
    Tensor out = value(x);
    for (float& v : out.data) v = 1.0f / (1.0f + std::exp(-v));
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [x, id](Tape& t) {
        const Tensor& g = t.grad(id);
        const Tensor& y = t.value(id);
        for (int i = 0; i < g.size(); ++i) t.grad_mut(x)[i] += g[i] * y[i] * (1.0f - y[i]);
    };
    return id;
}

Tape::VarId Tape::tanh(VarId x) {
    Tensor out = value(x);
    for (float& v : out.data) v = std::tanh(v);
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [x, id](Tape& t) {
        const Tensor& g = t.grad(id);
        const Tensor& y = t.value(id);
        for (int i = 0; i < g.size(); ++i) t.grad_mut(x)[i] += g[i] * (1.0f - y[i] * y[i]);
    };
    return id;
}

Tape::VarId Tape::concat(VarId a, VarId b) {
    const Tensor &va = value(a), &vb = value(b);
    Tensor out = Tensor::zeros({va.size() + vb.size()});
    std::copy(va.data.begin(), va.data.end(), out.data.begin());
    std::copy(vb.data.begin(), vb.data.end(), out.data.begin() + va.size());
    int na = va.size();
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [a, b, na, id](Tape& t) {
        const Tensor& g = t.grad(id);
        for (int i = 0; i < na; ++i) t.grad_mut(a)[i] += g[i];
        for (int i = na; i < g.size(); ++i) t.grad_mut(b)[i - na] += g[i];
    };
    return id;
}

Tape::VarId Tape::slice(VarId a, int offset, int len) {
    const Tensor& va = value(a);
    if (offset < 0 || len < 0 || offset + len > va.size())
        throw std::invalid_argument("slice: out of range");
    Tensor out = Tensor::zeros({len});
    std::copy(va.data.begin() + offset, va.data.begin() + offset + len, out.data.begin());
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [a, offset, len, id](Tape& t) {
        const Tensor& g = t.grad(id);
        for (int i = 0; i < len; ++i) t.grad_mut(a)[offset + i] += g[i];
    };
    return id;
}

Tape::VarId Tape::reshape(VarId a, std::vector<int> shape) {
    const Tensor& va = value(a);
    if (shape_size(shape) != va.size()) throw std::invalid_argument("reshape: size mismatch");
    Tensor out(std::move(shape), va.data);
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [a, id](Tape& t) {
        const Tensor& g = t.grad(id);
        for (int i = 0; i < g.size(); ++i) t.grad_mut(a)[i] += g[i];
    };
    return id;
}

Tape::VarId Tape::mean_of(std::span<const VarId> xs) {
    if (xs.empty()) throw std::invalid_argument("mean_of: empty input");
    Tensor out = Tensor::zeros(value(xs[0]).shape);
    for (VarId x : xs) {
        const Tensor& v = value(x);
        check_same_size(out, v, "mean_of");
        for (int i = 0; i < out.size(); ++i) out[i] += v[i];
    }
    float inv = 1.0f / static_cast<float>(xs.size());
    for (float& v : out.data) v *= inv;
    std::vector<VarId> ids(xs.begin(), xs.end());
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [ids, inv, id](Tape& t) {
        const Tensor& g = t.grad(id);
        for (VarId x : ids)
            for (int i = 0; i < g.size(); ++i) t.grad_mut(x)[i] += inv * g[i];
    };
    return id;
}

Tape::VarId Tape::matvec(VarId w, VarId x, VarId b) {
    const Tensor& vw = value(w);
    const Tensor& vx = value(x);
    if (vw.shape.size() != 2) throw std::invalid_argument("matvec: weight must be 2-D");
    int rows = vw.shape[0], cols = vw.shape[1];
    if (cols != vx.size()) throw std::invalid_argument("matvec: inner dimension mismatch");
    Tensor out = Tensor::zeros({rows});
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;  // double accumulator: keeps long reductions quiet in float
        const float* wr = vw.data.data() + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += double(wr[c]) * double(vx[c]);
        out[r] = static_cast<float>(acc);
    }
    if (b >= 0) {
        const Tensor& vb = value(b);
        check_same_size(out, vb, "matvec bias");
        for (int r = 0; r < rows; ++r) out[r] += vb[r];
    }
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [w, x, b, rows, cols, id](Tape& t) {
        const Tensor& g = t.grad(id);
        const Tensor& vw2 = t.value(w);
        const Tensor& vx2 = t.value(x);
        Tensor& gw = t.grad_mut(w);
        Tensor& gx = t.grad_mut(x);
        for (int r = 0; r < rows; ++r) {
            float gr = g[r];
            if (gr == 0.0f) continue;
            float* gwr = gw.data.data() + static_cast<size_t>(r) * cols;
            const float* wr = vw2.data.data() + static_cast<size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) {
                gwr[c] += gr * vx2[c];
                gx[c] += gr * wr[c];
            }
        }
        if (b >= 0)
            for (int r = 0; r < rows; ++r) t.grad_mut(b)[r] += g[r];
    };
    return id;
}

Tape::VarId Tape::dot(VarId a, VarId b) {
    const Tensor &va = value(a), &vb = value(b);
    check_same_size(va, vb, "dot");
    double acc = 0.0;
    for (int i = 0; i < va.size(); ++i) acc += double(va[i]) * double(vb[i]);
    VarId id = push(Tensor({1}, {static_cast<float>(acc)}), nullptr);
    nodes_[static_cast<size_t>(id)].back = [a, b, id](Tape& t) {
        float g = t.grad(id)[0];
        const Tensor &va2 = t.value(a), &vb2 = t.value(b);
        for (int i = 0; i < va2.size(); ++i) {
            t.grad_mut(a)[i] += g * vb2[i];
            t.grad_mut(b)[i] += g * va2[i];
        }
    };
    return id;
}

Tape::VarId Tape::l2norm(VarId a) {
    const Tensor& va = value(a);
    double acc = 0.0;
    for (int i = 0; i < va.size(); ++i) acc += double(va[i]) * double(va[i]);
    float n = static_cast<float>(std::sqrt(acc));
    VarId id = push(Tensor({1}, {n}), nullptr);
    nodes_[static_cast<size_t>(id)].back = [a, id](Tape& t) {
        float g = t.grad(id)[0];
        float n2 = t.value(id)[0];
        if (n2 == 0.0f) return;  // subgradient 0 at the origin
        const Tensor& va2 = t.value(a);
        for (int i = 0; i < va2.size(); ++i) t.grad_mut(a)[i] += g * va2[i] / n2;
    };
    return id;
}

Tape::VarId Tape::div_by_scalar(VarId a, VarId s) {
    const Tensor& va = value(a);
    float sv = scalar(s);
    Tensor out = va;
    for (float& v : out.data) v /= sv;
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [a, s, id](Tape& t) {
        const Tensor& g = t.grad(id);
        float sv2 = t.value(s)[0];
        const Tensor& va2 = t.value(a);
        float gs = 0.0f;
        for (int i = 0; i < g.size(); ++i) {
            t.grad_mut(a)[i] += g[i] / sv2;
            gs -= g[i] * va2[i] / (sv2 * sv2);
        }
        t.grad_mut(s)[0] += gs;
    };
    return id;
}

Tape::VarId Tape::cosine(VarId a, VarId b) {
    // dot / sqrt(dot_aa * dot_bb): bit-identical inputs give exactly 1
    // (sqrt(x * x) == x in IEEE round-to-nearest).
    VarId daa = dot(a, a);
    VarId dbb = dot(b, b);
    if (scalar(daa) == 0.0f || scalar(dbb) == 0.0f)
        throw std::domain_error("cosine: zero-norm operand");
    VarId dab = dot(a, b);
    VarId prod = mul(daa, dbb);
    Tensor root({1}, {std::sqrt(scalar(prod))});
    VarId denom = push(std::move(root), nullptr);
    nodes_[static_cast<size_t>(denom)].back = [prod, denom](Tape& t) {
        float y = t.value(denom)[0];
        t.grad_mut(prod)[0] += t.grad(denom)[0] * 0.5f / y;
    };
    return div(dab, denom);
}

Tape::VarId Tape::avgpool(VarId img, int factor) {
    const Tensor& v = value(img);
    if (v.shape.size() != 3) throw std::invalid_argument("avgpool: expected (H, W, C)");
    int h = v.shape[0], w = v.shape[1], c = v.shape[2];
    if (h % factor != 0 || w % factor != 0)
        throw std::invalid_argument("avgpool: dims not divisible by factor");
    int oh = h / factor, ow = w / factor;
    Tensor out = Tensor::zeros({oh, ow, c});
    float inv = 1.0f / static_cast<float>(factor * factor);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < c; ++k)
                out[((y / factor) * ow + (x / factor)) * c + k] += inv * v[(y * w + x) * c + k];
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [img, factor, h, w, c, ow, inv, id](Tape& t) {
        const Tensor& g = t.grad(id);
        Tensor& gi = t.grad_mut(img);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int k = 0; k < c; ++k)
                    gi[(y * w + x) * c + k] += inv * g[((y / factor) * ow + (x / factor)) * c + k];
    };
    return id;
}

Tape::VarId Tape::shift_sample(VarId img, float dx, float dy) {
    const Tensor& v = value(img);
    if (v.shape.size() != 3) throw std::invalid_argument("shift_sample: expected (H, W, C)");
    int h = v.shape[0], w = v.shape[1], c = v.shape[2];
    // 4-tap bilinear weights per output pixel; taps outside the frame read 0.
    auto sample = [&](const Tensor& src, Tensor& dst) {
        for (int y = 0; y < h; ++y) {
            float sy = static_cast<float>(y) + dy;
            int y0 = static_cast<int>(std::floor(sy));
            float fy = sy - static_cast<float>(y0);
            for (int x = 0; x < w; ++x) {
                float sx = static_cast<float>(x) + dx;
                int x0 = static_cast<int>(std::floor(sx));
                float fx = sx - static_cast<float>(x0);
                for (int k = 0; k < c; ++k) {
                    float acc = 0.0f;
                    for (int ty = 0; ty < 2; ++ty)
                        for (int tx = 0; tx < 2; ++tx) {
                            int yy = y0 + ty, xx = x0 + tx;
                            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                            float wgt = (ty ? fy : 1.0f - fy) * (tx ? fx : 1.0f - fx);
                            acc += wgt * src[(yy * w + xx) * c + k];
                        }
                    dst[(y * w + x) * c + k] = acc;
                }
            }
        }
    };
    Tensor out = Tensor::zeros(v.shape);
    sample(v, out);
    VarId id = push(std::move(out), nullptr);
    nodes_[static_cast<size_t>(id)].back = [img, dx, dy, h, w, c, id](Tape& t) {
        const Tensor& g = t.grad(id);
        Tensor& gi = t.grad_mut(img);
        for (int y = 0; y < h; ++y) {
            float sy = static_cast<float>(y) + dy;
            int y0 = static_cast<int>(std::floor(sy));
            float fy = sy - static_cast<float>(y0);
            for (int x = 0; x < w; ++x) {
                float sx = static_cast<float>(x) + dx;
                int x0 = static_cast<int>(std::floor(sx));
                float fx = sx - static_cast<float>(x0);
                for (int k = 0; k < c; ++k) {
                    float go = g[(y * w + x) * c + k];
                    if (go == 0.0f) continue;
                    for (int ty = 0; ty < 2; ++ty)
                        for (int tx = 0; tx < 2; ++tx) {
                            int yy = y0 + ty, xx = x0 + tx;
                            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                            float wgt = (ty ? fy : 1.0f - fy) * (tx ? fx : 1.0f - fx);
                            gi[(yy * w + xx) * c + k] += wgt * go;
                        }
                }
            }
        }
    };
    return id;
}

Tape::VarId Tape::over_composite(std::span<const VarId> colors, std::span<const VarId> alphas) {
    if (colors.empty() || colors.size() != alphas.size())
        throw std::invalid_argument("over_composite: plane list mismatch");
    int planes = static_cast<int>(colors.size());
    const Tensor& c0 = value(colors[0]);
    if (c0.shape.size() != 3 || c0.shape[2] != 3)
        throw std::invalid_argument("over_composite: colors must be (H, W, 3)");
    int h = c0.shape[0], w = c0.shape[1];
    int npix = h * w;
    // accumulate far-to-near; keep each partial result for backward
    std::vector<Tensor> partials(static_cast<size_t>(planes) + 1);
    partials[0] = Tensor::zeros({h, w, 3});  // black background
    for (int s = 0; s < planes; ++s) {
        int p = planes - 1 - s;  // plane index, far first
        const Tensor& col = value(colors[static_cast<size_t>(p)]);
        const Tensor& al = value(alphas[static_cast<size_t>(p)]);
        if (al.size() != npix) throw std::invalid_argument("over_composite: alpha shape mismatch");
        Tensor next = Tensor::zeros({h, w, 3});
        const Tensor& prev = partials[static_cast<size_t>(s)];
        for (int i = 0; i < npix; ++i) {
            float a = al[i];
            for (int k = 0; k < 3; ++k)
                next[i * 3 + k] = col[i * 3 + k] * a + prev[i * 3 + k] * (1.0f - a);
        }
        partials[static_cast<size_t>(s) + 1] = std::move(next);
    }
    std::vector<VarId> cs(colors.begin(), colors.end());
    std::vector<VarId> as(alphas.begin(), alphas.end());
    VarId id = push(partials.back(), nullptr);
    nodes_[static_cast<size_t>(id)].back = [cs, as, partials, planes, npix, id](Tape& t) {
        // walk near-to-far, peeling one plane per step
        Tensor gout = t.grad(id);
        for (int s = planes - 1; s >= 0; --s) {
            int p = planes - 1 - s;
            const Tensor& al = t.value(as[static_cast<size_t>(p)]);
            const Tensor& col = t.value(cs[static_cast<size_t>(p)]);
            const Tensor& prev = partials[static_cast<size_t>(s)];
            Tensor& gc = t.grad_mut(cs[static_cast<size_t>(p)]);
            Tensor& ga = t.grad_mut(as[static_cast<size_t>(p)]);
            Tensor gprev = Tensor::zeros(prev.shape);
            for (int i = 0; i < npix; ++i) {
                float a = al[i];
                float gai = 0.0f;
                for (int k = 0; k < 3; ++k) {
                    float g = gout[i * 3 + k];
                    gc[i * 3 + k] += g * a;
                    gai += g * (col[i * 3 + k] - prev[i * 3 + k]);
                    gprev[i * 3 + k] = g * (1.0f - a);
                }
                ga[i] += gai;
            }
            gout = std::move(gprev);
        }
    };
    return id;
}

Tape::VarId Tape::sum(std::span<const VarId> scalars) {
    if (scalars.empty()) throw std::invalid_argument("sum: empty input");
    VarId acc = scalars[0];
    for (size_t i = 1; i < scalars.size(); ++i) acc = add(acc, scalars[i]);
    return acc;
}

}  // namespace laekit
