#include "laekit/latent.hpp"

#include <cmath>
#include <stdexcept>

namespace laekit {

void LatentCode::validate() const {
    if (num_layers() < 3) throw std::invalid_argument("latent code needs at least 3 layers");
    int d = dim();
    for (const Tensor& l : layers) {
        if (l.size() != d) throw std::invalid_argument("latent layers must share one dimension");
        if (!l.all_finite()) throw std::invalid_argument("latent code has non-finite entries");
    }
}

double EditDirection::l2_norm() const {
    double acc = 0.0;
    for (const Tensor& l : layers)
        for (float v : l.data) acc += static_cast<double>(v) * v;
    return std::sqrt(acc);
}

LatentSplit LatentSplit::thirds(int num_layers) {
    LatentSplit s;
    s.coarse_end = num_layers / 3;
    s.middle_end = 2 * num_layers / 3;
    s.validate(num_layers);
    return s;
}

LatentSplit LatentSplit::from_ranges(std::array<int, 2> coarse, std::array<int, 2> middle,
                                     std::array<int, 2> fine, int num_layers) {
    if (coarse[0] != 0 || coarse[1] != middle[0] || middle[1] != fine[0] || fine[1] != num_layers)
        throw std::invalid_argument("latent split ranges do not partition the layer index range");
    LatentSplit s;
    s.coarse_end = coarse[1];
    s.middle_end = middle[1];
    s.validate(num_layers);
    return s;
}

void LatentSplit::validate(int num_layers) const {
    if (!(0 < coarse_end && coarse_end < middle_end && middle_end < num_layers))
        throw std::invalid_argument("latent split must partition layers into three nonempty groups");
}

int LatentSplit::group_of(int layer) const {
    if (layer < coarse_end) return 0;
    if (layer < middle_end) return 1;
    return 2;
}

LatentGroups split_latent(const LatentCode& w, const LatentSplit& split) {
    split.validate(w.num_layers());
    LatentGroups g;
    for (int i = 0; i < w.num_layers(); ++i) {
        const Tensor& l = w.layers[static_cast<size_t>(i)];
        int grp = split.group_of(i);
        (grp == 0 ? g.coarse : grp == 1 ? g.middle : g.fine).push_back(l);
    }
    return g;
}

LatentCode merge_latent(const LatentGroups& groups) {
    LatentCode w;
    for (const auto* part : {&groups.coarse, &groups.middle, &groups.fine})
        for (const Tensor& l : *part) {
            if (!w.layers.empty() && l.size() != w.dim())
                throw std::invalid_argument("merge_latent: group dimension mismatch");
            w.layers.push_back(l);
        }
    return w;
}

LatentCode apply_edit(const LatentCode& w, const EditDirection& delta) {
    if (delta.num_layers() != w.num_layers())
        throw std::invalid_argument("apply_edit: layer count mismatch");
    LatentCode out;
    out.layers.reserve(w.layers.size());
    for (size_t i = 0; i < w.layers.size(); ++i) {
        const Tensor& a = w.layers[i];
        const Tensor& b = delta.layers[i];
        if (a.size() != b.size()) throw std::invalid_argument("apply_edit: layer dim mismatch");
        Tensor sum = a;
        for (int j = 0; j < sum.size(); ++j) sum[j] += b[j];
        if (!sum.all_finite()) throw std::invalid_argument("apply_edit: non-finite result");
        out.layers.push_back(std::move(sum));
    }
    return out;
}

}  // namespace laekit
