#include <algorithm>

#include <opencv2/imgproc.hpp>

#include "stdeep/error.hpp"
#include "stdeep/evalkit.hpp"
#include "stdeep/probes.hpp"

namespace stdeep::probe {

ActivationMap grad_cam(const enc::Encoder& model, const nn::Tensor& clip) {
    const auto& cs = clip.shape();
    if (cs.size() != 4 || cs[0] != 3)
        throw Error(ErrorKind::ShapeMismatch, "expected a [3, T, H, W] clip, got " + nn::shape_string(cs));
    const nn::Var act = model.trunk(nn::constant(clip), nullptr);
    if (act->value.rank() != 4) throw Error(ErrorKind::NoConvBlock, "encoder exposes no convolutional block");
    const nn::Var block = nn::leaf(act->value, true);
    Rng unused(0);
    const auto g = model.head(block, false, unused);
    // frame-wise logits only see their own frame, so one sweep over the sum
    // yields every frame's gradient at once
    nn::backward(nn::sum(g.logits));

    const int C = act->value.dim(0), Tp = act->value.dim(1), H = act->value.dim(2), W = act->value.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const nn::Tensor& a = block->value;
    const nn::Tensor grad = block->grad.empty() ? nn::Tensor(a.shape(), 0.0) : block->grad;

    // weights[c][t]: gradient mean per channel, per frame or over the whole block
    std::vector<double> weights(static_cast<std::size_t>(C) * Tp, 0.0);
    for (int c = 0; c < C; ++c) {
        double total = 0.0;
        for (int t = 0; t < Tp; ++t) {
            const double* gp = grad.data() + (static_cast<std::size_t>(c) * Tp + t) * plane;
            double s = 0.0;
            for (std::size_t k = 0; k < plane; ++k) s += gp[k];
            weights[static_cast<std::size_t>(c) * Tp + t] = s / static_cast<double>(plane);
            total += s;
        }
        if (!model.framewise())
            for (int t = 0; t < Tp; ++t)
                weights[static_cast<std::size_t>(c) * Tp + t] = total / static_cast<double>(plane * Tp);
    }

    std::vector<cv::Mat> coarse;
    double peak = 0.0;
    for (int t = 0; t < Tp; ++t) {
        cv::Mat m(H, W, CV_64F, cv::Scalar(0.0));
        for (int c = 0; c < C; ++c) {
            const double w = weights[static_cast<std::size_t>(c) * Tp + t];
            const double* ap = a.data() + (static_cast<std::size_t>(c) * Tp + t) * plane;
            auto* mp = m.ptr<double>();
            for (std::size_t k = 0; k < plane; ++k) mp[k] += w * ap[k];
        }
        cv::max(m, 0.0, m);
        coarse.push_back(m);
    }

    ActivationMap out;
    out.activation_shape = act->value.shape();
    for (double z : g.logits->value.values()) out.prediction += eval::sigmoid(z);
    out.prediction /= static_cast<double>(g.logits->value.size());
    const int T = cs[1];
    for (int t = 0; t < T; ++t) {
        const int src = std::min(Tp - 1, static_cast<int>(static_cast<long>(t) * Tp / T));
        cv::Mat up;
        cv::resize(coarse[static_cast<std::size_t>(src)], up, cv::Size(cs[3], cs[2]), 0, 0, cv::INTER_LINEAR);
        cv::max(up, 0.0, up);
        double mx = 0.0;
        cv::minMaxLoc(up, nullptr, &mx);
        peak = std::max(peak, mx);
        out.heatmaps.push_back(up);
    }
    if (peak > 0.0)
        for (auto& h : out.heatmaps) h /= peak;
    return out;
}

}  // namespace stdeep::probe
