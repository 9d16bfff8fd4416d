#include "stdeep/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "stdeep/error.hpp"

namespace stdeep::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a->value.shape() != b->value.shape()) {
        throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": " + shape_string(a->value.shape()) + " vs " +
                                                  shape_string(b->value.shape()));
    }
}

void require_rank(const Var& a, int rank, const char* op) {
    if (a->value.rank() != rank) {
        throw Error(ErrorKind::ShapeMismatch,
                    std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(a->value.shape()));
    }
}

template <typename Fwd, typename Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
    Tensor out(a->value.shape());
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(a->value[i]);
    return make_node(std::move(out), {a}, [deriv](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(in.value[i], self.value[i]);
    });
}

}  // namespace

int conv_out_size(int in, int kernel, int stride, int pad) {
    if (stride < 1) throw Error(ErrorKind::BadSpec, "stride must be >= 1");
    const int out = (in + 2 * pad - kernel) / stride + 1;
    if (in + 2 * pad < kernel || out < 1) {
        throw Error(ErrorKind::ShapeMismatch, "input extent " + std::to_string(in) + " too small for kernel " +
                                                  std::to_string(kernel));
    }
    return out;
}

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
    return make_node(std::move(out), {a, b}, [](Node& self) {
        for (auto& in : self.inputs) {
            if (!in->requires_grad) continue;
            auto& g = in->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * b->value[i];
    return make_node(std::move(out), {a, b}, [](Node& self) {
        Node& x = *self.inputs[0];
        Node& y = *self.inputs[1];
        if (x.requires_grad) {
            auto& g = x.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y.value[i];
        }
        if (y.requires_grad) {
            auto& g = y.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x.value[i];
        }
    });
}

Var affine(const Var& a, double alpha, double beta) {
    return unary(a, [alpha, beta](double x) { return alpha * x + beta; }, [alpha](double, double) { return alpha; });
}

Var relu(const Var& a) {
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
    return unary(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sum(const Var& a) {
    double s = 0.0;
    for (double v : a->value.values()) s += v;
    return make_node(Tensor({1}, s), {a}, [](Node& self) {
        Node& in = *self.inputs[0];
        auto& g = in.ensure_grad();
        for (double& v : g.values()) v += self.grad[0];
    });
}

Var channel_scale(const Var& x, const Var& s) {
    const int channels = x->value.dim(0);
    if (s->value.size() != static_cast<std::size_t>(channels))
        throw Error(ErrorKind::ShapeMismatch, "channel_scale: scale length");
    const std::size_t inner = x->value.size() / static_cast<std::size_t>(channels);
    Tensor out(x->value.shape());
    for (int c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < inner; ++i) out[c * inner + i] = x->value[c * inner + i] * s->value[c];
    return make_node(std::move(out), {x, s}, [channels, inner](Node& self) {
        Node& in = *self.inputs[0];
        Node& sc = *self.inputs[1];
        if (in.requires_grad) {
            auto& g = in.ensure_grad();
            for (int c = 0; c < channels; ++c)
                for (std::size_t i = 0; i < inner; ++i) g[c * inner + i] += self.grad[c * inner + i] * sc.value[c];
        }
        if (sc.requires_grad) {
            auto& g = sc.ensure_grad();
            for (int c = 0; c < channels; ++c) {
                double acc = 0.0;
                for (std::size_t i = 0; i < inner; ++i) acc += self.grad[c * inner + i] * in.value[c * inner + i];
                g[c] += acc;
            }
        }
    });
}

Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, bool per_frame, double eps) {
    const int channels = x->value.dim(0);
    if (groups < 1 || channels % groups != 0) throw Error(ErrorKind::ShapeMismatch, "group_norm: groups must divide channels");
    if (gamma->value.size() != static_cast<std::size_t>(channels) || beta->value.size() != gamma->value.size())
        throw Error(ErrorKind::ShapeMismatch, "group_norm: affine parameter length");
    const std::size_t inner = x->value.size() / static_cast<std::size_t>(channels);
    // statistics per (group, slice); a slice is one frame when per_frame, else the whole inner extent
    const std::size_t slices = per_frame && x->value.rank() >= 2 ? static_cast<std::size_t>(x->value.dim(1)) : 1;
    const std::size_t chunk = inner / slices;
    const int cpg = channels / groups;
    const std::size_t count = chunk * static_cast<std::size_t>(cpg);
    Tensor xhat(x->value.shape());
    std::vector<double> inv_std(static_cast<std::size_t>(groups) * slices);
    for (int g = 0; g < groups; ++g)
        for (std::size_t s = 0; s < slices; ++s) {
            double mean = 0.0;
            for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
                const double* src = x->value.data() + c * inner + s * chunk;
                for (std::size_t i = 0; i < chunk; ++i) mean += src[i];
            }
            mean /= static_cast<double>(count);
            double var = 0.0;
            for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
                const double* src = x->value.data() + c * inner + s * chunk;
                for (std::size_t i = 0; i < chunk; ++i) var += (src[i] - mean) * (src[i] - mean);
            }
            var /= static_cast<double>(count);
            const double is = 1.0 / std::sqrt(var + eps);
            inv_std[g * slices + s] = is;
            for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
                const double* src = x->value.data() + c * inner + s * chunk;
                double* dst = xhat.data() + c * inner + s * chunk;
                for (std::size_t i = 0; i < chunk; ++i) dst[i] = (src[i] - mean) * is;
            }
        }
    Tensor out(x->value.shape());
    for (int c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < inner; ++i)
            out[c * inner + i] = gamma->value[c] * xhat[c * inner + i] + beta->value[c];
    return make_node(std::move(out), {x, gamma, beta},
                     [xhat = std::move(xhat), inv_std = std::move(inv_std), channels, inner, slices, chunk, cpg,
                      groups](Node& self) {
        Node& in = *self.inputs[0];
        Node& ga = *self.inputs[1];
        Node& be = *self.inputs[2];
        const Tensor& dy = self.grad;
        if (ga.requires_grad || be.requires_grad) {
            auto& gg = ga.ensure_grad();
            auto& gb = be.ensure_grad();
            for (int c = 0; c < channels; ++c) {
                double sg = 0.0, sb = 0.0;
                for (std::size_t i = 0; i < inner; ++i) {
                    sg += dy[c * inner + i] * xhat[c * inner + i];
                    sb += dy[c * inner + i];
                }
                gg[c] += sg;
                gb[c] += sb;
            }
        }
        if (!in.requires_grad) return;
        auto& gx = in.ensure_grad();
        const double n = static_cast<double>(chunk * static_cast<std::size_t>(cpg));
        for (int g = 0; g < groups; ++g)
            for (std::size_t s = 0; s < slices; ++s) {
                // dxhat = dy * gamma; dx = is * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
                double s1 = 0.0, s2 = 0.0;
                for (int c = g * cpg; c < (g + 1) * cpg; ++c)
                    for (std::size_t i = 0; i < chunk; ++i) {
                        const std::size_t k = c * inner + s * chunk + i;
                        const double d = dy[k] * ga.value[c];
                        s1 += d;
                        s2 += d * xhat[k];
                    }
                const double is = inv_std[g * slices + s];
                for (int c = g * cpg; c < (g + 1) * cpg; ++c)
                    for (std::size_t i = 0; i < chunk; ++i) {
                        const std::size_t k = c * inner + s * chunk + i;
                        gx[k] += is * (dy[k] * ga.value[c] - s1 / n - xhat[k] * s2 / n);
                    }
            }
    });
}

namespace {

struct ConvGeometry {
    int channels, t, h, w;
    int kt, kh, kw;
    int st, sh, sw;
    int pt, ph, pw;
    int ot, oh, ow;

    std::size_t rows() const { return static_cast<std::size_t>(channels) * kt * kh * kw; }
    std::size_t cols() const { return static_cast<std::size_t>(ot) * oh * ow; }
    bool pointwise() const {
        return kt == 1 && kh == 1 && kw == 1 && st == 1 && sh == 1 && sw == 1 && pt == 0 && ph == 0 && pw == 0;
    }
};

void vol2col(const ConvGeometry& g, const double* x, double* col) {
    std::size_t row = 0;
    for (int c = 0; c < g.channels; ++c)
        for (int dt = 0; dt < g.kt; ++dt)
            for (int dh = 0; dh < g.kh; ++dh)
                for (int dw = 0; dw < g.kw; ++dw, ++row) {
                    double* dst = col + row * g.cols();
                    for (int ot = 0; ot < g.ot; ++ot) {
                        const int it = ot * g.st - g.pt + dt;
                        for (int oh = 0; oh < g.oh; ++oh) {
                            const int ih = oh * g.sh - g.ph + dh;
                            double* d = dst + (static_cast<std::size_t>(ot) * g.oh + oh) * g.ow;
                            if (it < 0 || it >= g.t || ih < 0 || ih >= g.h) {
                                std::fill(d, d + g.ow, 0.0);
                                continue;
                            }
                            const double* src = x + ((static_cast<std::size_t>(c) * g.t + it) * g.h + ih) * g.w;
                            for (int ow = 0; ow < g.ow; ++ow) {
                                const int iw = ow * g.sw - g.pw + dw;
                                d[ow] = (iw >= 0 && iw < g.w) ? src[iw] : 0.0;
                            }
                        }
                    }
                }
}

void col2vol(const ConvGeometry& g, const double* col, double* dx) {
    std::size_t row = 0;
    for (int c = 0; c < g.channels; ++c)
        for (int dt = 0; dt < g.kt; ++dt)
            for (int dh = 0; dh < g.kh; ++dh)
                for (int dw = 0; dw < g.kw; ++dw, ++row) {
                    const double* srcrow = col + row * g.cols();
                    for (int ot = 0; ot < g.ot; ++ot) {
                        const int it = ot * g.st - g.pt + dt;
                        if (it < 0 || it >= g.t) continue;
                        for (int oh = 0; oh < g.oh; ++oh) {
                            const int ih = oh * g.sh - g.ph + dh;
                            if (ih < 0 || ih >= g.h) continue;
                            const double* s = srcrow + (static_cast<std::size_t>(ot) * g.oh + oh) * g.ow;
                            double* dst = dx + ((static_cast<std::size_t>(c) * g.t + it) * g.h + ih) * g.w;
                            for (int ow = 0; ow < g.ow; ++ow) {
                                const int iw = ow * g.sw - g.pw + dw;
                                if (iw >= 0 && iw < g.w) dst[iw] += s[ow];
                            }
                        }
                    }
                }
}

}  // namespace

Var conv3d(const Var& x, const Var& weight, const Var& bias, Triple stride, Triple pad) {
    require_rank(x, 4, "conv3d input");
    require_rank(weight, 5, "conv3d weight");
    const auto& xs = x->value.shape();
    const auto& ws = weight->value.shape();
    if (ws[1] != xs[0]) {
        throw Error(ErrorKind::ShapeMismatch,
                    "conv3d: input channels " + std::to_string(xs[0]) + " vs weight " + shape_string(ws));
    }
    ConvGeometry g{};
    g.channels = xs[0];
    g.t = xs[1];
    g.h = xs[2];
    g.w = xs[3];
    g.kt = ws[2];
    g.kh = ws[3];
    g.kw = ws[4];
    g.st = stride[0];
    g.sh = stride[1];
    g.sw = stride[2];
    g.pt = pad[0];
    g.ph = pad[1];
    g.pw = pad[2];
    g.ot = conv_out_size(g.t, g.kt, g.st, g.pt);
    g.oh = conv_out_size(g.h, g.kh, g.sh, g.ph);
    g.ow = conv_out_size(g.w, g.kw, g.sw, g.pw);
    const int out_channels = ws[0];
    const auto K = static_cast<Eigen::Index>(g.rows());
    const auto N = static_cast<Eigen::Index>(g.cols());

    std::shared_ptr<std::vector<double>> col;
    const double* col_ptr = x->value.data();
    if (!g.pointwise()) {
        col = std::make_shared<std::vector<double>>(g.rows() * g.cols());
        vol2col(g, x->value.data(), col->data());
        col_ptr = col->data();
    }

    Tensor out({out_channels, g.ot, g.oh, g.ow});
    {
        ConstMatMap W(weight->value.data(), out_channels, K);
        ConstMatMap C(col_ptr, K, N);
        MatMap Y(out.data(), out_channels, N);
        Y.noalias() = W * C;
        if (bias) {
            for (int o = 0; o < out_channels; ++o) Y.row(o).array() += bias->value[o];
        }
    }

    std::vector<Var> inputs{x, weight};
    if (bias) inputs.push_back(bias);
    return make_node(std::move(out), std::move(inputs), [g, col, out_channels, K, N](Node& self) {
        Node& in = *self.inputs[0];
        Node& w = *self.inputs[1];
        ConstMatMap dY(self.grad.data(), out_channels, N);
        if (w.requires_grad) {
            const double* cp = col ? col->data() : in.value.data();
            ConstMatMap C(cp, K, N);
            MatMap dW(w.ensure_grad().data(), out_channels, K);
            dW.noalias() += dY * C.transpose();
        }
        if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
            auto& gb = self.inputs[2]->ensure_grad();
            for (int o = 0; o < out_channels; ++o) gb[o] += dY.row(o).sum();
        }
        if (in.requires_grad) {
            ConstMatMap W(w.value.data(), out_channels, K);
            auto& gx = in.ensure_grad();
            if (g.pointwise()) {
                MatMap dX(gx.data(), K, N);
                dX.noalias() += W.transpose() * dY;
            } else {
                std::vector<double> dcol(static_cast<std::size_t>(K * N));
                MatMap dC(dcol.data(), K, N);
                dC.noalias() = W.transpose() * dY;
                col2vol(g, dcol.data(), gx.data());
            }
        }
    });
}

Var max_pool3d(const Var& x, Triple kernel, Triple stride, Triple pad) {
    require_rank(x, 4, "max_pool3d");
    const auto& s = x->value.shape();
    const int C = s[0], T = s[1], H = s[2], W = s[3];
    const int ot = conv_out_size(T, kernel[0], stride[0], pad[0]);
    const int oh = conv_out_size(H, kernel[1], stride[1], pad[1]);
    const int ow = conv_out_size(W, kernel[2], stride[2], pad[2]);
    Tensor out({C, ot, oh, ow});
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    std::size_t o = 0;
    for (int c = 0; c < C; ++c)
        for (int a = 0; a < ot; ++a)
            for (int b = 0; b < oh; ++b)
                for (int d = 0; d < ow; ++d, ++o) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = 0;
                    for (int dt = 0; dt < kernel[0]; ++dt) {
                        const int t = a * stride[0] - pad[0] + dt;
                        if (t < 0 || t >= T) continue;
                        for (int dh = 0; dh < kernel[1]; ++dh) {
                            const int h = b * stride[1] - pad[1] + dh;
                            if (h < 0 || h >= H) continue;
                            for (int dw = 0; dw < kernel[2]; ++dw) {
                                const int w = d * stride[2] - pad[2] + dw;
                                if (w < 0 || w >= W) continue;
                                const std::size_t idx = ((static_cast<std::size_t>(c) * T + t) * H + h) * W + w;
                                if (x->value[idx] > best) {
                                    best = x->value[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                    }
                    out[o] = best;
                    (*argmax)[o] = best_idx;
                }
    return make_node(std::move(out), {x}, [argmax](Node& self) {
        auto& g = self.inputs[0]->ensure_grad();
        for (std::size_t i = 0; i < argmax->size(); ++i) g[(*argmax)[i]] += self.grad[i];
    });
}

Var global_avg_pool(const Var& x) {
    const int C = x->value.dim(0);
    const std::size_t inner = x->value.size() / static_cast<std::size_t>(C);
    Tensor out({C});
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < inner; ++i) acc += x->value[c * inner + i];
        out[c] = acc / static_cast<double>(inner);
    }
    return make_node(std::move(out), {x}, [C, inner](Node& self) {
        auto& g = self.inputs[0]->ensure_grad();
        for (int c = 0; c < C; ++c) {
            const double v = self.grad[c] / static_cast<double>(inner);
            for (std::size_t i = 0; i < inner; ++i) g[c * inner + i] += v;
        }
    });
}

Var spatial_avg_pool(const Var& x) {
    require_rank(x, 4, "spatial_avg_pool");
    const auto& s = x->value.shape();
    const int C = s[0], T = s[1];
    const std::size_t plane = static_cast<std::size_t>(s[2]) * s[3];
    Tensor out({T, C});
    for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t) {
            const double* p = x->value.data() + (static_cast<std::size_t>(c) * T + t) * plane;
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            out[static_cast<std::size_t>(t) * C + c] = acc / static_cast<double>(plane);
        }
    return make_node(std::move(out), {x}, [C, T, plane](Node& self) {
        auto& g = self.inputs[0]->ensure_grad();
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < T; ++t) {
                const double v = self.grad[static_cast<std::size_t>(t) * C + c] / static_cast<double>(plane);
                double* p = g.data() + (static_cast<std::size_t>(c) * T + t) * plane;
                for (std::size_t i = 0; i < plane; ++i) p[i] += v;
            }
    });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
    require_rank(weight, 2, "linear weight");
    const int out_dim = weight->value.dim(0);
    const int in_dim = weight->value.dim(1);
    if (x->value.size() != static_cast<std::size_t>(in_dim)) {
        throw Error(ErrorKind::ShapeMismatch, "linear: input " + shape_string(x->value.shape()) + " vs weight " +
                                                  shape_string(weight->value.shape()));
    }
    Tensor out({out_dim});
    {
        ConstMatMap W(weight->value.data(), out_dim, in_dim);
        Eigen::Map<const Eigen::VectorXd> v(x->value.data(), in_dim);
        Eigen::Map<Eigen::VectorXd> y(out.data(), out_dim);
        y.noalias() = W * v;
        if (bias) y += Eigen::Map<const Eigen::VectorXd>(bias->value.data(), out_dim);
    }
    std::vector<Var> inputs{x, weight};
    if (bias) inputs.push_back(bias);
    return make_node(std::move(out), std::move(inputs), [out_dim, in_dim](Node& self) {
        Node& in = *self.inputs[0];
        Node& w = *self.inputs[1];
        Eigen::Map<const Eigen::VectorXd> dy(self.grad.data(), out_dim);
        if (w.requires_grad) {
            MatMap dW(w.ensure_grad().data(), out_dim, in_dim);
            dW.noalias() += dy * Eigen::Map<const Eigen::RowVectorXd>(in.value.data(), in_dim);
        }
        if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
            Eigen::Map<Eigen::VectorXd>(self.inputs[2]->ensure_grad().data(), out_dim) += dy;
        }
        if (in.requires_grad) {
            ConstMatMap W(w.value.data(), out_dim, in_dim);
            Eigen::Map<Eigen::VectorXd>(in.ensure_grad().data(), in_dim).noalias() += W.transpose() * dy;
        }
    });
}

Var concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw Error(ErrorKind::ShapeMismatch, "concat of nothing");
    Shape shape = parts.front()->value.shape();
    int lead = 0;
    for (const auto& p : parts) {
        Shape ps = p->value.shape();
        if (ps.size() != shape.size() || !std::equal(ps.begin() + 1, ps.end(), shape.begin() + 1))
            throw Error(ErrorKind::ShapeMismatch, "concat: trailing shapes differ");
        lead += ps[0];
    }
    shape[0] = lead;
    Tensor out(shape);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        std::copy(p->value.data(), p->value.data() + p->value.size(), out.data() + offset);
        offset += p->value.size();
    }
    return make_node(std::move(out), parts, [](Node& self) {
        std::size_t off = 0;
        for (auto& in : self.inputs) {
            const std::size_t n = in->value.size();
            if (in->requires_grad) {
                auto& g = in->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
            }
            off += n;
        }
    });
}

Var slice(const Var& x, int start, int length) {
    const int lead = x->value.dim(0);
    if (start < 0 || length < 0 || start + length > lead) throw Error(ErrorKind::ShapeMismatch, "slice out of range");
    Shape shape = x->value.shape();
    shape[0] = length;
    const std::size_t inner = x->value.size() / static_cast<std::size_t>(lead);
    const std::size_t begin = static_cast<std::size_t>(start) * inner;
    Tensor out(shape);
    std::copy(x->value.data() + begin, x->value.data() + begin + out.size(), out.data());
    return make_node(std::move(out), {x}, [begin](Node& self) {
        auto& g = self.inputs[0]->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin + i] += self.grad[i];
    });
}

Var mean(const std::vector<Var>& parts) {
    if (parts.empty()) throw Error(ErrorKind::ShapeMismatch, "mean of nothing");
    Tensor out(parts.front()->value.shape());
    for (const auto& p : parts) {
        if (p->value.shape() != out.shape()) throw Error(ErrorKind::ShapeMismatch, "mean: shapes differ");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += p->value[i];
    }
    const double inv = 1.0 / static_cast<double>(parts.size());
    for (double& v : out.values()) v *= inv;
    return make_node(std::move(out), parts, [inv](Node& self) {
        for (auto& in : self.inputs) {
            if (!in->requires_grad) continue;
            auto& g = in->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * inv;
        }
    });
}

Var frame_at(const Var& clip, int t) {
    require_rank(clip, 4, "frame_at");
    const auto& s = clip->value.shape();
    const int C = s[0], T = s[1], H = s[2], W = s[3];
    if (t < 0 || t >= T) throw Error(ErrorKind::ShapeMismatch, "frame index out of range");
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    Tensor out({C, 1, H, W});
    for (int c = 0; c < C; ++c)
        std::copy_n(clip->value.data() + (static_cast<std::size_t>(c) * T + t) * plane, plane, out.data() + c * plane);
    return make_node(std::move(out), {clip}, [C, T, t, plane](Node& self) {
        auto& g = self.inputs[0]->ensure_grad();
        for (int c = 0; c < C; ++c)
            for (std::size_t i = 0; i < plane; ++i) g[(static_cast<std::size_t>(c) * T + t) * plane + i] += self.grad[c * plane + i];
    });
}

Var dropout(const Var& x, double p, Rng& rng) {
    if (p <= 0.0) return x;
    if (p >= 1.0) throw Error(ErrorKind::BadSpec, "dropout probability must be < 1");
    std::bernoulli_distribution keep(1.0 - p);
    const double scale = 1.0 / (1.0 - p);
    auto mask = std::make_shared<std::vector<double>>(x->value.size());
    Tensor out(x->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        (*mask)[i] = keep(rng) ? scale : 0.0;
        out[i] = x->value[i] * (*mask)[i];
    }
    return make_node(std::move(out), {x}, [mask](Node& self) {
        auto& g = self.inputs[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (*mask)[i];
    });
}

Var bce_with_logits(const Var& logit, double label) {
    if (logit->value.size() != 1) throw Error(ErrorKind::ShapeMismatch, "bce_with_logits expects one logit");
    const double z = logit->value[0];
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double pc = std::clamp(p, 1e-7, 1.0 - 1e-7);
    const double loss = -(label * std::log(pc) + (1.0 - label) * std::log(1.0 - pc));
    return make_node(Tensor({1}, loss), {logit}, [p, label](Node& self) {
        self.inputs[0]->ensure_grad()[0] += self.grad[0] * (p - label);
    });
}

}  // namespace stdeep::nn
