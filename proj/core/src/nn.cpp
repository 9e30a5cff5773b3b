#include "plgan/nn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "plgan/errors.hpp"
#include "plgan/gemm.hpp"

namespace plgan::nn {

namespace {

// im2col/col2im buffers are capped at this many floats; convolutions process
// output rows in chunks so 512x512 inference stays within a fixed budget.
constexpr std::int64_t kMaxColFloats = std::int64_t(8) << 20;

int chunk_rows_for(int K, int w_out, int rows) {
    const std::int64_t per_row = static_cast<std::int64_t>(K) * w_out;
    const std::int64_t cap =
        std::max<std::int64_t>(1, kMaxColFloats / std::max<std::int64_t>(1, per_row));
    return static_cast<int>(std::min<std::int64_t>(rows, cap));
}

// Gathers patches of x ({C,H,W}) for the conv output-row range [r0, r1) into
// col ({C*k*k, (r1-r0)*w_out}); out-of-image taps read as zero.
void im2col_rows(const float* x, int C, int H, int W, int k, int stride, int pad, int w_out,
                 int r0, int r1, float* col) {
    const int L = (r1 - r0) * w_out;
    for (int c = 0; c < C; ++c)
        for (int di = 0; di < k; ++di)
            for (int dj = 0; dj < k; ++dj) {
                float* dst = col + (static_cast<std::size_t>(c) * k * k + di * k + dj) *
                                       static_cast<std::size_t>(L);
                for (int oi = r0; oi < r1; ++oi) {
                    const int si = oi * stride - pad + di;
                    if (si < 0 || si >= H) {
                        std::fill(dst, dst + w_out, 0.0f);
                        dst += w_out;
                        continue;
                    }
                    const float* src = x + (static_cast<std::size_t>(c) * H + si) * W;
                    for (int oj = 0; oj < w_out; ++oj) {
                        const int sj = oj * stride - pad + dj;
                        *dst++ = (sj >= 0 && sj < W) ? src[sj] : 0.0f;
                    }
                }
            }
}

// Scatter-adds col back into x ({C,H,W}); the exact adjoint of im2col_rows.
void col2im_rows_add(const float* col, int C, int H, int W, int k, int stride, int pad,
                     int w_out, int r0, int r1, float* x) {
    const int L = (r1 - r0) * w_out;
    for (int c = 0; c < C; ++c)
        for (int di = 0; di < k; ++di)
            for (int dj = 0; dj < k; ++dj) {
                const float* src = col + (static_cast<std::size_t>(c) * k * k + di * k + dj) *
                                             static_cast<std::size_t>(L);
                for (int oi = r0; oi < r1; ++oi) {
                    const int si = oi * stride - pad + di;
                    if (si < 0 || si >= H) {
                        src += w_out;
                        continue;
                    }
                    float* dst = x + (static_cast<std::size_t>(c) * H + si) * W;
                    for (int oj = 0; oj < w_out; ++oj) {
                        const int sj = oj * stride - pad + dj;
                        if (sj >= 0 && sj < W) dst[sj] += *src;
                        ++src;
                    }
                }
            }
}

void require_nchw(const Tensor& x, int channels, const char* who) {
    if (x.ndim() != 4)
        throw ShapeError(std::string(who) + ": expected {N,C,H,W}, got " + x.shape_str());
    if (x.dim(1) != channels)
        throw ShapeError(std::string(who) + ": expected " + std::to_string(channels) +
                         " channels, got " + x.shape_str());
}

} // namespace

int conv_out_size(int in, int kernel, int stride, int pad) {
    const int out = (in + 2 * pad - kernel) / stride + 1;
    if (out < 1)
        throw ShapeError("conv output size would be " + std::to_string(out) + " for input " +
                         std::to_string(in));
    return out;
}

Conv2d::Conv2d(const std::string& name, int in_ch, int out_ch, int kernel, int stride, int pad)
    : weight(name + ".w", Tensor({out_ch, in_ch, kernel, kernel})),
      bias(name + ".b", Tensor({out_ch})),
      in_ch_(in_ch),
      out_ch_(out_ch),
      k_(kernel),
      stride_(stride),
      pad_(pad) {}

void Conv2d::collect_params(std::vector<Param*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

Tensor Conv2d::forward(const Tensor& x, Tape* tape) {
    require_nchw(x, in_ch_, "Conv2d");
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int h_out = conv_out_size(H, k_, stride_, pad_);
    const int w_out = conv_out_size(W, k_, stride_, pad_);
    const int K = in_ch_ * k_ * k_;
    const std::int64_t hw_out = static_cast<std::int64_t>(h_out) * w_out;

    Tensor y({N, out_ch_, h_out, w_out});
    const int chunk = chunk_rows_for(K, w_out, h_out);
    std::vector<float> col(static_cast<std::size_t>(K) * chunk * w_out);
    for (int n = 0; n < N; ++n) {
        const float* xn = x.data() + static_cast<std::size_t>(n) * in_ch_ * H * W;
        float* yn = y.data() + static_cast<std::size_t>(n) * out_ch_ * hw_out;
        for (int r0 = 0; r0 < h_out; r0 += chunk) {
            const int r1 = std::min(h_out, r0 + chunk);
            const int L = (r1 - r0) * w_out;
            im2col_rows(xn, in_ch_, H, W, k_, stride_, pad_, w_out, r0, r1, col.data());
            gemm(false, false, out_ch_, L, K, 1.0f, weight.value.data(), K, col.data(), L, 0.0f,
                 yn + static_cast<std::int64_t>(r0) * w_out, static_cast<int>(hw_out));
        }
        for (int oc = 0; oc < out_ch_; ++oc) {
            float* row = yn + oc * hw_out;
            const float b = bias.value[oc];
            for (std::int64_t i = 0; i < hw_out; ++i) row[i] += b;
        }
    }

    if (tape) {
        Tensor saved_x = x;
        tape->push([this, tape, saved_x, N, H, W, h_out, w_out, K, hw_out](const Tensor& dy) {
            const bool accum = tape->accumulate_param_grads;
            Tensor dx(saved_x.shape());
            const int chunk_b = chunk_rows_for(K, w_out, h_out);
            std::vector<float> col_b;
            if (accum) col_b.resize(static_cast<std::size_t>(K) * chunk_b * w_out);
            std::vector<float> dcol(static_cast<std::size_t>(K) * chunk_b * w_out);
            for (int n = 0; n < N; ++n) {
                const float* xn = saved_x.data() + static_cast<std::size_t>(n) * in_ch_ * H * W;
                const float* dyn = dy.data() + static_cast<std::size_t>(n) * out_ch_ * hw_out;
                float* dxn = dx.data() + static_cast<std::size_t>(n) * in_ch_ * H * W;
                if (accum)
                    for (int oc = 0; oc < out_ch_; ++oc) {
                        const float* row = dyn + oc * hw_out;
                        double s = 0.0;
                        for (std::int64_t i = 0; i < hw_out; ++i) s += row[i];
                        bias.grad[oc] += static_cast<float>(s);
                    }
                for (int r0 = 0; r0 < h_out; r0 += chunk_b) {
                    const int r1 = std::min(h_out, r0 + chunk_b);
                    const int L = (r1 - r0) * w_out;
                    if (accum) {
                        im2col_rows(xn, in_ch_, H, W, k_, stride_, pad_, w_out, r0, r1,
                                    col_b.data());
                        gemm(false, true, out_ch_, K, L, 1.0f,
                             dyn + static_cast<std::int64_t>(r0) * w_out,
                             static_cast<int>(hw_out), col_b.data(), L, 1.0f,
                             weight.grad.data(), K);
                    }
                    gemm(true, false, K, L, out_ch_, 1.0f, weight.value.data(), K,
                         dyn + static_cast<std::int64_t>(r0) * w_out, static_cast<int>(hw_out),
                         0.0f, dcol.data(), L);
                    col2im_rows_add(dcol.data(), in_ch_, H, W, k_, stride_, pad_, w_out, r0, r1,
                                    dxn);
                }
            }
            return dx;
        });
    }
    return y;
}

ConvTranspose2d::ConvTranspose2d(const std::string& name, int in_ch, int out_ch, int kernel,
                                 int stride, int pad, int output_pad)
    : weight(name + ".w", Tensor({in_ch, out_ch, kernel, kernel})),
      bias(name + ".b", Tensor({out_ch})),
      in_ch_(in_ch),
      out_ch_(out_ch),
      k_(kernel),
      stride_(stride),
      pad_(pad),
      output_pad_(output_pad) {
    if (output_pad < 0 || output_pad >= stride)
        throw ConfigError("ConvTranspose2d: output_pad must be in [0, stride)");
}

void ConvTranspose2d::collect_params(std::vector<Param*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

Tensor ConvTranspose2d::forward(const Tensor& x, Tape* tape) {
    require_nchw(x, in_ch_, "ConvTranspose2d");
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int h_out = (H - 1) * stride_ - 2 * pad_ + k_ + output_pad_;
    const int w_out = (W - 1) * stride_ - 2 * pad_ + k_ + output_pad_;
    if (h_out < 1 || w_out < 1) throw ShapeError("ConvTranspose2d: output would be empty");
    const int K = out_ch_ * k_ * k_;
    const std::int64_t hw_in = static_cast<std::int64_t>(H) * W;
    const std::int64_t hw_out = static_cast<std::int64_t>(h_out) * w_out;

    Tensor y({N, out_ch_, h_out, w_out});
    const int chunk = chunk_rows_for(K, W, H);
    std::vector<float> col(static_cast<std::size_t>(K) * chunk * W);
    for (int n = 0; n < N; ++n) {
        const float* xn = x.data() + static_cast<std::size_t>(n) * in_ch_ * hw_in;
        float* yn = y.data() + static_cast<std::size_t>(n) * out_ch_ * hw_out;
        for (int r0 = 0; r0 < H; r0 += chunk) {
            const int r1 = std::min(H, r0 + chunk);
            const int L = (r1 - r0) * W;
            gemm(true, false, K, L, in_ch_, 1.0f, weight.value.data(), K,
                 xn + static_cast<std::int64_t>(r0) * W, static_cast<int>(hw_in), 0.0f,
                 col.data(), L);
            col2im_rows_add(col.data(), out_ch_, h_out, w_out, k_, stride_, pad_, W, r0, r1, yn);
        }
        for (int oc = 0; oc < out_ch_; ++oc) {
            float* row = yn + oc * hw_out;
            const float b = bias.value[oc];
            for (std::int64_t i = 0; i < hw_out; ++i) row[i] += b;
        }
    }

    if (tape) {
        Tensor saved_x = x;
        tape->push([this, tape, saved_x, N, H, W, h_out, w_out, K, hw_in,
                    hw_out](const Tensor& dy) {
            const bool accum = tape->accumulate_param_grads;
            Tensor dx(saved_x.shape());
            const int chunk_b = chunk_rows_for(K, W, H);
            std::vector<float> dcol(static_cast<std::size_t>(K) * chunk_b * W);
            for (int n = 0; n < N; ++n) {
                const float* xn = saved_x.data() + static_cast<std::size_t>(n) * in_ch_ * hw_in;
                const float* dyn = dy.data() + static_cast<std::size_t>(n) * out_ch_ * hw_out;
                float* dxn = dx.data() + static_cast<std::size_t>(n) * in_ch_ * hw_in;
                if (accum)
                    for (int oc = 0; oc < out_ch_; ++oc) {
                        const float* row = dyn + oc * hw_out;
                        double s = 0.0;
                        for (std::int64_t i = 0; i < hw_out; ++i) s += row[i];
                        bias.grad[oc] += static_cast<float>(s);
                    }
                for (int r0 = 0; r0 < H; r0 += chunk_b) {
                    const int r1 = std::min(H, r0 + chunk_b);
                    const int L = (r1 - r0) * W;
                    im2col_rows(dyn, out_ch_, h_out, w_out, k_, stride_, pad_, W, r0, r1,
                                dcol.data());
                    if (accum)
                        gemm(false, true, in_ch_, K, L, 1.0f,
                             xn + static_cast<std::int64_t>(r0) * W, static_cast<int>(hw_in),
                             dcol.data(), L, 1.0f, weight.grad.data(), K);
                    gemm(false, false, in_ch_, L, K, 1.0f, weight.value.data(), K, dcol.data(),
                         L, 0.0f, dxn + static_cast<std::int64_t>(r0) * W,
                         static_cast<int>(hw_in));
                }
            }
            return dx;
        });
    }
    return y;
}

BatchNorm2d::BatchNorm2d(const std::string& name, int channels, float momentum, float eps)
    : gamma(name + ".gamma", Tensor({channels}, 1.0f)),
      beta(name + ".beta", Tensor({channels})),
      running_mean(name + ".rmean", Tensor({channels})),
      running_var(name + ".rvar", Tensor({channels}, 1.0f)),
      channels_(channels),
      momentum_(momentum),
      eps_(eps) {}

void BatchNorm2d::collect_params(std::vector<Param*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

void BatchNorm2d::collect_buffers(std::vector<Param*>& out) {
    out.push_back(&running_mean);
    out.push_back(&running_var);
}

Tensor BatchNorm2d::forward(const Tensor& x, Tape* tape) {
    require_nchw(x, channels_, "BatchNorm2d");
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    const std::int64_t count = static_cast<std::int64_t>(N) * hw;
    Tensor y(x.shape());

    if (!tape) {
        for (int c = 0; c < channels_; ++c) {
            const float inv = 1.0f / std::sqrt(running_var.value[c] + eps_);
            const float g = gamma.value[c], b = beta.value[c], mu = running_mean.value[c];
            for (int n = 0; n < N; ++n) {
                const float* src = x.data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
                float* dst = y.data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
                for (std::int64_t i = 0; i < hw; ++i) dst[i] = g * (src[i] - mu) * inv + b;
            }
        }
        return y;
    }

    auto xhat = std::make_shared<Tensor>(x.shape());
    auto inv_std = std::make_shared<std::vector<float>>(static_cast<std::size_t>(channels_));
    for (int c = 0; c < channels_; ++c) {
        double sum = 0.0, sum_sq = 0.0;
        for (int n = 0; n < N; ++n) {
            const float* src = x.data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
            for (std::int64_t i = 0; i < hw; ++i) {
                sum += src[i];
                sum_sq += static_cast<double>(src[i]) * src[i];
            }
        }
        const double mean = sum / static_cast<double>(count);
        const double var = std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean);
        const double inv = 1.0 / std::sqrt(var + eps_);
        (*inv_std)[static_cast<std::size_t>(c)] = static_cast<float>(inv);

        const double unbiased = count > 1 ? var * static_cast<double>(count) / (count - 1) : var;
        running_mean.value[c] = static_cast<float>((1.0 - momentum_) * running_mean.value[c] +
                                                   momentum_ * mean);
        running_var.value[c] = static_cast<float>((1.0 - momentum_) * running_var.value[c] +
                                                  momentum_ * unbiased);

        const float g = gamma.value[c], b = beta.value[c];
        for (int n = 0; n < N; ++n) {
            const float* src = x.data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
            float* xh = xhat->data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
            float* dst = y.data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
            for (std::int64_t i = 0; i < hw; ++i) {
                xh[i] = static_cast<float>((src[i] - mean) * inv);
                dst[i] = g * xh[i] + b;
            }
        }
    }

    tape->push([this, tape, xhat, inv_std, N, hw, count](const Tensor& dy) {
        Tensor dx(xhat->shape());
        for (int c = 0; c < channels_; ++c) {
            double sum_dy = 0.0, sum_dy_xh = 0.0;
            for (int n = 0; n < N; ++n) {
                const float* dyp = dy.data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
                const float* xh = xhat->data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
                for (std::int64_t i = 0; i < hw; ++i) {
                    sum_dy += dyp[i];
                    sum_dy_xh += static_cast<double>(dyp[i]) * xh[i];
                }
            }
            if (tape->accumulate_param_grads) {
                beta.grad[c] += static_cast<float>(sum_dy);
                gamma.grad[c] += static_cast<float>(sum_dy_xh);
            }

            const double mean_dy = sum_dy / static_cast<double>(count);
            const double mean_dy_xh = sum_dy_xh / static_cast<double>(count);
            const double scale = static_cast<double>(gamma.value[c]) *
                                 (*inv_std)[static_cast<std::size_t>(c)];
            for (int n = 0; n < N; ++n) {
                const float* dyp = dy.data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
                const float* xh = xhat->data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
                float* dxp = dx.data() + (static_cast<std::size_t>(n) * channels_ + c) * hw;
                for (std::int64_t i = 0; i < hw; ++i)
                    dxp[i] = static_cast<float>(scale * (dyp[i] - mean_dy - xh[i] * mean_dy_xh));
            }
        }
        return dx;
    });
    return y;
}

Tensor ReLU::forward(const Tensor& x, Tape* tape) {
    Tensor y(x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
    if (tape) {
        Tensor saved_x = x;
        tape->push([saved_x](const Tensor& dy) {
            Tensor dx(saved_x.shape());
            for (std::int64_t i = 0; i < dx.numel(); ++i)
                dx[i] = saved_x[i] > 0.0f ? dy[i] : 0.0f;
            return dx;
        });
    }
    return y;
}

Tensor LeakyReLU::forward(const Tensor& x, Tape* tape) {
    Tensor y(x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > 0.0f ? x[i] : slope_ * x[i];
    if (tape) {
        Tensor saved_x = x;
        const float slope = slope_;
        tape->push([saved_x, slope](const Tensor& dy) {
            Tensor dx(saved_x.shape());
            for (std::int64_t i = 0; i < dx.numel(); ++i)
                dx[i] = saved_x[i] > 0.0f ? dy[i] : slope * dy[i];
            return dx;
        });
    }
    return y;
}

Tensor Tanh::forward(const Tensor& x, Tape* tape) {
    Tensor y(x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = std::tanh(x[i]);
    if (tape) {
        Tensor saved_y = y;
        tape->push([saved_y](const Tensor& dy) {
            Tensor dx(saved_y.shape());
            for (std::int64_t i = 0; i < dx.numel(); ++i)
                dx[i] = dy[i] * (1.0f - saved_y[i] * saved_y[i]);
            return dx;
        });
    }
    return y;
}

Tensor Sigmoid::forward(const Tensor& x, Tape* tape) {
    Tensor y(x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = 1.0f / (1.0f + std::exp(-x[i]));
    if (tape) {
        Tensor saved_y = y;
        tape->push([saved_y](const Tensor& dy) {
            Tensor dx(saved_y.shape());
            for (std::int64_t i = 0; i < dx.numel(); ++i)
                dx[i] = dy[i] * saved_y[i] * (1.0f - saved_y[i]);
            return dx;
        });
    }
    return y;
}

ResidualBlock::ResidualBlock(const std::string& name, int channels)
    : conv1_(name + ".conv1", channels, channels, 3, 1, 1),
      conv2_(name + ".conv2", channels, channels, 3, 1, 1),
      bn1_(name + ".bn1", channels),
      bn2_(name + ".bn2", channels) {}

void ResidualBlock::collect_params(std::vector<Param*>& out) {
    conv1_.collect_params(out);
    bn1_.collect_params(out);
    conv2_.collect_params(out);
    bn2_.collect_params(out);
}

void ResidualBlock::collect_buffers(std::vector<Param*>& out) {
    bn1_.collect_buffers(out);
    bn2_.collect_buffers(out);
}

Tensor ResidualBlock::forward(const Tensor& x, Tape* tape) {
    std::shared_ptr<Tensor> skip_grad;
    if (tape) {
        skip_grad = std::make_shared<Tensor>();
        // Runs after the inner chain's backward: add the gradient that flowed
        // directly through the skip connection.
        tape->push([skip_grad](const Tensor& g) {
            Tensor out = g;
            for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += (*skip_grad)[i];
            return out;
        });
    }
    Tensor y = bn1_.forward(conv1_.forward(x, tape), tape);
    y = relu_.forward(y, tape);
    y = bn2_.forward(conv2_.forward(y, tape), tape);
    if (tape) {
        // Runs first in backward: capture d(loss)/d(output) for the skip path
        // and pass it unchanged into the inner chain.
        tape->push([skip_grad](const Tensor& g) {
            *skip_grad = g;
            return g;
        });
    }
    require_same_shape(x, y, "ResidualBlock");
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] += x[i];
    return y;
}

Tensor Sequential::forward(const Tensor& x, Tape* tape) {
    ++forward_calls_;
    Tensor y = x;
    for (auto& layer : layers_) y = layer->forward(y, tape);
    return y;
}

std::vector<Param*> Sequential::params() {
    std::vector<Param*> out;
    for (auto& layer : layers_) layer->collect_params(out);
    return out;
}

std::vector<Param*> Sequential::buffers() {
    std::vector<Param*> out;
    for (auto& layer : layers_) layer->collect_buffers(out);
    return out;
}

Adam::Adam(std::vector<Param*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Param* p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void Adam::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

void Adam::step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param& p = *params_[i];
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::int64_t j = 0; j < p.value.numel(); ++j) {
            const double g = p.grad[j];
            const double mj = beta1_ * m[j] + (1.0 - beta1_) * g;
            const double vj = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            m[j] = static_cast<float>(mj);
            v[j] = static_cast<float>(vj);
            p.value[j] = static_cast<float>(p.value[j] -
                                            lr * (mj / bc1) / (std::sqrt(vj / bc2) + eps_));
        }
    }
}

} // namespace plgan::nn
