#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "plgan/tensor.hpp"

namespace plgan::nn {

// Named trainable tensor with an accumulated gradient of the same shape.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param(std::string name_, Tensor value_)
        : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0.0f); }
};

// Reverse-mode tape. Each forward pushes a closure mapping the gradient of the
// loss w.r.t. its output to the gradient w.r.t. its input; closures accumulate
// parameter gradients into Param::grad as a side effect. backward() consumes
// the tape. Multiple tapes may be alive at once (one per network invocation),
// which is how branched computations (shared embedder, several heads) are
// assembled: run each head's tape backward, sum the returned input gradients,
// then run the shared trunk's tape backward with that sum.
class Tape {
public:
    using BackwardFn = std::function<Tensor(const Tensor&)>;

    // When false, backward still propagates input gradients but leaves
    // Param::grad untouched — used to backpropagate through a network whose
    // parameters are not being updated (e.g. through D for the generator's
    // adversarial term).
    bool accumulate_param_grads = true;

    void push(BackwardFn fn) { fns_.push_back(std::move(fn)); }

    // Runs recorded closures in reverse and returns d(loss)/d(tape input).
    Tensor backward(Tensor grad) {
        while (!fns_.empty()) {
            grad = fns_.back()(grad);
            fns_.pop_back();
        }
        return grad;
    }

    std::size_t size() const { return fns_.size(); }

private:
    std::vector<BackwardFn> fns_;
};

// `tape == nullptr` means inference: no context is saved and normalization
// layers use running statistics instead of batch statistics.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, Tape* tape) = 0;
    virtual void collect_params(std::vector<Param*>&) {}
    virtual void collect_buffers(std::vector<Param*>&) {}
};

int conv_out_size(int in, int kernel, int stride, int pad);

class Conv2d : public Layer {
public:
    Conv2d(const std::string& name, int in_ch, int out_ch, int kernel, int stride, int pad);
    Tensor forward(const Tensor& x, Tape* tape) override;
    void collect_params(std::vector<Param*>& out) override;

    Param weight; // {out_ch, in_ch, k, k}
    Param bias;   // {out_ch}

    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }
    int kernel() const { return k_; }

private:
    int in_ch_, out_ch_, k_, stride_, pad_;
};

// PyTorch-convention transposed convolution:
// H_out = (H_in - 1) * stride - 2 * pad + kernel + output_pad.
class ConvTranspose2d : public Layer {
public:
    ConvTranspose2d(const std::string& name, int in_ch, int out_ch, int kernel, int stride,
                    int pad, int output_pad);
    Tensor forward(const Tensor& x, Tape* tape) override;
    void collect_params(std::vector<Param*>& out) override;

    Param weight; // {in_ch, out_ch, k, k}
    Param bias;   // {out_ch}

private:
    int in_ch_, out_ch_, k_, stride_, pad_, output_pad_;
};

class BatchNorm2d : public Layer {
public:
    explicit BatchNorm2d(const std::string& name, int channels, float momentum = 0.1f,
                         float eps = 1e-5f);
    Tensor forward(const Tensor& x, Tape* tape) override;
    void collect_params(std::vector<Param*>& out) override;
    void collect_buffers(std::vector<Param*>& out) override;

    Param gamma, beta;
    Param running_mean, running_var; // buffers, not trained

private:
    int channels_;
    float momentum_, eps_;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, Tape* tape) override;
};

class LeakyReLU : public Layer {
public:
    explicit LeakyReLU(float slope = 0.2f) : slope_(slope) {}
    Tensor forward(const Tensor& x, Tape* tape) override;

private:
    float slope_;
};

class Tanh : public Layer {
public:
    Tensor forward(const Tensor& x, Tape* tape) override;
};

class Sigmoid : public Layer {
public:
    Tensor forward(const Tensor& x, Tape* tape) override;
};

// x + F(x) with F = conv3x3-norm-relu-conv3x3-norm; no activation after the
// addition.
class ResidualBlock : public Layer {
public:
    ResidualBlock(const std::string& name, int channels);
    Tensor forward(const Tensor& x, Tape* tape) override;
    void collect_params(std::vector<Param*>& out) override;
    void collect_buffers(std::vector<Param*>& out) override;

private:
    Conv2d conv1_, conv2_;
    BatchNorm2d bn1_, bn2_;
    ReLU relu_;
};

class Sequential {
public:
    Sequential() = default;
    Sequential(Sequential&& o) noexcept
        : layers_(std::move(o.layers_)), forward_calls_(o.forward_calls_.load()) {}
    Sequential& operator=(Sequential&& o) noexcept {
        layers_ = std::move(o.layers_);
        forward_calls_.store(o.forward_calls_.load());
        return *this;
    }

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& x, Tape* tape = nullptr);

    std::vector<Param*> params();
    std::vector<Param*> buffers();

    // Atomic so read-only inference can run concurrently over images.
    std::int64_t forward_calls() const { return forward_calls_.load(); }
    std::size_t size() const { return layers_.size(); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
    std::atomic<std::int64_t> forward_calls_{0};
};

class Adam {
public:
    Adam(std::vector<Param*> params, double beta1, double beta2, double eps = 1e-8);

    void zero_grad();
    void step(double lr);

    const std::vector<Param*>& params() const { return params_; }
    std::int64_t step_count() const { return t_; }
    void set_step_count(std::int64_t t) { t_ = t; }
    Tensor& first_moment(std::size_t i) { return m_[i]; }
    Tensor& second_moment(std::size_t i) { return v_[i]; }

private:
    std::vector<Param*> params_;
    std::vector<Tensor> m_, v_;
    double beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

} // namespace plgan::nn
