#include <cmath>
#include <functional>
#include <vector>

#include <doctest.h>

#include "plgan/nn.hpp"
#include "plgan/rng.hpp"

#include "helpers.hpp"

using namespace plgan;
using namespace plgan::nn;
using plgan::testing::random_tensor;

namespace {

void randomize(Param& p, Rng& rng, double stddev = 0.2) {
    const bool is_gamma = p.name.find("gamma") != std::string::npos;
    for (std::int64_t i = 0; i < p.value.numel(); ++i)
        p.value[i] = static_cast<float>(is_gamma ? 1.0 + rng.normal(0, 0.1)
                                                 : rng.normal(0, stddev));
}

double dot(const Tensor& a, const Tensor& b) {
    double s = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) s += double(a[i]) * b[i];
    return s;
}

// Finite-difference gradcheck of loss = dot(layer(x), r) w.r.t. x and params.
// FD re-runs the train-mode forward (discarded tape) so both sides evaluate
// the same function; running-statistic drift does not affect outputs. Inputs
// are kept away from 0 so rectifier kinks cannot straddle the FD step; param
// checks are skippable for blocks with interior kinks (covered analytically).
void gradcheck_layer(Layer& layer, const std::vector<int>& in_shape, Rng& rng,
                     double h = 1e-2, double tol = 1e-2, bool check_params = true) {
    Tensor x = random_tensor(in_shape, rng);
    for (std::int64_t i = 0; i < x.numel(); ++i)
        if (std::abs(x[i]) < 3 * h) x[i] += x[i] >= 0 ? float(3 * h) : -float(3 * h);
    Tape tape;
    Tensor y = layer.forward(x, &tape);
    Tensor r = random_tensor(y.shape(), rng);

    std::vector<Param*> params;
    layer.collect_params(params);
    for (Param* p : params) p->zero_grad();
    Tensor dx = tape.backward(r);

    auto loss_at = [&]() {
        Tape dummy;
        return dot(layer.forward(x, &dummy), r);
    };

    for (int k = 0; k < 8; ++k) {
        const int idx = rng.uniform_int(0, static_cast<int>(x.numel()) - 1);
        const float keep = x[idx];
        x[idx] = keep + static_cast<float>(h);
        const double up = loss_at();
        x[idx] = keep - static_cast<float>(h);
        const double down = loss_at();
        x[idx] = keep;
        const double fd = (up - down) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(double(dx[idx])), 1e-6});
        REQUIRE(std::abs(fd - dx[idx]) / denom < tol);
    }
    if (!check_params) return;
    for (Param* p : params) {
        // A conv bias feeding a normalization layer has exactly zero gradient;
        // finite differences confirm the zero, so keep those indices too.
        for (int k = 0; k < 4; ++k) {
            const int idx = rng.uniform_int(0, static_cast<int>(p->value.numel()) - 1);
            const float keep = p->value[idx];
            p->value[idx] = keep + static_cast<float>(h);
            const double up = loss_at();
            p->value[idx] = keep - static_cast<float>(h);
            const double down = loss_at();
            p->value[idx] = keep;
            const double fd = (up - down) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(double(p->grad[idx])), 1e-4});
            REQUIRE(std::abs(fd - p->grad[idx]) / denom < tol);
        }
    }
}

} // namespace

TEST_SUITE_BEGIN("nn");

TEST_CASE("conv_out_size follows the floor formula") {
    CHECK(conv_out_size(8, 3, 1, 1) == 8);
    CHECK(conv_out_size(8, 3, 2, 1) == 4);
    CHECK(conv_out_size(9, 7, 1, 3) == 9);
    CHECK(conv_out_size(70, 4, 2, 1) == 35);
}

TEST_CASE("conv gradients match finite differences") {
    Rng rng(101);
    Conv2d same("c", 3, 4, 3, 1, 1);
    randomize(same.weight, rng);
    randomize(same.bias, rng);
    gradcheck_layer(same, {2, 3, 6, 6}, rng);

    Conv2d strided("c", 3, 4, 4, 2, 1);
    randomize(strided.weight, rng);
    randomize(strided.bias, rng);
    gradcheck_layer(strided, {2, 3, 8, 8}, rng);

    Conv2d wide("c", 2, 3, 7, 1, 3);
    randomize(wide.weight, rng);
    randomize(wide.bias, rng);
    gradcheck_layer(wide, {1, 2, 9, 9}, rng);
}

TEST_CASE("transposed conv gradients match finite differences and shape rule") {
    Rng rng(103);
    ConvTranspose2d up("t", 4, 3, 3, 2, 1, 1);
    randomize(up.weight, rng);
    randomize(up.bias, rng);
    Tensor x = random_tensor({1, 4, 5, 5}, rng);
    Tape tape;
    Tensor y = up.forward(x, &tape);
    CHECK(y.shape() == std::vector<int>{1, 3, 10, 10}); // (5-1)*2 - 2 + 3 + 1
    gradcheck_layer(up, {1, 4, 5, 5}, rng);
}

TEST_CASE("batchnorm gradients match finite differences in train mode") {
    Rng rng(107);
    BatchNorm2d bn("b", 3);
    randomize(bn.gamma, rng);
    randomize(bn.beta, rng);
    gradcheck_layer(bn, {2, 3, 5, 5}, rng);
}

TEST_CASE("batchnorm updates running statistics in train mode only") {
    BatchNorm2d bn("b", 1);
    Tensor x = Tensor::from_values({1, 1, 1, 4}, {1, 2, 3, 4}); // mean 2.5, var 1.25
    const float mean0 = bn.running_mean.value[0];
    const float var0 = bn.running_var.value[0];

    Tensor y_eval = bn.forward(x, nullptr);
    CHECK(bn.running_mean.value[0] == mean0);
    CHECK(bn.running_var.value[0] == var0);

    Tape tape;
    Tensor y_train = bn.forward(x, &tape);
    CHECK(bn.running_mean.value[0] == doctest::Approx(0.9f * mean0 + 0.1f * 2.5f).epsilon(1e-5));
    // Batch statistics normalize the batch to zero mean.
    double mean_out = (y_train[0] + y_train[1] + y_train[2] + y_train[3]) / 4.0;
    CHECK(std::abs(mean_out) < 1e-5);
}

TEST_CASE("activation gradients match finite differences") {
    Rng rng(109);
    ReLU relu;
    gradcheck_layer(relu, {2, 3, 4, 4}, rng);
    LeakyReLU leaky(0.2f);
    gradcheck_layer(leaky, {2, 3, 4, 4}, rng);
    Tanh tanh_l;
    gradcheck_layer(tanh_l, {1, 2, 5, 5}, rng, 1e-3, 1e-2);
    Sigmoid sig;
    gradcheck_layer(sig, {1, 2, 5, 5}, rng, 1e-3, 1e-2);
}

TEST_CASE("residual block equals the unfused layer chain bitwise") {
    Rng rng(113);
    ResidualBlock block("r", 3);
    std::vector<Param*> bp;
    block.collect_params(bp);
    for (Param* p : bp) randomize(*p, rng);

    Conv2d c1("c1", 3, 3, 3, 1, 1), c2("c2", 3, 3, 3, 1, 1);
    BatchNorm2d b1("b1", 3), b2("b2", 3);
    ReLU relu;
    std::vector<Param*> cp;
    c1.collect_params(cp);
    b1.collect_params(cp);
    c2.collect_params(cp);
    b2.collect_params(cp);
    REQUIRE(cp.size() == bp.size());
    for (std::size_t i = 0; i < bp.size(); ++i) cp[i]->value = bp[i]->value;

    Tensor x = random_tensor({2, 3, 6, 6}, rng);
    Tape t1;
    Tensor y1 = block.forward(x, &t1);
    Tensor r = random_tensor(y1.shape(), rng);
    for (Param* p : bp) p->zero_grad();
    Tensor dx1 = t1.backward(r);

    Tape t2;
    Tensor y2 = b2.forward(c2.forward(relu.forward(b1.forward(c1.forward(x, &t2), &t2), &t2), &t2), &t2);
    for (std::int64_t i = 0; i < y2.numel(); ++i) y2[i] += x[i];
    for (Param* p : cp) p->zero_grad();
    Tensor dx2 = t2.backward(r);
    for (std::int64_t i = 0; i < dx2.numel(); ++i) dx2[i] += r[i];

    for (std::int64_t i = 0; i < y1.numel(); ++i) REQUIRE(y1[i] == y2[i]);
    for (std::int64_t i = 0; i < dx1.numel(); ++i) REQUIRE(dx1[i] == dx2[i]);
    for (std::size_t k = 0; k < bp.size(); ++k)
        for (std::int64_t i = 0; i < bp[k]->grad.numel(); ++i)
            REQUIRE(bp[k]->grad[i] == cp[k]->grad[i]);
}

TEST_CASE("residual block input gradient matches finite differences") {
    Rng rng(127);
    ResidualBlock block("r", 2);
    std::vector<Param*> params;
    block.collect_params(params);
    for (Param* p : params) randomize(*p, rng);
    gradcheck_layer(block, {1, 2, 6, 6}, rng, 2e-3, 5e-2, /*check_params=*/false);
}

TEST_CASE("tape can drop parameter gradients while passing input gradients") {
    Rng rng(131);
    Conv2d conv("c", 2, 2, 3, 1, 1);
    randomize(conv.weight, rng);
    randomize(conv.bias, rng);
    Tensor x = random_tensor({1, 2, 4, 4}, rng);

    Tape tape;
    tape.accumulate_param_grads = false;
    Tensor y = conv.forward(x, &tape);
    conv.weight.zero_grad();
    conv.bias.zero_grad();
    Tensor r = random_tensor(y.shape(), rng);
    Tensor dx = tape.backward(r);

    for (std::int64_t i = 0; i < conv.weight.grad.numel(); ++i)
        REQUIRE(conv.weight.grad[i] == 0.0f);
    bool any = false;
    for (std::int64_t i = 0; i < dx.numel(); ++i) any |= dx[i] != 0.0f;
    CHECK(any);
}

TEST_CASE("sequential counts forwards and exposes params in order") {
    Sequential seq;
    seq.add(std::make_unique<Conv2d>("a", 1, 2, 3, 1, 1));
    seq.add(std::make_unique<BatchNorm2d>("b", 2));
    seq.add(std::make_unique<ReLU>());
    CHECK(seq.size() == 3);
    CHECK(seq.forward_calls() == 0);
    Tensor x = Tensor::zeros({1, 1, 4, 4});
    seq.forward(x, nullptr);
    seq.forward(x, nullptr);
    CHECK(seq.forward_calls() == 2);
    auto params = seq.params();
    REQUIRE(params.size() == 4); // conv w/b + bn gamma/beta
    CHECK(params[0]->name == "a.w");
    auto buffers = seq.buffers();
    REQUIRE(buffers.size() == 2);
}

TEST_CASE("adam matches the closed-form first update") {
    Param p("p", Tensor::full({1}, 1.0f));
    p.grad.fill(0.5f);
    Adam opt({&p}, 0.9, 0.999, 1e-8);
    opt.step(0.1);
    // Bias-corrected first step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps).
    const double want = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
    CHECK(p.value[0] == doctest::Approx(want).epsilon(1e-6));
    CHECK(opt.step_count() == 1);

    opt.zero_grad();
    CHECK(p.grad[0] == 0.0f);
}

TEST_CASE("adam only touches its own parameter group") {
    Param a("a", Tensor::full({2}, 1.0f));
    Param b("b", Tensor::full({2}, 1.0f));
    a.grad.fill(1.0f);
    b.grad.fill(1.0f);
    Adam opt({&a}, 0.5, 0.999);
    opt.step(0.01);
    CHECK(a.value[0] != 1.0f);
    CHECK(b.value[0] == 1.0f);
    CHECK(b.grad[0] == 1.0f);
}

TEST_SUITE_END();
