#include <cmath>

#include <doctest.h>

#include "plgan/errors.hpp"
#include "plgan/losses.hpp"
#include "plgan/networks.hpp"
#include "plgan/rng.hpp"

#include "helpers.hpp"

using namespace plgan;
using plgan::testing::random_probs;
using plgan::testing::random_tensor;

TEST_SUITE_BEGIN("losses");

TEST_CASE("lsgan plug-in values") {
    Tensor half = Tensor::full({3, 3}, 0.5f);
    LsganPair p = lsgan_losses(half, half);
    CHECK(p.d_loss == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.g_loss == doctest::Approx(0.125).epsilon(1e-12));

    Tensor ones = Tensor::full({2, 5}, 1.0f);
    Tensor zeros = Tensor::zeros({2, 5});
    LsganPair ideal = lsgan_losses(ones, zeros);
    CHECK(ideal.d_loss == 0.0);
    CHECK(ideal.g_loss == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("lsgan gradients match finite differences") {
    Rng rng(3);
    Tensor real = random_tensor({4, 4}, rng, -2.0, 2.0);
    Tensor fake = random_tensor({4, 4}, rng, -2.0, 2.0);
    Tensor g_real = lsgan_d_real_grad(real);
    Tensor g_fake = lsgan_d_fake_grad(fake);
    Tensor g_gen = lsgan_g_grad(fake);
    const double h = 1e-3;
    for (int idx : {0, 5, 11, 15}) {
        auto fd = [&](auto loss_fn, Tensor& t) {
            Tensor up = t, down = t;
            up[idx] += static_cast<float>(h);
            down[idx] -= static_cast<float>(h);
            return (loss_fn(up) - loss_fn(down)) / (2 * h);
        };
        double fd_real = fd([&](const Tensor& t) { return lsgan_losses(t, fake).d_loss; }, real);
        double fd_fake = fd([&](const Tensor& t) { return lsgan_losses(real, t).d_loss; }, fake);
        double fd_gen = fd([&](const Tensor& t) { return lsgan_losses(real, t).g_loss; }, fake);
        CHECK(g_real[idx] == doctest::Approx(fd_real).epsilon(1e-4));
        CHECK(g_fake[idx] == doctest::Approx(fd_fake).epsilon(1e-4));
        CHECK(g_gen[idx] == doctest::Approx(fd_gen).epsilon(1e-4));
    }
    Tensor scaled = lsgan_g_grad(fake, 3.0);
    for (std::int64_t i = 0; i < scaled.numel(); ++i)
        CHECK(scaled[i] == doctest::Approx(3.0 * g_gen[i]).epsilon(1e-6));
}

TEST_CASE("semantic loss plug-in values") {
    Tensor gt({2, 2});
    gt.fill(0.0f);
    gt[0] = 1.0f;
    Tensor uniform = Tensor::full({2, 2}, 0.5f);
    CHECK(semantic_loss(uniform, gt) == doctest::Approx(std::log(2.0)).epsilon(1e-9));

    Tensor exact = gt;
    CHECK(semantic_loss(exact, gt) < 1e-6);

    Tensor wrong = Tensor::full({2, 2}, 0.75f);
    Tensor all_bg = Tensor::zeros({2, 2});
    CHECK(semantic_loss(wrong, all_bg) == doctest::Approx(-std::log(0.25)).epsilon(1e-9));
}

TEST_CASE("semantic gradient matches finite differences away from the clamp") {
    Rng rng(7);
    Tensor gt = plgan::testing::random_mask(16, 16, rng);
    Tensor pred = random_probs(16, 16, rng, 0.05, 0.95);
    Tensor grad = semantic_loss_grad(pred, gt);
    const double h = 1e-4;
    for (int k = 0; k < 24; ++k) {
        const int idx = rng.uniform_int(0, 255);
        Tensor up = pred, down = pred;
        up[idx] += static_cast<float>(h);
        down[idx] -= static_cast<float>(h);
        const double fd = (semantic_loss(up, gt) - semantic_loss(down, gt)) / (2 * h);
        REQUIRE(std::abs(fd - grad[idx]) / std::max(std::abs(fd), 1e-8) < 1e-3);
    }
}

TEST_CASE("semantic gradient is zero where the clamp is active") {
    Tensor gt = Tensor::from_values({1, 2}, {1.0f, 0.0f});
    Tensor pred = Tensor::from_values({1, 2}, {0.0f, 1.0f});
    Tensor grad = semantic_loss_grad(pred, gt);
    CHECK(grad[0] == 0.0f);
    CHECK(grad[1] == 0.0f);
}

TEST_CASE("geometry consistency is zero for matching pairs and counts both directions") {
    Rng rng(11);
    Tensor out_r = random_tensor({3, 6, 6}, rng);
    CHECK(geometry_consistency_loss(out_r, out_r, TransformKind::identity) == 0.0);

    Tensor constant = Tensor::full({1, 4, 4}, 0.37f);
    CHECK(geometry_consistency_loss(constant, constant, TransformKind::rot90cw) == 0.0);

    Tensor out_t = apply_transform(out_r, TransformKind::rot90cw);
    CHECK(geometry_consistency_loss(out_r, out_t, TransformKind::rot90cw) == 0.0);

    // Perturbing the transformed branch by +d raises the loss by exactly 2*mean|d|.
    Tensor shifted = out_t;
    for (std::int64_t i = 0; i < shifted.numel(); ++i) shifted[i] += 0.25f;
    CHECK(geometry_consistency_loss(out_r, shifted, TransformKind::rot90cw) ==
          doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("geometry gradients match finite differences away from ties") {
    Rng rng(13);
    Tensor out_r = random_tensor({2, 5, 5}, rng);
    Tensor out_t = apply_transform(out_r, TransformKind::rot90cw);
    for (std::int64_t i = 0; i < out_t.numel(); ++i)
        out_t[i] += static_cast<float>((rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.05, 0.2));
    Tensor grad_r = Tensor::zeros(out_r.shape());
    Tensor grad_t = Tensor::zeros(out_t.shape());
    geometry_consistency_grads(out_r, out_t, TransformKind::rot90cw, 1.0, grad_r, grad_t);
    const double h = 1e-4;
    for (int k = 0; k < 16; ++k) {
        const int idx = rng.uniform_int(0, static_cast<int>(out_r.numel()) - 1);
        Tensor up = out_r, down = out_r;
        up[idx] += static_cast<float>(h);
        down[idx] -= static_cast<float>(h);
        const double fd =
            (geometry_consistency_loss(up, out_t, TransformKind::rot90cw) -
             geometry_consistency_loss(down, out_t, TransformKind::rot90cw)) / (2 * h);
        REQUIRE(std::abs(fd - grad_r[idx]) / std::max(std::abs(fd), 1e-8) < 1e-3);

        Tensor up_t = out_t, down_t = out_t;
        up_t[idx] += static_cast<float>(h);
        down_t[idx] -= static_cast<float>(h);
        const double fd_t =
            (geometry_consistency_loss(out_r, up_t, TransformKind::rot90cw) -
             geometry_consistency_loss(out_r, down_t, TransformKind::rot90cw)) / (2 * h);
        REQUIRE(std::abs(fd_t - grad_t[idx]) / std::max(std::abs(fd_t), 1e-8) < 1e-3);
    }
}

TEST_CASE("whole-network geometry losses vanish for identity transform and zeroed nets") {
    GeneratorSpec spec;
    spec.base_width = 4;
    spec.n_resblocks = 1;
    spec.disc_base_width = 4;
    NetworkBundle nets = build_networks(spec);
    init_weights(nets, 21);
    Rng rng(23);
    Tensor image = random_tensor({3, 8, 8}, rng);

    CHECK(geometry_loss_pl(nets, TransformKind::identity, image) == 0.0);
    CHECK(geometry_loss_sem(nets, TransformKind::identity, image) == 0.0);

    for (nn::Param* p : all_params(nets)) p->value.fill(0.0f);
    CHECK(geometry_loss_pl(nets, TransformKind::rot90cw, image) == 0.0);
    CHECK(geometry_loss_sem(nets, TransformKind::rot90cw, image) == 0.0);
}

TEST_CASE("total generator loss applies the documented weighting") {
    LossBreakdown parts;
    parts.adv = 0.5;
    parts.adv_t = 0.25;
    parts.spl = 0.7;
    parts.spl_t = 0.3;
    parts.ht = 0.11;
    parts.ht_t = 0.09;
    parts.pgeo = 0.02;
    parts.sgeo = 0.01;
    LossWeights w;
    w.lambda_spl = 10.0;
    w.lambda_ht = 1.0;
    w.lambda_geo = 20.0;
    LossBreakdown out = total_generator_loss(parts, w);
    const double want = 0.75 + 10.0 * 1.0 + 1.0 * 0.2 + 20.0 * 0.03;
    CHECK(out.total == doctest::Approx(want).epsilon(1e-12));
    CHECK(out.adv == parts.adv);

    parts.ht = std::nan("");
    CHECK_THROWS_AS(total_generator_loss(parts, w), NumericError);

    LossWeights bad;
    bad.lambda_spl = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_SUITE_END();
