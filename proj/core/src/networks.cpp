#include "plgan/networks.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "plgan/errors.hpp"
#include "plgan/rng.hpp"

namespace plgan {

void GeneratorSpec::validate() const {
    if (in_channels < 1 || out_channels < 1)
        throw ConfigError("GeneratorSpec: channel counts must be >= 1");
    if (base_width < 1) throw ConfigError("GeneratorSpec: base_width must be >= 1");
    if (n_downsamples < 0) throw ConfigError("GeneratorSpec: n_downsamples must be >= 0");
    if (n_resblocks < 1) throw ConfigError("GeneratorSpec: n_resblocks must be >= 1");
    if (disc_base_width < 1) throw ConfigError("GeneratorSpec: disc_base_width must be >= 1");
}

InitKind init_kind_from_string(const std::string& name) {
    if (name == "gaussian") return InitKind::gaussian;
    if (name == "xavier") return InitKind::xavier;
    throw ConfigError("unknown init kind: " + name);
}

std::string to_string(InitKind kind) {
    return kind == InitKind::gaussian ? "gaussian" : "xavier";
}

namespace {

nn::Sequential build_embedder(const GeneratorSpec& spec) {
    nn::Sequential net;
    net.add(std::make_unique<nn::Conv2d>("g.emb.in.conv", spec.in_channels, spec.base_width, 7,
                                         1, 3));
    net.add(std::make_unique<nn::BatchNorm2d>("g.emb.in.bn", spec.base_width));
    net.add(std::make_unique<nn::ReLU>());
    for (int d = 0; d < spec.n_downsamples; ++d) {
        const int cin = spec.base_width << d;
        const std::string name = "g.emb.down" + std::to_string(d);
        net.add(std::make_unique<nn::Conv2d>(name + ".conv", cin, cin * 2, 3, 2, 1));
        net.add(std::make_unique<nn::BatchNorm2d>(name + ".bn", cin * 2));
        net.add(std::make_unique<nn::ReLU>());
    }
    const int mid = spec.base_width << spec.n_downsamples;
    for (int r = 0; r < spec.n_resblocks; ++r)
        net.add(std::make_unique<nn::ResidualBlock>("g.emb.res" + std::to_string(r), mid));
    for (int d = spec.n_downsamples - 1; d >= 0; --d) {
        const int cout = spec.base_width << d;
        const std::string name = "g.emb.up" + std::to_string(d);
        net.add(std::make_unique<nn::ConvTranspose2d>(name + ".conv", cout * 2, cout, 3, 2, 1,
                                                      1));
        net.add(std::make_unique<nn::BatchNorm2d>(name + ".bn", cout));
        net.add(std::make_unique<nn::ReLU>());
    }
    return net;
}

nn::Sequential build_head(const GeneratorSpec& spec) {
    nn::Sequential net;
    net.add(std::make_unique<nn::Conv2d>("g.out.conv", spec.base_width, spec.out_channels, 7, 1,
                                         3));
    net.add(std::make_unique<nn::Tanh>());
    return net;
}

nn::Sequential build_semantic(const GeneratorSpec& spec) {
    const int c0 = spec.base_width;
    const int c1 = std::max(1, spec.base_width / 2);
    const int c2 = std::max(1, spec.base_width / 4);
    nn::Sequential net;
    int cin = spec.base_width;
    const int widths[3] = {c0, c1, c2};
    for (int b = 0; b < 3; ++b) {
        const std::string name = "s.b" + std::to_string(b);
        net.add(std::make_unique<nn::Conv2d>(name + ".conv", cin, widths[b], 3, 1, 1));
        net.add(std::make_unique<nn::BatchNorm2d>(name + ".bn", widths[b]));
        net.add(std::make_unique<nn::LeakyReLU>(0.2f));
        cin = widths[b];
    }
    net.add(std::make_unique<nn::Conv2d>("s.out.conv", cin, 1, 1, 1, 0));
    net.add(std::make_unique<nn::Sigmoid>());
    return net;
}

nn::Sequential build_discriminator(const std::string& prefix, const GeneratorSpec& spec) {
    const int w = spec.disc_base_width;
    nn::Sequential net;
    net.add(std::make_unique<nn::Conv2d>(prefix + ".c0.conv", spec.in_channels, w, 4, 2, 1));
    net.add(std::make_unique<nn::LeakyReLU>(0.2f));
    const int widths[3] = {w * 2, w * 4, w * 8};
    int cin = w;
    for (int b = 0; b < 3; ++b) {
        const std::string name = prefix + ".c" + std::to_string(b + 1);
        const int stride = b < 2 ? 2 : 1;
        net.add(std::make_unique<nn::Conv2d>(name + ".conv", cin, widths[b], 4, stride, 1));
        net.add(std::make_unique<nn::BatchNorm2d>(name + ".bn", widths[b]));
        net.add(std::make_unique<nn::LeakyReLU>(0.2f));
        cin = widths[b];
    }
    net.add(std::make_unique<nn::Conv2d>(prefix + ".c4.conv", cin, 1, 4, 1, 1));
    return net;
}

Tensor as_batch(const Tensor& x, int channels, const char* who) {
    if (x.ndim() != 3 || x.dim(0) != channels)
        throw ShapeError(std::string(who) + ": expected {" + std::to_string(channels) +
                         ",H,W}, got " + x.shape_str());
    return x.reshaped({1, x.dim(0), x.dim(1), x.dim(2)});
}

} // namespace

NetworkBundle build_networks(const GeneratorSpec& spec) {
    spec.validate();
    NetworkBundle nets;
    nets.spec = spec;
    nets.embedder = build_embedder(spec);
    nets.head = build_head(spec);
    nets.semantic = build_semantic(spec);
    nets.disc = build_discriminator("d", spec);
    nets.disc_t = build_discriminator("dt", spec);
    return nets;
}

std::vector<nn::Param*> all_params(NetworkBundle& nets) {
    std::vector<nn::Param*> out;
    for (nn::Sequential* net :
         {&nets.embedder, &nets.head, &nets.semantic, &nets.disc, &nets.disc_t})
        for (nn::Param* p : net->params()) out.push_back(p);
    return out;
}

std::vector<nn::Param*> all_buffers(NetworkBundle& nets) {
    std::vector<nn::Param*> out;
    for (nn::Sequential* net :
         {&nets.embedder, &nets.head, &nets.semantic, &nets.disc, &nets.disc_t})
        for (nn::Param* p : net->buffers()) out.push_back(p);
    return out;
}

std::vector<nn::Param*> generator_side_params(NetworkBundle& nets) {
    std::vector<nn::Param*> out;
    for (nn::Sequential* net : {&nets.embedder, &nets.head, &nets.semantic})
        for (nn::Param* p : net->params()) out.push_back(p);
    return out;
}

void init_weights(NetworkBundle& nets, std::uint64_t seed, InitKind kind) {
    Rng rng(seed);
    for (nn::Param* p : all_params(nets)) {
        const std::string& name = p->name;
        const auto ends_with = [&name](const char* suffix) {
            const std::size_t n = std::string(suffix).size();
            return name.size() >= n && name.compare(name.size() - n, n, suffix) == 0;
        };
        if (ends_with(".w")) {
            if (kind == InitKind::gaussian) {
                for (std::int64_t i = 0; i < p->value.numel(); ++i)
                    p->value[i] = static_cast<float>(rng.normal(0.0, 0.02));
            } else {
                const auto& shape = p->value.shape();
                const std::int64_t taps = shape.size() == 4
                                              ? static_cast<std::int64_t>(shape[2]) * shape[3]
                                              : 1;
                const double a =
                    std::sqrt(6.0 / (static_cast<double>(shape[0] + shape[1]) * taps));
                for (std::int64_t i = 0; i < p->value.numel(); ++i)
                    p->value[i] = static_cast<float>(rng.uniform(-a, a));
            }
        } else if (ends_with(".gamma")) {
            for (std::int64_t i = 0; i < p->value.numel(); ++i)
                p->value[i] = static_cast<float>(rng.normal(1.0, 0.02));
        } else {
            p->value.fill(0.0f);
        }
        p->zero_grad();
    }
    for (nn::Param* b : all_buffers(nets)) {
        const bool is_var = b->name.size() >= 5 &&
                            b->name.compare(b->name.size() - 5, 5, ".rvar") == 0;
        b->value.fill(is_var ? 1.0f : 0.0f);
    }
}

void require_divisible(const GeneratorSpec& spec, int h, int w) {
    const int div = spec.spatial_divisor();
    if (h % div != 0 || w % div != 0)
        throw ShapeError("input " + std::to_string(h) + "x" + std::to_string(w) +
                         " not divisible by " + std::to_string(div));
}

GeneratorOutput generator_forward(NetworkBundle& nets, const Tensor& image) {
    Tensor x = as_batch(image, nets.spec.in_channels, "generator_forward");
    require_divisible(nets.spec, x.dim(2), x.dim(3));
    Tensor emb = nets.embedder.forward(x, nullptr);
    Tensor pl = nets.head.forward(emb, nullptr);
    GeneratorOutput out;
    out.embedding = emb.reshaped({emb.dim(1), emb.dim(2), emb.dim(3)});
    out.pl_image = pl.reshaped({pl.dim(1), pl.dim(2), pl.dim(3)});
    return out;
}

Tensor semantic_forward(NetworkBundle& nets, const Tensor& embedding) {
    Tensor x = as_batch(embedding, nets.spec.base_width, "semantic_forward");
    Tensor prob = nets.semantic.forward(x, nullptr);
    return prob.reshaped({prob.dim(2), prob.dim(3)});
}

Tensor discriminator_forward(nn::Sequential& disc, const Tensor& image) {
    if (image.ndim() != 3)
        throw ShapeError("discriminator_forward: expected {C,H,W}, got " + image.shape_str());
    Tensor x = image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)});
    Tensor score = disc.forward(x, nullptr);
    return score.reshaped({score.dim(2), score.dim(3)});
}

Tensor predict(NetworkBundle& nets, const Tensor& image) {
    Tensor x = as_batch(image, nets.spec.in_channels, "predict");
    require_divisible(nets.spec, x.dim(2), x.dim(3));
    Tensor emb = nets.embedder.forward(x, nullptr);
    Tensor prob = nets.semantic.forward(emb, nullptr);
    return prob.reshaped({prob.dim(2), prob.dim(3)});
}

Tensor binarize(const Tensor& probs, float tau) {
    if (!(tau > 0.0f && tau < 1.0f)) throw ConfigError("binarize: tau must be in (0,1)");
    Tensor out(probs.shape());
    for (std::int64_t i = 0; i < probs.numel(); ++i) out[i] = probs[i] >= tau ? 1.0f : 0.0f;
    return out;
}

std::int64_t count_params(NetworkBundle& nets) {
    std::int64_t total = 0;
    for (nn::Param* p : all_params(nets)) total += p->value.numel();
    return total;
}

} // namespace plgan
