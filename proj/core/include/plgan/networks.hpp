#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plgan/nn.hpp"
#include "plgan/tensor.hpp"

namespace plgan {

struct GeneratorSpec {
    int in_channels = 3;
    int base_width = 64;
    int n_downsamples = 2;
    int n_resblocks = 6;
    int out_channels = 3;
    // PatchGAN first-layer width; successive blocks double it up to 8x.
    int disc_base_width = 64;

    void validate() const;
    int spatial_divisor() const { return 1 << n_downsamples; }
};

enum class InitKind { gaussian, xavier };
InitKind init_kind_from_string(const std::string& name);
std::string to_string(InitKind kind);

// The four networks plus the embedder/head split of the generator. The
// embedder is everything up to (excluding) the final output convolution, the
// head is that output convolution + squashing, so generator(x) ==
// head(embedder(x)) holds structurally, not approximately.
struct NetworkBundle {
    GeneratorSpec spec;
    nn::Sequential embedder;
    nn::Sequential head;
    nn::Sequential semantic;
    nn::Sequential disc;
    nn::Sequential disc_t;
};

NetworkBundle build_networks(const GeneratorSpec& spec);

void init_weights(NetworkBundle& nets, std::uint64_t seed, InitKind kind = InitKind::gaussian);

struct GeneratorOutput {
    Tensor embedding; // {base_width, H, W}
    Tensor pl_image;  // {out_channels, H, W} in [-1,1]
};

// Single-image inference entry points ({C,H,W} in, batch handled internally).
GeneratorOutput generator_forward(NetworkBundle& nets, const Tensor& image);
Tensor semantic_forward(NetworkBundle& nets, const Tensor& embedding); // -> {H,W} in (0,1)
Tensor discriminator_forward(nn::Sequential& disc, const Tensor& image); // -> {Hp,Wp} scores

// Deployment inference path: semantic(embedder(image)); the generator head
// and the discriminators are never evaluated.
Tensor predict(NetworkBundle& nets, const Tensor& image);

Tensor binarize(const Tensor& probs, float tau);

std::int64_t count_params(NetworkBundle& nets);

// Fixed global order: embedder, head, semantic, disc, disc_t.
std::vector<nn::Param*> all_params(NetworkBundle& nets);
std::vector<nn::Param*> all_buffers(NetworkBundle& nets);
std::vector<nn::Param*> generator_side_params(NetworkBundle& nets); // embedder + head + semantic

// Throws ShapeError unless H and W are divisible by 2^n_downsamples.
void require_divisible(const GeneratorSpec& spec, int h, int w);

} // namespace plgan
