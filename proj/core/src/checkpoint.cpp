#include "plgan/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "plgan/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace plgan {

namespace {

constexpr char kMagic[4] = {'P', 'L', 'G', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw DataError("checkpoint: truncated file");
    return v;
}

nlohmann::json meta_to_json(const CheckpointMeta& meta) {
    return nlohmann::json{
        {"spec",
         {{"in_channels", meta.spec.in_channels},
          {"base_width", meta.spec.base_width},
          {"n_downsamples", meta.spec.n_downsamples},
          {"n_resblocks", meta.spec.n_resblocks},
          {"out_channels", meta.spec.out_channels},
          {"disc_base_width", meta.spec.disc_base_width}}},
        {"epoch", meta.epoch},
        {"seed", meta.seed},
        {"config_hash", meta.config_hash},
        {"ablation", meta.ablation},
        {"adam_steps",
         {{"g", meta.adam_g_steps}, {"d", meta.adam_d_steps}, {"dt", meta.adam_dt_steps}}},
    };
}

CheckpointMeta meta_from_json(const nlohmann::json& j) {
    CheckpointMeta meta;
    const auto& spec = j.at("spec");
    meta.spec.in_channels = spec.at("in_channels").get<int>();
    meta.spec.base_width = spec.at("base_width").get<int>();
    meta.spec.n_downsamples = spec.at("n_downsamples").get<int>();
    meta.spec.n_resblocks = spec.at("n_resblocks").get<int>();
    meta.spec.out_channels = spec.at("out_channels").get<int>();
    meta.spec.disc_base_width = spec.at("disc_base_width").get<int>();
    meta.epoch = j.at("epoch").get<int>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.config_hash = j.at("config_hash").get<std::string>();
    meta.ablation = j.at("ablation").get<std::string>();
    meta.adam_g_steps = j.at("adam_steps").at("g").get<std::int64_t>();
    meta.adam_d_steps = j.at("adam_steps").at("d").get<std::int64_t>();
    meta.adam_dt_steps = j.at("adam_steps").at("dt").get<std::int64_t>();
    return meta;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                     const std::vector<NamedArray>& arrays) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write checkpoint: " + tmp.string());
        out.write(kMagic, sizeof(kMagic));
        write_pod<std::uint32_t>(out, kVersion);

        const std::string meta_str = meta_to_json(meta).dump();
        write_pod<std::uint64_t>(out, meta_str.size());
        out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

        write_pod<std::uint64_t>(out, arrays.size());
        for (const NamedArray& arr : arrays) {
            write_pod<std::uint64_t>(out, arr.name.size());
            out.write(arr.name.data(), static_cast<std::streamsize>(arr.name.size()));
            write_pod<std::uint64_t>(out, arr.tensor.shape().size());
            for (int d : arr.tensor.shape()) write_pod<std::int64_t>(out, d);
            out.write(reinterpret_cast<const char*>(arr.tensor.data()),
                      static_cast<std::streamsize>(arr.tensor.numel() * sizeof(float)));
        }
        if (!out) throw DataError("failed writing checkpoint: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());

    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 4) != std::string(kMagic, 4))
        throw DataError("not a checkpoint file: " + path.string());
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version));

    const auto meta_len = read_pod<std::uint64_t>(in);
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw DataError("checkpoint: truncated metadata");

    CheckpointData data;
    try {
        data.meta = meta_from_json(nlohmann::json::parse(meta_str));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: bad metadata: ") + e.what());
    }

    const auto n_arrays = read_pod<std::uint64_t>(in);
    data.arrays.reserve(n_arrays);
    for (std::uint64_t a = 0; a < n_arrays; ++a) {
        NamedArray arr;
        const auto name_len = read_pod<std::uint64_t>(in);
        arr.name.resize(name_len);
        in.read(arr.name.data(), static_cast<std::streamsize>(name_len));
        const auto ndim = read_pod<std::uint64_t>(in);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(read_pod<std::int64_t>(in));
        arr.tensor = Tensor(shape);
        in.read(reinterpret_cast<char*>(arr.tensor.data()),
                static_cast<std::streamsize>(arr.tensor.numel() * sizeof(float)));
        if (!in) throw DataError("checkpoint: truncated array " + arr.name);
        data.arrays.push_back(std::move(arr));
    }
    return data;
}

std::vector<NamedArray> snapshot_networks(NetworkBundle& nets) {
    std::vector<NamedArray> out;
    for (nn::Param* p : all_params(nets)) out.push_back({p->name, p->value});
    for (nn::Param* b : all_buffers(nets)) out.push_back({b->name, b->value});
    return out;
}

void restore_networks(NetworkBundle& nets, const std::vector<NamedArray>& arrays) {
    std::unordered_map<std::string, const NamedArray*> by_name;
    for (const NamedArray& arr : arrays) by_name[arr.name] = &arr;

    std::vector<nn::Param*> targets = all_params(nets);
    for (nn::Param* b : all_buffers(nets)) targets.push_back(b);
    for (nn::Param* p : targets) {
        const auto it = by_name.find(p->name);
        if (it == by_name.end())
            throw DataError("checkpoint mismatch: missing array " + p->name +
                            " (was the checkpoint written with a different network spec?)");
        if (!it->second->tensor.same_shape(p->value))
            throw DataError("checkpoint mismatch: " + p->name + " has shape " +
                            it->second->tensor.shape_str() + ", network expects " +
                            p->value.shape_str());
        p->value = it->second->tensor;
        p->zero_grad();
    }
}

} // namespace plgan
