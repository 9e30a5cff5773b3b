#include "plgan/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plgan/image_io.hpp"

namespace plgan {

bool label_passes_filter(const std::string& label, const std::vector<std::string>& class_filter) {
    if (class_filter.empty()) return true;
    return std::any_of(class_filter.begin(), class_filter.end(), [&](const std::string& prefix) {
        return label.rfind(prefix, 0) == 0;
    });
}

ParseResult parse_labelme(const std::string& json_text,
                          const std::vector<std::string>& class_filter) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed LabelMe JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("shapes") || !doc["shapes"].is_array())
        throw DataError("malformed LabelMe JSON: missing \"shapes\" array");

    ParseResult result;
    for (const auto& shape : doc["shapes"]) {
        if (!shape.is_object() || !shape.contains("label") || !shape.contains("points") ||
            !shape["points"].is_array())
            throw DataError("malformed LabelMe JSON: shape without label/points");
        const std::string label = shape["label"].get<std::string>();
        if (!label_passes_filter(label, class_filter)) continue;
        if (shape["points"].size() < 3) {
            ++result.skipped;
            continue;
        }
        PolygonAnnotation anno;
        anno.label = label;
        for (const auto& pt : shape["points"]) {
            if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number())
                throw DataError("malformed LabelMe JSON: point is not [x, y]");
            anno.points.emplace_back(pt[0].get<float>(), pt[1].get<float>());
        }
        result.annotations.push_back(std::move(anno));
    }
    return result;
}

namespace {

void fill_polygon(const PolygonAnnotation& anno, int width, int height, Tensor& mask) {
    const std::size_t n = anno.points.size();
    std::vector<double> xs(n), ys(n);
    for (std::size_t k = 0; k < n; ++k) {
        xs[k] = std::clamp(static_cast<double>(anno.points[k].first), 0.0,
                           static_cast<double>(width));
        ys[k] = std::clamp(static_cast<double>(anno.points[k].second), 0.0,
                           static_cast<double>(height));
    }
    std::vector<double> crossings;
    for (int i = 0; i < height; ++i) {
        const double y = i + 0.5;
        crossings.clear();
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t k2 = (k + 1) % n;
            const double y1 = ys[k], y2 = ys[k2];
            if ((y1 <= y && y < y2) || (y2 <= y && y < y1))
                crossings.push_back(xs[k] + (y - y1) * (xs[k2] - xs[k]) / (y2 - y1));
        }
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
            const int j_begin = std::max(0, static_cast<int>(std::ceil(crossings[k] - 0.5)));
            const int j_end =
                std::min(width, static_cast<int>(std::ceil(crossings[k + 1] - 0.5)));
            for (int j = j_begin; j < j_end; ++j) mask.at(i, j) = 1.0f;
        }
    }
}

} // namespace

Tensor rasterize_polygons(const std::vector<PolygonAnnotation>& annos, int width, int height) {
    if (width <= 0 || height <= 0)
        throw ConfigError("rasterize_polygons: width and height must be positive");
    Tensor mask = Tensor::zeros({height, width});
    for (const auto& anno : annos) {
        if (anno.points.size() < 3)
            throw DataError("rasterize_polygons: polygon with fewer than 3 vertices");
        fill_polygon(anno, width, height, mask);
    }
    return mask;
}

Tensor make_pl_highlighted(const Tensor& image, const Tensor& mask) {
    if (image.ndim() != 3 || mask.ndim() != 2 || image.dim(1) != mask.dim(0) ||
        image.dim(2) != mask.dim(1))
        throw ShapeError("make_pl_highlighted: image " + image.shape_str() + " vs mask " +
                         mask.shape_str());
    Tensor out = image;
    const int c_count = image.dim(0), h = image.dim(1), w = image.dim(2);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            if (mask.at(i, j) != 0.0f)
                for (int c = 0; c < c_count; ++c) out.at(c, i, j) = -1.0f;
    return out;
}

Tensor resize_bilinear(const Tensor& image, int out_h, int out_w) {
    if (image.ndim() != 3) throw ShapeError("resize_bilinear: expected {C,H,W}");
    const int c_count = image.dim(0), in_h = image.dim(1), in_w = image.dim(2);
    Tensor out({c_count, out_h, out_w});
    const double scale_i = static_cast<double>(in_h) / out_h;
    const double scale_j = static_cast<double>(in_w) / out_w;
    for (int i = 0; i < out_h; ++i) {
        const double si = std::clamp((i + 0.5) * scale_i - 0.5, 0.0, in_h - 1.0);
        const int i0 = static_cast<int>(si);
        const int i1 = std::min(i0 + 1, in_h - 1);
        const float fi = static_cast<float>(si - i0);
        for (int j = 0; j < out_w; ++j) {
            const double sj = std::clamp((j + 0.5) * scale_j - 0.5, 0.0, in_w - 1.0);
            const int j0 = static_cast<int>(sj);
            const int j1 = std::min(j0 + 1, in_w - 1);
            const float fj = static_cast<float>(sj - j0);
            for (int c = 0; c < c_count; ++c) {
                const float top = image.at(c, i0, j0) * (1 - fj) + image.at(c, i0, j1) * fj;
                const float bot = image.at(c, i1, j0) * (1 - fj) + image.at(c, i1, j1) * fj;
                out.at(c, i, j) = top * (1 - fi) + bot * fi;
            }
        }
    }
    return out;
}

Tensor resize_nearest(const Tensor& mask, int out_h, int out_w) {
    if (mask.ndim() != 2) throw ShapeError("resize_nearest: expected {H,W}");
    const int in_h = mask.dim(0), in_w = mask.dim(1);
    Tensor out({out_h, out_w});
    const double scale_i = static_cast<double>(in_h) / out_h;
    const double scale_j = static_cast<double>(in_w) / out_w;
    for (int i = 0; i < out_h; ++i) {
        const int si = std::min(in_h - 1, static_cast<int>((i + 0.5) * scale_i));
        for (int j = 0; j < out_w; ++j) {
            const int sj = std::min(in_w - 1, static_cast<int>((j + 0.5) * scale_j));
            out.at(i, j) = mask.at(si, sj) >= 0.5f ? 1.0f : 0.0f;
        }
    }
    return out;
}

Sample resize_sample(const Sample& sample, int size) {
    if (size <= 0) throw ConfigError("resize_sample: size must be positive");
    Sample out;
    out.id = sample.id;
    out.image = resize_bilinear(sample.image, size, size);
    out.mask = resize_nearest(sample.mask, size, size);
    out.pl_highlighted = make_pl_highlighted(out.image, out.mask);
    return out;
}

Sample augment_flip(const Sample& sample, TransformKind which) {
    if (which != TransformKind::hflip && which != TransformKind::vflip)
        throw ConfigError("augment_flip: transform must be hflip or vflip");
    Sample out;
    out.id = sample.id;
    out.image = apply_transform(sample.image, which);
    out.mask = apply_transform(sample.mask, which);
    out.pl_highlighted = apply_transform(sample.pl_highlighted, which);
    return out;
}

std::pair<DatasetManifest, DatasetManifest> split_dataset(const DatasetManifest& manifest,
                                                          double train_ratio) {
    if (manifest.entries.empty()) throw DataError("split_dataset: manifest is empty");
    if (train_ratio < 0.0 || train_ratio > 1.0)
        throw ConfigError("split_dataset: ratio must be in [0,1]");
    const auto n = manifest.entries.size();
    const auto n_train =
        std::min(n, static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n))));
    DatasetManifest train{Split::train, {}, manifest.class_filter};
    DatasetManifest test{Split::test, {}, manifest.class_filter};
    train.entries.assign(manifest.entries.begin(),
                         manifest.entries.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.entries.assign(manifest.entries.begin() + static_cast<std::ptrdiff_t>(n_train),
                        manifest.entries.end());
    return {std::move(train), std::move(test)};
}

std::pair<DatasetManifest, DatasetManifest> split_dataset(
    const DatasetManifest& manifest, const std::vector<std::string>& train_ids,
    const std::vector<std::string>& test_ids) {
    if (manifest.entries.empty()) throw DataError("split_dataset: manifest is empty");
    const std::set<std::string> train_set(train_ids.begin(), train_ids.end());
    const std::set<std::string> test_set(test_ids.begin(), test_ids.end());
    for (const auto& id : train_set)
        if (test_set.count(id)) throw DataError("split_dataset: id in both splits: " + id);
    DatasetManifest train{Split::train, {}, manifest.class_filter};
    DatasetManifest test{Split::test, {}, manifest.class_filter};
    for (const auto& entry : manifest.entries) {
        const std::string id = sample_id_for(entry);
        if (train_set.count(id))
            train.entries.push_back(entry);
        else if (test_set.count(id))
            test.entries.push_back(entry);
        else
            throw DataError("split_dataset: id in neither split: " + id);
    }
    return {std::move(train), std::move(test)};
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    const std::filesystem::path base = path.parent_path();
    DatasetManifest manifest;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("manifest " + path.string() + ": line " + std::to_string(line_no) +
                            " has no tab separator");
        ManifestEntry entry;
        entry.image_path = line.substr(0, tab);
        entry.annotation_path = line.substr(tab + 1);
        if (entry.image_path.is_relative()) entry.image_path = base / entry.image_path;
        if (entry.annotation_path.is_relative())
            entry.annotation_path = base / entry.annotation_path;
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    for (const auto& entry : manifest.entries)
        out << entry.image_path.string() << '\t' << entry.annotation_path.string() << '\n';
    if (!out) throw DataError("failed writing manifest: " + path.string());
}

std::string sample_id_for(const ManifestEntry& entry) {
    return entry.image_path.stem().string();
}

Sample load_sample(const ManifestEntry& entry, const std::vector<std::string>& class_filter,
                   int size) {
    Sample sample;
    sample.id = sample_id_for(entry);
    const ImageU8 raw = read_image(entry.image_path);
    sample.image = image_to_tensor(raw);
    if (entry.annotation_path.extension() == ".json") {
        std::ifstream in(entry.annotation_path);
        if (!in) throw DataError("cannot open annotation: " + entry.annotation_path.string());
        std::stringstream buf;
        buf << in.rdbuf();
        const ParseResult parsed = parse_labelme(buf.str(), class_filter);
        sample.mask = rasterize_polygons(parsed.annotations, raw.width, raw.height);
    } else {
        const ImageU8 mask_raw = read_image(entry.annotation_path);
        if (mask_raw.height != raw.height || mask_raw.width != raw.width)
            throw DataError("mask size differs from image for " + sample.id);
        sample.mask = mask_from_image(mask_raw);
    }
    sample.pl_highlighted = make_pl_highlighted(sample.image, sample.mask);
    if (size > 0 && (sample.image.dim(1) != size || sample.image.dim(2) != size))
        sample = resize_sample(sample, size);
    return sample;
}

std::vector<Sample> load_dataset(const DatasetManifest& manifest, int size) {
    std::vector<Sample> samples;
    samples.reserve(manifest.entries.size());
    for (const auto& entry : manifest.entries)
        samples.push_back(load_sample(entry, manifest.class_filter, size));
    return samples;
}

double mask_ratio(const Tensor& mask) {
    if (mask.numel() == 0) return 0.0;
    double on = 0.0;
    for (std::int64_t k = 0; k < mask.numel(); ++k) on += mask[k] != 0.0f ? 1.0 : 0.0;
    return on / static_cast<double>(mask.numel());
}

} // namespace plgan
