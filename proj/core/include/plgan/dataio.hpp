#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "plgan/errors.hpp"
#include "plgan/geometry.hpp"
#include "plgan/tensor.hpp"

namespace plgan {

// One labeled polygon from a LabelMe annotation file, vertices in pixel
// coordinates (x right, y down).
struct PolygonAnnotation {
    std::string label;
    std::vector<std::pair<float, float>> points;
};

struct ParseResult {
    std::vector<PolygonAnnotation> annotations;
    int skipped = 0;
};

// A training/eval sample. `image` is {3,H,W} in [-1,1], `mask` is {H,W} in
// {0,1}, and `pl_highlighted` equals `image` with mask pixels forced to the
// encoding of intensity zero (-1 in every channel).
struct Sample {
    std::string id;
    Tensor image;
    Tensor mask;
    Tensor pl_highlighted;
};

enum class Split { train, test };

struct ManifestEntry {
    std::filesystem::path image_path;
    std::filesystem::path annotation_path;
};

struct DatasetManifest {
    Split split = Split::train;
    std::vector<ManifestEntry> entries;
    std::vector<std::string> class_filter{"cable"};
};

inline const std::vector<std::string> kDefaultClassFilter{"cable"};

// Labels pass when they start with any filter string; an empty filter accepts
// every label.
bool label_passes_filter(const std::string& label, const std::vector<std::string>& class_filter);

ParseResult parse_labelme(const std::string& json_text,
                          const std::vector<std::string>& class_filter = kDefaultClassFilter);

// Even-odd fill sampled at pixel centers (j+0.5, i+0.5); the union is taken
// over annotations. Vertices are clamped to the image rectangle.
Tensor rasterize_polygons(const std::vector<PolygonAnnotation>& annos, int width, int height);

Tensor make_pl_highlighted(const Tensor& image, const Tensor& mask);

Sample resize_sample(const Sample& sample, int size);

Tensor resize_bilinear(const Tensor& image, int out_h, int out_w);
Tensor resize_nearest(const Tensor& mask, int out_h, int out_w);

// `which` must be hflip or vflip.
Sample augment_flip(const Sample& sample, TransformKind which);

std::vector<Sample> synth_thin_lines(int n_images, int size, int line_width_px,
                                     std::uint64_t seed, std::vector<double>* mask_ratios = nullptr);

std::pair<DatasetManifest, DatasetManifest> split_dataset(const DatasetManifest& manifest,
                                                          double train_ratio);
std::pair<DatasetManifest, DatasetManifest> split_dataset(
    const DatasetManifest& manifest, const std::vector<std::string>& train_ids,
    const std::vector<std::string>& test_ids);

// Manifest lines are "image_path<TAB>annotation_path"; relative paths are
// resolved against the manifest's directory on read.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

std::string sample_id_for(const ManifestEntry& entry);

// Loads one manifest entry. A ".json" annotation is parsed as LabelMe polygons
// and rasterized at the image's resolution; anything else is read as a binary
// mask raster. `size` > 0 resizes the sample; 0 keeps native resolution.
Sample load_sample(const ManifestEntry& entry, const std::vector<std::string>& class_filter,
                   int size = 0);

std::vector<Sample> load_dataset(const DatasetManifest& manifest, int size = 0);

double mask_ratio(const Tensor& mask);

} // namespace plgan
