#include "plgan/runconfig.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "plgan/errors.hpp"

namespace plgan {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long r = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing text");
        if (r < std::numeric_limits<int>::min() || r > std::numeric_limits<int>::max())
            throw std::out_of_range("int range");
        return static_cast<int>(r);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected an integer, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        std::uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing text");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected an unsigned integer, got '" + v +
                          "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing text");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected a number, got '" + v + "'");
    }
}

std::vector<std::string> parse_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += items[i];
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return out.str();
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    TrainConfig& t = cfg.train;
    if (key == "epochs") t.epochs = parse_int(key, value);
    else if (key == "lr0") t.lr0 = parse_double(key, value);
    else if (key == "adam_beta1") t.adam_beta1 = parse_double(key, value);
    else if (key == "adam_beta2") t.adam_beta2 = parse_double(key, value);
    else if (key == "batch_size") t.batch_size = parse_int(key, value);
    else if (key == "grad_accum") t.grad_accum = parse_int(key, value);
    else if (key == "image_size") t.image_size = parse_int(key, value);
    else if (key == "seed") t.seed = parse_u64(key, value);
    else if (key == "ablation") t.ablation = ablation_from_string(value);
    else if (key == "transform") t.transform = transform_kind_from_string(value);
    else if (key == "init") t.init = init_kind_from_string(value);
    else if (key == "checkpoint_every") t.checkpoint_every = parse_int(key, value);
    else if (key == "weights.lambda_spl") t.weights.lambda_spl = parse_double(key, value);
    else if (key == "weights.lambda_ht") t.weights.lambda_ht = parse_double(key, value);
    else if (key == "weights.lambda_geo") t.weights.lambda_geo = parse_double(key, value);
    else if (key == "hough.M") t.hough.M = parse_int(key, value);
    else if (key == "hough.theta_max") t.hough.theta_max = parse_double(key, value);
    else if (key == "hough.coord_mode") t.hough.coord_mode = hough_coord_mode_from_string(value);
    else if (key == "hough.variant") t.hough.variant = hough_variant_from_string(value);
    else if (key == "net.base_width") t.net.base_width = parse_int(key, value);
    else if (key == "net.n_downsamples") t.net.n_downsamples = parse_int(key, value);
    else if (key == "net.n_resblocks") t.net.n_resblocks = parse_int(key, value);
    else if (key == "net.disc_base_width") t.net.disc_base_width = parse_int(key, value);
    else if (key == "metrics.tolerance_px") cfg.eval.tolerance_px = parse_double(key, value);
    else if (key == "metrics.beta") cfg.eval.beta = parse_double(key, value);
    else if (key == "metrics.threshold") cfg.threshold = parse_double(key, value);
    else if (key == "metrics.aggregation") cfg.eval.aggregation = aggregation_from_string(value);
    else if (key == "metrics.distance") cfg.eval.distance = pixel_distance_from_string(value);
    else if (key == "data.class_filter") cfg.class_filter = parse_list(value);
    else throw ConfigError("unknown config key: " + key);
}

} // namespace

void set_run_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    apply_key(cfg, key, value);
}

const std::vector<std::string>& run_config_keys() {
    static const std::vector<std::string> keys = {
        "epochs", "lr0", "adam_beta1", "adam_beta2", "batch_size", "grad_accum",
        "image_size", "seed", "ablation", "transform", "init", "checkpoint_every",
        "weights.lambda_spl", "weights.lambda_ht", "weights.lambda_geo",
        "hough.M", "hough.theta_max", "hough.coord_mode", "hough.variant",
        "net.base_width", "net.n_downsamples", "net.n_resblocks", "net.disc_base_width",
        "metrics.tolerance_px", "metrics.beta", "metrics.threshold", "metrics.aggregation",
        "metrics.distance", "data.class_filter"};
    return keys;
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::size_t hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string train_config_canonical(const TrainConfig& t) {
    std::ostringstream out;
    out << "epochs = " << t.epochs << '\n'
        << "lr0 = " << fmt(t.lr0) << '\n'
        << "adam_beta1 = " << fmt(t.adam_beta1) << '\n'
        << "adam_beta2 = " << fmt(t.adam_beta2) << '\n'
        << "batch_size = " << t.batch_size << '\n'
        << "grad_accum = " << t.grad_accum << '\n'
        << "image_size = " << t.image_size << '\n'
        << "seed = " << t.seed << '\n'
        << "ablation = " << to_string(t.ablation) << '\n'
        << "transform = " << to_string(t.transform) << '\n'
        << "init = " << to_string(t.init) << '\n'
        << "checkpoint_every = " << t.checkpoint_every << '\n'
        << "weights.lambda_spl = " << fmt(t.weights.lambda_spl) << '\n'
        << "weights.lambda_ht = " << fmt(t.weights.lambda_ht) << '\n'
        << "weights.lambda_geo = " << fmt(t.weights.lambda_geo) << '\n'
        << "hough.M = " << t.hough.M << '\n'
        << "hough.theta_max = " << fmt(t.hough.theta_max) << '\n'
        << "hough.coord_mode = " << to_string(t.hough.coord_mode) << '\n'
        << "hough.variant = " << to_string(t.hough.variant) << '\n'
        << "net.base_width = " << t.net.base_width << '\n'
        << "net.n_downsamples = " << t.net.n_downsamples << '\n'
        << "net.n_resblocks = " << t.net.n_resblocks << '\n'
        << "net.disc_base_width = " << t.net.disc_base_width << '\n';
    return out.str();
}

std::string run_config_canonical(const RunConfig& cfg) {
    std::ostringstream out;
    out << train_config_canonical(cfg.train)
        << "metrics.tolerance_px = " << fmt(cfg.eval.tolerance_px) << '\n'
        << "metrics.beta = " << fmt(cfg.eval.beta) << '\n'
        << "metrics.threshold = " << fmt(cfg.threshold) << '\n'
        << "metrics.aggregation = " << to_string(cfg.eval.aggregation) << '\n'
        << "metrics.distance = " << to_string(cfg.eval.distance) << '\n'
        << "data.class_filter = " << join(cfg.class_filter) << '\n';
    return out.str();
}

std::string config_hash_hex(const TrainConfig& cfg) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(train_config_canonical(cfg));
    return out.str();
}

} // namespace plgan
