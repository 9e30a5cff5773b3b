#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "plgan/rng.hpp"
#include "plgan/tensor.hpp"

namespace plgan::testing {

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

inline Tensor random_mask(int h, int w, Rng& rng, double density = 0.3) {
    Tensor t({h, w});
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform() < density ? 1.0f : 0.0f;
    return t;
}

// Probabilities kept away from 0/1 so clamps and L1 ties stay inactive.
inline Tensor random_probs(int h, int w, Rng& rng, double lo = 0.05, double hi = 0.95) {
    return random_tensor({h, w}, rng, lo, hi);
}

// Unique fresh directory under the system temp root; removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("plgan_" + tag + "_" + std::to_string(++counter) + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

} // namespace plgan::testing
