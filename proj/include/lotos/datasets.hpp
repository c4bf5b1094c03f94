#pragma once

#include <map>
#include <string>

#include "lotos/common.hpp"

namespace lotos {

enum class Split : std::uint8_t { Train = 0, Test = 1 };

struct LabeledDataset {
    std::size_t dim = 0;
    std::size_t classes = 0;
    std::vector<Vector> inputs;  // each in [0,1]^dim
    std::vector<std::size_t> labels;
    std::vector<Split> splits;

    std::vector<std::size_t> indices_of(Split s) const;
    std::size_t size() const { return inputs.size(); }
    void validate() const;
};

// generator name + parameters; unknown names or missing parameters raise
// ConfigError
struct DatasetSpec {
    std::string generator;  // gaussian_blobs | concentric_rings | patch_textures
    std::map<std::string, double> params;

    double get(const std::string& key, double fallback) const;
};

LabeledDataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed);

// the desk experiment default: patch_textures, n=32, m=4, 2000 train / 1000 test
DatasetSpec desk_dataset_spec();

void save_dataset(const LabeledDataset& data, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

}  // namespace lotos
