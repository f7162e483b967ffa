#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "charc/learning.hpp"
#include "charc/measures.hpp"
#include "charc/quality.hpp"
#include "charc/search.hpp"
#include "charc/substrate.hpp"
#include "charc/tasks.hpp"

namespace charc {

struct TaskConfig {
    std::size_t length = 6000;
    std::uint64_t seed = 7;
    std::vector<double> lambda_grid = kDefaultLambdaGrid;
    double train_fraction = kDefaultTrainFraction;
    double validation_fraction = kDefaultValidationFraction;
    std::string laser_path; ///< empty selects default_laser_path()
};

struct QualityConfig {
    VoxelSize voxel;
    std::size_t interval = 200;
};

/// Every module's settings. Defaults equal the published framework values
/// where those exist.
struct FrameworkConfig {
    std::uint64_t seed = 1;
    std::size_t runs = 1;
    SubstrateSpec substrate = SubstrateSpec::esn(25);
    MeasureConfig measures;
    NsParams search;
    TaskConfig tasks;
    TrainSpec learning;
    QualityConfig quality;

    void validate() const;
    /// Canonical INI text; parse_config(to_ini()) reproduces this config.
    std::string to_ini() const;
};

/// Parses INI text with sections framework, substrate, measures, search,
/// tasks, learning and quality. `overrides` ("section.key" -> value) are
/// applied after the file. Unknown sections or keys throw ConfigError.
FrameworkConfig parse_config(const std::string& ini_text, const std::map<std::string, std::string>& overrides = {});
FrameworkConfig load_config(const std::filesystem::path& path,
                            const std::map<std::string, std::string>& overrides = {});

}  // namespace charc
