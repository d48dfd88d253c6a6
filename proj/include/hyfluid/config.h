#pragma once

#include <string>

#include "hyfluid/dataset.h"
#include "hyfluid/train.h"

namespace hyfluid {

// Plain-text key=value run configuration ('#' comments, blank lines ignored).
// Unknown keys are rejected; values are validated on load.
struct RunConfig {
    GridConfig sigma_grid = GridConfig::density_default();
    GridConfig vel_grid = GridConfig::velocity_default();
    TrainConfig train;
    GenConfig gen;
    std::string data_dir = "data";
    std::string out_dir = "out";

    void set(const std::string& key, const std::string& value);  // throws on unknown key
    void validate() const;
    static RunConfig load(const std::string& path);
    static RunConfig from_text(const std::string& text);
};

}  // namespace hyfluid
