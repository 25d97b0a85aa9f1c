#pragma once

#include <filesystem>
#include <string>

#include "posedec/decoder.hpp"
#include "posedec/losses.hpp"
#include "posedec/synth.hpp"
#include "posedec/targets.hpp"

namespace posedec {

// Whole-run configuration: one JSON file with skeleton / decode / loss /
// synth sections, each optional, unknown keys rejected everywhere.
struct RunConfig {
    SkeletonConfig skeleton = SkeletonConfig::coco();
    DecodeConfig decode;
    LossConfig loss;
    SceneSpec synth;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Resolution order: explicit path, then the POSEDEC_CONFIG environment
// variable, then built-in defaults.
RunConfig resolve_run_config(const std::string& explicit_path);

// Full dump of every setting, suitable as a starting config file.
std::string dump_run_config(const RunConfig& cfg);

}  // namespace posedec
