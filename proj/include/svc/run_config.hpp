#pragma once

#include "svc/model.hpp"
#include "svc/training.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace svc {

// Command templates for the external vocoder. {input}/{output} are replaced
// with shell-quoted paths.
struct VocoderConfig {
    std::string analysis_cmd;   // WAV in, feature file out
    std::string synthesis_cmd;  // feature file in, WAV out
};

// One experiment's settings, loaded from a JSON file. All randomness in a
// run flows from the single top-level seed.
struct RunConfig {
    std::filesystem::path feature_dir;     // extracted features, one dir per singer
    std::filesystem::path checkpoint_dir;
    std::filesystem::path report_dir;
    std::map<std::string, int> singers;    // name -> contiguous index from 0
    ModelConfig model;                     // n_singers derived from `singers`
    TrainingConfig training;               // seed mirrored from the top level
    VocoderConfig vocoder;
    std::uint64_t seed = 0;

    // Parses and validates; unknown keys are errors so typos do not silently
    // fall back to defaults. Throws ConfigError (also wraps JSON errors).
    static RunConfig load(const std::filesystem::path& path);

    void validate() const;

    // Serialized form with every default resolved; written next to training
    // outputs so a checkpoint's provenance stays reproducible.
    std::string to_json() const;
};

} // namespace svc
