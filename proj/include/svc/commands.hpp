#pragma once

#include "svc/run_config.hpp"

#include <filesystem>
#include <iosfwd>

namespace svc {

// Subcommand bodies behind the CLI. Each reports progress and per-item
// failures as lines on `out` and returns a process exit code: 0 only when
// every item succeeded. Exceptions do not escape; they become "error:" lines.

// Analyse <audio_dir>/<singer>/*.wav into the feature cache. Unreadable or
// non-16kHz-mono files are reported and skipped; up-to-date outputs are kept.
int cmd_extract(const RunConfig& cfg, const std::filesystem::path& audio_dir,
                std::ostream& out);

// Train on the feature cache and write checkpoints plus the resolved config.
int cmd_train(const RunConfig& cfg, std::ostream& out);

struct ConvertArgs {
    std::filesystem::path input;       // .wav (analysed first) or feature file
    std::string target;                // singer name from the roster
    std::string source;                // optional; enables stored F0 statistics
    std::filesystem::path checkpoint;  // empty = <checkpoint_dir>/final.svck
    std::filesystem::path output_wav;
};

int cmd_convert(const RunConfig& cfg, const ConvertArgs& args, std::ostream& out);

// Score converted utterances against references listed in a manifest file.
// Each line: <converted> <reference> [<source>] — paths relative to the two
// directories ('#' starts a comment). The optional source column adds the
// no-conversion baseline distortion for that pair.
int cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& converted_dir,
                 const std::filesystem::path& reference_dir,
                 const std::filesystem::path& manifest,
                 const std::filesystem::path& out_report, std::ostream& out);

// Print per-singer F0 statistics and the corpus conditioning range.
int cmd_stats(const RunConfig& cfg, std::ostream& out);

} // namespace svc
