#pragma once

#include "svc/checkpoint.hpp"
#include "svc/feature_track.hpp"

#include <filesystem>
#include <string>

namespace svc {

// Optional detail about how a conversion was carried out.
struct ConversionNotes {
    // True when source F0 statistics came from the utterance itself because
    // the checkpoint had none for the source singer (or the singer was
    // unknown).
    bool used_utterance_f0_stats = false;
    // Voiced frames whose transformed F0 had to be clamped into the valid
    // track range.
    Eigen::Index clamped_f0_frames = 0;
};

// Convert one utterance to `target_singer`'s voice:
//   1. normalize with the checkpoint's corpus scaler,
//   2. encode and keep the posterior mean (no sampling at conversion time),
//   3. transform F0 to the target's log-Gaussian statistics,
//   4. decode under the target embedding and transformed F0,
//   5. restore the source frame energies; aperiodicity passes through.
//
// Deterministic, source track untouched. The conditioning input clamps
// scaled F0 into [-1, 1]; the Hz values in the output keep the transform
// result (limited only by the track's validity range). Throws
// CompatibilityError (unknown singer, analysis settings differing from the
// checkpoint's), plus whatever normalization/statistics errors apply.
FeatureTrack convert(const FeatureTrack& source, int target_singer,
                     const ModelCheckpoint& checkpoint,
                     ConversionNotes* notes = nullptr);

// Substitute {input}/{output} into a command template and run it through the
// shell. Throws ConfigError when a placeholder is missing, SubprocessError
// when the command fails — with its captured stderr in the message — after
// deleting whatever half-written output it left behind.
void run_vocoder_tool(const std::string& cmd_template,
                      const std::filesystem::path& input,
                      const std::filesystem::path& output);

// Render a track to a playable file with an external synthesis command. The
// track is first written next to `out_wav` (same name, .svcf extension) and
// kept there. The produced WAV must match the track's sample rate and its
// duration within a couple of frame shifts, or the file is removed and
// SubprocessError thrown. Returns out_wav.
std::filesystem::path resynthesize(const FeatureTrack& track,
                                   const std::string& synthesis_cmd,
                                   const std::filesystem::path& out_wav);

} // namespace svc
