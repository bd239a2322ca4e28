#pragma once

#include "svc/feature_track.hpp"

#include <filesystem>

namespace svc {

// Binary feature container, format "SVCF" version 1.
//
// Layout (all integers little-endian):
//   char[4]  magic "SVCF"
//   u32      version (1)
//   u32      sample_rate_hz
//   u32      frame_shift_us
//   u32      n_frames
//   u32      sp_dim (513)
//   u32      ap_dim (513)
//   then n_frames records of (1 + sp_dim + ap_dim) float32:
//     f0, sp[0..sp_dim), ap[0..ap_dim)
//
// read_feature_file throws FormatError on bad magic/version/dims and
// CorruptionError when the payload size disagrees with the header or values
// violate track invariants. The returned track always passes validate().
FeatureTrack read_feature_file(const std::filesystem::path& path);

// Validates the track, then writes it atomically (temp file + rename) so a
// failed write never leaves a partial file at `path`. Throws WriteError on
// I/O failure, InvalidTrackError if the track is malformed.
void write_feature_file(const std::filesystem::path& path, const FeatureTrack& track);

} // namespace svc
