#pragma once

#include "svc/feature_track.hpp"
#include "svc/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace svc {

// A trained model plus everything needed to convert with it later: the
// corpus F0 statistics, the conditioning scaler, the singer roster, and the
// analysis settings the training features were extracted with.
struct ModelCheckpoint {
    explicit ModelCheckpoint(VawGanModel m) : model(std::move(m)) {}

    VawGanModel model;
    std::uint32_t sample_rate_hz = 16000;
    std::uint32_t frame_shift_us = 5000;
    CorpusScaler scaler;
    std::map<int, F0Stats> f0_stats;        // per singer index
    std::map<std::string, int> roster;      // singer name -> index
    std::int64_t training_step = 0;
    std::uint64_t seed = 0;
};

// Binary container "SVCK" version 1: a JSON metadata blob followed by named
// float32 tensors. Writing is atomic (temp + rename). Loading rebuilds the
// networks from the stored configuration and fails hard — FormatError or
// CorruptionError — when the tensor names, shapes, or total parameter count
// do not match what that configuration implies.
void save_checkpoint(const std::filesystem::path& path, ModelCheckpoint& ckpt);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

} // namespace svc
