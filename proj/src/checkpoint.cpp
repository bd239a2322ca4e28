#include "svc/checkpoint.hpp"

#include "svc/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace svc {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'S', 'V', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

json meta_to_json(const ModelCheckpoint& ckpt, std::int64_t parameter_count) {
    const ModelConfig& mc = ckpt.model.config();
    json stats = json::array();
    for (const auto& [singer, s] : ckpt.f0_stats)
        stats.push_back({{"singer", singer},
                         {"mean_log_f0", s.mean_log_f0},
                         {"std_log_f0", s.std_log_f0},
                         {"n_voiced_frames", s.n_voiced_frames}});
    return json{
        {"model",
         {{"n_singers", mc.n_singers},
          {"latent_dim", mc.latent_dim},
          {"singer_dim", mc.singer_dim},
          {"sp_dim", mc.sp_dim},
          {"condition_on_f0", mc.condition_on_f0}}},
        {"sample_rate_hz", ckpt.sample_rate_hz},
        {"frame_shift_us", ckpt.frame_shift_us},
        {"scaler",
         {{"log_f0_min", ckpt.scaler.log_f0_min},
          {"log_f0_max", ckpt.scaler.log_f0_max}}},
        {"f0_stats", stats},
        {"roster", ckpt.roster},
        {"training_step", ckpt.training_step},
        {"seed", ckpt.seed},
        {"parameter_count", parameter_count},
    };
}

[[noreturn]] void fail_corrupt(const std::filesystem::path& path,
                               const std::string& what) {
    throw CorruptionError(path.string() + ": " + what);
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, ModelCheckpoint& ckpt) {
    nn::ParamSet<float> params = ckpt.model.all_params();
    const std::string meta = meta_to_json(ckpt, params.total_size()).dump();

    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw WriteError(tmp.string() + ": cannot open for writing");
        out.write(kMagic, 4);
        const std::uint32_t version = kVersion;
        out.write(reinterpret_cast<const char*>(&version), sizeof(version));
        const std::uint64_t meta_len = meta.size();
        out.write(reinterpret_cast<const char*>(&meta_len), sizeof(meta_len));
        out.write(meta.data(), static_cast<std::streamsize>(meta.size()));

        const std::uint32_t n_tensors = static_cast<std::uint32_t>(params.count());
        out.write(reinterpret_cast<const char*>(&n_tensors), sizeof(n_tensors));
        for (const auto& v : params.views()) {
            const std::uint32_t name_len = static_cast<std::uint32_t>(v.name.size());
            const std::uint32_t rows = static_cast<std::uint32_t>(v.rows);
            const std::uint32_t cols = static_cast<std::uint32_t>(v.cols);
            out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
            out.write(v.name.data(), name_len);
            out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
            out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
            out.write(reinterpret_cast<const char*>(v.value),
                      static_cast<std::streamsize>(v.size() * sizeof(float)));
        }
        if (!out)
            throw WriteError(tmp.string() + ": write failed");
    }

    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw WriteError(path.string() + ": rename failed: " + ec.message());
    }
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(path.string() + ": cannot open for reading");

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path.string() + ": bad magic, not a checkpoint");
    std::uint32_t version = 0;
    if (!in.read(reinterpret_cast<char*>(&version), sizeof(version)))
        throw FormatError(path.string() + ": truncated header");
    if (version != kVersion)
        throw FormatError(path.string() + ": unsupported version " +
                          std::to_string(version));

    std::uint64_t meta_len = 0;
    if (!in.read(reinterpret_cast<char*>(&meta_len), sizeof(meta_len)))
        fail_corrupt(path, "truncated metadata length");
    if (meta_len > (1u << 26))
        fail_corrupt(path, "implausible metadata size " + std::to_string(meta_len));
    std::string meta(meta_len, '\0');
    if (!in.read(meta.data(), static_cast<std::streamsize>(meta_len)))
        fail_corrupt(path, "truncated metadata");

    json j;
    try {
        j = json::parse(meta);
    } catch (const json::exception& e) {
        fail_corrupt(path, std::string("metadata is not valid JSON: ") + e.what());
    }

    ModelConfig mc;
    try {
        const json& m = j.at("model");
        mc.n_singers = m.at("n_singers").get<int>();
        mc.latent_dim = m.at("latent_dim").get<int>();
        mc.singer_dim = m.at("singer_dim").get<int>();
        mc.sp_dim = m.at("sp_dim").get<int>();
        mc.condition_on_f0 = m.at("condition_on_f0").get<bool>();
        mc.validate();
    } catch (const ConfigError& e) {
        fail_corrupt(path, std::string("bad model configuration: ") + e.what());
    } catch (const json::exception& e) {
        fail_corrupt(path, std::string("bad model metadata: ") + e.what());
    }

    ModelCheckpoint ckpt{VawGanModel(mc)};
    try {
        ckpt.sample_rate_hz = j.at("sample_rate_hz").get<std::uint32_t>();
        ckpt.frame_shift_us = j.at("frame_shift_us").get<std::uint32_t>();
        ckpt.scaler.log_f0_min = j.at("scaler").at("log_f0_min").get<double>();
        ckpt.scaler.log_f0_max = j.at("scaler").at("log_f0_max").get<double>();
        for (const auto& s : j.at("f0_stats")) {
            F0Stats st;
            st.mean_log_f0 = s.at("mean_log_f0").get<double>();
            st.std_log_f0 = s.at("std_log_f0").get<double>();
            st.n_voiced_frames = s.at("n_voiced_frames").get<std::int64_t>();
            ckpt.f0_stats[s.at("singer").get<int>()] = st;
        }
        if (j.contains("roster"))
            ckpt.roster = j.at("roster").get<std::map<std::string, int>>();
        ckpt.training_step = j.at("training_step").get<std::int64_t>();
        ckpt.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        fail_corrupt(path, std::string("bad metadata: ") + e.what());
    }

    nn::ParamSet<float> params = ckpt.model.all_params();
    const std::int64_t expected_count = j.value("parameter_count", std::int64_t{-1});
    if (expected_count != params.total_size())
        fail_corrupt(path, "parameter count " + std::to_string(expected_count) +
                           " in metadata, configuration implies " +
                           std::to_string(params.total_size()));

    std::uint32_t n_tensors = 0;
    if (!in.read(reinterpret_cast<char*>(&n_tensors), sizeof(n_tensors)))
        fail_corrupt(path, "truncated tensor count");
    if (n_tensors != params.count())
        fail_corrupt(path, std::to_string(n_tensors) + " tensors in file, " +
                           "configuration implies " + std::to_string(params.count()));

    for (const auto& v : params.views()) {
        std::uint32_t name_len = 0;
        if (!in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len)) ||
            name_len > 4096)
            fail_corrupt(path, "truncated tensor header at " + v.name);
        std::string name(name_len, '\0');
        std::uint32_t rows = 0, cols = 0;
        if (!in.read(name.data(), name_len) ||
            !in.read(reinterpret_cast<char*>(&rows), sizeof(rows)) ||
            !in.read(reinterpret_cast<char*>(&cols), sizeof(cols)))
            fail_corrupt(path, "truncated tensor header at " + v.name);
        if (name != v.name)
            fail_corrupt(path, "tensor order mismatch: file has '" + name +
                               "', expected '" + v.name + "'");
        if (rows != static_cast<std::uint32_t>(v.rows) ||
            cols != static_cast<std::uint32_t>(v.cols))
            fail_corrupt(path, "tensor " + name + " is " + std::to_string(rows) +
                               "x" + std::to_string(cols) + ", expected " +
                               std::to_string(v.rows) + "x" + std::to_string(v.cols));
        if (!in.read(reinterpret_cast<char*>(v.value),
                     static_cast<std::streamsize>(v.size() * sizeof(float))))
            fail_corrupt(path, "truncated tensor data at " + name);
    }
    if (in.peek() != std::char_traits<char>::eof())
        fail_corrupt(path, "trailing bytes after last tensor");
    return ckpt;
}

} // namespace svc
