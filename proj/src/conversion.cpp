#include "svc/conversion.hpp"

#include "svc/errors.hpp"
#include "svc/feature_io.hpp"
#include "svc/normalization.hpp"
#include "svc/wav.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

namespace svc {

FeatureTrack convert(const FeatureTrack& source, int target_singer,
                     const ModelCheckpoint& checkpoint, ConversionNotes* notes) {
    const ModelConfig& mc = checkpoint.model.config();
    if (source.sample_rate_hz != checkpoint.sample_rate_hz ||
        source.frame_shift_us != checkpoint.frame_shift_us)
        throw CompatibilityError(
            "utterance analysed at " + std::to_string(source.sample_rate_hz) + " Hz/" +
            std::to_string(source.frame_shift_us) + " us, checkpoint trained at " +
            std::to_string(checkpoint.sample_rate_hz) + " Hz/" +
            std::to_string(checkpoint.frame_shift_us) + " us");
    if (target_singer < 0 || target_singer >= mc.n_singers)
        throw CompatibilityError("target singer " + std::to_string(target_singer) +
                                 " outside model table of " +
                                 std::to_string(mc.n_singers));
    const auto tgt_stats_it = checkpoint.f0_stats.find(target_singer);
    if (tgt_stats_it == checkpoint.f0_stats.end())
        throw CompatibilityError("checkpoint has no F0 statistics for singer " +
                                 std::to_string(target_singer));

    ConversionNotes local_notes;
    F0Stats src_stats;
    const auto src_stats_it = checkpoint.f0_stats.find(source.singer_id);
    if (source.singer_id >= 0 && src_stats_it != checkpoint.f0_stats.end()) {
        src_stats = src_stats_it->second;
    } else {
        src_stats = compute_f0_stats(source);
        local_notes.used_utterance_f0_stats = true;
    }

    const NormalizedTrack norm = normalize_track(source, checkpoint.scaler);

    // Inference wants the deterministic posterior mean. Forward passes cache
    // activations, so run on a private copy and leave the checkpoint const.
    VawGanModel model = checkpoint.model;
    const LatentCode code = model.encode(norm.log_sp_norm.cast<float>());

    std::vector<float> f0_out =
        lg_transform_f0(source.f0, src_stats, tgt_stats_it->second);
    Eigen::VectorXf f0_cond(source.n_frames());
    for (Eigen::Index i = 0; i < source.n_frames(); ++i) {
        float& hz = f0_out[static_cast<std::size_t>(i)];
        if (hz > 0.0f) {
            const float clamped = std::clamp(hz, kMinVoicedF0Hz, kMaxVoicedF0Hz);
            if (clamped != hz) {
                ++local_notes.clamped_f0_frames;
                hz = clamped;
            }
            f0_cond[i] =
                static_cast<float>(scale_f0_value(hz, checkpoint.scaler));
        } else {
            f0_cond[i] = 0.0f;
        }
    }

    const Eigen::MatrixXf decoded =
        model.decode(code.mean, target_singer,
                     mc.condition_on_f0 ? f0_cond : Eigen::VectorXf());

    FeatureTrack out;
    out.sample_rate_hz = source.sample_rate_hz;
    out.frame_shift_us = source.frame_shift_us;
    out.singer_id = target_singer;
    out.f0 = std::move(f0_out);
    out.sp = denormalize_track(decoded.cast<double>(), norm.energy);
    // The decoder's output is only approximately unit-sum in the linear
    // domain; dividing that residual out keeps each converted frame's total
    // energy equal to the source frame's, so the loudness contour survives
    // conversion regardless of how the model offsets its log spectra.
    for (Eigen::Index i = 0; i < out.sp.cols(); ++i) {
        const double got = out.sp.col(i).cast<double>().sum();
        if (got > 0.0)
            out.sp.col(i) *= static_cast<float>(norm.energy[i] / got);
    }
    out.ap = source.ap;
    if (notes) *notes = local_notes;
    return out;
}

namespace {

std::string shell_quote(const std::filesystem::path& p) {
    std::string s = p.string();
    std::string out = "'";
    for (const char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

std::string substitute(const std::string& tmpl, const std::string& key,
                       const std::string& value, bool* found) {
    std::string out;
    std::size_t at = 0;
    while (true) {
        const std::size_t hit = tmpl.find(key, at);
        if (hit == std::string::npos) {
            out.append(tmpl, at, std::string::npos);
            return out;
        }
        *found = true;
        out.append(tmpl, at, hit - at);
        out += value;
        at = hit + key.size();
    }
}

std::string read_tail(const std::filesystem::path& p, std::size_t max_bytes) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    std::string all((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    if (all.size() > max_bytes)
        all.erase(0, all.size() - max_bytes);
    return all;
}

} // namespace

void run_vocoder_tool(const std::string& cmd_template,
                      const std::filesystem::path& input,
                      const std::filesystem::path& output) {
    if (cmd_template.empty())
        throw ConfigError("vocoder command template is empty");
    bool has_in = false, has_out = false;
    std::string cmd = substitute(cmd_template, "{input}", shell_quote(input), &has_in);
    cmd = substitute(cmd, "{output}", shell_quote(output), &has_out);
    if (!has_in || !has_out)
        throw ConfigError("vocoder command needs {input} and {output} placeholders: " +
                          cmd_template);

    // Subshell so the redirect covers every command in the template, not
    // just the last one of a compound line.
    const auto err_file = std::filesystem::path(output.string() + ".stderr");
    cmd = "( " + cmd + " ) 2> " + shell_quote(err_file);

    const int rc = std::system(cmd.c_str());
    const std::string err_tail = read_tail(err_file, 2000);
    std::error_code ignored;
    std::filesystem::remove(err_file, ignored);

    const bool failed = rc == -1 || !WIFEXITED(rc) || WEXITSTATUS(rc) != 0;
    if (failed) {
        std::filesystem::remove(output, ignored);
        const int status = (rc != -1 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : rc;
        throw SubprocessError("command failed (status " + std::to_string(status) +
                              "): " + cmd +
                              (err_tail.empty() ? "" : "\nstderr: " + err_tail));
    }
    if (!std::filesystem::exists(output)) {
        throw SubprocessError("command reported success but produced no output: " +
                              cmd);
    }
}

std::filesystem::path resynthesize(const FeatureTrack& track,
                                   const std::string& synthesis_cmd,
                                   const std::filesystem::path& out_wav) {
    auto features_path = out_wav;
    features_path.replace_extension(".svcf");
    write_feature_file(features_path, track);

    run_vocoder_tool(synthesis_cmd, features_path, out_wav);

    WavInfo info;
    try {
        info = read_wav_info(out_wav);
    } catch (const FormatError& e) {
        std::error_code ignored;
        std::filesystem::remove(out_wav, ignored);
        throw SubprocessError(std::string("synthesis produced an invalid file: ") +
                              e.what());
    }
    const double got_s = static_cast<double>(info.n_samples) /
                         std::max<std::uint32_t>(info.sample_rate_hz, 1);
    const double want_s = static_cast<double>(track.n_frames()) *
                          track.frame_shift_us * 1e-6;
    const double tol_s = 2.5 * track.frame_shift_us * 1e-6;
    if (info.sample_rate_hz != track.sample_rate_hz ||
        std::abs(got_s - want_s) > tol_s) {
        std::error_code ignored;
        std::filesystem::remove(out_wav, ignored);
        throw SubprocessError(
            "synthesis output mismatch: got " + std::to_string(info.sample_rate_hz) +
            " Hz, " + std::to_string(got_s) + " s; expected " +
            std::to_string(track.sample_rate_hz) + " Hz, " + std::to_string(want_s) +
            " s");
    }
    return out_wav;
}

} // namespace svc
