#include "svc/commands.hpp"

#include "svc/conversion.hpp"
#include "svc/errors.hpp"
#include "svc/evaluation.hpp"
#include "svc/feature_io.hpp"
#include "svc/normalization.hpp"
#include "svc/training.hpp"
#include "svc/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

namespace svc {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> sorted_files_with_extension(const fs::path& dir,
                                                  const std::string& ext) {
    std::vector<fs::path> files;
    if (!fs::exists(dir)) return files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ext)
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// Feature cache layout: <feature_dir>/<singer_name>/**.svcf
std::vector<FeatureTrack> load_corpus(const RunConfig& cfg) {
    std::vector<FeatureTrack> tracks;
    for (const auto& [name, id] : cfg.singers) {
        const fs::path dir = cfg.feature_dir / name;
        const auto files = sorted_files_with_extension(dir, ".svcf");
        if (files.empty())
            throw InsufficientDataError("no feature files for singer '" + name +
                                        "' under " + dir.string() +
                                        "; run `svc extract` first");
        for (const auto& f : files) {
            FeatureTrack t = read_feature_file(f);
            t.singer_id = id;
            if (!tracks.empty() &&
                (t.sample_rate_hz != tracks.front().sample_rate_hz ||
                 t.frame_shift_us != tracks.front().frame_shift_us))
                throw CompatibilityError(f.string() +
                                         ": analysis settings differ from the rest "
                                         "of the corpus");
            tracks.push_back(std::move(t));
        }
    }
    return tracks;
}

std::map<int, F0Stats> per_singer_stats(const RunConfig& cfg,
                                        const std::vector<FeatureTrack>& tracks) {
    std::map<int, F0Stats> stats;
    for (const auto& [name, id] : cfg.singers) {
        std::vector<const FeatureTrack*> mine;
        for (const auto& t : tracks)
            if (t.singer_id == id) mine.push_back(&t);
        try {
            stats[id] = compute_f0_stats(mine);
        } catch (const std::exception& e) {
            throw DegenerateDataError("F0 statistics for singer '" + name +
                                      "': " + e.what());
        }
    }
    return stats;
}

} // namespace

int cmd_extract(const RunConfig& cfg, const fs::path& audio_dir, std::ostream& out) {
    if (cfg.vocoder.analysis_cmd.empty()) {
        out << "error: config has no vocoder.analysis_cmd\n";
        return 1;
    }
    int n_ok = 0, n_cached = 0, n_errors = 0;
    for (const auto& [name, id] : cfg.singers) {
        const fs::path in_dir = audio_dir / name;
        if (!fs::is_directory(in_dir)) {
            out << "extract singer=" << name << " error: no directory "
                << in_dir.string() << "\n";
            ++n_errors;
            continue;
        }
        for (const auto& wav : sorted_files_with_extension(in_dir, ".wav")) {
            fs::path rel = fs::relative(wav, in_dir);
            fs::path dst = cfg.feature_dir / name / rel;
            dst.replace_extension(".svcf");
            const std::string label = name + "/" + rel.string();
            try {
                std::error_code ec;
                if (fs::exists(dst) &&
                    fs::last_write_time(dst, ec) >= fs::last_write_time(wav, ec) &&
                    !ec) {
                    out << "extract " << label << " cached\n";
                    ++n_cached;
                    continue;
                }
                const WavInfo info = read_wav_info(wav);
                if (info.sample_rate_hz != 16000 || info.channels != 1 ||
                    info.bits_per_sample != 16)
                    throw FormatError("need 16000 Hz mono 16-bit, got " +
                                      std::to_string(info.sample_rate_hz) + " Hz " +
                                      std::to_string(info.channels) + "ch " +
                                      std::to_string(info.bits_per_sample) + "-bit");
                fs::create_directories(dst.parent_path());
                run_vocoder_tool(cfg.vocoder.analysis_cmd, wav, dst);
                const FeatureTrack t = read_feature_file(dst);
                if (t.sample_rate_hz != info.sample_rate_hz || t.n_frames() == 0) {
                    std::error_code ignored;
                    fs::remove(dst, ignored);
                    throw CorruptionError("analysis produced " +
                                          std::to_string(t.n_frames()) +
                                          " frames at " +
                                          std::to_string(t.sample_rate_hz) + " Hz");
                }
                out << "extract " << label << " ok frames=" << t.n_frames() << "\n";
                ++n_ok;
            } catch (const std::exception& e) {
                out << "extract " << label << " error: " << e.what() << "\n";
                ++n_errors;
            }
        }
    }
    out << "extract done ok=" << n_ok << " cached=" << n_cached
        << " errors=" << n_errors << "\n";
    return n_errors == 0 ? 0 : 1;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    try {
        std::vector<FeatureTrack> tracks = load_corpus(cfg);
        TrainingData data;
        data.sample_rate_hz = tracks.front().sample_rate_hz;
        data.frame_shift_us = tracks.front().frame_shift_us;
        data.roster = cfg.singers;
        data.f0_stats = per_singer_stats(cfg, tracks);
        data.scaler = compute_corpus_scaler(tracks);

        Eigen::Index total_frames = 0;
        for (auto& t : tracks) {
            TrainingData::Utterance u;
            u.singer_id = t.singer_id;
            u.features = normalize_track(t, data.scaler);
            total_frames += u.features.n_frames();
            data.utterances.push_back(std::move(u));
            t = FeatureTrack{};  // free as we go
        }
        tracks.clear();
        out << "train singers=" << cfg.singers.size()
            << " utterances=" << data.utterances.size() << " frames=" << total_frames
            << " seed=" << cfg.training.seed << "\n";

        fs::create_directories(cfg.checkpoint_dir);
        TrainHooks hooks;
        hooks.on_epoch = [&](const EpochLog& log, VawGanModel&) {
            out << "epoch=" << log.epoch << "/" << log.total_epochs
                << " stage=" << (log.adversarial ? "adversarial" : "vae")
                << " kl=" << fmt(log.kl) << " recon=" << fmt(log.reconstruction)
                << " j_wgan=" << fmt(log.j_wgan) << " sec=" << fmt(log.seconds)
                << " step=" << log.step << "\n";
        };
        hooks.on_checkpoint = [&](ModelCheckpoint& ck, int epoch) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "epoch_%03d.svck", epoch);
            const fs::path p = cfg.checkpoint_dir / buf;
            save_checkpoint(p, ck);
            out << "checkpoint " << p.string() << "\n";
        };

        ModelCheckpoint trained = train(data, cfg.model, cfg.training, hooks);
        const fs::path final_path = cfg.checkpoint_dir / "final.svck";
        save_checkpoint(final_path, trained);
        {
            std::ofstream cfg_out(cfg.checkpoint_dir / "run_config.json");
            cfg_out << cfg.to_json();
        }
        out << "train done checkpoint=" << final_path.string()
            << " steps=" << trained.training_step
            << " params=" << trained.model.parameter_count() << "\n";
        return 0;
    } catch (const DivergenceError& e) {
        out << "error: " << e.what() << "\n";
        if (e.last_good()) {
            const fs::path p = cfg.checkpoint_dir / "diverged_last_good.svck";
            try {
                save_checkpoint(p, *e.last_good());
                out << "last good state saved to " << p.string() << "\n";
            } catch (const std::exception& save_err) {
                out << "error: could not save last good state: " << save_err.what()
                    << "\n";
            }
        }
        return 1;
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_convert(const RunConfig& cfg, const ConvertArgs& args, std::ostream& out) {
    try {
        const fs::path ckpt_path = args.checkpoint.empty()
                                       ? cfg.checkpoint_dir / "final.svck"
                                       : args.checkpoint;
        const ModelCheckpoint ckpt = load_checkpoint(ckpt_path);
        const auto& roster = ckpt.roster.empty() ? cfg.singers : ckpt.roster;

        const auto find_singer = [&](const std::string& who) {
            const auto it = roster.find(who);
            if (it == roster.end()) {
                std::string names;
                for (const auto& [n, _] : roster)
                    names += (names.empty() ? "" : ", ") + n;
                throw CompatibilityError("unknown singer '" + who +
                                         "'; checkpoint knows: " + names);
            }
            return it->second;
        };
        const int target_id = find_singer(args.target);

        FeatureTrack track;
        if (args.input.extension() == ".wav") {
            if (cfg.vocoder.analysis_cmd.empty())
                throw ConfigError("converting from WAV needs vocoder.analysis_cmd");
            const WavInfo info = read_wav_info(args.input);
            if (info.sample_rate_hz != ckpt.sample_rate_hz || info.channels != 1)
                throw CompatibilityError(args.input.string() + ": need mono " +
                                         std::to_string(ckpt.sample_rate_hz) +
                                         " Hz audio, got " +
                                         std::to_string(info.sample_rate_hz) +
                                         " Hz " + std::to_string(info.channels) +
                                         "ch");
            fs::path analysed = args.output_wav;
            analysed.replace_extension(".source.svcf");
            if (!analysed.parent_path().empty())
                fs::create_directories(analysed.parent_path());
            run_vocoder_tool(cfg.vocoder.analysis_cmd, args.input, analysed);
            track = read_feature_file(analysed);
        } else {
            track = read_feature_file(args.input);
        }
        if (!args.source.empty())
            track.singer_id = find_singer(args.source);

        if (!args.output_wav.parent_path().empty())
            fs::create_directories(args.output_wav.parent_path());

        ConversionNotes notes;
        const FeatureTrack converted = convert(track, target_id, ckpt, &notes);
        if (notes.used_utterance_f0_stats)
            out << "note: no stored F0 statistics for the source; using this "
                   "utterance's own\n";
        if (notes.clamped_f0_frames > 0)
            out << "note: clamped transformed F0 on " << notes.clamped_f0_frames
                << " frame(s)\n";

        if (cfg.vocoder.synthesis_cmd.empty())
            throw ConfigError("config has no vocoder.synthesis_cmd");
        resynthesize(converted, cfg.vocoder.synthesis_cmd, args.output_wav);
        fs::path features_path = args.output_wav;
        features_path.replace_extension(".svcf");
        out << "convert done wav=" << args.output_wav.string()
            << " features=" << features_path.string()
            << " frames=" << converted.n_frames() << " target=" << args.target
            << "\n";
        return 0;
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_evaluate(const RunConfig& cfg, const fs::path& converted_dir,
                 const fs::path& reference_dir, const fs::path& manifest,
                 const fs::path& out_report, std::ostream& out) {
    std::ifstream in(manifest);
    if (!in) {
        out << "error: cannot open manifest " << manifest.string() << "\n";
        return 1;
    }
    if (!out_report.parent_path().empty()) {
        std::error_code ec;
        fs::create_directories(out_report.parent_path(), ec);
    }
    std::ofstream report(out_report);
    if (!report) {
        out << "error: cannot write report " << out_report.string() << "\n";
        return 1;
    }
    const auto emit = [&](const std::string& line) {
        report << line << "\n";
        out << line << "\n";
    };

    std::vector<double> mcds, zero_efforts;
    int n_errors = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        std::string conv_rel, ref_rel, src_rel;
        if (!(fields >> conv_rel >> ref_rel)) continue;  // blank or comment
        fields >> src_rel;
        try {
            const FeatureTrack conv_track = read_feature_file(converted_dir / conv_rel);
            const FeatureTrack ref_track = read_feature_file(reference_dir / ref_rel);
            McepSequence a = sp_to_mcep(conv_track.sp);
            McepSequence b = sp_to_mcep(ref_track.sp);
            a.id = conv_rel;
            b.id = ref_rel;
            const MetricReport r = mcd(a, b);
            std::string msg = "pair conv=" + conv_rel + " ref=" + ref_rel +
                              " mcd_db=" + fmt(r.mcd_db) +
                              " frames=" + std::to_string(r.aligned_frames);
            if (!src_rel.empty()) {
                const FeatureTrack src_track = read_feature_file(reference_dir / src_rel);
                const MetricReport z = zero_effort_mcd(src_track, ref_track);
                msg += " zero_effort_db=" + fmt(z.mcd_db);
                zero_efforts.push_back(z.mcd_db);
            }
            emit(msg);
            mcds.push_back(r.mcd_db);
        } catch (const std::exception& e) {
            emit("pair conv=" + conv_rel + " ref=" + ref_rel + " error: " + e.what());
            ++n_errors;
        }
    }

    const auto mean_std = [](const std::vector<double>& v) {
        const double mean =
            std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double var = 0.0;
        for (const double x : v) var += (x - mean) * (x - mean);
        return std::pair(mean, std::sqrt(var / static_cast<double>(v.size())));
    };
    std::string summary = "# pairs=" + std::to_string(mcds.size() + n_errors) +
                          " ok=" + std::to_string(mcds.size()) +
                          " errors=" + std::to_string(n_errors);
    if (!mcds.empty()) {
        const auto [m, s] = mean_std(mcds);
        summary += " mean_mcd_db=" + fmt(m) + " std_mcd_db=" + fmt(s);
    }
    emit(summary);
    if (!zero_efforts.empty()) {
        const auto [m, s] = mean_std(zero_efforts);
        emit("# zero_effort mean_db=" + fmt(m) + " std_db=" + fmt(s) +
             " n=" + std::to_string(zero_efforts.size()));
    }
    return n_errors == 0 ? 0 : 1;
}

int cmd_stats(const RunConfig& cfg, std::ostream& out) {
    try {
        const std::vector<FeatureTrack> tracks = load_corpus(cfg);
        const auto stats = per_singer_stats(cfg, tracks);
        for (const auto& [name, id] : cfg.singers) {
            Eigen::Index frames = 0;
            int n_tracks = 0;
            for (const auto& t : tracks)
                if (t.singer_id == id) {
                    frames += t.n_frames();
                    ++n_tracks;
                }
            const F0Stats& s = stats.at(id);
            out << "singer=" << name << " id=" << id << " tracks=" << n_tracks
                << " frames=" << frames << " voiced=" << s.n_voiced_frames
                << " mean_log_f0=" << fmt(s.mean_log_f0) << " ("
                << fmt(std::exp(s.mean_log_f0)) << " Hz)"
                << " std_log_f0=" << fmt(s.std_log_f0) << "\n";
        }
        const CorpusScaler scaler = compute_corpus_scaler(tracks);
        out << "corpus log_f0_min=" << fmt(scaler.log_f0_min)
            << " log_f0_max=" << fmt(scaler.log_f0_max) << " ("
            << fmt(std::exp(scaler.log_f0_min)) << " Hz to "
            << fmt(std::exp(scaler.log_f0_max)) << " Hz)\n";
        return 0;
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace svc
