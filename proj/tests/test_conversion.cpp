#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "svc/conversion.hpp"
#include "svc/errors.hpp"
#include "svc/feature_io.hpp"
#include "svc/wav.hpp"
#include "support/test_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

using namespace svc;

namespace {

// Untrained but fully specified checkpoint: random weights, fabricated
// statistics. Conversion's structural contracts must hold regardless of
// training state.
ModelCheckpoint make_checkpoint(std::uint64_t seed = 99) {
    ModelConfig mc;
    mc.n_singers = 2;
    VawGanModel model(mc);
    nn::Rng rng(seed);
    model.init_params(rng);

    ModelCheckpoint ck(std::move(model));
    ck.scaler.log_f0_min = std::log(70.0);
    ck.scaler.log_f0_max = std::log(600.0);
    ck.f0_stats[0] = {std::log(200.0), 0.20, 4000};
    ck.f0_stats[1] = {std::log(330.0), 0.15, 4000};
    ck.roster = {{"alice", 0}, {"bob", 1}};
    return ck;
}

double median_voiced_f0(const FeatureTrack& t) {
    std::vector<float> v;
    for (float f : t.f0)
        if (f > 0.0f) v.push_back(f);
    REQUIRE_FALSE(v.empty());
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

std::string tool_cmd(const std::string& verb) {
    return "python3 '" SVC_TOOLS_DIR "/toyworld.py' " + verb + " {input} {output}";
}

} // namespace

TEST_CASE("conversion preserves structure and passthrough fields") {
    nn::Rng rng(1);
    FeatureTrack src = test::random_track(rng, 60);
    src.singer_id = 0;
    const FeatureTrack before = src;
    ModelCheckpoint ck = make_checkpoint();

    ConversionNotes notes;
    FeatureTrack out = convert(src, 1, ck, &notes);

    CHECK(out.n_frames() == src.n_frames());
    CHECK(out.singer_id == 1);
    CHECK(out.sample_rate_hz == src.sample_rate_hz);
    CHECK(out.frame_shift_us == src.frame_shift_us);
    CHECK_NOTHROW(out.validate());
    CHECK_FALSE(notes.used_utterance_f0_stats);

    // Aperiodicity passes through bit for bit, voicing mask is unchanged.
    CHECK((out.ap.array() == src.ap.array()).all());
    for (Eigen::Index i = 0; i < src.n_frames(); ++i) {
        CHECK((out.f0[i] > 0.0f) == (src.f0[i] > 0.0f));
    }

    // Per-frame energy survives conversion (up to float rounding).
    for (Eigen::Index i = 0; i < src.n_frames(); ++i) {
        const double e_src = src.sp.col(i).cast<double>().sum();
        const double e_out = out.sp.col(i).cast<double>().sum();
        CHECK(std::abs(e_out - e_src) <= 1e-5 * e_src);
    }
    CHECK(out.sp.allFinite());
    CHECK((out.sp.array() >= 0.0f).all());

    // The source object is never written to.
    CHECK((src.sp.array() == before.sp.array()).all());
    CHECK((src.ap.array() == before.ap.array()).all());
    CHECK(src.f0 == before.f0);
}

TEST_CASE("identity conversion keeps voiced pitch") {
    nn::Rng rng(2);
    FeatureTrack src = test::random_track(rng, 40);
    src.singer_id = 0;
    ModelCheckpoint ck = make_checkpoint();

    FeatureTrack out = convert(src, 0, ck);
    for (Eigen::Index i = 0; i < src.n_frames(); ++i) {
        if (src.f0[i] > 0.0f)
            CHECK(out.f0[i] == doctest::Approx(src.f0[i]).epsilon(1e-6));
        else
            CHECK(out.f0[i] == 0.0f);
    }
}

TEST_CASE("conversion is deterministic") {
    nn::Rng rng(3);
    FeatureTrack src = test::random_track(rng, 30);
    src.singer_id = 0;
    ModelCheckpoint ck = make_checkpoint();

    FeatureTrack a = convert(src, 1, ck);
    FeatureTrack b = convert(src, 1, ck);
    CHECK((a.sp.array() == b.sp.array()).all());
    CHECK((a.ap.array() == b.ap.array()).all());
    CHECK(a.f0 == b.f0);
}

TEST_CASE("converted pitch adopts the target register") {
    // Long all-voiced utterance drawn around the source singer's statistics.
    nn::Rng rng(4);
    FeatureTrack src = test::random_track(rng, 2200);
    src.singer_id = 0;
    ModelCheckpoint ck = make_checkpoint();
    const double mu_s = ck.f0_stats[0].mean_log_f0;
    const double mu_t = ck.f0_stats[1].mean_log_f0;
    for (auto& f : src.f0)
        f = static_cast<float>(std::exp(mu_s + 0.2 * rng.gaussian()));

    FeatureTrack out = convert(src, 1, ck);
    double sum = 0.0;
    Eigen::Index n = 0;
    for (float f : out.f0)
        if (f > 0.0f) {
            sum += std::log(f);
            ++n;
        }
    REQUIRE(n >= 2000);
    const double mean_log = sum / static_cast<double>(n);
    CHECK(std::abs(mean_log - mu_t) < std::abs(mean_log - mu_s));
    CHECK(mean_log == doctest::Approx(mu_t).epsilon(0.02));
}

TEST_CASE("unknown source singers fall back to utterance statistics") {
    nn::Rng rng(5);
    FeatureTrack src = test::random_track(rng, 50);

    ModelCheckpoint ck = make_checkpoint();
    ConversionNotes notes;

    src.singer_id = -1;
    convert(src, 1, ck, &notes);
    CHECK(notes.used_utterance_f0_stats);

    // Same for an id that simply has no stored statistics.
    src.singer_id = 1;
    ck.f0_stats.erase(1);
    convert(src, 0, ck, &notes);
    CHECK(notes.used_utterance_f0_stats);
}

TEST_CASE("out-of-range transformed pitch is clamped and counted") {
    nn::Rng rng(6);
    FeatureTrack src = test::random_track(rng, 300);
    src.singer_id = 0;
    ModelCheckpoint ck = make_checkpoint();
    // Widen the variance ratio so upper-tail source pitches map far above
    // the valid ceiling.
    ck.f0_stats[0].std_log_f0 = 0.10;
    ck.f0_stats[1] = {std::log(1500.0), 0.40, 4000};
    const double gain = 0.40 / 0.10;

    Eigen::Index expect_clamped = 0;
    for (float f : src.f0) {
        if (f <= 0.0f) continue;
        const double mapped = std::exp(
            ck.f0_stats[1].mean_log_f0 +
            gain * (std::log(f) - ck.f0_stats[0].mean_log_f0));
        if (mapped < kMinVoicedF0Hz || mapped > kMaxVoicedF0Hz) ++expect_clamped;
    }
    REQUIRE(expect_clamped > 0);

    ConversionNotes notes;
    FeatureTrack out = convert(src, 1, ck, &notes);
    CHECK(notes.clamped_f0_frames == expect_clamped);
    for (float f : out.f0) {
        if (f > 0.0f) {
            CHECK(f >= kMinVoicedF0Hz);
            CHECK(f <= kMaxVoicedF0Hz);
        }
    }
}

TEST_CASE("conversion rejects incompatible inputs") {
    nn::Rng rng(7);
    ModelCheckpoint ck = make_checkpoint();

    FeatureTrack wrong_rate = test::random_track(rng, 10, 22050);
    CHECK_THROWS_AS(convert(wrong_rate, 1, ck), CompatibilityError);

    FeatureTrack wrong_shift = test::random_track(rng, 10, 16000, 10000);
    CHECK_THROWS_AS(convert(wrong_shift, 1, ck), CompatibilityError);

    FeatureTrack ok = test::random_track(rng, 10);
    CHECK_THROWS_AS(convert(ok, -1, ck), CompatibilityError);
    CHECK_THROWS_AS(convert(ok, 2, ck), CompatibilityError);

    // Valid index, but the checkpoint carries no statistics for it.
    ck.f0_stats.erase(1);
    CHECK_THROWS_AS(convert(ok, 1, ck), CompatibilityError);
}

TEST_CASE("vocoder command templates are validated and run") {
    test::TempDir dir("svc_vocoder");
    const auto in = dir / "in.txt";
    const auto out = dir / "out.txt";
    std::ofstream(in) << "payload";

    CHECK_THROWS_AS(run_vocoder_tool("", in, out), ConfigError);
    CHECK_THROWS_AS(run_vocoder_tool("cp {input} /tmp/x", in, out), ConfigError);
    CHECK_THROWS_AS(run_vocoder_tool("touch {output}", in, out), ConfigError);

    SUBCASE("successful run produces the output") {
        run_vocoder_tool("cp {input} {output}", in, out);
        CHECK(std::filesystem::exists(out));
    }

    SUBCASE("paths with spaces and quotes are quoted through the shell") {
        const auto odd_in = dir / "weird 'name.txt";
        const auto odd_out = dir / "weird 'out.txt";
        std::ofstream(odd_in) << "x";
        run_vocoder_tool("cp {input} {output}", odd_in, odd_out);
        CHECK(std::filesystem::exists(odd_out));
    }

    SUBCASE("failure removes partial output and reports status and stderr") {
        try {
            run_vocoder_tool("cat {input} > {output}; echo boom >&2; exit 7",
                             in, out);
            FAIL("expected SubprocessError");
        } catch (const SubprocessError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("status 7") != std::string::npos);
            CHECK(msg.find("stderr: boom") != std::string::npos);
        }
        CHECK_FALSE(std::filesystem::exists(out));
    }

    SUBCASE("silent success without an output file is an error") {
        CHECK_THROWS_AS(run_vocoder_tool("true {input} {output}", in, out),
                        SubprocessError);
    }

    SUBCASE("missing executable") {
        CHECK_THROWS_AS(
            run_vocoder_tool("/no/such/vocoder {input} {output}", in, out),
            SubprocessError);
        CHECK_FALSE(std::filesystem::exists(out));
    }
}

TEST_CASE("resynthesis renders a playable file of the right length") {
    nn::Rng rng(8);
    FeatureTrack track = test::random_track(rng, 200);
    test::TempDir dir("svc_resynth");
    const auto wav = dir / "out.wav";

    const auto got = resynthesize(track, tool_cmd("synth"), wav);
    CHECK(got == wav);
    // The features handed to the synthesis program stay next to the audio.
    auto svcf = wav;
    svcf.replace_extension(".svcf");
    CHECK(std::filesystem::exists(svcf));

    const WavInfo info = read_wav_info(wav);
    CHECK(info.sample_rate_hz == track.sample_rate_hz);
    const double got_s =
        static_cast<double>(info.n_samples) / info.sample_rate_hz;
    const double want_s = 200 * 0.005;
    CHECK(std::abs(got_s - want_s) <= 2.5 * 0.005);
}

TEST_CASE("resynthesis rejects defective synthesis output") {
    nn::Rng rng(9);
    FeatureTrack track = test::random_track(rng, 100);
    test::TempDir dir("svc_resynth_bad");

    SUBCASE("not a wav file") {
        const auto wav = dir / "junk.wav";
        CHECK_THROWS_AS(
            resynthesize(track, "echo junk > {output} # {input}", wav),
            SubprocessError);
        CHECK_FALSE(std::filesystem::exists(wav));
    }

    SUBCASE("wrong duration") {
        const auto decoy = dir / "short.wav";
        write_wav_mono16(decoy, std::vector<float>(1600, 0.1f), 16000);
        const auto wav = dir / "out.wav";
        CHECK_THROWS_AS(
            resynthesize(track, "cp '" + decoy.string() + "' {output} # {input}",
                         wav),
            SubprocessError);
        CHECK_FALSE(std::filesystem::exists(wav));
    }

    SUBCASE("wrong sample rate") {
        const auto decoy = dir / "slow.wav";
        // Right duration (0.5 s) at the wrong rate.
        write_wav_mono16(decoy, std::vector<float>(4000, 0.1f), 8000);
        const auto wav = dir / "out.wav";
        CHECK_THROWS_AS(
            resynthesize(track, "cp '" + decoy.string() + "' {output} # {input}",
                         wav),
            SubprocessError);
        CHECK_FALSE(std::filesystem::exists(wav));
    }
}

TEST_CASE("analysis and synthesis round-trip a test tone") {
    test::TempDir dir("svc_roundtrip");
    const std::uint32_t sr = 16000;
    const double hz = 220.0;
    std::vector<float> samples(sr); // one second
    for (std::size_t i = 0; i < samples.size(); ++i)
        samples[i] = 0.4f * static_cast<float>(
            std::sin(2.0 * std::numbers::pi * hz * i / sr));
    const auto tone = dir / "tone.wav";
    write_wav_mono16(tone, samples, sr);

    const auto feat1 = dir / "tone.svcf";
    run_vocoder_tool(tool_cmd("analyze"), tone, feat1);
    const FeatureTrack track = read_feature_file(feat1);
    CHECK(median_voiced_f0(track) == doctest::Approx(hz).epsilon(0.02));

    const auto wav2 = resynthesize(track, tool_cmd("synth"), dir / "again.wav");
    const auto feat2 = dir / "again.svcf.2";
    run_vocoder_tool(tool_cmd("analyze"), wav2, feat2);
    const FeatureTrack back = read_feature_file(feat2);
    CHECK(median_voiced_f0(back) == doctest::Approx(hz).epsilon(0.02));
}
