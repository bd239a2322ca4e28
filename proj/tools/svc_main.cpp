#include "svc/commands.hpp"
#include "svc/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Singing voice conversion toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "Run configuration (JSON)")
        ->required();
    std::uint64_t seed_override = 0;
    const auto* seed_opt =
        app.add_option("--seed", seed_override, "Override the config seed");

    auto* extract = app.add_subcommand("extract", "Analyse a corpus into features");
    std::string audio_dir;
    extract->add_option("audio_dir", audio_dir, "Audio root, one dir per singer")
        ->required();

    auto* train = app.add_subcommand("train", "Train a conversion model");

    auto* convert = app.add_subcommand("convert", "Convert an utterance");
    svc::ConvertArgs conv_args;
    std::string conv_input, conv_ckpt, conv_out;
    convert->add_option("input", conv_input, "Input .wav or feature file")
        ->required();
    convert->add_option("-t,--target", conv_args.target, "Target singer name")
        ->required();
    convert->add_option("-s,--source", conv_args.source,
                        "Source singer name (uses stored F0 statistics)");
    convert->add_option("--checkpoint", conv_ckpt,
                        "Checkpoint path (default <checkpoints>/final.svck)");
    convert->add_option("-o,--output", conv_out, "Output WAV path")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Score conversions");
    std::string conv_dir, ref_dir, manifest, report;
    evaluate->add_option("converted_dir", conv_dir, "Converted feature files")
        ->required();
    evaluate->add_option("reference_dir", ref_dir, "Reference feature files")
        ->required();
    evaluate->add_option("manifest", manifest, "Pairing manifest")->required();
    evaluate->add_option("-o,--report", report, "Report output path")->required();

    auto* stats = app.add_subcommand("stats", "Print corpus F0 statistics");

    CLI11_PARSE(app, argc, argv);

    try {
        svc::RunConfig cfg = svc::RunConfig::load(config_path);
        if (*seed_opt) {
            cfg.seed = seed_override;
            cfg.training.seed = seed_override;
        }
        if (extract->parsed()) return svc::cmd_extract(cfg, audio_dir, std::cout);
        if (train->parsed()) return svc::cmd_train(cfg, std::cout);
        if (convert->parsed()) {
            conv_args.input = conv_input;
            conv_args.checkpoint = conv_ckpt;
            conv_args.output_wav = conv_out;
            return svc::cmd_convert(cfg, conv_args, std::cout);
        }
        if (evaluate->parsed())
            return svc::cmd_evaluate(cfg, conv_dir, ref_dir, manifest, report,
                                     std::cout);
        if (stats->parsed()) return svc::cmd_stats(cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
