#include "svc/run_config.hpp"

#include "svc/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace svc {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void maybe(const json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

} // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string() + ": cannot open for reading");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    RunConfig cfg;
    try {
        reject_unknown_keys(j, {"seed", "paths", "singers", "model", "training",
                                "vocoder"},
                            "config root");
        maybe(j, "seed", cfg.seed);
        if (j.contains("paths")) {
            const json& p = j.at("paths");
            reject_unknown_keys(p, {"features", "checkpoints", "reports"},
                                "paths");
            std::string s;
            if (p.contains("features")) { s = p.at("features").get<std::string>(); cfg.feature_dir = s; }
            if (p.contains("checkpoints")) { s = p.at("checkpoints").get<std::string>(); cfg.checkpoint_dir = s; }
            if (p.contains("reports")) { s = p.at("reports").get<std::string>(); cfg.report_dir = s; }
        }
        if (j.contains("singers"))
            cfg.singers = j.at("singers").get<std::map<std::string, int>>();
        if (j.contains("model")) {
            const json& m = j.at("model");
            reject_unknown_keys(m, {"latent_dim", "singer_dim", "sp_dim",
                                    "condition_on_f0"},
                                "model");
            maybe(m, "latent_dim", cfg.model.latent_dim);
            maybe(m, "singer_dim", cfg.model.singer_dim);
            maybe(m, "sp_dim", cfg.model.sp_dim);
            maybe(m, "condition_on_f0", cfg.model.condition_on_f0);
        }
        if (j.contains("training")) {
            const json& t = j.at("training");
            reject_unknown_keys(t,
                                {"alpha", "total_epochs", "vae_warmup_epochs",
                                 "learning_rate", "rmsprop_decay", "rmsprop_epsilon",
                                 "batch_size", "critic_steps_per_gen_step",
                                 "weight_clip", "checkpoint_every_epochs"},
                                "training");
            maybe(t, "alpha", cfg.training.alpha);
            maybe(t, "total_epochs", cfg.training.total_epochs);
            maybe(t, "vae_warmup_epochs", cfg.training.vae_warmup_epochs);
            maybe(t, "learning_rate", cfg.training.learning_rate);
            maybe(t, "rmsprop_decay", cfg.training.rmsprop_decay);
            maybe(t, "rmsprop_epsilon", cfg.training.rmsprop_epsilon);
            maybe(t, "batch_size", cfg.training.batch_size);
            maybe(t, "critic_steps_per_gen_step", cfg.training.critic_steps_per_gen_step);
            maybe(t, "weight_clip", cfg.training.weight_clip);
            maybe(t, "checkpoint_every_epochs", cfg.training.checkpoint_every_epochs);
        }
        if (j.contains("vocoder")) {
            const json& v = j.at("vocoder");
            reject_unknown_keys(v, {"analysis_cmd", "synthesis_cmd"}, "vocoder");
            maybe(v, "analysis_cmd", cfg.vocoder.analysis_cmd);
            maybe(v, "synthesis_cmd", cfg.vocoder.synthesis_cmd);
        }
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    cfg.model.n_singers = static_cast<int>(cfg.singers.size());
    cfg.training.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (singers.empty())
        throw ConfigError("config lists no singers");
    std::set<int> ids;
    for (const auto& [name, id] : singers) {
        if (name.empty())
            throw ConfigError("empty singer name");
        if (!ids.insert(id).second)
            throw ConfigError("duplicate singer index " + std::to_string(id));
    }
    if (*ids.begin() != 0 ||
        *ids.rbegin() != static_cast<int>(singers.size()) - 1)
        throw ConfigError("singer indices must be contiguous from 0");
    model.validate();
    training.validate();
}

std::string RunConfig::to_json() const {
    json j{
        {"seed", seed},
        {"paths",
         {{"features", feature_dir.string()},
          {"checkpoints", checkpoint_dir.string()},
          {"reports", report_dir.string()}}},
        {"singers", singers},
        {"model",
         {{"latent_dim", model.latent_dim},
          {"singer_dim", model.singer_dim},
          {"sp_dim", model.sp_dim},
          {"condition_on_f0", model.condition_on_f0}}},
        {"training",
         {{"alpha", training.alpha},
          {"total_epochs", training.total_epochs},
          {"vae_warmup_epochs", training.vae_warmup_epochs},
          {"learning_rate", training.learning_rate},
          {"rmsprop_decay", training.rmsprop_decay},
          {"rmsprop_epsilon", training.rmsprop_epsilon},
          {"batch_size", training.batch_size},
          {"critic_steps_per_gen_step", training.critic_steps_per_gen_step},
          {"weight_clip", training.weight_clip},
          {"checkpoint_every_epochs", training.checkpoint_every_epochs}}},
        {"vocoder",
         {{"analysis_cmd", vocoder.analysis_cmd},
          {"synthesis_cmd", vocoder.synthesis_cmd}}},
    };
    return j.dump(2) + "\n";
}

} // namespace svc
