#include "svc/model.hpp"

#include "svc/errors.hpp"

namespace svc {

void ModelConfig::validate() const {
    if (n_singers < 1)
        throw ConfigError("n_singers must be >= 1, got " + std::to_string(n_singers));
    if (latent_dim < 1 || singer_dim < 1)
        throw ConfigError("latent_dim and singer_dim must be positive");
    if (sp_dim < 1)
        throw ConfigError("sp_dim must be positive, got " + std::to_string(sp_dim));
    // Defaults upsample by 27 in three stride-3 stages.
    if (sp_dim % 27 != 0)
        throw ConfigError("sp_dim must be a multiple of 27, got " +
                          std::to_string(sp_dim));
}

namespace {

nn::ArchSpec arch_for(const ModelConfig& c) {
    c.validate();
    return nn::ArchSpec::defaults(c.sp_dim, c.latent_dim, c.cond_dim());
}

} // namespace

VawGanModel::VawGanModel(const ModelConfig& config)
    : config_(config),
      encoder_(arch_for(config)),
      decoder_(arch_for(config)),
      critic_(arch_for(config)),
      embedding_(config.singer_dim, config.n_singers) {}

void VawGanModel::init_params(nn::Rng& rng) {
    encoder_.init(rng);
    decoder_.init(rng);
    critic_.init(rng);
    embedding_.init(rng, nn::kInitStd);
}

LatentCode VawGanModel::encode(const Eigen::MatrixXf& frames) {
    return encoder_.forward(frames);
}

Eigen::MatrixXf VawGanModel::stack_decoder_input(
    const Eigen::MatrixXf& z, const std::vector<int>& singer_ids,
    const Eigen::VectorXf& f0_scaled) const {
    const Eigen::Index b = z.cols();
    if (z.rows() != config_.latent_dim)
        throw ShapeError("latent input: got " + std::to_string(z.rows()) +
                         " rows, expected " + std::to_string(config_.latent_dim));
    if (static_cast<Eigen::Index>(singer_ids.size()) != b)
        throw ShapeError("got " + std::to_string(singer_ids.size()) +
                         " singer ids for " + std::to_string(b) + " frames");
    if (config_.condition_on_f0 && f0_scaled.size() != b)
        throw ShapeError("got " + std::to_string(f0_scaled.size()) +
                         " F0 values for " + std::to_string(b) + " frames");

    Eigen::MatrixXf in(config_.latent_dim + config_.cond_dim(), b);
    in.topRows(config_.latent_dim) = z;
    in.middleRows(config_.latent_dim, config_.singer_dim) =
        embedding_.lookup(singer_ids);
    if (config_.condition_on_f0)
        in.bottomRows(1) = f0_scaled.transpose();
    return in;
}

Eigen::MatrixXf VawGanModel::decode_frames(const Eigen::MatrixXf& z,
                                           const std::vector<int>& singer_ids,
                                           const Eigen::VectorXf& f0_scaled) {
    return decoder_.forward(stack_decoder_input(z, singer_ids, f0_scaled));
}

Eigen::MatrixXf VawGanModel::decode(const Eigen::MatrixXf& z, int singer,
                                    const Eigen::VectorXf& f0_scaled) {
    const std::vector<int> ids(static_cast<std::size_t>(z.cols()), singer);
    return decode_frames(z, ids, f0_scaled);
}

Eigen::VectorXf VawGanModel::discriminate(const Eigen::MatrixXf& frames) {
    return critic_.forward(frames).transpose();
}

nn::ParamSet<float> VawGanModel::generator_params() {
    nn::ParamSet<float> ps;
    encoder_.collect(ps);
    decoder_.collect(ps);
    embedding_.collect(ps, "singer");
    return ps;
}

nn::ParamSet<float> VawGanModel::critic_params() {
    nn::ParamSet<float> ps;
    critic_.collect(ps);
    return ps;
}

nn::ParamSet<float> VawGanModel::all_params() {
    nn::ParamSet<float> ps;
    encoder_.collect(ps);
    decoder_.collect(ps);
    embedding_.collect(ps, "singer");
    critic_.collect(ps);
    return ps;
}

std::int64_t VawGanModel::parameter_count() {
    return all_params().total_size();
}

} // namespace svc
