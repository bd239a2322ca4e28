#pragma once

#include "svc/errors.hpp"
#include "svc/nn/nets.hpp"

namespace svc {

// Batch-mean KL divergence from the diagonal-Gaussian posterior to N(0, I):
//   mean_b 0.5 * sum_d (exp(lv) + mean^2 - 1 - lv).
// Zero exactly when mean == 0 and log_var == 0. Throws ShapeError on an
// empty batch or mismatched mean/log_var shapes.
template <class S>
S kl_loss_t(const nn::LatentCodeT<S>& code) {
    if (code.mean.cols() == 0)
        throw ShapeError("KL of an empty batch");
    if (code.mean.rows() != code.log_var.rows() ||
        code.mean.cols() != code.log_var.cols())
        throw ShapeError("mean/log_var shape mismatch");
    const auto m = code.mean.array();
    const auto lv = code.log_var.array();
    return S(0.5) * (lv.exp() + m.square() - S(1) - lv).sum() /
           static_cast<S>(code.mean.cols());
}

// Gradients of kl_loss_t, accumulated into dmean/dlog_var (resized if empty).
template <class S>
void kl_loss_grad_t(const nn::LatentCodeT<S>& code, nn::Mat<S>& dmean,
                    nn::Mat<S>& dlog_var) {
    const S inv_b = S(1) / static_cast<S>(code.mean.cols());
    dmean = code.mean * inv_b;
    dlog_var = (code.log_var.array().exp() - S(1)).matrix() * (S(0.5) * inv_b);
}

// Batch-mean Gaussian reconstruction term: mean_b 0.5 * ||x - x_hat||^2,
// summed over bins within a frame. Throws ShapeError on empty or mismatched
// batches.
template <class S>
S reconstruction_loss_t(const nn::Mat<S>& x, const nn::Mat<S>& x_hat) {
    if (x.cols() == 0)
        throw ShapeError("reconstruction loss of an empty batch");
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
        throw ShapeError("reconstruction shapes differ: " + std::to_string(x.rows()) +
                         "x" + std::to_string(x.cols()) + " vs " +
                         std::to_string(x_hat.rows()) + "x" +
                         std::to_string(x_hat.cols()));
    return S(0.5) * (x - x_hat).squaredNorm() / static_cast<S>(x.cols());
}

// d(reconstruction_loss)/d(x_hat).
template <class S>
nn::Mat<S> reconstruction_loss_grad_t(const nn::Mat<S>& x, const nn::Mat<S>& x_hat) {
    return (x_hat - x) / static_cast<S>(x.cols());
}

template <class S>
struct WganLossesT {
    S critic_loss;     // minimized by the critic: -(mean real - mean fake)
    S generator_loss;  // minimized by the generator: -mean fake
    S j_wgan;          // the critic objective itself: mean real - mean fake
};

// Wasserstein losses from precomputed critic scores (one score per frame).
// Throws ShapeError when either batch is empty.
template <class S>
WganLossesT<S> wgan_losses_from_scores_t(const nn::Mat<S>& real_scores,
                                         const nn::Mat<S>& fake_scores) {
    if (real_scores.size() == 0 || fake_scores.size() == 0)
        throw ShapeError("critic scores for an empty batch");
    const S mean_real = real_scores.sum() / static_cast<S>(real_scores.size());
    const S mean_fake = fake_scores.sum() / static_cast<S>(fake_scores.size());
    WganLossesT<S> out;
    out.j_wgan = mean_real - mean_fake;
    out.critic_loss = -out.j_wgan;
    out.generator_loss = -mean_fake;
    return out;
}

// Runs the critic over both batches, then scores them.
template <class S>
WganLossesT<S> wgan_losses_t(nn::Critic<S>& critic, const nn::Mat<S>& real_frames,
                             const nn::Mat<S>& fake_frames) {
    if (real_frames.cols() == 0 || fake_frames.cols() == 0)
        throw ShapeError("critic batch is empty");
    const nn::Mat<S> sr = critic.forward(real_frames);
    const nn::Mat<S> sf = critic.forward(fake_frames);
    return wgan_losses_from_scores_t<S>(sr, sf);
}

// Full objective in minimization form: kl + reconstruction + alpha *
// generator-side Wasserstein term.
template <class S>
S total_objective_t(S kl, S reconstruction, S wgan_generator_term, S alpha) {
    return kl + reconstruction + alpha * wgan_generator_term;
}

using WganLosses = WganLossesT<float>;

inline float kl_loss(const nn::LatentCodeT<float>& code) { return kl_loss_t<float>(code); }
inline float reconstruction_loss(const Eigen::MatrixXf& x, const Eigen::MatrixXf& x_hat) {
    return reconstruction_loss_t<float>(x, x_hat);
}
inline WganLosses wgan_losses_from_scores(const Eigen::MatrixXf& real_scores,
                                          const Eigen::MatrixXf& fake_scores) {
    return wgan_losses_from_scores_t<float>(real_scores, fake_scores);
}
inline WganLosses wgan_losses(nn::Critic<float>& critic, const Eigen::MatrixXf& real,
                              const Eigen::MatrixXf& fake) {
    return wgan_losses_t<float>(critic, real, fake);
}
inline float total_objective(float kl, float reconstruction,
                             float wgan_generator_term, float alpha) {
    return total_objective_t<float>(kl, reconstruction, wgan_generator_term, alpha);
}

} // namespace svc
