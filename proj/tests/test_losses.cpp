#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "svc/losses.hpp"
#include "svc/nn/nets.hpp"
#include "svc/nn/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

using namespace svc;
using Matd = nn::Mat<double>;

namespace {

// Small stack used by the gradient checks: same shape grammar as the real
// model (stride-3 stages, width-spanning tails) at a fraction of the size.
nn::ArchSpec mini_spec() {
    nn::ArchSpec a;
    a.sp_dim = 27;
    a.latent_dim = 4;
    a.cond_dim = 3; // 2 singer dims + 1 pitch value
    a.encoder = {{5, 3, 3}, {3, 3, 4}, {3, 3, 5}};
    a.decoder_stem_channels = 3;
    a.decoder_up = {{5, 3, 4}, {3, 3, 3}, {3, 3, 2}};
    a.decoder_final_kernel = 53;
    a.critic = {{5, 3, 3}, {3, 3, 4}, {7, 3, 5}};
    a.validate();
    return a;
}

// Random weights well away from zero so finite differences never straddle a
// leaky-ReLU kink at the probe size used below.
void scramble(nn::ParamSet<double>& ps, nn::Rng& rng, double stddev) {
    for (const auto& v : ps.views())
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v.value[i] = rng.gaussian() * stddev;
}

Matd random_mat(nn::Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Matd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.gaussian() * scale;
    return m;
}

// Central difference of `loss` along one scalar, compared to `analytic`.
// The probe runs over a ladder of step sizes and the best agreement wins;
// no single step size certifies every element. A probe that straddles a
// leaky-ReLU kink heals as the step shrinks, an element whose gradient is
// tiny drowns in float cancellation unless the step grows, and a genuinely
// wrong analytic gradient disagrees at every step size.
template <class F>
double fd_rel_error(double* slot, double analytic, F&& loss, double h,
                    double tol) {
    double best = std::numeric_limits<double>::infinity();
    for (double factor : {1.0, 10.0, 100.0, 1000.0, 0.1, 0.01}) {
        const double step = h * factor;
        const double orig = *slot;
        *slot = orig + step;
        const double lp = loss();
        *slot = orig - step;
        const double lm = loss();
        *slot = orig;
        const double numeric = (lp - lm) / (2.0 * step);
        const double rel = std::abs(analytic - numeric) /
                           std::max(std::abs(analytic) + std::abs(numeric), 1e-8);
        best = std::min(best, rel);
        if (best < tol) break;
    }
    return best;
}

// Checks every parameter in `ps` against the analytic gradients already
// stored there. `loss` must be a pure function of the current values.
template <class F>
void check_param_grads(const nn::ParamSet<double>& ps, F&& loss,
                       double h = 1e-5, double tol = 1e-4) {
    for (const auto& v : ps.views()) {
        double worst = 0.0;
        Eigen::Index worst_i = 0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double rel = fd_rel_error(v.value + i, v.grad[i], loss, h, tol);
            if (rel > worst) {
                worst = rel;
                worst_i = i;
            }
        }
        INFO("tensor ", v.name, " worst element ", worst_i);
        CHECK(worst < tol);
    }
}

// Same check for gradients with respect to an input matrix.
template <class F>
void check_input_grads(Matd& x, const Matd& dx, F&& loss,
                       double h = 1e-5, double tol = 1e-4) {
    REQUIRE(dx.rows() == x.rows());
    REQUIRE(dx.cols() == x.cols());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        worst = std::max(worst, fd_rel_error(&x(i), dx(i), loss, h, tol));
    }
    CHECK(worst < tol);
}

} // namespace

TEST_CASE("kl matches a monte-carlo estimate of the divergence") {
    nn::Rng rng(314159);
    const int dim = 8, batch = 4;
    nn::LatentCodeT<double> code;
    code.mean.resize(dim, batch);
    code.log_var.resize(dim, batch);
    for (Eigen::Index i = 0; i < code.mean.size(); ++i) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        code.mean(i) = sign * (0.5 + rng.uniform());
        code.log_var(i) = 2.0 * rng.uniform() - 1.0;
    }
    const double analytic = kl_loss_t<double>(code);

    // Sample z ~ q and average log q(z) - log p(z); the normalization
    // constants cancel, leaving 0.5 * (z^2 - g^2 - log_var) per dimension.
    const int n_samples = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        double v = 0.0;
        for (int b = 0; b < batch; ++b) {
            for (int d = 0; d < dim; ++d) {
                const double g = rng.gaussian();
                const double z = code.mean(d, b) +
                                 std::exp(0.5 * code.log_var(d, b)) * g;
                v += 0.5 * (z * z - g * g - code.log_var(d, b));
            }
        }
        v /= batch;
        s1 += v;
        s2 += v * v;
    }
    const double mc = s1 / n_samples;
    const double var = (s2 / n_samples - mc * mc) / (n_samples - 1);
    const double se = std::sqrt(std::max(var, 0.0));
    INFO("analytic ", analytic, " mc ", mc, " se ", se);
    CHECK(se < 0.01 * analytic); // the estimate is sharp enough to matter
    CHECK(std::abs(mc - analytic) < 6.0 * se + 1e-9);
}

TEST_CASE("kl closed-form values") {
    nn::LatentCodeT<double> code;
    code.mean = Matd::Zero(3, 2);
    code.log_var = Matd::Zero(3, 2);
    CHECK(kl_loss_t<double>(code) == 0.0); // posterior equals the prior

    // One active dimension: mean 1, unit variance -> 0.5.
    code.mean(0, 0) = 1.0;
    code.mean(0, 1) = 1.0;
    CHECK(kl_loss_t<double>(code) == doctest::Approx(0.5).epsilon(1e-12));

    // Variance e with zero mean adds 0.5 * (e - 1 - 1).
    code.mean.setZero();
    code.log_var(1, 0) = 1.0;
    code.log_var(1, 1) = 1.0;
    CHECK(kl_loss_t<double>(code) ==
          doctest::Approx(0.5 * (std::exp(1.0) - 2.0)).epsilon(1e-12));

    nn::LatentCodeT<double> empty;
    empty.mean = Matd::Zero(3, 0);
    empty.log_var = Matd::Zero(3, 0);
    CHECK_THROWS_AS(kl_loss_t<double>(empty), ShapeError);
    code.log_var = Matd::Zero(2, 2);
    CHECK_THROWS_AS(kl_loss_t<double>(code), ShapeError);
}

TEST_CASE("reconstruction loss hand values") {
    Matd x = Matd::Zero(2, 2);
    Matd x_hat = Matd::Zero(2, 2);
    x_hat(0, 0) = 1.0; // one bin off by 1 in one of two frames
    CHECK(reconstruction_loss_t<double>(x, x_hat) ==
          doctest::Approx(0.25).epsilon(1e-12));
    x_hat.setConstant(2.0); // every bin off by 2: 0.5 * 4 bins * 4 / 2 frames
    CHECK(reconstruction_loss_t<double>(x, x_hat) ==
          doctest::Approx(4.0).epsilon(1e-12));
    CHECK_THROWS_AS(reconstruction_loss_t<double>(x, Matd::Zero(3, 2)), ShapeError);
    CHECK_THROWS_AS(reconstruction_loss_t<double>(Matd::Zero(2, 0), Matd::Zero(2, 0)),
                    ShapeError);
}

TEST_CASE("wasserstein score algebra") {
    Matd real(1, 2), fake(1, 2);
    real << 1.0, 3.0;
    fake << 0.0, -2.0;
    auto w = wgan_losses_from_scores_t<double>(real, fake);
    CHECK(w.j_wgan == doctest::Approx(3.0));          // 2 - (-1)
    CHECK(w.critic_loss == doctest::Approx(-3.0));    // critic maximizes j
    CHECK(w.generator_loss == doctest::Approx(1.0));  // -mean fake
    CHECK_THROWS_AS(wgan_losses_from_scores_t<double>(real, Matd(1, 0)), ShapeError);
}

TEST_CASE("objective combines terms linearly in alpha") {
    CHECK(total_objective_t<double>(1.0, 2.0, 3.0, 0.5) == doctest::Approx(4.5));
    CHECK(total_objective_t<double>(1.0, 2.0, 3.0, 0.0) == doctest::Approx(3.0));
    // alpha scales only the adversarial term.
    const double base = total_objective_t<double>(0.7, 1.1, 2.0, 1.0);
    const double doubled = total_objective_t<double>(0.7, 1.1, 2.0, 2.0);
    CHECK(doubled - base == doctest::Approx(2.0));
}

TEST_CASE("individual layers match finite differences on a smooth loss") {
    // 0.5 * ||y||^2 with no activation anywhere: any disagreement here is a
    // genuine backward bug, not finite-difference noise.
    nn::Rng rng(2001);
    const int b = 3;
    auto quad = [](const Matd& y) { return 0.5 * y.squaredNorm(); };

    auto check_layer = [&](auto& layer, nn::ParamSet<double>& ps, int in_rows) {
        Matd x = random_mat(rng, in_rows, b);
        auto loss = [&] { return quad(layer.forward(x)); };
        Matd y = layer.forward(x);
        ps.zero_grads();
        Matd dx = layer.backward(y, true);
        check_param_grads(ps, loss, 1e-6, 1e-6);
        check_input_grads(x, dx, loss, 1e-6, 1e-6);
    };

    SUBCASE("strided conv") {
        const auto g = nn::ConvGeom::same_padded(3, 4, 5, 3, 12);
        nn::Conv1d<double> layer(g);
        nn::ParamSet<double> ps;
        layer.collect(ps, "conv");
        scramble(ps, rng, 0.3);
        check_layer(layer, ps, 3 * 12);
    }
    SUBCASE("width-spanning conv") {
        // kernel covers the whole padded input, which takes the dense path.
        const auto g = nn::ConvGeom::same_padded(2, 3, 17, 1, 9);
        REQUIRE(g.full_band());
        nn::Conv1d<double> layer(g);
        nn::ParamSet<double> ps;
        layer.collect(ps, "conv");
        scramble(ps, rng, 0.3);
        check_layer(layer, ps, 2 * 9);
    }
    SUBCASE("width-spanning strided conv") {
        const auto g = nn::ConvGeom::same_padded(3, 5, 7, 3, 3);
        REQUIRE(g.full_band());
        nn::Conv1d<double> layer(g);
        nn::ParamSet<double> ps;
        layer.collect(ps, "conv");
        scramble(ps, rng, 0.3);
        check_layer(layer, ps, 3 * 3);
    }
    SUBCASE("transposed conv") {
        nn::ConvTranspose1d<double> layer(3, 2, 5, 3, 4);
        nn::ParamSet<double> ps;
        layer.collect(ps, "up");
        scramble(ps, rng, 0.3);
        check_layer(layer, ps, 3 * 4);
    }
    SUBCASE("transposed conv with kernel equal to stride") {
        nn::ConvTranspose1d<double> layer(2, 3, 3, 3, 4);
        nn::ParamSet<double> ps;
        layer.collect(ps, "up");
        scramble(ps, rng, 0.3);
        check_layer(layer, ps, 2 * 4);
    }
    SUBCASE("channel projection") {
        nn::Pointwise<double> layer(3, 3, 6);
        nn::ParamSet<double> ps;
        layer.collect(ps, "proj");
        scramble(ps, rng, 0.3);
        check_layer(layer, ps, 3 * 6);
    }
    SUBCASE("dense") {
        nn::Dense<double> layer(5, 4);
        nn::ParamSet<double> ps;
        layer.collect(ps, "dense");
        scramble(ps, rng, 0.3);
        check_layer(layer, ps, 5);
    }
    SUBCASE("embedding") {
        nn::Embedding<double> layer(3, 4);
        nn::ParamSet<double> ps;
        layer.collect(ps, "emb");
        scramble(ps, rng, 0.3);
        const std::vector<int> ids{2, 0, 2, 1};
        auto loss = [&] { return quad(layer.lookup(ids)); };
        Matd y = layer.lookup(ids);
        ps.zero_grads();
        layer.accumulate_grad(ids, y);
        check_param_grads(ps, loss, 1e-6, 1e-6);
    }
}

TEST_CASE("encoder gradients match finite differences") {
    nn::ArchSpec spec = mini_spec();
    nn::Encoder<double> enc(spec);
    nn::Rng rng(1001);
    nn::ParamSet<double> ps;
    enc.collect(ps);
    scramble(ps, rng, 0.2);

    const int b = 3;
    Matd x = random_mat(rng, spec.sp_dim, b);
    const Matd wm = random_mat(rng, spec.latent_dim, b);
    const Matd wl = random_mat(rng, spec.latent_dim, b);
    auto loss = [&] {
        auto code = enc.forward(x);
        return (wm.cwiseProduct(code.mean) + wl.cwiseProduct(code.log_var)).sum();
    };

    loss();
    ps.zero_grads();
    Matd dx = enc.backward(wm, wl, true);
    check_param_grads(ps, loss);
    check_input_grads(x, dx, loss);
}

TEST_CASE("decoder gradients match finite differences") {
    nn::ArchSpec spec = mini_spec();
    nn::Decoder<double> dec(spec);
    nn::Rng rng(1002);
    nn::ParamSet<double> ps;
    dec.collect(ps);
    scramble(ps, rng, 0.2);

    const int b = 3;
    Matd zc = random_mat(rng, spec.latent_dim + spec.cond_dim, b);
    const Matd w = random_mat(rng, spec.sp_dim, b);
    auto loss = [&] { return w.cwiseProduct(dec.forward(zc)).sum(); };

    loss();
    ps.zero_grads();
    Matd dzc = dec.backward(w, true);
    check_param_grads(ps, loss);
    check_input_grads(zc, dzc, loss);
}

TEST_CASE("critic gradients match finite differences") {
    nn::ArchSpec spec = mini_spec();
    nn::Critic<double> critic(spec);
    nn::Rng rng(1003);
    nn::ParamSet<double> ps;
    critic.collect(ps);
    scramble(ps, rng, 0.2);

    const int b = 3;
    Matd x = random_mat(rng, spec.sp_dim, b);
    const Matd w = random_mat(rng, 1, b);
    auto loss = [&] { return w.cwiseProduct(critic.forward(x)).sum(); };

    loss();
    ps.zero_grads();
    Matd dx = critic.backward(w, true);
    check_param_grads(ps, loss);
    check_input_grads(x, dx, loss);
}

TEST_CASE("full generator objective gradients match finite differences") {
    // Chains encoder -> reparameterization -> [z; singer; pitch] -> decoder
    // into kl + reconstruction + alpha * (-mean critic score): the exact
    // backward composition the training step uses, checked numerically.
    nn::ArchSpec spec = mini_spec();
    nn::Encoder<double> enc(spec);
    nn::Decoder<double> dec(spec);
    nn::Critic<double> critic(spec);
    nn::Embedding<double> emb(2, 2);
    nn::Rng rng(1004);

    nn::ParamSet<double> gen;
    enc.collect(gen);
    dec.collect(gen);
    emb.collect(gen, "singer");
    scramble(gen, rng, 0.2);
    nn::ParamSet<double> cr;
    critic.collect(cr);
    scramble(cr, rng, 0.2);

    const int b = 3;
    const double alpha = 0.7;
    Matd x = random_mat(rng, spec.sp_dim, b);
    const Matd noise = random_mat(rng, spec.latent_dim, b);
    const std::vector<int> ids{0, 1, 0};
    Eigen::Matrix<double, Eigen::Dynamic, 1> f0(b);
    f0 << -0.5, 0.0, 0.8;

    auto forward = [&](nn::LatentCodeT<double>* code_out, Matd* z_out,
                       Matd* y_out) {
        auto code = enc.forward(x);
        Matd z = nn::sample_latent(code, noise);
        Matd zc(spec.latent_dim + spec.cond_dim, b);
        zc.topRows(spec.latent_dim) = z;
        zc.middleRows(spec.latent_dim, 2) = emb.lookup(ids);
        zc.row(spec.latent_dim + 2) = f0.transpose();
        Matd y = dec.forward(zc);
        const double kl = kl_loss_t<double>(code);
        const double recon = reconstruction_loss_t<double>(x, y);
        const double gen_term = -critic.forward(y).mean();
        if (code_out) *code_out = code;
        if (z_out) *z_out = z;
        if (y_out) *y_out = y;
        return total_objective_t<double>(kl, recon, gen_term, alpha);
    };
    auto loss = [&] { return forward(nullptr, nullptr, nullptr); };

    // Analytic pass, mirroring the training update.
    nn::LatentCodeT<double> code;
    Matd z, y;
    forward(&code, &z, &y);
    gen.zero_grads();
    Matd dy = reconstruction_loss_grad_t<double>(x, y);
    dy += critic.backward(Matd::Constant(1, b, -alpha / b), true);
    Matd dzc = dec.backward(dy, true);
    emb.accumulate_grad(ids, dzc.middleRows(spec.latent_dim, 2));
    const Matd dz = dzc.topRows(spec.latent_dim);
    Matd dmean, dlog_var;
    kl_loss_grad_t<double>(code, dmean, dlog_var);
    dmean += dz;
    dlog_var += 0.5 * dz.cwiseProduct(noise)
                        .cwiseProduct((code.log_var * 0.5).array().exp().matrix());
    enc.backward(dmean, dlog_var, false);

    check_param_grads(gen, loss);
}

TEST_CASE("critic training loss gradients match finite differences") {
    nn::ArchSpec spec = mini_spec();
    nn::Critic<double> critic(spec);
    nn::Rng rng(1005);
    nn::ParamSet<double> ps;
    critic.collect(ps);
    scramble(ps, rng, 0.2);

    const int b = 4;
    Matd real = random_mat(rng, spec.sp_dim, b);
    Matd fake = random_mat(rng, spec.sp_dim, b);
    auto loss = [&] {
        // critic loss = -(mean real - mean fake)
        const double mr = critic.forward(real).mean();
        const double mf = critic.forward(fake).mean();
        return -(mr - mf);
    };

    ps.zero_grads();
    critic.forward(real);
    critic.backward(Matd::Constant(1, b, -1.0 / b), false);
    critic.forward(fake);
    critic.backward(Matd::Constant(1, b, 1.0 / b), false);
    check_param_grads(ps, loss);
}
