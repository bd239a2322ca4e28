#pragma once

#include "svc/nn/layers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// The three networks: spectral encoder -> (mean, log var), conditional
// decoder, and a scalar critic. All operate on one frame of kSpectrumBins
// log-spectrum values per column; no temporal context, convs run along the
// frequency axis.

namespace svc::nn {

inline constexpr double kLeakySlope = 0.02;
inline constexpr double kInitStd = 0.02;

struct ConvStageSpec {
    int kernel = 0;
    int stride = 0;
    int channels = 0;
};

// Geometry of the whole model. defaults() reproduces the reference layout
// for any sp_dim divisible by 27 (three stride-3 upsampling stages):
//   encoder       5 stages, kernel 7 stride 3, channels 16/32/64/128/256
//   decoder       dense stem to width sp_dim/27 x 64ch, then transposed
//                 stages kernel 9/7/7 stride 3 with 32/16/8 channels and a
//                 final width-spanning conv (kernel 2*sp_dim - 1) to 1ch
//   critic        stages kernel 7/7/(2*ceil(sp_dim/9)+1) stride 3,
//                 channels 16/32/64, linear scalar head
// Every hidden conv stage is followed by a per-position channel projection;
// both carry leaky-ReLU activations. Critic head and decoder output are
// linear.
struct ArchSpec {
    int sp_dim = 513;
    int latent_dim = 128;
    int cond_dim = 11;
    std::vector<ConvStageSpec> encoder;
    int decoder_stem_channels = 64;
    std::vector<ConvStageSpec> decoder_up;
    int decoder_final_kernel = 1025;
    std::vector<ConvStageSpec> critic;

    static ArchSpec defaults(int sp_dim, int latent_dim, int cond_dim) {
        ArchSpec a;
        a.sp_dim = sp_dim;
        a.latent_dim = latent_dim;
        a.cond_dim = cond_dim;
        a.encoder = {{7, 3, 16}, {7, 3, 32}, {7, 3, 64}, {7, 3, 128}, {7, 3, 256}};
        a.decoder_stem_channels = 64;
        a.decoder_up = {{9, 3, 32}, {7, 3, 16}, {7, 3, 8}};
        a.decoder_final_kernel = 2 * sp_dim - 1;
        const int w2 = (((sp_dim + 2) / 3) + 2) / 3;  // width after two stride-3 stages
        a.critic = {{7, 3, 16}, {7, 3, 32}, {2 * w2 + 1, 3, 64}};
        a.validate();
        return a;
    }

    int decoder_stem_width() const {
        int f = 1;
        for (const auto& s : decoder_up) f *= s.stride;
        return sp_dim / f;
    }

    void validate() const {
        if (sp_dim <= 0 || latent_dim <= 0 || cond_dim < 0)
            throw ConfigError("non-positive network dimensions");
        if (encoder.empty() || decoder_up.empty() || critic.empty())
            throw ConfigError("every network needs at least one stage");
        int f = 1;
        for (const auto& s : decoder_up) {
            if (s.stride < 1 || s.kernel < s.stride || s.channels < 1)
                throw ConfigError("bad decoder stage spec");
            f *= s.stride;
        }
        if (sp_dim % f != 0)
            throw ConfigError("sp_dim " + std::to_string(sp_dim) +
                              " not divisible by decoder upsampling factor " +
                              std::to_string(f));
        for (const auto& s : encoder)
            if (s.stride < 1 || s.kernel < 1 || s.channels < 1)
                throw ConfigError("bad encoder stage spec");
        for (const auto& s : critic)
            if (s.stride < 1 || s.kernel < 1 || s.channels < 1)
                throw ConfigError("bad critic stage spec");
        if (decoder_final_kernel < 1 || decoder_final_kernel % 2 == 0)
            throw ConfigError("decoder final kernel must be odd and positive");
    }
};

template <class S>
struct LatentCodeT {
    Mat<S> mean;     // latent_dim x B
    Mat<S> log_var;  // latent_dim x B
};

// z = mean + exp(log_var / 2) * noise, elementwise.
template <class S>
Mat<S> sample_latent(const LatentCodeT<S>& code, const Mat<S>& noise) {
    if (noise.rows() != code.mean.rows() || noise.cols() != code.mean.cols())
        throw ShapeError("latent noise shape does not match code");
    return code.mean + (code.log_var * S(0.5)).array().exp().matrix().cwiseProduct(noise);
}

// Stack of (conv -> act -> pointwise -> act) stages; shared by all three nets.
template <class S>
class ConvStack {
public:
    ConvStack(int in_ch, int in_w, const std::vector<ConvStageSpec>& stages) {
        int ch = in_ch;
        int w = in_w;
        for (const auto& s : stages) {
            const ConvGeom g = ConvGeom::same_padded(ch, s.channels, s.kernel,
                                                     s.stride, w);
            convs_.emplace_back(g);
            acts_.emplace_back(static_cast<S>(kLeakySlope));
            pointwise_.emplace_back(s.channels, s.channels, g.out_w);
            acts_.emplace_back(static_cast<S>(kLeakySlope));
            ch = s.channels;
            w = g.out_w;
        }
        out_ch_ = ch;
        out_w_ = w;
    }

    int out_ch() const { return out_ch_; }
    int out_w() const { return out_w_; }

    void init(Rng& rng) {
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            convs_[i].init(rng, kInitStd);
            pointwise_[i].init(rng, kInitStd);
        }
    }

    void collect(ParamSet<S>& ps, const std::string& prefix) {
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            convs_[i].collect(ps, prefix + ".conv" + std::to_string(i));
            pointwise_[i].collect(ps, prefix + ".proj" + std::to_string(i));
        }
    }

    Mat<S> forward(const Mat<S>& x) {
        Mat<S> h = x;
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            h = acts_[2 * i].forward(convs_[i].forward(h));
            h = acts_[2 * i + 1].forward(pointwise_[i].forward(h));
        }
        return h;
    }

    Mat<S> backward(const Mat<S>& dy, bool want_dx) {
        Mat<S> d = dy;
        for (std::size_t i = convs_.size(); i-- > 0;) {
            d = pointwise_[i].backward(acts_[2 * i + 1].backward(d));
            d = convs_[i].backward(acts_[2 * i].backward(d), want_dx || i > 0);
        }
        return d;
    }

private:
    std::vector<Conv1d<S>> convs_;
    std::vector<Pointwise<S>> pointwise_;
    std::vector<LeakyRelu<S>> acts_;
    int out_ch_ = 0;
    int out_w_ = 0;
};

template <class S>
class Encoder {
public:
    explicit Encoder(const ArchSpec& arch)
        : sp_dim_(arch.sp_dim),
          stack_(1, arch.sp_dim, arch.encoder),
          head_mean_(stack_.out_ch() * stack_.out_w(), arch.latent_dim),
          head_log_var_(stack_.out_ch() * stack_.out_w(), arch.latent_dim) {}

    void init(Rng& rng) {
        stack_.init(rng);
        head_mean_.init(rng, kInitStd);
        head_log_var_.init(rng, kInitStd);
    }

    void collect(ParamSet<S>& ps) {
        stack_.collect(ps, "encoder");
        head_mean_.collect(ps, "encoder.mean");
        head_log_var_.collect(ps, "encoder.log_var");
    }

    LatentCodeT<S> forward(const Mat<S>& frames) {
        if (frames.rows() != sp_dim_)
            throw ShapeError("encoder input: got " + std::to_string(frames.rows()) +
                             " rows, expected " + std::to_string(sp_dim_));
        const Mat<S> h = stack_.forward(frames);
        return {head_mean_.forward(h), head_log_var_.forward(h)};
    }

    Mat<S> backward(const Mat<S>& dmean, const Mat<S>& dlog_var,
                    bool want_dx = false) {
        Mat<S> dh = head_mean_.backward(dmean);
        dh += head_log_var_.backward(dlog_var);
        return stack_.backward(dh, want_dx);
    }

private:
    int sp_dim_;
    ConvStack<S> stack_;
    Dense<S> head_mean_;
    Dense<S> head_log_var_;
};

template <class S>
class Decoder {
public:
    explicit Decoder(const ArchSpec& arch)
        : in_dim_(arch.latent_dim + arch.cond_dim),
          stem_w_(arch.decoder_stem_width()),
          stem_(in_dim_, arch.decoder_stem_channels * stem_w_),
          stem_act_(static_cast<S>(kLeakySlope)) {
        int ch = arch.decoder_stem_channels;
        int w = stem_w_;
        for (const auto& s : arch.decoder_up) {
            ups_.emplace_back(ch, s.channels, s.kernel, s.stride, w);
            acts_.emplace_back(static_cast<S>(kLeakySlope));
            w *= s.stride;
            pointwise_.emplace_back(s.channels, s.channels, w);
            acts_.emplace_back(static_cast<S>(kLeakySlope));
            ch = s.channels;
        }
        if (w != arch.sp_dim)
            throw ConfigError("decoder upsampling reaches width " + std::to_string(w) +
                              ", expected " + std::to_string(arch.sp_dim));
        const ConvGeom fin = ConvGeom::same_padded(ch, 1, arch.decoder_final_kernel,
                                                   1, arch.sp_dim);
        final_.emplace(fin);
    }

    int in_dim() const { return in_dim_; }

    void init(Rng& rng) {
        stem_.init(rng, kInitStd);
        for (std::size_t i = 0; i < ups_.size(); ++i) {
            ups_[i].init(rng, kInitStd);
            pointwise_[i].init(rng, kInitStd);
        }
        final_->init(rng, kInitStd);
    }

    void collect(ParamSet<S>& ps) {
        stem_.collect(ps, "decoder.stem");
        for (std::size_t i = 0; i < ups_.size(); ++i) {
            ups_[i].collect(ps, "decoder.up" + std::to_string(i));
            pointwise_[i].collect(ps, "decoder.proj" + std::to_string(i));
        }
        final_->collect(ps, "decoder.out");
    }

    // z_cond: (latent_dim + cond_dim) x B; rows are [z; conditioning].
    // Output is a linear map of the last hidden stage: log-spectrum frames.
    Mat<S> forward(const Mat<S>& z_cond) {
        if (z_cond.rows() != in_dim_)
            throw ShapeError("decoder input: got " + std::to_string(z_cond.rows()) +
                             " rows, expected " + std::to_string(in_dim_));
        Mat<S> h = stem_act_.forward(stem_.forward(z_cond));
        for (std::size_t i = 0; i < ups_.size(); ++i) {
            h = acts_[2 * i].forward(ups_[i].forward(h));
            h = acts_[2 * i + 1].forward(pointwise_[i].forward(h));
        }
        return final_->forward(h);
    }

    Mat<S> backward(const Mat<S>& dy, bool want_dx = true) {
        Mat<S> d = final_->backward(dy);
        for (std::size_t i = ups_.size(); i-- > 0;) {
            d = pointwise_[i].backward(acts_[2 * i + 1].backward(d));
            d = ups_[i].backward(acts_[2 * i].backward(d));
        }
        return stem_.backward(stem_act_.backward(d), want_dx);
    }

private:
    int in_dim_;
    int stem_w_;
    Dense<S> stem_;
    LeakyRelu<S> stem_act_;
    std::vector<ConvTranspose1d<S>> ups_;
    std::vector<Pointwise<S>> pointwise_;
    std::vector<LeakyRelu<S>> acts_;
    std::optional<Conv1d<S>> final_;
};

// Scalar critic; no output nonlinearity, scores are unbounded.
template <class S>
class Critic {
public:
    explicit Critic(const ArchSpec& arch)
        : sp_dim_(arch.sp_dim),
          stack_(1, arch.sp_dim, arch.critic),
          head_(stack_.out_ch() * stack_.out_w(), 1) {}

    void init(Rng& rng) {
        stack_.init(rng);
        head_.init(rng, kInitStd);
    }

    void collect(ParamSet<S>& ps) {
        stack_.collect(ps, "critic");
        head_.collect(ps, "critic.head");
    }

    // Returns 1 x B scores.
    Mat<S> forward(const Mat<S>& frames) {
        if (frames.rows() != sp_dim_)
            throw ShapeError("critic input: got " + std::to_string(frames.rows()) +
                             " rows, expected " + std::to_string(sp_dim_));
        return head_.forward(stack_.forward(frames));
    }

    Mat<S> backward(const Mat<S>& dscores, bool want_dx = false) {
        return stack_.backward(head_.backward(dscores), want_dx);
    }

private:
    int sp_dim_;
    ConvStack<S> stack_;
    Dense<S> head_;
};

} // namespace svc::nn
