#pragma once

#include "svc/errors.hpp"
#include "svc/nn/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <string>
#include <vector>

// Minimal 1-d conv net toolkit with hand-written backprop.
//
// Layout convention: a batch of feature maps with C channels and width W is
// one (C*W) x B column-major matrix; row index w*C + c ("channel-minor").
// Because columns are contiguous, the same buffer can be reinterpreted as a
// C x (W*B) matrix, which turns per-position channel maps (bias add, 1x1
// projections) into plain GEMM with no data movement.
//
// Layers are templated on the scalar so the same code runs in float for
// training and double for finite-difference gradient checks. backward()
// accumulates into the parameter gradients; callers zero them between steps.

namespace svc::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Named view over one parameter tensor and its gradient.
template <class S>
struct ParamView {
    std::string name;
    S* value = nullptr;
    S* grad = nullptr;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;  // 1 for bias vectors

    Eigen::Index size() const { return rows * cols; }
};

// Flat list of parameter views. Rebuilt on demand (views hold raw pointers,
// so they must not outlive a move/copy of the owning layers).
template <class S>
class ParamSet {
public:
    void add(std::string name, Mat<S>& value, Mat<S>& grad) {
        views_.push_back({std::move(name), value.data(), grad.data(),
                          value.rows(), value.cols()});
    }
    void add(std::string name, Vec<S>& value, Vec<S>& grad) {
        views_.push_back({std::move(name), value.data(), grad.data(),
                          value.size(), 1});
    }

    const std::vector<ParamView<S>>& views() const { return views_; }
    std::size_t count() const { return views_.size(); }

    Eigen::Index total_size() const {
        Eigen::Index n = 0;
        for (const auto& v : views_) n += v.size();
        return n;
    }

    void zero_grads() {
        for (auto& v : views_)
            Eigen::Map<Vec<S>>(v.grad, v.size()).setZero();
    }

    // Clamp every parameter into [-bound, bound].
    void clip_values(S bound) {
        for (auto& v : views_) {
            Eigen::Map<Vec<S>> p(v.value, v.size());
            p = p.cwiseMax(-bound).cwiseMin(bound);
        }
    }

private:
    std::vector<ParamView<S>> views_;
};

template <class S>
void gaussian_fill(Rng& rng, S* data, Eigen::Index n, double stddev) {
    for (Eigen::Index i = 0; i < n; ++i)
        data[i] = static_cast<S>(rng.gaussian() * stddev);
}

// Geometry of one 1-d convolution with symmetric ("same") zero padding:
// out_w = ceil(in_w / stride).
struct ConvGeom {
    int in_ch = 0, out_ch = 0, kernel = 0, stride = 1;
    int in_w = 0, out_w = 0, pad_left = 0;

    static ConvGeom same_padded(int in_ch, int out_ch, int kernel, int stride,
                                int in_w) {
        ConvGeom g;
        g.in_ch = in_ch;
        g.out_ch = out_ch;
        g.kernel = kernel;
        g.stride = stride;
        g.in_w = in_w;
        g.out_w = (in_w + stride - 1) / stride;
        const int pad_total = std::max(0, (g.out_w - 1) * stride + kernel - in_w);
        g.pad_left = pad_total / 2;
        return g;
    }

    // True when every (input, output) position pair falls under the kernel,
    // i.e. the layer is a dense linear map across the whole width. Wide
    // kernels (~2x the width) hit this; materializing the dense matrix is
    // then far cheaper than an im2col lowering dominated by zero padding.
    bool full_band() const {
        return pad_left >= (out_w - 1) * stride && kernel >= in_w + pad_left;
    }
};

// 1-d convolution. Weights are out_ch x (kernel*in_ch), column t*in_ch + ci.
template <class S>
class Conv1d {
public:
    explicit Conv1d(const ConvGeom& g)
        : g_(g), w_(g.out_ch, g.kernel * g.in_ch), b_(g.out_ch),
          gw_(g.out_ch, g.kernel * g.in_ch), gb_(g.out_ch) {
        w_.setZero();
        b_.setZero();
        gw_.setZero();
        gb_.setZero();
    }

    const ConvGeom& geom() const { return g_; }

    void init(Rng& rng, double stddev) {
        gaussian_fill(rng, w_.data(), w_.size(), stddev);
        b_.setZero();
    }

    void collect(ParamSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".w", w_, gw_);
        ps.add(prefix + ".b", b_, gb_);
    }

    Mat<S> forward(const Mat<S>& x) {
        check_rows(x, g_.in_ch * g_.in_w, "conv input");
        const Eigen::Index b = x.cols();
        Mat<S> y(static_cast<Eigen::Index>(g_.out_ch) * g_.out_w, b);
        Eigen::Map<Mat<S>> ymap(y.data(), g_.out_ch,
                                static_cast<Eigen::Index>(g_.out_w) * b);
        if (g_.full_band()) {
            x_ = x;
            build_tmat();
            y.noalias() = tmat_ * x;
        } else {
            gather(x);
            ymap.noalias() = w_ * cols_;
        }
        ymap.colwise() += b_;
        return y;
    }

    // Accumulates parameter gradients; returns d(input) when requested.
    Mat<S> backward(const Mat<S>& dy, bool want_dx = true) {
        const Eigen::Index b = dy.cols();
        Eigen::Map<const Mat<S>> dymap(dy.data(), g_.out_ch,
                                       static_cast<Eigen::Index>(g_.out_w) * b);
        gb_ += dymap.rowwise().sum();
        Mat<S> dx;
        if (g_.full_band()) {
            Mat<S> dt = dy * x_.transpose();
            for (int j = 0; j < g_.out_w; ++j)
                for (int t = 0; t < g_.kernel; ++t) {
                    const int i = j * g_.stride + t - g_.pad_left;
                    if (i < 0 || i >= g_.in_w) continue;
                    gw_.middleCols(static_cast<Eigen::Index>(t) * g_.in_ch, g_.in_ch) +=
                        dt.block(static_cast<Eigen::Index>(j) * g_.out_ch,
                                 static_cast<Eigen::Index>(i) * g_.in_ch,
                                 g_.out_ch, g_.in_ch);
                }
            if (want_dx)
                dx.noalias() = tmat_.transpose() * dy;
        } else {
            gw_.noalias() += dymap * cols_.transpose();
            if (want_dx) {
                Mat<S> dcols = w_.transpose() * dymap;
                dx = scatter(dcols, b);
            }
        }
        return dx;
    }

    Mat<S> w_;
    Vec<S> b_;
    Mat<S> gw_;
    Vec<S> gb_;

private:
    static void check_rows(const Mat<S>& x, Eigen::Index want, const char* what) {
        if (x.rows() != want)
            throw ShapeError(std::string(what) + ": got " + std::to_string(x.rows()) +
                             " rows, expected " + std::to_string(want));
    }

    // im2col: (kernel*in_ch) x (out_w*B), column index b*out_w + j.
    void gather(const Mat<S>& x) {
        const Eigen::Index b = x.cols();
        cols_.resize(static_cast<Eigen::Index>(g_.kernel) * g_.in_ch,
                     static_cast<Eigen::Index>(g_.out_w) * b);
        cols_.setZero();
        for (Eigen::Index bi = 0; bi < b; ++bi)
            for (int j = 0; j < g_.out_w; ++j) {
                const int p0 = j * g_.stride - g_.pad_left;
                const int t_lo = std::max(0, -p0);
                const int t_hi = std::min(g_.kernel, g_.in_w - p0);
                if (t_hi <= t_lo) continue;
                cols_.block(static_cast<Eigen::Index>(t_lo) * g_.in_ch,
                            bi * g_.out_w + j,
                            static_cast<Eigen::Index>(t_hi - t_lo) * g_.in_ch, 1) =
                    x.block(static_cast<Eigen::Index>(p0 + t_lo) * g_.in_ch, bi,
                            static_cast<Eigen::Index>(t_hi - t_lo) * g_.in_ch, 1);
            }
    }

    // Adjoint of gather: scatter-add columns back into input layout.
    Mat<S> scatter(const Mat<S>& dcols, Eigen::Index b) const {
        Mat<S> dx(static_cast<Eigen::Index>(g_.in_ch) * g_.in_w, b);
        dx.setZero();
        for (Eigen::Index bi = 0; bi < b; ++bi)
            for (int j = 0; j < g_.out_w; ++j) {
                const int p0 = j * g_.stride - g_.pad_left;
                const int t_lo = std::max(0, -p0);
                const int t_hi = std::min(g_.kernel, g_.in_w - p0);
                if (t_hi <= t_lo) continue;
                dx.block(static_cast<Eigen::Index>(p0 + t_lo) * g_.in_ch, bi,
                         static_cast<Eigen::Index>(t_hi - t_lo) * g_.in_ch, 1) +=
                    dcols.block(static_cast<Eigen::Index>(t_lo) * g_.in_ch,
                                bi * g_.out_w + j,
                                static_cast<Eigen::Index>(t_hi - t_lo) * g_.in_ch, 1);
            }
        return dx;
    }

    // Dense (out_ch*out_w) x (in_ch*in_w) matrix equivalent of the layer.
    void build_tmat() {
        tmat_.resize(static_cast<Eigen::Index>(g_.out_ch) * g_.out_w,
                     static_cast<Eigen::Index>(g_.in_ch) * g_.in_w);
        for (int j = 0; j < g_.out_w; ++j)
            for (int i = 0; i < g_.in_w; ++i) {
                const int t = i - j * g_.stride + g_.pad_left;  // in range: full_band
                tmat_.block(static_cast<Eigen::Index>(j) * g_.out_ch,
                            static_cast<Eigen::Index>(i) * g_.in_ch,
                            g_.out_ch, g_.in_ch) =
                    w_.middleCols(static_cast<Eigen::Index>(t) * g_.in_ch, g_.in_ch);
            }
    }

    ConvGeom g_;
    Mat<S> cols_;  // saved lowering (im2col path)
    Mat<S> x_;     // saved input (full-band path)
    Mat<S> tmat_;  // dense equivalent built from w_ each forward
};

// Transposed 1-d convolution mapping width in_w -> in_w*stride, implemented
// as the adjoint of an internal "reference" convolution that maps
// in_w*stride -> in_w with the same kernel/stride and pad_total = kernel -
// stride. forward() here is the reference conv's input-gradient, and the
// weight gradient swaps the roles of input and output gradient.
template <class S>
class ConvTranspose1d {
public:
    ConvTranspose1d(int in_ch, int out_ch, int kernel, int stride, int in_w)
        : ref_(make_ref(in_ch, out_ch, kernel, stride, in_w)),
          w_(in_ch, kernel * out_ch), b_(out_ch),
          gw_(in_ch, kernel * out_ch), gb_(out_ch) {
        if (kernel < stride)
            throw ConfigError("transposed conv kernel " + std::to_string(kernel) +
                              " smaller than stride " + std::to_string(stride));
        w_.setZero();
        b_.setZero();
        gw_.setZero();
        gb_.setZero();
    }

    int out_w() const { return ref_.in_w; }
    int out_ch() const { return ref_.in_ch; }

    void init(Rng& rng, double stddev) {
        gaussian_fill(rng, w_.data(), w_.size(), stddev);
        b_.setZero();
    }

    void collect(ParamSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".w", w_, gw_);
        ps.add(prefix + ".b", b_, gb_);
    }

    Mat<S> forward(const Mat<S>& x) {
        if (x.rows() != static_cast<Eigen::Index>(ref_.out_ch) * ref_.out_w)
            throw ShapeError("tconv input: got " + std::to_string(x.rows()) +
                             " rows, expected " +
                             std::to_string(ref_.out_ch * ref_.out_w));
        x_ = x;
        const Eigen::Index b = x.cols();
        Eigen::Map<const Mat<S>> xmap(x.data(), ref_.out_ch,
                                      static_cast<Eigen::Index>(ref_.out_w) * b);
        Mat<S> dcols = w_.transpose() * xmap;  // (kernel*out_ch_here) x (out_w_ref*B)
        Mat<S> y = scatter_ref(dcols, b);
        Eigen::Map<Mat<S>> ymap(y.data(), ref_.in_ch,
                                static_cast<Eigen::Index>(ref_.in_w) * b);
        ymap.colwise() += b_;
        return y;
    }

    Mat<S> backward(const Mat<S>& dy, bool want_dx = true) {
        const Eigen::Index b = dy.cols();
        Eigen::Map<const Mat<S>> dymap(dy.data(), ref_.in_ch,
                                       static_cast<Eigen::Index>(ref_.in_w) * b);
        gb_ += dymap.rowwise().sum();
        gather_ref(dy, b);  // lowers dy over the reference geometry
        Eigen::Map<const Mat<S>> xmap(x_.data(), ref_.out_ch,
                                      static_cast<Eigen::Index>(ref_.out_w) * b);
        gw_.noalias() += xmap * cols_.transpose();
        Mat<S> dx;
        if (want_dx) {
            dx.resize(x_.rows(), b);
            Eigen::Map<Mat<S>> dxmap(dx.data(), ref_.out_ch,
                                     static_cast<Eigen::Index>(ref_.out_w) * b);
            dxmap.noalias() = w_ * cols_;
        }
        return dx;
    }

    Mat<S> w_;  // in_ch_here x (kernel*out_ch_here): reference-conv layout
    Vec<S> b_;
    Mat<S> gw_;
    Vec<S> gb_;

private:
    static ConvGeom make_ref(int in_ch, int out_ch, int kernel, int stride,
                             int in_w) {
        // Reference conv: out_ch_here channels at width in_w*stride down to
        // in_ch_here at width in_w; pad chosen so widths match exactly.
        ConvGeom g = ConvGeom::same_padded(out_ch, in_ch, kernel, stride,
                                           in_w * stride);
        return g;
    }

    // Lower x (reference-conv input layout) into cols_.
    void gather_ref(const Mat<S>& x, Eigen::Index b) {
        const ConvGeom& g = ref_;
        cols_.resize(static_cast<Eigen::Index>(g.kernel) * g.in_ch,
                     static_cast<Eigen::Index>(g.out_w) * b);
        cols_.setZero();
        for (Eigen::Index bi = 0; bi < b; ++bi)
            for (int j = 0; j < g.out_w; ++j) {
                const int p0 = j * g.stride - g.pad_left;
                const int t_lo = std::max(0, -p0);
                const int t_hi = std::min(g.kernel, g.in_w - p0);
                if (t_hi <= t_lo) continue;
                cols_.block(static_cast<Eigen::Index>(t_lo) * g.in_ch,
                            bi * g.out_w + j,
                            static_cast<Eigen::Index>(t_hi - t_lo) * g.in_ch, 1) =
                    x.block(static_cast<Eigen::Index>(p0 + t_lo) * g.in_ch, bi,
                            static_cast<Eigen::Index>(t_hi - t_lo) * g.in_ch, 1);
            }
    }

    Mat<S> scatter_ref(const Mat<S>& dcols, Eigen::Index b) const {
        const ConvGeom& g = ref_;
        Mat<S> dx(static_cast<Eigen::Index>(g.in_ch) * g.in_w, b);
        dx.setZero();
        for (Eigen::Index bi = 0; bi < b; ++bi)
            for (int j = 0; j < g.out_w; ++j) {
                const int p0 = j * g.stride - g.pad_left;
                const int t_lo = std::max(0, -p0);
                const int t_hi = std::min(g.kernel, g.in_w - p0);
                if (t_hi <= t_lo) continue;
                dx.block(static_cast<Eigen::Index>(p0 + t_lo) * g.in_ch, bi,
                         static_cast<Eigen::Index>(t_hi - t_lo) * g.in_ch, 1) +=
                    dcols.block(static_cast<Eigen::Index>(t_lo) * g.in_ch,
                                bi * g.out_w + j,
                                static_cast<Eigen::Index>(t_hi - t_lo) * g.in_ch, 1);
            }
        return dx;
    }

    ConvGeom ref_;
    Mat<S> x_;
    Mat<S> cols_;
};

// Per-position channel projection (1x1 convolution) across a whole map.
template <class S>
class Pointwise {
public:
    Pointwise(int in_ch, int out_ch, int width)
        : in_ch_(in_ch), out_ch_(out_ch), width_(width), w_(out_ch, in_ch),
          b_(out_ch), gw_(out_ch, in_ch), gb_(out_ch) {
        w_.setZero();
        b_.setZero();
        gw_.setZero();
        gb_.setZero();
    }

    void init(Rng& rng, double stddev) {
        gaussian_fill(rng, w_.data(), w_.size(), stddev);
        b_.setZero();
    }

    void collect(ParamSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".w", w_, gw_);
        ps.add(prefix + ".b", b_, gb_);
    }

    Mat<S> forward(const Mat<S>& x) {
        if (x.rows() != static_cast<Eigen::Index>(in_ch_) * width_)
            throw ShapeError("pointwise input: got " + std::to_string(x.rows()) +
                             " rows, expected " + std::to_string(in_ch_ * width_));
        x_ = x;
        const Eigen::Index b = x.cols();
        Eigen::Map<const Mat<S>> xmap(x.data(), in_ch_,
                                      static_cast<Eigen::Index>(width_) * b);
        Mat<S> y(static_cast<Eigen::Index>(out_ch_) * width_, b);
        Eigen::Map<Mat<S>> ymap(y.data(), out_ch_,
                                static_cast<Eigen::Index>(width_) * b);
        ymap.noalias() = w_ * xmap;
        ymap.colwise() += b_;
        return y;
    }

    Mat<S> backward(const Mat<S>& dy, bool want_dx = true) {
        const Eigen::Index b = dy.cols();
        Eigen::Map<const Mat<S>> dymap(dy.data(), out_ch_,
                                       static_cast<Eigen::Index>(width_) * b);
        Eigen::Map<const Mat<S>> xmap(x_.data(), in_ch_,
                                      static_cast<Eigen::Index>(width_) * b);
        gw_.noalias() += dymap * xmap.transpose();
        gb_ += dymap.rowwise().sum();
        Mat<S> dx;
        if (want_dx) {
            dx.resize(x_.rows(), b);
            Eigen::Map<Mat<S>> dxmap(dx.data(), in_ch_,
                                     static_cast<Eigen::Index>(width_) * b);
            dxmap.noalias() = w_.transpose() * dymap;
        }
        return dx;
    }

    Mat<S> w_;
    Vec<S> b_;
    Mat<S> gw_;
    Vec<S> gb_;

private:
    int in_ch_, out_ch_, width_;
    Mat<S> x_;
};

// Fully connected layer over whole columns.
template <class S>
class Dense {
public:
    Dense(int in_dim, int out_dim)
        : w_(out_dim, in_dim), b_(out_dim), gw_(out_dim, in_dim), gb_(out_dim) {
        w_.setZero();
        b_.setZero();
        gw_.setZero();
        gb_.setZero();
    }

    void init(Rng& rng, double stddev) {
        gaussian_fill(rng, w_.data(), w_.size(), stddev);
        b_.setZero();
    }

    void collect(ParamSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".w", w_, gw_);
        ps.add(prefix + ".b", b_, gb_);
    }

    Mat<S> forward(const Mat<S>& x) {
        if (x.rows() != w_.cols())
            throw ShapeError("dense input: got " + std::to_string(x.rows()) +
                             " rows, expected " + std::to_string(w_.cols()));
        x_ = x;
        Mat<S> y = w_ * x;
        y.colwise() += b_;
        return y;
    }

    Mat<S> backward(const Mat<S>& dy, bool want_dx = true) {
        gw_.noalias() += dy * x_.transpose();
        gb_ += dy.rowwise().sum();
        if (!want_dx) return {};
        return w_.transpose() * dy;
    }

    Mat<S> w_;
    Vec<S> b_;
    Mat<S> gw_;
    Vec<S> gb_;

private:
    Mat<S> x_;
};

// Leaky ReLU; stores the forward slope factor per element for backward.
template <class S>
class LeakyRelu {
public:
    explicit LeakyRelu(S slope) : slope_(slope) {}

    Mat<S> forward(const Mat<S>& x) {
        factor_ = (x.array() > S(0)).template cast<S>() * (S(1) - slope_) + slope_;
        return x.cwiseProduct(factor_);
    }

    Mat<S> backward(const Mat<S>& dy) { return dy.cwiseProduct(factor_); }

private:
    S slope_;
    Mat<S> factor_;
};

// Learned per-id vectors; columns of the table are ids.
template <class S>
class Embedding {
public:
    Embedding(int dim, int count)
        : table_(dim, count), gtable_(dim, count) {
        table_.setZero();
        gtable_.setZero();
    }

    int dim() const { return static_cast<int>(table_.rows()); }
    int count() const { return static_cast<int>(table_.cols()); }

    void init(Rng& rng, double stddev) {
        gaussian_fill(rng, table_.data(), table_.size(), stddev);
    }

    void collect(ParamSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".table", table_, gtable_);
    }

    Mat<S> lookup(const std::vector<int>& ids) const {
        Mat<S> out(table_.rows(), static_cast<Eigen::Index>(ids.size()));
        for (std::size_t i = 0; i < ids.size(); ++i) {
            check_id(ids[i]);
            out.col(static_cast<Eigen::Index>(i)) = table_.col(ids[i]);
        }
        return out;
    }

    void accumulate_grad(const std::vector<int>& ids, const Mat<S>& dcols) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            check_id(ids[i]);
            gtable_.col(ids[i]) += dcols.col(static_cast<Eigen::Index>(i));
        }
    }

    Mat<S> table_;
    Mat<S> gtable_;

private:
    void check_id(int id) const {
        if (id < 0 || id >= count())
            throw CompatibilityError("singer index " + std::to_string(id) +
                                     " outside table of " + std::to_string(count()));
    }
};

} // namespace svc::nn
