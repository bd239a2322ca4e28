#include "svc/evaluation.hpp"

#include "svc/errors.hpp"
#include "svc/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace svc {

namespace {

// Allpass re-expansion of a cepstrum onto the warped frequency axis
// (SPTK-style recursion). in holds m1+1 coefficients; returns m2+1.
Eigen::VectorXd warp_cepstrum(const Eigen::VectorXd& in, int m2, double a) {
    const int m1 = static_cast<int>(in.size()) - 1;
    const double b = 1.0 - a * a;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m2 + 1);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m2 + 1);
    for (int i = m1; i >= 0; --i) {
        d = g;
        g[0] = in[i] + a * d[0];
        if (m2 >= 1) g[1] = b * d[0] + a * d[1];
        for (int j = 2; j <= m2; ++j)
            g[j] = d[j - 1] + a * (d[j] - g[j - 1]);
    }
    return g;
}

Eigen::ArrayXd path_distances(const McepSequence& a, const McepSequence& b,
                              const std::vector<std::pair<Eigen::Index, Eigen::Index>>& path) {
    const Eigen::Index order = a.order();
    Eigen::ArrayXd d(static_cast<Eigen::Index>(path.size()));
    for (std::size_t i = 0; i < path.size(); ++i) {
        const auto da = a.coeffs.col(path[i].first).tail(order);
        const auto db = b.coeffs.col(path[i].second).tail(order);
        d[static_cast<Eigen::Index>(i)] = (da - db).norm();
    }
    return d;
}

} // namespace

McepSequence sp_to_mcep(const Eigen::MatrixXf& sp, int order, double warp) {
    if (sp.rows() != kSpectrumBins)
        throw ShapeError("sp_to_mcep: got " + std::to_string(sp.rows()) +
                         " bins, expected " + std::to_string(kSpectrumBins));
    if (order < 1 || order >= kSpectrumBins)
        throw ConfigError("cepstral order " + std::to_string(order) +
                          " outside [1, " + std::to_string(kSpectrumBins - 1) + ")");
    if (!(warp > -1.0 && warp < 1.0))
        throw ConfigError("warp coefficient must lie in (-1, 1), got " +
                          std::to_string(warp));
    if (!sp.allFinite())
        throw DegenerateDataError("spectrum contains non-finite values");

    const int bins = kSpectrumBins;
    const int n_fft = 2 * (bins - 1);

    // Floored log spectrum.
    Eigen::MatrixXd logsp =
        sp.cast<double>().cwiseMax(kLogSpectrumFloor).array().log().matrix();

    // Inverse DFT of the mirrored (real, even) log spectrum: one cosine-basis
    // GEMM gives every unique linear-frequency cepstrum coefficient.
    Eigen::MatrixXd basis(bins, bins);
    for (int m = 0; m < bins; ++m)
        for (int k = 0; k < bins; ++k) {
            const double w = (k == 0 || k == bins - 1) ? 1.0 : 2.0;
            basis(m, k) = w *
                          std::cos(2.0 * std::numbers::pi * m * k / n_fft) /
                          n_fft;
        }
    Eigen::MatrixXd lin_cep = basis * logsp;  // bins x T

    // The warping recursion substitutes the allpass into a one-sided series
    // sum_m b_m z^-m, while the rows above hold the two-sided real cepstrum
    // (log S = c0 + 2 sum c_m cos). The conventions agree except at order 0,
    // where b0 = c0 / 2; converting in and out keeps every output row in the
    // two-sided convention regardless of the warp value.
    lin_cep.row(0) *= 0.5;

    McepSequence out;
    out.coeffs.resize(order + 1, sp.cols());
    for (Eigen::Index t = 0; t < sp.cols(); ++t)
        out.coeffs.col(t) = warp_cepstrum(lin_cep.col(t), order, warp);
    out.coeffs.row(0) *= 2.0;
    return out;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> dtw_align(
    const McepSequence& a, const McepSequence& b) {
    const Eigen::Index ta = a.n_frames();
    const Eigen::Index tb = b.n_frames();
    if (ta == 0 || tb == 0)
        throw ShapeError("cannot align empty cepstrum sequences (" +
                         std::to_string(ta) + " vs " + std::to_string(tb) +
                         " frames)");
    if (a.order() != b.order())
        throw ShapeError("cepstral orders differ: " + std::to_string(a.order()) +
                         " vs " + std::to_string(b.order()));
    const Eigen::Index order = a.order();

    // Local cost: Euclidean distance over c1..c_order.
    const Eigen::MatrixXd fa = a.coeffs.bottomRows(order);
    const Eigen::MatrixXd fb = b.coeffs.bottomRows(order);

    Eigen::MatrixXd acc(ta, tb);
    // Backpointers: 0 diagonal, 1 from (i-1, j), 2 from (i, j-1).
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> back(ta, tb);
    for (Eigen::Index i = 0; i < ta; ++i) {
        for (Eigen::Index j = 0; j < tb; ++j) {
            const double cost = (fa.col(i) - fb.col(j)).norm();
            if (i == 0 && j == 0) {
                acc(0, 0) = cost;
                back(0, 0) = 0;
            } else if (i == 0) {
                acc(0, j) = acc(0, j - 1) + cost;
                back(0, j) = 2;
            } else if (j == 0) {
                acc(i, 0) = acc(i - 1, 0) + cost;
                back(i, 0) = 1;
            } else {
                const double diag = acc(i - 1, j - 1);
                const double up = acc(i - 1, j);
                const double left = acc(i, j - 1);
                double best = diag;
                std::uint8_t dir = 0;
                if (up < best) { best = up; dir = 1; }
                if (left < best) { best = left; dir = 2; }
                acc(i, j) = best + cost;
                back(i, j) = dir;
            }
        }
    }

    std::vector<std::pair<Eigen::Index, Eigen::Index>> path;
    Eigen::Index i = ta - 1, j = tb - 1;
    path.emplace_back(i, j);
    while (i != 0 || j != 0) {
        switch (back(i, j)) {
            case 0: --i; --j; break;
            case 1: --i; break;
            default: --j; break;
        }
        path.emplace_back(i, j);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

MetricReport mcd(const McepSequence& converted, const McepSequence& reference) {
    const auto path = dtw_align(converted, reference);
    const Eigen::ArrayXd d = path_distances(converted, reference, path);
    MetricReport r;
    r.mcd_db = 10.0 / std::numbers::ln10 *
               (d * std::sqrt(2.0)).mean();
    r.aligned_frames = static_cast<Eigen::Index>(path.size());
    r.converted_id = converted.id;
    r.reference_id = reference.id;
    return r;
}

MetricReport zero_effort_mcd(const FeatureTrack& source, const FeatureTrack& target) {
    McepSequence a = sp_to_mcep(source.sp);
    McepSequence b = sp_to_mcep(target.sp);
    a.id = "source";
    b.id = "target";
    return mcd(a, b);
}

} // namespace svc
