#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xsal/random.hpp"

namespace xsal::test {

Image random_image(int width, int height, std::uint64_t seed, int channels) {
    Image img(width, height, channels);
    auto rng = make_stream(seed, 0xC0FFEE);
    for (auto& v : img.data()) v = static_cast<float>(uniform01(rng));
    return img;
}

Image constant_image(int width, int height, float value, int channels) {
    return Image(width, height, channels, value);
}

Image block_image(int width, int height, int x0, int y0, int side) {
    Image img(width, height, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = y0; y < y0 + side; ++y)
            for (int x = x0; x < x0 + side; ++x) img.at(c, x, y) = 1.0f;
    return img;
}

Image blob_image(int width, int height, std::uint64_t seed) {
    auto rng = make_stream(seed, 0xB10B);
    const double margin = 12.0;
    const double cx = margin + uniform01(rng) * (width - 2 * margin);
    const double cy = margin + uniform01(rng) * (height - 2 * margin);
    const double s = 4.0;
    const double bg = 0.05;
    Image img(width, height, 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double r2 = (x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy);
            const auto v = static_cast<float>(bg + (1.0 - bg) * std::exp(-r2 / (2 * s * s)));
            for (int c = 0; c < 3; ++c) img.at(c, x, y) = v;
        }
    return img;
}

std::vector<Detection> ToyAdapter::detect(const Image& image) {
    check_input(*this, image);
    std::vector<bool> none(4, false);
    return {{box(), 0, static_cast<float>(toy_score(image, none, 0.0f))}};
}

std::vector<Detection> CountingAdapter::detect(const Image& image) {
    ++calls_;
    return inner_.detect(image);
}

std::vector<double> oracle_resize(const std::vector<double>& src, int sw, int sh, int dw, int dh) {
    auto coord = [](int d, int s_len, int d_len) {
        double s = (d + 0.5) * static_cast<double>(s_len) / d_len - 0.5;
        if (s < 0) s = 0;
        if (s > s_len - 1) s = s_len - 1;
        return s;
    };
    std::vector<double> out(static_cast<std::size_t>(dw) * dh);
    for (int y = 0; y < dh; ++y) {
        const double sy = coord(y, sh, dh);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double fy = sy - y0;
        for (int x = 0; x < dw; ++x) {
            const double sx = coord(x, sw, dw);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double fx = sx - x0;
            const double a = src[y0 * sw + x0], b = src[y0 * sw + x1];
            const double c = src[y1 * sw + x0], d = src[y1 * sw + x1];
            const double top = a + (b - a) * fx;
            const double bottom = c + (d - c) * fx;
            out[static_cast<std::size_t>(y) * dw + x] = top + (bottom - top) * fy;
        }
    }
    return out;
}

std::vector<double> oracle_gradcam(const FeatureStack& features, const GradientStack& grads, OracleRelu relu,
                                   int out_w, int out_h) {
    const int w = features.width();
    const int h = features.height();
    std::vector<double> s(static_cast<std::size_t>(w) * h, 0.0);
    for (std::size_t i = 0; i < features.count(); ++i) {
        double alpha = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) alpha += grads[i].at(x, y);
        alpha /= static_cast<double>(w) * h;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double term = alpha * features[i].at(x, y);
                if (relu == OracleRelu::per_term) term = std::max(term, 0.0);
                s[static_cast<std::size_t>(y) * w + x] += term;
            }
    }
    if (relu == OracleRelu::after_sum)
        for (auto& v : s) v = std::max(v, 0.0);
    if (out_w <= 0 || out_h <= 0) return s;
    // The library keeps the feature-resolution map in float before resizing.
    for (auto& v : s) v = static_cast<float>(v);
    return oracle_resize(s, w, h, out_w, out_h);
}

namespace {

double matched_score(DetectorAdapter& adapter, const Image& image, const Detection& target) {
    double best_iou = -1.0, best = 0.0;
    for (const auto& d : adapter.detect(image)) {
        if (d.class_id != target.class_id || d.score < 0.05) continue;
        const double ix = std::max(0.0f, std::min(d.box.x2, target.box.x2) - std::max(d.box.x1, target.box.x1));
        const double iy = std::max(0.0f, std::min(d.box.y2, target.box.y2) - std::max(d.box.y1, target.box.y1));
        const double inter = ix * iy;
        const double uni = static_cast<double>(d.box.area()) + target.box.area() - inter;
        const double v = uni > 0 ? inter / uni : 0.0;
        if (v < 0.5) continue;
        if (v > best_iou || (v == best_iou && d.score > best)) {
            best_iou = v;
            best = d.score;
        }
    }
    return best;
}

}  // namespace

std::vector<double> oracle_sidu(DetectorAdapter& adapter, const Image& image, const Detection& target,
                                double sigma, double threshold) {
    const int W = image.width();
    const int H = image.height();
    const auto features = adapter.features(image);
    const double p_o = matched_score(adapter, image, target);

    const std::size_t n = features.count();
    std::vector<std::vector<double>> masks(n);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& f = features[i];
        double lo = f[0], hi = f[0];
        for (std::size_t k = 0; k < f.size(); ++k) {
            lo = std::min<double>(lo, f[k]);
            hi = std::max<double>(hi, f[k]);
        }
        std::vector<double> norm(f.size(), 0.0);
        if (hi > lo)
            for (std::size_t k = 0; k < f.size(); ++k) norm[k] = static_cast<float>((f[k] - lo) / (hi - lo));
        auto up = oracle_resize(norm, f.width(), f.height(), W, H);
        for (auto& v : up) v = static_cast<float>(v) >= static_cast<float>(threshold) ? 1.0 : 0.0;
        masks[i] = up;

        Image masked = image;
        for (int c = 0; c < image.channels(); ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) masked.at(c, x, y) = image.at(c, x, y) * static_cast<float>(up[y * W + x]);
        p[i] = matched_score(adapter, masked, target);
    }

    std::vector<double> s(static_cast<std::size_t>(W) * H, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double sd = std::exp(-std::abs(p_o - p[i]) / (2.0 * sigma * sigma));
        double u = 0.0;
        for (std::size_t j = 0; j < n; ++j) u += std::abs(p[i] - p[j]);
        for (std::size_t k = 0; k < s.size(); ++k) s[k] += sd * u * masks[i][k];
    }
    return s;
}

double toy_score(const Image& image, const std::vector<bool>& modified, float fill) {
    double num = 0.0, den = 0.0;
    for (int p = 0; p < 4; ++p) {
        double mean = 0.0;
        for (int c = 0; c < image.channels(); ++c)
            mean += modified[p] ? fill : image.at(c, p % 2, p / 2);
        mean /= image.channels();
        num += ToyAdapter::weights[p] * mean;
        den += ToyAdapter::weights[p];
    }
    return num / den;
}

std::pair<double, double> oracle_toy_aucs(const std::vector<std::size_t>& order, int steps) {
    std::vector<double> del, ins;
    for (int k = 0; k <= steps; ++k) {
        const std::size_t m = static_cast<std::size_t>(k) * 4 / steps;
        double removed = 0.0;
        for (std::size_t j = 0; j < m; ++j) removed += ToyAdapter::weights[order[j]];
        del.push_back((10.0 - removed) / 10.0);
        ins.push_back(removed / 10.0);
    }
    auto area = [steps](const std::vector<double>& v) {
        double a = 0.0;
        for (int k = 0; k < steps; ++k) a += (v[k] + v[k + 1]) / 2.0 / steps;
        return a;
    };
    return {area(del), area(ins)};
}

double max_fd_relative_error(const MicroDetector& det, const Image& image, const Detection& target, double eps) {
    const auto features = det.features(image);
    const auto grads = det.grad_logit_wrt_features(image, target);
    const auto [cx, cy] = det.cell_of(target.box);
    double worst = 0.0;
    for (std::size_t i = 0; i < features.count(); ++i)
        for (int y = 0; y < features.height(); ++y)
            for (int x = 0; x < features.width(); ++x) {
                auto plus = features.maps();
                auto minus = features.maps();
                const float f = features[i].at(x, y);
                plus[i].at(x, y) = static_cast<float>(f + eps);
                minus[i].at(x, y) = static_cast<float>(f - eps);
                const double h = static_cast<double>(plus[i].at(x, y)) - minus[i].at(x, y);
                const double fd = (det.class_logit(MapStack(plus), cx, cy, target.class_id) -
                                   det.class_logit(MapStack(minus), cx, cy, target.class_id)) /
                                  h;
                const double an = grads[i].at(x, y);
                const double scale = std::max(std::abs(fd), std::abs(an));
                if (scale > 0) worst = std::max(worst, std::abs(fd - an) / scale);
            }
    return worst;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double rank = (i + j) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

MicroDetConfig random_config(std::uint64_t seed) {
    auto rng = make_stream(seed, 77);
    MicroDetConfig cfg;
    cfg.width = 16 + 4 * static_cast<int>(uniform_below(rng, 7));
    cfg.height = 16 + 4 * static_cast<int>(uniform_below(rng, 7));
    cfg.features = 2 + static_cast<int>(uniform_below(rng, 7));
    cfg.classes = 1 + static_cast<int>(uniform_below(rng, 3));
    return cfg;
}

}  // namespace xsal::test
