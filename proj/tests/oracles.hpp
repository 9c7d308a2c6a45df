#pragma once
// Independent reference implementations used only by the tests. Nothing
// here calls into the library's numerical code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "a4nt/nn.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix to_matrix(const a4nt::Tensor& t) {
    Matrix m(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t r = 0; r < t.rows(); ++r)
        for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = double(t.at(r, c));
    return m;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Hidden outputs of a single-layer LSTM, gate blocks (i, f, g, o), written
/// out one scalar at a time.
inline Matrix lstm_outputs(const Matrix& inputs, const Matrix& w_in, const Matrix& w_hid,
                           const std::vector<double>& bias) {
    const std::size_t H = w_hid.size();
    std::vector<double> h(H, 0.0), c(H, 0.0);
    Matrix out;
    for (const auto& x : inputs) {
        std::vector<double> z(4 * H, 0.0);
        for (std::size_t k = 0; k < 4 * H; ++k) {
            double acc = bias[k];
            for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w_in[i][k];
            for (std::size_t j = 0; j < H; ++j) acc += h[j] * w_hid[j][k];
            z[k] = acc;
        }
        std::vector<double> nh(H), nc(H);
        for (std::size_t j = 0; j < H; ++j) {
            const double ig = sigmoid(z[j]);
            const double fg = sigmoid(z[H + j]);
            const double gg = std::tanh(z[2 * H + j]);
            const double og = sigmoid(z[3 * H + j]);
            nc[j] = fg * c[j] + ig * gg;
            nh[j] = og * std::tanh(nc[j]);
        }
        h = nh;
        c = nc;
        out.push_back(h);
    }
    return out;
}

/// [h_{n-1}; mean(h_0..h_{n-2})] with h_0 twice for n = 1.
inline std::vector<double> final_and_mean(const Matrix& hs) {
    const std::size_t n = hs.size(), H = hs[0].size();
    std::vector<double> out(hs[n - 1]);
    std::vector<double> mean(H, 0.0);
    if (n == 1) {
        mean = hs[0];
    } else {
        for (std::size_t t = 0; t + 1 < n; ++t)
            for (std::size_t j = 0; j < H; ++j) mean[j] += hs[t][j] / double(n - 1);
    }
    out.insert(out.end(), mean.begin(), mean.end());
    return out;
}

/// F1 of one class from an explicit confusion count.
inline double f1(const std::vector<int>& truth, const std::vector<int>& pred, int positive) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (pred[i] == positive && truth[i] == positive) ++tp;
        if (pred[i] == positive && truth[i] != positive) ++fp;
        if (pred[i] != positive && truth[i] == positive) ++fn;
    }
    const double p = tp + fp ? double(tp) / (tp + fp) : 0.0;
    const double r = tp + fn ? double(tp) / (tp + fn) : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

/// Exact-match unigram score by enumerating every one-to-one alignment:
/// most matches first, then fewest chunks.
inline double meteor(const std::vector<int>& cand, const std::vector<int>& ref) {
    int best_m = 0, best_chunks = std::numeric_limits<int>::max();
    std::vector<int> used(ref.size(), 0);
    std::vector<std::pair<int, int>> pairs;
    std::function<void(std::size_t)> go = [&](std::size_t i) {
        if (i == cand.size()) {
            const int m = int(pairs.size());
            int chunks = 0;
            for (std::size_t k = 0; k < pairs.size(); ++k)
                if (k == 0 || pairs[k].first != pairs[k - 1].first + 1 || pairs[k].second != pairs[k - 1].second + 1)
                    ++chunks;
            if (m > best_m || (m == best_m && chunks < best_chunks)) best_m = m, best_chunks = chunks;
            return;
        }
        go(i + 1);
        for (std::size_t j = 0; j < ref.size(); ++j) {
            if (used[j] || ref[j] != cand[i]) continue;
            used[j] = 1;
            pairs.push_back({int(i), int(j)});
            go(i + 1);
            pairs.pop_back();
            used[j] = 0;
        }
    };
    go(0);
    if (best_m == 0) return 0.0;
    const double P = double(best_m) / double(cand.size()), R = double(best_m) / double(ref.size());
    const double fmean = 10 * P * R / (R + 9 * P);
    const double frag = double(best_chunks) / double(best_m);
    return fmean * (1 - 0.5 * frag * frag * frag);
}

}  // namespace oracle
