// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Slow, direct reference implementations used only by tests. They work on raw
// per-frame label vectors and plain arrays and share no code with the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace classengage::oracle {

using Frames = std::vector<int>;

struct Run {
    int label;
    std::int64_t begin, end;
};

inline std::vector<Run> runs(const Frames& f) {
    std::vector<Run> out;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (out.empty() || out.back().label != f[i]) {
            out.push_back({f[i], static_cast<std::int64_t>(i), static_cast<std::int64_t>(i) + 1});
        } else {
            out.back().end = static_cast<std::int64_t>(i) + 1;
        }
    }
    return out;
}

inline double mof(const Frames& pred, const Frames& gt) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) hit += pred[i] == gt[i];
    return 100.0 * static_cast<double>(hit) / static_cast<double>(gt.size());
}

/// Levenshtein by plain recursion with a memo table.
inline std::size_t levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size()) return b.size() - j;
        if (j == b.size()) return a.size() - i;
        const auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
        best = std::min(best, go(i + 1, j) + 1);
        best = std::min(best, go(i, j + 1) + 1);
        memo[key] = best;
        return best;
    };
    return go(0, 0);
}

inline double edit(const Frames& pred, const Frames& gt) {
    std::vector<int> p, g;
    for (const auto& r : runs(pred)) p.push_back(r.label);
    for (const auto& r : runs(gt)) g.push_back(r.label);
    const auto longest = std::max(p.size(), g.size());
    if (longest == 0) return 100.0;
    const double v = 100.0 * (1.0 - static_cast<double>(levenshtein(p, g)) / static_cast<double>(longest));
    return v < 0.0 ? 0.0 : v;
}

struct Counts {
    std::int64_t tp = 0, fp = 0, fn = 0;
};

/**
 * Segmental F1 counts. Overlap is measured by walking frames; a predicted run takes the
 * unclaimed same-label reference run of largest IoU (first in time on ties) and scores a
 * hit only when IoU is strictly above tau percent.
 */
inline Counts f1_counts(const Frames& pred, const Frames& gt, int tau) {
    const auto P = runs(pred);
    const auto G = runs(gt);
    std::vector<bool> taken(G.size(), false);
    Counts c;
    for (const auto& p : P) {
        int pick = -1;
        std::int64_t pick_i = 0, pick_u = 1;
        for (std::size_t j = 0; j < G.size(); ++j) {
            if (taken[j] || G[j].label != p.label) continue;
            std::int64_t inter = 0, uni = 0;
            const auto lo = std::min(p.begin, G[j].begin);
            const auto hi = std::max(p.end, G[j].end);
            for (auto f = lo; f < hi; ++f) {
                const bool in_p = f >= p.begin && f < p.end;
                const bool in_g = f >= G[j].begin && f < G[j].end;
                inter += in_p && in_g;
                uni += in_p || in_g;
            }
            if (pick < 0 || inter * pick_u > pick_i * uni) {
                pick = static_cast<int>(j);
                pick_i = inter;
                pick_u = uni;
            }
        }
        if (pick >= 0 && pick_i * 100 > static_cast<std::int64_t>(tau) * pick_u) {
            ++c.tp;
            taken[static_cast<std::size_t>(pick)] = true;
        } else {
            ++c.fp;
        }
    }
    for (bool t : taken) c.fn += !t;
    return c;
}

inline double f1(const Frames& pred, const Frames& gt, int tau) {
    const auto c = f1_counts(pred, gt, tau);
    const auto d = 2 * c.tp + c.fp + c.fn;
    return d == 0 ? 100.0 : 100.0 * static_cast<double>(2 * c.tp) / static_cast<double>(d);
}

/// Seconds per label by frame counting.
inline std::map<int, std::int64_t> histogram(const Frames& f) {
    std::map<int, std::int64_t> h;
    for (int l : f) ++h[l];
    return h;
}

using Vectors = std::vector<std::vector<double>>;

/// Mean cross-entropy plus mean entropy of the per-sample cosine softmax.
inline double objective(const Vectors& video, const Vectors& text, const std::vector<int>& labels, double tau) {
    const auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
        double ab = 0, aa = 0, bb = 0;
        for (std::size_t d = 0; d < a.size(); ++d) {
            ab += a[d] * b[d];
            aa += a[d] * a[d];
            bb += b[d] * b[d];
        }
        return ab / std::sqrt(aa * bb);
    };
    double ce = 0.0, ent = 0.0;
    for (std::size_t i = 0; i < video.size(); ++i) {
        std::vector<double> z(text.size());
        double zmax = -1e300;
        for (std::size_t k = 0; k < text.size(); ++k) {
            z[k] = cosine(video[i], text[k]) / tau;
            zmax = std::max(zmax, z[k]);
        }
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - zmax);
        const double log_sum = zmax + std::log(sum);
        ce += log_sum - z[static_cast<std::size_t>(labels[i])];
        for (double v : z) {
            const double lp = v - log_sum;
            ent -= std::exp(lp) * lp;
        }
    }
    const auto n = static_cast<double>(video.size());
    return ce / n + ent / n;
}

}  // namespace classengage::oracle
