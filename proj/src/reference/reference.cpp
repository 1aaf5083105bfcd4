// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/reference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace shuffledet::reference {

Tensor naive_conv2d(const Tensor& input, const Tensor& weight, std::span<const float> bias, const nn::ConvParams& p)
{
    const Shape& in = input.shape();
    const int kh = p.kernel[0], kw = p.kernel[1];
    const int oh = (static_cast<int>(in.h) + 2 * p.padding[0] - kh) / p.stride[0] + 1;
    const int ow = (static_cast<int>(in.w) + 2 * p.padding[1] - kw) / p.stride[1] + 1;
    const int cin_g = p.in_channels / p.groups;
    const int cout_g = p.out_channels / p.groups;
    Tensor out({in.n, static_cast<std::size_t>(p.out_channels), static_cast<std::size_t>(oh),
                static_cast<std::size_t>(ow)},
               0.0f);
    for (std::size_t n = 0; n < in.n; ++n)
        for (int oc = 0; oc < p.out_channels; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(oc)];
                    const int group = oc / cout_g;
                    for (int ic = 0; ic < cin_g; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = oy * p.stride[0] - p.padding[0] + ky;
                                const int ix = ox * p.stride[1] - p.padding[1] + kx;
                                if (iy < 0 || ix < 0 || iy >= static_cast<int>(in.h) || ix >= static_cast<int>(in.w))
                                    continue;
                                acc += static_cast<double>(input.at(n, static_cast<std::size_t>(group * cin_g + ic),
                                                                    static_cast<std::size_t>(iy),
                                                                    static_cast<std::size_t>(ix))) *
                                       weight.at(static_cast<std::size_t>(oc), static_cast<std::size_t>(ic),
                                                 static_cast<std::size_t>(ky), static_cast<std::size_t>(kx));
                            }
                    out.at(n, static_cast<std::size_t>(oc), static_cast<std::size_t>(oy),
                           static_cast<std::size_t>(ox)) = static_cast<float>(acc);
                }
    return out;
}

Tensor naive_batchnorm(const Tensor& input, const nn::BnParams& bn)
{
    Tensor out = input;
    const Shape& s = input.shape();
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t y = 0; y < s.h; ++y)
                for (std::size_t x = 0; x < s.w; ++x) {
                    const double v = input.at(n, c, y, x);
                    const double norm = (v - bn.running_mean[c]) / std::sqrt(static_cast<double>(bn.running_var[c]) + bn.epsilon);
                    out.at(n, c, y, x) = static_cast<float>(norm * bn.gamma[c] + bn.beta[c]);
                }
    return out;
}

Tensor naive_maxpool2d(const Tensor& input, int kernel, int stride, int padding)
{
    const Shape& s = input.shape();
    const int oh = (static_cast<int>(s.h) + 2 * padding - kernel) / stride + 1;
    const int ow = (static_cast<int>(s.w) + 2 * padding - kernel) / stride + 1;
    Tensor out({s.n, s.c, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)}, 0.0f);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    float best = -std::numeric_limits<float>::infinity();
                    for (int ky = 0; ky < kernel; ++ky)
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int y = oy * stride - padding + ky;
                            const int x = ox * stride - padding + kx;
                            if (y >= 0 && x >= 0 && y < static_cast<int>(s.h) && x < static_cast<int>(s.w))
                                best = std::max(best, input.at(n, c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)));
                        }
                    out.at(n, c, static_cast<std::size_t>(oy), static_cast<std::size_t>(ox)) = best;
                }
    return out;
}

namespace {

Tensor naive_silu(Tensor t)
{
    for (float& v : t.data()) {
        const double x = v;
        v = static_cast<float>(x / (1.0 + std::exp(-x)));
    }
    return t;
}

Tensor stack_channels(const std::vector<Tensor>& parts)
{
    Shape s = parts.front().shape();
    std::size_t total = 0;
    for (const Tensor& t : parts)
        total += t.shape().c;
    Tensor out({s.n, total, s.h, s.w}, 0.0f);
    for (std::size_t n = 0; n < s.n; ++n) {
        std::size_t base = 0;
        for (const Tensor& t : parts) {
            for (std::size_t c = 0; c < t.shape().c; ++c)
                for (std::size_t y = 0; y < s.h; ++y)
                    for (std::size_t x = 0; x < s.w; ++x)
                        out.at(n, base + c, y, x) = t.at(n, c, y, x);
            base += t.shape().c;
        }
    }
    return out;
}

} // namespace

Tensor naive_sppf(const Tensor& input, const nn::FoldedConv& reduce, const nn::FoldedConv& expand, int pool_kernel)
{
    const int c = static_cast<int>(input.shape().c);
    const Tensor x = naive_silu(naive_conv2d(input, reduce.weight, reduce.bias, nn::ConvParams::pointwise(c, c / 2)));
    const int pad = pool_kernel / 2;
    const Tensor p1 = naive_maxpool2d(x, pool_kernel, 1, pad);
    const Tensor p2 = naive_maxpool2d(p1, pool_kernel, 1, pad);
    const Tensor p3 = naive_maxpool2d(p2, pool_kernel, 1, pad);
    const Tensor cat = stack_channels({x, p1, p2, p3});
    const int out_c = static_cast<int>(expand.weight.shape().n);
    return naive_silu(naive_conv2d(cat, expand.weight, expand.bias, nn::ConvParams::pointwise(4 * (c / 2), out_c)));
}

Tensor focus_unslice(const Tensor& sliced)
{
    const Shape& s = sliced.shape();
    const std::size_t c = s.c / 4;
    Tensor out({s.n, c, 2 * s.h, 2 * s.w}, 0.0f);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t block = 0; block < 4; ++block)
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t y = 0; y < s.h; ++y)
                    for (std::size_t x = 0; x < s.w; ++x)
                        out.at(n, ch, 2 * y + block / 2, 2 * x + block % 2) = sliced.at(n, block * c + ch, y, x);
    return out;
}

std::vector<std::size_t> shuffle_permutation(std::size_t channels, std::size_t groups)
{
    // Build the (g, n) matrix of labels, transpose it, read it back row-major.
    const std::size_t per_group = channels / groups;
    std::vector<std::vector<std::size_t>> grid(groups, std::vector<std::size_t>(per_group));
    for (std::size_t q = 0; q < groups; ++q)
        for (std::size_t r = 0; r < per_group; ++r)
            grid[q][r] = q * per_group + r;
    std::vector<std::size_t> order;
    for (std::size_t r = 0; r < per_group; ++r)
        for (std::size_t q = 0; q < groups; ++q)
            order.push_back(grid[q][r]);
    std::vector<std::size_t> dest(channels);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        dest[order[pos]] = pos;
    return dest;
}

std::vector<post::Detection> slow_decode(const post::HeadOutputs& raw, const post::AnchorSet& anchors,
                                         float conf_threshold)
{
    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    std::vector<post::Detection> out;
    for (std::size_t s = 0; s < raw.size(); ++s) {
        const Tensor& t = raw[s];
        const std::size_t no = t.shape().c / 3;
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t y = 0; y < t.shape().h; ++y)
                for (std::size_t x = 0; x < t.shape().w; ++x) {
                    auto logit = [&](std::size_t k) { return static_cast<double>(t.at(0, a * no + k, y, x)); };
                    double best_prob = -1.0;
                    int best = 0;
                    for (std::size_t k = 5; k < no; ++k) {
                        const double prob = sig(logit(k));
                        if (prob > best_prob) {
                            best_prob = prob;
                            best = static_cast<int>(k - 5);
                        }
                    }
                    const double score = sig(logit(4)) * best_prob;
                    if (!(score >= conf_threshold))
                        continue;
                    const double stride = anchors.scales[s].stride;
                    const double cx = (sig(logit(0)) * 2.0 - 0.5 + static_cast<double>(x)) * stride;
                    const double cy = (sig(logit(1)) * 2.0 - 0.5 + static_cast<double>(y)) * stride;
                    const double w = std::pow(sig(logit(2)) * 2.0, 2) * anchors.scales[s].anchors[a][0];
                    const double h = std::pow(sig(logit(3)) * 2.0, 2) * anchors.scales[s].anchors[a][1];
                    out.push_back({best, static_cast<float>(score),
                                   {static_cast<float>(cx - w / 2), static_cast<float>(cy - h / 2),
                                    static_cast<float>(cx + w / 2), static_cast<float>(cy + h / 2)}});
                }
    }
    return out;
}

namespace {

double box_iou(const post::Box& a, const post::Box& b)
{
    const double ix1 = std::max<double>(a.x1, b.x1);
    const double iy1 = std::max<double>(a.y1, b.y1);
    const double ix2 = std::min<double>(a.x2, b.x2);
    const double iy2 = std::min<double>(a.y2, b.y2);
    const double inter = std::max(0.0, ix2 - ix1) * std::max(0.0, iy2 - iy1);
    const double area_a = (static_cast<double>(a.x2) - a.x1) * (static_cast<double>(a.y2) - a.y1);
    const double area_b = (static_cast<double>(b.x2) - b.x1) * (static_cast<double>(b.y2) - b.y1);
    const double uni = area_a + area_b - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

// True when a is visited before b.
bool precedes(std::span<const post::Detection> dets, std::size_t a, std::size_t b)
{
    return dets[a].score > dets[b].score || (dets[a].score == dets[b].score && a < b);
}

} // namespace

std::vector<std::size_t> brute_force_nms(std::span<const post::Detection> dets, float iou_threshold)
{
    const std::size_t n = dets.size();
    // rank[i] = number of boxes visited before i
    std::vector<std::size_t> rank(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && precedes(dets, j, i))
                ++rank[i];
    std::vector<std::size_t> by_rank(n);
    for (std::size_t i = 0; i < n; ++i)
        by_rank[rank[i]] = i;

    std::vector<bool> alive(n, false);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = by_rank[r];
        bool keep = true;
        for (std::size_t j = 0; j < n; ++j)
            if (alive[j] && dets[j].class_id == dets[i].class_id && box_iou(dets[i].box, dets[j].box) > iou_threshold)
                keep = false;
        alive[i] = keep;
    }
    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < n; ++r)
        if (alive[by_rank[r]])
            kept.push_back(by_rank[r]);
    return kept;
}

eval::MatchResult exhaustive_match(std::span<const eval::ImageDetection> dets, std::span<const eval::GroundTruth> gts,
                                   double iou_threshold)
{
    eval::MatchResult result;
    result.is_tp.assign(dets.size(), false);
    result.matched_gt.assign(dets.size(), -1);
    result.gt_matched.assign(gts.size(), false);

    std::set<std::pair<std::string, int>> partitions;
    for (const auto& d : dets)
        partitions.insert({d.image_id, d.det.class_id});

    for (const auto& key : partitions) {
        std::vector<std::size_t> ds, gs;
        for (std::size_t i = 0; i < dets.size(); ++i)
            if (dets[i].image_id == key.first && dets[i].det.class_id == key.second)
                ds.push_back(i);
        for (std::size_t g = 0; g < gts.size(); ++g)
            if (gts[g].image_id == key.first && gts[g].class_id == key.second)
                gs.push_back(g);
        std::stable_sort(ds.begin(), ds.end(),
                         [&](std::size_t a, std::size_t b) { return dets[a].det.score > dets[b].det.score; });

        // Key for one detection's choice: unmatched sorts lowest, then IoU,
        // then prefer the lower ground-truth index.
        using Choice = std::tuple<int, double, long>;
        std::vector<int> current(ds.size(), -1), best_assign;
        std::vector<Choice> best_key;
        std::vector<bool> used(gs.size(), false);

        std::function<void(std::size_t)> search = [&](std::size_t k) {
            if (k == ds.size()) {
                std::vector<Choice> key_vec;
                for (std::size_t i = 0; i < ds.size(); ++i) {
                    if (current[i] < 0) {
                        key_vec.emplace_back(0, 0.0, 0);
                    } else {
                        const std::size_t g = gs[static_cast<std::size_t>(current[i])];
                        key_vec.emplace_back(1, box_iou(dets[ds[i]].det.box, gts[g].box), -static_cast<long>(g));
                    }
                }
                if (best_key.empty() || key_vec > best_key) {
                    best_key = key_vec;
                    best_assign = current;
                }
                return;
            }
            current[k] = -1;
            search(k + 1);
            for (std::size_t g = 0; g < gs.size(); ++g) {
                if (used[g] || box_iou(dets[ds[k]].det.box, gts[gs[g]].box) < iou_threshold)
                    continue;
                used[g] = true;
                current[k] = static_cast<int>(g);
                search(k + 1);
                used[g] = false;
                current[k] = -1;
            }
        };
        search(0);
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (best_assign[i] >= 0) {
                const std::size_t g = gs[static_cast<std::size_t>(best_assign[i])];
                result.is_tp[ds[i]] = true;
                result.matched_gt[ds[i]] = static_cast<int>(g);
                result.gt_matched[g] = true;
            }
    }
    return result;
}

double voc_average_precision(std::vector<std::pair<float, bool>> scored, std::size_t gt_count)
{
    if (gt_count == 0)
        return 0.0;
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> mrec{0.0}, mpre{0.0};
    double tp = 0, fp = 0;
    for (const auto& [score, is_tp] : scored) {
        (is_tp ? tp : fp) += 1.0;
        mrec.push_back(tp / static_cast<double>(gt_count));
        mpre.push_back(tp / (tp + fp));
    }
    mrec.push_back(1.0);
    mpre.push_back(0.0);
    for (std::size_t i = mpre.size() - 1; i > 0; --i)
        mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
    double ap = 0.0;
    for (std::size_t i = 1; i < mrec.size(); ++i)
        if (mrec[i] != mrec[i - 1])
            ap += (mrec[i] - mrec[i - 1]) * mpre[i];
    return ap;
}

eval::EvalReport slow_evaluate(std::span<const eval::ImageDetection> dets, std::span<const eval::GroundTruth> gts,
                               int class_count)
{
    const eval::MatchResult m = exhaustive_match(dets, gts, 0.5);
    eval::EvalReport report;
    double sum = 0.0;
    for (int c = 0; c < class_count; ++c) {
        eval::ClassMetrics cls;
        cls.name = "class" + std::to_string(c);
        std::vector<std::pair<float, bool>> scored;
        for (std::size_t i = 0; i < dets.size(); ++i)
            if (dets[i].det.class_id == c) {
                scored.emplace_back(dets[i].det.score, m.is_tp[i]);
                (m.is_tp[i] ? cls.tp : cls.fp) += 1;
            }
        for (std::size_t g = 0; g < gts.size(); ++g)
            if (gts[g].class_id == c) {
                ++cls.gt_count;
                if (!m.gt_matched[g])
                    ++cls.fn;
            }
        cls.ap_defined = cls.gt_count > 0;
        cls.ap = voc_average_precision(scored, cls.gt_count);
        cls.recall = cls.gt_count ? static_cast<double>(cls.tp) / static_cast<double>(cls.gt_count) : 0.0;
        sum += cls.ap;
        report.classes.push_back(cls);
    }
    report.map50 = class_count > 0 ? sum / class_count : 0.0;

    std::map<std::string, bool> image_ok;
    for (std::size_t g = 0; g < gts.size(); ++g)
        image_ok.emplace(gts[g].image_id, true);
    for (auto& [image, ok] : image_ok) {
        std::set<int> classes;
        for (const auto& gt : gts)
            if (gt.image_id == image)
                classes.insert(gt.class_id);
        for (int c : classes) {
            bool found = false;
            for (std::size_t i = 0; i < dets.size(); ++i)
                if (dets[i].image_id == image && dets[i].det.class_id == c && m.is_tp[i])
                    found = true;
            ok = ok && found;
        }
    }
    std::size_t good = 0;
    for (const auto& [image, ok] : image_ok)
        good += ok ? 1 : 0;
    report.image_count = image_ok.size();
    report.image_recall = image_ok.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(image_ok.size());
    return report;
}

} // namespace shuffledet::reference

namespace shuffledet::reference {

Tensor random_tensor(Prng& prng, const Shape& shape, float lo, float hi)
{
    Tensor t(shape, 0.0f);
    for (float& v : t.data())
        v = lo + static_cast<float>(prng.uniform()) * (hi - lo);
    return t;
}

namespace {

int pick(Prng& prng, int lo, int hi) // inclusive
{
    return lo + static_cast<int>(prng.next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
}

} // namespace

ConvCase random_conv_case(Prng& prng, std::size_t index)
{
    nn::ConvParams p;
    const int family = static_cast<int>(index % 5);
    const int k = pick(prng, 0, 2) * 2 + 1;
    switch (family) {
    case 0: // point-wise, possibly grouped
        p.groups = pick(prng, 1, 3);
        p.in_channels = p.groups * pick(prng, 1, 4);
        p.out_channels = p.groups * pick(prng, 1, 4);
        break;
    case 1: // depth-wise
        p.in_channels = p.out_channels = p.groups = pick(prng, 2, 8);
        p.kernel = {k, k};
        p.padding = {k / 2, k / 2};
        p.stride = {pick(prng, 1, 2), pick(prng, 1, 2)};
        break;
    case 2: // grouped spatial
        p.groups = pick(prng, 2, 4);
        p.in_channels = p.groups * pick(prng, 1, 3);
        p.out_channels = p.groups * pick(prng, 1, 3);
        p.kernel = {k, pick(prng, 0, 1) * 2 + 1};
        p.padding = {pick(prng, 0, 1), pick(prng, 0, 1)};
        break;
    case 3: // strided
        p.in_channels = pick(prng, 1, 5);
        p.out_channels = pick(prng, 1, 5);
        p.kernel = {k, k};
        p.stride = {pick(prng, 2, 3), pick(prng, 1, 3)};
        p.padding = {pick(prng, 0, k / 2 + 1), pick(prng, 0, k / 2)};
        break;
    default: // padded, asymmetric kernels
        p.in_channels = pick(prng, 1, 4);
        p.out_channels = pick(prng, 1, 4);
        p.kernel = {pick(prng, 1, 4), pick(prng, 1, 4)};
        p.padding = {pick(prng, 0, 3), pick(prng, 0, 3)};
        break;
    }
    Shape input{static_cast<std::size_t>(pick(prng, 1, 2)), static_cast<std::size_t>(p.in_channels), 0, 0};
    input.h = static_cast<std::size_t>(pick(prng, std::max(1, p.kernel[0] - 2 * p.padding[0]), 13));
    input.w = static_cast<std::size_t>(pick(prng, std::max(1, p.kernel[1] - 2 * p.padding[1]), 13));
    return {p, input};
}

std::vector<post::Detection> random_scene(Prng& prng, std::size_t count, int class_count)
{
    std::vector<post::Detection> dets;
    for (std::size_t i = 0; i < count; ++i) {
        post::Detection d;
        d.class_id = pick(prng, 0, class_count - 1);
        d.score = static_cast<float>(pick(prng, 1, 16)) / 16.0f;
        const float x = 4.0f * static_cast<float>(pick(prng, 0, 24));
        const float y = 4.0f * static_cast<float>(pick(prng, 0, 24));
        d.box = {x, y, x + 4.0f * static_cast<float>(pick(prng, 1, 10)), y + 4.0f * static_cast<float>(pick(prng, 1, 10))};
        dets.push_back(d);
    }
    return dets;
}

Dataset random_dataset(Prng& prng, int image_count, int class_count)
{
    Dataset ds;
    std::vector<float> scores;
    for (int img = 0; img < image_count; ++img) {
        const std::string id = "img" + std::to_string(img);
        for (int c = 0; c < class_count; ++c) {
            const int n_gt = pick(prng, 0, 2);
            for (int g = 0; g < n_gt; ++g) {
                const float x = static_cast<float>(pick(prng, 0, 80));
                const float y = static_cast<float>(pick(prng, 0, 80));
                const post::Box box{x, y, x + static_cast<float>(pick(prng, 8, 30)), y + static_cast<float>(pick(prng, 8, 30))};
                ds.gts.push_back({id, c, box});
                if (prng.uniform() < 0.7) {
                    const float dx = static_cast<float>(pick(prng, -5, 5));
                    const float dy = static_cast<float>(pick(prng, -5, 5));
                    ds.dets.push_back({id, {c, 0.0f, {box.x1 + dx, box.y1 + dy, box.x2 + dx, box.y2 + dy}}});
                }
            }
            const int n_fp = pick(prng, 0, 1);
            for (int f = 0; f < n_fp; ++f) {
                const float x = static_cast<float>(pick(prng, 0, 90));
                const float y = static_cast<float>(pick(prng, 0, 90));
                ds.dets.push_back({id, {c, 0.0f, {x, y, x + 10.0f, y + 10.0f}}});
            }
        }
    }
    // Distinct scores: a shuffled ladder.
    std::vector<std::size_t> order(ds.dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[prng.next_u64() % i]);
    for (std::size_t i = 0; i < order.size(); ++i)
        ds.dets[order[i]].det.score = static_cast<float>(i + 1) / static_cast<float>(order.size() + 1);
    return ds;
}

} // namespace shuffledet::reference
