#include "ivegan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ivegan {

namespace {

constexpr std::uint64_t kCoverageStream = 0x636f7665ULL;

std::vector<double> normalized_hist(const DensityGrid& g) {
    const std::uint64_t total = std::accumulate(g.counts.begin(), g.counts.end(),
                                                std::uint64_t{0});
    std::vector<double> p(g.counts.size(), 0.0);
    if (total == 0) return p;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = static_cast<double>(g.counts[i]) / static_cast<double>(total);
    }
    return p;
}

}  // namespace

std::optional<std::size_t> assign_mode(const std::array<double, 2>& p,
                                       const std::vector<std::array<double, 2>>& means,
                                       double sigma, double k) {
    if (means.empty()) throw ValueError("assign_mode: empty mean list");
    if (!(k > 0.0)) throw ValueError("assign_mode: k must be positive");
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < means.size(); ++i) {
        const double dx = p[0] - means[i][0], dy = p[1] - means[i][1];
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {  // strict: ties keep the lowest index
            best_d2 = d2;
            best = i;
        }
    }
    const double r = k * sigma;
    if (best_d2 <= r * r) return best;
    return std::nullopt;
}

CoverageReport coverage(const Tensor& samples, const RingSpec& spec, double k, double min_share) {
    if (samples.rank() != 2 || samples.cols() != 2) {
        throw ShapeError("coverage: samples must be n x 2");
    }
    if (samples.rows() < 1000) {
        throw ValueError("coverage: need at least 1000 samples, got " +
                         std::to_string(samples.rows()));
    }
    const auto means = ring_means(spec);
    CoverageReport rep;
    rep.n_samples = samples.rows();
    rep.per_mode_counts.assign(spec.n_modes, 0);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        const auto mode = assign_mode({samples(i, 0), samples(i, 1)}, means, spec.sigma, k);
        if (mode) {
            rep.per_mode_counts[*mode] += 1;
            assigned += 1;
        }
    }
    rep.assigned_fraction = static_cast<double>(assigned) / static_cast<double>(rep.n_samples);
    for (std::size_t c : rep.per_mode_counts) {
        if (static_cast<double>(c) / static_cast<double>(rep.n_samples) >= min_share) {
            rep.covered_modes += 1;
        }
    }
    Rng rng = Rng::derive(spec.seed ^ kCoverageStream, rep.n_samples);
    const Tensor truth = sample_ring(spec, rep.n_samples, rng);
    rep.jsd = jsd_histogram(samples, truth);
    return rep;
}

DensityGrid density_grid(const Tensor& samples, std::size_t bins, double lo, double hi) {
    if (bins < 2) throw ValueError("density_grid: bins must be >= 2");
    if (!(hi > lo)) throw ValueError("density_grid: empty range");
    if (samples.rank() != 2 || samples.cols() != 2) {
        throw ShapeError("density_grid: samples must be n x 2");
    }
    DensityGrid g;
    g.bins = bins;
    g.lo = lo;
    g.hi = hi;
    g.counts.assign(bins * bins, 0);
    const double scale = static_cast<double>(bins) / (hi - lo);
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        const double x = samples(i, 0), y = samples(i, 1);
        if (x < lo || x > hi || y < lo || y > hi) {
            g.dropped += 1;
            continue;
        }
        const std::size_t cx = std::min(bins - 1, static_cast<std::size_t>((x - lo) * scale));
        const std::size_t cy = std::min(bins - 1, static_cast<std::size_t>((y - lo) * scale));
        g.counts[cy * bins + cx] += 1;
    }
    return g;
}

double jsd_histogram(const Tensor& a, const Tensor& b, std::size_t bins, double lo, double hi) {
    if (a.rows() == 0 || b.rows() == 0) throw ValueError("jsd_histogram: empty sample set");
    const std::vector<double> p = normalized_hist(density_grid(a, bins, lo, hi));
    const std::vector<double> q = normalized_hist(density_grid(b, bins, lo, hi));
    double jsd = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) jsd += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) jsd += 0.5 * q[i] * std::log(q[i] / m);
    }
    return std::max(0.0, jsd);
}

ReconstructionReport reconstruction_error_from(const Tensor& xs, const Tensor& recons, Rng& rng) {
    if (!xs.same_shape(recons)) {
        throw ShapeError("reconstruction_error: shape mismatch " + xs.shape_str() + " vs " +
                         recons.shape_str());
    }
    if (xs.rows() == 0) throw ValueError("reconstruction_error: empty sample set");
    const std::size_t n = xs.rows(), d = xs.cols();
    auto l2 = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = xs(i, c) - recons(j, c);
            s += diff * diff;
        }
        return std::sqrt(s);
    };
    ReconstructionReport rep;
    rep.per_sample.resize(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rep.per_sample[i] = l2(i, i);
        sum += rep.per_sample[i];
    }
    rep.mean_matched = sum / static_cast<double>(n);
    // Fisher-Yates shuffle for the mismatched-partner baseline.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i-- > 1;) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
        std::swap(perm[i], perm[j]);
    }
    double ssum = 0.0;
    for (std::size_t i = 0; i < n; ++i) ssum += l2(i, perm[i]);
    rep.mean_shuffled = ssum / static_cast<double>(n);
    return rep;
}

ReconstructionReport reconstruction_error(const IveGanModel& m, const Tensor& xs, Rng& rng) {
    const Tensor recons = reconstruct(m, xs, rng);
    return reconstruction_error_from(xs, recons, rng);
}

double latent_knn_agreement(const Tensor& latents, const std::vector<int>& labels,
                            std::size_t k) {
    const std::size_t n = latents.rows();
    if (labels.size() != n) throw ShapeError("latent_knn_agreement: label count mismatch");
    if (k < 1 || k >= n) throw ValueError("latent_knn_agreement: k must be in [1, n)");
    const std::size_t d = latents.cols();
    std::size_t hits = 0;
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = latents(i, c) - latents(j, c);
                s += diff * diff;
            }
            dist[j] = {s, j};
        }
        dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::vector<std::size_t> votes;
        for (std::size_t t = 0; t < k; ++t) {
            const int lab = labels[dist[t].second];
            if (votes.size() <= static_cast<std::size_t>(lab)) votes.resize(lab + 1, 0);
            votes[static_cast<std::size_t>(lab)] += 1;
        }
        // majority, ties to the smallest label
        std::size_t best_lab = 0, best_votes = 0;
        for (std::size_t lab = 0; lab < votes.size(); ++lab) {
            if (votes[lab] > best_votes) {
                best_votes = votes[lab];
                best_lab = lab;
            }
        }
        if (static_cast<int>(best_lab) == labels[i]) hits += 1;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace ivegan
