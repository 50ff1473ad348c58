#include "lgenet/segment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <queue>

#include "lgenet/kdtree.hpp"
#include "lgenet/rng.hpp"

namespace lgenet {

namespace {

constexpr int kFeatureDim = 5;

// Jacobi eigen decomposition of a symmetric 3x3 matrix. Eigenvalues returned
// descending with matching unit eigenvectors as columns.
void eigen3(const double a[3][3], double eigval[3], double eigvec[3][3]) {
    double m[3][3];
    std::copy(&a[0][0], &a[0][0] + 9, &m[0][0]);
    double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = std::abs(m[0][1]) + std::abs(m[0][2]) + std::abs(m[1][2]);
        if (off < 1e-15) break;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(m[p][q]) < 1e-18) continue;
                const double theta = (m[q][q] - m[p][p]) / (2 * m[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1.0 / std::sqrt(t * t + 1);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double mkp = m[k][p], mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double mpk = m[p][k], mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
    }
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return m[x][x] > m[y][y]; });
    for (int i = 0; i < 3; ++i) {
        eigval[i] = m[order[static_cast<size_t>(i)]][order[static_cast<size_t>(i)]];
        for (int k = 0; k < 3; ++k) eigvec[k][i] = v[k][order[static_cast<size_t>(i)]];
    }
}

}  // namespace

std::vector<double> partition_features(const PointCloud& cloud, int k_adj,
                                       double intensity_max) {
    check(k_adj >= 3, "partition: k_adj must be at least 3");
    check(intensity_max > 0.0, "partition: intensity_max must be positive");
    const int64_t n = cloud.size();
    KdTree tree(cloud.xyz);
    std::vector<double> feats(static_cast<size_t>(n) * kFeatureDim, 0.0);
    std::vector<int32_t> nb;
    for (int64_t i = 0; i < n; ++i) {
        tree.knn(cloud.point(i), k_adj, nb);
        double mean[3] = {0, 0, 0};
        for (int32_t j : nb)
            for (int a = 0; a < 3; ++a) mean[a] += cloud.xyz[static_cast<size_t>(3 * j + a)];
        for (double& m : mean) m /= static_cast<double>(nb.size());
        double cov[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        for (int32_t j : nb) {
            double d[3];
            for (int a = 0; a < 3; ++a)
                d[a] = cloud.xyz[static_cast<size_t>(3 * j + a)] - mean[a];
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) cov[a][b] += d[a] * d[b];
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) cov[a][b] /= static_cast<double>(nb.size());

        double ev[3], evec[3][3];
        eigen3(cov, ev, evec);
        for (double& e : ev) e = std::max(e, 0.0);
        double* f = &feats[static_cast<size_t>(i) * kFeatureDim];
        if (ev[0] > 1e-12) {
            f[0] = (ev[0] - ev[1]) / ev[0];  // linearity
            f[1] = (ev[1] - ev[2]) / ev[0];  // planarity
            f[2] = ev[2] / ev[0];            // sphericity
        }
        // normal = eigenvector of the smallest eigenvalue (third column)
        f[3] = 1.0 - std::abs(evec[2][2]);  // verticality
        f[4] = std::clamp(cloud.intensity[static_cast<size_t>(i)] / intensity_max, 0.0, 1.0);
    }
    return feats;
}

std::vector<std::pair<int32_t, int32_t>> knn_adjacency(const PointCloud& cloud, int k_adj) {
    check(k_adj >= 3, "partition: k_adj must be at least 3");
    const int64_t n = cloud.size();
    KdTree tree(cloud.xyz);
    std::vector<std::pair<int32_t, int32_t>> edges;
    std::vector<int32_t> nb;
    for (int64_t i = 0; i < n; ++i) {
        tree.knn(cloud.point(i), k_adj + 1, nb);  // +1: the query itself
        for (int32_t j : nb) {
            if (j == static_cast<int32_t>(i)) continue;
            edges.emplace_back(std::min<int32_t>(static_cast<int32_t>(i), j),
                               std::max<int32_t>(static_cast<int32_t>(i), j));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

double partition_objective(const std::vector<double>& features,
                           const std::vector<std::pair<int32_t, int32_t>>& adjacency,
                           const std::vector<uint32_t>& labels, double lambda) {
    const int64_t n = static_cast<int64_t>(labels.size());
    uint32_t max_label = 0;
    for (uint32_t l : labels) max_label = std::max(max_label, l);
    std::vector<std::array<double, kFeatureDim>> sum(
        max_label + 1, std::array<double, kFeatureDim>{});
    std::vector<int64_t> cnt(max_label + 1, 0);
    for (int64_t i = 0; i < n; ++i) {
        for (int d = 0; d < kFeatureDim; ++d)
            sum[labels[static_cast<size_t>(i)]][static_cast<size_t>(d)] +=
                features[static_cast<size_t>(i) * kFeatureDim + static_cast<size_t>(d)];
        ++cnt[labels[static_cast<size_t>(i)]];
    }
    double obj = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const uint32_t s = labels[static_cast<size_t>(i)];
        for (int d = 0; d < kFeatureDim; ++d) {
            const double diff =
                features[static_cast<size_t>(i) * kFeatureDim + static_cast<size_t>(d)] -
                sum[s][static_cast<size_t>(d)] / static_cast<double>(cnt[s]);
            obj += diff * diff;
        }
    }
    for (const auto& [a, b] : adjacency)
        if (labels[static_cast<size_t>(a)] != labels[static_cast<size_t>(b)]) obj += lambda;
    return obj;
}

namespace {

struct Segment {
    int64_t count = 0;
    std::array<double, kFeatureDim> sum = {};
    double sumsq = 0.0;  // sum over members of |f|^2
    uint32_t version = 0;
    std::map<int32_t, int32_t> adj;  // neighbor root -> shared adjacency edge count

    double sse() const {
        double norm2 = 0.0;
        for (double s : sum) norm2 += s * s;
        return sumsq - norm2 / static_cast<double>(count);
    }
};

}  // namespace

PartitionResult partition(const PointCloud& cloud, double reg_strength, int k_adj,
                          double intensity_max, std::vector<double>* objective_trace) {
    check(reg_strength >= 0.0, "partition: regularization strength must be >= 0");
    check(k_adj >= 3, "partition: k_adj must be at least 3");
    const int64_t n = cloud.size();
    check(n > 0, "partition: empty cloud");

    const std::vector<double> feats = partition_features(cloud, k_adj, intensity_max);
    const auto adjacency = knn_adjacency(cloud, k_adj);

    std::vector<int32_t> parent(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = static_cast<int32_t>(i);
    auto find = [&](int32_t x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };

    std::vector<Segment> segs(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        Segment& s = segs[static_cast<size_t>(i)];
        s.count = 1;
        for (int d = 0; d < kFeatureDim; ++d) {
            const double f = feats[static_cast<size_t>(i) * kFeatureDim + static_cast<size_t>(d)];
            s.sum[static_cast<size_t>(d)] = f;
            s.sumsq += f * f;
        }
    }
    for (const auto& [a, b] : adjacency) {
        segs[static_cast<size_t>(a)].adj[b] += 1;
        segs[static_cast<size_t>(b)].adj[a] += 1;
    }

    auto merge_delta = [&](int32_t a, int32_t b, int32_t shared_edges) {
        const Segment& A = segs[static_cast<size_t>(a)];
        const Segment& B = segs[static_cast<size_t>(b)];
        double norm2 = 0.0;
        for (int d = 0; d < kFeatureDim; ++d) {
            const double s = A.sum[static_cast<size_t>(d)] + B.sum[static_cast<size_t>(d)];
            norm2 += s * s;
        }
        const double merged_sse =
            A.sumsq + B.sumsq - norm2 / static_cast<double>(A.count + B.count);
        return merged_sse - A.sse() - B.sse() - reg_strength * shared_edges;
    };

    struct Cand {
        double delta;
        int32_t a, b;  // roots, a < b
        uint32_t va, vb;
    };
    auto worse = [](const Cand& x, const Cand& y) {
        if (x.delta != y.delta) return x.delta > y.delta;
        if (x.a != y.a) return x.a > y.a;
        return x.b > y.b;
    };
    double running_obj = reg_strength * static_cast<double>(adjacency.size());
    if (objective_trace) objective_trace->push_back(running_obj);
    std::priority_queue<Cand, std::vector<Cand>, decltype(worse)> heap(worse);
    for (int64_t i = 0; i < n; ++i)
        for (const auto& [j, cnt] : segs[static_cast<size_t>(i)].adj)
            if (static_cast<int32_t>(i) < j)
                heap.push({merge_delta(static_cast<int32_t>(i), j, cnt),
                           static_cast<int32_t>(i), j, 0, 0});

    while (!heap.empty()) {
        const Cand c = heap.top();
        if (c.delta >= 0.0) break;  // no merge improves the objective
        heap.pop();
        const int32_t ra = find(c.a), rb = find(c.b);
        if (ra != c.a || rb != c.b) continue;  // stale roots
        if (segs[static_cast<size_t>(ra)].version != c.va ||
            segs[static_cast<size_t>(rb)].version != c.vb)
            continue;  // stats changed since this candidate was scored

        // merge rb into ra
        parent[static_cast<size_t>(rb)] = ra;
        Segment& A = segs[static_cast<size_t>(ra)];
        Segment& B = segs[static_cast<size_t>(rb)];
        A.count += B.count;
        for (int d = 0; d < kFeatureDim; ++d)
            A.sum[static_cast<size_t>(d)] += B.sum[static_cast<size_t>(d)];
        A.sumsq += B.sumsq;
        A.adj.erase(rb);
        for (const auto& [x, cnt] : B.adj) {
            if (x == ra) continue;
            Segment& X = segs[static_cast<size_t>(x)];
            X.adj.erase(rb);
            A.adj[x] += cnt;
            X.adj[ra] += cnt;
        }
        B.adj.clear();
        ++A.version;
        running_obj += c.delta;
        if (objective_trace) objective_trace->push_back(running_obj);

        for (const auto& [x, cnt] : A.adj) {
            const int32_t lo = std::min(ra, x), hi = std::max(ra, x);
            heap.push({merge_delta(lo, hi, cnt), lo, hi, segs[static_cast<size_t>(lo)].version,
                       segs[static_cast<size_t>(hi)].version});
        }
    }

    PartitionResult res;
    res.segment_of_point.resize(static_cast<size_t>(n));
    std::vector<int32_t> label_of_root(static_cast<size_t>(n), -1);
    int32_t next = 0;
    for (int64_t i = 0; i < n; ++i) {
        const int32_t r = find(static_cast<int32_t>(i));
        if (label_of_root[static_cast<size_t>(r)] < 0) label_of_root[static_cast<size_t>(r)] = next++;
        res.segment_of_point[static_cast<size_t>(i)] =
            static_cast<uint32_t>(label_of_root[static_cast<size_t>(r)]);
    }
    res.segment_count = next;
    res.objective = partition_objective(feats, adjacency, res.segment_of_point, reg_strength);
    return res;
}

SegmentGraph build_edges(int32_t segment_count, int32_t max_edges, uint64_t seed) {
    check(segment_count > 0, "build edges: no segments");
    check(max_edges >= 1, "build edges: max_edges must be >= 1");
    SegmentGraph g;
    g.segment_count = segment_count;
    g.node_offsets.assign(static_cast<size_t>(segment_count) + 1, 0);
    std::vector<int32_t> others;
    for (int32_t i = 0; i < segment_count; ++i) {
        others.clear();
        for (int32_t j = 0; j < segment_count; ++j)
            if (j != i) others.push_back(j);
        if (static_cast<int32_t>(others.size()) > max_edges) {
            Rng rng(split_seed(seed, 0xed6e, static_cast<uint64_t>(i)));
            std::vector<int32_t> keep;
            rng.sample_without_replacement<int32_t>(static_cast<int32_t>(others.size()),
                                                    max_edges, keep);
            std::sort(keep.begin(), keep.end());
            std::vector<int32_t> chosen;
            chosen.reserve(static_cast<size_t>(max_edges));
            for (int32_t k : keep) chosen.push_back(others[static_cast<size_t>(k)]);
            others = std::move(chosen);
        }
        for (int32_t j : others) g.edges.emplace_back(i, j);
        g.node_offsets[static_cast<size_t>(i) + 1] = static_cast<int32_t>(g.edges.size());
    }
    return g;
}

}  // namespace lgenet
