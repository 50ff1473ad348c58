#include <algorithm>
#include <numeric>
#include <set>

#include "doctest.h"
#include "lgenet/rng.hpp"
#include "lgenet/segment.hpp"

using namespace lgenet;

namespace {

PointCloud cloud_from(const std::vector<double>& xyz, const std::vector<double>& inten) {
    PointCloud c;
    c.resize(static_cast<int64_t>(xyz.size() / 3));
    c.xyz = xyz;
    c.intensity = inten;
    c.has_intensity = true;
    return c;
}

// two well-separated planar patches: one horizontal, one vertical, with
// distinct intensity levels
PointCloud two_patch_instance(int per_patch) {
    std::vector<double> xyz, inten;
    Rng rng(12345);
    for (int i = 0; i < per_patch; ++i) {  // horizontal patch near the origin
        xyz.push_back(rng.uniform(0.0, 2.0));
        xyz.push_back(rng.uniform(0.0, 2.0));
        xyz.push_back(rng.uniform(-0.01, 0.01));
        inten.push_back(0.2 + rng.uniform(-0.01, 0.01));
    }
    for (int i = 0; i < per_patch; ++i) {  // vertical patch far away
        xyz.push_back(50.0 + rng.uniform(-0.01, 0.01));
        xyz.push_back(rng.uniform(0.0, 2.0));
        xyz.push_back(rng.uniform(0.0, 2.0));
        inten.push_back(0.8 + rng.uniform(-0.01, 0.01));
    }
    return cloud_from(xyz, inten);
}

// enumerate all set partitions via restricted growth strings
void enumerate_partitions(int n, const std::function<void(const std::vector<uint32_t>&)>& f) {
    std::vector<uint32_t> a(static_cast<size_t>(n), 0);
    std::vector<uint32_t> b(static_cast<size_t>(n), 0);  // b[i] = 1 + max(a[0..i-1])
    while (true) {
        f(a);
        int i = n - 1;
        while (i > 0 && a[static_cast<size_t>(i)] == b[static_cast<size_t>(i)]) --i;
        if (i == 0) break;
        ++a[static_cast<size_t>(i)];
        for (int j = i + 1; j < n; ++j) {
            a[static_cast<size_t>(j)] = 0;
            b[static_cast<size_t>(j)] =
                std::max(b[static_cast<size_t>(i)] + (a[static_cast<size_t>(i)] ==
                          b[static_cast<size_t>(i)] ? 1u : 0u),
                         a[static_cast<size_t>(i)] + 1);
        }
    }
}

}  // namespace

TEST_CASE("partition: lambda = 0 keeps every point its own segment") {
    auto cloud = two_patch_instance(8);
    auto res = partition(cloud, 0.0, 3);
    CHECK(res.segment_count == cloud.size());
}

TEST_CASE("partition: very large lambda collapses a connected instance to one segment") {
    // dense line of points: kNN graph is connected
    std::vector<double> xyz, inten;
    for (int i = 0; i < 30; ++i) {
        xyz.push_back(0.1 * i);
        xyz.push_back(0.0);
        xyz.push_back(i % 2 ? 0.01 : -0.01);
        inten.push_back(i * 0.03);
    }
    auto cloud = cloud_from(xyz, inten);
    auto res = partition(cloud, 1e9, 3);
    CHECK(res.segment_count == 1);
}

TEST_CASE("partition: two separated planar patches give exactly 2 segments at 0.03") {
    auto cloud = two_patch_instance(5);  // 10 points: exhaustive oracle feasible
    auto res = partition(cloud, 0.03, 3);
    CHECK(res.segment_count == 2);
    // all patch-1 points share a segment, all patch-2 points share the other
    for (int i = 1; i < 5; ++i) CHECK(res.segment_of_point[static_cast<size_t>(i)] ==
                                      res.segment_of_point[0]);
    for (int i = 6; i < 10; ++i) CHECK(res.segment_of_point[static_cast<size_t>(i)] ==
                                       res.segment_of_point[5]);
    CHECK(res.segment_of_point[0] != res.segment_of_point[5]);

    // exhaustive search over all 115975 partitions of 10 points: the greedy
    // result attains the optimal objective
    const auto feats = partition_features(cloud, 3, 1.0);
    const auto adjacency = knn_adjacency(cloud, 3);
    double best = 1e300;
    std::vector<uint32_t> best_labels;
    enumerate_partitions(10, [&](const std::vector<uint32_t>& labels) {
        const double obj = partition_objective(feats, adjacency, labels, 0.03);
        if (obj < best) {
            best = obj;
            best_labels = labels;
        }
    });
    CHECK(res.objective == doctest::Approx(best).epsilon(1e-9));
    // and the optimum is the two patches
    std::set<uint32_t> ids1(best_labels.begin(), best_labels.begin() + 5);
    std::set<uint32_t> ids2(best_labels.begin() + 5, best_labels.end());
    CHECK(ids1.size() == 1);
    CHECK(ids2.size() == 1);
    CHECK(*ids1.begin() != *ids2.begin());
}

TEST_CASE("partition: objective is monotonically non-increasing across merges") {
    SUBCASE("structured") {
        auto cloud = two_patch_instance(20);
        std::vector<double> trace;
        partition(cloud, 0.05, 4, 1.0, &trace);
        REQUIRE(trace.size() >= 2);
        for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    }
    SUBCASE("random") {
        Rng rng(31337);
        std::vector<double> xyz, inten;
        for (int i = 0; i < 120; ++i) {
            xyz.push_back(rng.uniform(0, 6));
            xyz.push_back(rng.uniform(0, 6));
            xyz.push_back(rng.uniform(0, 2));
            inten.push_back(rng.uniform(0, 1));
        }
        std::vector<double> trace;
        partition(cloud_from(xyz, inten), 0.03, 5, 1.0, &trace);
        for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    }
}

TEST_CASE("partition: segments are connected components of the adjacency graph") {
    Rng rng(777);
    std::vector<double> xyz, inten;
    for (int i = 0; i < 150; ++i) {
        xyz.push_back(rng.uniform(0, 8));
        xyz.push_back(rng.uniform(0, 8));
        xyz.push_back(rng.uniform(0, 1));
        inten.push_back(rng.uniform(0, 1));
    }
    auto cloud = cloud_from(xyz, inten);
    auto res = partition(cloud, 0.05, 5);
    const auto adjacency = knn_adjacency(cloud, 5);
    // BFS within each segment must reach every member
    for (uint32_t s = 0; s < static_cast<uint32_t>(res.segment_count); ++s) {
        std::vector<int32_t> members;
        for (int64_t i = 0; i < cloud.size(); ++i)
            if (res.segment_of_point[static_cast<size_t>(i)] == s)
                members.push_back(static_cast<int32_t>(i));
        REQUIRE(!members.empty());
        std::set<int32_t> seen = {members[0]};
        std::vector<int32_t> frontier = {members[0]};
        while (!frontier.empty()) {
            const int32_t cur = frontier.back();
            frontier.pop_back();
            for (const auto& [a, b] : adjacency) {
                int32_t other = -1;
                if (a == cur) other = b;
                else if (b == cur) other = a;
                if (other < 0 || seen.count(other)) continue;
                if (res.segment_of_point[static_cast<size_t>(other)] != s) continue;
                seen.insert(other);
                frontier.push_back(other);
            }
        }
        CHECK(seen.size() == members.size());
    }
}

TEST_CASE("partition: deterministic; k_adj < 3 rejected") {
    auto cloud = two_patch_instance(10);
    auto a = partition(cloud, 0.03, 4);
    auto b = partition(cloud, 0.03, 4);
    CHECK(a.segment_of_point == b.segment_of_point);
    CHECK_THROWS_AS(partition(cloud, 0.03, 2), Error);
}

TEST_CASE("build edges: full set when S-1 <= max_edges") {
    auto g = build_edges(40, 80, 5);
    CHECK(g.edges.size() == 40u * 39u);
    for (int32_t i = 0; i < 40; ++i)
        CHECK(g.node_offsets[static_cast<size_t>(i) + 1] -
              g.node_offsets[static_cast<size_t>(i)] == 39);
}

TEST_CASE("build edges: S=200, max 80 gives exactly 80 out-edges per node") {
    auto g = build_edges(200, 80, 9);
    CHECK(g.segment_count == 200);
    for (int32_t i = 0; i < 200; ++i) {
        const int32_t b = g.node_offsets[static_cast<size_t>(i)];
        const int32_t e = g.node_offsets[static_cast<size_t>(i) + 1];
        CHECK(e - b == 80);
        std::set<int32_t> targets;
        for (int32_t k = b; k < e; ++k) {
            const auto [t, s] = g.edges[static_cast<size_t>(k)];
            CHECK(t == i);
            CHECK(s != i);  // no self-edges
            targets.insert(s);
        }
        CHECK(targets.size() == 80u);  // no duplicates
    }
}

TEST_CASE("build edges: same seed identical, different seed differs") {
    auto a = build_edges(200, 80, 41);
    auto b = build_edges(200, 80, 41);
    CHECK(a.edges == b.edges);
    auto c = build_edges(200, 80, 42);
    CHECK(a.edges != c.edges);
}

TEST_CASE("build edges: zero segments rejected") {
    CHECK_THROWS_AS(build_edges(0, 80, 1), Error);
}
