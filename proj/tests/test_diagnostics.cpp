#include "fformpp/diagnostics.hpp"
#include "fformpp/rng.hpp"

#include <catch_amalgamated.hpp>

#include <random>
#include <set>
#include <sstream>

using namespace fformpp;
using namespace fformpp::diagnostics;

namespace {

// Plain O(n^3) Ward.D: merge heights in the order merges happen.
std::vector<double> naive_ward_heights(std::vector<std::vector<double>> D) {
    const std::size_t n = D.size();
    std::vector<int> size(n, 1);
    std::vector<bool> alive(n, true);
    std::vector<double> h;
    for (std::size_t step = 1; step < n; ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (alive[i] && alive[j] && D[i][j] < best) {
                    best = D[i][j];
                    bi = i;
                    bj = j;
                }
        h.push_back(best);
        for (std::size_t k = 0; k < n; ++k) {
            if (!alive[k] || k == bi || k == bj) continue;
            const double ni = size[bi], nj = size[bj], nk = size[k];
            D[bi][k] = D[k][bi] = ((ni + nk) * D[bi][k] + (nj + nk) * D[bj][k] - nk * best) / (ni + nj + nk);
        }
        size[bi] += size[bj];
        alive[bj] = false;
    }
    return h;
}

std::vector<std::vector<int>> random_selections(std::size_t n, std::size_t m, std::size_t k, std::uint64_t seed) {
    auto rng = make_rng(seed, "selections");
    std::vector<std::vector<int>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<int> r(m, 0);
        for (std::size_t j = 0; j < k; ++j) r[idx[j]] = 1;
        rows.push_back(r);
    }
    return rows;
}

} // namespace

TEST_CASE("binary distance", "[diagnostics]") {
    const std::vector<int> a{1, 0, 1}, b{1, 1, 0}, z{0, 0, 0};
    CHECK(binary_distance(a, b) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(binary_distance(a, a) == 0.0);
    CHECK(binary_distance(z, z) == 0.0);
    CHECK(binary_distance(std::vector<int>{1, 0, 0, 0}, std::vector<int>{0, 1, 0, 0}) == 1.0);
    CHECK_THROWS_AS(binary_distance(a, std::vector<int>{1, 0}), Error);
}

TEST_CASE("Ward linkage agrees with the naive algorithm", "[diagnostics]") {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> U;
    for (int rep = 0; rep < 3; ++rep) {
        const int n = 40;
        std::vector<Eigen::Vector3d> pts;
        for (int i = 0; i < n; ++i) pts.emplace_back(U(g), U(g), U(g));
        std::vector<std::vector<double>> full(n, std::vector<double>(n, 0.0));
        std::vector<double> cond;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                full[i][j] = full[j][i] = (pts[i] - pts[j]).norm();
                cond.push_back(full[i][j]);
            }
        const auto dg = ward_linkage(n, cond);
        REQUIRE(dg.merges.size() == 39);
        const auto oracle = naive_ward_heights(full);
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(dg.merges[i].height == Catch::Approx(oracle[i]).margin(1e-12));
            if (i > 0) CHECK(oracle[i - 1] <= oracle[i]);
        }
        CHECK(dg.merges.back().size == n);
    }
    const auto rows = random_selections(50, 10, 4, 2);
    const auto dg = ward_linkage(rows);
    for (std::size_t i = 1; i < dg.merges.size(); ++i) CHECK(dg.merges[i - 1].height <= dg.merges[i].height);
    CHECK(dg.merges.back().size == 50);
}

TEST_CASE("cutting the tree", "[diagnostics]") {
    // two obvious groups
    std::vector<std::vector<int>> rows;
    for (int i = 0; i < 5; ++i) rows.push_back({1, 1, 0, 0});
    for (int i = 0; i < 4; ++i) rows.push_back({0, 0, 1, 1});
    const auto dg = ward_linkage(rows);
    const auto two = cut_tree(dg, 2);
    CHECK(two == std::vector<int>{1, 1, 1, 1, 1, 2, 2, 2, 2});
    const auto one = cut_tree(dg, 1);
    CHECK(std::set<int>(one.begin(), one.end()).size() == 1);
    const auto all = cut_tree(dg, 9);
    CHECK(std::set<int>(all.begin(), all.end()).size() == 9);
    CHECK_THROWS_AS(cut_tree(dg, 0), Error);
    CHECK_THROWS_AS(cut_tree(dg, 10), Error);
}

TEST_CASE("cluster table rows", "[diagnostics]") {
    const std::vector<ModelId> models{ModelId::Wn, ModelId::AutoArima, ModelId::Ets, ModelId::Rw, ModelId::Rwd, ModelId::Theta};
    const auto rows = random_selections(60, models.size(), 3, 7);
    SelectionMatrix s;
    s.models = models;
    s.rows = rows;
    for (std::size_t i = 0; i < rows.size(); ++i) s.series_ids.push_back("s" + std::to_string(i));
    const auto t = cluster_combinations(s, 3);
    std::size_t total = 0;
    for (Eigen::Index c = 0; c < 3; ++c) {
        total += t.sizes[static_cast<std::size_t>(c)];
        CHECK(t.percent.row(c).sum() == Catch::Approx(300.0));
        CHECK(t.percent.row(c).maxCoeff() <= 100.0);
    }
    CHECK(total == 60);
    std::ostringstream os;
    write_cluster_table_csv(os, t);
    CHECK(os.str().rfind("cluster,n,wn,auto.arima,ets,rw,rwd,theta\n", 0) == 0);

    const auto fromc = SelectionMatrix::from_contributors({"a", "b"}, models, {{ModelId::Ets, ModelId::Rw}, {ModelId::Wn, ModelId::Theta}});
    CHECK(fromc.rows[0] == std::vector<int>{0, 0, 1, 1, 0, 0});
    CHECK(fromc.rows[1] == std::vector<int>{1, 0, 0, 0, 0, 1});
}

TEST_CASE("PCA projection", "[diagnostics]") {
    std::mt19937_64 g(5);
    std::normal_distribution<double> N;
    Eigen::MatrixXd ref(200, 4);
    for (Eigen::Index i = 0; i < ref.rows(); ++i) {
        const double a = N(g), b = N(g);
        ref.row(i) << 3 * a, 2 * a + 0.1 * N(g), b, 7.0;
    }
    const std::vector<std::string> names{"a", "b", "c", "k"};
    Eigen::MatrixXd fresh(3, 4);
    fresh << 0, 0, 0, 7, 100, 70, 0, 7, 0.3, 0.2, 0.1, 7;
    const auto p = pca_project(ref, names, fresh, names);
    CHECK(p.dropped == std::vector<std::string>{"k"});
    CHECK(p.names == std::vector<std::string>{"a", "b", "c"});
    const Eigen::Matrix2d gram = p.loadings * p.loadings.transpose();
    CHECK((gram - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(p.explained[0] >= p.explained[1]);
    CHECK(p.explained[0] + p.explained[1] <= 1.0 + 1e-12);
    CHECK(p.explained[0] > 0.6);
    CHECK(p.out_of_hull == 1);
    // reference scores are centred and uncorrelated
    CHECK(p.reference_coords.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);
    const double cov = (p.reference_coords.col(0).array() * p.reference_coords.col(1).array()).sum();
    CHECK(std::abs(cov) < 1e-8);
    // rescaling a column leaves the projection unchanged
    Eigen::MatrixXd ref2 = ref, fresh2 = fresh;
    ref2.col(2) *= 1000.0;
    fresh2.col(2) *= 1000.0;
    const auto q = pca_project(ref2, names, fresh2, names);
    CHECK((q.reference_coords - p.reference_coords).cwiseAbs().maxCoeff() < 1e-8);
    CHECK_THROWS_AS(pca_project(ref, names, fresh, {"a", "b", "x", "k"}), Error);
}

TEST_CASE("coefficient export", "[diagnostics]") {
    std::mt19937_64 g(3);
    std::normal_distribution<double> N;
    const Eigen::Index n = 120;
    Eigen::MatrixXd F(n, 3), Y(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        F.row(i) << N(g), N(g), N(g);
        Y(i, 0) = 2.0 + F(i, 0) + 0.05 * N(g);
        Y(i, 1) = 1.0 - F(i, 1) + 0.05 * N(g);
        Y(i, 2) = 3.0 + 0.05 * N(g);
    }
    ebmsr::MCMCConfig c;
    c.iterations = 400;
    c.burn_in = 200;
    c.additive_features = 2;
    c.additive_knots = 2;
    c.surface_knots = 3;
    c.transform = ebmsr::ResponseTransform::Identity;
    const auto post = ebmsr::fit(F, {"f1", "f2", "f3"}, Y, {"wn", "rw", "ets"}, c);
    const auto t = export_coefficient_table(post);
    CHECK(t.columns == std::vector<std::string>{"rw", "wn", "ets"});
    CHECK(t.values.rows() == static_cast<Eigen::Index>(post.q0 + post.qa + post.qs));
    CHECK(std::count(t.blocks.begin(), t.blocks.end(), "linear") == post.q0);
    CHECK(t.terms[0] == "(intercept)");
    const auto fixed = export_coefficient_table(post, {"ets", "wn"});
    CHECK(fixed.values.col(1) == t.values.col(1));
    CHECK_THROWS_AS(export_coefficient_table(post, {"nope"}), Error);
    std::ostringstream os;
    write_coefficient_table_csv(os, t);
    CHECK(os.str().rfind("term,block,rw,wn,ets\n(intercept),linear,", 0) == 0);
}

TEST_CASE("manifest", "[diagnostics]") {
    Manifest m;
    m.command = "pca";
    m.outputs.push_back({"pca.csv", "projected coordinates", {"id", "set", "pc1", "pc2"}});
    m.provenance["seed"] = 1;
    const auto j = m.to_json();
    CHECK(j["outputs"][0]["file"] == "pca.csv");
    CHECK(j["provenance"]["seed"] == 1);
}
