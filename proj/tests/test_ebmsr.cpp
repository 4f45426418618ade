#include "fformpp/ebmsr.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace fformpp;
using namespace fformpp::ebmsr;
using Catch::Matchers::WithinAbs;

namespace {

struct Synthetic {
    Eigen::MatrixXd F, Y, B;
    std::vector<std::string> names, responses;
};

Synthetic linear_data(int n, int d, int p, double noise, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> z;
    Synthetic s;
    s.F.resize(n, d);
    s.B.resize(d + 1, p);
    for (Eigen::Index i = 0; i < s.B.size(); ++i) s.B.data()[i] = z(rng);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) s.F(i, j) = 2.0 + 3.0 * z(rng);
    Eigen::MatrixXd X(n, d + 1);
    X.col(0).setOnes();
    X.rightCols(d) = s.F;
    s.Y = X * s.B;
    for (Eigen::Index i = 0; i < s.Y.size(); ++i) s.Y.data()[i] += noise * z(rng);
    for (int j = 0; j < d; ++j) s.names.push_back("f" + std::to_string(j));
    for (int j = 0; j < p; ++j) s.responses.push_back("m" + std::to_string(j));
    return s;
}

MCMCConfig linear_config(std::uint64_t seed) {
    MCMCConfig c;
    c.iterations = 1500;
    c.burn_in = 500;
    c.thin = 1;
    c.additive_knots = 0;
    c.surface_knots = 0;
    c.transform = ResponseTransform::Identity;
    c.seed = seed;
    return c;
}

} // namespace

TEST_CASE("basis functions", "[ebmsr]") {
    CHECK(additive_basis(1.5, 1.5) == 0.0);
    CHECK(additive_basis(3.0, 1.0) == 8.0);
    CHECK(additive_basis(0.3 + 0.7, 0.3) == additive_basis(0.3 - 0.7, 0.3));
    const std::vector<double> a{1.0, 2.0}, b{1.0, 3.0}, c{1.0, 2.0 + std::numbers::e};
    CHECK(surface_basis(a, a) == 0.0);
    CHECK(surface_basis(a, b) == 0.0);
    CHECK_THAT(surface_basis(a, c), WithinAbs(std::numbers::e * std::numbers::e, 1e-12));
    CHECK_THROWS_AS(surface_basis(a, std::vector<double>{1.0}), Error);
}

TEST_CASE("design matrix widths", "[ebmsr]") {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Random(100, 2);
    KnotSet k;
    k.additive_features = {0, 1};
    k.additive = {{-0.5, 0.5}, {0.0, 0.2}};
    k.surface = Eigen::MatrixXd::Random(5, 2) * 0.5;
    const auto D = build_design(Z, k);
    CHECK(D.q0 == 3);
    CHECK(D.q() == 12);
    CHECK(D.X.rows() == 100);
    CHECK(D.X.col(0).isOnes());
    CHECK_THAT(D.X(7, 4), WithinAbs(additive_basis(Z(7, 0), 0.5), 1e-15));
    const Eigen::VectorXd row = Z.row(7).transpose();
    CHECK((design_row(row, k) - D.X.row(7)).cwiseAbs().maxCoeff() < 1e-12);

    const auto plain = build_design(Z, KnotSet{});
    CHECK(plain.q() == 3);
    CHECK(plain.X.rightCols(2) == Z);

    KnotSet bad;
    bad.surface = Eigen::MatrixXd::Zero(2, 3);
    CHECK_THROWS_AS(build_design(Z, bad), Error);
}

TEST_CASE("linear recovery matches least squares", "[ebmsr]") {
    const auto s = linear_data(500, 3, 3, 0.5, 21);
    const auto post = fit(s.F, s.names, s.Y, s.responses, linear_config(4));
    REQUIRE(post.draws.size() == 1000);
    const auto raw = raw_linear_draws(post);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(4, 3);
    for (const auto& r : raw) mean += r;
    mean /= static_cast<double>(raw.size());

    Eigen::MatrixXd X(500, 4);
    X.col(0).setOnes();
    X.rightCols(3) = s.F;
    const Eigen::MatrixXd ols = X.colPivHouseholderQr().solve(s.Y);
    CHECK((mean - ols).cwiseAbs().maxCoeff() < 0.1);
    for (const auto& d : post.draws) {
        Eigen::LLT<Eigen::MatrixXd> llt(d.sigma);
        CHECK(llt.info() == Eigen::Success);
        CHECK((d.sigma - d.sigma.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("columns fit jointly agree with univariate fits", "[ebmsr]") {
    const auto s = linear_data(300, 2, 2, 0.3, 31);
    auto cfg = linear_config(9);
    const auto joint = fit(s.F, s.names, s.Y, s.responses, cfg);
    const Eigen::MatrixXd jm = joint.coefficient_mean();
    for (int j = 0; j < 2; ++j) {
        const auto uni = fit(s.F, s.names, s.Y.col(j), {s.responses[static_cast<std::size_t>(j)]}, cfg);
        CHECK((uni.coefficient_mean().col(0) - jm.col(j)).cwiseAbs().maxCoeff() < 0.02);
    }
}

TEST_CASE("duplicated responses get matching coefficients", "[ebmsr]") {
    auto s = linear_data(200, 2, 1, 0.3, 41);
    Eigen::MatrixXd Y(200, 2);
    Y << s.Y, s.Y;
    auto cfg = linear_config(3);
    cfg.additive_knots = 1;
    cfg.surface_knots = 2;
    const auto post = fit(s.F, s.names, Y, {"a", "b"}, cfg);
    const Eigen::MatrixXd m = post.coefficient_mean();
    CHECK((m.col(0) - m.col(1)).cwiseAbs().maxCoeff() < 0.05 * (1.0 + m.cwiseAbs().maxCoeff()));
}

TEST_CASE("prediction contract", "[ebmsr]") {
    const auto s = linear_data(120, 2, 2, 0.2, 51);
    auto cfg = linear_config(5);
    cfg.additive_knots = 2;
    cfg.surface_knots = 3;
    auto post = fit(s.F, s.names, s.Y, s.responses, cfg);

    auto one = post;
    one.draws.resize(1);
    const std::vector<double> f{s.F(3, 0), s.F(3, 1)};
    Eigen::VectorXd z(2);
    for (int j = 0; j < 2; ++j) z(j) = (f[static_cast<std::size_t>(j)] - one.standardization.mean(j)) / one.standardization.sd(j);
    const Eigen::RowVectorXd xb = design_row(z, one.draws[0].knots) * one.draws[0].B;
    const auto p1 = predict(one, s.names, f);
    CHECK(p1.values[0] == xb(0));
    CHECK(p1.values[1] == xb(1));

    const auto a = predict(post, {"f0", "f1"}, std::vector<double>{f[0], f[1]});
    const auto b = predict(post, {"f1", "f0"}, std::vector<double>{f[1], f[0]});
    CHECK(a.values == b.values);
    CHECK(!a.extrapolated);
    CHECK(predict(post, s.names, std::vector<double>{1e6, f[1]}).extrapolated);
    CHECK_THROWS_AS(predict(post, {"f0", "g"}, f), Error);
    CHECK_THROWS_AS(predict(post, {"f0"}, std::vector<double>{1.0}), Error);
}

TEST_CASE("noiseless fit interpolates its training rows", "[ebmsr]") {
    auto s = linear_data(150, 2, 2, 0.0, 61);
    s.Y = (s.Y.array() - s.Y.minCoeff() + 1.0).matrix();
    MCMCConfig cfg;
    cfg.iterations = 1000;
    cfg.burn_in = 500;
    cfg.additive_knots = 1;
    cfg.surface_knots = 2;
    cfg.transform = ResponseTransform::Identity;
    cfg.seed = 2;
    const auto post = fit(s.F, s.names, s.Y, s.responses, cfg);
    for (int i : {0, 17, 99}) {
        const auto pr = predict(post, s.names, std::vector<double>{s.F(i, 0), s.F(i, 1)});
        for (int j = 0; j < 2; ++j) CHECK(std::abs(pr.values[static_cast<std::size_t>(j)] - s.Y(i, j)) < 0.05);
    }
}

TEST_CASE("larger shrinkage precision shrinks that part", "[ebmsr]") {
    const auto s = linear_data(80, 3, 2, 1.0, 71);
    auto cfg = linear_config(8);
    cfg.update_shrinkage = false;
    double prev = std::numeric_limits<double>::infinity();
    for (double lam : {0.01, 1.0, 100.0}) {
        cfg.lambda_init = {lam, 1.0, 1.0};
        const auto post = fit(s.F, s.names, s.Y, s.responses, cfg);
        const double norm = post.coefficient_mean().middleRows(1, 3).norm();
        CHECK(norm <= prev);
        prev = norm;
    }
}

TEST_CASE("predictions are invariant to affine feature rescaling", "[ebmsr]") {
    const auto s = linear_data(100, 2, 2, 0.3, 81);
    auto cfg = linear_config(6);
    cfg.iterations = 400;
    cfg.burn_in = 200;
    cfg.additive_knots = 2;
    cfg.surface_knots = 3;
    cfg.transform = ResponseTransform::Identity;
    Eigen::MatrixXd G = s.F;
    G.col(0) = 7.0 * G.col(0).array() - 3.0;
    G.col(1) = 0.01 * G.col(1).array() + 11.0;
    const auto a = fit(s.F, s.names, s.Y, s.responses, cfg);
    const auto b = fit(G, s.names, s.Y, s.responses, cfg);
    for (int i : {2, 40}) {
        const auto pa = predict(a, s.names, std::vector<double>{s.F(i, 0), s.F(i, 1)});
        const auto pb = predict(b, s.names, std::vector<double>{G(i, 0), G(i, 1)});
        for (int j = 0; j < 2; ++j) CHECK_THAT(pb.values[static_cast<std::size_t>(j)], WithinAbs(pa.values[static_cast<std::size_t>(j)], 1e-8));
    }
}

TEST_CASE("least-squares baseline", "[ebmsr]") {
    const auto s = linear_data(60, 3, 2, 0.0, 91);
    const auto m = fit_mlr_baseline(s.F, s.names, s.Y, s.responses, ResponseTransform::Identity);
    CHECK((m.raw_coefficients() - s.B).cwiseAbs().maxCoeff() < 1e-9);

    const auto noisy = linear_data(60, 3, 2, 1.0, 92);
    const auto mn = fit_mlr_baseline(noisy.F, noisy.names, noisy.Y, noisy.responses, ResponseTransform::Identity);
    const Eigen::VectorXd fm = noisy.F.colwise().mean().transpose();
    const auto pm = predict(mn, noisy.names, std::vector<double>(fm.data(), fm.data() + 3));
    for (int j = 0; j < 2; ++j) CHECK_THAT(pm.values[static_cast<std::size_t>(j)], WithinAbs(noisy.Y.col(j).mean(), 1e-9));

    auto cfg = linear_config(12);
    cfg.update_shrinkage = false;
    cfg.lambda_init = {0.0, 0.0, 0.0};
    const auto post = fit(noisy.F, noisy.names, noisy.Y, noisy.responses, cfg);
    for (int i : {0, 30}) {
        const std::vector<double> f{noisy.F(i, 0), noisy.F(i, 1), noisy.F(i, 2)};
        const auto pe = predict(post, noisy.names, f), pl = predict(mn, noisy.names, f);
        for (int j = 0; j < 2; ++j) CHECK(std::abs(pe.values[static_cast<std::size_t>(j)] - pl.values[static_cast<std::size_t>(j)]) < 0.05);
    }

    CHECK_THROWS_AS(fit_mlr_baseline(s.F.topRows(3), s.names, s.Y.topRows(3), s.responses), Error);
    Eigen::MatrixXd dup(60, 2);
    dup << s.F.col(0), s.F.col(0) * 2.0;
    CHECK_THROWS_AS(fit_mlr_baseline(dup, {"a", "b"}, s.Y, s.responses, ResponseTransform::Identity), Error);
}

TEST_CASE("zero-variance features are dropped", "[ebmsr]") {
    auto s = linear_data(50, 2, 1, 0.5, 95);
    Eigen::MatrixXd F(50, 3);
    F << s.F, Eigen::VectorXd::Constant(50, 4.0);
    auto cfg = linear_config(1);
    cfg.iterations = 200;
    cfg.burn_in = 100;
    const auto post = fit(F, {"f0", "f1", "flat"}, s.Y, s.responses, cfg);
    CHECK(post.standardization.dropped == std::vector<std::string>{"flat"});
    CHECK(post.q0 == 3);
    CHECK_NOTHROW(predict(post, {"f0", "f1", "flat"}, std::vector<double>{1.0, 2.0, 4.0}));
}

TEST_CASE("moving knot finds the kink", "[ebmsr]") {
    Rng rng(5);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const int n = 300;
    Eigen::MatrixXd F(n, 1), Y(n, 1);
    for (int i = 0; i < n; ++i) {
        F(i, 0) = u(rng);
        Y(i, 0) = 1.0 + 0.5 * F(i, 0) + 2.0 * std::max(0.0, F(i, 0) - 0.6) + 0.2 * z(rng);
    }
    double best = std::numeric_limits<double>::infinity(), oracle = 0.0;
    for (int g = 0; g <= 4000; ++g) {
        const double k = -2.0 + 0.001 * g;
        Eigen::MatrixXd X(n, 3);
        for (int i = 0; i < n; ++i) X.row(i) << 1.0, F(i, 0), additive_basis(F(i, 0), k);
        const double rss = (Y - X * X.colPivHouseholderQr().solve(Y)).squaredNorm();
        if (rss < best) {
            best = rss;
            oracle = k;
        }
    }
    MCMCConfig cfg;
    cfg.additive_knots = 1;
    cfg.surface_knots = 0;
    cfg.transform = ResponseTransform::Identity;
    cfg.seed = 1;
    const auto post = fit(F, {"x"}, Y, {"y"}, cfg);
    std::vector<double> knots;
    for (const auto& d : post.draws) knots.push_back(post.standardization.mean(0) + post.standardization.sd(0) * d.knots.additive[0][0]);
    CHECK(std::abs(posterior_mode(knots, 0.05) - oracle) <= 0.2);
    CHECK(post.additive_acceptance > 0.1);
    CHECK(post.additive_acceptance < 0.6);
}

TEST_CASE("posterior persistence", "[ebmsr][io]") {
    const auto s = linear_data(80, 2, 2, 0.3, 99);
    auto cfg = linear_config(2);
    cfg.iterations = 300;
    cfg.burn_in = 100;
    cfg.additive_knots = 1;
    cfg.surface_knots = 2;
    cfg.transform = ResponseTransform::Log1p;
    Eigen::MatrixXd Y = s.Y.array().abs();
    const auto post = fit(s.F, s.names, Y, s.responses, cfg);
    const auto text = to_json(post).dump();
    const auto back = posterior_from_json(nlohmann::json::parse(text));
    CHECK(to_json(back).dump() == text);
    const std::vector<double> f{s.F(5, 0), s.F(5, 1)};
    CHECK(predict(back, s.names, f).values == predict(post, s.names, f).values);

    auto j = to_json(post);
    j["version"] = 99;
    try {
        posterior_from_json(j);
        FAIL("expected UnknownVersion");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnknownVersion);
    }
    const auto m = fit_mlr_baseline(s.F, s.names, Y, s.responses);
    CHECK(predict(mlr_from_json(nlohmann::json::parse(to_json(m).dump())), s.names, f).values == predict(m, s.names, f).values);
    CHECK_THROWS_AS(mlr_from_json(to_json(post)), Error);
}

TEST_CASE("invalid configurations are rejected", "[ebmsr]") {
    const auto s = linear_data(30, 1, 1, 0.3, 7);
    auto cfg = linear_config(1);
    cfg.burn_in = cfg.iterations;
    CHECK_THROWS_AS(fit(s.F, s.names, s.Y, s.responses, cfg), Error);
    CHECK_THROWS_AS(fit(s.F, s.names, s.Y.topRows(10), s.responses, linear_config(1)), Error);
    Eigen::MatrixXd bad = s.Y;
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(fit(s.F, s.names, bad, s.responses, linear_config(1)), Error);
}
