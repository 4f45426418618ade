#pragma once

#include "fformpp/error.hpp"
#include "fformpp/features.hpp"
#include "fformpp/pool.hpp"
#include "fformpp/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fformpp::ebmsr {

/// Cubic radial basis |x - knot|^3.
inline double additive_basis(double x, double knot) {
    const double d = std::abs(x - knot);
    return d * d * d;
}

/// Thin-plate radial basis r^2 log r, zero at r = 0.
inline double surface_basis(std::span<const double> x, std::span<const double> knot) {
    if (x.size() != knot.size()) throw Error(ErrorKind::DimensionMismatch, "surface basis point and knot differ in dimension");
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - knot[i]) * (x[i] - knot[i]);
    return r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0;
}

struct KnotSet {
    std::vector<int> additive_features;         // standardized feature columns with additive terms
    std::vector<std::vector<double>> additive;  // knots for each entry of additive_features
    Eigen::MatrixXd surface;                    // one surface knot per row

    [[nodiscard]] int qa() const {
        int q = 0;
        for (const auto& k : additive) q += static_cast<int>(k.size());
        return q;
    }
    [[nodiscard]] int qs() const { return static_cast<int>(surface.rows()); }

    friend bool operator==(const KnotSet& a, const KnotSet& b) {
        return a.additive_features == b.additive_features && a.additive == b.additive &&
               a.surface.rows() == b.surface.rows() && a.surface.cols() == b.surface.cols() && a.surface == b.surface;
    }
};

struct DesignMatrix {
    Eigen::MatrixXd X;
    int q0 = 0, qa = 0, qs = 0;
    [[nodiscard]] int q() const { return q0 + qa + qs; }
};

namespace detail {

inline Eigen::VectorXd additive_column(const Eigen::VectorXd& z, double knot) {
    return (z.array() - knot).abs().cube().matrix();
}

inline Eigen::VectorXd surface_column(const Eigen::MatrixXd& Z, const Eigen::RowVectorXd& knot) {
    Eigen::ArrayXd r2 = Eigen::ArrayXd::Zero(Z.rows());
    for (Eigen::Index f = 0; f < Z.cols(); ++f) r2 += (Z.col(f).array() - knot(f)).square();
    return (r2 > 0.0).select(0.5 * r2 * r2.max(1e-300).log(), 0.0).matrix();
}

inline void check_knots(const KnotSet& k, Eigen::Index d) {
    if (k.additive_features.size() != k.additive.size()) {
        throw Error(ErrorKind::DimensionMismatch, "additive knot lists do not match the additive feature list");
    }
    for (int f : k.additive_features) {
        if (f < 0 || f >= d) throw Error(ErrorKind::DimensionMismatch, "additive feature index out of range");
    }
    if (k.surface.rows() > 0 && k.surface.cols() != d) {
        throw Error(ErrorKind::DimensionMismatch, "surface knots have " + std::to_string(k.surface.cols()) +
                                                      " dimensions, features have " + std::to_string(d));
    }
}

} // namespace detail

/// X = [1, Z, additive columns (feature-major, knot order), surface columns].
inline DesignMatrix build_design(const Eigen::MatrixXd& Z, const KnotSet& knots) {
    detail::check_knots(knots, Z.cols());
    DesignMatrix D;
    D.q0 = static_cast<int>(Z.cols()) + 1;
    D.qa = knots.qa();
    D.qs = knots.qs();
    D.X.resize(Z.rows(), D.q());
    D.X.col(0).setOnes();
    D.X.middleCols(1, Z.cols()) = Z;
    Eigen::Index c = D.q0;
    for (std::size_t i = 0; i < knots.additive.size(); ++i) {
        for (double k : knots.additive[i]) D.X.col(c++) = detail::additive_column(Z.col(knots.additive_features[i]), k);
    }
    for (Eigen::Index s = 0; s < knots.surface.rows(); ++s) D.X.col(c++) = detail::surface_column(Z, knots.surface.row(s));
    return D;
}

/// One design row for a standardized feature vector z.
inline Eigen::RowVectorXd design_row(const Eigen::VectorXd& z, const KnotSet& knots) {
    detail::check_knots(knots, z.size());
    const Eigen::Index q0 = z.size() + 1;
    Eigen::RowVectorXd x(q0 + knots.qa() + knots.qs());
    x(0) = 1.0;
    x.segment(1, z.size()) = z.transpose();
    Eigen::Index c = q0;
    for (std::size_t i = 0; i < knots.additive.size(); ++i) {
        for (double k : knots.additive[i]) x(c++) = additive_basis(z(knots.additive_features[i]), k);
    }
    for (Eigen::Index s = 0; s < knots.surface.rows(); ++s) {
        const double r2 = (knots.surface.row(s).transpose() - z).squaredNorm();
        x(c++) = r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0;
    }
    return x;
}

enum class ResponseTransform { Identity, Log1p };

inline std::string to_string(ResponseTransform t) { return t == ResponseTransform::Log1p ? "log1p" : "identity"; }

inline ResponseTransform parse_transform(const std::string& s) {
    if (s == "log1p") return ResponseTransform::Log1p;
    if (s == "identity") return ResponseTransform::Identity;
    throw Error(ErrorKind::Format, "unknown response transform '" + s + "'");
}

struct MCMCConfig {
    int iterations = 4000;
    int burn_in = 2000;
    int thin = 2;
    int additive_features = 10;          // features with additive terms, by |correlation| with the mean response
    int additive_knots = 3;              // knots per additive feature
    std::vector<int> additive_knot_counts;  // per selected feature; overrides additive_knots when non-empty
    int surface_knots = 10;
    double additive_step = 0.5;          // initial random-walk scale, standardized units
    double surface_step = 0.3;
    double target_acceptance = 0.3;
    bool update_knots = true;
    bool update_shrinkage = true;
    std::array<double, 3> lambda_shape{1.0, 1.0, 1.0};  // linear, additive, surface
    std::array<double, 3> lambda_rate{1.0, 1.0, 1.0};
    std::array<double, 3> lambda_init{1.0, 1.0, 1.0};
    double intercept_precision = 1e-6;
    double sigma_df_offset = 2.0;        // prior degrees of freedom p + offset
    double sigma_scale = 1.0;            // prior scale matrix sigma_scale * I
    ResponseTransform transform = ResponseTransform::Log1p;
    std::uint64_t seed = 0;
};

struct Standardization {
    std::vector<std::string> names;  // retained features, training order
    Eigen::VectorXd mean, sd, zmin, zmax;
    std::vector<std::string> dropped;  // zero-variance features
};

struct Draw {
    Eigen::MatrixXd B;       // q x p, blocks [B0; Ba; Bs]
    Eigen::MatrixXd sigma;   // p x p
    Eigen::MatrixXd lambda;  // 3 x p
    KnotSet knots;
    double loglik = 0.0;
};

struct SurfacePosterior {
    std::vector<std::string> feature_names;
    Standardization standardization;
    std::vector<std::string> response_names;
    ResponseTransform transform = ResponseTransform::Log1p;
    MCMCConfig config;
    int q0 = 0, qa = 0, qs = 0;
    std::vector<Draw> draws;
    std::vector<double> loglik_trace;
    double additive_acceptance = 0.0, surface_acceptance = 0.0;
    double rhat = 1.0;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t p() const { return response_names.size(); }
    [[nodiscard]] Eigen::MatrixXd B0(std::size_t i) const { return draws.at(i).B.topRows(q0); }
    [[nodiscard]] Eigen::MatrixXd Ba(std::size_t i) const { return draws.at(i).B.middleRows(q0, qa); }
    [[nodiscard]] Eigen::MatrixXd Bs(std::size_t i) const { return draws.at(i).B.bottomRows(qs); }

    [[nodiscard]] Eigen::MatrixXd coefficient_mean() const {
        if (draws.empty()) throw Error(ErrorKind::EmptySet, "posterior has no draws");
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(draws[0].B.rows(), draws[0].B.cols());
        for (const auto& d : draws) m += d.B;
        return m / static_cast<double>(draws.size());
    }

    /// Row labels matching coefficient_mean(), with the block of each row.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> coefficient_labels() const {
        std::vector<std::pair<std::string, std::string>> out{{"(intercept)", "linear"}};
        for (const auto& n : standardization.names) out.emplace_back(n, "linear");
        if (!draws.empty()) {
            const auto& k = draws[0].knots;
            for (std::size_t i = 0; i < k.additive.size(); ++i) {
                for (std::size_t j = 0; j < k.additive[i].size(); ++j) {
                    out.emplace_back(standardization.names[static_cast<std::size_t>(k.additive_features[i])] + "#" + std::to_string(j + 1), "additive");
                }
            }
            for (Eigen::Index s = 0; s < k.surface.rows(); ++s) out.emplace_back("surface#" + std::to_string(s + 1), "surface");
        }
        return out;
    }
};

namespace detail {

inline void check_finite(const Eigen::MatrixXd& M, const char* what) {
    if (!M.allFinite()) throw Error(ErrorKind::NonFinite, std::string(what) + " has non-finite entries");
}

inline Standardization fit_standardization(const Eigen::MatrixXd& F, const std::vector<std::string>& names) {
    if (static_cast<Eigen::Index>(names.size()) != F.cols()) throw Error(ErrorKind::DimensionMismatch, "feature names do not match columns");
    Standardization st;
    std::vector<double> mu, sd;
    const double n = static_cast<double>(F.rows());
    for (Eigen::Index j = 0; j < F.cols(); ++j) {
        const double m = F.col(j).mean();
        const double v = F.rows() > 1 ? (F.col(j).array() - m).square().sum() / (n - 1.0) : 0.0;
        const double s = std::sqrt(v);
        if (!(s > 1e-12 * std::max(1.0, std::abs(m)))) {
            st.dropped.push_back(names[static_cast<std::size_t>(j)]);
            continue;
        }
        st.names.push_back(names[static_cast<std::size_t>(j)]);
        mu.push_back(m);
        sd.push_back(s);
    }
    st.mean = Eigen::Map<Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    st.sd = Eigen::Map<Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    return st;
}

/// Column positions of the retained features inside a full schema.
inline std::vector<Eigen::Index> schema_positions(const Standardization& st, const std::vector<std::string>& names) {
    std::map<std::string, Eigen::Index> at;
    for (std::size_t i = 0; i < names.size(); ++i) at[names[i]] = static_cast<Eigen::Index>(i);
    std::vector<Eigen::Index> pos;
    for (const auto& n : st.names) {
        auto it = at.find(n);
        if (it == at.end()) throw Error(ErrorKind::FeatureMismatch, "missing feature '" + n + "'");
        pos.push_back(it->second);
    }
    return pos;
}

inline Eigen::MatrixXd apply_standardization(const Standardization& st, const Eigen::MatrixXd& F, const std::vector<std::string>& names) {
    const auto pos = schema_positions(st, names);
    Eigen::MatrixXd Z(F.rows(), static_cast<Eigen::Index>(pos.size()));
    for (std::size_t j = 0; j < pos.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        Z.col(jj) = (F.col(pos[j]).array() - st.mean(jj)) / st.sd(jj);
    }
    return Z;
}

inline Eigen::MatrixXd forward_transform(const Eigen::MatrixXd& Y, ResponseTransform t) {
    if (t == ResponseTransform::Identity) return Y;
    if ((Y.array() <= -1.0).any()) throw Error(ErrorKind::InvalidArgument, "log1p response transform needs values above -1");
    return Y.array().log1p().matrix();
}

inline double back_transform(double v, ResponseTransform t) { return t == ResponseTransform::Log1p ? std::expm1(v) : v; }

/// Feature schema check shared by the learners: same names, any order.
inline Eigen::VectorXd standardized_input(const Standardization& st, const std::vector<std::string>& train_names,
                                          const std::vector<std::string>& names, std::span<const double> values,
                                          bool& extrapolated) {
    if (names.size() != values.size()) throw Error(ErrorKind::DimensionMismatch, "feature names and values differ in length");
    std::map<std::string, double> by_name;
    for (std::size_t i = 0; i < names.size(); ++i) by_name[names[i]] = values[i];
    if (by_name.size() != train_names.size()) {
        throw Error(ErrorKind::FeatureMismatch, "expected " + std::to_string(train_names.size()) + " features, got " + std::to_string(by_name.size()));
    }
    for (const auto& n : train_names) {
        if (!by_name.count(n)) throw Error(ErrorKind::FeatureMismatch, "missing feature '" + n + "'");
    }
    Eigen::VectorXd z(static_cast<Eigen::Index>(st.names.size()));
    extrapolated = false;
    for (std::size_t j = 0; j < st.names.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double v = by_name.at(st.names[j]);
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "feature '" + st.names[j] + "' is not finite");
        z(jj) = (v - st.mean(jj)) / st.sd(jj);
        if (st.zmin.size() == z.size() && (z(jj) < st.zmin(jj) || z(jj) > st.zmax(jj))) extrapolated = true;
    }
    return z;
}

/// Wishart(df, V) draw via the Bartlett decomposition.
inline Eigen::MatrixXd wishart(double df, const Eigen::MatrixXd& V, Rng& rng) {
    const Eigen::Index p = V.rows();
    const Eigen::MatrixXd L = V.llt().matrixL();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    std::normal_distribution<double> z;
    for (Eigen::Index i = 0; i < p; ++i) {
        std::chi_squared_distribution<double> chi(df - static_cast<double>(i));
        A(i, i) = std::sqrt(chi(rng));
        for (Eigen::Index j = 0; j < i; ++j) A(i, j) = z(rng);
    }
    const Eigen::MatrixXd LA = L * A;
    return LA * LA.transpose();
}

inline Eigen::VectorXd normal_vector(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> z;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = z(rng);
    return v;
}

inline std::vector<double> column_quantiles(const Eigen::VectorXd& z, int k) {
    std::vector<double> v(z.data(), z.data() + z.size());
    std::vector<double> out;
    for (int i = 1; i <= k; ++i) out.push_back(stats::quantile(v, static_cast<double>(i) / (k + 1)));
    return out;
}

/// k-means with k-means++ seeding on the rows of Z.
inline Eigen::MatrixXd kmeans_centers(const Eigen::MatrixXd& Z, int k, Rng& rng, int iterations = 25) {
    const Eigen::Index n = Z.rows();
    Eigen::MatrixXd C(k, Z.cols());
    if (k == 0) return C;
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    C.row(0) = Z.row(first(rng));
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = (Z.row(i) - C.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        Eigen::Index pick = 0;
        if (d2.sum() > 0.0) {
            std::discrete_distribution<Eigen::Index> dd(d2.data(), d2.data() + n);
            pick = dd(rng);
        } else {
            pick = first(rng);
        }
        C.row(c) = Z.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (Z.row(i) - C.row(c)).squaredNorm());
    }
    std::vector<int> label(static_cast<std::size_t>(n), 0);
    for (int it = 0; it < iterations; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (Z.row(i) - C.row(c)).squaredNorm();
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (label[static_cast<std::size_t>(i)] != best || it == 0) changed = true;
            label[static_cast<std::size_t>(i)] = best;
        }
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, Z.cols());
        std::vector<int> count(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sum.row(label[static_cast<std::size_t>(i)]) += Z.row(i);
            ++count[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c)
            if (count[static_cast<std::size_t>(c)] > 0) C.row(c) = sum.row(c) / count[static_cast<std::size_t>(c)];
        if (!changed) break;
    }
    return C;
}

inline KnotSet initial_knots(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& T, const MCMCConfig& cfg, Rng& rng) {
    KnotSet k;
    const Eigen::Index d = Z.cols(), n = Z.rows();
    if (d > 0 && cfg.additive_features > 0 && (cfg.additive_knots > 0 || !cfg.additive_knot_counts.empty())) {
        const Eigen::VectorXd target = T.rowwise().mean();
        const double tm = target.mean();
        const double tn = std::sqrt((target.array() - tm).square().sum());
        std::vector<std::pair<double, int>> score;
        for (Eigen::Index f = 0; f < d; ++f) {
            const double c = tn > 0.0 ? std::abs(((Z.col(f).array()) * (target.array() - tm)).sum()) /
                                            (std::sqrt(Z.col(f).squaredNorm()) * tn)
                                      : 0.0;
            score.emplace_back(-c, static_cast<int>(f));
        }
        std::stable_sort(score.begin(), score.end(), [](auto& a, auto& b) { return a.first < b.first; });
        const int m = std::min<int>(cfg.additive_features, static_cast<int>(d));
        if (!cfg.additive_knot_counts.empty() && static_cast<int>(cfg.additive_knot_counts.size()) != m) {
            throw Error(ErrorKind::InvalidArgument, "additive_knot_counts must have one entry per additive feature");
        }
        for (int i = 0; i < m; ++i) k.additive_features.push_back(score[static_cast<std::size_t>(i)].second);
        std::sort(k.additive_features.begin(), k.additive_features.end());
        for (int i = 0; i < m; ++i) {
            const int count = cfg.additive_knot_counts.empty() ? cfg.additive_knots : cfg.additive_knot_counts[static_cast<std::size_t>(i)];
            if (count < 0) throw Error(ErrorKind::InvalidArgument, "knot counts must be non-negative");
            k.additive.push_back(column_quantiles(Z.col(k.additive_features[static_cast<std::size_t>(i)]), count));
        }
    }
    const int s = d > 0 ? static_cast<int>(std::min<Eigen::Index>(cfg.surface_knots, n)) : 0;
    k.surface = kmeans_centers(Z, s, rng);
    return k;
}

inline double split_rhat(const std::vector<double>& x) {
    const std::size_t half = x.size() / 2;
    if (half < 2) return 1.0;
    const std::vector<double> a(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<double> b(x.end() - static_cast<std::ptrdiff_t>(half), x.end());
    const double ma = stats::mean(a), mb = stats::mean(b);
    const double W = 0.5 * (stats::variance(a) + stats::variance(b));
    if (!(W > 0.0)) return 1.0;
    const double N = static_cast<double>(half);
    const double m = 0.5 * (ma + mb);
    const double Bn = N * ((ma - m) * (ma - m) + (mb - m) * (mb - m));
    return std::sqrt(((N - 1.0) / N * W + Bn / N) / W);
}

} // namespace detail

/// MCMC for the multivariate surface regression. Rows of F and Y are series; columns of F are
/// features named by `names`, columns of Y are responses named by `responses`.
inline SurfacePosterior fit(const Eigen::MatrixXd& F, const std::vector<std::string>& names, const Eigen::MatrixXd& Y,
                            const std::vector<std::string>& responses, const MCMCConfig& cfg) {
    if (F.rows() != Y.rows()) throw Error(ErrorKind::DimensionMismatch, "feature and response matrices differ in rows");
    if (static_cast<Eigen::Index>(responses.size()) != Y.cols()) throw Error(ErrorKind::DimensionMismatch, "response names do not match columns");
    if (Y.cols() < 1 || F.rows() < 2) throw Error(ErrorKind::EmptySet, "need at least two rows and one response");
    if (cfg.iterations <= cfg.burn_in || cfg.burn_in < 0 || cfg.thin < 1) {
        throw Error(ErrorKind::InvalidArgument, "need iterations > burn_in >= 0 and thin >= 1");
    }
    if (cfg.additive_knots < 0 || cfg.surface_knots < 0 || cfg.additive_features < 0) {
        throw Error(ErrorKind::InvalidArgument, "knot counts must be non-negative");
    }
    detail::check_finite(F, "feature matrix");
    detail::check_finite(Y, "response matrix");

    SurfacePosterior post;
    post.feature_names = names;
    post.response_names = responses;
    post.transform = cfg.transform;
    post.config = cfg;
    post.standardization = detail::fit_standardization(F, names);
    const Eigen::MatrixXd Z = detail::apply_standardization(post.standardization, F, names);
    post.standardization.zmin = Z.colwise().minCoeff().transpose();
    post.standardization.zmax = Z.colwise().maxCoeff().transpose();
    const Eigen::MatrixXd T = detail::forward_transform(Y, cfg.transform);

    Rng rng = make_rng(cfg.seed, std::string_view("ebmsr"));
    KnotSet knots = detail::initial_knots(Z, T, cfg, rng);
    DesignMatrix D = build_design(Z, knots);
    Eigen::MatrixXd& X = D.X;
    post.q0 = D.q0;
    post.qa = D.qa;
    post.qs = D.qs;
    const Eigen::Index n = X.rows(), q = X.cols(), p = T.cols();
    if (n <= q) post.warnings.push_back("design has " + std::to_string(q) + " columns for " + std::to_string(n) + " rows");

    // part of each design column: -1 intercept, 0 linear, 1 additive, 2 surface
    std::vector<int> part(static_cast<std::size_t>(q));
    for (Eigen::Index r = 0; r < q; ++r) part[static_cast<std::size_t>(r)] = r == 0 ? -1 : r < D.q0 ? 0 : r < D.q0 + D.qa ? 1 : 2;
    Eigen::MatrixXd lambda(3, p);
    for (int c = 0; c < 3; ++c) lambda.row(c).setConstant(cfg.lambda_init[static_cast<std::size_t>(c)]);
    auto prior_precision = [&](Eigen::Index r, Eigen::Index j) {
        const int c = part[static_cast<std::size_t>(r)];
        return c < 0 ? cfg.intercept_precision : lambda(c, j);
    };

    Eigen::MatrixXd XtX = X.transpose() * X;
    Eigen::MatrixXd XtT = X.transpose() * T;
    Eigen::MatrixXd B(q, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::MatrixXd P = XtX;
        for (Eigen::Index r = 0; r < q; ++r) P(r, r) += std::max(prior_precision(r, j), 1e-8);
        B.col(j) = P.ldlt().solve(XtT.col(j));
    }
    Eigen::MatrixXd E = T - X * B;
    Eigen::MatrixXd G = XtT - XtX * B;
    Eigen::MatrixXd Omega = Eigen::MatrixXd::Identity(p, p), Sigma = Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd Psi = cfg.sigma_scale * Eigen::MatrixXd::Identity(p, p);
    const double nu0 = static_cast<double>(p) + cfg.sigma_df_offset;

    // knot blocks: additive (feature slot, knot slot) then surface rows
    struct Block {
        Eigen::Index column;
        int type;  // 1 additive, 2 surface
        std::size_t slot, knot;
        double step;
        int batch_prop = 0, batch_acc = 0;
        long prop = 0, acc = 0;
        double lo = 0.0, hi = 0.0;
    };
    std::vector<Block> blocks;
    {
        Eigen::Index c = D.q0;
        for (std::size_t i = 0; i < knots.additive.size(); ++i) {
            const auto f = knots.additive_features[i];
            for (std::size_t j = 0; j < knots.additive[i].size(); ++j) {
                blocks.push_back({c++, 1, i, j, cfg.additive_step, 0, 0, 0, 0, post.standardization.zmin(f), post.standardization.zmax(f)});
            }
        }
        for (Eigen::Index s = 0; s < knots.surface.rows(); ++s) {
            blocks.push_back({c++, 2, static_cast<std::size_t>(s), 0, cfg.surface_step, 0, 0, 0, 0, 0.0, 0.0});
        }
    }
    const bool move_knots = cfg.update_knots && !blocks.empty();
    std::normal_distribution<double> stdnorm;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    int adapt_batch = 0;

    for (int it = 0; it < cfg.iterations; ++it) {
        // covariance
        {
            Eigen::MatrixXd S = Psi + E.transpose() * E;
            S = 0.5 * (S + S.transpose());
            const Eigen::MatrixXd V = S.llt().solve(Eigen::MatrixXd::Identity(p, p));
            Omega = detail::wishart(nu0 + static_cast<double>(n), 0.5 * (V + V.transpose()), rng);
            Sigma = Omega.llt().solve(Eigen::MatrixXd::Identity(p, p));
            Sigma = 0.5 * (Sigma + Sigma.transpose());
        }
        // coefficients, one response column at a time given the others
        for (Eigen::Index j = 0; j < p; ++j) {
            const double wjj = Omega(j, j);
            Eigen::VectorXd rhs = wjj * XtT.col(j);
            for (Eigen::Index k = 0; k < p; ++k)
                if (k != j) rhs += Omega(j, k) * G.col(k);
            Eigen::MatrixXd P = wjj * XtX;
            for (Eigen::Index r = 0; r < q; ++r) P(r, r) += prior_precision(r, j);
            Eigen::LLT<Eigen::MatrixXd> llt(P);
            if (llt.info() != Eigen::Success) {
                for (Eigen::Index r = 0; r < q; ++r) P(r, r) += 1e-8 * (1.0 + P(r, r));
                llt.compute(P);
                if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularDesign, "coefficient precision is not positive definite");
            }
            const Eigen::VectorXd mean = llt.solve(rhs);
            B.col(j) = mean + llt.matrixU().solve(detail::normal_vector(q, rng));
            E.col(j) = T.col(j) - X * B.col(j);
            G.col(j) = XtT.col(j) - XtX * B.col(j);
        }
        // shrinkage
        if (cfg.update_shrinkage) {
            const std::array<std::pair<Eigen::Index, Eigen::Index>, 3> range{
                std::pair<Eigen::Index, Eigen::Index>{1, D.q0 - 1}, {D.q0, D.qa}, {D.q0 + D.qa, D.qs}};
            for (int c = 0; c < 3; ++c) {
                const auto [start, len] = range[static_cast<std::size_t>(c)];
                if (len == 0) continue;
                for (Eigen::Index j = 0; j < p; ++j) {
                    const double ss = B.col(j).segment(start, len).squaredNorm();
                    std::gamma_distribution<double> g(cfg.lambda_shape[static_cast<std::size_t>(c)] + 0.5 * static_cast<double>(len),
                                                      1.0 / (cfg.lambda_rate[static_cast<std::size_t>(c)] + 0.5 * ss));
                    lambda(c, j) = std::max(g(rng), 1e-300);
                }
            }
        }
        // knot locations, each with its coefficient row integrated out
        if (move_knots) {
            for (auto& blk : blocks) {
                const Eigen::Index r = blk.column;
                const Eigen::VectorXd x_old = X.col(r);
                const Eigen::VectorXd b_old = B.row(r).transpose();
                Eigen::MatrixXd Lam = Eigen::MatrixXd::Zero(p, p);
                for (Eigen::Index j = 0; j < p; ++j) Lam(j, j) = prior_precision(r, j);
                auto collapsed = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& Rtx, Eigen::LLT<Eigen::MatrixXd>& llt,
                                     Eigen::VectorXd& u) {
                    llt.compute(x.squaredNorm() * Omega + Lam);
                    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
                    u = Omega * Rtx;
                    const Eigen::VectorXd w = llt.matrixL().solve(u);
                    double logdet = 0.0;
                    for (Eigen::Index j = 0; j < p; ++j) logdet += std::log(llt.matrixL()(j, j));
                    return -logdet + 0.5 * w.squaredNorm();
                };
                const Eigen::VectorXd Rtx_old = E.transpose() * x_old + x_old.squaredNorm() * b_old;
                Eigen::LLT<Eigen::MatrixXd> llt_old, llt_new;
                Eigen::VectorXd u_old, u_new;
                const double lt_old = collapsed(x_old, Rtx_old, llt_old, u_old);

                bool accepted = false;
                Eigen::VectorXd x_new;
                double new_knot = 0.0;
                Eigen::RowVectorXd new_surface;
                bool in_range = true;
                if (blk.type == 1) {
                    const double cur = knots.additive[blk.slot][blk.knot];
                    new_knot = cur + blk.step * stdnorm(rng);
                    in_range = new_knot >= blk.lo && new_knot <= blk.hi;
                    if (in_range) x_new = detail::additive_column(Z.col(knots.additive_features[blk.slot]), new_knot);
                } else {
                    new_surface = knots.surface.row(static_cast<Eigen::Index>(blk.slot));
                    for (Eigen::Index f = 0; f < new_surface.size(); ++f) {
                        new_surface(f) += blk.step * stdnorm(rng);
                        if (new_surface(f) < post.standardization.zmin(f) || new_surface(f) > post.standardization.zmax(f)) in_range = false;
                    }
                    if (in_range) x_new = detail::surface_column(Z, new_surface);
                }
                const double log_u = std::log(unif(rng));
                if (in_range && x_new.allFinite() && x_new.squaredNorm() > 0.0) {
                    const Eigen::VectorXd Rtx_new = E.transpose() * x_new + x_old.dot(x_new) * b_old;
                    const double lt_new = collapsed(x_new, Rtx_new, llt_new, u_new);
                    if (std::isfinite(lt_new) && log_u < lt_new - lt_old) accepted = true;
                }
                ++blk.batch_prop;
                if (it >= cfg.burn_in) ++blk.prop;
                Eigen::LLT<Eigen::MatrixXd>& llt = accepted ? llt_new : llt_old;
                const Eigen::VectorXd& u = accepted ? u_new : u_old;
                const Eigen::VectorXd& x = accepted ? x_new : x_old;
                if (accepted) {
                    ++blk.batch_acc;
                    if (it >= cfg.burn_in) ++blk.acc;
                    if (blk.type == 1) knots.additive[blk.slot][blk.knot] = new_knot;
                    else knots.surface.row(static_cast<Eigen::Index>(blk.slot)) = new_surface;
                }
                // coefficient row given the (possibly new) column
                Eigen::VectorXd b_new = llt.solve(u) + llt.matrixU().solve(detail::normal_vector(p, rng));
                E.noalias() += x_old * b_old.transpose();
                E.noalias() -= x * b_new.transpose();
                if (accepted) {
                    X.col(r) = x_new;
                    const Eigen::VectorXd col = X.transpose() * x_new;
                    XtX.col(r) = col;
                    XtX.row(r) = col.transpose();
                    XtT.row(r) = (T.transpose() * x_new).transpose();
                }
                B.row(r) = b_new.transpose();
            }
            G = XtT - XtX * B;
            if (it < cfg.burn_in && (it + 1) % 25 == 0) {
                ++adapt_batch;
                const double rate = 2.0 / std::sqrt(static_cast<double>(adapt_batch));
                for (auto& blk : blocks) {
                    const double acc = static_cast<double>(blk.batch_acc) / std::max(1, blk.batch_prop);
                    blk.step = std::clamp(blk.step * std::exp(rate * (acc - cfg.target_acceptance)), 1e-4, 10.0);
                    blk.batch_acc = blk.batch_prop = 0;
                }
            }
        }
        // log-likelihood of the current state
        double logdet_sigma = 0.0;
        {
            Eigen::LLT<Eigen::MatrixXd> ls(Sigma);
            for (Eigen::Index j = 0; j < p; ++j) logdet_sigma += 2.0 * std::log(ls.matrixL()(j, j));
        }
        const double ll = -0.5 * static_cast<double>(n) * (logdet_sigma + static_cast<double>(p) * log2pi) -
                          0.5 * (Omega * (E.transpose() * E)).trace();
        post.loglik_trace.push_back(ll);
        if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
            post.draws.push_back({B, Sigma, lambda, knots, ll});
        }
    }

    long ap = 0, aa = 0, sp = 0, sa = 0;
    for (const auto& blk : blocks) {
        if (blk.type == 1) {
            ap += blk.prop;
            aa += blk.acc;
        } else {
            sp += blk.prop;
            sa += blk.acc;
        }
    }
    post.additive_acceptance = ap > 0 ? static_cast<double>(aa) / static_cast<double>(ap) : 0.0;
    post.surface_acceptance = sp > 0 ? static_cast<double>(sa) / static_cast<double>(sp) : 0.0;
    std::vector<double> kept;
    for (const auto& d : post.draws) kept.push_back(d.loglik);
    post.rhat = detail::split_rhat(kept);
    if (post.rhat > 1.1) post.warnings.push_back("NonConvergence: split R-hat of the log-likelihood is " + std::to_string(post.rhat));
    return post;
}

inline SurfacePosterior fit(const FeatureMatrix& F, const ErrorMatrix& Y, const MCMCConfig& cfg) {
    if (F.series_ids != Y.series_ids) throw Error(ErrorKind::DimensionMismatch, "feature and error matrices list different series");
    std::vector<std::string> responses;
    for (auto m : Y.models) responses.emplace_back(fformpp::to_string(m));
    return fit(F.values, F.names, Y.values, responses, cfg);
}

struct Prediction {
    std::vector<double> values;
    bool extrapolated = false;
};

/// Posterior mean over draws of the back-transformed linear predictor.
inline Prediction predict(const SurfacePosterior& post, const std::vector<std::string>& names, std::span<const double> values) {
    if (post.draws.empty()) throw Error(ErrorKind::EmptySet, "posterior has no draws");
    Prediction out;
    const Eigen::VectorXd z = detail::standardized_input(post.standardization, post.feature_names, names, values, out.extrapolated);
    const auto p = static_cast<Eigen::Index>(post.p());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
    for (const auto& d : post.draws) {
        const Eigen::RowVectorXd lp = design_row(z, d.knots) * d.B;
        for (Eigen::Index j = 0; j < p; ++j) acc(j) += detail::back_transform(lp(j), post.transform);
    }
    acc /= static_cast<double>(post.draws.size());
    out.values.assign(acc.data(), acc.data() + acc.size());
    return out;
}

inline Prediction predict(const SurfacePosterior& post, const FeatureVector& f) { return predict(post, f.names, f.values); }

/// Linear-block draws mapped back to the raw feature scale: rows are the intercept then every
/// training feature (zero rows for dropped features).
inline std::vector<Eigen::MatrixXd> raw_linear_draws(const SurfacePosterior& post) {
    const auto pos = detail::schema_positions(post.standardization, post.feature_names);
    std::vector<Eigen::MatrixXd> out;
    for (const auto& d : post.draws) {
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(post.feature_names.size()) + 1, d.B.cols());
        R.row(0) = d.B.row(0);
        for (std::size_t j = 0; j < pos.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const Eigen::RowVectorXd b = d.B.row(jj + 1) / post.standardization.sd(jj);
            R.row(pos[j] + 1) = b;
            R.row(0) -= post.standardization.mean(jj) * b;
        }
        out.push_back(std::move(R));
    }
    return out;
}

/// Mode of a sample from a histogram with the given bin width.
inline double posterior_mode(const std::vector<double>& x, double bin_width) {
    if (x.empty()) throw Error(ErrorKind::EmptySet, "no draws");
    const double lo = *std::min_element(x.begin(), x.end());
    std::map<long, int> bins;
    for (double v : x) ++bins[static_cast<long>(std::floor((v - lo) / bin_width))];
    auto best = std::max_element(bins.begin(), bins.end(), [](auto& a, auto& b) { return a.second < b.second; });
    return lo + (static_cast<double>(best->first) + 0.5) * bin_width;
}

/// Independent least-squares fits per response on [1, standardized features].
struct MlrModel {
    std::vector<std::string> feature_names;
    Standardization standardization;
    std::vector<std::string> response_names;
    ResponseTransform transform = ResponseTransform::Log1p;
    Eigen::MatrixXd coef;  // q0 x p

    /// Coefficients on the raw feature scale, intercept first, one row per training feature.
    [[nodiscard]] Eigen::MatrixXd raw_coefficients() const {
        const auto pos = detail::schema_positions(standardization, feature_names);
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(feature_names.size()) + 1, coef.cols());
        R.row(0) = coef.row(0);
        for (std::size_t j = 0; j < pos.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const Eigen::RowVectorXd b = coef.row(jj + 1) / standardization.sd(jj);
            R.row(pos[j] + 1) = b;
            R.row(0) -= standardization.mean(jj) * b;
        }
        return R;
    }
};

inline MlrModel fit_mlr_baseline(const Eigen::MatrixXd& F, const std::vector<std::string>& names, const Eigen::MatrixXd& Y,
                                 const std::vector<std::string>& responses, ResponseTransform transform = ResponseTransform::Log1p) {
    if (F.rows() != Y.rows()) throw Error(ErrorKind::DimensionMismatch, "feature and response matrices differ in rows");
    if (static_cast<Eigen::Index>(responses.size()) != Y.cols()) throw Error(ErrorKind::DimensionMismatch, "response names do not match columns");
    detail::check_finite(F, "feature matrix");
    detail::check_finite(Y, "response matrix");
    MlrModel m;
    m.feature_names = names;
    m.response_names = responses;
    m.transform = transform;
    m.standardization = detail::fit_standardization(F, names);
    const Eigen::MatrixXd Z = detail::apply_standardization(m.standardization, F, names);
    m.standardization.zmin = Z.colwise().minCoeff().transpose();
    m.standardization.zmax = Z.colwise().maxCoeff().transpose();
    Eigen::MatrixXd X(Z.rows(), Z.cols() + 1);
    X.col(0).setOnes();
    X.rightCols(Z.cols()) = Z;
    if (X.rows() <= X.cols()) {
        throw Error(ErrorKind::InvalidArgument, "need more rows than regressors (" + std::to_string(X.rows()) + " <= " + std::to_string(X.cols()) + ")");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols()) throw Error(ErrorKind::SingularDesign, "feature design is rank deficient");
    m.coef = qr.solve(detail::forward_transform(Y, transform));
    return m;
}

inline MlrModel fit_mlr_baseline(const FeatureMatrix& F, const ErrorMatrix& Y, ResponseTransform transform = ResponseTransform::Log1p) {
    if (F.series_ids != Y.series_ids) throw Error(ErrorKind::DimensionMismatch, "feature and error matrices list different series");
    std::vector<std::string> responses;
    for (auto m : Y.models) responses.emplace_back(fformpp::to_string(m));
    return fit_mlr_baseline(F.values, F.names, Y.values, responses, transform);
}

inline Prediction predict(const MlrModel& m, const std::vector<std::string>& names, std::span<const double> values) {
    Prediction out;
    const Eigen::VectorXd z = detail::standardized_input(m.standardization, m.feature_names, names, values, out.extrapolated);
    Eigen::RowVectorXd x(z.size() + 1);
    x(0) = 1.0;
    x.tail(z.size()) = z.transpose();
    const Eigen::RowVectorXd lp = x * m.coef;
    for (Eigen::Index j = 0; j < lp.size(); ++j) out.values.push_back(detail::back_transform(lp(j), m.transform));
    return out;
}

inline Prediction predict(const MlrModel& m, const FeatureVector& f) { return predict(m, f.names, f.values); }

// ---- persistence ----

inline constexpr int kFormatVersion = 1;

namespace detail {

inline nlohmann::json matrix_json(const Eigen::MatrixXd& M) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(M.size()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
    return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", data}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto r = j.at("rows").get<Eigen::Index>(), c = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != r * c) throw Error(ErrorKind::Format, "matrix block has wrong size");
    Eigen::MatrixXd M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < c; ++k) M(i, k) = data[static_cast<std::size_t>(i * c + k)];
    return M;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline nlohmann::json standardization_json(const Standardization& st) {
    return {{"names", st.names}, {"mean", to_std(st.mean)}, {"sd", to_std(st.sd)},
            {"zmin", to_std(st.zmin)}, {"zmax", to_std(st.zmax)}, {"dropped", st.dropped}};
}

inline Standardization standardization_from_json(const nlohmann::json& j) {
    Standardization st;
    st.names = j.at("names").get<std::vector<std::string>>();
    st.mean = vector_from_json(j.at("mean"));
    st.sd = vector_from_json(j.at("sd"));
    st.zmin = vector_from_json(j.at("zmin"));
    st.zmax = vector_from_json(j.at("zmax"));
    st.dropped = j.at("dropped").get<std::vector<std::string>>();
    return st;
}

inline nlohmann::json knots_json(const KnotSet& k) {
    return {{"additive_features", k.additive_features}, {"additive", k.additive}, {"surface", matrix_json(k.surface)}};
}

inline KnotSet knots_from_json(const nlohmann::json& j) {
    KnotSet k;
    k.additive_features = j.at("additive_features").get<std::vector<int>>();
    k.additive = j.at("additive").get<std::vector<std::vector<double>>>();
    k.surface = matrix_from_json(j.at("surface"));
    return k;
}

inline nlohmann::json config_json(const MCMCConfig& c) {
    return {{"iterations", c.iterations}, {"burn_in", c.burn_in}, {"thin", c.thin},
            {"additive_features", c.additive_features}, {"additive_knots", c.additive_knots},
            {"additive_knot_counts", c.additive_knot_counts}, {"surface_knots", c.surface_knots},
            {"additive_step", c.additive_step}, {"surface_step", c.surface_step},
            {"target_acceptance", c.target_acceptance}, {"update_knots", c.update_knots},
            {"update_shrinkage", c.update_shrinkage}, {"lambda_shape", c.lambda_shape},
            {"lambda_rate", c.lambda_rate}, {"lambda_init", c.lambda_init},
            {"intercept_precision", c.intercept_precision}, {"sigma_df_offset", c.sigma_df_offset},
            {"sigma_scale", c.sigma_scale}, {"transform", to_string(c.transform)}, {"seed", c.seed}};
}

inline MCMCConfig config_from_json(const nlohmann::json& j) {
    MCMCConfig c;
    c.iterations = j.at("iterations").get<int>();
    c.burn_in = j.at("burn_in").get<int>();
    c.thin = j.at("thin").get<int>();
    c.additive_features = j.at("additive_features").get<int>();
    c.additive_knots = j.at("additive_knots").get<int>();
    c.additive_knot_counts = j.at("additive_knot_counts").get<std::vector<int>>();
    c.surface_knots = j.at("surface_knots").get<int>();
    c.additive_step = j.at("additive_step").get<double>();
    c.surface_step = j.at("surface_step").get<double>();
    c.target_acceptance = j.at("target_acceptance").get<double>();
    c.update_knots = j.at("update_knots").get<bool>();
    c.update_shrinkage = j.at("update_shrinkage").get<bool>();
    c.lambda_shape = j.at("lambda_shape").get<std::array<double, 3>>();
    c.lambda_rate = j.at("lambda_rate").get<std::array<double, 3>>();
    c.lambda_init = j.at("lambda_init").get<std::array<double, 3>>();
    c.intercept_precision = j.at("intercept_precision").get<double>();
    c.sigma_df_offset = j.at("sigma_df_offset").get<double>();
    c.sigma_scale = j.at("sigma_scale").get<double>();
    c.transform = parse_transform(j.at("transform").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

inline void check_header(const nlohmann::json& j, const std::string& kind) {
    if (!j.is_object() || !j.contains("format") || j.at("format") != "fformpp" || !j.contains("version")) {
        throw Error(ErrorKind::Format, "not an fformpp model file");
    }
    if (j.at("version") != kFormatVersion) throw Error(ErrorKind::UnknownVersion, "model format version " + j.at("version").dump());
    if (j.at("kind") != kind) throw Error(ErrorKind::Format, "expected a " + kind + " model, found " + j.at("kind").dump());
}

} // namespace detail

inline nlohmann::json to_json(const SurfacePosterior& post) {
    nlohmann::json draws = nlohmann::json::array();
    for (const auto& d : post.draws) {
        draws.push_back({{"B", detail::matrix_json(d.B)}, {"sigma", detail::matrix_json(d.sigma)},
                         {"lambda", detail::matrix_json(d.lambda)}, {"knots", detail::knots_json(d.knots)}, {"loglik", d.loglik}});
    }
    return {{"format", "fformpp"}, {"version", kFormatVersion}, {"kind", "ebmsr"},
            {"feature_names", post.feature_names}, {"standardization", detail::standardization_json(post.standardization)},
            {"response_names", post.response_names}, {"transform", to_string(post.transform)},
            {"config", detail::config_json(post.config)}, {"q0", post.q0}, {"qa", post.qa}, {"qs", post.qs},
            {"additive_acceptance", post.additive_acceptance}, {"surface_acceptance", post.surface_acceptance},
            {"rhat", post.rhat}, {"warnings", post.warnings}, {"draws", draws}};
}

inline SurfacePosterior posterior_from_json(const nlohmann::json& j) {
    detail::check_header(j, "ebmsr");
    try {
        SurfacePosterior post;
        post.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        post.standardization = detail::standardization_from_json(j.at("standardization"));
        post.response_names = j.at("response_names").get<std::vector<std::string>>();
        post.transform = parse_transform(j.at("transform").get<std::string>());
        post.config = detail::config_from_json(j.at("config"));
        post.q0 = j.at("q0").get<int>();
        post.qa = j.at("qa").get<int>();
        post.qs = j.at("qs").get<int>();
        post.additive_acceptance = j.at("additive_acceptance").get<double>();
        post.surface_acceptance = j.at("surface_acceptance").get<double>();
        post.rhat = j.at("rhat").get<double>();
        post.warnings = j.at("warnings").get<std::vector<std::string>>();
        for (const auto& d : j.at("draws")) {
            post.draws.push_back({detail::matrix_from_json(d.at("B")), detail::matrix_from_json(d.at("sigma")),
                                  detail::matrix_from_json(d.at("lambda")), detail::knots_from_json(d.at("knots")),
                                  d.at("loglik").get<double>()});
        }
        return post;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("bad posterior file: ") + e.what());
    }
}

inline nlohmann::json to_json(const MlrModel& m) {
    return {{"format", "fformpp"}, {"version", kFormatVersion}, {"kind", "mlr"},
            {"feature_names", m.feature_names}, {"standardization", detail::standardization_json(m.standardization)},
            {"response_names", m.response_names}, {"transform", to_string(m.transform)}, {"coef", detail::matrix_json(m.coef)}};
}

inline MlrModel mlr_from_json(const nlohmann::json& j) {
    detail::check_header(j, "mlr");
    try {
        MlrModel m;
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.standardization = detail::standardization_from_json(j.at("standardization"));
        m.response_names = j.at("response_names").get<std::vector<std::string>>();
        m.transform = parse_transform(j.at("transform").get<std::string>());
        m.coef = detail::matrix_from_json(j.at("coef"));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("bad model file: ") + e.what());
    }
}

} // namespace fformpp::ebmsr
