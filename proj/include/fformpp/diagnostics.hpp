#pragma once

#include "fformpp/ebmsr.hpp"
#include "fformpp/error.hpp"
#include "fformpp/pool.hpp"
#include "fformpp/series_io.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace fformpp::diagnostics {

struct Projection2D {
    std::vector<std::string> names;    // features used
    std::vector<std::string> dropped;  // zero-variance reference columns
    Eigen::VectorXd mean, sd;
    Eigen::MatrixXd loadings;          // 2 x features
    std::array<double, 2> explained{};
    Eigen::MatrixXd reference_coords, projected_coords;
    std::size_t out_of_hull = 0;       // new points outside the reference bounding box
};

/// PCA on the z-scaled reference features; new rows are projected with reference statistics.
inline Projection2D pca_project(const Eigen::MatrixXd& ref, const std::vector<std::string>& names, const Eigen::MatrixXd& fresh,
                                const std::vector<std::string>& fresh_names) {
    if (ref.rows() < 3) throw Error(ErrorKind::InvalidArgument, "PCA needs at least three reference rows");
    if (static_cast<Eigen::Index>(names.size()) != ref.cols() || static_cast<Eigen::Index>(fresh_names.size()) != fresh.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "feature names do not match columns");
    }
    if (names != fresh_names) throw Error(ErrorKind::FeatureMismatch, "reference and new feature schemas differ");
    Projection2D p;
    std::vector<Eigen::Index> keep;
    std::vector<double> mu, sd;
    for (Eigen::Index j = 0; j < ref.cols(); ++j) {
        const double m = ref.col(j).mean();
        const double s = std::sqrt((ref.col(j).array() - m).square().sum() / static_cast<double>(ref.rows() - 1));
        if (!(s > 1e-12 * std::max(1.0, std::abs(m)))) {
            p.dropped.push_back(names[static_cast<std::size_t>(j)]);
            continue;
        }
        keep.push_back(j);
        p.names.push_back(names[static_cast<std::size_t>(j)]);
        mu.push_back(m);
        sd.push_back(s);
    }
    const auto d = static_cast<Eigen::Index>(keep.size());
    if (d < 2) throw Error(ErrorKind::InvalidArgument, "PCA needs two non-constant features");
    p.mean = Eigen::Map<Eigen::VectorXd>(mu.data(), d);
    p.sd = Eigen::Map<Eigen::VectorXd>(sd.data(), d);
    auto scale = [&](const Eigen::MatrixXd& M) {
        Eigen::MatrixXd Z(M.rows(), d);
        for (Eigen::Index j = 0; j < d; ++j) Z.col(j) = (M.col(keep[static_cast<std::size_t>(j)]).array() - p.mean(j)) / p.sd(j);
        return Z;
    };
    const Eigen::MatrixXd Z = scale(ref);
    const Eigen::MatrixXd C = Z.transpose() * Z / static_cast<double>(Z.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double total = ev.sum();
    p.loadings.resize(2, d);
    for (int k = 0; k < 2; ++k) {
        Eigen::VectorXd v = es.eigenvectors().col(d - 1 - k);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        p.loadings.row(k) = v.transpose();
        p.explained[static_cast<std::size_t>(k)] = total > 0 ? std::max(0.0, ev(d - 1 - k)) / total : 0.0;
    }
    p.reference_coords = Z * p.loadings.transpose();
    p.projected_coords = fresh.rows() > 0 ? Eigen::MatrixXd(scale(fresh) * p.loadings.transpose()) : Eigen::MatrixXd(0, 2);
    const Eigen::RowVector2d lo = p.reference_coords.colwise().minCoeff(), hi = p.reference_coords.colwise().maxCoeff();
    for (Eigen::Index i = 0; i < p.projected_coords.rows(); ++i) {
        const auto r = p.projected_coords.row(i);
        if (r(0) < lo(0) || r(0) > hi(0) || r(1) < lo(1) || r(1) > hi(1)) ++p.out_of_hull;
    }
    return p;
}

inline Projection2D pca_project(const FeatureMatrix& ref, const FeatureMatrix& fresh) {
    return pca_project(ref.values, ref.names, fresh.values, fresh.names);
}

/// Asymmetric binary distance: disagreements over positions where at least one entry is set.
inline double binary_distance(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "binary vectors differ in length");
    int either = 0, differ = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool x = a[i] != 0, y = b[i] != 0;
        if (x || y) ++either;
        if (x != y) ++differ;
    }
    return either == 0 ? 0.0 : static_cast<double>(differ) / either;
}

/// Which models each series' combination used.
struct SelectionMatrix {
    std::vector<std::string> series_ids;
    std::vector<ModelId> models;
    std::vector<std::vector<int>> rows;

    static SelectionMatrix from_contributors(const std::vector<std::string>& ids, const std::vector<ModelId>& models,
                                             const std::vector<std::vector<ModelId>>& used) {
        if (ids.size() != used.size()) throw Error(ErrorKind::DimensionMismatch, "one contributor list per series is required");
        SelectionMatrix s;
        s.series_ids = ids;
        s.models = models;
        for (const auto& u : used) {
            std::vector<int> row(models.size(), 0);
            for (auto m : u) {
                const auto it = std::find(models.begin(), models.end(), m);
                if (it == models.end()) throw Error(ErrorKind::ModelUnavailable, std::string(to_string(m)));
                row[static_cast<std::size_t>(it - models.begin())] = 1;
            }
            s.rows.push_back(std::move(row));
        }
        return s;
    }
};

struct Merge {
    int a, b;  // cluster ids: < n are observations, n + i is the cluster formed at merge i
    double height;
    int size;
};

struct Dendrogram {
    int n = 0;
    std::vector<Merge> merges;  // non-decreasing heights
};

inline std::size_t condensed_index(int n, int i, int j) {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(2 * n - i - 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

/// Ward agglomeration (Lance-Williams Ward.D update) on a condensed upper-triangle dissimilarity
/// vector, using the nearest-neighbour chain.
inline Dendrogram ward_linkage(int n, std::vector<double> D) {
    Dendrogram dg;
    dg.n = n;
    if (n < 2) return dg;
    if (D.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2) {
        throw Error(ErrorKind::DimensionMismatch, "condensed distance vector has the wrong length");
    }
    auto idx = [n](int i, int j) { return condensed_index(n, i, j); };

    std::vector<int> size(static_cast<std::size_t>(n), 1);
    std::vector<bool> active(static_cast<std::size_t>(n), true);
    struct Raw {
        int a, b;
        double h;
    };
    std::vector<Raw> raw;
    std::vector<int> chain;
    int remaining = n;
    while (remaining > 1) {
        if (chain.empty()) {
            for (int i = 0; i < n; ++i)
                if (active[static_cast<std::size_t>(i)]) {
                    chain.push_back(i);
                    break;
                }
        }
        while (true) {
            const int a = chain.back();
            const int prev = chain.size() > 1 ? chain[chain.size() - 2] : -1;
            int best = prev;
            double bd = prev >= 0 ? D[idx(a, prev)] : std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                if (j == a || !active[static_cast<std::size_t>(j)]) continue;
                const double dj = D[idx(a, j)];
                if (dj < bd || (dj == bd && best != prev && j < best)) {
                    bd = dj;
                    best = j;
                }
            }
            if (best == prev) {
                chain.pop_back();
                chain.pop_back();
                const int i = std::min(a, prev), j = std::max(a, prev);
                raw.push_back({i, j, bd});
                const double ni = size[static_cast<std::size_t>(i)], nj = size[static_cast<std::size_t>(j)];
                for (int k = 0; k < n; ++k) {
                    if (k == i || k == j || !active[static_cast<std::size_t>(k)]) continue;
                    const double nk = size[static_cast<std::size_t>(k)];
                    D[idx(i, k)] = ((ni + nk) * D[idx(i, k)] + (nj + nk) * D[idx(j, k)] - nk * bd) / (ni + nj + nk);
                }
                size[static_cast<std::size_t>(i)] += size[static_cast<std::size_t>(j)];
                active[static_cast<std::size_t>(j)] = false;
                --remaining;
                break;
            }
            chain.push_back(best);
        }
    }
    // order merges by height and relabel with union-find
    std::stable_sort(raw.begin(), raw.end(), [](const Raw& x, const Raw& y) { return x.h < y.h; });
    std::vector<int> parent(static_cast<std::size_t>(n)), label(static_cast<std::size_t>(n)), csize(static_cast<std::size_t>(n), 1);
    std::iota(parent.begin(), parent.end(), 0);
    std::iota(label.begin(), label.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[static_cast<std::size_t>(x)] == x ? x : parent[static_cast<std::size_t>(x)] = find(parent[static_cast<std::size_t>(x)]); };
    for (std::size_t m = 0; m < raw.size(); ++m) {
        const int ra = find(raw[m].a), rb = find(raw[m].b);
        int la = label[static_cast<std::size_t>(ra)], lb = label[static_cast<std::size_t>(rb)];
        if (la > lb) std::swap(la, lb);
        const int sz = csize[static_cast<std::size_t>(ra)] + csize[static_cast<std::size_t>(rb)];
        dg.merges.push_back({la, lb, raw[m].h, sz});
        parent[static_cast<std::size_t>(rb)] = ra;
        csize[static_cast<std::size_t>(ra)] = sz;
        label[static_cast<std::size_t>(ra)] = n + static_cast<int>(m);
    }
    return dg;
}

inline Dendrogram ward_linkage(const std::vector<std::vector<int>>& rows) {
    const int n = static_cast<int>(rows.size());
    std::vector<double> D(n < 2 ? 0 : static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) D[condensed_index(n, i, j)] = binary_distance(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
    return ward_linkage(n, std::move(D));
}

/// Labels 1..k after applying the first n-k merges, numbered by first appearance.
inline std::vector<int> cut_tree(const Dendrogram& dg, int k) {
    const int n = dg.n;
    if (k < 1 || k > std::max(n, 1)) throw Error(ErrorKind::InvalidArgument, "cluster count must lie in [1, n]");
    std::vector<int> parent(static_cast<std::size_t>(2 * n));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[static_cast<std::size_t>(x)] == x ? x : parent[static_cast<std::size_t>(x)] = find(parent[static_cast<std::size_t>(x)]); };
    for (int m = 0; m < n - k; ++m) {
        const auto& mg = dg.merges[static_cast<std::size_t>(m)];
        parent[static_cast<std::size_t>(find(mg.a))] = n + m;
        parent[static_cast<std::size_t>(find(mg.b))] = n + m;
    }
    std::map<int, int> number;
    std::vector<int> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int r = find(i);
        auto it = number.find(r);
        if (it == number.end()) it = number.emplace(r, static_cast<int>(number.size()) + 1).first;
        out[static_cast<std::size_t>(i)] = it->second;
    }
    return out;
}

/// Percentage of series in each cluster whose combination used each model.
struct ClusterTable {
    std::vector<ModelId> models;
    std::vector<int> labels;
    std::vector<std::size_t> sizes;       // per cluster
    Eigen::MatrixXd percent;              // clusters x models
};

inline ClusterTable cluster_combinations(const SelectionMatrix& s, int clusters = 3) {
    ClusterTable t;
    t.models = s.models;
    const auto dg = ward_linkage(s.rows);
    t.labels = cut_tree(dg, clusters);
    t.sizes.assign(static_cast<std::size_t>(clusters), 0);
    t.percent = Eigen::MatrixXd::Zero(clusters, static_cast<Eigen::Index>(s.models.size()));
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const int c = t.labels[i] - 1;
        ++t.sizes[static_cast<std::size_t>(c)];
        for (std::size_t j = 0; j < s.rows[i].size(); ++j) t.percent(c, static_cast<Eigen::Index>(j)) += s.rows[i][j] != 0 ? 1.0 : 0.0;
    }
    for (int c = 0; c < clusters; ++c)
        if (t.sizes[static_cast<std::size_t>(c)] > 0) t.percent.row(c) *= 100.0 / static_cast<double>(t.sizes[static_cast<std::size_t>(c)]);
    return t;
}

inline void write_cluster_table_csv(std::ostream& out, const ClusterTable& t) {
    out << "cluster,n";
    for (auto m : t.models) out << ',' << to_string(m);
    out << '\n';
    for (Eigen::Index c = 0; c < t.percent.rows(); ++c) {
        out << c + 1 << ',' << t.sizes[static_cast<std::size_t>(c)];
        for (Eigen::Index j = 0; j < t.percent.cols(); ++j) out << ',' << format_double(t.percent(c, j));
        out << '\n';
    }
}

inline void write_cluster_labels_csv(std::ostream& out, const SelectionMatrix& s, const ClusterTable& t) {
    out << "id,cluster\n";
    for (std::size_t i = 0; i < s.series_ids.size(); ++i) out << s.series_ids[i] << ',' << t.labels[i] << '\n';
}

struct CoefficientTable {
    std::vector<std::string> terms;
    std::vector<std::string> blocks;  // linear, additive, surface
    std::vector<std::string> columns;
    Eigen::MatrixXd values;
};

/// Posterior-mean coefficients. Columns are ordered best first by the predicted error at the
/// centre of the training features unless an explicit order is given.
inline CoefficientTable export_coefficient_table(const ebmsr::SurfacePosterior& post, std::vector<std::string> order = {}) {
    const Eigen::MatrixXd mean = post.coefficient_mean();
    if (order.empty()) {
        const Eigen::VectorXd centre = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(post.standardization.names.size()));
        Eigen::VectorXd pred = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(post.p()));
        for (const auto& d : post.draws) pred += (ebmsr::design_row(centre, d.knots) * d.B).transpose();
        std::vector<std::size_t> idx(post.p());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return pred(static_cast<Eigen::Index>(a)) < pred(static_cast<Eigen::Index>(b)); });
        for (auto i : idx) order.push_back(post.response_names[i]);
    }
    CoefficientTable t;
    for (const auto& [term, block] : post.coefficient_labels()) {
        t.terms.push_back(term);
        t.blocks.push_back(block);
    }
    t.columns = order;
    t.values.resize(mean.rows(), static_cast<Eigen::Index>(order.size()));
    for (std::size_t c = 0; c < order.size(); ++c) {
        const auto it = std::find(post.response_names.begin(), post.response_names.end(), order[c]);
        if (it == post.response_names.end()) throw Error(ErrorKind::InvalidArgument, "unknown model column '" + order[c] + "'");
        t.values.col(static_cast<Eigen::Index>(c)) = mean.col(it - post.response_names.begin());
    }
    return t;
}

inline void write_coefficient_table_csv(std::ostream& out, const CoefficientTable& t) {
    out << "term,block";
    for (const auto& c : t.columns) out << ',' << c;
    out << '\n';
    for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
        out << t.terms[static_cast<std::size_t>(i)] << ',' << t.blocks[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < t.values.cols(); ++j) out << ',' << format_double(t.values(i, j));
        out << '\n';
    }
}

inline void write_projection_csv(std::ostream& out, const Projection2D& p, const std::vector<std::string>& ref_ids,
                                 const std::vector<std::string>& new_ids) {
    out << "id,set,pc1,pc2\n";
    for (Eigen::Index i = 0; i < p.reference_coords.rows(); ++i) {
        out << ref_ids[static_cast<std::size_t>(i)] << ",reference," << format_double(p.reference_coords(i, 0)) << ','
            << format_double(p.reference_coords(i, 1)) << '\n';
    }
    for (Eigen::Index i = 0; i < p.projected_coords.rows(); ++i) {
        out << new_ids[static_cast<std::size_t>(i)] << ",new," << format_double(p.projected_coords(i, 0)) << ','
            << format_double(p.projected_coords(i, 1)) << '\n';
    }
}

inline void write_loadings_csv(std::ostream& out, const Projection2D& p) {
    out << "feature,pc1,pc2\n";
    for (std::size_t j = 0; j < p.names.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out << p.names[j] << ',' << format_double(p.loadings(0, jj)) << ',' << format_double(p.loadings(1, jj)) << '\n';
    }
}

/// Describes the files written by one diagnostics run.
struct Manifest {
    struct Entry {
        std::string file, what;
        std::vector<std::string> columns;
    };
    std::string command;
    std::vector<Entry> outputs;
    nlohmann::json provenance = nlohmann::json::object();
    std::vector<std::string> notes;

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& e : outputs) outs.push_back({{"file", e.file}, {"what", e.what}, {"columns", e.columns}});
        return {{"command", command}, {"outputs", outs}, {"provenance", provenance}, {"notes", notes}};
    }
};

} // namespace fformpp::diagnostics
