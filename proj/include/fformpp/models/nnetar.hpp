#pragma once

#include "fformpp/decompose.hpp"
#include "fformpp/error.hpp"
#include "fformpp/rng.hpp"
#include "fformpp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

namespace fformpp::models {

struct NnetarOptions {
    int repeats = 20;
    int epochs = 100;
    int max_p = 8;
};

namespace detail {

/// One hidden layer of logistic units with a linear output, trained by iRprop-.
class TinyNet {
public:
    TinyNet(int inputs, int hidden, Rng& rng) : in_(inputs), hid_(hidden) {
        std::uniform_real_distribution<double> u(-0.7, 0.7);
        w_.resize(static_cast<std::size_t>((inputs + 1) * hidden + hidden + 1));
        for (auto& v : w_) v = u(rng);
    }

    [[nodiscard]] double predict(const double* x) const {
        const double* w = w_.data();
        double out = w_[static_cast<std::size_t>((in_ + 1) * hid_ + hid_)];
        for (int j = 0; j < hid_; ++j) {
            const double* wj = w + j * (in_ + 1);
            double a = wj[in_];
            for (int i = 0; i < in_; ++i) a += wj[i] * x[i];
            out += w_[static_cast<std::size_t>((in_ + 1) * hid_ + j)] * sigmoid(a);
        }
        return out;
    }

    void train(const std::vector<double>& X, const std::vector<double>& y, int epochs) {
        const std::size_t nw = w_.size();
        std::vector<double> grad(nw), prev(nw, 0.0), delta(nw, 0.05), hidden(static_cast<std::size_t>(hid_));
        const std::size_t n = y.size();
        const std::size_t out_off = static_cast<std::size_t>((in_ + 1) * hid_);
        for (int ep = 0; ep < epochs; ++ep) {
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t s = 0; s < n; ++s) {
                const double* x = &X[s * static_cast<std::size_t>(in_)];
                double out = w_[out_off + static_cast<std::size_t>(hid_)];
                for (int j = 0; j < hid_; ++j) {
                    const double* wj = &w_[static_cast<std::size_t>(j * (in_ + 1))];
                    double a = wj[in_];
                    for (int i = 0; i < in_; ++i) a += wj[i] * x[i];
                    hidden[j] = sigmoid(a);
                    out += w_[out_off + j] * hidden[j];
                }
                const double err = out - y[s];
                grad[out_off + static_cast<std::size_t>(hid_)] += err;
                for (int j = 0; j < hid_; ++j) {
                    grad[out_off + j] += err * hidden[j];
                    const double back = err * w_[out_off + j] * hidden[j] * (1.0 - hidden[j]);
                    double* gj = &grad[static_cast<std::size_t>(j * (in_ + 1))];
                    for (int i = 0; i < in_; ++i) gj[i] += back * x[i];
                    gj[in_] += back;
                }
            }
            for (std::size_t k = 0; k < nw; ++k) {
                const double sgn = grad[k] * prev[k];
                if (sgn > 0) {
                    delta[k] = std::min(delta[k] * 1.2, 1.0);
                } else if (sgn < 0) {
                    delta[k] = std::max(delta[k] * 0.5, 1e-6);
                    grad[k] = 0.0;
                }
                if (grad[k] > 0) w_[k] -= delta[k];
                else if (grad[k] < 0) w_[k] += delta[k];
                prev[k] = grad[k];
            }
        }
    }

private:
    static double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

    int in_, hid_;
    std::vector<double> w_;
};

} // namespace detail

/// Neural network autoregression: p non-seasonal lags (AICc-chosen linear AR order on the
/// seasonally adjusted series) plus one seasonal lag, ceil((p+1)/2) hidden units, and the
/// average of `repeats` randomly initialised networks.
inline std::vector<double> nnetar_forecast(std::span<const double> y, int m, int h, std::uint64_t seed,
                                           const NnetarOptions& opt = {}) {
    const std::size_t n = y.size();
    if (n < 6) throw Error(ErrorKind::TooShort, "neural network needs at least six observations");
    const double mu = stats::mean(y);
    double s = stats::sd(y);
    if (!(s > 0.0)) return std::vector<double>(h, mu);
    std::vector<double> z(n);
    for (std::size_t t = 0; t < n; ++t) z[t] = (y[t] - mu) / s;

    std::vector<double> sa = z;
    const bool seasonal = m > 1 && n >= 2 * static_cast<std::size_t>(m) + 2;
    if (seasonal) sa = decompose(z, {m}).seasonally_adjusted();
    const int pmax = std::max(1, std::min<int>(opt.max_p, static_cast<int>(n / 4)));
    const auto lev = stats::durbin_levinson(stats::acf(sa, pmax), pmax);
    int p = 1;
    double best = std::numeric_limits<double>::infinity();
    const double nn = static_cast<double>(n);
    for (int k = 0; k <= pmax; ++k) {
        const double v = std::max(lev.innovation_variance[k], 1e-12);
        const double kk = k + 1.0;
        if (nn - kk - 1.0 <= 0.0) break;
        const double aicc = nn * std::log(v) + 2.0 * kk + 2.0 * kk * (kk + 1.0) / (nn - kk - 1.0);
        if (aicc < best) {
            best = aicc;
            p = std::max(k, 1);
        }
    }
    std::vector<int> lags;
    for (int k = 1; k <= p; ++k) lags.push_back(k);
    if (seasonal && m > p) lags.push_back(m);
    const int maxlag = lags.back();
    if (n <= static_cast<std::size_t>(maxlag) + 3) {
        throw Error(ErrorKind::TooShort, "neural network has too few training patterns");
    }
    const int inputs = static_cast<int>(lags.size());
    const int hidden = (p + 2) / 2;

    std::vector<double> X, target;
    for (std::size_t t = static_cast<std::size_t>(maxlag); t < n; ++t) {
        for (int lag : lags) X.push_back(z[t - lag]);
        target.push_back(z[t]);
    }

    Rng rng(seed);
    std::vector<detail::TinyNet> nets;
    nets.reserve(static_cast<std::size_t>(opt.repeats));
    for (int r = 0; r < opt.repeats; ++r) {
        nets.emplace_back(inputs, hidden, rng);
        nets.back().train(X, target, opt.epochs);
    }

    std::vector<double> path = z;
    std::vector<double> x(static_cast<std::size_t>(inputs));
    std::vector<double> out(h);
    for (int i = 0; i < h; ++i) {
        const std::size_t t = path.size();
        for (int j = 0; j < inputs; ++j) x[j] = path[t - lags[j]];
        double avg = 0.0;
        for (const auto& net : nets) avg += net.predict(x.data());
        avg /= static_cast<double>(nets.size());
        path.push_back(avg);
        out[i] = avg * s + mu;
    }
    return out;
}

} // namespace fformpp::models
