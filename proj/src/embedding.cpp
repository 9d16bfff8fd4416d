#include <cmath>
#include <limits>

#include "stdeep/error.hpp"
#include "stdeep/probes.hpp"
#include "stdeep/seed.hpp"

namespace stdeep::probe {

using nlohmann::json;

json TsneOptions::to_json() const {
    return json{{"perplexity", perplexity},
                {"iterations", iterations},
                {"seed", seed},
                {"learning_rate", learning_rate},
                {"early_exaggeration", early_exaggeration},
                {"exaggeration_iters", exaggeration_iters},
                {"initial_momentum", initial_momentum},
                {"final_momentum", final_momentum},
                {"method", "exact"}};
}

namespace {

// Row-conditional affinities with the Gaussian precision found by bisection
// so that each row's entropy equals log(perplexity).
std::vector<double> conditional_affinities(const std::vector<double>& d2, std::size_t n, double perplexity) {
    std::vector<double> p(n * n, 0.0);
    const double target = std::log(perplexity);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &d2[i * n];
        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        double* pi = &p[i * n];
        for (int it = 0; it < 100; ++it) {
            double min_d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) min_d = std::min(min_d, row[j]);
            double sum = 0.0, weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                // shifting by the nearest distance keeps exp() away from underflow
                pi[j] = std::exp(-beta * (row[j] - min_d));
                sum += pi[j];
                weighted += pi[j] * (row[j] - min_d);
            }
            const double entropy = std::log(sum) + beta * weighted / sum;
            for (std::size_t j = 0; j < n; ++j) pi[j] /= sum;
            const double diff = entropy - target;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0.0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
    }
    return p;
}

}  // namespace

std::vector<std::array<double, 2>> embed_2d(const std::vector<std::vector<double>>& rows, const TsneOptions& o) {
    const std::size_t n = rows.size();
    if (!(o.perplexity > 0.0)) throw Error(ErrorKind::InvalidArgument, "perplexity must be positive");
    if (static_cast<double>(n) < 3.0 * o.perplexity)
        throw Error(ErrorKind::TooFewRows, std::to_string(n) + " rows is fewer than 3 x perplexity");
    const std::size_t dim = rows[0].size();
    for (const auto& r : rows)
        if (r.size() != dim) throw Error(ErrorKind::ShapeMismatch, "feature rows differ in length");

    std::vector<double> d2(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double t = rows[i][k] - rows[j][k];
                s += t * t;
            }
            d2[i * n + j] = d2[j * n + i] = s;
        }
    const auto cond = conditional_affinities(d2, n, o.perplexity);
    std::vector<double> p(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            p[i * n + j] = std::max((cond[i * n + j] + cond[j * n + i]) / (2.0 * static_cast<double>(n)), 1e-12);

    Rng rng = make_rng(derive_seed(o.seed, "tsne"));
    std::normal_distribution<double> init(0.0, 1e-4);
    std::vector<std::array<double, 2>> y(n), step(n, {0.0, 0.0}), gains(n, {1.0, 1.0}), grad(n);
    for (auto& v : y) v = {init(rng), init(rng)};
    std::vector<double> num(n * n);

    for (int it = 0; it < o.iterations; ++it) {
        const double exaggeration = it < o.exaggeration_iters ? o.early_exaggeration : 1.0;
        const double momentum = it < o.exaggeration_iters ? o.initial_momentum : o.final_momentum;
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num[i * n + i] = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
                const double q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = num[j * n + i] = q;
                z += 2.0 * q;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            double gx = 0.0, gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double q = num[i * n + j];
                const double m = (exaggeration * p[i * n + j] - q / z) * q;
                gx += m * (y[i][0] - y[j][0]);
                gy += m * (y[i][1] - y[j][1]);
            }
            grad[i] = {4.0 * gx, 4.0 * gy};
        }
        double cx = 0.0, cy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (int a = 0; a < 2; ++a) {
                double& g = gains[i][static_cast<std::size_t>(a)];
                const double gr = grad[i][static_cast<std::size_t>(a)];
                double& s = step[i][static_cast<std::size_t>(a)];
                g = (gr > 0.0) != (s > 0.0) ? g + 0.2 : g * 0.8;
                g = std::max(g, 0.01);
                s = momentum * s - o.learning_rate * g * gr;
                y[i][static_cast<std::size_t>(a)] += s;
            }
            cx += y[i][0];
            cy += y[i][1];
        }
        cx /= static_cast<double>(n);
        cy /= static_cast<double>(n);
        for (auto& v : y) {
            v[0] -= cx;
            v[1] -= cy;
        }
    }
    return y;
}

}  // namespace stdeep::probe
