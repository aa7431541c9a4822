#include "sdmscr/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sdmscr/random.hpp"

namespace sdmscr {

namespace {

constexpr double kNormFloor = 1e-12;

// Rows scaled to unit length; zero rows stay zero and act as neutral
// (similarity 0, no gradient).
struct UnitRows {
    Matrix unit;
    std::vector<double> norm;

    explicit UnitRows(const Matrix& m) : unit(m), norm(m.rows()) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            auto r = unit.row(i);
            norm[i] = norm2(r);
            if (norm[i] == 0.0) continue;
            for (double& x : r) x /= norm[i];
        }
    }

    // Maps dL/dunit to dL/dm row by row: (g − (g·û)û)/‖m‖.
    Matrix pull_back(const Matrix& g) const {
        Matrix out(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
            if (norm[i] == 0.0) continue;
            auto u = unit.row(i);
            auto gi = g.row(i);
            auto o = out.row(i);
            const double proj = dot(gi, u);
            for (std::size_t c = 0; c < gi.size(); ++c) o[c] = (gi[c] - proj * u[c]) / norm[i];
        }
        return out;
    }
};

// Similarity of two unit rows. Bitwise-equal nonzero rows are exactly 1;
// otherwise the dot product, clamped against rounding.
double unit_sim(std::span<const double> a, std::span<const double> b) {
    const bool same = std::equal(a.begin(), a.end(), b.begin());
    if (same && std::any_of(a.begin(), a.end(), [](double x) { return x != 0.0; })) return 1.0;
    return std::clamp(dot(a, b), -1.0, 1.0);
}

struct NegativeSet {
    std::size_t input;  // index into the input list
};

// InfoNCE over anchors rows of inputs[anchor], positives rows of
// inputs[positive], and every row k != i of each negative input. Gradients
// are accumulated w.r.t. the unit rows of each input. Returns the mean loss.
double anchored_infonce(const std::vector<const UnitRows*>& inputs, std::size_t anchor,
                        std::size_t positive, const std::vector<NegativeSet>& negatives, double tau,
                        double scale, std::vector<Matrix>& d_unit, const NegativeSampling& sampling) {
    const Matrix& a = inputs[anchor]->unit;
    const Matrix& p = inputs[positive]->unit;
    const std::size_t n = a.rows();
    const std::size_t o = a.cols();

    const bool subsample =
        sampling.max_negatives > 0 && n > sampling.min_nodes && sampling.max_negatives < n - 1;
    Rng rng = make_rng(sampling.seed, 0xC0FFEE);
    std::vector<std::size_t> others;
    std::vector<std::size_t> picked;

    std::vector<double> logits;
    std::vector<std::pair<std::size_t, std::size_t>> owners;  // (neg input, row)
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto ai = a.row(i);
        logits.clear();
        owners.clear();
        logits.push_back(unit_sim(ai, p.row(i)) / tau);

        std::span<const std::size_t> rows;
        if (subsample) {
            others.clear();
            for (std::size_t k = 0; k < n; ++k) {
                if (k != i) others.push_back(k);
            }
            picked.clear();
            std::sample(others.begin(), others.end(), std::back_inserter(picked),
                        static_cast<std::ptrdiff_t>(sampling.max_negatives), rng);
            rows = picked;
        }
        for (std::size_t m = 0; m < negatives.size(); ++m) {
            const Matrix& q = inputs[negatives[m].input]->unit;
            if (subsample) {
                for (std::size_t k : rows) {
                    logits.push_back(unit_sim(ai, q.row(k)) / tau);
                    owners.emplace_back(m, k);
                }
            } else {
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == i) continue;
                    logits.push_back(unit_sim(ai, q.row(k)) / tau);
                    owners.emplace_back(m, k);
                }
            }
        }

        const double mx = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double& l : logits) {
            l = std::exp(l - mx);
            sum += l;
        }
        // logits now hold unnormalized softmax weights.
        total += (mx + std::log(sum)) - unit_sim(ai, p.row(i)) / tau;

        const double coef = scale / tau;
        auto da = d_unit[anchor].row(i);
        {
            const double w = coef * (logits[0] / sum - 1.0);
            auto pi = p.row(i);
            auto dp = d_unit[positive].row(i);
            for (std::size_t c = 0; c < o; ++c) {
                da[c] += w * pi[c];
                dp[c] += w * ai[c];
            }
        }
        for (std::size_t t = 0; t < owners.size(); ++t) {
            const auto [m, k] = owners[t];
            const std::size_t in = negatives[m].input;
            const double w = coef * logits[t + 1] / sum;
            auto qk = inputs[in]->unit.row(k);
            auto dq = d_unit[in].row(k);
            for (std::size_t c = 0; c < o; ++c) {
                da[c] += w * qk[c];
                dq[c] += w * ai[c];
            }
        }
    }
    return total * scale;
}

}  // namespace

double cosine_sim(std::span<const double> a, std::span<const double> b) {
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / std::max(na * nb, kNormFloor);
}

SdmLoss sdm_loss(const Matrix& z_ori, const Matrix& z_rel, const Matrix& z_irr, double tau,
                 const NegativeSampling& sampling) {
    require_same_shape(z_ori, z_rel, "sdm_loss");
    require_same_shape(z_ori, z_irr, "sdm_loss");
    if (z_ori.rows() < 2) throw std::invalid_argument("sdm_loss needs at least 2 nodes");
    if (!(tau > 0.0)) throw std::invalid_argument("sdm_loss: temperature must be > 0");

    const UnitRows ori(z_ori), rel(z_rel), irr(z_irr);
    std::vector<Matrix> d_unit(3, Matrix(z_ori.rows(), z_ori.cols()));
    const double n = static_cast<double>(z_ori.rows());
    SdmLoss out;
    out.loss = anchored_infonce({&ori, &rel, &irr}, 0, 1, {{2}}, tau, 1.0 / n, d_unit, sampling);
    out.d_ori = ori.pull_back(d_unit[0]);
    out.d_rel = rel.pull_back(d_unit[1]);
    out.d_irr = irr.pull_back(d_unit[2]);
    return out;
}

ScrLoss scr_loss(const Matrix& z_rel, const TextAttributedGraph& g) {
    if (z_rel.rows() != g.num_nodes()) throw ShapeError("scr_loss: rows != node count");
    const UnitRows rel(z_rel);
    const std::size_t n = z_rel.rows();
    Matrix d_unit(n, z_rel.cols());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto nbrs = g.neighbors(static_cast<NodeId>(i));
        if (nbrs.empty()) continue;
        const double w = 1.0 / (static_cast<double>(n) * static_cast<double>(nbrs.size()));
        auto ui = rel.unit.row(i);
        auto di = d_unit.row(i);
        for (NodeId j : nbrs) {
            auto uj = rel.unit.row(j);
            total += w * (1.0 - unit_sim(ui, uj));
            auto dj = d_unit.row(j);
            for (std::size_t c = 0; c < ui.size(); ++c) {
                di[c] -= w * uj[c];
                dj[c] -= w * ui[c];
            }
        }
    }
    return {total, rel.pull_back(d_unit)};
}

CombinedLoss combined_loss(const Matrix& z_ori, const Matrix& z_rel, const Matrix& z_irr,
                           const TextAttributedGraph& g, double lambda, double tau,
                           const NegativeSampling& sampling) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
    CombinedLoss out;
    out.report.lambda = lambda;
    out.report.tau = tau;
    out.d_ori = Matrix(z_ori.rows(), z_ori.cols());
    out.d_rel = Matrix(z_rel.rows(), z_rel.cols());
    out.d_irr = Matrix(z_irr.rows(), z_irr.cols());
    if (lambda > 0.0) {
        auto sdm = sdm_loss(z_ori, z_rel, z_irr, tau, sampling);
        out.report.l_sdm = sdm.loss;
        axpy(lambda, sdm.d_ori, out.d_ori);
        axpy(lambda, sdm.d_rel, out.d_rel);
        axpy(lambda, sdm.d_irr, out.d_irr);
    } else if (!(tau > 0.0)) {
        throw std::invalid_argument("temperature must be > 0");
    }
    if (lambda < 1.0) {
        auto scr = scr_loss(z_rel, g);
        out.report.l_scr = scr.loss;
        axpy(1.0 - lambda, scr.d_rel, out.d_rel);
    }
    out.report.l_total = lambda * out.report.l_sdm + (1.0 - lambda) * out.report.l_scr;
    return out;
}

double orthogonality_metric(const Matrix& z_rel, const Matrix& z_irr) {
    require_same_shape(z_rel, z_irr, "orthogonality_metric");
    if (z_rel.rows() == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < z_rel.rows(); ++i) s += std::abs(cosine_sim(z_rel.row(i), z_irr.row(i)));
    return s / static_cast<double>(z_rel.rows());
}

PairLoss symmetric_infonce(const Matrix& u, const Matrix& v, double tau) {
    require_same_shape(u, v, "symmetric_infonce");
    if (u.rows() < 2) throw std::invalid_argument("symmetric_infonce needs at least 2 nodes");
    if (!(tau > 0.0)) throw std::invalid_argument("symmetric_infonce: temperature must be > 0");
    const UnitRows uu(u), vv(v);
    std::vector<Matrix> d_unit(2, Matrix(u.rows(), u.cols()));
    const double scale = 0.5 / static_cast<double>(u.rows());
    PairLoss out;
    out.loss = anchored_infonce({&uu, &vv}, 0, 1, {{1}, {0}}, tau, scale, d_unit, {}) +
               anchored_infonce({&uu, &vv}, 1, 0, {{0}, {1}}, tau, scale, d_unit, {});
    out.d_u = uu.pull_back(d_unit[0]);
    out.d_v = vv.pull_back(d_unit[1]);
    return out;
}

}  // namespace sdmscr
