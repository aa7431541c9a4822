#include "sdmscr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sdmscr/random.hpp"
#include "sdmscr/synthetic.hpp"

namespace sdmscr {

namespace {

using json = nlohmann::json;

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

Split stratified_split(std::span<const int> labels, std::size_t classes, double frac, Rng& rng) {
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    Split s;
    for (auto& members : by_class) {
        if (members.empty()) continue;
        std::shuffle(members.begin(), members.end(), rng);
        const auto want = static_cast<std::size_t>(std::llround(frac * static_cast<double>(members.size())));
        const std::size_t take = std::clamp<std::size_t>(want, 1, members.size());
        s.train.insert(s.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
        s.test.insert(s.test.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

// Softmax regression; returns test accuracy.
double fit_and_score(const Matrix& z, std::span<const int> labels, std::size_t classes, const Split& split,
                     const ProbeConfig& cfg) {
    const std::size_t d = z.cols();
    // Standardize with train statistics.
    std::vector<double> mean(d, 0.0), scale(d, 1.0);
    for (std::size_t i : split.train)
        for (std::size_t c = 0; c < d; ++c) mean[c] += z(i, c);
    for (double& m : mean) m /= static_cast<double>(split.train.size());
    for (std::size_t c = 0; c < d; ++c) {
        double var = 0.0;
        for (std::size_t i : split.train) var += (z(i, c) - mean[c]) * (z(i, c) - mean[c]);
        var /= static_cast<double>(split.train.size());
        scale[c] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
    }
    auto feature = [&](std::size_t i, std::size_t c) { return (z(i, c) - mean[c]) * scale[c]; };

    Matrix w(d, classes);
    std::vector<double> bias(classes, 0.0);
    Matrix xs(split.train.size(), d);
    for (std::size_t r = 0; r < split.train.size(); ++r)
        for (std::size_t c = 0; c < d; ++c) xs(r, c) = feature(split.train[r], c);

    const double inv_n = 1.0 / static_cast<double>(split.train.size());
    std::vector<double> p(classes);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        Matrix gw(d, classes);
        std::vector<double> gb(classes, 0.0);
        for (std::size_t r = 0; r < xs.rows(); ++r) {
            auto x = xs.row(r);
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < classes; ++k) {
                double s = bias[k];
                for (std::size_t c = 0; c < d; ++c) s += x[c] * w(c, k);
                p[k] = s;
                mx = std::max(mx, s);
            }
            double sum = 0.0;
            for (double& v : p) {
                v = std::exp(v - mx);
                sum += v;
            }
            const auto y = static_cast<std::size_t>(labels[split.train[r]]);
            for (std::size_t k = 0; k < classes; ++k) {
                const double g = (p[k] / sum - (k == y ? 1.0 : 0.0)) * inv_n;
                gb[k] += g;
                for (std::size_t c = 0; c < d; ++c) gw(c, k) += g * x[c];
            }
        }
        for (std::size_t c = 0; c < d; ++c)
            for (std::size_t k = 0; k < classes; ++k)
                w(c, k) -= cfg.learning_rate * (gw(c, k) + cfg.l2 * w(c, k));
        for (std::size_t k = 0; k < classes; ++k) bias[k] -= cfg.learning_rate * gb[k];
    }

    if (split.test.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i : split.test) {
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < classes; ++k) {
            double s = bias[k];
            for (std::size_t c = 0; c < d; ++c) s += feature(i, c) * w(c, k);
            if (s > best_score) {
                best_score = s;
                best = k;
            }
        }
        if (best == static_cast<std::size_t>(labels[i])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(split.test.size());
}

}  // namespace

ProbeResult linear_probe(const Matrix& z, std::span<const int> labels, const ProbeConfig& cfg) {
    if (z.rows() != labels.size()) throw ShapeError("linear_probe: rows != label count");
    if (cfg.repeats < 1) throw std::invalid_argument("linear_probe: repeats must be >= 1");
    if (!(cfg.train_frac > 0.0 && cfg.train_frac < 1.0)) {
        throw std::invalid_argument("linear_probe: train_frac must lie in (0, 1)");
    }
    std::size_t classes = 0;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("linear_probe: negative label");
        classes = std::max(classes, static_cast<std::size_t>(l) + 1);
    }
    std::vector<bool> present(classes, false);
    for (int l : labels) present[static_cast<std::size_t>(l)] = true;
    if (std::count(present.begin(), present.end(), true) < 2) {
        throw std::invalid_argument("linear_probe needs at least two classes");
    }

    ProbeResult res;
    res.train_frac = cfg.train_frac;
    res.repeats = cfg.repeats;
    res.seed = cfg.seed;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        Rng rng = make_rng(cfg.seed, 500 + r);
        const Split split = stratified_split(labels, classes, cfg.train_frac, rng);
        res.per_repeat.push_back(fit_and_score(z, labels, classes, split, cfg));
    }
    const double n = static_cast<double>(res.per_repeat.size());
    res.accuracy = std::accumulate(res.per_repeat.begin(), res.per_repeat.end(), 0.0) / n;
    double var = 0.0;
    for (double a : res.per_repeat) var += (a - res.accuracy) * (a - res.accuracy);
    res.std = std::sqrt(var / n);
    return res;
}

AblationResult subspace_ablation(const ViewTriple& views, std::span<const int> labels,
                                 const ProbeConfig& cfg) {
    views.validate();
    return {linear_probe(views.ori, labels, cfg), linear_probe(views.rel, labels, cfg),
            linear_probe(views.irr, labels, cfg)};
}

Matrix dense_laplacian(const TextAttributedGraph& g) {
    Matrix l = normalized_adjacency(g).dense();
    for (double& x : l.values()) x = -x;
    for (std::size_t i = 0; i < l.rows(); ++i) l(i, i) += 1.0;
    return l;
}

EigenDecomposition jacobi_eigen(Matrix a, double tol, std::size_t max_sweeps) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw ShapeError("jacobi_eigen: matrix must be square");
    Matrix v = identity(n);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (std::size_t sweep = 0; sweep < max_sweeps && off_norm() >= tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (off_norm() >= tol) throw std::runtime_error("jacobi_eigen did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

EigenDecomposition laplacian_eigen(const TextAttributedGraph& g) {
    if (g.num_nodes() > kDenseEigenLimit) {
        throw std::length_error("laplacian_eigen is limited to " + std::to_string(kDenseEigenLimit) + " nodes");
    }
    return jacobi_eigen(dense_laplacian(g));
}

double rayleigh(const Matrix& laplacian, std::span<const double> f) {
    if (laplacian.rows() != f.size() || laplacian.cols() != f.size()) throw ShapeError("rayleigh: size mismatch");
    const double ff = dot(f, f);
    if (ff == 0.0) throw std::invalid_argument("rayleigh: zero vector");
    double flf = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) flf += f[i] * dot(laplacian.row(i), f);
    return flf / ff;
}

double rayleigh(const NormalizedAdjacency& adj, std::span<const double> f) {
    if (adj.num_nodes() != f.size()) throw ShapeError("rayleigh: size mismatch");
    const double ff = dot(f, f);
    if (ff == 0.0) throw std::invalid_argument("rayleigh: zero vector");
    double faf = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto cols = adj.row_columns(static_cast<NodeId>(i));
        const auto vals = adj.row_values(static_cast<NodeId>(i));
        double s = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k) s += vals[k] * f[cols[k]];
        faf += f[i] * s;
    }
    return (ff - faf) / ff;
}

double mean_column_rayleigh(const NormalizedAdjacency& adj, const Matrix& x) {
    const Matrix xt = transpose(x);
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < xt.rows(); ++c) {
        if (dot(xt.row(c), xt.row(c)) == 0.0) continue;
        sum += rayleigh(adj, xt.row(c));
        ++used;
    }
    return used ? sum / static_cast<double>(used) : 0.0;
}

double low_freq_energy_fraction(const EigenDecomposition& basis, std::span<const double> f) {
    const std::size_t n = f.size();
    if (basis.vectors.rows() != n) throw ShapeError("low_freq_energy_fraction: size mismatch");
    const double ff = dot(f, f);
    if (ff == 0.0) throw std::invalid_argument("low_freq_energy_fraction: zero vector");
    const std::size_t band = (n + 3) / 4;
    double low = 0.0;
    for (std::size_t k = 0; k < band; ++k) {
        double proj = 0.0;
        for (std::size_t r = 0; r < n; ++r) proj += basis.vectors(r, k) * f[r];
        low += proj * proj;
    }
    return std::clamp(low / ff, 0.0, 1.0);
}

SpectralReport spectral_report(const TextAttributedGraph& g,
                               const std::vector<std::pair<std::string, const Matrix*>>& signals) {
    const auto basis = laplacian_eigen(g);
    const NormalizedAdjacency adj(g);
    SpectralReport rep;
    rep.eigenvalues = basis.values;
    for (const auto& [name, m] : signals) {
        if (m->rows() != g.num_nodes()) throw ShapeError("spectral_report: signal rows != node count");
        SignalSpectrum s{name, mean_column_rayleigh(adj, *m), 0.0, 0.0};
        const Matrix cols = transpose(*m);
        std::size_t used = 0;
        for (std::size_t c = 0; c < cols.rows(); ++c) {
            if (dot(cols.row(c), cols.row(c)) == 0.0) continue;
            s.low_freq_fraction += low_freq_energy_fraction(basis, cols.row(c));
            ++used;
        }
        if (used) s.low_freq_fraction /= static_cast<double>(used);
        s.high_freq_fraction = used ? 1.0 - s.low_freq_fraction : 0.0;
        rep.signals.push_back(std::move(s));
    }
    return rep;
}

std::vector<VarianceRow> variance_reduction_experiment(const TextAttributedGraph& g, double sigma,
                                                       std::size_t trials, std::uint64_t seed) {
    if (trials < 2) throw std::invalid_argument("variance experiment needs at least 2 trials");
    const std::size_t n = g.num_nodes();
    Rng rng = make_rng(seed, 0x7a21);
    std::normal_distribution<double> normal(0.0, sigma);

    // Welford accumulators per node.
    std::vector<double> mean(n, 0.0), m2(n, 0.0), eps(n);
    for (std::size_t t = 0; t < trials; ++t) {
        for (double& e : eps) e = normal(rng);
        const double count = static_cast<double>(t + 1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto nbrs = g.neighbors(static_cast<NodeId>(i));
            if (nbrs.empty()) continue;
            double s = 0.0;
            for (NodeId j : nbrs) s += eps[j];
            const double x = s / static_cast<double>(nbrs.size());
            const double delta = x - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (x - mean[i]);
        }
    }

    std::vector<VarianceRow> rows;
    std::vector<double> sums;
    auto row_for = [&](std::size_t k) -> std::size_t {
        auto it = std::lower_bound(rows.begin(), rows.end(), k,
                                   [](const VarianceRow& r, std::size_t key) { return r.k < key; });
        const auto idx = static_cast<std::size_t>(it - rows.begin());
        if (it == rows.end() || it->k != k) {
            rows.insert(it, VarianceRow{k, 0, 0.0, sigma * sigma / static_cast<double>(k)});
            sums.insert(sums.begin() + static_cast<std::ptrdiff_t>(idx), 0.0);
        }
        return idx;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = g.degree(static_cast<NodeId>(i));
        if (k == 0) continue;
        const std::size_t r = row_for(k);
        ++rows[r].nodes;
        sums[r] += m2[i] / static_cast<double>(trials - 1);
    }
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r].empirical = sums[r] / static_cast<double>(rows[r].nodes);
    return rows;
}

OrthogonalityComparison orthogonality_comparison(const TextAttributedGraph& g, const ViewTriple& views,
                                                 const TrainConfig& cfg, const EncoderParams& sdm_params,
                                                 const BaselineConfig& aug, std::uint64_t seed) {
    views.validate();
    const NormalizedAdjacency adj(g);
    OrthogonalityComparison out;
    out.metric_sdm = orthogonality_metric(encode(cfg, sdm_params, adj, views.rel),
                                          encode(cfg, sdm_params, adj, views.irr));

    TrainConfig base_cfg = cfg;
    base_cfg.identity_encoder = false;
    base_cfg.dims.in = views.dim();
    const auto baseline = train_augmentation_baseline(g, views.ori, base_cfg, aug);
    const auto a = random_augment(views.ori, g, aug.p_edge_drop, aug.p_feat_mask, derive_seed(seed, 11));
    const auto b = random_augment(views.ori, g, aug.p_edge_drop, aug.p_feat_mask, derive_seed(seed, 12));
    const NormalizedAdjacency adj_a(with_edges(g, a.edges)), adj_b(with_edges(g, b.edges));
    out.metric_random_aug = orthogonality_metric(forward(baseline.params, adj_a, a.x).z,
                                                 forward(baseline.params, adj_b, b.x).z);
    return out;
}

namespace {

json probe_json(const ProbeResult& p) {
    json per = json::array();
    for (double a : p.per_repeat) per.push_back(a);
    return {{"accuracy", p.accuracy},
            {"std", p.std},
            {"per_repeat", per},
            {"train_frac", p.train_frac},
            {"repeats", static_cast<double>(p.repeats)},
            {"seed", static_cast<double>(p.seed)}};
}

json report_json(const MetricsReport& r) {
    json doc = json::object();
    json probe = json::object();
    for (const auto& [name, p] : r.probe) probe[name] = probe_json(p);
    doc["probe"] = probe;

    json ablation = json::object();
    if (r.ablation) {
        ablation["ori"] = probe_json(r.ablation->ori);
        ablation["rel"] = probe_json(r.ablation->rel);
        ablation["irr"] = probe_json(r.ablation->irr);
    }
    doc["ablation"] = ablation;

    json spectral = json::object();
    if (r.spectral) {
        spectral["eigenvalues"] = r.spectral->eigenvalues;
        json signals = json::object();
        for (const auto& s : r.spectral->signals) {
            signals[s.name] = {{"mean_rayleigh", s.mean_rayleigh},
                               {"low_freq_fraction", s.low_freq_fraction},
                               {"high_freq_fraction", s.high_freq_fraction}};
        }
        spectral["signals"] = signals;
    }
    doc["spectral"] = spectral;

    json variance = json::array();
    for (const auto& v : r.variance) {
        variance.push_back({{"k", static_cast<double>(v.k)},
                            {"nodes", static_cast<double>(v.nodes)},
                            {"empirical", v.empirical},
                            {"predicted", v.predicted}});
    }
    doc["variance"] = variance;

    json orth = json::object();
    if (r.orthogonality) {
        orth["metric_sdm"] = r.orthogonality->metric_sdm;
        orth["metric_random_aug"] = r.orthogonality->metric_random_aug;
    }
    doc["orthogonality"] = orth;

    json history = json::array();
    for (const auto& l : r.loss_history) {
        history.push_back({{"l_sdm", l.l_sdm},
                           {"l_scr", l.l_scr},
                           {"l_total", l.l_total},
                           {"lambda", l.lambda},
                           {"tau", l.tau}});
    }
    doc["loss_history"] = history;
    return doc;
}

void flatten(const json& node, const std::string& metric, const std::string& name,
             std::ostringstream& out) {
    if (node.is_number()) {
        out << metric << ',' << name << ',' << json(node.get<double>()).dump() << '\n';
    } else if (node.is_object()) {
        for (const auto& [k, v] : node.items()) flatten(v, metric, name.empty() ? k : name + "." + k, out);
    } else if (node.is_array()) {
        for (std::size_t i = 0; i < node.size(); ++i) {
            flatten(node[i], metric, name + "[" + std::to_string(i) + "]", out);
        }
    }
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report) { return report_json(report).dump(2) + "\n"; }

std::string metrics_to_csv(const MetricsReport& report) {
    const json doc = report_json(report);
    std::ostringstream out;
    out << "metric,name,value\n";
    for (const auto& [section, body] : doc.items()) flatten(body, section, "", out);
    return out.str();
}

void emit_report(const MetricsReport& report, const std::filesystem::path& dir) {
    auto write = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        out << text;
        if (!out) throw std::runtime_error("write failed for " + p.string());
    };
    write(dir / "metrics.json", metrics_to_json(report));
    write(dir / "metrics.csv", metrics_to_csv(report));
}

std::vector<LossReport> read_loss_history(const std::filesystem::path& metrics_json) {
    std::vector<LossReport> out;
    std::ifstream in(metrics_json);
    if (!in) return out;
    const json doc = json::parse(in);
    if (!doc.contains("loss_history")) return out;
    for (const auto& l : doc["loss_history"]) {
        out.push_back({l.at("l_sdm").get<double>(), l.at("l_scr").get<double>(), l.at("l_total").get<double>(),
                       l.at("lambda").get<double>(), l.at("tau").get<double>()});
    }
    return out;
}

}  // namespace sdmscr
