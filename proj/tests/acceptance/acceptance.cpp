// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "oracles.hpp"
#include "sdmscr/analysis.hpp"
#include "sdmscr/decoupler.hpp"
#include "sdmscr/encoder.hpp"
#include "sdmscr/graph.hpp"
#include "sdmscr/objectives.hpp"
#include "sdmscr/synthetic.hpp"
#include "sdmscr/trainer.hpp"
#include "stub_server.hpp"

using namespace sdmscr;
using sdmscr::oracle::max_relative_error;
using sdmscr::oracle::numeric_gradient;
using sdmscr::oracle::random_matrix;
using sdmscr::oracle::TempDir;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

TextAttributedGraph random_small_graph(std::size_t n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    std::vector<Edge> edges;
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v)
            if (coin(rng)) edges.push_back({u, v});
    return build_graph(n, edges, std::vector<std::string>(n), std::vector<int>(n, 0), 1);
}

// ---- 1 ----------------------------------------------------------------------------------

Outcome gradient_correctness() {
    const auto t0 = Clock::now();
    constexpr int kInstances = 20;
    double worst = 0.0;
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<std::size_t> n_dist(3, 8);
    std::uniform_real_distribution<double> lambda_dist(0.05, 0.95);
    std::uniform_real_distribution<double> tau_dist(0.2, 1.5);

    for (int inst = 0; inst < kInstances; ++inst) {
        const std::size_t n = n_dist(rng);
        const std::size_t o = 5;
        const auto g = random_small_graph(n, rng);
        const Matrix zo = random_matrix(n, o, rng), zr = random_matrix(n, o, rng), zi = random_matrix(n, o, rng);
        const double tau = tau_dist(rng);
        const double lambda = lambda_dist(rng);

        const auto sdm = sdm_loss(zo, zr, zi, tau);
        worst = std::max(worst, max_relative_error(sdm.d_ori, numeric_gradient(
            [&](const Matrix& m) { return sdm_loss(m, zr, zi, tau).loss; }, zo)));
        worst = std::max(worst, max_relative_error(sdm.d_rel, numeric_gradient(
            [&](const Matrix& m) { return sdm_loss(zo, m, zi, tau).loss; }, zr)));
        worst = std::max(worst, max_relative_error(sdm.d_irr, numeric_gradient(
            [&](const Matrix& m) { return sdm_loss(zo, zr, m, tau).loss; }, zi)));

        const auto scr = scr_loss(zr, g);
        worst = std::max(worst, max_relative_error(scr.d_rel, numeric_gradient(
            [&](const Matrix& m) { return scr_loss(m, g).loss; }, zr)));

        const auto comb = combined_loss(zo, zr, zi, g, lambda, tau);
        auto total = [&](const Matrix& a, const Matrix& b, const Matrix& c) {
            return combined_loss(a, b, c, g, lambda, tau).report.l_total;
        };
        worst = std::max(worst, max_relative_error(comb.d_ori, numeric_gradient(
            [&](const Matrix& m) { return total(m, zr, zi); }, zo)));
        worst = std::max(worst, max_relative_error(comb.d_rel, numeric_gradient(
            [&](const Matrix& m) { return total(zo, m, zi); }, zr)));
        worst = std::max(worst, max_relative_error(comb.d_irr, numeric_gradient(
            [&](const Matrix& m) { return total(zo, zr, m); }, zi)));

        // Encoder through the combined loss, w.r.t. both weight matrices.
        const EncoderDims dims{4, 6, 3};
        const ViewTriple views{random_matrix(n, dims.in, rng), random_matrix(n, dims.in, rng),
                               random_matrix(n, dims.in, rng)};
        const EncoderParams params = init_params(dims, 100 + inst);
        const NormalizedAdjacency adj(g);
        const auto step = combined_step(params, adj, g, views, lambda, tau);
        auto loss_at = [&](const EncoderParams& p) {
            return combined_loss(forward(p, adj, views.ori).z, forward(p, adj, views.rel).z,
                                 forward(p, adj, views.irr).z, g, lambda, tau)
                .report.l_total;
        };
        worst = std::max(worst, max_relative_error(step.grads.dw1, numeric_gradient([&](const Matrix& w) {
            EncoderParams p = params;
            p.w1 = w;
            return loss_at(p);
        }, params.w1)));
        worst = std::max(worst, max_relative_error(step.grads.dw2, numeric_gradient([&](const Matrix& w) {
            EncoderParams p = params;
            p.w2 = w;
            return loss_at(p);
        }, params.w2)));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 10.0,
            std::to_string(kInstances) + " instances, max rel err " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s"};
}

// ---- 2 ----------------------------------------------------------------------------------

Outcome loss_identities() {
    std::mt19937_64 rng(7);
    bool ok = true;
    std::string why;
    for (int inst = 0; inst < 10; ++inst) {
        const std::size_t n = 6;
        const auto g = random_small_graph(n, rng);
        const Matrix zo = random_matrix(n, 4, rng), zr = random_matrix(n, 4, rng), zi = random_matrix(n, 4, rng);
        const auto one = combined_loss(zo, zr, zi, g, 1.0, 0.5).report;
        const auto zero = combined_loss(zo, zr, zi, g, 0.0, 0.5).report;
        if (!(one.l_total == one.l_sdm && one.l_scr == 0.0)) ok = false, why = "lambda=1";
        if (!(zero.l_total == zero.l_scr)) ok = false, why = "lambda=0";
    }

    // Equal similarities: identical rows everywhere, and mutually orthogonal views.
    double worst_equal = 0.0;
    for (std::size_t n = 2; n <= 8; ++n) {
        const double expected = std::log(static_cast<double>(n));  // log(1 + K), K = N - 1
        Matrix same(n, 3), e1(n, 3), e2(n, 3), e3(n, 3);
        for (std::size_t i = 0; i < n; ++i) {
            same(i, 0) = 0.3;
            same(i, 1) = -1.7;
            same(i, 2) = 2.2;
            e1(i, 0) = 1.0 + static_cast<double>(i);
            e2(i, 1) = 2.0;
            e3(i, 2) = 0.5;
        }
        for (double tau : {0.1, 0.5, 1.0}) {
            worst_equal = std::max(worst_equal, std::abs(sdm_loss(same, same, same, tau).loss - expected));
            worst_equal = std::max(worst_equal, std::abs(sdm_loss(e1, e2, e3, tau).loss - expected));
        }
    }
    if (worst_equal > 1e-12) ok = false, why = "log(1+K) off by " + fmt(worst_equal, 3);

    Matrix rows(5, 4);
    for (std::size_t i = 0; i < 5; ++i) {
        rows(i, 0) = 0.1;
        rows(i, 1) = 1.0 / 3.0;
        rows(i, 2) = -2.5;
        rows(i, 3) = 7.0;
    }
    const auto ring = generate_ring_lattice(5, 2);
    const double scr = scr_loss(rows, ring).loss;
    if (scr != 0.0) ok = false, why = "identical rows gave l_scr=" + fmt(scr, 17);
    return {ok, ok ? "lambda boundaries exact, |l_sdm - log(1+K)| <= " + fmt(worst_equal, 3) + ", l_scr = 0" : why};
}

// ---- 3 ----------------------------------------------------------------------------------

Outcome scale_invariance() {
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
        const std::size_t n = 6;
        const auto g = random_small_graph(n, rng);
        ViewTriple base{random_matrix(n, 5, rng), random_matrix(n, 5, rng), random_matrix(n, 5, rng)};
        const auto ref = combined_loss(base.ori, base.rel, base.irr, g, 0.6, 0.5).report;
        for (int view = 0; view < 3; ++view) {
            for (std::size_t row = 0; row < n; ++row) {
                for (double c : {0.1, 10.0}) {
                    ViewTriple v = base;
                    Matrix& m = view == 0 ? v.ori : view == 1 ? v.rel : v.irr;
                    for (double& x : m.row(row)) x *= c;
                    const auto r = combined_loss(v.ori, v.rel, v.irr, g, 0.6, 0.5).report;
                    worst = std::max({worst, std::abs(r.l_sdm - ref.l_sdm), std::abs(r.l_scr - ref.l_scr),
                                      std::abs(r.l_total - ref.l_total)});
                }
            }
        }
    }
    return {worst <= 1e-9, "max change " + fmt(worst, 3)};
}

// ---- 4 ----------------------------------------------------------------------------------

Outcome variance_reduction() {
    const auto t0 = Clock::now();
    const auto g = generate_ring_lattice(200, 10);
    const auto rows = variance_reduction_experiment(g, 1.0, 10000, 4);
    const double secs = seconds_since(t0);
    if (rows.size() != 1 || rows[0].k != 10) return {false, "expected a single k=10 bucket"};
    const double rel = std::abs(rows[0].empirical - 0.1) / 0.1;
    return {rel <= 0.2 && secs < 30.0,
            "empirical " + fmt(rows[0].empirical) + " vs 0.1 (" + fmt(100 * rel, 3) + "% off), " + fmt(secs, 3) + " s"};
}

// ---- 5 ----------------------------------------------------------------------------------

Outcome spectral_ordering() {
    int wins = 0;
    const int runs = 20;
    for (int seed = 0; seed < runs; ++seed) {
        SbmConfig sbm;
        sbm.seed = static_cast<std::uint64_t>(seed);
        const auto g = generate_sbm(sbm);
        PlantConfig plant;
        plant.seed = static_cast<std::uint64_t>(seed);
        const auto pd = plant_views(g, plant).first;
        const NormalizedAdjacency adj(g);
        if (mean_column_rayleigh(adj, pd.s) < mean_column_rayleigh(adj, pd.n)) ++wins;
    }
    return {wins * 100 >= 95 * runs, std::to_string(wins) + "/" + std::to_string(runs) + " runs signal < noise"};
}

// ---- planted dataset shared by 6-8 ----------------------------------------------------------

struct Planted {
    TextAttributedGraph g;
    ViewTriple views;
};

Planted planted(std::uint64_t seed) {
    SbmConfig sbm;
    sbm.seed = seed;
    auto g = generate_sbm(sbm);
    PlantConfig plant;
    plant.seed = seed;
    auto views = plant_views(g, plant).second;
    return {std::move(g), std::move(views)};
}

// ---- 6 ----------------------------------------------------------------------------------

Outcome scr_low_pass() {
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto data = planted(seed);
        const NormalizedAdjacency adj(data.g);
        double rq[2];
        int idx = 0;
        for (double lambda : {0.8, 1.0}) {
            TrainConfig cfg;
            cfg.seed = seed;
            cfg.lambda = lambda;
            cfg.dims.in = data.views.dim();
            const auto res = train(data.g, data.views, cfg);
            rq[idx++] = mean_column_rayleigh(adj, encode(cfg, res.params, adj, data.views.rel));
        }
        ok = ok && rq[0] < rq[1];
        detail += "seed " + std::to_string(seed) + ": " + fmt(rq[0]) + " < " + fmt(rq[1]) + "; ";
    }
    return {ok, detail};
}

// ---- 7 ----------------------------------------------------------------------------------

Outcome ablation_pattern() {
    const auto data = planted(0);
    ProbeConfig probe;
    const auto ab = subspace_ablation(data.views, data.g.labels(), probe);
    const double ori = ab.ori.accuracy, rel = ab.rel.accuracy, irr = ab.irr.accuracy;
    const bool ok = rel >= ori && ori > irr && rel - irr >= 0.15;
    return {ok, "rel " + fmt(rel) + ", ori " + fmt(ori) + ", irr " + fmt(irr)};
}

// ---- 8 ----------------------------------------------------------------------------------

Outcome orthogonality_claim() {
    int wins = 0;
    const int runs = 10;
    std::string detail;
    for (int seed = 0; seed < runs; ++seed) {
        const auto data = planted(static_cast<std::uint64_t>(seed));
        TrainConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.dims.in = data.views.dim();
        const auto res = train(data.g, data.views, cfg);
        const auto cmp = orthogonality_comparison(data.g, data.views, cfg, res.params, {}, cfg.seed);
        if (cmp.metric_sdm < cmp.metric_random_aug) ++wins;
        if (seed == 0) {
            // signed mean cosine shows whether |cos| is high from alignment or anti-alignment
            const NormalizedAdjacency adj(data.g);
            const Matrix zr = encode(cfg, res.params, adj, data.views.rel);
            const Matrix zi = encode(cfg, res.params, adj, data.views.irr);
            double signed_cos = 0.0;
            for (std::size_t i = 0; i < zr.rows(); ++i) signed_cos += cosine_sim(zr.row(i), zi.row(i));
            signed_cos /= static_cast<double>(zr.rows());
            detail = " (seed 0: " + fmt(cmp.metric_sdm) + " vs " + fmt(cmp.metric_random_aug) +
                     ", signed cos(rel, irr) " + fmt(signed_cos) + ")";
        }
    }
    return {wins * 10 >= 9 * runs, std::to_string(wins) + "/" + std::to_string(runs) + " runs sdm < random aug" + detail};
}

// ---- 9, 10 ------------------------------------------------------------------------------

int cli(const std::vector<std::string>& args) {
    std::ostringstream sink;
    cli::Io io;
    io.out = &sink;
    io.err = &sink;
    const int code = cli::run(args, io);
    if (code != 0) std::cerr << sink.str();
    return code;
}

bool pipeline(const std::filesystem::path& dir, const std::string& seed) {
    const std::string out = dir.string();
    return cli({"gen", "--seed", seed, "--out", out}) == 0 &&
           cli({"decouple", "--backend", "mock", "--concurrency", "1", "--seed", seed, "--out", out}) == 0 &&
           cli({"embed", "--seed", seed, "--out", out}) == 0 &&
           cli({"train", "--epochs", "200", "--views", "text", "--seed", seed, "--out", out}) == 0 &&
           cli({"eval", "--suite", "all", "--views", "text", "--seed", seed, "--out", out}) == 0;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct PipelineRuns {
    TempDir first{"accept-a"};
    TempDir second{"accept-b"};
    bool first_ok = false;
    bool second_ok = false;
    double first_seconds = 0.0;
};

Outcome end_to_end(PipelineRuns& runs) {
    const auto t0 = Clock::now();
    runs.first_ok = pipeline(runs.first.path(), "11");
    runs.first_seconds = seconds_since(t0);
    if (!runs.first_ok) return {false, "pipeline failed"};
    const auto metrics = nlohmann::json::parse(slurp(runs.first / "metrics.json"));
    const double sdm = metrics["probe"]["sdm_scr"]["accuracy"].get<double>();
    const double ident = metrics["probe"]["identity_ori"]["accuracy"].get<double>();
    const double gain = 100.0 * (sdm - ident);
    return {gain >= 3.0 && runs.first_seconds < 60.0,
            "sdm_scr " + fmt(sdm) + " vs identity x_ori " + fmt(ident) + " (+" + fmt(gain, 3) + " pts), " +
                fmt(runs.first_seconds, 3) + " s"};
}

Outcome determinism(PipelineRuns& runs) {
    if (!runs.first_ok) return {false, "first pipeline run failed"};
    runs.second_ok = pipeline(runs.second.path(), "11");
    if (!runs.second_ok) return {false, "second pipeline run failed"};
    const auto a = slurp(runs.first / "metrics.json");
    const auto b = slurp(runs.second / "metrics.json");
    return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

// ---- 11 ---------------------------------------------------------------------------------

Outcome decoupler_robustness() {
    using sdmscr::oracle::json_reply;
    using sdmscr::oracle::StubChatServer;
    using sdmscr::oracle::StubReply;

    const std::size_t n = 12;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string kind = i % 3 == 0 ? "plain" : i % 3 == 1 ? "prose" : "fail";
        texts.push_back("Node " + std::to_string(i) + " " + kind + ". The camera is sharp.");
    }
    const auto g = build_graph(n, {}, texts, std::vector<int>(n, 0), 1);

    StubChatServer server([](const std::string& text, const nlohmann::json&) -> StubReply {
        if (text.find(" fail.") != std::string::npos) return {500, ""};
        const auto body = json_reply("The camera is sharp.", text.substr(0, text.find('.') + 1));
        if (text.find(" prose.") != std::string::npos) return {200, "Sure! Here it is:\n" + body + "\nDone."};
        return {200, body};
    });

    HttpBackendConfig cfg{server.base_url(), "test-key", "stub-model", std::chrono::seconds(5)};
    auto transport = make_http_transport(cfg);
    TempDir dir("accept-stub");
    DecoupleOptions opts;
    opts.model_id = cfg.model;
    opts.concurrency = 3;
    opts.sleep = [](std::chrono::milliseconds) {};
    opts.cache_path = dir / "decouple.jsonl";
    TaskInstruction instr{"Identify the product category."};

    const auto first = decouple_graph(g, instr, *transport, opts);
    bool a = true, b = true, c = first.records.size() == n;
    for (std::size_t i = 0; i < first.records.size(); ++i) {
        const auto& r = first.records[i];
        if (i % 3 == 0) a = a && r.status == DecoupleStatus::Ok && r.text_rel == "The camera is sharp.";
        if (i % 3 == 1) b = b && r.status == DecoupleStatus::Ok && r.text_rel == "The camera is sharp.";
        if (i % 3 == 2) c = c && r.status == DecoupleStatus::Degraded && r.text_rel == r.text_ori && r.text_irr.empty();
    }

    // (d) a fully successful run, then a rerun against the warm cache.
    StubChatServer healthy([](const std::string& text, const nlohmann::json&) -> StubReply {
        return {200, json_reply(text, "")};
    });
    auto healthy_transport = make_http_transport({healthy.base_url(), "test-key", "stub-model", std::chrono::seconds(5)});
    opts.cache_path = dir / "warm.jsonl";
    const auto cold = decouple_graph(g, instr, *healthy_transport, opts);
    const std::size_t hits_before = healthy.hits();
    const auto second = decouple_graph(g, instr, *healthy_transport, opts);
    const bool d = cold.stats.requests_issued == n && second.stats.requests_issued == 0 &&
                   healthy.hits() == hits_before && second.stats.cache_hits == n;

    std::string detail = std::string("(a) ") + (a ? "ok" : "FAIL") + " (b) " + (b ? "ok" : "FAIL") + " (c) " +
                         (c ? "ok" : "FAIL") + " (d) " + (d ? "ok" : "FAIL") + "; warm rerun issued " +
                         std::to_string(second.stats.requests_issued) + " requests";
    return {a && b && c && d, detail};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    PipelineRuns runs;
    const std::vector<Criterion> criteria{
        {"1 gradient correctness", gradient_correctness},
        {"2 loss identities", loss_identities},
        {"3 scale invariance", scale_invariance},
        {"4 variance reduction", variance_reduction},
        {"5 spectral ordering", spectral_ordering},
        {"6 structural consistency is low-pass", scr_low_pass},
        {"7 ablation ordering", ablation_pattern},
        {"8 orthogonality vs random augmentation", orthogonality_claim},
        {"9 end-to-end pipeline", [&] { return end_to_end(runs); }},
        {"10 determinism", [&] { return determinism(runs); }},
        {"11 decoupler robustness", decoupler_robustness},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " -- " << o.detail << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
