#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdmscr/analysis.hpp"
#include "sdmscr/decoupler.hpp"
#include "sdmscr/embedding.hpp"
#include "sdmscr/encoder.hpp"
#include "sdmscr/graph.hpp"
#include "sdmscr/synthetic.hpp"
#include "sdmscr/trainer.hpp"

#ifndef SDMSCR_VERSION
#define SDMSCR_VERSION "0.0.0"
#endif

namespace sdmscr::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Options registered on a subcommand, kept so that config files can fill
// them in and the resolved values can be echoed into the manifest.
class Bound {
public:
    explicit Bound(CLI::App* app) : app_(app) {}

    template <class T>
    CLI::Option* opt(const std::string& name, T& var, const std::string& desc) {
        auto* o = app_->add_option("--" + name, var, desc)->capture_default_str();
        entries_.push_back({name, o, [&var] { return json(var); }});
        return o;
    }

    CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
        auto* o = app_->add_flag("--" + name, var, desc);
        entries_.push_back({name, o, [&var] { return json(var); }});
        return o;
    }

    // Config values only fill options that were not given on the command line.
    void apply_config(const json& cfg) {
        for (const auto& [key, value] : cfg.items()) {
            auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == key; });
            if (it == entries_.end()) throw UsageError("unknown config key '" + key + "'");
            if (it->option->count() > 0) continue;
            if (value.is_array()) {
                for (const auto& v : value) it->option->add_result(scalar_text(v));
            } else {
                it->option->add_result(scalar_text(value));
            }
            it->option->run_callback();
        }
    }

    json resolved() const {
        json out = json::object();
        for (const auto& e : entries_) out[e.name] = e.get();
        return out;
    }

private:
    struct Entry {
        std::string name;
        CLI::Option* option;
        std::function<json()> get;
    };

    static std::string scalar_text(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw UsageError("config values must be scalars or arrays of scalars");
    }

    CLI::App* app_;
    std::vector<Entry> entries_;
};

struct Common {
    std::uint64_t seed = 0;
    std::string config;
    std::string out = ".";
    std::string in;

    void bind(CLI::App* app, Bound& b) {
        b.opt("seed", seed, "Random seed");
        app->add_option("--config", config, "JSON config file (or a manifest.json to replay)");
        b.opt("out", out, "Output directory");
        b.opt("in", in, "Input directory (defaults to --out)");
    }
};

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error(p.string() + ": " + e.what());
    }
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + p.string());
}

// Bookkeeping for one command invocation.
struct Run {
    std::string command;
    fs::path in;
    fs::path out;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    json stats = json::object();
    std::ostream* log = nullptr;

    fs::path input(const std::string& name) {
        auto p = in / name;
        if (!fs::exists(p)) throw std::runtime_error("missing input " + p.string());
        inputs.push_back(p.string());
        return p;
    }
    fs::path output(const std::string& name) {
        auto p = out / name;
        outputs.push_back(p.string());
        return p;
    }
};

// ---- gen -----------------------------------------------------------------------

struct GenOpts {
    std::size_t classes = 3;
    std::size_t per_class = 100;
    double p = 0.5;
    double q = 0.05;
    bool heterophily = false;
    std::size_t dim = 64;
    double sigma_noise = 1.0;
    double sigma_eps = 0.3;
    double sigma_zeta = 0.3;
    double sigma_jitter = 0.05;
    double signal_scale = 1.0;

    void bind(Bound& b) {
        b.opt("classes", classes, "Number of classes")->check(CLI::Range(std::size_t{1}, std::size_t{8}));
        b.opt("per-class", per_class, "Nodes per class")->check(CLI::PositiveNumber);
        b.opt("p", p, "Intra-class edge probability")->check(CLI::Range(0.0, 1.0));
        b.opt("q", q, "Inter-class edge probability")->check(CLI::Range(0.0, 1.0));
        b.flag("heterophily", heterophily, "Allow q > p");
        b.opt("dim", dim, "Planted feature dimension")->check(CLI::PositiveNumber);
        b.opt("sigma-noise", sigma_noise, "Std of the noise component")->check(CLI::NonNegativeNumber);
        b.opt("sigma-eps", sigma_eps, "Std of the relevant-view residual")->check(CLI::NonNegativeNumber);
        b.opt("sigma-zeta", sigma_zeta, "Std of the irrelevant-view residual")->check(CLI::NonNegativeNumber);
        b.opt("sigma-jitter", sigma_jitter, "Per-node jitter around the class prototype")
            ->check(CLI::NonNegativeNumber);
        b.opt("signal-scale", signal_scale, "Prototype length")->check(CLI::NonNegativeNumber);
    }
};

json lexicon_to_json(const TextLexicon& lex) {
    return {{"class_keywords", lex.class_keywords}, {"noise_sentences", lex.noise_sentences}};
}

void cmd_gen(const GenOpts& o, Run& run) {
    SbmConfig sbm;
    sbm.num_classes = o.classes;
    sbm.nodes_per_class = o.per_class;
    sbm.p_intra = o.p;
    sbm.q_inter = o.q;
    sbm.seed = run.seed;
    sbm.heterophily = o.heterophily;
    sbm.validate();

    const TextLexicon lexicon = default_lexicon(o.classes);
    const auto g = generate_sbm(sbm, lexicon);

    PlantConfig plant;
    plant.dim = o.dim;
    plant.sigma_noise = o.sigma_noise;
    plant.sigma_eps = o.sigma_eps;
    plant.sigma_zeta = o.sigma_zeta;
    plant.sigma_jitter = o.sigma_jitter;
    plant.signal_scale = o.signal_scale;
    plant.seed = run.seed;
    const auto views = plant_views(g, plant).second;

    save_graph(g, run.output("graph.json"));
    write_text(run.output("lexicon.json"), lexicon_to_json(lexicon).dump(2) + "\n");
    save_matrix(views.ori, run.output("x_ori.emb1"));
    save_matrix(views.rel, run.output("x_rel.emb1"));
    save_matrix(views.irr, run.output("x_irr.emb1"));

    run.stats = {{"nodes", g.num_nodes()}, {"edges", g.num_edges()}, {"classes", g.num_classes()}};
    *run.log << "gen: " << g.num_nodes() << " nodes, " << g.num_edges() << " edges -> " << run.out.string()
             << "\n";
}

// ---- decouple --------------------------------------------------------------------

struct DecoupleOpts {
    std::string backend = "mock";
    std::string lexicon;
    std::string task = "Classify the product category of the item described in this review.";
    std::size_t concurrency = 4;
    std::string api_base;
    std::string model;
    double temperature = 0.0;
    std::size_t timeout = 60;
    bool fresh = false;

    void bind(Bound& b) {
        b.opt("backend", backend, "mock | llm")->check(CLI::IsMember({"mock", "llm"}));
        b.opt("lexicon", lexicon, "Keyword lexicon for the mock backend (default <in>/lexicon.json)");
        b.opt("task", task, "Task background given to the decoupler");
        b.opt("concurrency", concurrency, "Concurrent backend requests")->check(CLI::PositiveNumber);
        b.opt("api-base", api_base, "Override LLM_API_BASE");
        b.opt("model", model, "Override LLM_MODEL");
        b.opt("temperature", temperature, "Sampling temperature")->check(CLI::NonNegativeNumber);
        b.opt("timeout", timeout, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
        b.flag("fresh", fresh, "Discard an existing decouple.jsonl before running");
    }
};

std::vector<std::string> read_mock_lexicon(const fs::path& p) {
    const json doc = read_json_file(p);
    std::vector<std::string> words;
    if (doc.is_array()) {
        words = doc.get<std::vector<std::string>>();
    } else if (doc.is_object() && doc.contains("class_keywords")) {
        TextLexicon lex;
        lex.class_keywords = doc.at("class_keywords").get<std::vector<std::vector<std::string>>>();
        words = lex.all_keywords();
    } else {
        throw std::runtime_error(p.string() + ": expected a keyword array or a lexicon object");
    }
    if (words.empty()) throw std::runtime_error(p.string() + ": lexicon is empty");
    return words;
}

void cmd_decouple(const DecoupleOpts& o, Run& run, const Getenv& getenv) {
    std::unique_ptr<ChatTransport> transport;
    DecoupleOptions opts;
    opts.temperature = o.temperature;
    opts.concurrency = o.concurrency;

    if (o.backend == "llm") {
        // Configuration problems surface before anything is read or sent.
        auto cfg = resolve_backend_config(getenv, o.api_base, o.model);
        cfg.timeout = std::chrono::seconds(o.timeout);
        opts.model_id = cfg.model;
        transport = make_http_transport(cfg);
    }

    const auto g = load_graph(run.input("graph.json"));
    if (o.backend == "mock") {
        fs::path lex = o.lexicon.empty() ? run.in / "lexicon.json" : fs::path(o.lexicon);
        if (!fs::exists(lex)) throw std::runtime_error("missing input " + lex.string());
        run.inputs.push_back(lex.string());
        transport = std::make_unique<MockChatTransport>(read_mock_lexicon(lex));
        opts.model_id = std::string(kMockModelId);
    }

    const fs::path cache = run.output("decouple.jsonl");
    if (o.fresh) fs::remove(cache);
    opts.cache_path = cache;

    TaskInstruction instr;
    instr.task_background = o.task;
    const auto result = decouple_graph(g, instr, *transport, opts);

    run.stats = {{"requests_issued", result.stats.requests_issued},
                 {"cache_hits", result.stats.cache_hits},
                 {"ok", result.stats.ok},
                 {"degraded", result.stats.degraded}};
    *run.log << "decouple: " << result.records.size() << " nodes, " << result.stats.requests_issued
             << " requests issued, " << result.stats.cache_hits << " cache hits, " << result.stats.degraded
             << " degraded\n";
}

// ---- embed ------------------------------------------------------------------------

struct EmbedOpts {
    std::size_t dim = 64;

    void bind(Bound& b) { b.opt("dim", dim, "Hashing embedding dimension")->check(CLI::Range(std::size_t{8}, std::size_t{1} << 20)); }
};

void cmd_embed(const EmbedOpts& o, Run& run) {
    const auto g = load_graph(run.input("graph.json"));
    const auto records = assemble_records(g, read_records(run.input("decouple.jsonl")));
    const auto views = embed_views(records, o.dim);
    save_matrix(views.ori, run.output("views_ori.emb1"));
    save_matrix(views.rel, run.output("views_rel.emb1"));
    save_matrix(views.irr, run.output("views_irr.emb1"));
    run.stats = {{"nodes", views.num_nodes()}, {"dim", views.dim()}};
    *run.log << "embed: " << views.num_nodes() << " x " << views.dim() << " per view\n";
}

// ---- shared view loading -------------------------------------------------------

ViewTriple load_views(Run& run, const std::string& mode, std::string* picked) {
    auto have = [&](const std::string& prefix) {
        return fs::exists(run.in / (prefix + "_ori.emb1")) && fs::exists(run.in / (prefix + "_rel.emb1")) &&
               fs::exists(run.in / (prefix + "_irr.emb1"));
    };
    std::string prefix;
    if (mode == "text") {
        prefix = "views";
    } else if (mode == "planted") {
        prefix = "x";
    } else {
        prefix = have("views") ? "views" : "x";
    }
    if (picked) *picked = prefix == "views" ? "text" : "planted";
    ViewTriple v{load_matrix(run.input(prefix + "_ori.emb1")), load_matrix(run.input(prefix + "_rel.emb1")),
                 load_matrix(run.input(prefix + "_irr.emb1"))};
    v.validate();
    return v;
}

// ---- train ---------------------------------------------------------------------------

struct TrainOpts {
    std::size_t epochs = 200;
    double lr = 1e-3;
    double lambda = 0.8;
    double tau = 0.5;
    double weight_decay = 1e-5;
    std::size_t hidden = 128;
    std::size_t out_dim = 64;
    std::size_t max_negatives = 0;
    bool identity_encoder = false;
    std::string views = "auto";

    void bind(Bound& b) {
        b.opt("epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
        b.opt("lr", lr, "Adam learning rate")->check(CLI::NonNegativeNumber);
        b.opt("lambda", lambda, "Weight of the SDM term")->check(CLI::Range(0.0, 1.0));
        b.opt("tau", tau, "Contrastive temperature")->check(CLI::PositiveNumber);
        b.opt("weight-decay", weight_decay, "Decoupled weight decay")->check(CLI::NonNegativeNumber);
        b.opt("hidden", hidden, "Hidden width")->check(CLI::PositiveNumber);
        b.opt("out-dim", out_dim, "Output width")->check(CLI::PositiveNumber);
        b.opt("max-negatives", max_negatives, "Negatives per anchor on large graphs (0 = all)");
        b.flag("identity-encoder", identity_encoder, "Skip training; pass views through unchanged");
        b.opt("views", views, "auto | planted | text")->check(CLI::IsMember({"auto", "planted", "text"}));
    }
};

json train_config_to_json(const TrainConfig& c, const std::string& views) {
    return {{"epochs", c.epochs},
            {"lr", c.learning_rate},
            {"lambda", c.lambda},
            {"tau", c.tau},
            {"seed", c.seed},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"weight_decay", c.weight_decay},
            {"dims", {{"in", c.dims.in}, {"hidden", c.dims.hidden}, {"out", c.dims.out}}},
            {"identity_encoder", c.identity_encoder},
            {"max_negatives", c.negatives.max_negatives},
            {"min_nodes_for_sampling", c.negatives.min_nodes},
            {"views", views}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<std::size_t>();
    c.learning_rate = j.at("lr").get<double>();
    c.lambda = j.at("lambda").get<double>();
    c.tau = j.at("tau").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.dims.in = j.at("dims").at("in").get<std::size_t>();
    c.dims.hidden = j.at("dims").at("hidden").get<std::size_t>();
    c.dims.out = j.at("dims").at("out").get<std::size_t>();
    c.identity_encoder = j.at("identity_encoder").get<bool>();
    c.negatives.max_negatives = j.at("max_negatives").get<std::size_t>();
    c.negatives.min_nodes = j.at("min_nodes_for_sampling").get<std::size_t>();
    return c;
}

void cmd_train(const TrainOpts& o, Run& run) {
    const auto g = load_graph(run.input("graph.json"));
    std::string picked;
    const auto views = load_views(run, o.views, &picked);
    if (views.num_nodes() != g.num_nodes()) {
        throw ShapeError("views have " + std::to_string(views.num_nodes()) + " rows but the graph has " +
                         std::to_string(g.num_nodes()) + " nodes");
    }

    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.learning_rate = o.lr;
    cfg.lambda = o.lambda;
    cfg.tau = o.tau;
    cfg.seed = run.seed;
    cfg.weight_decay = o.weight_decay;
    cfg.dims = {views.dim(), o.hidden, o.out_dim};
    cfg.identity_encoder = o.identity_encoder;
    cfg.negatives.max_negatives = o.max_negatives;

    const auto result = train(g, views, cfg);
    if (!cfg.identity_encoder) {
        const fs::path prefix = run.out / "checkpoint";
        run.output("checkpoint.W1.emb1");
        run.output("checkpoint.W2.emb1");
        run.output("checkpoint.json");
        save_checkpoint(result.params, {cfg.dims, cfg.seed, cfg.epochs}, prefix);
    }
    write_text(run.output("checkpoint.train.json"), train_config_to_json(cfg, picked).dump(2) + "\n");

    MetricsReport report;
    report.loss_history = result.history;
    run.output("metrics.json");
    run.output("metrics.csv");
    emit_report(report, run.out);

    const auto& last = result.history.back();
    run.stats = {{"views", picked},
                 {"lambda", cfg.lambda},
                 {"tau", cfg.tau},
                 {"final_l_total", last.l_total},
                 {"final_l_sdm", last.l_sdm},
                 {"final_l_scr", last.l_scr}};
    *run.log << "train: " << result.history.size() << " epochs on " << picked << " views, l_total "
             << last.l_total << " (sdm " << last.l_sdm << ", scr " << last.l_scr << ")\n";
}

// ---- eval ---------------------------------------------------------------------------

struct EvalOpts {
    std::vector<std::string> suite{"all"};
    std::size_t trials = 10000;
    double sigma = 1.0;
    double train_frac = 0.2;
    std::size_t repeats = 5;
    bool identity_encoder = false;
    std::string views = "auto";
    double p_edge_drop = 0.2;
    double p_feat_mask = 0.2;

    void bind(Bound& b) {
        b.opt("suite", suite, "probe | ablation | spectral | variance | orthogonality | all (repeatable)")
            ->check(CLI::IsMember({"probe", "ablation", "spectral", "variance", "orthogonality", "all"}));
        b.opt("trials", trials, "Trials for the variance experiment")->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
        b.opt("sigma", sigma, "Residual std for the variance experiment")->check(CLI::NonNegativeNumber);
        b.opt("train-frac", train_frac, "Probe training fraction")->check(CLI::Range(0.0, 1.0));
        b.opt("repeats", repeats, "Probe repeats")->check(CLI::PositiveNumber);
        b.flag("identity-encoder", identity_encoder, "Evaluate raw views without a checkpoint");
        b.opt("views", views, "auto | planted | text")->check(CLI::IsMember({"auto", "planted", "text"}));
        b.opt("p-edge-drop", p_edge_drop, "Baseline edge-drop probability")->check(CLI::Range(0.0, 1.0));
        b.opt("p-feat-mask", p_feat_mask, "Baseline feature-mask probability")->check(CLI::Range(0.0, 1.0));
    }

    bool wants(const std::string& name) const {
        return std::find(suite.begin(), suite.end(), name) != suite.end() ||
               std::find(suite.begin(), suite.end(), "all") != suite.end();
    }
};

void cmd_eval(const EvalOpts& o, Run& run) {
    const auto g = load_graph(run.input("graph.json"));
    std::string picked;
    const auto views = load_views(run, o.views, &picked);
    if (views.num_nodes() != g.num_nodes()) throw ShapeError("views and graph disagree on node count");

    TrainConfig cfg;
    EncoderParams params;
    const fs::path train_json = run.in / "checkpoint.train.json";
    if (fs::exists(train_json)) {
        run.inputs.push_back(train_json.string());
        cfg = train_config_from_json(read_json_file(train_json));
    } else if (!o.identity_encoder) {
        throw std::runtime_error("missing input " + train_json.string() + " (train first or pass --identity-encoder)");
    }
    if (o.identity_encoder) cfg.identity_encoder = true;
    if (!cfg.identity_encoder) {
        run.input("checkpoint.W1.emb1");
        run.input("checkpoint.W2.emb1");
        run.input("checkpoint.json");
        params = load_checkpoint(run.in / "checkpoint");
        if (params.dims().in != views.dim()) throw ShapeError("checkpoint input dim does not match the views");
    } else {
        cfg.dims.in = views.dim();
    }

    MetricsReport report;
    const fs::path prior = run.in / "metrics.json";
    if (fs::exists(prior)) report.loss_history = read_loss_history(prior);

    ProbeConfig probe;
    probe.train_frac = o.train_frac;
    probe.repeats = o.repeats;
    probe.seed = run.seed;
    const NormalizedAdjacency adj(g);
    const auto labels = g.labels();

    if (o.wants("probe")) {
        report.probe.emplace_back("sdm_scr", linear_probe(encode(cfg, params, adj, views.ori), labels, probe));
        report.probe.emplace_back("sdm_scr_rel", linear_probe(encode(cfg, params, adj, views.rel), labels, probe));
        report.probe.emplace_back("identity_ori", linear_probe(views.ori, labels, probe));
    }
    if (o.wants("ablation")) report.ablation = subspace_ablation(views, labels, probe);
    if (o.wants("spectral")) {
        std::vector<std::pair<std::string, const Matrix*>> signals{
            {"x_ori", &views.ori}, {"x_rel", &views.rel}, {"x_irr", &views.irr}};
        Matrix z_rel;
        if (!cfg.identity_encoder) {
            z_rel = encode(cfg, params, adj, views.rel);
            signals.emplace_back("z_rel", &z_rel);
        }
        report.spectral = spectral_report(g, signals);
    }
    if (o.wants("variance")) report.variance = variance_reduction_experiment(g, o.sigma, o.trials, run.seed);
    if (o.wants("orthogonality")) {
        report.orthogonality =
            orthogonality_comparison(g, views, cfg, params, {o.p_edge_drop, o.p_feat_mask}, run.seed);
    }

    run.output("metrics.json");
    run.output("metrics.csv");
    emit_report(report, run.out);

    json summary = json::object();
    for (const auto& [name, p] : report.probe) summary[name] = p.accuracy;
    run.stats = {{"views", picked}, {"probe_accuracy", summary}};
    *run.log << "eval: wrote " << (run.out / "metrics.json").string() << "\n";
    for (const auto& [name, p] : report.probe) {
        *run.log << "  probe " << name << ": " << p.accuracy << " +/- " << p.std << "\n";
    }
}

// ---- dispatch ---------------------------------------------------------------------------

void write_manifest(const Run& run, const json& config, double seconds) {
    const json manifest = {{"command", run.command},
                           {"config", config},
                           {"inputs", run.inputs},
                           {"outputs", run.outputs},
                           {"seed", run.seed},
                           {"tool_version", SDMSCR_VERSION},
                           {"duration_seconds", seconds},
                           {"stats", run.stats}};
    write_text(run.out / "manifest.json", manifest.dump(2) + "\n");
}

json load_config(const std::string& path) {
    json doc = read_json_file(path);
    if (!doc.is_object()) throw UsageError(path + ": config must be a JSON object");
    if (doc.contains("command") && doc.contains("config")) doc = doc["config"];
    return doc;
}

}  // namespace

int run(const std::vector<std::string>& args, const Io& io) {
    std::ostream& out = io.out ? *io.out : std::cout;
    std::ostream& err = io.err ? *io.err : std::cerr;
    const Getenv getenv = io.getenv ? io.getenv : Getenv([](const char* k) { return std::getenv(k); });

    CLI::App app{"Semantic decoupling and structural consistency pipeline", "sdmscr"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SDMSCR_VERSION);

    struct Sub {
        CLI::App* app;
        std::unique_ptr<Bound> bound;
        Common common;
    };
    auto make_sub = [&](const std::string& name, const std::string& desc) {
        auto s = std::make_unique<Sub>();
        s->app = app.add_subcommand(name, desc);
        s->bound = std::make_unique<Bound>(s->app);
        s->common.bind(s->app, *s->bound);
        return s;
    };

    GenOpts gen;
    DecoupleOpts dec;
    EmbedOpts emb;
    TrainOpts trn;
    EvalOpts evl;
    auto s_gen = make_sub("gen", "Generate a synthetic text-attributed graph and planted views");
    auto s_dec = make_sub("decouple", "Split node texts into relevant and irrelevant parts");
    auto s_emb = make_sub("embed", "Hash-embed decoupled texts into three views");
    auto s_trn = make_sub("train", "Train the encoder");
    auto s_evl = make_sub("eval", "Probe, ablation, spectral, variance and orthogonality reports");
    gen.bind(*s_gen->bound);
    dec.bind(*s_dec->bound);
    emb.bind(*s_emb->bound);
    trn.bind(*s_trn->bound);
    evl.bind(*s_evl->bound);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    Sub* chosen = nullptr;
    for (Sub* s : {s_gen.get(), s_dec.get(), s_emb.get(), s_trn.get(), s_evl.get()}) {
        if (s->app->parsed()) chosen = s;
    }

    const auto started = std::chrono::steady_clock::now();
    try {
        if (!chosen->common.config.empty()) chosen->bound->apply_config(load_config(chosen->common.config));
        Common& c = chosen->common;
        Run run;
        run.command = chosen->app->get_name();
        run.out = c.out;
        run.in = c.in.empty() ? run.out : fs::path(c.in);
        run.seed = c.seed;
        run.log = &out;
        fs::create_directories(run.out);

        if (chosen == s_gen.get()) {
            cmd_gen(gen, run);
        } else if (chosen == s_dec.get()) {
            cmd_decouple(dec, run, getenv);
        } else if (chosen == s_emb.get()) {
            cmd_embed(emb, run);
        } else if (chosen == s_trn.get()) {
            cmd_train(trn, run);
        } else {
            cmd_eval(evl, run);
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write_manifest(run, chosen->bound->resolved(), seconds);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace sdmscr::cli
