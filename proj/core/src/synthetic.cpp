#include "sdmscr/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "sdmscr/random.hpp"

namespace sdmscr {

namespace {

enum Stream : std::uint64_t {
    kEdges = 1,
    kTexts,
    kPrototypes,
    kJitter,
    kNoise,
    kEps,
    kZeta,
    kEdgeDrop,
    kFeatMask,
};

const std::vector<std::vector<std::string>> kClassKeywords = {
    {"camera", "lens", "tripod", "shutter", "flash", "aperture"},
    {"novel", "chapter", "author", "paperback", "hardcover", "plot"},
    {"blender", "skillet", "kettle", "toaster", "saucepan", "whisk"},
    {"headphones", "speaker", "earbuds", "amplifier", "subwoofer", "microphone"},
    {"console", "controller", "joystick", "gamepad", "cartridge", "multiplayer"},
    {"shovel", "hose", "seeds", "planter", "trowel", "fertilizer"},
    {"dumbbell", "treadmill", "yoga", "kettlebell", "barbell", "rowing"},
    {"puzzle", "doll", "lego", "plush", "marbles", "kite"},
};

const std::vector<std::string> kSignalTemplates = {
    "The {} works exactly as described",
    "I use this {} every single day",
    "Great {} for the price",
    "The {} feels solid and well made",
    "This {} replaced my old one",
    "The {} arrived in perfect condition",
};

const std::vector<std::string> kNoiseSentences = {
    "So much fun to open on a rainy afternoon with the whole family",
    "Shipping took a while but the seller was friendly and answered every message",
    "My neighbor asked where I got it and I could not remember the store",
    "The box was slightly dented when the courier left it at the front door",
    "I bought it as a birthday gift for my cousin who lives across town",
    "Honestly I was in a bad mood that week so take this review with a grain of salt",
    "We had a long discussion about it over dinner with some old friends",
    "The packaging had way too much plastic and cardboard for my liking",
    "It reminds me of something my grandmother used to keep in her attic",
    "The customer service line played the same song for twenty minutes",
    "I ordered it late at night after a long and tiring shift at work",
    "Our dog barked at the delivery truck for a good ten minutes",
    "Prices seem to change every week so watch out for a good sale",
    "I wrote this review while waiting for the bus in the morning",
    "My sister still thinks I spend too much money on online shopping",
    "The weather was terrible on the day it finally showed up",
    "There was a handwritten thank you note inside which was a nice touch",
    "I almost returned it because of the color of the wrapping paper",
    "Everyone in the office had an opinion about it during lunch",
    "It took three attempts before the tracking number worked at all",
};

std::string fill_template(const std::string& tmpl, const std::string& word) {
    std::string out = tmpl;
    out.replace(out.find("{}"), 2, word);
    return out;
}

}  // namespace

void SbmConfig::validate() const {
    auto prob_ok = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
    if (!prob_ok(p_intra) || !prob_ok(q_inter)) {
        throw std::invalid_argument("SBM probabilities must lie in [0, 1]");
    }
    if (q_inter > p_intra && !heterophily) {
        throw std::invalid_argument("q > p requires heterophily mode");
    }
    if (num_classes < 1 || nodes_per_class < 1) {
        throw std::invalid_argument("SBM needs at least one class and one node per class");
    }
}

std::vector<std::string> TextLexicon::all_keywords() const {
    std::vector<std::string> all;
    for (const auto& kws : class_keywords) all.insert(all.end(), kws.begin(), kws.end());
    return all;
}

TextLexicon default_lexicon(std::size_t num_classes) {
    if (num_classes > kClassKeywords.size()) {
        throw std::invalid_argument("default lexicon covers at most " +
                                    std::to_string(kClassKeywords.size()) + " classes");
    }
    TextLexicon lex;
    lex.class_keywords.assign(kClassKeywords.begin(),
                              kClassKeywords.begin() + static_cast<std::ptrdiff_t>(num_classes));
    lex.noise_sentences = kNoiseSentences;
    return lex;
}

std::vector<std::string> generate_texts(const std::vector<int>& labels, const TextLexicon& lexicon,
                                        std::uint64_t seed) {
    if (lexicon.noise_sentences.empty()) throw std::invalid_argument("noise sentence pool is empty");
    for (const auto& kws : lexicon.class_keywords) {
        if (kws.empty()) throw std::invalid_argument("every class needs at least one keyword");
    }
    Rng rng = make_rng(seed, kTexts);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

    std::vector<std::string> texts;
    texts.reserve(labels.size());
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= lexicon.class_keywords.size()) {
            throw std::invalid_argument("label without a lexicon entry: " + std::to_string(label));
        }
        const auto& kws = lexicon.class_keywords[static_cast<std::size_t>(label)];
        const std::string signal =
            fill_template(kSignalTemplates[pick(kSignalTemplates.size())], kws[pick(kws.size())]) + ".";
        const std::string noise = lexicon.noise_sentences[pick(lexicon.noise_sentences.size())] + ".";
        texts.push_back(pick(2) == 0 ? signal + " " + noise : noise + " " + signal);
    }
    return texts;
}

TextAttributedGraph generate_sbm(const SbmConfig& cfg, const TextLexicon& lexicon) {
    cfg.validate();
    const std::size_t n = cfg.num_classes * cfg.nodes_per_class;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i / cfg.nodes_per_class);

    Rng rng = make_rng(cfg.seed, kEdges);
    std::bernoulli_distribution intra(cfg.p_intra), inter(cfg.q_inter);
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            const bool linked = labels[u] == labels[v] ? intra(rng) : inter(rng);
            if (linked) edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
        }
    }
    auto texts = generate_texts(labels, lexicon, cfg.seed);
    return build_graph(n, std::move(edges), std::move(texts), std::move(labels), cfg.num_classes);
}

TextAttributedGraph generate_sbm(const SbmConfig& cfg) {
    return generate_sbm(cfg, default_lexicon(cfg.num_classes));
}

TextAttributedGraph generate_ring_lattice(std::size_t n, std::size_t k) {
    if (k % 2 != 0 || k >= n) throw std::invalid_argument("ring lattice needs even k < n");
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t off = 1; off <= k / 2; ++off) {
            edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>((i + off) % n)});
        }
    }
    return build_graph(n, std::move(edges), std::vector<std::string>(n), std::vector<int>(n, 0), 1);
}

std::pair<PlantedDecomposition, ViewTriple> plant_views(const TextAttributedGraph& g,
                                                        const PlantConfig& cfg) {
    const std::size_t classes = g.num_classes();
    const std::size_t d = cfg.dim;
    const std::size_t n = g.num_nodes();
    if (d < classes) throw std::invalid_argument("plant_views: dim must be >= number of classes");

    PlantedDecomposition pd;
    pd.prototypes = Matrix(classes, d);
    {
        Rng rng = make_rng(cfg.seed, kPrototypes);
        std::normal_distribution<double> normal;
        int resamples = 0;
        std::vector<double> cand(d);
        for (std::size_t c = 0; c < classes;) {
            for (double& x : cand) x = normal(rng);
            const double len = norm2(cand);
            for (double& x : cand) x /= len;
            bool ok = true;
            for (std::size_t prev = 0; prev < c && ok; ++prev) {
                ok = std::abs(dot(cand, pd.prototypes.row(prev))) <= cfg.max_prototype_cos;
            }
            if (!ok) {
                if (++resamples > cfg.max_prototype_resamples) {
                    throw PrototypeSamplingError("could not draw near-orthogonal prototypes in " +
                                                 std::to_string(d) + " dims");
                }
                continue;
            }
            std::copy(cand.begin(), cand.end(), pd.prototypes.row(c).begin());
            ++c;
        }
    }

    auto gaussian = [&](Stream stream, double sigma) {
        Matrix m(n, d);
        if (sigma == 0.0) return m;
        Rng rng = make_rng(cfg.seed, stream);
        std::normal_distribution<double> normal(0.0, sigma);
        for (double& x : m.values()) x = normal(rng);
        return m;
    };

    pd.s = gaussian(kJitter, cfg.sigma_jitter);
    for (std::size_t i = 0; i < n; ++i) {
        auto mu = pd.prototypes.row(static_cast<std::size_t>(g.labels()[i]));
        auto row = pd.s.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] += cfg.signal_scale * mu[j];
    }
    for (double& x : pd.prototypes.values()) x *= cfg.signal_scale;
    pd.n = gaussian(kNoise, cfg.sigma_noise);
    pd.eps = gaussian(kEps, cfg.sigma_eps);
    pd.zeta = gaussian(kZeta, cfg.sigma_zeta);

    ViewTriple views{pd.s + pd.n, pd.s + pd.eps, pd.n + pd.zeta};
    return {std::move(pd), std::move(views)};
}

AugmentedView random_augment(const Matrix& x, const TextAttributedGraph& g, double p_edge_drop,
                             double p_feat_mask, std::uint64_t seed) {
    auto prob_ok = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
    if (!prob_ok(p_edge_drop) || !prob_ok(p_feat_mask)) {
        throw std::invalid_argument("augmentation probabilities must lie in [0, 1]");
    }
    AugmentedView out{x, {}};
    Rng edge_rng = make_rng(seed, kEdgeDrop);
    std::bernoulli_distribution drop(p_edge_drop);
    for (const auto& e : g.edges()) {
        if (!drop(edge_rng)) out.edges.push_back(e);
    }
    Rng mask_rng = make_rng(seed, kFeatMask);
    std::bernoulli_distribution mask(p_feat_mask);
    for (std::size_t c = 0; c < x.cols(); ++c) {
        if (!mask(mask_rng)) continue;
        for (std::size_t r = 0; r < x.rows(); ++r) out.x(r, c) = 0.0;
    }
    return out;
}

}  // namespace sdmscr
