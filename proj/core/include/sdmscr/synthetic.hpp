#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sdmscr/embedding.hpp"
#include "sdmscr/graph.hpp"
#include "sdmscr/matrix.hpp"

namespace sdmscr {

struct SbmConfig {
    std::size_t num_classes = 3;
    std::size_t nodes_per_class = 100;
    double p_intra = 0.5;
    double q_inter = 0.05;
    std::uint64_t seed = 0;
    bool heterophily = false;  // permits q > p

    void validate() const;
};

/// Keyword lists per class plus a shared pool of noise sentences.
struct TextLexicon {
    std::vector<std::vector<std::string>> class_keywords;
    std::vector<std::string> noise_sentences;

    /// Union of all class keywords, in class order.
    std::vector<std::string> all_keywords() const;
};

/// Product-review flavored lexicon for up to 8 classes.
TextLexicon default_lexicon(std::size_t num_classes);

/// One text per node: a sentence built around one of its class keywords and
/// one noise sentence, in seeded random order.
std::vector<std::string> generate_texts(const std::vector<int>& labels, const TextLexicon& lexicon,
                                        std::uint64_t seed);

/// Block-assigned labels; each intra-class pair is an edge with probability
/// p, each inter-class pair with probability q. Texts come from
/// generate_texts with `lexicon`.
TextAttributedGraph generate_sbm(const SbmConfig& cfg, const TextLexicon& lexicon);
TextAttributedGraph generate_sbm(const SbmConfig& cfg);

/// Circulant graph: node i linked to i±1..i±k/2 (mod n). k must be even and < n.
TextAttributedGraph generate_ring_lattice(std::size_t n, std::size_t k);

struct PlantConfig {
    std::size_t dim = 64;
    double sigma_jitter = 0.05;
    double sigma_noise = 1.0;
    double sigma_eps = 0.3;
    double sigma_zeta = 0.3;
    double signal_scale = 1.0;  // prototype length; 0 removes the signal
    std::uint64_t seed = 0;
    double max_prototype_cos = 0.2;
    int max_prototype_resamples = 100;
};

/// Ground-truth parts of the three views: ori = s + n, rel = s + eps, irr = n + zeta.
struct PlantedDecomposition {
    Matrix prototypes;  // C x d, unit rows (times signal_scale)
    Matrix s;
    Matrix n;
    Matrix eps;
    Matrix zeta;
};

class PrototypeSamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::pair<PlantedDecomposition, ViewTriple> plant_views(const TextAttributedGraph& g,
                                                        const PlantConfig& cfg);

struct AugmentedView {
    Matrix x;
    std::vector<Edge> edges;
};

/// Drops each edge with p_edge_drop and zeroes each feature column with
/// p_feat_mask.
AugmentedView random_augment(const Matrix& x, const TextAttributedGraph& g, double p_edge_drop,
                             double p_feat_mask, std::uint64_t seed);

}  // namespace sdmscr
