#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdmscr/embedding.hpp"
#include "sdmscr/encoder.hpp"
#include "sdmscr/graph.hpp"
#include "sdmscr/matrix.hpp"
#include "sdmscr/objectives.hpp"
#include "sdmscr/trainer.hpp"

namespace sdmscr {

// ---- linear probe ----------------------------------------------------------------

struct ProbeConfig {
    double train_frac = 0.2;
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
    std::size_t iterations = 500;
    double learning_rate = 0.1;
    double l2 = 1e-4;
};

struct ProbeResult {
    double accuracy = 0.0;  // mean over repeats
    double std = 0.0;
    std::vector<double> per_repeat;
    double train_frac = 0.0;
    std::size_t repeats = 0;
    std::uint64_t seed = 0;
};

/// Multinomial logistic regression on frozen features over `repeats`
/// stratified random splits. Features are standardized with train-split
/// statistics; training is full-batch gradient descent from zero weights.
ProbeResult linear_probe(const Matrix& z, std::span<const int> labels, const ProbeConfig& cfg);

struct AblationResult {
    ProbeResult ori;
    ProbeResult rel;
    ProbeResult irr;
};

/// Probes each raw view (identity encoder).
AblationResult subspace_ablation(const ViewTriple& views, std::span<const int> labels,
                                 const ProbeConfig& cfg);

// ---- spectral ----------------------------------------------------------------------

inline constexpr std::size_t kDenseEigenLimit = 2000;

/// L = I − Â as a dense matrix.
Matrix dense_laplacian(const TextAttributedGraph& g);

struct EigenDecomposition {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column k pairs with values[k]
};

/// Cyclic Jacobi rotations on a symmetric matrix until the off-diagonal
/// Frobenius norm drops below `tol`.
EigenDecomposition jacobi_eigen(Matrix a, double tol = 1e-10, std::size_t max_sweeps = 100);

EigenDecomposition laplacian_eigen(const TextAttributedGraph& g);

/// fᵀLf / fᵀf; throws on a zero vector.
double rayleigh(const Matrix& laplacian, std::span<const double> f);
/// Same quotient with L = I − Â applied sparsely.
double rayleigh(const NormalizedAdjacency& adj, std::span<const double> f);

/// Mean Rayleigh quotient over the non-zero columns of x.
double mean_column_rayleigh(const NormalizedAdjacency& adj, const Matrix& x);

/// Share of ‖f‖² carried by the ⌈N/4⌉ lowest-frequency eigenvectors.
double low_freq_energy_fraction(const EigenDecomposition& basis, std::span<const double> f);

struct SignalSpectrum {
    std::string name;
    double mean_rayleigh = 0.0;
    double low_freq_fraction = 0.0;
    double high_freq_fraction = 0.0;
};

struct SpectralReport {
    std::vector<double> eigenvalues;
    std::vector<SignalSpectrum> signals;
};

/// Column-averaged spectrum of each named signal matrix.
SpectralReport spectral_report(const TextAttributedGraph& g,
                               const std::vector<std::pair<std::string, const Matrix*>>& signals);

// ---- variance reduction -----------------------------------------------------------------

struct VarianceRow {
    std::size_t k = 0;      // neighborhood size
    std::size_t nodes = 0;  // nodes with that degree
    double empirical = 0.0;
    double predicted = 0.0;  // σ²/k
};

/// Draws iid N(0, σ²) residuals per node per trial and measures, per node, the
/// variance across trials of its neighborhood mean; averaged per degree.
std::vector<VarianceRow> variance_reduction_experiment(const TextAttributedGraph& g, double sigma,
                                                       std::size_t trials, std::uint64_t seed);

// ---- orthogonality ------------------------------------------------------------------------

struct OrthogonalityComparison {
    double metric_sdm = 0.0;
    double metric_random_aug = 0.0;
};

/// metric_sdm: orthogonality of the SDM-trained encodings of rel and irr.
/// metric_random_aug: the same metric between two random augmentations of
/// ori encoded by a baseline trained with the same config.
OrthogonalityComparison orthogonality_comparison(const TextAttributedGraph& g, const ViewTriple& views,
                                                 const TrainConfig& cfg, const EncoderParams& sdm_params,
                                                 const BaselineConfig& aug, std::uint64_t seed);

// ---- reports ---------------------------------------------------------------------------------

struct MetricsReport {
    std::vector<std::pair<std::string, ProbeResult>> probe;
    std::optional<AblationResult> ablation;
    std::optional<SpectralReport> spectral;
    std::vector<VarianceRow> variance;
    std::optional<OrthogonalityComparison> orthogonality;
    std::vector<LossReport> loss_history;
};

std::string metrics_to_json(const MetricsReport& report);
/// Flattened scalars as "metric,name,value" lines, header first.
std::string metrics_to_csv(const MetricsReport& report);

/// Writes metrics.json and metrics.csv into `dir`, replacing existing files.
void emit_report(const MetricsReport& report, const std::filesystem::path& dir);

/// Loss history from a metrics.json; empty if the file is missing.
std::vector<LossReport> read_loss_history(const std::filesystem::path& metrics_json);

}  // namespace sdmscr
