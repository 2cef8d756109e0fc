#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "modalbound/modality.hpp"
#include "modalbound/types.hpp"

namespace modalbound {

// Known generating mechanism: latent z ~ N(0, I), modality view
// x^(k) = W_k z + noise_sigma * eps_k, label = index of the nearest class
// center (Euclidean) in latent space. The reference composite h*∘g* is the
// clipped-hinge head with threshold `bayes_threshold` on the latent distance
// weighted by `latent_metric`.
struct GroundTruth {
  std::vector<MatrixXd> mixing_matrices;  // dims[k] x latent_dim
  int latent_dim = 0;
  double noise_sigma = 0.0;
  double bayes_threshold = 0.0;
  VectorXd latent_metric;  // diagonal, length latent_dim
  MatrixXd class_centers;  // num_classes x latent_dim

  int num_classes() const { return static_cast<int>(class_centers.rows()); }
  void validate(const ModalityLayout& layout) const;
};

enum class Mixing { random, identity };

struct GeneratorParams {
  int latent_dim = 2;
  double noise_sigma = 0.5;
  int num_classes = 2;
  double center_scale = 1.0;
  Mixing mixing = Mixing::random;
  double mixing_scale = 1.0;
  std::uint64_t mixing_seed = 0;
  std::optional<VectorXd> latent_metric;  // defaults to all ones
  double bayes_threshold = 1.0;
};

GroundTruth make_ground_truth(const ModalityLayout& layout, const GeneratorParams& params);

struct Dataset {
  ModalityLayout layout;
  std::vector<MultimodalSample> samples;
  std::optional<GroundTruth> ground_truth;
  std::uint64_t seed = 0;
  int num_classes = 2;
  std::optional<MatrixXd> latents;  // n x latent_dim, present for generated data

  Index size() const { return static_cast<Index>(samples.size()); }
  void validate() const;
};

// Deterministic in (layout, n, gt, seed). Sample i draws only from sub-stream
// i, so the first n samples of a larger draw equal the n-sample draw.
Dataset generate_dataset(const ModalityLayout& layout, Index n, const GroundTruth& gt,
                         std::uint64_t seed);

// +1 for a similar pair (equal labels), -1 otherwise.
constexpr int pair_label(int yi, int yj) noexcept { return yi == yj ? 1 : -1; }

// Row i holds the flattened sample i, projected onto `mask` when given.
MatrixXd feature_matrix(const Dataset& data, const ModalitySet* mask = nullptr);
std::vector<int> labels_of(const Dataset& data);

// Splits modality k (1-based, dim >= 2) into two sub-modalities of sizes
// ceil(d/2) and floor(d/2). Data generated under the split layout has the
// same flattened features as under the original one.
struct SplitResult {
  ModalityLayout layout;
  GroundTruth ground_truth;
};
SplitResult split_modality(const ModalityLayout& layout, const GroundTruth& gt, int modality);

}  // namespace modalbound
