#include "modalbound/dataset.hpp"

#include <string>

#include "modalbound/errors.hpp"
#include "modalbound/random.hpp"

namespace modalbound {

void GroundTruth::validate(const ModalityLayout& layout) const {
  if (latent_dim < 1) throw LayoutError("latent_dim must be >= 1");
  if (static_cast<int>(mixing_matrices.size()) != layout.num_modalities())
    throw LayoutError("need one mixing matrix per modality");
  for (int k = 1; k <= layout.num_modalities(); ++k) {
    const auto& w = mixing_matrices[static_cast<std::size_t>(k - 1)];
    if (w.rows() != layout.dim(k) || w.cols() != latent_dim)
      throw LayoutError("mixing matrix " + std::to_string(k) + " must be " +
                        std::to_string(layout.dim(k)) + " x " + std::to_string(latent_dim));
  }
  if (!(noise_sigma >= 0.0)) throw LayoutError("noise_sigma must be >= 0");
  if (latent_metric.size() != latent_dim) throw LayoutError("latent_metric length != latent_dim");
  if ((latent_metric.array() < 0.0).any()) throw LayoutError("latent_metric entries must be >= 0");
  if (class_centers.rows() < 1 || class_centers.cols() != latent_dim)
    throw LayoutError("class_centers must be C x latent_dim with C >= 1");
}

GroundTruth make_ground_truth(const ModalityLayout& layout, const GeneratorParams& params) {
  GroundTruth gt;
  gt.latent_dim = params.latent_dim;
  gt.noise_sigma = params.noise_sigma;
  gt.bayes_threshold = params.bayes_threshold;
  if (params.latent_dim < 1) throw LayoutError("latent_dim must be >= 1");
  if (params.num_classes < 1) throw LayoutError("num_classes must be >= 1");
  gt.latent_metric = params.latent_metric.value_or(VectorXd::Ones(params.latent_dim));

  if (params.mixing == Mixing::identity) {
    if (layout.total_dim() != params.latent_dim)
      throw LayoutError("identity mixing needs latent_dim == total_dim");
    const MatrixXd eye = MatrixXd::Identity(params.latent_dim, params.latent_dim);
    for (int k = 1; k <= layout.num_modalities(); ++k)
      gt.mixing_matrices.push_back(eye.middleRows(layout.offset(k), layout.dim(k)));
  } else {
    const double scale = params.mixing_scale / std::sqrt(static_cast<double>(params.latent_dim));
    for (int k = 1; k <= layout.num_modalities(); ++k) {
      Stream s(params.mixing_seed, {0x6d6978ULL, static_cast<std::uint64_t>(k)});
      MatrixXd w(layout.dim(k), params.latent_dim);
      for (Index c = 0; c < w.cols(); ++c)
        for (Index r = 0; r < w.rows(); ++r) w(r, c) = scale * s.normal();
      gt.mixing_matrices.push_back(std::move(w));
    }
  }

  // Centers at +-center_scale * e_j, alternating sign, cycling over axes.
  gt.class_centers = MatrixXd::Zero(params.num_classes, params.latent_dim);
  for (int c = 0; c < params.num_classes; ++c) {
    const int axis = (c / 2) % params.latent_dim;
    gt.class_centers(c, axis) = (c % 2 == 0 ? 1.0 : -1.0) * params.center_scale;
  }
  gt.validate(layout);
  return gt;
}

void Dataset::validate() const {
  for (const auto& x : samples) {
    check_conforms(x, layout);
    if (x.label < 0 || x.label >= num_classes)
      throw LayoutError("label " + std::to_string(x.label) + " outside label set [0, " +
                        std::to_string(num_classes) + ")");
  }
  if (ground_truth) ground_truth->validate(layout);
  if (latents && latents->rows() != size()) throw LayoutError("latents row count != n");
}

Dataset generate_dataset(const ModalityLayout& layout, Index n, const GroundTruth& gt,
                         std::uint64_t seed) {
  if (n < 2) throw SizeError("dataset needs n >= 2, got " + std::to_string(n));
  gt.validate(layout);

  Dataset data;
  data.layout = layout;
  data.ground_truth = gt;
  data.seed = seed;
  data.num_classes = gt.num_classes();
  data.samples.resize(static_cast<std::size_t>(n));
  MatrixXd latents(n, gt.latent_dim);

  for (Index i = 0; i < n; ++i) {
    Stream s(seed, {static_cast<std::uint64_t>(i)});
    const VectorXd z = s.normal_vector(gt.latent_dim);
    latents.row(i) = z.transpose();

    Index nearest = 0;
    (gt.class_centers.rowwise() - z.transpose()).rowwise().squaredNorm().minCoeff(&nearest);

    MultimodalSample& x = data.samples[static_cast<std::size_t>(i)];
    x.label = static_cast<int>(nearest);
    for (int k = 1; k <= layout.num_modalities(); ++k) {
      VectorXd view = gt.mixing_matrices[static_cast<std::size_t>(k - 1)] * z;
      if (gt.noise_sigma > 0.0) view += gt.noise_sigma * s.normal_vector(layout.dim(k));
      x.features.push_back(std::move(view));
      x.present.push_back(true);
    }
  }
  data.latents = std::move(latents);
  return data;
}

MatrixXd feature_matrix(const Dataset& data, const ModalitySet* mask) {
  MatrixXd out(data.size(), data.layout.total_dim());
  for (Index i = 0; i < data.size(); ++i) {
    const auto& x = data.samples[static_cast<std::size_t>(i)];
    out.row(i) = (mask ? flatten(project_modality(x, *mask)) : flatten(x)).transpose();
  }
  return out;
}

std::vector<int> labels_of(const Dataset& data) {
  std::vector<int> y;
  y.reserve(data.samples.size());
  for (const auto& x : data.samples) y.push_back(x.label);
  return y;
}

SplitResult split_modality(const ModalityLayout& layout, const GroundTruth& gt, int modality) {
  const int d = layout.dim(modality);
  if (d < 2) throw LayoutError("cannot split a modality of dimension 1");
  std::vector<int> dims;
  std::vector<MatrixXd> mixing;
  for (int k = 1; k <= layout.num_modalities(); ++k) {
    const auto& w = gt.mixing_matrices.at(static_cast<std::size_t>(k - 1));
    if (k == modality) {
      const int first = (d + 1) / 2;
      dims.push_back(first);
      dims.push_back(d - first);
      mixing.push_back(w.topRows(first));
      mixing.push_back(w.bottomRows(d - first));
    } else {
      dims.push_back(layout.dim(k));
      mixing.push_back(w);
    }
  }
  SplitResult out{ModalityLayout(std::move(dims)), gt};
  out.ground_truth.mixing_matrices = std::move(mixing);
  return out;
}

}  // namespace modalbound
