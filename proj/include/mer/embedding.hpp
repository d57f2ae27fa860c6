#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mer/container.hpp"
#include "mer/dsp.hpp"

namespace mer {

struct EmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeMismatch : EmbeddingError {
  using EmbeddingError::EmbeddingError;
};
struct MissingTensor : EmbeddingError {
  using EmbeddingError::EmbeddingError;
};
struct EmptySequence : EmbeddingError {
  using EmbeddingError::EmbeddingError;
};

enum class LayerKind {
  conv2d,
  batchnorm_inference,
  relu,
  maxpool2d,
  adaptive_maxpool2d,
  global_maxpool,
  flatten,
  dense,
};

struct LayerSpec {
  LayerKind kind;
  std::string name;  // parameter key prefix for parameterized layers
  // conv2d
  int kernel_h = 0, kernel_w = 0;
  int in_channels = 0, out_channels = 0;
  // maxpool2d
  int pool_h = 0, pool_w = 0;
  // adaptive_maxpool2d: output grid
  int target_h = 0, target_w = 0;
  // dense
  int in_units = 0, out_units = 0;
};

struct NetworkDefinition {
  std::vector<LayerSpec> layers;
  int input_h = 0;  // n_mels
  int input_w = 0;  // n_frames
  int output_dim = 0;
};

/// Propagates [h, w, channels] (or flat units) through the layer list and
/// returns the final flat dimension. Throws ShapeMismatch on inconsistency.
int propagate_shape(const NetworkDefinition& def);

enum class WeightProvenance { imported, random };

struct WeightBundle {
  TensorContainer tensors;
  WeightProvenance provenance = WeightProvenance::random;
  uint64_t seed = 0;
};

/// Immutable network + weights, ready for forward().
struct BoundModel {
  NetworkDefinition def;
  WeightBundle weights;
};

/// Embedding architecture per the upstream audio subnetwork: four blocks of
/// two 3x3 convs (64,64 | 128,128 | 256,256 | 512,512), each conv followed
/// by batchnorm and ReLU, 2x2 maxpool after blocks 1-3. Final stage is a
/// global spatial maxpool (512) or a pool to a 4x3 grid then flatten (6144).
NetworkDefinition build_l3net(int embedding_size = 512, int n_mels = 256,
                              int n_frames = 199);

/// VGG-style stack on 96x64 log-mel patches ending in dense 4096/4096/128.
NetworkDefinition build_vggish();

/// Binds weights from a container file, or fills them deterministically from
/// a seed (kernels uniform(-0.05, 0.05), batchnorm = identity).
BoundModel load_weights(const NetworkDefinition& def, const std::string& container_path);
BoundModel load_weights(const NetworkDefinition& def, uint64_t random_seed);

/// Single-window inference: mel [input_h x input_w] -> output_dim vector.
Eigen::VectorXd forward(const BoundModel& model, const Eigen::MatrixXd& mel);

struct EmbeddingSequence {
  std::vector<Eigen::VectorXd> frames;
  double hop_s = 0.0;
  std::string clip_id;
};

/// Windows the clip, runs the front-end and the network per window.
EmbeddingSequence embed_clip(const AudioClip& clip, const BoundModel& model,
                             const FrontendPreset& frontend, double hop_s);

enum class AggregateMethod { mean };

Eigen::VectorXd aggregate(const EmbeddingSequence& seq,
                          AggregateMethod method = AggregateMethod::mean);

/// Crops or edge-pads a mel matrix along time to exactly `frames` columns.
Eigen::MatrixXd fit_frames(const Eigen::MatrixXd& mel, int frames);

}  // namespace mer
