#include "mer/embedding.hpp"

#include <cmath>
#include <random>

namespace mer {
namespace {

LayerSpec conv(const std::string& name, int cin, int cout) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.name = name;
  s.kernel_h = s.kernel_w = 3;
  s.in_channels = cin;
  s.out_channels = cout;
  return s;
}

LayerSpec bn(const std::string& name, int channels) {
  LayerSpec s;
  s.kind = LayerKind::batchnorm_inference;
  s.name = name;
  s.in_channels = s.out_channels = channels;
  return s;
}

LayerSpec relu_layer() {
  LayerSpec s;
  s.kind = LayerKind::relu;
  return s;
}

LayerSpec pool2x2() {
  LayerSpec s;
  s.kind = LayerKind::maxpool2d;
  s.pool_h = s.pool_w = 2;
  return s;
}

LayerSpec dense(const std::string& name, int in, int out) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.name = name;
  s.in_units = in;
  s.out_units = out;
  return s;
}

// Feature map: channels x (h*w), spatial index r*w + c.
struct FeatureMap {
  int h = 0, w = 0;
  Eigen::MatrixXd data;
};

Eigen::MatrixXd im2col_same(const FeatureMap& in, int kh, int kw) {
  const int h = in.h, w = in.w;
  const int cin = int(in.data.rows());
  const int pad_h = (kh - 1) / 2, pad_w = (kw - 1) / 2;
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(cin * kh * kw, h * w);
  for (int c = 0; c < cin; ++c)
    for (int dr = 0; dr < kh; ++dr)
      for (int dc = 0; dc < kw; ++dc) {
        const int row = (c * kh + dr) * kw + dc;
        for (int r = 0; r < h; ++r) {
          const int sr = r + dr - pad_h;
          if (sr < 0 || sr >= h) continue;
          for (int cc = 0; cc < w; ++cc) {
            const int sc = cc + dc - pad_w;
            if (sc < 0 || sc >= w) continue;
            cols(row, r * w + cc) = in.data(c, sr * w + sc);
          }
        }
      }
  return cols;
}

Eigen::MatrixXd tensor_as_matrix(const TensorEntry& e, Eigen::Index rows,
                                 Eigen::Index cols, const std::string& name) {
  if (Eigen::Index(e.element_count()) != rows * cols)
    throw ShapeMismatch("tensor " + name + " has " +
                        std::to_string(e.element_count()) +
                        " elements, expected " + std::to_string(rows * cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const size_t i = size_t(r) * cols + c;
      m(r, c) = e.dtype == DType::f64 ? e.f64[i] : double(e.f32[i]);
    }
  return m;
}

Eigen::VectorXd tensor_as_vector(const TensorEntry& e, Eigen::Index n,
                                 const std::string& name) {
  return tensor_as_matrix(e, n, 1, name).col(0);
}

const TensorEntry& fetch(const TensorContainer& c, const std::string& name) {
  if (!c.has(name)) throw MissingTensor("missing tensor " + name);
  return c.at(name);
}

void check_dims(const TensorEntry& e, std::vector<uint32_t> expect,
                const std::string& name) {
  if (e.dims != expect) {
    std::string got, want;
    for (auto d : e.dims) got += std::to_string(d) + "x";
    for (auto d : expect) want += std::to_string(d) + "x";
    throw ShapeMismatch("tensor " + name + " shape " + got + " expected " + want);
  }
}

}  // namespace

NetworkDefinition build_l3net(int embedding_size, int n_mels, int n_frames) {
  NetworkDefinition def;
  def.input_h = n_mels;
  def.input_w = n_frames;
  const int widths[4] = {64, 128, 256, 512};
  int cin = 1;
  for (int b = 0; b < 4; ++b) {
    for (int i = 0; i < 2; ++i) {
      const std::string id =
          "conv" + std::to_string(b + 1) + "_" + std::to_string(i + 1);
      def.layers.push_back(conv(id, cin, widths[b]));
      def.layers.push_back(bn("bn" + id.substr(4), widths[b]));
      def.layers.push_back(relu_layer());
      cin = widths[b];
    }
    if (b < 3) def.layers.push_back(pool2x2());
  }
  if (embedding_size == 512) {
    LayerSpec g;
    g.kind = LayerKind::global_maxpool;
    def.layers.push_back(g);
  } else if (embedding_size == 6144) {
    LayerSpec a;
    a.kind = LayerKind::adaptive_maxpool2d;
    a.target_h = 4;
    a.target_w = 3;
    def.layers.push_back(a);
    LayerSpec f;
    f.kind = LayerKind::flatten;
    def.layers.push_back(f);
  } else {
    throw EmbeddingError("embedding_size must be 512 or 6144");
  }
  def.output_dim = embedding_size;
  propagate_shape(def);
  return def;
}

NetworkDefinition build_vggish() {
  NetworkDefinition def;
  def.input_h = 96;
  def.input_w = 64;
  auto block = [&](const std::string& id, int cin, int cout, int convs) {
    for (int i = 0; i < convs; ++i) {
      def.layers.push_back(
          conv(id + "_" + std::to_string(i + 1), i == 0 ? cin : cout, cout));
      def.layers.push_back(relu_layer());
    }
    def.layers.push_back(pool2x2());
  };
  block("conv1", 1, 64, 1);
  block("conv2", 64, 128, 1);
  block("conv3", 128, 256, 2);
  block("conv4", 256, 512, 2);
  LayerSpec f;
  f.kind = LayerKind::flatten;
  def.layers.push_back(f);
  def.layers.push_back(dense("fc1", 512 * 6 * 4, 4096));
  def.layers.push_back(relu_layer());
  def.layers.push_back(dense("fc2", 4096, 4096));
  def.layers.push_back(relu_layer());
  def.layers.push_back(dense("fc3", 4096, 128));
  def.output_dim = 128;
  propagate_shape(def);
  return def;
}

int propagate_shape(const NetworkDefinition& def) {
  int h = def.input_h, w = def.input_w, c = 1;
  bool flat = false;
  int units = 0;
  for (const auto& l : def.layers) {
    switch (l.kind) {
      case LayerKind::conv2d:
        if (flat || c != l.in_channels)
          throw ShapeMismatch("conv " + l.name + " expects " +
                              std::to_string(l.in_channels) + " channels, got " +
                              std::to_string(c));
        c = l.out_channels;
        break;
      case LayerKind::batchnorm_inference:
        if (flat || c != l.in_channels)
          throw ShapeMismatch("batchnorm " + l.name + " channel mismatch");
        break;
      case LayerKind::relu:
        break;
      case LayerKind::maxpool2d:
        if (flat) throw ShapeMismatch("maxpool on flat input");
        h /= l.pool_h;
        w /= l.pool_w;
        if (h < 1 || w < 1) throw ShapeMismatch("pooled spatial size below 1");
        break;
      case LayerKind::adaptive_maxpool2d:
        if (flat || h < l.target_h || w < l.target_w)
          throw ShapeMismatch("adaptive pool target exceeds input");
        h = l.target_h;
        w = l.target_w;
        break;
      case LayerKind::global_maxpool:
        if (flat) throw ShapeMismatch("global maxpool on flat input");
        flat = true;
        units = c;
        break;
      case LayerKind::flatten:
        if (flat) throw ShapeMismatch("double flatten");
        flat = true;
        units = c * h * w;
        break;
      case LayerKind::dense:
        if (!flat || units != l.in_units)
          throw ShapeMismatch("dense " + l.name + " expects " +
                              std::to_string(l.in_units) + " units, got " +
                              std::to_string(flat ? units : -1));
        units = l.out_units;
        break;
    }
  }
  if (!flat) throw ShapeMismatch("network does not terminate in a flat vector");
  if (units != def.output_dim)
    throw ShapeMismatch("network yields " + std::to_string(units) +
                        " units, declared output_dim " +
                        std::to_string(def.output_dim));
  return units;
}

BoundModel load_weights(const NetworkDefinition& def, uint64_t random_seed) {
  BoundModel model;
  model.def = def;
  model.weights.provenance = WeightProvenance::random;
  model.weights.seed = random_seed;
  std::mt19937_64 rng(random_seed);
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  auto fill = [&](const std::string& name, std::vector<uint32_t> dims,
                  double value, bool random) {
    size_t n = 1;
    for (auto d : dims) n *= d;
    std::vector<double> data(n);
    for (auto& v : data) v = random ? dist(rng) : value;
    model.weights.tensors.put_f64(name, std::move(dims), std::move(data));
  };
  for (const auto& l : def.layers) {
    if (l.kind == LayerKind::conv2d) {
      fill(l.name + ".kernel",
           {uint32_t(l.out_channels), uint32_t(l.in_channels),
            uint32_t(l.kernel_h), uint32_t(l.kernel_w)},
           0.0, true);
      fill(l.name + ".bias", {uint32_t(l.out_channels)}, 0.0, false);
    } else if (l.kind == LayerKind::batchnorm_inference) {
      fill(l.name + ".gamma", {uint32_t(l.in_channels)}, 1.0, false);
      fill(l.name + ".beta", {uint32_t(l.in_channels)}, 0.0, false);
      fill(l.name + ".moving_mean", {uint32_t(l.in_channels)}, 0.0, false);
      fill(l.name + ".moving_var", {uint32_t(l.in_channels)}, 1.0, false);
    } else if (l.kind == LayerKind::dense) {
      fill(l.name + ".kernel", {uint32_t(l.in_units), uint32_t(l.out_units)},
           0.0, true);
      fill(l.name + ".bias", {uint32_t(l.out_units)}, 0.0, false);
    }
  }
  return model;
}

BoundModel load_weights(const NetworkDefinition& def,
                        const std::string& container_path) {
  BoundModel model;
  model.def = def;
  model.weights.provenance = WeightProvenance::imported;
  model.weights.tensors = container_read(container_path);
  const auto& t = model.weights.tensors;
  for (const auto& l : def.layers) {
    if (l.kind == LayerKind::conv2d) {
      check_dims(fetch(t, l.name + ".kernel"),
                 {uint32_t(l.out_channels), uint32_t(l.in_channels),
                  uint32_t(l.kernel_h), uint32_t(l.kernel_w)},
                 l.name + ".kernel");
      check_dims(fetch(t, l.name + ".bias"), {uint32_t(l.out_channels)},
                 l.name + ".bias");
    } else if (l.kind == LayerKind::batchnorm_inference) {
      for (const char* part : {"gamma", "beta", "moving_mean", "moving_var"})
        check_dims(fetch(t, l.name + "." + std::string(part)),
                   {uint32_t(l.in_channels)}, l.name + "." + part);
      const auto& var = t.at(l.name + ".moving_var");
      for (size_t i = 0; i < var.element_count(); ++i) {
        const double v = var.dtype == DType::f64 ? var.f64[i] : var.f32[i];
        if (!(v > 0.0))
          throw EmbeddingError("non-positive moving_var in " + l.name);
      }
    } else if (l.kind == LayerKind::dense) {
      check_dims(fetch(t, l.name + ".kernel"),
                 {uint32_t(l.in_units), uint32_t(l.out_units)},
                 l.name + ".kernel");
      check_dims(fetch(t, l.name + ".bias"), {uint32_t(l.out_units)},
                 l.name + ".bias");
    }
  }
  return model;
}

Eigen::VectorXd forward(const BoundModel& model, const Eigen::MatrixXd& mel) {
  const auto& def = model.def;
  if (mel.rows() != def.input_h || mel.cols() != def.input_w)
    throw ShapeMismatch("input " + std::to_string(mel.rows()) + "x" +
                        std::to_string(mel.cols()) + ", model expects " +
                        std::to_string(def.input_h) + "x" +
                        std::to_string(def.input_w));
  const auto& t = model.weights.tensors;

  FeatureMap fm;
  fm.h = int(mel.rows());
  fm.w = int(mel.cols());
  fm.data.resize(1, fm.h * fm.w);
  for (int r = 0; r < fm.h; ++r)
    for (int c = 0; c < fm.w; ++c) fm.data(0, r * fm.w + c) = mel(r, c);

  bool flat = false;
  Eigen::VectorXd vec;

  for (const auto& l : def.layers) {
    switch (l.kind) {
      case LayerKind::conv2d: {
        Eigen::MatrixXd cols = im2col_same(fm, l.kernel_h, l.kernel_w);
        Eigen::MatrixXd kernel = tensor_as_matrix(
            t.at(l.name + ".kernel"), l.out_channels,
            l.in_channels * l.kernel_h * l.kernel_w, l.name + ".kernel");
        Eigen::VectorXd bias =
            tensor_as_vector(t.at(l.name + ".bias"), l.out_channels, l.name);
        fm.data = (kernel * cols).colwise() + bias;
        break;
      }
      case LayerKind::batchnorm_inference: {
        constexpr double eps = 1e-5;
        Eigen::VectorXd gamma =
            tensor_as_vector(t.at(l.name + ".gamma"), l.in_channels, l.name);
        Eigen::VectorXd beta =
            tensor_as_vector(t.at(l.name + ".beta"), l.in_channels, l.name);
        Eigen::VectorXd mean = tensor_as_vector(t.at(l.name + ".moving_mean"),
                                                l.in_channels, l.name);
        Eigen::VectorXd var = tensor_as_vector(t.at(l.name + ".moving_var"),
                                               l.in_channels, l.name);
        for (int c = 0; c < l.in_channels; ++c) {
          const double scale = gamma[c] / std::sqrt(var[c] + eps);
          fm.data.row(c) = (fm.data.row(c).array() - mean[c]) * scale + beta[c];
        }
        break;
      }
      case LayerKind::relu:
        if (flat)
          vec = vec.cwiseMax(0.0);
        else
          fm.data = fm.data.cwiseMax(0.0);
        break;
      case LayerKind::maxpool2d: {
        const int oh = fm.h / l.pool_h, ow = fm.w / l.pool_w;
        Eigen::MatrixXd out(fm.data.rows(), oh * ow);
        for (int r = 0; r < oh; ++r)
          for (int c = 0; c < ow; ++c) {
            Eigen::VectorXd m = fm.data.col((r * l.pool_h) * fm.w + c * l.pool_w);
            for (int dr = 0; dr < l.pool_h; ++dr)
              for (int dc = 0; dc < l.pool_w; ++dc)
                m = m.cwiseMax(fm.data.col((r * l.pool_h + dr) * fm.w +
                                           (c * l.pool_w + dc)));
            out.col(r * ow + c) = m;
          }
        fm.data = std::move(out);
        fm.h = oh;
        fm.w = ow;
        break;
      }
      case LayerKind::adaptive_maxpool2d: {
        const int oh = l.target_h, ow = l.target_w;
        Eigen::MatrixXd out(fm.data.rows(), oh * ow);
        for (int r = 0; r < oh; ++r) {
          const int r0 = r * fm.h / oh;
          const int r1 = (r + 1) * fm.h / oh + ((r + 1) * fm.h % oh ? 1 : 0);
          for (int c = 0; c < ow; ++c) {
            const int c0 = c * fm.w / ow;
            const int c1 = (c + 1) * fm.w / ow + ((c + 1) * fm.w % ow ? 1 : 0);
            Eigen::VectorXd m = fm.data.col(r0 * fm.w + c0);
            for (int sr = r0; sr < r1; ++sr)
              for (int sc = c0; sc < c1; ++sc)
                m = m.cwiseMax(fm.data.col(sr * fm.w + sc));
            out.col(r * ow + c) = m;
          }
        }
        fm.data = std::move(out);
        fm.h = oh;
        fm.w = ow;
        break;
      }
      case LayerKind::global_maxpool:
        vec = fm.data.rowwise().maxCoeff();
        flat = true;
        break;
      case LayerKind::flatten: {
        vec.resize(fm.data.rows() * fm.h * fm.w);
        Eigen::Index i = 0;
        for (Eigen::Index c = 0; c < fm.data.rows(); ++c)
          for (int s = 0; s < fm.h * fm.w; ++s) vec[i++] = fm.data(c, s);
        flat = true;
        break;
      }
      case LayerKind::dense: {
        Eigen::MatrixXd W = tensor_as_matrix(t.at(l.name + ".kernel"),
                                             l.in_units, l.out_units, l.name);
        Eigen::VectorXd b =
            tensor_as_vector(t.at(l.name + ".bias"), l.out_units, l.name);
        vec = W.transpose() * vec + b;
        break;
      }
    }
  }
  return vec;
}

Eigen::MatrixXd fit_frames(const Eigen::MatrixXd& mel, int frames) {
  if (mel.cols() == frames) return mel;
  Eigen::MatrixXd out(mel.rows(), frames);
  for (int c = 0; c < frames; ++c)
    out.col(c) = mel.col(std::min<Eigen::Index>(c, mel.cols() - 1));
  return out;
}

EmbeddingSequence embed_clip(const AudioClip& clip, const BoundModel& model,
                             const FrontendPreset& frontend, double hop_s) {
  AudioClip work = clip.sample_rate == frontend.sample_rate
                       ? clip
                       : resample(clip, frontend.sample_rate);
  EmbeddingSequence seq;
  seq.hop_s = hop_s;
  seq.clip_id = clip.source_id;
  for (const AudioClip& win : frame_windows(work, frontend.window_s, hop_s)) {
    MelSpectrogram mel = log_mel_spectrogram(win, frontend.spec);
    Eigen::MatrixXd input = frontend.target_frames > 0
                                ? fit_frames(mel.values, frontend.target_frames)
                                : mel.values;
    // Spectrograms are mel x time; time-major models (VGGish patches) take
    // the transpose.
    if (input.rows() == model.def.input_w && input.cols() == model.def.input_h &&
        model.def.input_h != model.def.input_w)
      input.transposeInPlace();
    seq.frames.push_back(forward(model, input));
  }
  return seq;
}

Eigen::VectorXd aggregate(const EmbeddingSequence& seq, AggregateMethod) {
  if (seq.frames.empty()) throw EmptySequence("cannot aggregate empty sequence");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(seq.frames.front().size());
  for (const auto& f : seq.frames) acc += f;
  return acc / double(seq.frames.size());
}

}  // namespace mer
