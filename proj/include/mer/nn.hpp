#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <random>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mer {
struct TensorContainer;
}

namespace mer::nn {

struct NnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimError : NnError {
  using NnError::NnError;
};
struct EmptyDataset : NnError {
  using NnError::NnError;
};
struct NonFiniteLoss : NnError {
  using NnError::NnError;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---- primitive ops (row-per-sample convention) ----

/// y = x W + b.  x: [n x d_in], W: [d_in x d_out], b: [d_out].
Matrix dense_forward(const Matrix& x, const Matrix& W, const Vector& b);

struct DenseGrads {
  Matrix gx, gW;
  Vector gb;
};
DenseGrads dense_backward(const Matrix& x, const Matrix& W, const Matrix& gy);

/// Valid cross-correlation along the sequence axis.
/// x: [n x L*C_in] position-major, kernels: [C_out x k*C_in], out L' = L-k+1.
Matrix conv1d_forward(const Matrix& x, int L, int c_in, const Matrix& kernels,
                      const Vector& bias, int k);
struct Conv1dGrads {
  Matrix gx, gk;
  Vector gb;
};
Conv1dGrads conv1d_backward(const Matrix& x, int L, int c_in,
                            const Matrix& kernels, int k, const Matrix& gy);

/// Windowed max per channel; ties go to the first index.
/// Returns pooled values and the flat argmax positions for backward routing.
struct Pool1dResult {
  Matrix y;
  Eigen::MatrixXi argmax;  // indices into the input position axis
  int out_len = 0;
};
Pool1dResult maxpool1d_forward(const Matrix& x, int L, int channels, int pool,
                               int stride);
Matrix maxpool1d_backward(const Pool1dResult& cache, int L, int channels,
                          const Matrix& gy);

Matrix relu(const Matrix& x);
Matrix relu_backward(const Matrix& x, const Matrix& gy);

/// Row-wise softmax with max subtraction.
Matrix softmax(const Matrix& logits);

/// Mean over batch of -log p[true]; p below 1e-12 clamps.
double cce_loss(const Matrix& probs, const Matrix& one_hot);

/// Gradient of cce(softmax(z)) w.r.t. z: (probs - targets) / n.
Matrix softmax_cce_grad(const Matrix& probs, const Matrix& one_hot);

// ---- LSTM ----

/// Gate order in the stacked parameter matrices: input, forget, cell, output.
struct LstmParams {
  Matrix Wx;  // d x 4h
  Matrix Wh;  // h x 4h
  Eigen::RowVectorXd b;  // 4h
  int input_dim() const { return int(Wx.rows()); }
  int hidden_dim() const { return int(Wh.rows()); }
};

struct LstmCache {
  std::vector<Matrix> x_t, h_t, c_t, gates;  // per step; gates post-activation
  int T = 0, n = 0;
};

/// x: [n x T*d] step-major. Returns the hidden sequence [n x T*h].
/// Initial hidden and cell state are zero.
Matrix lstm_forward(const Matrix& x, int T, const LstmParams& p, LstmCache* cache);

struct LstmGrads {
  Matrix gx, gWx, gWh;
  Eigen::RowVectorXd gb;
};
LstmGrads lstm_backward(const LstmCache& cache, const LstmParams& p,
                        const Matrix& g_hidden_seq);

// ---- optimizer ----

struct AdamState {
  Matrix m, v;
  long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

void adam_step(Matrix& param, const Matrix& grad, AdamState& state);

// ---- layer graph for fit() ----

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Matrix forward(const Matrix& x) = 0;
  virtual Matrix backward(const Matrix& gy) = 0;
  virtual std::vector<Matrix*> params() { return {}; }
  virtual std::vector<Matrix*> grads() { return {}; }
};

std::unique_ptr<Layer> make_dense(int in, int out, std::mt19937_64& rng);
std::unique_ptr<Layer> make_relu();
std::unique_ptr<Layer> make_conv1d(int L, int c_in, int c_out, int k,
                                   std::mt19937_64& rng);
std::unique_ptr<Layer> make_maxpool1d(int L, int channels, int pool, int stride);
/// Consumes [n x T*d], emits the final hidden state [n x h].
std::unique_ptr<Layer> make_lstm_last(int T, int d, int h, std::mt19937_64& rng);

class Network {
 public:
  std::vector<std::unique_ptr<Layer>> layers;

  Matrix forward(const Matrix& x);
  void backward(const Matrix& g_logits);
  std::vector<Matrix*> params();
  std::vector<Matrix*> grads();
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& snap);

  /// Parameters keyed "<prefix>.p<i>" in layer order; the architecture is
  /// rebuilt by the caller before load_params.
  void save_params(mer::TensorContainer& c,
                   const std::string& prefix = "net") const;
  void load_params(const mer::TensorContainer& c,
                   const std::string& prefix = "net");
};

enum class Monitor { val_loss, val_acc };

struct TrainSchedule {
  int max_epochs = 1000;
  int batch_size = 32;
  std::optional<int> patience = 100;
  Monitor monitor = Monitor::val_loss;
  uint64_t seed = 0;
  double lr = 1e-3;
};

struct EpochRecord {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct FitResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;  // -1 when no early stopping
};

/// Mini-batch Adam on softmax + categorical cross-entropy. Labels are class
/// indices. With patience set, stops after that many epochs without
/// improvement of the monitored metric and restores the best parameters.
FitResult fit(Network& net, const Matrix& x_train,
              const std::vector<int>& y_train, const Matrix& x_val,
              const std::vector<int>& y_val, int n_classes,
              const TrainSchedule& schedule);

Matrix one_hot(const std::vector<int>& y, int n_classes);

}  // namespace mer::nn
