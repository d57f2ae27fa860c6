#include "mer/nn.hpp"

#include "mer/container.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mer::nn {

Matrix dense_forward(const Matrix& x, const Matrix& W, const Vector& b) {
  if (x.cols() != W.rows() || W.cols() != b.size())
    throw DimError("dense_forward shape mismatch");
  return (x * W).rowwise() + b.transpose();
}

DenseGrads dense_backward(const Matrix& x, const Matrix& W, const Matrix& gy) {
  DenseGrads g;
  g.gx = gy * W.transpose();
  g.gW = x.transpose() * gy;
  g.gb = gy.colwise().sum();
  return g;
}

Matrix conv1d_forward(const Matrix& x, int L, int c_in, const Matrix& kernels,
                      const Vector& bias, int k) {
  if (x.cols() != Eigen::Index(L) * c_in || L < k)
    throw DimError("conv1d_forward shape mismatch");
  const int c_out = int(kernels.rows());
  const int out_len = L - k + 1;
  Matrix y(x.rows(), Eigen::Index(out_len) * c_out);
  Matrix cols(k * c_in, out_len);
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    for (int p = 0; p < out_len; ++p)
      for (int dk = 0; dk < k; ++dk)
        for (int c = 0; c < c_in; ++c)
          cols(dk * c_in + c, p) = x(s, (p + dk) * c_in + c);
    Matrix out = (kernels * cols).colwise() + bias;  // c_out x out_len
    for (int p = 0; p < out_len; ++p)
      for (int c = 0; c < c_out; ++c) y(s, p * c_out + c) = out(c, p);
  }
  return y;
}

Conv1dGrads conv1d_backward(const Matrix& x, int L, int c_in,
                            const Matrix& kernels, int k, const Matrix& gy) {
  const int c_out = int(kernels.rows());
  const int out_len = L - k + 1;
  Conv1dGrads g;
  g.gx = Matrix::Zero(x.rows(), x.cols());
  g.gk = Matrix::Zero(kernels.rows(), kernels.cols());
  g.gb = Vector::Zero(c_out);
  Matrix cols(k * c_in, out_len);
  Matrix gout(c_out, out_len);
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    for (int p = 0; p < out_len; ++p)
      for (int dk = 0; dk < k; ++dk)
        for (int c = 0; c < c_in; ++c)
          cols(dk * c_in + c, p) = x(s, (p + dk) * c_in + c);
    for (int p = 0; p < out_len; ++p)
      for (int c = 0; c < c_out; ++c) gout(c, p) = gy(s, p * c_out + c);
    g.gk += gout * cols.transpose();
    g.gb += gout.rowwise().sum();
    Matrix gcols = kernels.transpose() * gout;  // k*c_in x out_len
    for (int p = 0; p < out_len; ++p)
      for (int dk = 0; dk < k; ++dk)
        for (int c = 0; c < c_in; ++c)
          g.gx(s, (p + dk) * c_in + c) += gcols(dk * c_in + c, p);
  }
  return g;
}

Pool1dResult maxpool1d_forward(const Matrix& x, int L, int channels, int pool,
                               int stride) {
  if (x.cols() != Eigen::Index(L) * channels || pool > L)
    throw DimError("maxpool1d shape mismatch");
  const int out_len = (L - pool) / stride + 1;
  Pool1dResult r;
  r.out_len = out_len;
  r.y.resize(x.rows(), Eigen::Index(out_len) * channels);
  r.argmax.resize(x.rows(), Eigen::Index(out_len) * channels);
  for (Eigen::Index s = 0; s < x.rows(); ++s)
    for (int p = 0; p < out_len; ++p)
      for (int c = 0; c < channels; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        int best_pos = p * stride;
        for (int d = 0; d < pool; ++d) {
          const double v = x(s, (p * stride + d) * channels + c);
          if (v > best) {  // strict: first index wins ties
            best = v;
            best_pos = p * stride + d;
          }
        }
        r.y(s, p * channels + c) = best;
        r.argmax(s, p * channels + c) = best_pos;
      }
  return r;
}

Matrix maxpool1d_backward(const Pool1dResult& cache, int L, int channels,
                          const Matrix& gy) {
  Matrix gx = Matrix::Zero(gy.rows(), Eigen::Index(L) * channels);
  for (Eigen::Index s = 0; s < gy.rows(); ++s)
    for (int p = 0; p < cache.out_len; ++p)
      for (int c = 0; c < channels; ++c)
        gx(s, cache.argmax(s, p * channels + c) * channels + c) +=
            gy(s, p * channels + c);
  return gx;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& x, const Matrix& gy) {
  return (x.array() > 0.0).select(gy, 0.0);
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::RowVectorXd z = logits.row(i);
    z.array() -= z.maxCoeff();
    Eigen::RowVectorXd e = z.array().exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

double cce_loss(const Matrix& probs, const Matrix& one_hot) {
  if (probs.rows() != one_hot.rows() || probs.cols() != one_hot.cols())
    throw DimError("cce_loss shape mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    for (Eigen::Index k = 0; k < probs.cols(); ++k)
      if (one_hot(i, k) > 0.5)
        acc -= std::log(std::max(probs(i, k), 1e-12)) * one_hot(i, k);
  return acc / double(probs.rows());
}

Matrix softmax_cce_grad(const Matrix& probs, const Matrix& one_hot) {
  return (probs - one_hot) / double(probs.rows());
}

Matrix lstm_forward(const Matrix& x, int T, const LstmParams& p,
                    LstmCache* cache) {
  const int d = p.input_dim();
  const int h = p.hidden_dim();
  if (x.cols() != Eigen::Index(T) * d) throw DimError("lstm_forward shape mismatch");
  const Eigen::Index n = x.rows();
  Matrix h_prev = Matrix::Zero(n, h);
  Matrix c_prev = Matrix::Zero(n, h);
  Matrix hidden_seq(n, Eigen::Index(T) * h);
  if (cache) {
    cache->x_t.clear();
    cache->h_t.clear();
    cache->c_t.clear();
    cache->gates.clear();
    cache->T = T;
    cache->n = int(n);
  }
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (int t = 0; t < T; ++t) {
    Matrix x_t = x.middleCols(Eigen::Index(t) * d, d);
    Matrix pre = (x_t * p.Wx + h_prev * p.Wh).rowwise() + p.b;
    Matrix gates(n, 4 * h);  // [i | f | g | o] post-activation
    for (Eigen::Index s = 0; s < n; ++s)
      for (int j = 0; j < 4 * h; ++j) {
        const double v = pre(s, j);
        gates(s, j) = (j / h == 2) ? std::tanh(v) : sigmoid(v);
      }
    Matrix c_t = gates.middleCols(h, h).cwiseProduct(c_prev) +
                 gates.leftCols(h).cwiseProduct(gates.middleCols(2 * h, h));
    Matrix h_t = gates.rightCols(h).cwiseProduct(
        c_t.unaryExpr([](double v) { return std::tanh(v); }));
    hidden_seq.middleCols(Eigen::Index(t) * h, h) = h_t;
    if (cache) {
      cache->x_t.push_back(x_t);
      cache->h_t.push_back(h_t);
      cache->c_t.push_back(c_t);
      cache->gates.push_back(gates);
    }
    h_prev = std::move(h_t);
    c_prev = std::move(c_t);
  }
  return hidden_seq;
}

LstmGrads lstm_backward(const LstmCache& cache, const LstmParams& p,
                        const Matrix& g_hidden_seq) {
  const int T = cache.T;
  const int n = cache.n;
  const int d = p.input_dim();
  const int h = p.hidden_dim();
  LstmGrads g;
  g.gx = Matrix::Zero(n, Eigen::Index(T) * d);
  g.gWx = Matrix::Zero(d, 4 * h);
  g.gWh = Matrix::Zero(h, 4 * h);
  g.gb = Eigen::RowVectorXd::Zero(4 * h);

  Matrix dh_next = Matrix::Zero(n, h);
  Matrix dc_next = Matrix::Zero(n, h);
  for (int t = T - 1; t >= 0; --t) {
    const Matrix& gates = cache.gates[t];
    const Matrix& c_t = cache.c_t[t];
    Matrix c_prev = t > 0 ? cache.c_t[t - 1] : Matrix::Zero(n, h);
    Matrix h_prev = t > 0 ? cache.h_t[t - 1] : Matrix::Zero(n, h);

    Matrix dh = g_hidden_seq.middleCols(Eigen::Index(t) * h, h) + dh_next;
    Matrix tanh_c = c_t.unaryExpr([](double v) { return std::tanh(v); });
    Matrix dc =
        dc_next + dh.cwiseProduct(gates.rightCols(h))
                      .cwiseProduct((1.0 - tanh_c.array().square()).matrix());

    Matrix i_g = gates.leftCols(h), f_g = gates.middleCols(h, h),
           g_g = gates.middleCols(2 * h, h), o_g = gates.rightCols(h);
    Matrix dpre(n, 4 * h);
    // sigmoid' = s(1-s), tanh' = 1-g^2
    dpre.leftCols(h) = dc.cwiseProduct(g_g).cwiseProduct(i_g).cwiseProduct(
        (1.0 - i_g.array()).matrix());
    dpre.middleCols(h, h) =
        dc.cwiseProduct(c_prev).cwiseProduct(f_g).cwiseProduct(
            (1.0 - f_g.array()).matrix());
    dpre.middleCols(2 * h, h) = dc.cwiseProduct(i_g).cwiseProduct(
        (1.0 - g_g.array().square()).matrix());
    dpre.rightCols(h) = dh.cwiseProduct(tanh_c).cwiseProduct(o_g).cwiseProduct(
        (1.0 - o_g.array()).matrix());

    g.gWx += cache.x_t[t].transpose() * dpre;
    g.gWh += h_prev.transpose() * dpre;
    g.gb += dpre.colwise().sum();
    g.gx.middleCols(Eigen::Index(t) * d, d) = dpre * p.Wx.transpose();
    dh_next = dpre * p.Wh.transpose();
    dc_next = dc.cwiseProduct(f_g);
  }
  return g;
}

void adam_step(Matrix& param, const Matrix& grad, AdamState& state) {
  if (state.m.size() == 0) {
    state.m = Matrix::Zero(param.rows(), param.cols());
    state.v = Matrix::Zero(param.rows(), param.cols());
  }
  if (grad.rows() != param.rows() || grad.cols() != param.cols())
    throw DimError("adam_step shape mismatch");
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.t));
  Matrix m_hat = state.m / bc1;
  Matrix v_hat = state.v / bc2;
  param.array() -= state.lr * m_hat.array() / (v_hat.array().sqrt() + state.eps);
}

// ---- layers ----

namespace {

double glorot_limit(int fan_in, int fan_out) {
  return std::sqrt(6.0 / double(fan_in + fan_out));
}

class DenseLayer final : public Layer {
 public:
  DenseLayer(int in, int out, std::mt19937_64& rng) {
    const double lim = glorot_limit(in, out);
    std::uniform_real_distribution<double> dist(-lim, lim);
    W_.resize(in, out);
    for (Eigen::Index i = 0; i < W_.size(); ++i) W_.data()[i] = dist(rng);
    b_ = Matrix::Zero(1, out);
    gW_ = Matrix::Zero(in, out);
    gb_ = Matrix::Zero(1, out);
  }
  Matrix forward(const Matrix& x) override {
    x_ = x;
    return dense_forward(x, W_, b_.row(0).transpose());
  }
  Matrix backward(const Matrix& gy) override {
    DenseGrads g = dense_backward(x_, W_, gy);
    gW_ = g.gW;
    gb_.row(0) = g.gb.transpose();
    return g.gx;
  }
  std::vector<Matrix*> params() override { return {&W_, &b_}; }
  std::vector<Matrix*> grads() override { return {&gW_, &gb_}; }

 private:
  Matrix W_, b_, gW_, gb_, x_;
};

class ReluLayer final : public Layer {
 public:
  Matrix forward(const Matrix& x) override {
    x_ = x;
    return relu(x);
  }
  Matrix backward(const Matrix& gy) override { return relu_backward(x_, gy); }

 private:
  Matrix x_;
};

class Conv1dLayer final : public Layer {
 public:
  Conv1dLayer(int L, int c_in, int c_out, int k, std::mt19937_64& rng)
      : L_(L), c_in_(c_in), k_(k) {
    const double lim = glorot_limit(k * c_in, k * c_out);
    std::uniform_real_distribution<double> dist(-lim, lim);
    K_.resize(c_out, k * c_in);
    for (Eigen::Index i = 0; i < K_.size(); ++i) K_.data()[i] = dist(rng);
    b_ = Matrix::Zero(1, c_out);
    gK_ = Matrix::Zero(c_out, k * c_in);
    gb_ = Matrix::Zero(1, c_out);
  }
  Matrix forward(const Matrix& x) override {
    x_ = x;
    return conv1d_forward(x, L_, c_in_, K_, b_.row(0).transpose(), k_);
  }
  Matrix backward(const Matrix& gy) override {
    Conv1dGrads g = conv1d_backward(x_, L_, c_in_, K_, k_, gy);
    gK_ = g.gk;
    gb_.row(0) = g.gb.transpose();
    return g.gx;
  }
  std::vector<Matrix*> params() override { return {&K_, &b_}; }
  std::vector<Matrix*> grads() override { return {&gK_, &gb_}; }

 private:
  int L_, c_in_, k_;
  Matrix K_, b_, gK_, gb_, x_;
};

class MaxPool1dLayer final : public Layer {
 public:
  MaxPool1dLayer(int L, int channels, int pool, int stride)
      : L_(L), channels_(channels), pool_(pool), stride_(stride) {}
  Matrix forward(const Matrix& x) override {
    cache_ = maxpool1d_forward(x, L_, channels_, pool_, stride_);
    return cache_.y;
  }
  Matrix backward(const Matrix& gy) override {
    return maxpool1d_backward(cache_, L_, channels_, gy);
  }

 private:
  int L_, channels_, pool_, stride_;
  Pool1dResult cache_;
};

class LstmLastLayer final : public Layer {
 public:
  LstmLastLayer(int T, int d, int h, std::mt19937_64& rng) : T_(T), h_(h) {
    const double sx = 1.0 / std::sqrt(double(d));
    const double sh = 1.0 / std::sqrt(double(h));
    std::uniform_real_distribution<double> dx(-sx, sx), dh(-sh, sh);
    p_.Wx.resize(d, 4 * h);
    p_.Wh.resize(h, 4 * h);
    for (Eigen::Index i = 0; i < p_.Wx.size(); ++i) p_.Wx.data()[i] = dx(rng);
    for (Eigen::Index i = 0; i < p_.Wh.size(); ++i) p_.Wh.data()[i] = dh(rng);
    b_ = Matrix::Zero(1, 4 * h);
    b_.row(0).segment(h, h).setOnes();  // forget-gate bias 1
    gWx_ = Matrix::Zero(d, 4 * h);
    gWh_ = Matrix::Zero(h, 4 * h);
    gb_ = Matrix::Zero(1, 4 * h);
  }
  Matrix forward(const Matrix& x) override {
    p_.b = b_.row(0);
    Matrix seq = lstm_forward(x, T_, p_, &cache_);
    return seq.rightCols(h_);
  }
  Matrix backward(const Matrix& gy) override {
    Matrix g_seq = Matrix::Zero(gy.rows(), Eigen::Index(T_) * h_);
    g_seq.rightCols(h_) = gy;
    LstmGrads g = lstm_backward(cache_, p_, g_seq);
    gWx_ = g.gWx;
    gWh_ = g.gWh;
    gb_.row(0) = g.gb;
    return g.gx;
  }
  std::vector<Matrix*> params() override { return {&p_.Wx, &p_.Wh, &b_}; }
  std::vector<Matrix*> grads() override { return {&gWx_, &gWh_, &gb_}; }

 private:
  int T_, h_;
  LstmParams p_;
  Matrix b_, gWx_, gWh_, gb_;
  LstmCache cache_;
};

}  // namespace

std::unique_ptr<Layer> make_dense(int in, int out, std::mt19937_64& rng) {
  return std::make_unique<DenseLayer>(in, out, rng);
}
std::unique_ptr<Layer> make_relu() { return std::make_unique<ReluLayer>(); }
std::unique_ptr<Layer> make_conv1d(int L, int c_in, int c_out, int k,
                                   std::mt19937_64& rng) {
  return std::make_unique<Conv1dLayer>(L, c_in, c_out, k, rng);
}
std::unique_ptr<Layer> make_maxpool1d(int L, int channels, int pool,
                                      int stride) {
  return std::make_unique<MaxPool1dLayer>(L, channels, pool, stride);
}
std::unique_ptr<Layer> make_lstm_last(int T, int d, int h,
                                      std::mt19937_64& rng) {
  return std::make_unique<LstmLastLayer>(T, d, h, rng);
}

Matrix Network::forward(const Matrix& x) {
  Matrix a = x;
  for (auto& l : layers) a = l->forward(a);
  return a;
}

void Network::backward(const Matrix& g_logits) {
  Matrix g = g_logits;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    g = (*it)->backward(g);
}

std::vector<Matrix*> Network::params() {
  std::vector<Matrix*> out;
  for (auto& l : layers)
    for (Matrix* p : l->params()) out.push_back(p);
  return out;
}

std::vector<Matrix*> Network::grads() {
  std::vector<Matrix*> out;
  for (auto& l : layers)
    for (Matrix* g : l->grads()) out.push_back(g);
  return out;
}

std::vector<Matrix> Network::snapshot() const {
  std::vector<Matrix> out;
  for (auto& l : const_cast<Network*>(this)->layers)
    for (Matrix* p : l->params()) out.push_back(*p);
  return out;
}

void Network::restore(const std::vector<Matrix>& snap) {
  size_t i = 0;
  for (auto& l : layers)
    for (Matrix* p : l->params()) *p = snap[i++];
}

void Network::save_params(mer::TensorContainer& c,
                          const std::string& prefix) const {
  auto ps = const_cast<Network*>(this)->params();
  for (size_t i = 0; i < ps.size(); ++i) {
    const Matrix& m = *ps[i];
    std::vector<double> data(size_t(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index cc = 0; cc < m.cols(); ++cc)
        data[size_t(r) * size_t(m.cols()) + size_t(cc)] = m(r, cc);
    c.put_f64(prefix + ".p" + std::to_string(i),
              {uint32_t(m.rows()), uint32_t(m.cols())}, std::move(data));
  }
}

void Network::load_params(const mer::TensorContainer& c,
                          const std::string& prefix) {
  auto ps = params();
  for (size_t i = 0; i < ps.size(); ++i) {
    const auto& e = c.at(prefix + ".p" + std::to_string(i));
    if (e.dims.size() != 2 || Eigen::Index(e.dims[0]) != ps[i]->rows() ||
        Eigen::Index(e.dims[1]) != ps[i]->cols())
      throw DimError("stored parameter " + std::to_string(i) +
                     " does not match the network architecture");
    for (uint32_t r = 0; r < e.dims[0]; ++r)
      for (uint32_t cc = 0; cc < e.dims[1]; ++cc)
        (*ps[i])(r, cc) = e.f64[size_t(r) * e.dims[1] + cc];
  }
}

Matrix one_hot(const std::vector<int>& y, int n_classes) {
  Matrix out = Matrix::Zero(Eigen::Index(y.size()), n_classes);
  for (size_t i = 0; i < y.size(); ++i) out(Eigen::Index(i), y[i]) = 1.0;
  return out;
}

FitResult fit(Network& net, const Matrix& x_train,
              const std::vector<int>& y_train, const Matrix& x_val,
              const std::vector<int>& y_val, int n_classes,
              const TrainSchedule& schedule) {
  if (x_train.rows() == 0) throw EmptyDataset("empty training set");
  if (schedule.patience && x_val.rows() == 0)
    throw EmptyDataset("early stopping requires a validation set");

  std::vector<Matrix*> params = net.params();
  std::vector<Matrix*> grads = net.grads();
  std::vector<AdamState> states(params.size());
  for (auto& s : states) s.lr = schedule.lr;

  Matrix t_train = one_hot(y_train, n_classes);
  auto evaluate = [&](const Matrix& x, const std::vector<int>& y, double& loss,
                      double& acc) {
    Matrix probs = softmax(net.forward(x));
    loss = cce_loss(probs, one_hot(y, n_classes));
    int correct = 0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      Eigen::Index k;
      probs.row(i).maxCoeff(&k);
      if (int(k) == y[size_t(i)]) ++correct;
    }
    acc = probs.rows() ? double(correct) / double(probs.rows()) : 0.0;
  };

  FitResult result;
  double best_metric = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_params;
  int since_best = 0;

  std::vector<Eigen::Index> order(x_train.rows());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < schedule.max_epochs; ++epoch) {
    std::mt19937_64 rng(schedule.seed * 1000003ull + uint64_t(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    Eigen::Index seen = 0;
    for (Eigen::Index start = 0; start < x_train.rows();
         start += schedule.batch_size) {
      const Eigen::Index bs =
          std::min<Eigen::Index>(schedule.batch_size, x_train.rows() - start);
      Matrix xb(bs, x_train.cols());
      Matrix tb(bs, n_classes);
      for (Eigen::Index i = 0; i < bs; ++i) {
        xb.row(i) = x_train.row(order[start + i]);
        tb.row(i) = t_train.row(order[start + i]);
      }
      Matrix probs = softmax(net.forward(xb));
      const double loss = cce_loss(probs, tb);
      if (!std::isfinite(loss)) throw NonFiniteLoss("training diverged");
      epoch_loss += loss * double(bs);
      seen += bs;
      net.backward(softmax_cce_grad(probs, tb));
      for (size_t p = 0; p < params.size(); ++p)
        adam_step(*params[p], *grads[p], states[p]);
    }

    EpochRecord rec;
    rec.train_loss = epoch_loss / double(seen);
    if (x_val.rows() > 0) evaluate(x_val, y_val, rec.val_loss, rec.val_acc);
    result.history.push_back(rec);

    if (schedule.patience) {
      const double metric = schedule.monitor == Monitor::val_loss
                                ? rec.val_loss
                                : -rec.val_acc;
      if (metric < best_metric) {
        best_metric = metric;
        best_params = net.snapshot();
        result.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
        if (since_best >= *schedule.patience) break;
      }
    }
  }
  if (schedule.patience && !best_params.empty()) net.restore(best_params);
  return result;
}

}  // namespace mer::nn
