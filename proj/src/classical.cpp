#include "mer/classical.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace mer::ml {
namespace {

std::vector<int> sorted_classes(const Labels& y) {
  std::set<int> s(y.begin(), y.end());
  return {s.begin(), s.end()};
}

}  // namespace

void Standardizer::fit(const Matrix& X) {
  mean = X.colwise().mean();
  std.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var =
        (X.col(j).array() - mean[j]).square().sum() / double(X.rows());
    std[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
}

Matrix Standardizer::apply(const Matrix& X) const {
  if (X.cols() != mean.size())
    throw DimensionMismatch("feature count does not match the fitted scaler");
  return (X.rowwise() - mean.transpose()).array().rowwise() /
         std.transpose().array();
}

// ---- SVM ----

double SvmModel::kernel_eval(const Vector& a, const Vector& b) const {
  if (hyper_.kernel == SvmKernel::linear) return a.dot(b);
  return std::exp(-hyper_.gamma * (a - b).squaredNorm());
}

namespace {

// SMO on a two-class subproblem with labels in {-1, +1}.
struct SmoResult {
  Vector alpha;
  double bias = 0.0;
  bool converged = true;
};

// Dual decomposition with maximal-violating-pair working-set selection.
// Minimizes (1/2) a'Qa - e'a subject to y'a = 0, 0 <= a <= C, where
// Q_ij = y_i y_j K_ij. The gradient G = Qa - e is maintained incrementally.
SmoResult smo_solve(const Matrix& X, const Vector& y, double C, double tol,
                    int max_passes,
                    const std::function<double(Eigen::Index, Eigen::Index)>& K,
                    uint64_t /*seed*/) {
  const Eigen::Index n = X.rows();
  SmoResult r;
  r.alpha = Vector::Zero(n);
  Vector G = Vector::Constant(n, -1.0);
  const long max_iter = std::max<long>(10000, long(max_passes) * n);
  const double inf = std::numeric_limits<double>::infinity();

  double gmax = 0.0, gmin = 0.0;
  r.converged = false;
  for (long it = 0; it < max_iter; ++it) {
    // i maximizes -y G over the up-set, j minimizes it over the down-set;
    // their gap bounds the KKT violation.
    Eigen::Index i = -1, j = -1;
    gmax = -inf;
    gmin = inf;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -y[t] * G[t];
      if (((y[t] > 0.0 && r.alpha[t] < C) || (y[t] < 0.0 && r.alpha[t] > 0.0)) &&
          v > gmax) {
        gmax = v;
        i = t;
      }
      if (((y[t] > 0.0 && r.alpha[t] > 0.0) || (y[t] < 0.0 && r.alpha[t] < C)) &&
          v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < tol) {
      r.converged = true;
      break;
    }

    const double ai_old = r.alpha[i], aj_old = r.alpha[j];
    // Curvature along the feasible direction; equals ||phi(x_i) - phi(x_j)||^2
    // for both label configurations.
    double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
    if (quad <= 0.0) quad = 1e-12;

    if (y[i] != y[j]) {
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = ai_old - aj_old;
      r.alpha[i] += delta;
      r.alpha[j] += delta;
      if (diff > 0.0 && r.alpha[j] < 0.0) {
        r.alpha[j] = 0.0;
        r.alpha[i] = diff;
      } else if (diff <= 0.0 && r.alpha[i] < 0.0) {
        r.alpha[i] = 0.0;
        r.alpha[j] = -diff;
      }
      if (diff > 0.0 && r.alpha[i] > C) {
        r.alpha[i] = C;
        r.alpha[j] = C - diff;
      } else if (diff <= 0.0 && r.alpha[j] > C) {
        r.alpha[j] = C;
        r.alpha[i] = C + diff;
      }
    } else {
      const double delta = (G[i] - G[j]) / quad;
      const double sum = ai_old + aj_old;
      r.alpha[i] -= delta;
      r.alpha[j] += delta;
      if (sum > C && r.alpha[i] > C) {
        r.alpha[i] = C;
        r.alpha[j] = sum - C;
      } else if (sum <= C && r.alpha[j] < 0.0) {
        r.alpha[j] = 0.0;
        r.alpha[i] = sum;
      }
      if (sum > C && r.alpha[j] > C) {
        r.alpha[j] = C;
        r.alpha[i] = sum - C;
      } else if (sum <= C && r.alpha[i] < 0.0) {
        r.alpha[i] = 0.0;
        r.alpha[j] = sum;
      }
    }

    const double di = r.alpha[i] - ai_old, dj = r.alpha[j] - aj_old;
    if (di == 0.0 && dj == 0.0) {
      r.converged = true;
      break;
    }
    for (Eigen::Index t = 0; t < n; ++t)
      G[t] += y[t] * (y[i] * K(i, t) * di + y[j] * K(j, t) * dj);
  }

  // b from the free support vectors (for which -y G equals the bias), else
  // the midpoint of the violation interval.
  double b_sum = 0.0;
  int b_count = 0;
  for (Eigen::Index t = 0; t < n; ++t)
    if (r.alpha[t] > 0.0 && r.alpha[t] < C) {
      b_sum += -y[t] * G[t];
      ++b_count;
    }
  r.bias = b_count > 0 ? b_sum / b_count : (gmax + gmin) / 2.0;
  return r;
}

}  // namespace

SvmModel SvmModel::train(const Matrix& X, const Labels& y,
                         const SvmHyper& hyper) {
  SvmModel model;
  model.hyper_ = hyper;
  model.classes_ = sorted_classes(y);
  model.n_classes_ = int(model.classes_.size());
  if (model.n_classes_ < 2) throw SingleClass("SVM needs >= 2 classes");

  model.scaler_.fit(X);
  Matrix Xs = model.scaler_.apply(X);

  if (model.hyper_.gamma <= 0.0) {
    double var = 0.0;
    for (Eigen::Index j = 0; j < Xs.cols(); ++j) {
      const double m = Xs.col(j).mean();
      var += (Xs.col(j).array() - m).square().sum() / double(Xs.rows());
    }
    var /= double(Xs.cols());
    model.hyper_.gamma = var > 0.0 ? 1.0 / (double(Xs.cols()) * var) : 1.0;
  }

  for (size_t a = 0; a < model.classes_.size(); ++a)
    for (size_t b = a + 1; b < model.classes_.size(); ++b) {
      std::vector<Eigen::Index> idx;
      for (size_t i = 0; i < y.size(); ++i)
        if (y[i] == model.classes_[a] || y[i] == model.classes_[b])
          idx.push_back(Eigen::Index(i));
      Matrix Xp(idx.size(), Xs.cols());
      Vector yp(idx.size());
      for (size_t i = 0; i < idx.size(); ++i) {
        Xp.row(Eigen::Index(i)) = Xs.row(idx[i]);
        yp[Eigen::Index(i)] = y[size_t(idx[i])] == model.classes_[a] ? 1.0 : -1.0;
      }

      Matrix gram(Xp.rows(), Xp.rows());
      for (Eigen::Index i = 0; i < Xp.rows(); ++i)
        for (Eigen::Index j = i; j < Xp.rows(); ++j)
          gram(i, j) = gram(j, i) =
              model.kernel_eval(Xp.row(i).transpose(), Xp.row(j).transpose());

      SmoResult sol = smo_solve(
          Xp, yp, model.hyper_.C, model.hyper_.tol, model.hyper_.max_passes,
          [&](Eigen::Index i, Eigen::Index j) { return gram(i, j); },
          uint64_t(a * 1000 + b));
      if (!sol.converged) model.converged_ = false;

      BinaryMachine m;
      m.class_a = model.classes_[a];
      m.class_b = model.classes_[b];
      std::vector<Eigen::Index> sv;
      for (Eigen::Index i = 0; i < sol.alpha.size(); ++i)
        if (sol.alpha[i] > 1e-10) sv.push_back(i);
      m.support_vectors.resize(sv.size(), Xs.cols());
      m.coeffs.resize(sv.size());
      for (size_t i = 0; i < sv.size(); ++i) {
        m.support_vectors.row(Eigen::Index(i)) = Xp.row(sv[i]);
        m.coeffs[Eigen::Index(i)] = sol.alpha[sv[i]] * yp[sv[i]];
      }
      m.bias = sol.bias;
      model.machines_.push_back(std::move(m));
    }
  return model;
}

double SvmModel::decision(const BinaryMachine& m, const Vector& x) const {
  double s = m.bias;
  for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i)
    s += m.coeffs[i] * kernel_eval(m.support_vectors.row(i).transpose(), x);
  return s;
}

Matrix SvmModel::predict_proba(const Matrix& X) const {
  Matrix Xs = scaler_.apply(X);
  Matrix votes = Matrix::Zero(X.rows(), n_classes_);
  std::map<int, int> class_pos;
  for (int k = 0; k < n_classes_; ++k) class_pos[classes_[size_t(k)]] = k;
  for (Eigen::Index i = 0; i < Xs.rows(); ++i)
    for (const auto& m : machines_) {
      const double d = decision(m, Xs.row(i).transpose());
      votes(i, class_pos.at(d >= 0.0 ? m.class_a : m.class_b)) += 1.0;
    }
  return votes / double(machines_.size());
}

Labels SvmModel::predict(const Matrix& X) const {
  Matrix proba = predict_proba(X);
  Labels out(size_t(X.rows()));
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    Eigen::Index k;
    proba.row(i).maxCoeff(&k);  // first max wins -> lowest class index
    out[size_t(i)] = classes_[size_t(k)];
  }
  return out;
}

// ---- Naive Bayes ----

NbModel NbModel::train(const Matrix& X, const Labels& y) {
  NbModel model;
  model.classes_ = sorted_classes(y);
  const int K = int(model.classes_.size());
  if (K < 2) throw SingleClass("NB needs >= 2 classes");
  model.scaler_.fit(X);
  Matrix Xs = model.scaler_.apply(X);

  const Eigen::Index d = Xs.cols();
  model.means_ = Matrix::Zero(K, d);
  model.vars_ = Matrix::Zero(K, d);
  model.log_priors_.resize(K);

  double max_var = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double m = Xs.col(j).mean();
    max_var = std::max(
        max_var, (Xs.col(j).array() - m).square().sum() / double(Xs.rows()));
  }
  const double smoothing = 1e-9 * std::max(max_var, 1e-300);

  for (int k = 0; k < K; ++k) {
    std::vector<Eigen::Index> idx;
    for (size_t i = 0; i < y.size(); ++i)
      if (y[i] == model.classes_[size_t(k)]) idx.push_back(Eigen::Index(i));
    model.log_priors_[k] = std::log(double(idx.size()) / double(y.size()));
    for (Eigen::Index j = 0; j < d; ++j) {
      double m = 0.0;
      for (auto i : idx) m += Xs(i, j);
      m /= double(idx.size());
      double v = 0.0;
      for (auto i : idx) v += (Xs(i, j) - m) * (Xs(i, j) - m);
      v = v / double(idx.size()) + smoothing;
      model.means_(k, j) = m;
      model.vars_(k, j) = v;
    }
  }
  return model;
}

Matrix NbModel::log_posterior(const Matrix& X) const {
  Matrix Xs = scaler_.apply(X);
  const int K = int(classes_.size());
  Matrix lp(Xs.rows(), K);
  for (Eigen::Index i = 0; i < Xs.rows(); ++i)
    for (int k = 0; k < K; ++k) {
      double acc = log_priors_[k];
      for (Eigen::Index j = 0; j < Xs.cols(); ++j) {
        const double diff = Xs(i, j) - means_(k, j);
        acc += -0.5 * std::log(2.0 * M_PI * vars_(k, j)) -
               diff * diff / (2.0 * vars_(k, j));
      }
      lp(i, k) = acc;
    }
  return lp;
}

Matrix NbModel::predict_proba(const Matrix& X) const {
  Matrix lp = log_posterior(X);
  Matrix out(lp.rows(), lp.cols());
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    Eigen::RowVectorXd row = lp.row(i);
    row.array() -= row.maxCoeff();
    Eigen::RowVectorXd e = row.array().exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

Labels NbModel::predict(const Matrix& X) const {
  Matrix lp = log_posterior(X);
  Labels out(size_t(X.rows()));
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    Eigen::Index k;
    lp.row(i).maxCoeff(&k);
    out[size_t(i)] = classes_[size_t(k)];
  }
  return out;
}

// ---- Random Forest ----

RfModel RfModel::train(const Matrix& X, const Labels& y, int n_trees,
                       uint64_t seed) {
  RfModel model;
  model.classes_ = sorted_classes(y);
  model.n_features_ = X.cols();
  const Eigen::Index n = X.rows();
  if (n < 2) throw MlError("RF needs >= 2 samples");
  std::map<int, int> class_pos;
  for (size_t k = 0; k < model.classes_.size(); ++k)
    class_pos[model.classes_[k]] = int(k);
  const int K = int(model.classes_.size());
  const int max_features =
      std::max(1, int(std::sqrt(double(X.cols()))));

  for (int t = 0; t < n_trees; ++t) {
    std::mt19937_64 rng(seed * 6364136223846793005ull + uint64_t(t));
    std::vector<Eigen::Index> sample(n);
    for (auto& s : sample) s = Eigen::Index(rng() % uint64_t(n));

    Tree tree;
    // recursive CART growth to purity
    std::function<int(std::vector<Eigen::Index>&)> grow =
        [&](std::vector<Eigen::Index>& idx) -> int {
      std::vector<int> counts(K, 0);
      for (auto i : idx) ++counts[class_pos.at(y[size_t(i)])];
      const int majority =
          int(std::max_element(counts.begin(), counts.end()) - counts.begin());
      const bool pure =
          counts[majority] == int(idx.size());
      if (pure || idx.size() < 2) {
        Node leaf;
        leaf.label = model.classes_[size_t(majority)];
        tree.nodes.push_back(leaf);
        return int(tree.nodes.size()) - 1;
      }

      // best Gini split over a random feature subset
      std::vector<int> feats(size_t(X.cols()));
      std::iota(feats.begin(), feats.end(), 0);
      std::shuffle(feats.begin(), feats.end(), rng);
      feats.resize(size_t(max_features));

      double best_gini = std::numeric_limits<double>::infinity();
      int best_feat = -1;
      double best_thr = 0.0;
      std::vector<std::pair<double, int>> vals;  // (value, class position)
      auto gini = [K](const std::vector<int>& c, int total) {
        if (total == 0) return 0.0;
        double g = 1.0;
        for (int k = 0; k < K; ++k) {
          const double p = double(c[size_t(k)]) / total;
          g -= p * p;
        }
        return g;
      };
      std::vector<int> lc(K), rc(K);
      for (int f : feats) {
        // One sort per feature, then sweep the split point left to right,
        // moving class counts across incrementally.
        vals.clear();
        for (auto i : idx)
          vals.emplace_back(X(i, f), class_pos.at(y[size_t(i)]));
        std::sort(vals.begin(), vals.end());
        std::fill(lc.begin(), lc.end(), 0);
        for (int k = 0; k < K; ++k) rc[size_t(k)] = counts[size_t(k)];
        int ln = 0, rn = int(idx.size());
        for (size_t v = 0; v + 1 < vals.size(); ++v) {
          ++lc[size_t(vals[v].second)];
          --rc[size_t(vals[v].second)];
          ++ln;
          --rn;
          if (vals[v].first == vals[v + 1].first) continue;
          const double wg = (ln * gini(lc, ln) + rn * gini(rc, rn)) /
                            double(idx.size());
          if (wg < best_gini) {
            best_gini = wg;
            best_feat = f;
            best_thr = (vals[v].first + vals[v + 1].first) / 2.0;
          }
        }
      }

      if (best_feat < 0) {
        // all candidate features constant on this node
        Node leaf;
        leaf.label = model.classes_[size_t(majority)];
        tree.nodes.push_back(leaf);
        return int(tree.nodes.size()) - 1;
      }

      std::vector<Eigen::Index> left, right;
      for (auto i : idx)
        (X(i, best_feat) <= best_thr ? left : right).push_back(i);
      if (left.empty() || right.empty()) {
        Node leaf;
        leaf.label = model.classes_[size_t(majority)];
        tree.nodes.push_back(leaf);
        return int(tree.nodes.size()) - 1;
      }

      Node node;
      node.feature = best_feat;
      node.threshold = best_thr;
      tree.nodes.push_back(node);
      const int self = int(tree.nodes.size()) - 1;
      tree.nodes[size_t(self)].left = grow(left);
      tree.nodes[size_t(self)].right = grow(right);
      return self;
    };

    grow(sample);
    model.trees_.push_back(std::move(tree));
  }
  return model;
}

int RfModel::predict_tree(const Tree& t, const Vector& x) const {
  int node = 0;
  while (t.nodes[size_t(node)].label < 0) {
    const Node& nd = t.nodes[size_t(node)];
    node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return t.nodes[size_t(node)].label;
}

Matrix RfModel::predict_proba(const Matrix& X) const {
  if (X.cols() != n_features_)
    throw DimensionMismatch("feature count does not match training");
  std::map<int, int> class_pos;
  for (size_t k = 0; k < classes_.size(); ++k) class_pos[classes_[k]] = int(k);
  Matrix votes = Matrix::Zero(X.rows(), Eigen::Index(classes_.size()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (const auto& t : trees_)
      votes(i, class_pos.at(predict_tree(t, X.row(i).transpose()))) += 1.0;
  return votes / double(trees_.size());
}

Labels RfModel::predict(const Matrix& X) const {
  Matrix proba = predict_proba(X);
  Labels out(size_t(X.rows()));
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    Eigen::Index k;
    proba.row(i).maxCoeff(&k);
    out[size_t(i)] = classes_[size_t(k)];
  }
  return out;
}

// ---- serialization ----

namespace {

void put_matrix(TensorContainer& c, const std::string& name, const Matrix& m) {
  std::vector<double> data(size_t(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index cc = 0; cc < m.cols(); ++cc)
      data[size_t(r) * size_t(m.cols()) + size_t(cc)] = m(r, cc);
  c.put_f64(name, {uint32_t(m.rows()), uint32_t(m.cols())}, std::move(data));
}

Matrix get_matrix(const TensorContainer& c, const std::string& name) {
  const TensorEntry& e = c.at(name);
  if (e.dims.size() != 2) throw MlError("tensor " + name + " is not a matrix");
  Matrix m(e.dims[0], e.dims[1]);
  for (uint32_t r = 0; r < e.dims[0]; ++r)
    for (uint32_t cc = 0; cc < e.dims[1]; ++cc)
      m(r, cc) = e.f64[size_t(r) * e.dims[1] + cc];
  return m;
}

void put_vector(TensorContainer& c, const std::string& name, const Vector& v) {
  c.put_f64(name, {uint32_t(v.size())},
            std::vector<double>(v.data(), v.data() + v.size()));
}

Vector get_vector(const TensorContainer& c, const std::string& name) {
  const TensorEntry& e = c.at(name);
  Vector v(Eigen::Index(e.element_count()));
  for (size_t i = 0; i < e.f64.size(); ++i) v[Eigen::Index(i)] = e.f64[i];
  return v;
}

std::vector<int> vector_to_ints(const Vector& v) {
  std::vector<int> out(size_t(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[size_t(i)] = int(v[i]);
  return out;
}

Vector ints_to_vector(const std::vector<int>& xs) {
  Vector v(Eigen::Index(xs.size()));
  for (size_t i = 0; i < xs.size(); ++i) v[Eigen::Index(i)] = xs[i];
  return v;
}

}  // namespace

void SvmModel::save(TensorContainer& c, const std::string& prefix) const {
  Vector meta(6);
  meta << double(int(hyper_.kernel)), hyper_.C, hyper_.gamma,
      double(n_classes_), double(machines_.size()), converged_ ? 1.0 : 0.0;
  put_vector(c, prefix + ".meta", meta);
  put_vector(c, prefix + ".classes", ints_to_vector(classes_));
  put_vector(c, prefix + ".scaler.mean", scaler_.mean);
  put_vector(c, prefix + ".scaler.std", scaler_.std);
  for (size_t i = 0; i < machines_.size(); ++i) {
    const auto& m = machines_[i];
    const std::string p = prefix + ".m" + std::to_string(i);
    Vector mm(3);
    mm << double(m.class_a), double(m.class_b), m.bias;
    put_vector(c, p + ".meta", mm);
    put_matrix(c, p + ".sv", m.support_vectors);
    put_vector(c, p + ".coeffs", m.coeffs);
  }
}

SvmModel SvmModel::load(const TensorContainer& c, const std::string& prefix) {
  SvmModel model;
  Vector meta = get_vector(c, prefix + ".meta");
  model.hyper_.kernel = SvmKernel(int(meta[0]));
  model.hyper_.C = meta[1];
  model.hyper_.gamma = meta[2];
  model.n_classes_ = int(meta[3]);
  model.converged_ = meta[5] != 0.0;
  model.classes_ = vector_to_ints(get_vector(c, prefix + ".classes"));
  model.scaler_.mean = get_vector(c, prefix + ".scaler.mean");
  model.scaler_.std = get_vector(c, prefix + ".scaler.std");
  const int n_machines = int(meta[4]);
  for (int i = 0; i < n_machines; ++i) {
    const std::string p = prefix + ".m" + std::to_string(i);
    Vector mm = get_vector(c, p + ".meta");
    BinaryMachine m;
    m.class_a = int(mm[0]);
    m.class_b = int(mm[1]);
    m.bias = mm[2];
    m.support_vectors = get_matrix(c, p + ".sv");
    m.coeffs = get_vector(c, p + ".coeffs");
    model.machines_.push_back(std::move(m));
  }
  return model;
}

void NbModel::save(TensorContainer& c, const std::string& prefix) const {
  put_vector(c, prefix + ".classes", ints_to_vector(classes_));
  put_vector(c, prefix + ".log_priors", log_priors_);
  put_matrix(c, prefix + ".means", means_);
  put_matrix(c, prefix + ".vars", vars_);
  put_vector(c, prefix + ".scaler.mean", scaler_.mean);
  put_vector(c, prefix + ".scaler.std", scaler_.std);
}

NbModel NbModel::load(const TensorContainer& c, const std::string& prefix) {
  NbModel model;
  model.classes_ = vector_to_ints(get_vector(c, prefix + ".classes"));
  model.log_priors_ = get_vector(c, prefix + ".log_priors");
  model.means_ = get_matrix(c, prefix + ".means");
  model.vars_ = get_matrix(c, prefix + ".vars");
  model.scaler_.mean = get_vector(c, prefix + ".scaler.mean");
  model.scaler_.std = get_vector(c, prefix + ".scaler.std");
  return model;
}

void RfModel::save(TensorContainer& c, const std::string& prefix) const {
  put_vector(c, prefix + ".classes", ints_to_vector(classes_));
  Vector meta(2);
  meta << double(trees_.size()), double(n_features_);
  put_vector(c, prefix + ".meta", meta);
  for (size_t t = 0; t < trees_.size(); ++t) {
    const auto& nodes = trees_[t].nodes;
    Matrix m(Eigen::Index(nodes.size()), 5);
    for (size_t i = 0; i < nodes.size(); ++i)
      m.row(Eigen::Index(i)) << double(nodes[i].feature), nodes[i].threshold,
          double(nodes[i].left), double(nodes[i].right), double(nodes[i].label);
    put_matrix(c, prefix + ".t" + std::to_string(t), m);
  }
}

RfModel RfModel::load(const TensorContainer& c, const std::string& prefix) {
  RfModel model;
  model.classes_ = vector_to_ints(get_vector(c, prefix + ".classes"));
  Vector meta = get_vector(c, prefix + ".meta");
  model.n_features_ = Eigen::Index(meta[1]);
  const int n_trees = int(meta[0]);
  for (int t = 0; t < n_trees; ++t) {
    Matrix m = get_matrix(c, prefix + ".t" + std::to_string(t));
    Tree tree;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      Node nd;
      nd.feature = int(m(i, 0));
      nd.threshold = m(i, 1);
      nd.left = int(m(i, 2));
      nd.right = int(m(i, 3));
      nd.label = int(m(i, 4));
      tree.nodes.push_back(nd);
    }
    model.trees_.push_back(std::move(tree));
  }
  return model;
}

}  // namespace mer::ml
