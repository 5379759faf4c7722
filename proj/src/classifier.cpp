#include "aeromag/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

namespace aeromag {

namespace {

Eigen::MatrixXd normalize(const MlpModel& model, const Eigen::MatrixXd& features) {
  Eigen::MatrixXd xn = features;
  for (Eigen::Index c = 0; c < xn.cols(); ++c)
    xn.col(c) = (xn.col(c).array() - model.feature_mean(c)) / model.feature_std(c);
  return xn;
}

// Columns = samples. Returns probabilities (out x batch) and hidden
// activations for backprop.
struct Forward {
  Eigen::MatrixXd hidden;
  Eigen::MatrixXd probs;
};

Forward forward_pass(const MlpModel& model, const Eigen::MatrixXd& xn_t) {
  Forward f;
  f.hidden = ((model.w1 * xn_t).colwise() + model.b1).array().tanh();
  Eigen::MatrixXd logits = (model.w2 * f.hidden).colwise() + model.b2;
  f.probs.resize(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    const Eigen::VectorXd e = (logits.col(j).array() - m).exp();
    f.probs.col(j) = e / e.sum();
  }
  return f;
}

double cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
  double loss = 0.0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j)
    loss -= std::log(std::max(probs(labels[static_cast<std::size_t>(j)], j), 1e-300));
  return loss / static_cast<double>(probs.cols());
}

struct Gradients {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2;
};

double loss_and_grad(const MlpModel& model, const Eigen::MatrixXd& xn_t,
                     const std::vector<int>& labels, Gradients* grad) {
  const Forward f = forward_pass(model, xn_t);
  const double loss = cross_entropy(f.probs, labels);
  if (grad) {
    const double inv_b = 1.0 / static_cast<double>(xn_t.cols());
    Eigen::MatrixXd dz = f.probs;
    for (Eigen::Index j = 0; j < dz.cols(); ++j)
      dz(labels[static_cast<std::size_t>(j)], j) -= 1.0;
    dz *= inv_b;
    grad->w2 = dz * f.hidden.transpose();
    grad->b2 = dz.rowwise().sum();
    Eigen::MatrixXd dh =
        (model.w2.transpose() * dz).array() * (1.0 - f.hidden.array().square());
    grad->w1 = dh * xn_t.transpose();
    grad->b1 = dh.rowwise().sum();
  }
  return loss;
}

// Flat parameter vector in fixed order (w1, b1, w2, b2, column-major).
Eigen::VectorXd pack(const MlpModel& m) {
  Eigen::VectorXd v(m.w1.size() + m.b1.size() + m.w2.size() + m.b2.size());
  Eigen::Index at = 0;
  v.segment(at, m.w1.size()) = Eigen::Map<const Eigen::VectorXd>(m.w1.data(), m.w1.size());
  at += m.w1.size();
  v.segment(at, m.b1.size()) = m.b1;
  at += m.b1.size();
  v.segment(at, m.w2.size()) = Eigen::Map<const Eigen::VectorXd>(m.w2.data(), m.w2.size());
  at += m.w2.size();
  v.segment(at, m.b2.size()) = m.b2;
  return v;
}

void unpack(const Eigen::VectorXd& v, MlpModel& m) {
  Eigen::Index at = 0;
  Eigen::Map<Eigen::VectorXd>(m.w1.data(), m.w1.size()) = v.segment(at, m.w1.size());
  at += m.w1.size();
  m.b1 = v.segment(at, m.b1.size());
  at += m.b1.size();
  Eigen::Map<Eigen::VectorXd>(m.w2.data(), m.w2.size()) = v.segment(at, m.w2.size());
  at += m.w2.size();
  m.b2 = v.segment(at, m.b2.size());
}

Eigen::VectorXd pack_grad(const Gradients& g) {
  Eigen::VectorXd v(g.w1.size() + g.b1.size() + g.w2.size() + g.b2.size());
  Eigen::Index at = 0;
  v.segment(at, g.w1.size()) = Eigen::Map<const Eigen::VectorXd>(g.w1.data(), g.w1.size());
  at += g.w1.size();
  v.segment(at, g.b1.size()) = g.b1;
  at += g.b1.size();
  v.segment(at, g.w2.size()) = Eigen::Map<const Eigen::VectorXd>(g.w2.data(), g.w2.size());
  at += g.w2.size();
  v.segment(at, g.b2.size()) = g.b2;
  return v;
}

}  // namespace

void TrainingConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("training: max_epochs must be >= 1");
  if (!(split > 0.0 && split < 1.0)) throw ConfigError("training: split must be in (0, 1)");
  if (hidden < 1) throw ConfigError("training: hidden must be >= 1");
  if (tolerance < 0.0) throw ConfigError("training: tolerance must be >= 0");
}

MlpModel make_mlp(int n_in, int n_hidden, int n_out, std::uint64_t seed) {
  if (n_in < 1 || n_hidden < 1 || n_out < 1)
    throw ConfigError("make_mlp: dimensions must be >= 1");
  MlpModel m;
  m.w1.resize(n_hidden, n_in);
  m.b1 = Eigen::VectorXd::Zero(n_hidden);
  m.w2.resize(n_out, n_hidden);
  m.b2 = Eigen::VectorXd::Zero(n_out);
  m.feature_mean = Eigen::VectorXd::Zero(n_in);
  m.feature_std = Eigen::VectorXd::Ones(n_in);

  SeededRng rng(subseed(seed, "init"));
  const double l1 = std::sqrt(6.0 / (n_in + n_hidden));
  for (int r = 0; r < n_hidden; ++r)
    for (int c = 0; c < n_in; ++c) m.w1(r, c) = rng.next_uniform(-l1, l1);
  const double l2 = std::sqrt(6.0 / (n_hidden + n_out));
  for (int r = 0; r < n_out; ++r)
    for (int c = 0; c < n_hidden; ++c) m.w2(r, c) = rng.next_uniform(-l2, l2);
  return m;
}

std::pair<Eigen::MatrixXd, std::vector<int>> build_features(const SolutionSet& set,
                                                            const Grid& tx,
                                                            const Grid& ty) {
  if (set.solutions.empty()) throw DataError("EmptySolutionSet: no solutions for features");
  if (!(tx.georef == ty.georef))
    throw DataError("GeorefMismatch: Tx and Ty must share one georef");
  const GridGeoref& g = tx.georef;

  Eigen::MatrixXd features(static_cast<Eigen::Index>(set.solutions.size()), 6);
  std::vector<int> labels(set.solutions.size());
  for (std::size_t i = 0; i < set.solutions.size(); ++i) {
    const EulerSolution& s = set.solutions[i];
    if (s.window_row < 0 || s.window_row >= g.n_rows || s.window_col < 0 ||
        s.window_col >= g.n_cols)
      throw DataError("GeorefMismatch: solution window outside the gradient grids");
    const double gx = tx.at(s.window_row, s.window_col);
    const double gy = ty.at(s.window_row, s.window_col);
    features(static_cast<Eigen::Index>(i), 0) = (s.x0 - g.x_origin) / g.width();
    features(static_cast<Eigen::Index>(i), 1) = (s.y0 - g.y_origin) / g.height();
    features(static_cast<Eigen::Index>(i), 2) = s.z0;
    features(static_cast<Eigen::Index>(i), 3) = s.rms;
    features(static_cast<Eigen::Index>(i), 4) = std::abs(s.base);
    features(static_cast<Eigen::Index>(i), 5) = std::sqrt(gx * gx + gy * gy);

    int label = -1;
    for (std::size_t k = 0; k < set.config.si_set.size(); ++k)
      if (std::abs(set.config.si_set[k] - s.si) <= 1e-9) label = static_cast<int>(k);
    if (label < 0)
      throw DataError("LabelOutOfRange: solution si not in the config si_set");
    labels[i] = label;
  }
  return {features, labels};
}

TrainResult train_mlp(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                      const TrainingConfig& config, int n_classes) {
  config.validate();
  const Eigen::Index n = features.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    throw ConfigError("train_mlp: feature/label count mismatch");
  if (n < 12) throw DataError("train_mlp: need at least 12 samples");
  for (int l : labels)
    if (l < 0 || l >= n_classes)
      throw DataError("LabelOutOfRange: label outside [0, " + std::to_string(n_classes) + ")");

  TrainResult result;
  result.model = make_mlp(static_cast<int>(features.cols()), config.hidden, n_classes,
                          config.seed);
  MlpModel& model = result.model;

  // Normalization constants from the full input; zero-variance columns are
  // flagged and left at stddev 1.
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    model.feature_mean(c) = features.col(c).mean();
    const double var =
        (features.col(c).array() - model.feature_mean(c)).square().sum() /
        static_cast<double>(n);
    if (var > 0.0) {
      model.feature_std(c) = std::sqrt(var);
    } else {
      model.feature_std(c) = 1.0;
      model.constant_features.push_back(static_cast<int>(c));
    }
  }

  // Stratified split, shuffled per class from the seeded stream.
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  SeededRng split_rng(subseed(config.seed, "split"));
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& cls : by_class) {
    for (std::size_t i = cls.size(); i > 1; --i)
      std::swap(cls[i - 1], cls[split_rng.next_below(i)]);
    const std::size_t n_train =
        std::max<std::size_t>(cls.empty() ? 0 : 1,
                              static_cast<std::size_t>(std::floor(config.split *
                                                                  static_cast<double>(cls.size()))));
    for (std::size_t i = 0; i < cls.size(); ++i)
      (i < n_train ? train_idx : val_idx).push_back(cls[i]);
  }

  auto gather = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& xt,
                    std::vector<int>& lab) {
    xt.resize(features.cols(), static_cast<Eigen::Index>(idx.size()));
    lab.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      xt.col(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(idx[i]));
      lab[i] = labels[idx[i]];
    }
  };
  Eigen::MatrixXd train_xt, val_xt;
  std::vector<int> train_lab, val_lab;
  gather(train_idx, train_xt, train_lab);
  gather(val_idx, val_xt, val_lab);
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    train_xt.row(c) = (train_xt.row(c).array() - model.feature_mean(c)) / model.feature_std(c);
    if (val_xt.cols() > 0)
      val_xt.row(c) = (val_xt.row(c).array() - model.feature_mean(c)) / model.feature_std(c);
  }

  auto record = [&](double train_loss) {
    result.history.train_loss.push_back(train_loss);
    result.history.validation_loss.push_back(
        val_xt.cols() > 0 ? loss_and_grad(model, val_xt, val_lab, nullptr) : train_loss);
  };

  if (config.optimizer == Optimizer::gradient_descent_momentum) {
    double lr = 0.1;
    const double momentum = 0.9;
    Eigen::VectorXd theta = pack(model);
    Eigen::VectorXd velocity = Eigen::VectorXd::Zero(theta.size());
    Gradients grad;
    double loss = loss_and_grad(model, train_xt, train_lab, &grad);
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
      const Eigen::VectorXd g = pack_grad(grad);
      double new_loss = loss;
      // Reject loss-increasing steps (halving the rate) so the recorded
      // history is non-increasing.
      while (true) {
        const Eigen::VectorXd v_try = momentum * velocity - lr * g;
        unpack(theta + v_try, model);
        new_loss = loss_and_grad(model, train_xt, train_lab, nullptr);
        if (new_loss <= loss + 1e-12 || lr < 1e-15) {
          theta += v_try;
          velocity = v_try;
          lr *= 1.05;
          break;
        }
        lr *= 0.5;
        velocity.setZero();
      }
      unpack(theta, model);
      const double prev = loss;
      loss = loss_and_grad(model, train_xt, train_lab, &grad);
      record(loss);
      if (config.tolerance > 0.0 && std::abs(prev - loss) <= config.tolerance) break;
    }
  } else {
    // Scaled conjugate gradient (Moller 1993), full batch.
    Eigen::VectorXd theta = pack(model);
    Gradients grad;
    double loss = loss_and_grad(model, train_xt, train_lab, &grad);
    Eigen::VectorXd r = -pack_grad(grad);
    Eigen::VectorXd p = r;
    double lambda = 1e-6, lambda_bar = 0.0;
    bool success = true;
    double delta = 0.0;
    const double sigma0 = 1e-4;
    const Eigen::Index dim = theta.size();
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
      const double p2 = p.squaredNorm();
      if (p2 <= 0.0) break;
      const double pnorm = std::sqrt(p2);
      if (success) {
        const double sigma = sigma0 / pnorm;
        unpack(theta + sigma * p, model);
        Gradients grad_s;
        loss_and_grad(model, train_xt, train_lab, &grad_s);
        const Eigen::VectorXd s = (pack_grad(grad_s) - pack_grad(grad)) / sigma;
        delta = p.dot(s);
      }
      delta += (lambda - lambda_bar) * p2;
      if (delta <= 0.0) {
        lambda_bar = 2.0 * (lambda - delta / p2);
        delta = -delta + lambda * p2;
        lambda = lambda_bar;
      }
      const double mu = p.dot(r);
      const double alpha = mu / delta;
      unpack(theta + alpha * p, model);
      const double loss_try = loss_and_grad(model, train_xt, train_lab, nullptr);
      const double comparison = 2.0 * delta * (loss - loss_try) / (mu * mu);
      if (comparison >= 0.0) {
        theta += alpha * p;
        unpack(theta, model);
        loss = loss_and_grad(model, train_xt, train_lab, &grad);
        const Eigen::VectorXd r_new = -pack_grad(grad);
        lambda_bar = 0.0;
        success = true;
        if ((epoch + 1) % static_cast<int>(std::min<Eigen::Index>(dim, 1 << 20)) == 0) {
          p = r_new;
        } else {
          const double beta = (r_new.squaredNorm() - r_new.dot(r)) / mu;
          p = r_new + beta * p;
        }
        r = r_new;
        if (comparison >= 0.75) lambda = std::max(lambda * 0.25, 1e-15);
      } else {
        lambda_bar = lambda;
        success = false;
        unpack(theta, model);
      }
      if (comparison < 0.25) lambda += delta * (1.0 - comparison) / p2;
      record(loss);
      const auto& hist = result.history.train_loss;
      if (config.tolerance > 0.0 && hist.size() >= 2 &&
          std::abs(hist[hist.size() - 2] - hist.back()) <= config.tolerance)
        break;
      if (r.norm() < 1e-12) break;
    }
    unpack(theta, model);
  }

  return result;
}

Eigen::MatrixXd predict(const MlpModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.n_in())
    throw DataError("ShapeMismatch: feature width " + std::to_string(features.cols()) +
                    " != model input " + std::to_string(model.n_in()));
  const Eigen::MatrixXd xn_t = normalize(model, features).transpose();
  const Forward f = forward_pass(model, xn_t);
  return f.probs.transpose();
}

double gradient_check(const MlpModel& model, const Eigen::MatrixXd& features,
                      const std::vector<int>& labels) {
  if (features.rows() == 0) throw DataError("gradient_check: empty batch");
  MlpModel work = model;
  const Eigen::MatrixXd xn_t = normalize(work, features).transpose();

  Gradients grad;
  loss_and_grad(work, xn_t, labels, &grad);
  const Eigen::VectorXd g_bp = pack_grad(grad);

  Eigen::VectorXd theta = pack(work);
  const double h = 1e-6;
  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta(i);
    theta(i) = saved + h;
    unpack(theta, work);
    const double f_plus = loss_and_grad(work, xn_t, labels, nullptr);
    theta(i) = saved - h;
    unpack(theta, work);
    const double f_minus = loss_and_grad(work, xn_t, labels, nullptr);
    theta(i) = saved;
    const double g_fd = (f_plus - f_minus) / (2.0 * h);
    const double rel = std::abs(g_bp(i) - g_fd) /
                       std::max(std::abs(g_bp(i)) + std::abs(g_fd), 1e-8);
    max_rel = std::max(max_rel, rel);
  }
  unpack(theta, work);
  return max_rel;
}

std::string mlp_model_json(const MlpModel& model) {
  nlohmann::ordered_json j;
  j["n_in"] = model.n_in();
  j["n_hidden"] = model.n_hidden();
  j["n_out"] = model.n_out();
  auto matrix_rows = [](const Eigen::MatrixXd& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  j["w1"] = matrix_rows(model.w1);
  j["b1"] = vec(model.b1);
  j["w2"] = matrix_rows(model.w2);
  j["b2"] = vec(model.b2);
  j["feature_mean"] = vec(model.feature_mean);
  j["feature_std"] = vec(model.feature_std);
  j["constant_features"] = model.constant_features;
  j["si_classes"] = model.si_classes;
  return j.dump(2) + "\n";
}

MlpModel mlp_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model JSON parse failure: ") + e.what());
  }
  MlpModel m;
  const int n_in = j.at("n_in").get<int>();
  const int n_hidden = j.at("n_hidden").get<int>();
  const int n_out = j.at("n_out").get<int>();
  auto read_matrix = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m2(rows, cols);
    const auto& rows_j = j.at(key);
    if (static_cast<Eigen::Index>(rows_j.size()) != rows)
      throw DataError(std::string("model JSON: bad shape for ") + key);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& row = rows_j[static_cast<std::size_t>(r)];
      if (static_cast<Eigen::Index>(row.size()) != cols)
        throw DataError(std::string("model JSON: bad shape for ") + key);
      for (Eigen::Index c = 0; c < cols; ++c)
        m2(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m2;
  };
  auto read_vector = [&](const char* key, Eigen::Index size) {
    const auto v = j.at(key).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != size)
      throw DataError(std::string("model JSON: bad shape for ") + key);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), size).eval();
  };
  m.w1 = read_matrix("w1", n_hidden, n_in);
  m.b1 = read_vector("b1", n_hidden);
  m.w2 = read_matrix("w2", n_out, n_hidden);
  m.b2 = read_vector("b2", n_out);
  m.feature_mean = read_vector("feature_mean", n_in);
  m.feature_std = read_vector("feature_std", n_in);
  m.constant_features = j.value("constant_features", std::vector<int>{});
  m.si_classes = j.value("si_classes", std::vector<double>{});
  if (!m.w1.allFinite() || !m.w2.allFinite())
    throw DataError("model JSON: non-finite weights");
  return m;
}

void write_confusion_csv(const std::vector<int>& true_labels,
                         const std::vector<int>& predicted_labels, int n_classes,
                         std::ostream& out) {
  std::vector<std::vector<std::size_t>> counts(
      static_cast<std::size_t>(n_classes),
      std::vector<std::size_t>(static_cast<std::size_t>(n_classes), 0));
  for (std::size_t i = 0; i < true_labels.size() && i < predicted_labels.size(); ++i)
    counts[static_cast<std::size_t>(true_labels[i])]
          [static_cast<std::size_t>(predicted_labels[i])]++;
  out << "true_class";
  for (int c = 0; c < n_classes; ++c) out << ",pred_" << c;
  out << '\n';
  for (int r = 0; r < n_classes; ++r) {
    out << r;
    for (int c = 0; c < n_classes; ++c)
      out << ',' << counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    out << '\n';
  }
}

}  // namespace aeromag
