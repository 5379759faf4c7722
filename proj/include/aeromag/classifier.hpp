#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "aeromag/euler.hpp"

namespace aeromag {

// Feedforward classifier: tanh hidden layer, softmax output, trained with
// cross-entropy. Feature normalization constants are captured at training
// time; zero-variance features get stddev 1 and are flagged.
struct MlpModel {
  Eigen::MatrixXd w1;  // hidden x in
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // out x hidden
  Eigen::VectorXd b2;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_std;
  std::vector<int> constant_features;
  std::vector<double> si_classes;  // si value per output class, when known

  int n_in() const { return static_cast<int>(w1.cols()); }
  int n_hidden() const { return static_cast<int>(w1.rows()); }
  int n_out() const { return static_cast<int>(w2.rows()); }
};

enum class Optimizer { scaled_conjugate_gradient, gradient_descent_momentum };

struct TrainingConfig {
  Optimizer optimizer = Optimizer::scaled_conjugate_gradient;
  int max_epochs = 200;
  double tolerance = 0.0;  // stop when the epoch loss delta falls below this
  std::uint64_t seed = 0;
  double split = 0.8;  // train fraction, stratified by class
  int hidden = 100;

  void validate() const;
};

struct TrainingHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
};

struct TrainResult {
  MlpModel model;
  TrainingHistory history;
};

// Untrained model with uniform(-sqrt(6/(fan_in+fan_out)), +...) weights and
// zero biases, drawn in fixed order from the seeded generator.
MlpModel make_mlp(int n_in, int n_hidden, int n_out, std::uint64_t seed);

// One feature row per solution: x0 and y0 normalized to the grid extent,
// z0, rms, |base|, and the horizontal gradient magnitude at the window
// center. Labels index the solution's si within the config's si_set.
std::pair<Eigen::MatrixXd, std::vector<int>> build_features(const SolutionSet& set,
                                                            const Grid& tx,
                                                            const Grid& ty);

// Full-batch training; bit-deterministic for a fixed seed and config
// (single-threaded by contract). The momentum optimizer rejects
// loss-increasing steps, so its history is non-increasing.
TrainResult train_mlp(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                      const TrainingConfig& config, int n_classes = 6);

// Class probabilities, one row per sample; rows sum to 1.
Eigen::MatrixXd predict(const MlpModel& model, const Eigen::MatrixXd& features);

// Max over parameters of the relative difference between backpropagated
// and central finite-difference gradients at h = 1e-6.
double gradient_check(const MlpModel& model, const Eigen::MatrixXd& features,
                      const std::vector<int>& labels);

std::string mlp_model_json(const MlpModel& model);
MlpModel mlp_model_from_json(const std::string& text);

void write_confusion_csv(const std::vector<int>& true_labels,
                         const std::vector<int>& predicted_labels, int n_classes,
                         std::ostream& out);

}  // namespace aeromag
