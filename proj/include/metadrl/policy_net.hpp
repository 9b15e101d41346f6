#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "metadrl/channel_env.hpp"
#include "metadrl/rng.hpp"
#include "metadrl/trajectory.hpp"

namespace metadrl {

/// Widths of the N -> hidden1 -> hidden2 -> N rectifier/softmax network.
struct NetLayout {
  int input_size = 10;
  int hidden1 = 50;
  int hidden2 = 20;
  int output_size = 10;

  /// Total parameter count D.
  std::size_t param_count() const;
  void validate() const;

  friend bool operator==(const NetLayout&, const NetLayout&) = default;
};

NetLayout layout_for(int n_channels, int hidden1 = 50, int hidden2 = 20);

/// Flat parameters. Order: W1 (hidden1 x input, row-major), b1,
/// W2 (hidden2 x hidden1), b2, W3 (output x hidden2), b3.
struct ParamVector {
  NetLayout layout;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

/// Unflattened view of a ParamVector, one buffer per tensor.
struct NetWeights {
  NetLayout layout;
  std::vector<double> w1, b1, w2, b2, w3, b3;
};

NetWeights unflatten(const ParamVector& params);
ParamVector flatten(const NetWeights& weights);

ParamVector zero_params(const NetLayout& layout);

/// Rectifier-scaled Gaussian weights (std sqrt(2/fan_in)), zero biases.
ParamVector init_params(const NetLayout& layout, Rng& rng);

struct ActionDistribution {
  std::vector<double> probs;
};

/// Softmax policy for the given observation. Throws std::invalid_argument
/// on non-finite parameters or an observation of the wrong width.
ActionDistribution forward(const ParamVector& params, const Observation& obs);

/// Pre-softmax outputs.
std::vector<double> logits(const ParamVector& params, const Observation& obs);

ActionDistribution softmax(std::span<const double> logits);

/// Argmax, lowest index on ties.
int greedy_action(const ActionDistribution& dist);

/// Inverse-CDF sample; consumes exactly one uniform variate.
int sample_action(const ActionDistribution& dist, Rng& rng);
int sample_action_with_draw(const ActionDistribution& dist, double u);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Policy-gradient loss -(1/H) sum_t w_t log pi(a_t|s_t) and its exact
/// gradient. Probabilities are floored at 1e-12 inside the log.
LossAndGrad episode_loss_and_gradient(const ParamVector& params, const Trajectory& traj,
                                      double gamma, ReturnConvention convention);

/// Same loss with caller-supplied weights (one per step).
LossAndGrad weighted_loss_and_gradient(const ParamVector& params, const Trajectory& traj,
                                       std::span<const double> weights);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step_count = 0;

  static AdamState zeros(std::size_t n) { return AdamState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

std::pair<std::vector<double>, AdamState> adam_step(std::span<const double> params,
                                                    const AdamState& state,
                                                    std::span<const double> grad, double lr);
std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const AdamState& state,
                                            std::span<const double> grad, double lr);

std::vector<double> sgd_step(std::span<const double> params, std::span<const double> grad, double lr);
ParamVector sgd_step(const ParamVector& params, std::span<const double> grad, double lr);

/// Plain-text checkpoint: `layout N h1 h2 N`, then D, then one value per
/// line in shortest round-trip decimal form.
void save_checkpoint(std::ostream& out, const ParamVector& params);
ParamVector load_checkpoint(std::istream& in);

}  // namespace metadrl
