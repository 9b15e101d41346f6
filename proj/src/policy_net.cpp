#include "metadrl/policy_net.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace metadrl {

namespace {

constexpr double kLogFloor = 1e-12;

struct Offsets {
  std::size_t w1, b1, w2, b2, w3, b3, end;
};

Offsets offsets_for(const NetLayout& l) {
  Offsets o{};
  o.w1 = 0;
  o.b1 = o.w1 + static_cast<std::size_t>(l.hidden1) * l.input_size;
  o.w2 = o.b1 + l.hidden1;
  o.b2 = o.w2 + static_cast<std::size_t>(l.hidden2) * l.hidden1;
  o.w3 = o.b2 + l.hidden2;
  o.b3 = o.w3 + static_cast<std::size_t>(l.output_size) * l.hidden2;
  o.end = o.b3 + l.output_size;
  return o;
}

void check_params(const ParamVector& params) {
  if (params.values.size() != params.layout.param_count()) {
    throw std::invalid_argument("parameter vector length " + std::to_string(params.values.size()) +
                                " does not match layout size " +
                                std::to_string(params.layout.param_count()));
  }
  for (double v : params.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite parameter entry");
  }
}

// Activations kept for the backward pass.
struct Activations {
  std::vector<double> z1, h1, z2, h2, logits;
};

Activations run_forward(const ParamVector& params, const Observation& obs) {
  const NetLayout& l = params.layout;
  if (obs.size() != l.input_size) {
    throw std::invalid_argument("observation width " + std::to_string(obs.size()) +
                                " does not match network input " + std::to_string(l.input_size));
  }
  const Offsets o = offsets_for(l);
  const double* p = params.values.data();
  Activations a;

  a.z1.assign(p + o.b1, p + o.b1 + l.hidden1);
  for (int j = 0; j < l.input_size; ++j) {
    const double x = obs.entries[j];
    if (x == 0.0) continue;
    for (int i = 0; i < l.hidden1; ++i) a.z1[i] += p[o.w1 + static_cast<std::size_t>(i) * l.input_size + j] * x;
  }
  a.h1.resize(l.hidden1);
  for (int i = 0; i < l.hidden1; ++i) a.h1[i] = std::max(0.0, a.z1[i]);

  a.z2.assign(p + o.b2, p + o.b2 + l.hidden2);
  for (int i = 0; i < l.hidden2; ++i) {
    const double* row = p + o.w2 + static_cast<std::size_t>(i) * l.hidden1;
    double s = 0.0;
    for (int j = 0; j < l.hidden1; ++j) s += row[j] * a.h1[j];
    a.z2[i] += s;
  }
  a.h2.resize(l.hidden2);
  for (int i = 0; i < l.hidden2; ++i) a.h2[i] = std::max(0.0, a.z2[i]);

  a.logits.assign(p + o.b3, p + o.b3 + l.output_size);
  for (int i = 0; i < l.output_size; ++i) {
    const double* row = p + o.w3 + static_cast<std::size_t>(i) * l.hidden2;
    double s = 0.0;
    for (int j = 0; j < l.hidden2; ++j) s += row[j] * a.h2[j];
    a.logits[i] += s;
  }
  return a;
}

// Accumulates d(loss)/d(params) given d(loss)/d(logits) for one input.
void run_backward(const ParamVector& params, const Observation& obs, const Activations& a,
                  std::span<const double> dlogits, std::vector<double>& grad) {
  const NetLayout& l = params.layout;
  const Offsets o = offsets_for(l);
  const double* p = params.values.data();
  double* g = grad.data();

  std::vector<double> dh2(l.hidden2, 0.0);
  for (int i = 0; i < l.output_size; ++i) {
    const double d = dlogits[i];
    if (d == 0.0) continue;
    g[o.b3 + i] += d;
    double* grow = g + o.w3 + static_cast<std::size_t>(i) * l.hidden2;
    const double* prow = p + o.w3 + static_cast<std::size_t>(i) * l.hidden2;
    for (int j = 0; j < l.hidden2; ++j) {
      grow[j] += d * a.h2[j];
      dh2[j] += d * prow[j];
    }
  }

  std::vector<double> dh1(l.hidden1, 0.0);
  for (int i = 0; i < l.hidden2; ++i) {
    if (a.z2[i] <= 0.0) continue;
    const double d = dh2[i];
    g[o.b2 + i] += d;
    double* grow = g + o.w2 + static_cast<std::size_t>(i) * l.hidden1;
    const double* prow = p + o.w2 + static_cast<std::size_t>(i) * l.hidden1;
    for (int j = 0; j < l.hidden1; ++j) {
      grow[j] += d * a.h1[j];
      dh1[j] += d * prow[j];
    }
  }

  for (int i = 0; i < l.hidden1; ++i) {
    if (a.z1[i] <= 0.0) continue;
    const double d = dh1[i];
    g[o.b1 + i] += d;
    for (int j = 0; j < l.input_size; ++j) {
      const double x = obs.entries[j];
      if (x != 0.0) g[o.w1 + static_cast<std::size_t>(i) * l.input_size + j] += d * x;
    }
  }
}

double standard_normal(Rng& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::size_t NetLayout::param_count() const { return offsets_for(*this).end; }

void NetLayout::validate() const {
  if (input_size < 1 || hidden1 < 1 || hidden2 < 1 || output_size < 1) {
    throw std::invalid_argument("all layer sizes must be at least 1");
  }
}

NetLayout layout_for(int n_channels, int hidden1, int hidden2) {
  NetLayout l{n_channels, hidden1, hidden2, n_channels};
  l.validate();
  return l;
}

NetWeights unflatten(const ParamVector& params) {
  const Offsets o = offsets_for(params.layout);
  const auto& v = params.values;
  auto slice = [&](std::size_t a, std::size_t b) { return std::vector<double>(v.begin() + a, v.begin() + b); };
  return NetWeights{params.layout, slice(o.w1, o.b1), slice(o.b1, o.w2), slice(o.w2, o.b2),
                    slice(o.b2, o.w3), slice(o.w3, o.b3), slice(o.b3, o.end)};
}

ParamVector flatten(const NetWeights& w) {
  ParamVector out{w.layout, {}};
  out.values.reserve(w.layout.param_count());
  for (const auto* part : {&w.w1, &w.b1, &w.w2, &w.b2, &w.w3, &w.b3}) {
    out.values.insert(out.values.end(), part->begin(), part->end());
  }
  if (out.values.size() != w.layout.param_count()) {
    throw std::invalid_argument("tensor sizes do not match layout");
  }
  return out;
}

ParamVector zero_params(const NetLayout& layout) {
  layout.validate();
  return ParamVector{layout, std::vector<double>(layout.param_count(), 0.0)};
}

ParamVector init_params(const NetLayout& layout, Rng& rng) {
  ParamVector params = zero_params(layout);
  const Offsets o = offsets_for(layout);
  auto fill = [&](std::size_t begin, std::size_t end, int fan_in) {
    const double scale = std::sqrt(2.0 / fan_in);
    for (std::size_t k = begin; k < end; ++k) params.values[k] = scale * standard_normal(rng);
  };
  fill(o.w1, o.b1, layout.input_size);
  fill(o.w2, o.b2, layout.hidden1);
  fill(o.w3, o.b3, layout.hidden2);
  return params;
}

ActionDistribution softmax(std::span<const double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  ActionDistribution dist{std::vector<double>(z.size())};
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    dist.probs[i] = std::exp(z[i] - top);
    total += dist.probs[i];
  }
  for (double& q : dist.probs) q /= total;
  return dist;
}

std::vector<double> logits(const ParamVector& params, const Observation& obs) {
  check_params(params);
  return run_forward(params, obs).logits;
}

ActionDistribution forward(const ParamVector& params, const Observation& obs) {
  return softmax(logits(params, obs));
}

int greedy_action(const ActionDistribution& dist) {
  return static_cast<int>(std::max_element(dist.probs.begin(), dist.probs.end()) - dist.probs.begin());
}

int sample_action_with_draw(const ActionDistribution& dist, double u) {
  double cumulative = 0.0;
  const int n = static_cast<int>(dist.probs.size());
  for (int i = 0; i < n; ++i) {
    cumulative += dist.probs[i];
    if (u < cumulative) return i;
  }
  // u landed in the rounding gap above the final partial sum.
  for (int i = n - 1; i >= 0; --i) {
    if (dist.probs[i] > 0.0) return i;
  }
  return n - 1;
}

int sample_action(const ActionDistribution& dist, Rng& rng) {
  return sample_action_with_draw(dist, rng.uniform());
}

LossAndGrad weighted_loss_and_gradient(const ParamVector& params, const Trajectory& traj,
                                       std::span<const double> weights) {
  check_params(params);
  const int h = traj.length();
  if (h < 1) throw std::invalid_argument("trajectory must contain at least one step");
  if (static_cast<int>(weights.size()) != h) throw std::invalid_argument("one weight per step required");

  LossAndGrad out{0.0, std::vector<double>(params.size(), 0.0)};
  const int n_out = params.layout.output_size;

  // Steps sharing an observation share one forward/backward pass: their
  // logit gradients are summed first, in step order.
  struct Group {
    const Observation* obs;
    Activations act;
    std::vector<double> probs;
    std::vector<double> dlogits;
  };
  std::vector<Group> groups;

  for (int t = 0; t < h; ++t) {
    const Step& step = traj.steps[t];
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return *g.obs == step.state; });
    if (it == groups.end()) {
      Group g{&step.state, run_forward(params, step.state), {}, std::vector<double>(n_out, 0.0)};
      g.probs = softmax(g.act.logits).probs;
      groups.push_back(std::move(g));
      it = std::prev(groups.end());
    }
    const double coeff = weights[t] / h;
    if (coeff == 0.0) continue;
    const double prob = it->probs[step.action];
    if (prob < kLogFloor) {
      // Floored log is constant in the parameters.
      out.loss -= coeff * std::log(kLogFloor);
      continue;
    }
    out.loss -= coeff * std::log(prob);
    for (int j = 0; j < n_out; ++j) it->dlogits[j] += coeff * it->probs[j];
    it->dlogits[step.action] -= coeff;
  }

  for (const Group& g : groups) run_backward(params, *g.obs, g.act, g.dlogits, out.grad);
  return out;
}

LossAndGrad episode_loss_and_gradient(const ParamVector& params, const Trajectory& traj, double gamma,
                                      ReturnConvention convention) {
  std::vector<int> rewards;
  rewards.reserve(traj.steps.size());
  for (const Step& s : traj.steps) rewards.push_back(s.reward);
  const std::vector<double> w = returns_weights(rewards, gamma, convention);
  return weighted_loss_and_gradient(params, traj, w);
}

std::pair<std::vector<double>, AdamState> adam_step(std::span<const double> params, const AdamState& state,
                                                    std::span<const double> grad, double lr) {
  const std::size_t n = params.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    throw std::invalid_argument("adam_step: length mismatch");
  }
  AdamState next{std::vector<double>(n), std::vector<double>(n), state.step_count + 1};
  std::vector<double> out(n);
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(next.step_count));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(next.step_count));
  for (std::size_t i = 0; i < n; ++i) {
    next.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
    next.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    const double m_hat = next.m[i] / c1;
    const double v_hat = next.v[i] / c2;
    out[i] = params[i] - lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
  }
  return {std::move(out), std::move(next)};
}

std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const AdamState& state,
                                            std::span<const double> grad, double lr) {
  auto [values, next] = adam_step(std::span<const double>(params.values), state, grad, lr);
  return {ParamVector{params.layout, std::move(values)}, std::move(next)};
}

std::vector<double> sgd_step(std::span<const double> params, std::span<const double> grad, double lr) {
  if (grad.size() != params.size()) throw std::invalid_argument("sgd_step: length mismatch");
  std::vector<double> out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - lr * grad[i];
  return out;
}

ParamVector sgd_step(const ParamVector& params, std::span<const double> grad, double lr) {
  return ParamVector{params.layout, sgd_step(std::span<const double>(params.values), grad, lr)};
}

void save_checkpoint(std::ostream& out, const ParamVector& params) {
  const NetLayout& l = params.layout;
  out << "layout " << l.input_size << ' ' << l.hidden1 << ' ' << l.hidden2 << ' ' << l.output_size << '\n';
  out << params.values.size() << '\n';
  char buf[64];
  for (double v : params.values) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
    out.put('\n');
  }
}

ParamVector load_checkpoint(std::istream& in) {
  std::string tag;
  NetLayout l;
  if (!(in >> tag >> l.input_size >> l.hidden1 >> l.hidden2 >> l.output_size) || tag != "layout") {
    throw std::runtime_error("checkpoint: malformed layout line");
  }
  l.validate();
  std::size_t count = 0;
  if (!(in >> count)) throw std::runtime_error("checkpoint: missing parameter count");
  if (count != l.param_count()) {
    throw std::runtime_error("checkpoint: parameter count " + std::to_string(count) +
                             " does not match layout size " + std::to_string(l.param_count()));
  }
  ParamVector params{l, std::vector<double>(count)};
  std::string token;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> token)) throw std::runtime_error("checkpoint: truncated at value " + std::to_string(i));
    auto res = std::from_chars(token.data(), token.data() + token.size(), params.values[i]);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
      throw std::runtime_error("checkpoint: bad value '" + token + "'");
    }
  }
  return params;
}

}  // namespace metadrl
