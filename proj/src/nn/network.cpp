#include "semitc/nn/network.hpp"

#include <bit>
#include <cmath>

#include "semitc/error.hpp"

namespace semitc::nn {

using nlohmann::json;

std::vector<LayerSpec> standard_trunk() {
  using L = LayerSpec;
  return {L::conv(32, 5), L::batchnorm(32), L::relu(),       L::conv(32, 5), L::batchnorm(32),
          L::relu(),      L::maxpool(3),    L::batchnorm(32), L::conv(64, 3), L::batchnorm(64),
          L::relu(),      L::maxpool(3),    L::batchnorm(64), L::flatten()};
}

std::vector<LayerSpec> standard_head(std::size_t outputs) {
  using L = LayerSpec;
  return {L::dense(256), L::relu(), L::dense(128), L::relu(), L::dense(128), L::relu(), L::dense(outputs)};
}

NetworkSpec regressor_spec(std::size_t window) { return {2, window, standard_trunk(), standard_head(kRegressionOutputs)}; }

NetworkSpec classifier_spec(std::size_t num_classes, std::size_t window) {
  return {2, window, standard_trunk(), standard_head(num_classes)};
}

ShapeLedger check_architecture(const NetworkSpec& spec) {
  if (spec.in_channels != 2) throw ConfigError("network input must have 2 channels (IAT, signed length)");
  if (spec.trunk != standard_trunk()) {
    std::string got;
    for (const auto& l : spec.trunk) got += (got.empty() ? "" : " ") + to_string(l);
    throw ConfigError("trunk deviates from the standard Conv(32,5)/Conv(32,5)/Pool(3)/Conv(64,3)/Pool(3) layout: " +
                      got);
  }
  const bool head_ok = !spec.head.empty() && spec.head.back().kind == LayerKind::Dense &&
                       spec.head.back().units > 0 && spec.head == standard_head(spec.head.back().units);
  if (!head_ok)
    throw ConfigError("head must be Dense(256) ReLU Dense(128) ReLU Dense(128) ReLU Dense(outputs)");

  ShapeLedger ledger;
  ledger.input = {spec.in_channels, spec.window};
  Shape shape = ledger.input;
  for (const auto& l : spec.trunk) {
    shape = make_layer(l, shape)->output_shape(shape);
    ledger.trunk.emplace_back(l, shape);
  }
  for (const auto& l : spec.head) {
    shape = make_layer(l, shape)->output_shape(shape);
    ledger.head.emplace_back(l, shape);
  }
  return ledger;
}

void adam_step(std::span<Parameter* const> params, std::uint64_t& step, const AdamConfig& c) {
  ++step;
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      double& m = p->first_moment[i];
      double& v = p->second_moment[i];
      m = c.beta1 * m + (1.0 - c.beta1) * g;
      v = c.beta2 * v + (1.0 - c.beta2) * g * g;
      const double m_hat = m / correction1;
      const double v_hat = v / correction2;
      p->value[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

namespace {

std::vector<std::unique_ptr<Layer>> build(const std::vector<LayerSpec>& specs, Shape& shape) {
  std::vector<std::unique_ptr<Layer>> layers;
  for (const auto& s : specs) {
    layers.push_back(make_layer(s, shape));
    shape = layers.back()->output_shape(shape);
  }
  return layers;
}

std::vector<std::unique_ptr<Layer>> clone_all(const std::vector<std::unique_ptr<Layer>>& layers) {
  std::vector<std::unique_ptr<Layer>> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l->clone());
  return out;
}

std::vector<Parameter*> collect(std::vector<std::unique_ptr<Layer>>& layers) {
  std::vector<Parameter*> out;
  for (auto& l : layers)
    for (auto* p : l->parameters()) out.push_back(p);
  return out;
}

}  // namespace

Network::Network(const NetworkSpec& spec, std::uint64_t seed) : spec_(spec), ledger_(check_architecture(spec)) {
  Shape shape = ledger_.input;
  trunk_ = build(spec_.trunk, shape);
  head_ = build(spec_.head, shape);
  Rng rng(seed);
  for (auto& l : trunk_) l->initialize(rng);
  for (auto& l : head_) l->initialize(rng);
}

Network::Network(const Network& other)
    : spec_(other.spec_),
      ledger_(other.ledger_),
      trunk_(clone_all(other.trunk_)),
      head_(clone_all(other.head_)),
      mode_(other.mode_),
      trunk_frozen_(other.trunk_frozen_),
      optimizer_steps_(other.optimizer_steps_) {}

Network& Network::operator=(const Network& other) {
  if (this != &other) *this = Network(other);
  return *this;
}

Tensor Network::forward_trunk(const Tensor& x) {
  if (x.rank() != 3 || x.dim(1) != spec_.in_channels || x.dim(2) != spec_.window)
    throw ShapeError("network expects input [N, " + std::to_string(spec_.in_channels) + ", " +
                     std::to_string(spec_.window) + "], got " + to_string(x.shape));
  const bool train = mode_ == Mode::Train && !trunk_frozen_;
  Tensor h = x;
  for (auto& l : trunk_) h = l->forward(h, train);
  return h;
}

Tensor Network::forward(const Tensor& x) {
  Tensor h = forward_trunk(x);
  for (auto& l : head_) h = l->forward(h, mode_ == Mode::Train);
  return h;
}

Tensor Network::backward(const Tensor& dy) {
  Tensor g = dy;
  for (auto it = head_.rbegin(); it != head_.rend(); ++it) g = (*it)->backward(g);
  if (trunk_frozen_) return {};
  for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Network::zero_grad() {
  for (auto* p : all_parameters()) p->zero_grad();
}

void Network::reinitialize_head(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : head_) l->initialize(rng);
  for (auto* p : head_parameters()) {
    p->first_moment.fill(0.0);
    p->second_moment.fill(0.0);
  }
}

std::vector<Parameter*> Network::trunk_parameters() { return collect(trunk_); }
std::vector<Parameter*> Network::head_parameters() { return collect(head_); }

std::vector<Parameter*> Network::trainable_parameters() {
  if (trunk_frozen_) return head_parameters();
  return all_parameters();
}

std::vector<Parameter*> Network::all_parameters() {
  auto out = collect(trunk_);
  for (auto* p : collect(head_)) out.push_back(p);
  return out;
}

std::vector<BatchNorm1d*> Network::trunk_batchnorms() {
  std::vector<BatchNorm1d*> out;
  for (auto& l : trunk_)
    if (auto* bn = dynamic_cast<BatchNorm1d*>(l.get())) out.push_back(bn);
  return out;
}

void Network::optimizer_step(const AdamConfig& config) {
  const auto params = trainable_parameters();
  adam_step(params, optimizer_steps_, config);
}

std::uint64_t Network::activation_signature() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : trunk_) l->mix_signature(h);
  for (const auto& l : head_) l->mix_signature(h);
  return h;
}

std::uint64_t Network::trunk_checksum() const {
  auto& self = const_cast<Network&>(*this);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (auto* p : self.trunk_parameters())
    for (double v : p->value.data) mix(v);
  for (auto* bn : self.trunk_batchnorms()) {
    for (double v : bn->running_mean()) mix(v);
    for (double v : bn->running_var()) mix(v);
  }
  return h;
}

void transfer_trunk(const Network& src, Network& dst, bool freeze) {
  if (src.spec_.trunk != dst.spec_.trunk || src.spec_.in_channels != dst.spec_.in_channels ||
      src.spec_.window != dst.spec_.window)
    throw ConfigError("incompatible trunk: source and destination trunk layouts or input geometry differ");
  dst.trunk_ = clone_all(src.trunk_);
  for (auto* p : dst.all_parameters()) {
    p->zero_grad();
    p->first_moment.fill(0.0);
    p->second_moment.fill(0.0);
  }
  dst.optimizer_steps_ = 0;
  dst.trunk_frozen_ = freeze;
}

// --- serialization ---

namespace {

json spec_to_json(const std::vector<LayerSpec>& layers) {
  json out = json::array();
  for (const auto& l : layers) out.push_back({{"kind", to_string(l.kind)}, {"units", l.units}, {"kernel", l.kernel}});
  return out;
}

std::vector<LayerSpec> spec_from_json(const json& j) {
  std::vector<LayerSpec> out;
  for (const auto& l : j)
    out.push_back({layer_kind_from_string(l.at("kind").get<std::string>()), l.at("units").get<std::size_t>(),
                   l.at("kernel").get<std::size_t>()});
  return out;
}

json layer_state(Layer& layer) {
  json params = json::array();
  for (auto* p : layer.parameters())
    params.push_back({{"name", p->name},
                      {"shape", p->value.shape},
                      {"value", p->value.data},
                      {"m", p->first_moment.data},
                      {"v", p->second_moment.data}});
  json state{{"params", std::move(params)}};
  if (auto* bn = dynamic_cast<BatchNorm1d*>(&layer)) {
    state["running_mean"] = bn->running_mean();
    state["running_var"] = bn->running_var();
  }
  return state;
}

void load_layer_state(Layer& layer, const json& state) {
  const auto params = layer.parameters();
  const auto& saved = state.at("params");
  if (saved.size() != params.size()) throw DataError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    const auto& s = saved[i];
    if (s.at("shape").get<Shape>() != p.value.shape)
      throw DataError("checkpoint parameter '" + p.name + "' has wrong shape");
    {
      const auto values = s.at("value").get<std::vector<double>>();
      p.value.data.assign(values.begin(), values.end());
    }
    {
      const auto values = s.at("m").get<std::vector<double>>();
      p.first_moment.data.assign(values.begin(), values.end());
    }
    {
      const auto values = s.at("v").get<std::vector<double>>();
      p.second_moment.data.assign(values.begin(), values.end());
    }
    if (p.value.data.size() != Tensor::element_count(p.value.shape))
      throw DataError("checkpoint parameter '" + p.name + "' has wrong size");
    if (p.first_moment.size() != p.value.size() || p.second_moment.size() != p.value.size())
      throw DataError("checkpoint optimizer state for '" + p.name + "' has wrong size");
  }
  if (auto* bn = dynamic_cast<BatchNorm1d*>(&layer)) {
    bn->running_mean() = state.at("running_mean").get<std::vector<double>>();
    bn->running_var() = state.at("running_var").get<std::vector<double>>();
    if (bn->running_mean().size() != bn->spec().units || bn->running_var().size() != bn->spec().units)
      throw DataError("checkpoint batch-norm statistics have wrong size");
  }
}

}  // namespace

json Network::to_json() const {
  json trunk = json::array(), head = json::array();
  for (const auto& l : trunk_) trunk.push_back(layer_state(*l));
  for (const auto& l : head_) head.push_back(layer_state(*l));
  return json{{"in_channels", spec_.in_channels},
              {"window", spec_.window},
              {"trunk_spec", spec_to_json(spec_.trunk)},
              {"head_spec", spec_to_json(spec_.head)},
              {"trunk", std::move(trunk)},
              {"head", std::move(head)},
              {"mode", mode_ == Mode::Train ? "train" : "eval"},
              {"trunk_frozen", trunk_frozen_},
              {"optimizer", {{"kind", "adam"}, {"steps", optimizer_steps_}}}};
}

Network Network::from_json(const json& j) {
  NetworkSpec spec{j.at("in_channels").get<std::size_t>(), j.at("window").get<std::size_t>(),
                   spec_from_json(j.at("trunk_spec")), spec_from_json(j.at("head_spec"))};
  Network net(spec, 0);
  const auto& trunk = j.at("trunk");
  const auto& head = j.at("head");
  if (trunk.size() != net.trunk_.size() || head.size() != net.head_.size())
    throw DataError("checkpoint layer count does not match its layer specs");
  for (std::size_t i = 0; i < net.trunk_.size(); ++i) load_layer_state(*net.trunk_[i], trunk[i]);
  for (std::size_t i = 0; i < net.head_.size(); ++i) load_layer_state(*net.head_[i], head[i]);
  net.mode_ = j.at("mode").get<std::string>() == "train" ? Mode::Train : Mode::Eval;
  net.trunk_frozen_ = j.at("trunk_frozen").get<bool>();
  net.optimizer_steps_ = j.at("optimizer").at("steps").get<std::uint64_t>();
  return net;
}

}  // namespace semitc::nn
