#pragma once

// JSON and CSV encodings for networks, benchmark reports and clip results.
//
// Network document:
//   {"layers": [{"in": 2, "out": 1, "activation": "relu", "bias": true}, ...],
//    "loss": "mean_squared_error",
//    "weights": [[row-major entries of layer 0], ...]}
// An optional "loss_scale" is written only when it differs from 1.

#include <cstddef>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pergrad/bench.hpp"
#include "pergrad/network.hpp"

namespace pergrad {

using json = nlohmann::json;

inline json network_to_json(const NetworkSpec& net) {
  json j;
  j["layers"] = json::array();
  for (const auto& l : net.layers) {
    j["layers"].push_back({{"in", l.in_dim},
                           {"out", l.out_dim},
                           {"activation", std::string(to_string(l.activation))},
                           {"bias", l.has_bias}});
  }
  j["loss"] = std::string(to_string(net.loss));
  j["weights"] = json::array();
  for (const auto& w : net.weights) {
    j["weights"].push_back(std::vector<double>(w.values().begin(), w.values().end()));
  }
  if (net.loss_scale != 1.0) j["loss_scale"] = net.loss_scale;
  return j;
}

inline NetworkSpec network_from_json(const json& j) {
  NetworkSpec net;
  for (const auto& l : j.at("layers")) {
    net.layers.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                          parse_activation(l.at("activation").get<std::string>()),
                          l.at("bias").get<bool>()});
  }
  net.loss = parse_loss(j.at("loss").get<std::string>());
  net.loss_scale = j.value("loss_scale", 1.0);
  validate(net, /*require_weights=*/false);
  const auto& weights = j.at("weights");
  if (weights.size() != net.layers.size()) {
    throw ShapeError("network document has " + std::to_string(weights.size()) +
                     " weight arrays for " + std::to_string(net.layers.size()) + " layers");
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    net.weights.emplace_back(net.layers[i].weight_rows(), net.layers[i].out_dim,
                             weights[i].get<std::vector<double>>());
  }
  return net;
}

inline json config_to_json(const BenchConfig& c) {
  return {{"layer_dims", c.layer_dims},
          {"batch_size", c.batch_size},
          {"activation", std::string(to_string(c.activation))},
          {"loss", std::string(to_string(c.loss))},
          {"seed", c.seed},
          {"trials", c.trials},
          {"methods", c.methods}};
}

inline BenchConfig config_from_json(const json& j) {
  BenchConfig c;
  c.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.loss = parse_loss(j.at("loss").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.trials = j.at("trials").get<std::size_t>();
  c.methods = j.at("methods").get<std::vector<std::string>>();
  return c;
}

inline json report_to_json(const BenchReport& r) {
  json methods = json::array();
  for (const auto& m : r.results) {
    methods.push_back({{"method", m.method},
                       {"wall_ns_median", m.wall_ns_median},
                       {"wall_ns_min", m.wall_ns_min},
                       {"flops_forward", m.flops_forward},
                       {"flops_backward", m.flops_backward},
                       {"flops_norms_extra", m.flops_norms_extra},
                       {"s_checksum", m.s_checksum}});
  }
  return {{"version", r.version},
          {"config", config_to_json(r.config)},
          {"methods", methods},
          {"checksums_agree", r.checksums_agree}};
}

inline BenchReport report_from_json(const json& j) {
  BenchReport r;
  r.version = j.at("version").get<std::string>();
  r.config = config_from_json(j.at("config"));
  r.checksums_agree = j.at("checksums_agree").get<bool>();
  for (const auto& m : j.at("methods")) {
    MethodResult res;
    res.method = m.at("method").get<std::string>();
    res.wall_ns_median = m.at("wall_ns_median").get<std::int64_t>();
    res.wall_ns_min = m.at("wall_ns_min").get<std::int64_t>();
    res.flops_forward = m.at("flops_forward").get<std::uint64_t>();
    res.flops_backward = m.at("flops_backward").get<std::uint64_t>();
    res.flops_norms_extra = m.at("flops_norms_extra").get<std::uint64_t>();
    res.s_checksum = m.at("s_checksum").get<double>();
    r.results.push_back(res);
  }
  return r;
}

// One row per method, same field names as the JSON report.
inline std::string report_to_csv(const BenchReport& r) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "method,wall_ns_median,wall_ns_min,flops_forward,flops_backward,flops_norms_extra,"
        "s_checksum\n";
  for (const auto& m : r.results) {
    os << m.method << ',' << m.wall_ns_median << ',' << m.wall_ns_min << ',' << m.flops_forward
       << ',' << m.flops_backward << ',' << m.flops_norms_extra << ',' << m.s_checksum << '\n';
  }
  return os.str();
}

inline json clip_to_json(const ClipDemoResult& c) {
  return {{"max_norm", c.max_norm},
          {"norms_before", c.norms_before},
          {"factors", c.factors},
          {"norms_after", c.norms_after}};
}

inline ClipDemoResult clip_from_json(const json& j) {
  ClipDemoResult c;
  c.max_norm = j.at("max_norm").get<double>();
  c.norms_before = j.at("norms_before").get<std::vector<double>>();
  c.factors = j.at("factors").get<std::vector<double>>();
  c.norms_after = j.at("norms_after").get<std::vector<double>>();
  return c;
}

}  // namespace pergrad
