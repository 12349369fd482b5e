#ifndef ADVRL_IO_HPP
#define ADVRL_IO_HPP

#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "advrl/numkit.hpp"

namespace advrl {

inline Mlp mlp_from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != 1) {
    throw std::runtime_error("mlp: unsupported format_version");
  }
  Mlp net = make_mlp(j.at("layer_sizes").get<std::vector<int>>(),
                     activation_from_name(j.at("output_activation").get<std::string>()),
                     j.at("output_scale").get<double>());
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != net.layer_count() || biases.size() != net.layer_count()) {
    throw std::runtime_error("mlp: layer count mismatch");
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Vector w = weights[l].get<Vector>();
    Vector b = biases[l].get<Vector>();
    if (w.size() != net.weights[l].data.size() || b.size() != net.biases[l].size()) {
      throw std::runtime_error("mlp: weight shape mismatch");
    }
    check_finite(w, "mlp weights");
    check_finite(b, "mlp biases");
    net.weights[l].data = std::move(w);
    net.biases[l] = std::move(b);
  }
  return net;
}

inline Mlp load_mlp(std::istream& is) {
  return mlp_from_json(nlohmann::json::parse(is));
}

inline Mlp load_mlp(const std::string& text) {
  return mlp_from_json(nlohmann::json::parse(text));
}

inline Mlp load_mlp_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open mlp file: " + path);
  return load_mlp(f);
}

}  // namespace advrl

#endif  // ADVRL_IO_HPP
