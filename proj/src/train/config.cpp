#include "burgan/train/config.hpp"

#include "burgan/common/binary_io.hpp"
#include "burgan/common/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>
#include <map>

namespace burgan::train {

using nlohmann::ordered_json;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "\n  " + s;
  return out;
}

std::vector<std::string> problems(const TrainConfig& c) {
  std::vector<std::string> out;
  if (c.iterations < 1) out.push_back("iterations must be >= 1");
  if (!std::isfinite(c.lr) || c.lr <= 0) out.push_back("lr must be finite and > 0");
  const std::pair<const char*, double> weights[] = {
      {"alpha", c.weights.alpha}, {"beta", c.weights.beta}, {"gamma", c.weights.gamma}, {"delta", c.weights.delta}};
  for (const auto& [name, w] : weights) {
    if (!std::isfinite(w) || w < 0) out.push_back(std::string(name) + " must be finite and >= 0");
  }
  if (c.z_dim < 1) out.push_back("z_dim must be >= 1");
  if (c.checkpoint_every < 1) out.push_back("checkpoint_every must be >= 1");
  if (c.validate_every < 1) out.push_back("validate_every must be >= 1");
  if (c.d_steps < 1) out.push_back("d_steps must be >= 1");
  if (c.g_steps < 1) out.push_back("g_steps must be >= 1");
  if (!std::isfinite(c.clip_norm) || c.clip_norm <= 0) out.push_back("clip_norm must be finite and > 0");
  if (c.val_z < 1) out.push_back("val_z must be >= 1");
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  const auto p = problems(*this);
  if (!p.empty()) throw ConfigError("invalid training config:" + join(p));
}

TrainConfig parse_train_config(const std::string& text, const std::string& source) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source + ": top level must be an object");

  TrainConfig c;
  std::vector<std::string> errors;

  auto unsigned_field = [&](auto& target) {
    return [&target](const ordered_json& v) {
      if (!v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
      target = v.get<std::remove_reference_t<decltype(target)>>();
    };
  };
  auto real_field = [](double& target) {
    return [&target](const ordered_json& v) {
      if (!v.is_number()) throw std::invalid_argument("expected a number");
      target = v.get<double>();
    };
  };
  auto index_list = [](std::vector<std::size_t>& target) {
    return [&target](const ordered_json& v) {
      if (!v.is_array()) throw std::invalid_argument("expected an array of indices");
      target.clear();
      for (const auto& e : v) {
        if (!e.is_number_unsigned()) throw std::invalid_argument("expected an array of indices");
        target.push_back(e.get<std::size_t>());
      }
    };
  };

  const std::map<std::string, std::function<void(const ordered_json&)>> setters{
      {"iterations", unsigned_field(c.iterations)},
      {"lr", real_field(c.lr)},
      {"alpha", real_field(c.weights.alpha)},
      {"beta", real_field(c.weights.beta)},
      {"gamma", real_field(c.weights.gamma)},
      {"delta", real_field(c.weights.delta)},
      {"z_dim", unsigned_field(c.z_dim)},
      {"seed", unsigned_field(c.seed)},
      {"checkpoint_every", unsigned_field(c.checkpoint_every)},
      {"validate_every", unsigned_field(c.validate_every)},
      {"d_steps", unsigned_field(c.d_steps)},
      {"g_steps", unsigned_field(c.g_steps)},
      {"clip_norm", real_field(c.clip_norm)},
      {"val_z", unsigned_field(c.val_z)},
      {"train_ics", index_list(c.train_ics)},
      {"val_ics", index_list(c.val_ics)},
  };

  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) {
      errors.push_back("unknown key '" + key + "'");
      continue;
    }
    try {
      it->second(value);
    } catch (const std::exception& e) {
      errors.push_back(key + ": " + e.what());
    }
  }
  for (auto& p : problems(c)) errors.push_back(std::move(p));
  if (!errors.empty()) throw ConfigError(source + ": invalid training config:" + join(errors));
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  return parse_train_config(read_file(path), path.string());
}

std::string to_json(const TrainConfig& c) {
  ordered_json j;
  j["iterations"] = c.iterations;
  j["lr"] = c.lr;
  j["alpha"] = c.weights.alpha;
  j["beta"] = c.weights.beta;
  j["gamma"] = c.weights.gamma;
  j["delta"] = c.weights.delta;
  j["z_dim"] = c.z_dim;
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["validate_every"] = c.validate_every;
  j["d_steps"] = c.d_steps;
  j["g_steps"] = c.g_steps;
  j["clip_norm"] = c.clip_norm;
  j["val_z"] = c.val_z;
  j["train_ics"] = c.train_ics;
  j["val_ics"] = c.val_ics;
  return j.dump(2) + "\n";
}

}  // namespace burgan::train
