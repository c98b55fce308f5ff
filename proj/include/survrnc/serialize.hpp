#pragma once

// JSON forms of configs, histories, checkpoints and reports.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "survrnc/data.hpp"
#include "survrnc/metrics.hpp"
#include "survrnc/trainer.hpp"

namespace survrnc {

using Json = nlohmann::json;

namespace detail {

inline Json optional_to_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::optional<double> optional_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

template <typename T>
T field(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const Json& given, const Json& reference, const std::string& prefix) {
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!reference.contains(it.key()))
      throw Error(ErrorCode::ParseError, "unknown config key '" + prefix + it.key() + "'");
    if (it->is_object() && reference[it.key()].is_object())
      reject_unknown(*it, reference[it.key()], prefix + it.key() + ".");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// TrainConfig

inline Json to_json(const TrainConfig& c) {
  return Json{
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr", c.lr},
      {"weight_decay", c.weight_decay},
      {"head", std::string(to_string(c.head))},
      {"loss_cfg", {{"temperature", c.loss_cfg.temperature}, {"lambda", c.loss_cfg.lambda}, {"beta", c.loss_cfg.beta}}},
      {"num_bins", c.num_bins},
      {"augment",
       {{"noise_std", c.augment.noise_std},
        {"feature_dropout_prob", c.augment.feature_dropout_prob},
        {"seed", c.augment.seed}}},
      {"sampler", std::string(to_string(c.sampler))},
      {"seed", c.seed},
      {"hidden_widths", c.hidden_widths},
      {"embedding_dim", c.embedding_dim},
      {"activation", std::string(to_string(c.activation))},
      {"deephit", {{"sigma", c.deephit.sigma}, {"rank_weight", c.deephit.rank_weight}}},
      {"validation_fraction", c.validation_fraction},
      {"use_survrnc", c.use_survrnc},
  };
}

/// Reads a (possibly partial) config; missing keys keep their defaults, unknown keys are rejected.
inline TrainConfig train_config_from_json(const Json& given) {
  Json j = to_json(TrainConfig{});
  detail::reject_unknown(given, j, "");
  j.merge_patch(given);
  TrainConfig c;
  c.epochs = detail::field<std::size_t>(j, "epochs");
  c.batch_size = detail::field<std::size_t>(j, "batch_size");
  c.lr = detail::field<double>(j, "lr");
  c.weight_decay = detail::field<double>(j, "weight_decay");
  c.head = parse_head(detail::field<std::string>(j, "head"));
  const Json& l = j.at("loss_cfg");
  c.loss_cfg = {detail::field<double>(l, "temperature"), detail::field<double>(l, "lambda"),
                detail::field<double>(l, "beta")};
  c.num_bins = detail::field<std::size_t>(j, "num_bins");
  const Json& a = j.at("augment");
  c.augment = {detail::field<double>(a, "noise_std"), detail::field<double>(a, "feature_dropout_prob"),
               detail::field<std::uint64_t>(a, "seed")};
  c.sampler = parse_sampler(detail::field<std::string>(j, "sampler"));
  c.seed = detail::field<std::uint64_t>(j, "seed");
  c.hidden_widths = detail::field<std::vector<std::size_t>>(j, "hidden_widths");
  c.embedding_dim = detail::field<std::size_t>(j, "embedding_dim");
  c.activation = parse_activation(detail::field<std::string>(j, "activation"));
  const Json& h = j.at("deephit");
  c.deephit = {detail::field<double>(h, "sigma"), detail::field<double>(h, "rank_weight")};
  c.validation_fraction = detail::field<double>(j, "validation_fraction");
  c.use_survrnc = detail::field<bool>(j, "use_survrnc");
  c.validate();
  return c;
}

/// Sets `key` in a config JSON. Dotted keys address nested fields; a bare key
/// matches a top-level field or, failing that, a unique nested one (`lambda` -> `loss_cfg.lambda`).
/// The value is read as JSON when it parses, else as a string.
inline void apply_override(Json& config, const std::string& key, const std::string& value) {
  const Json reference = to_json(TrainConfig{});
  std::vector<std::string> path;
  if (key.find('.') != std::string::npos) {
    std::size_t start = 0;
    for (std::size_t pos; (pos = key.find('.', start)) != std::string::npos; start = pos + 1)
      path.push_back(key.substr(start, pos - start));
    path.push_back(key.substr(start));
  } else if (reference.contains(key)) {
    path = {key};
  } else {
    for (auto it = reference.begin(); it != reference.end(); ++it)
      if (it->is_object() && it->contains(key)) {
        if (!path.empty()) throw Error(ErrorCode::ParseError, "ambiguous config key '" + key + "'");
        path = {it.key(), key};
      }
  }
  if (path.empty()) throw Error(ErrorCode::ParseError, "unknown config key '" + key + "'");
  Json parsed = Json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  Json* node = &config;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!node->contains(path[i])) (*node)[path[i]] = Json::object();
    node = &(*node)[path[i]];
  }
  (*node)[path.back()] = std::move(parsed);
}

// ---------------------------------------------------------------------------
// History, reports

inline Json to_json(const TrainHistory& h) {
  Json epochs = Json::array();
  for (const auto& e : h.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"prognosis", e.prognosis},
                      {"survrnc", e.survrnc},
                      {"total", e.total},
                      {"val_ci", detail::optional_to_json(e.val_ci)}});
  return Json{{"epochs", std::move(epochs)},
              {"best_epoch", h.best_epoch},
              {"best_val_ci", detail::optional_to_json(h.best_val_ci)},
              {"saved_epoch", h.epochs.size()}};
}

inline std::string horizon_key(double fraction) {
  return "auc_" + std::to_string(static_cast<int>(std::lround(fraction * 100.0)));
}

inline Json to_json(const EvalReport& r) {
  Json j{{"ci", detail::optional_to_json(r.ci)}};
  for (const auto& [f, v] : r.auc_at) j[horizon_key(f)] = detail::optional_to_json(v);
  j["ordinality"] = detail::optional_to_json(r.ordinality);
  return j;
}

inline Json to_json(const std::vector<SweepRow>& rows) {
  Json j = Json::array();
  for (const auto& r : rows) j.push_back({{"lambda", r.lambda}, {"ci", detail::optional_to_json(r.ci)}});
  return j;
}

inline Json to_json(const SynthConfig& c) {
  return Json{{"n", c.n},
              {"d_in", c.d_in},
              {"risk_model", std::string(to_string(c.risk_model))},
              {"base_rate", c.base_rate},
              {"target_censoring", c.target_censoring},
              {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

inline Json to_json(const ModelParams& p) {
  Json layers = Json::array();
  for (const auto& l : p.layers) {
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weight", std::vector<double>(l.weight.flat().begin(), l.weight.flat().end())},
                      {"bias", l.bias}});
  }
  return Json{{"spec",
               {{"layer_widths", p.spec.layer_widths},
                {"activation", std::string(to_string(p.spec.activation))},
                {"seed", p.spec.seed}}},
              {"layers", std::move(layers)}};
}

inline ModelParams model_params_from_json(const Json& j) {
  ModelParams p;
  const Json& s = j.at("spec");
  p.spec.layer_widths = detail::field<std::vector<std::size_t>>(s, "layer_widths");
  p.spec.activation = parse_activation(detail::field<std::string>(s, "activation"));
  p.spec.seed = detail::field<std::uint64_t>(s, "seed");
  p.spec.validate();
  const Json& layers = j.at("layers");
  if (layers.size() + 1 != p.spec.layer_widths.size())
    throw Error(ErrorCode::ShapeMismatch, "checkpoint layer count does not match its spec");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto rows = detail::field<std::size_t>(layers[l], "rows");
    const auto cols = detail::field<std::size_t>(layers[l], "cols");
    if (rows != p.spec.layer_widths[l + 1] || cols != p.spec.layer_widths[l])
      throw Error(ErrorCode::ShapeMismatch, "checkpoint layer shape does not match its spec");
    Layer layer{Matrix(rows, cols, detail::field<std::vector<double>>(layers[l], "weight")),
                detail::field<std::vector<double>>(layers[l], "bias")};
    if (layer.bias.size() != rows) throw Error(ErrorCode::ShapeMismatch, "checkpoint bias length mismatch");
    p.layers.push_back(std::move(layer));
  }
  return p;
}

inline Json to_json(const Model& m) {
  return Json{{"format", "survrnc-checkpoint"},
              {"version", kCheckpointVersion},
              {"head_kind", std::string(to_string(m.head_kind))},
              {"grid", std::vector<double>(m.grid.cut_points().begin(), m.grid.cut_points().end())},
              {"encoder", to_json(m.encoder)},
              {"head", to_json(m.head)}};
}

inline Model model_from_json(const Json& j) {
  if (j.value("format", "") != "survrnc-checkpoint") throw Error(ErrorCode::ParseError, "not a checkpoint file");
  if (j.value("version", 0) != kCheckpointVersion)
    throw Error(ErrorCode::ParseError, "unsupported checkpoint version");
  Model m;
  m.head_kind = parse_head(detail::field<std::string>(j, "head_kind"));
  m.grid = TimeGrid(detail::field<std::vector<double>>(j, "grid"));
  m.encoder = model_params_from_json(j.at("encoder"));
  m.head = model_params_from_json(j.at("head"));
  if (m.head.spec.input_width() != m.encoder.spec.output_width() || m.head.spec.output_width() != m.grid.num_bins())
    throw Error(ErrorCode::ShapeMismatch, "checkpoint encoder, head and grid are inconsistent");
  return m;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ParseError, "'" + path + "' is not valid JSON");
  return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

}  // namespace survrnc
