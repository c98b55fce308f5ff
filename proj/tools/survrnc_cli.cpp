// Command-line front end: data generation, training, evaluation and inspection.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "survrnc/survrnc.hpp"

namespace fs = std::filesystem;
using namespace survrnc;

namespace {

// Turns leftover "--key value" / "--key=value" arguments into config overrides.
void apply_extras(Json& config, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw Error(ErrorCode::ParseError, "unexpected argument '" + arg + "'");
    arg.erase(0, 2);
    std::string value;
    if (const auto eq = arg.find('='); eq != std::string::npos) {
      value = arg.substr(eq + 1);
      arg.resize(eq);
    } else {
      if (i + 1 >= extras.size()) throw Error(ErrorCode::ParseError, "missing value for --" + arg);
      value = extras[++i];
    }
    for (char& c : arg)
      if (c == '-') c = '_';
    apply_override(config, arg, value);
  }
}

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  return read_json_file(path);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stod(item));
  return out;
}

void emit(const std::string& path, const Json& j) {
  if (path.empty() || path == "-") std::cout << j.dump(2) << '\n';
  else write_json_file(path, j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survrnc: ranked contrastive regularization for discrete-time survival models"};
  app.require_subcommand(1);

  // generate ---------------------------------------------------------------
  SynthConfig synth;
  std::string risk_model = "linear", gen_out, gen_truth;
  auto* gen = app.add_subcommand("generate", "Write a synthetic censored dataset and its ground truth");
  gen->add_option("--n", synth.n, "Patient count")->capture_default_str();
  gen->add_option("--d-in", synth.d_in, "Feature dimension")->capture_default_str();
  gen->add_option("--risk-model", risk_model, "linear or quadratic")->capture_default_str();
  gen->add_option("--base-rate", synth.base_rate, "Baseline event rate")->capture_default_str();
  gen->add_option("--censoring", synth.target_censoring, "Target censored fraction")->capture_default_str();
  gen->add_option("--seed", synth.seed, "Random seed")->required();
  gen->add_option("--out", gen_out, "Output CSV")->required();
  gen->add_option("--truth", gen_truth, "Ground-truth JSON (default: <out>.truth.json)");

  // train ------------------------------------------------------------------
  std::string data_path, config_path, out_dir = ".";
  std::uint64_t seed = 0;
  auto* tr = app.add_subcommand("train", "Train encoder + head; extra --key value pairs override config fields");
  tr->add_option("--data", data_path, "Dataset CSV")->required();
  tr->add_option("--config", config_path, "JSON config");
  tr->add_option("--seed", seed, "Random seed")->required();
  tr->add_option("--out-dir", out_dir, "Directory for history/checkpoint/eval outputs")->capture_default_str();
  tr->allow_extras();

  // evaluate ---------------------------------------------------------------
  std::string checkpoint, out_path;
  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  ev->add_option("--data", data_path, "Dataset CSV")->required();
  ev->add_option("--out", out_path, "Report JSON (default: stdout)");

  // export-embeddings ------------------------------------------------------
  auto* ex = app.add_subcommand("export-embeddings", "Write per-patient embeddings as CSV");
  ex->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  ex->add_option("--data", data_path, "Dataset CSV")->required();
  ex->add_option("--out", out_path, "Embeddings CSV")->required();

  // pairsets ---------------------------------------------------------------
  auto* ps = app.add_subcommand("pairsets", "Print the negative/uncertain classification matrix of a batch");
  ps->add_option("--data", data_path, "Batch CSV")->required();
  ps->add_option("--out", out_path, "Output file (default: stdout)");

  // lambda-sweep -----------------------------------------------------------
  std::string lambdas = "0.3,0.5,0.7,1.0";
  auto* sw = app.add_subcommand("lambda-sweep", "Train one model per lambda and report validation CI");
  sw->add_option("--data", data_path, "Dataset CSV")->required();
  sw->add_option("--config", config_path, "JSON config");
  sw->add_option("--seed", seed, "Random seed")->required();
  sw->add_option("--lambdas", lambdas, "Comma-separated lambda values")->capture_default_str();
  sw->add_option("--out", out_path, "Sweep JSON (default: stdout)");
  sw->allow_extras();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      synth.risk_model = parse_risk_model(risk_model);
      const SyntheticData data = generate_synthetic(synth);
      save_csv(gen_out, data.dataset);
      Json truth{{"config", to_json(synth)},
                 {"coefficients", data.coefficients},
                 {"censor_rate", data.censor_rate},
                 {"ids", Json::array()},
                 {"true_risk", data.true_risk}};
      for (const auto& p : data.dataset.patients) truth["ids"].push_back(p.id);
      write_json_file(gen_truth.empty() ? gen_out + ".truth.json" : gen_truth, truth);
    } else if (*tr || *sw) {
      auto* sub = *tr ? tr : sw;
      Json cfg_json = load_config(config_path);
      apply_extras(cfg_json, sub->remaining());
      cfg_json["seed"] = seed;
      const TrainConfig cfg = train_config_from_json(cfg_json);
      const Dataset data = load_csv(data_path);
      if (*tr) {
        const TrainResult res = train(data, cfg);
        fs::create_directories(out_dir);
        const fs::path dir(out_dir);
        write_json_file((dir / "config.json").string(), to_json(cfg));
        write_json_file((dir / "history.json").string(), to_json(res.history));
        write_json_file((dir / "checkpoint.json").string(), to_json(res.model));
        write_json_file((dir / "eval.json").string(), to_json(evaluate(res.model, data.subset(res.split.validation))));
      } else {
        const auto values = parse_list(lambdas);
        emit(out_path, to_json(lambda_sweep(data, cfg, values)));
      }
    } else if (*ev) {
      const Model model = model_from_json(read_json_file(checkpoint));
      emit(out_path, to_json(evaluate(model, load_csv(data_path))));
    } else if (*ex) {
      const Model model = model_from_json(read_json_file(checkpoint));
      export_embeddings(model, load_csv(data_path), out_path);
    } else if (*ps) {
      const Dataset batch = load_csv(data_path);
      if (out_path.empty()) {
        write_pairsets_matrix(std::cout, batch);
      } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw Error(ErrorCode::Io, "cannot write '" + out_path + "'");
        write_pairsets_matrix(out, batch);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
