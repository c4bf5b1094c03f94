#include "lotos/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lotos {

namespace {
using nlohmann::json;
namespace fs = std::filesystem;
}  // namespace

std::string to_string(TrainMethod m) {
    switch (m) {
        case TrainMethod::Orig: return "orig";
        case TrainMethod::Clip: return "clip";
        case TrainMethod::Lotos: return "lotos";
        case TrainMethod::RandomControl: return "random_control";
    }
    throw ConfigError("unknown train method");
}

TrainMethod train_method_from_string(const std::string& s) {
    if (s == "orig") return TrainMethod::Orig;
    if (s == "clip") return TrainMethod::Clip;
    if (s == "lotos") return TrainMethod::Lotos;
    if (s == "random_control") return TrainMethod::RandomControl;
    throw ConfigError("unknown train method: " + s);
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("ExperimentConfig: seeds must be non-empty");
    if (ensemble_size == 0) throw ConfigError("ExperimentConfig: ensemble_size must be positive");
    if (clip_value <= 0.0 && method != TrainMethod::Orig)
        throw ConfigError("ExperimentConfig: clip_value must be positive");
    if (method == TrainMethod::Lotos || method == TrainMethod::RandomControl) lotos.validate();
}

ExperimentConfig ExperimentConfig::desk_default() {
    ExperimentConfig config;
    config.dataset = desk_dataset_spec();
    config.ensemble_size = 3;
    config.method = TrainMethod::Clip;
    config.clip_value = 1.0;
    config.attack.epsilon = 0.3;
    config.attack.steps = 50;
    config.attack.norm = AttackNorm::L2;
    return config;
}

namespace {

json dataset_spec_to_json(const DatasetSpec& spec) {
    return json{{"generator", spec.generator}, {"params", spec.params}};
}

DatasetSpec dataset_spec_from_json(const json& j) {
    DatasetSpec spec;
    spec.generator = j.at("generator").get<std::string>();
    if (j.contains("params"))
        spec.params = j.at("params").get<std::map<std::string, double>>();
    return spec;
}

json model_spec_to_json(const ModelSpec& spec) {
    json layers = json::array();
    for (const auto& l : spec.layers) {
        if (l.kind == LayerDesc::Kind::Dense)
            layers.push_back(json{{"kind", "dense"},
                                  {"out_dim", l.out_dim},
                                  {"activation", l.activation == Activation::Relu ? "relu" : "none"}});
        else
            layers.push_back(json{{"kind", "conv1d"},
                                  {"taps", l.taps},
                                  {"activation", l.activation == Activation::Relu ? "relu" : "none"}});
    }
    return json{{"input_dim", spec.input_dim}, {"classes", spec.classes}, {"layers", layers}};
}

ModelSpec model_spec_from_json(const json& j) {
    ModelSpec spec;
    spec.input_dim = j.value("input_dim", 0);
    spec.classes = j.value("classes", 0);
    if (j.contains("layers"))
        for (const auto& jl : j.at("layers")) {
            LayerDesc desc;
            const std::string kind = jl.at("kind").get<std::string>();
            if (kind == "dense") {
                desc.kind = LayerDesc::Kind::Dense;
                desc.out_dim = jl.at("out_dim").get<std::size_t>();
            } else if (kind == "conv1d") {
                desc.kind = LayerDesc::Kind::Conv1d;
                desc.taps = jl.at("taps").get<std::size_t>();
            } else {
                throw ConfigError("model spec: unknown layer kind " + kind);
            }
            desc.activation =
                jl.value("activation", std::string("none")) == "relu" ? Activation::Relu
                                                                      : Activation::None;
            spec.layers.push_back(desc);
        }
    return spec;
}

json train_config_to_json(const TrainConfig& c) {
    json j{{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
           {"momentum", c.momentum},           {"epochs", c.epochs},
           {"batch_size", c.batch_size},       {"clip_tol", c.clip_tol},
           {"seed", c.seed},                   {"warmup_frac", c.warmup_frac},
           {"decay_frac", c.decay_frac}};
    if (c.clip_to) j["clip_to"] = *c.clip_to;
    return j;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.momentum = j.value("momentum", c.momentum);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.clip_tol = j.value("clip_tol", c.clip_tol);
    c.seed = j.value("seed", c.seed);
    c.warmup_frac = j.value("warmup_frac", c.warmup_frac);
    c.decay_frac = j.value("decay_frac", c.decay_frac);
    if (j.contains("clip_to")) c.clip_to = j["clip_to"].get<double>();
    return c;
}

json lotos_config_to_json(const LotosConfig& c) {
    return json{{"k", c.k},
                {"weights", c.weights},
                {"mal", c.mal},
                {"lambda", c.lambda},
                {"layer_selection",
                 c.selection == LayerSelection::FirstOnly ? "first_only" : "all_affine"},
                {"refresh_steps", c.refresh_steps},
                {"full_refresh_every", c.full_refresh_every},
                {"full_refresh_tol", c.full_refresh_tol}};
}

LotosConfig lotos_config_from_json(const json& j) {
    LotosConfig c;
    c.k = j.value("k", c.k);
    if (j.contains("weights")) c.weights = j["weights"].get<Vector>();
    c.mal = j.value("mal", c.mal);
    c.lambda = j.value("lambda", c.lambda);
    const std::string sel = j.value("layer_selection", std::string("first_only"));
    if (sel == "first_only") c.selection = LayerSelection::FirstOnly;
    else if (sel == "all_affine") c.selection = LayerSelection::AllAffine;
    else throw ConfigError("unknown layer_selection: " + sel);
    c.refresh_steps = j.value("refresh_steps", c.refresh_steps);
    c.full_refresh_every = j.value("full_refresh_every", c.full_refresh_every);
    c.full_refresh_tol = j.value("full_refresh_tol", c.full_refresh_tol);
    return c;
}

json attack_config_to_json(const AttackConfig& c) {
    json j{{"epsilon", c.epsilon}, {"steps", c.steps},
           {"step_size", c.step_size}, {"norm", c.norm == AttackNorm::L2 ? "l2" : "linf"},
           {"random_start", c.random_start}, {"seed", c.seed}};
    if (c.targeted) j["targeted"] = *c.targeted;
    return j;
}

AttackConfig attack_config_from_json(const json& j) {
    AttackConfig c;
    c.epsilon = j.value("epsilon", c.epsilon);
    c.steps = j.value("steps", c.steps);
    c.step_size = j.value("step_size", c.step_size);
    const std::string norm = j.value("norm", std::string("l2"));
    if (norm == "l2") c.norm = AttackNorm::L2;
    else if (norm == "linf") c.norm = AttackNorm::Linf;
    else throw ConfigError("unknown attack norm: " + norm);
    c.random_start = j.value("random_start", c.random_start);
    c.seed = j.value("seed", c.seed);
    if (j.contains("targeted")) c.targeted = j["targeted"].get<std::size_t>();
    return c;
}

json adv_config_to_json(const AdvTrainConfig& c) {
    return json{{"enabled", c.enabled},
                {"attack", attack_config_to_json(c.attack)},
                {"mix_ratio", c.mix_ratio}};
}

AdvTrainConfig adv_config_from_json(const json& j) {
    AdvTrainConfig c;
    c.enabled = j.value("enabled", false);
    if (j.contains("attack")) c.attack = attack_config_from_json(j["attack"]);
    c.mix_ratio = j.value("mix_ratio", c.mix_ratio);
    return c;
}

json experiment_to_json(const ExperimentConfig& c) {
    return json{{"dataset", dataset_spec_to_json(c.dataset)},
                {"dataset_path", c.dataset_path},
                {"model", model_spec_to_json(c.model)},
                {"ensemble_size", c.ensemble_size},
                {"method", to_string(c.method)},
                {"clip_value", c.clip_value},
                {"train", train_config_to_json(c.train)},
                {"lotos", lotos_config_to_json(c.lotos)},
                {"attack", attack_config_to_json(c.attack)},
                {"adv", adv_config_to_json(c.adv)},
                {"seeds", c.seeds},
                {"outdir", c.outdir}};
}

ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig c = ExperimentConfig::desk_default();
    if (j.contains("dataset")) c.dataset = dataset_spec_from_json(j["dataset"]);
    c.dataset_path = j.value("dataset_path", std::string());
    if (j.contains("model")) c.model = model_spec_from_json(j["model"]);
    c.ensemble_size = j.value("ensemble_size", c.ensemble_size);
    if (j.contains("method")) c.method = train_method_from_string(j["method"].get<std::string>());
    c.clip_value = j.value("clip_value", c.clip_value);
    if (j.contains("train")) c.train = train_config_from_json(j["train"]);
    if (j.contains("lotos")) c.lotos = lotos_config_from_json(j["lotos"]);
    if (j.contains("attack")) c.attack = attack_config_from_json(j["attack"]);
    if (j.contains("adv")) c.adv = adv_config_from_json(j["adv"]);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    c.outdir = j.value("outdir", c.outdir);
    c.validate();
    return c;
}

}  // namespace

ExperimentConfig experiment_config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedFile("config: cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedFile(std::string("config: ") + e.what());
    }
    try {
        // manifests embed the config under "config"
        if (doc.contains("config")) return experiment_from_json(doc["config"]);
        return experiment_from_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
    return experiment_to_json(config).dump(1);
}

LabeledDataset dataset_for(const ExperimentConfig& config, std::uint64_t seed) {
    if (!config.dataset_path.empty()) return load_dataset(config.dataset_path);
    return generate_dataset(config.dataset, seed);
}

ModelSpec model_spec_for(const ExperimentConfig& config, const LabeledDataset& data) {
    if (!config.model.layers.empty()) {
        ModelSpec spec = config.model;
        if (spec.input_dim == 0) spec.input_dim = data.dim;
        if (spec.classes == 0) spec.classes = data.classes;
        spec.validate();
        return spec;
    }
    return ModelSpec::desk_cnn(data.dim, data.classes);
}

TrainedEnsemble train_for_seed(const ExperimentConfig& config, const LabeledDataset& data,
                               std::uint64_t seed) {
    config.validate();
    TrainConfig train = config.train;
    train.seed = seed;
    LotosConfig lotos = config.lotos;
    switch (config.method) {
        case TrainMethod::Orig:
            train.clip_to.reset();
            lotos.lambda = 0.0;
            break;
        case TrainMethod::Clip:
            train.clip_to = config.clip_value;
            lotos.lambda = 0.0;
            break;
        case TrainMethod::Lotos:
        case TrainMethod::RandomControl:
            train.clip_to = config.clip_value;
            break;
    }

    TrainedEnsemble out{make_ensemble(model_spec_for(config, data), config.ensemble_size, train,
                                      lotos),
                        {}};
    out.state.adv = config.adv;
    const std::size_t iters = iterations_for(train, data.indices_of(Split::Train).size());
    out.history = config.method == TrainMethod::RandomControl
                      ? random_vector_control(out.state, data, iters)
                      : train_ensemble(out.state, data, iters);
    return out;
}

Model train_surrogate(const ExperimentConfig& config, const LabeledDataset& data,
                      std::uint64_t seed) {
    ExperimentConfig surr = config;
    surr.method = TrainMethod::Orig;
    surr.ensemble_size = 1;
    surr.adv.enabled = false;
    auto trained = train_for_seed(surr, data, seed ^ 0x5a11ab1e5ull);
    return std::move(trained.state.models[0]);
}

SeedEvaluation evaluate_ensemble(const ExperimentConfig& config, const EnsembleTrainState& state,
                                 const Model* surrogate, const LabeledDataset& data,
                                 std::uint64_t seed) {
    SeedEvaluation eval;
    eval.seed = seed;
    double acc = 0.0;
    for (const auto& model : state.models) acc += clean_accuracy(model, data, Split::Test);
    eval.individual_accuracy = acc / static_cast<double>(state.size());
    eval.individual_robust_accuracy =
        individual_robust_accuracy(state.models, data, Split::Test, config.attack);
    if (state.size() > 1)
        eval.transfer_rate =
            ensemble_transfer_rate(state.models, data, Split::Test, config.attack).mean_rate;
    if (surrogate)
        eval.blackbox_robust_accuracy =
            blackbox_robust_accuracy(*surrogate, state.models, data, Split::Test, config.attack)
                .robust_accuracy;
    return eval;
}

void write_history_csv(const History& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_history_csv: cannot open " + path);
    out << "iter,total_loss,ce_loss,ortho_loss,max_sigma,mean_cross_norm\n";
    char line[256];
    for (const auto& row : history) {
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.iter,
                      row.total_loss, row.ce_loss, row.ortho_loss, row.max_sigma,
                      row.mean_cross_norm);
        out << line;
    }
}

History read_history_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedFile("read_history_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "iter,total_loss,ce_loss,ortho_loss,max_sigma,mean_cross_norm")
        throw MalformedFile("read_history_csv: bad header");
    History history;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        HistoryRow row;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        if (!(ss >> row.iter >> row.total_loss >> row.ce_loss >> row.ortho_loss >> row.max_sigma >>
              row.mean_cross_norm))
            throw MalformedFile("read_history_csv: bad row");
        history.push_back(row);
    }
    return history;
}

void write_manifest(const std::string& command, const std::string& config_json,
                    const std::string& outdir) {
    fs::create_directories(outdir);
    json doc;
    doc["command"] = command;
    doc["toolkit_version"] = kToolkitVersion;
    doc["config"] = json::parse(config_json);
    std::ofstream out(fs::path(outdir) / "manifest.json");
    if (!out) throw Error("write_manifest: cannot open manifest in " + outdir);
    out << doc.dump(1) << "\n";
}

int run_train(const ExperimentConfig& config) {
    config.validate();
    fs::create_directories(config.outdir);
    write_manifest("train", experiment_config_to_json(config), config.outdir);
    for (const std::uint64_t seed : config.seeds) {
        const LabeledDataset data = dataset_for(config, seed);
        auto trained = train_for_seed(config, data, seed);
        const fs::path seed_dir = fs::path(config.outdir) / ("seed" + std::to_string(seed));
        fs::create_directories(seed_dir);
        save_dataset(data, (seed_dir / "dataset.json").string());
        write_history_csv(trained.history, (seed_dir / "history.csv").string());
        CheckpointMeta meta{to_string(config.method), seed};
        save_checkpoint(std::span<const Model>(trained.state.models),
                        (seed_dir / "ensemble.json").string(), meta);
    }
    return 0;
}

int run_sweep_clip(const ExperimentConfig& config, const std::vector<double>& clip_values,
                   const std::string& csv_path) {
    config.validate();
    fs::create_directories(config.outdir);

    std::ofstream csv(csv_path);
    if (!csv) throw Error("run_sweep_clip: cannot open " + csv_path);
    csv << "clip,seed,individual_accuracy,individual_robust_accuracy,transfer_rate\n";

    std::ofstream means(fs::path(config.outdir) / "sweep_means.csv");
    means << "clip,mean_individual_accuracy,mean_individual_robust_accuracy,mean_transfer_rate\n";

    for (const double c : clip_values) {
        ExperimentConfig point = config;
        if (std::isinf(c)) {
            point.method = TrainMethod::Orig;
        } else {
            point.method = TrainMethod::Clip;
            point.clip_value = c;
        }
        std::vector<double> accs, raccs, trates;
        for (const std::uint64_t seed : config.seeds) {
            const LabeledDataset data = dataset_for(point, seed);
            auto trained = train_for_seed(point, data, seed);
            auto eval = evaluate_ensemble(point, trained.state, nullptr, data, seed);
            char line[256];
            std::snprintf(line, sizeof(line), "%g,%llu,%.17g,%.17g,%.17g\n", c,
                          static_cast<unsigned long long>(seed), eval.individual_accuracy,
                          eval.individual_robust_accuracy.value_or(std::nan("")),
                          eval.transfer_rate.value_or(std::nan("")));
            csv << line;
            accs.push_back(eval.individual_accuracy);
            if (eval.individual_robust_accuracy) raccs.push_back(*eval.individual_robust_accuracy);
            if (eval.transfer_rate) trates.push_back(*eval.transfer_rate);
        }
        char line[256];
        std::snprintf(line, sizeof(line), "%g,%.17g,%.17g,%.17g\n", c,
                      mean_and_stddev(accs).first,
                      raccs.empty() ? std::nan("") : mean_and_stddev(raccs).first,
                      trates.empty() ? std::nan("") : mean_and_stddev(trates).first);
        means << line;
    }
    return 0;
}

std::pair<double, double> mean_and_stddev(const std::vector<double>& xs) {
    if (xs.empty()) return {std::nan(""), std::nan("")};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var)};
}

}  // namespace lotos
