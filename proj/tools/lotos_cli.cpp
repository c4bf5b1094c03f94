#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lotos/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lotos;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerificationFailure = 2;
constexpr int kExitNumericFailure = 3;

std::string default_outdir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("LOTOS_OUTDIR")) return env;
    return "out";
}

Vector parse_filter(const std::string& csv) {
    Vector taps;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        taps.push_back(std::stod(item));
    }
    if (taps.empty()) throw ConfigError("empty filter");
    return taps;
}

struct AttackFlags {
    double eps = 0.04;
    std::size_t steps = 50;
    double step_size = 0.0;
    std::string norm = "l2";
    bool random_start = false;
    long long targeted = -1;
    std::uint64_t seed = 1;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--eps", eps, "attack radius");
        cmd->add_option("--steps", steps, "PGD steps");
        cmd->add_option("--step-size", step_size, "PGD step size (0 = 2.5 eps / steps)");
        cmd->add_option("--norm", norm, "ball norm: l2 | linf");
        cmd->add_flag("--random-start", random_start, "start from a random point in the ball");
        cmd->add_option("--targeted", targeted, "target class (omit for untargeted)");
        cmd->add_option("--attack-seed", seed, "seed for random starts");
    }

    AttackConfig to_config() const {
        AttackConfig c;
        c.epsilon = eps;
        c.steps = steps;
        c.step_size = step_size;
        if (norm == "l2") c.norm = AttackNorm::L2;
        else if (norm == "linf") c.norm = AttackNorm::Linf;
        else throw ConfigError("unknown norm: " + norm);
        c.random_start = random_start;
        if (targeted >= 0) c.targeted = static_cast<std::size_t>(targeted);
        c.seed = seed;
        return c;
    }

    json to_json() const {
        return json{{"eps", eps},   {"steps", steps},   {"step_size", step_size}, {"norm", norm},
                    {"random_start", random_start}, {"targeted", targeted}, {"seed", seed}};
    }
    static AttackFlags from_json(const json& j) {
        AttackFlags f;
        f.eps = j.value("eps", f.eps);
        f.steps = j.value("steps", f.steps);
        f.step_size = j.value("step_size", f.step_size);
        f.norm = j.value("norm", f.norm);
        f.random_start = j.value("random_start", f.random_start);
        f.targeted = j.value("targeted", f.targeted);
        f.seed = j.value("seed", f.seed);
        return f;
    }
};

json attack_config_json(const AttackConfig& c) {
    json j{{"epsilon", c.epsilon},
           {"steps", c.steps},
           {"step_size", c.step_size},
           {"norm", c.norm == AttackNorm::L2 ? "l2" : "linf"},
           {"random_start", c.random_start},
           {"seed", c.seed}};
    if (c.targeted) j["targeted"] = *c.targeted;
    return j;
}

void write_json(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path);
    out << doc.dump(1) << "\n";
}

// ---- command bodies; every body is callable from the rerun dispatcher ----

int cmd_spectrum(const Vector& taps, std::size_t n, const std::string& outdir) {
    const ConvFilter filter{taps};
    const auto spec = circulant_spectrum(filter, n);
    const auto coeffs = spec.coeffs;
    const auto sorted = spec.sorted_singular_values();

    std::ostringstream text;
    text << "n: " << n << "\n";
    text << "coeffs:";
    for (double c : coeffs) text << " " << std::setprecision(17) << c;
    text << "\ns_squared:";
    for (double v : spec.values) text << " " << std::setprecision(17) << v;
    text << "\nsingular_values_sorted:";
    for (double s : sorted) text << " " << std::setprecision(17) << s;
    text << "\n";
    std::cout << text.str();

    if (!outdir.empty()) {
        fs::create_directories(outdir);
        json doc{{"n", n}, {"coeffs", coeffs}, {"s_squared", spec.values},
                 {"singular_values_sorted", sorted}};
        write_json(doc, (fs::path(outdir) / "spectrum.json").string());
        json cfg{{"filter", taps}, {"n", n}, {"out", outdir}};
        write_manifest("spectrum", cfg.dump(), outdir);
    }
    return kExitOk;
}

int cmd_verify_bounds(std::size_t trials, std::uint64_t seed, std::size_t tmax, std::size_t nmax,
                      const std::string& outdir) {
    if (tmax < 2 || nmax < 8) throw ConfigError("verify-bounds: need --tmax >= 2 and --nmax >= 8");
    Rng rng(seed);
    std::size_t violations = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t ta = 2 + rng.below(tmax - 1);
        const std::size_t tb = 2 + rng.below(tmax - 1);
        const std::size_t n = 8 + rng.below(nmax - 7);
        ConvFilter fa{Vector(ta)}, fb{Vector(tb)};
        for (auto& t : fa.taps) t = rng.uniform(-1.0, 1.0);
        for (auto& t : fb.taps) t = rng.uniform(-1.0, 1.0);
        const auto report = verify_circulant_bounds(fa, fb, n);
        if (!report.all_hold()) {
            violations += 1;
            std::cout << "violation at trial " << trial << " (T_a=" << ta << " T_b=" << tb
                      << " n=" << n << ")\n";
        }
    }
    std::cout << "verify-bounds: " << trials << " trials, " << violations << " violations\n";
    if (!outdir.empty()) {
        fs::create_directories(outdir);
        json cfg{{"trials", trials}, {"seed", seed}, {"tmax", tmax}, {"nmax", nmax}, {"out", outdir}};
        write_json(json{{"trials", trials}, {"violations", violations}},
                   (fs::path(outdir) / "verify_bounds.json").string());
        write_manifest("verify-bounds", cfg.dump(), outdir);
    }
    return violations == 0 ? kExitOk : kExitVerificationFailure;
}

int cmd_attack(const std::string& checkpoint_path, const std::string& dataset_path,
               const AttackFlags& flags, const std::string& outdir) {
    const auto loaded = load_checkpoint(checkpoint_path);
    const auto data = load_dataset(dataset_path);
    const AttackConfig config = flags.to_config();
    fs::create_directories(outdir);

    LabeledDataset adv = data;
    std::size_t clean_correct = 0, fooled = 0;
    const auto indices = data.indices_of(Split::Test);
    for (const std::size_t idx : indices) {
        const Vector& x = data.inputs[idx];
        const std::size_t y = data.labels[idx];
        AttackConfig per = config;
        per.seed = config.seed ^ (0x9e3779b97f4a7c15ull * (idx + 1));
        const Vector x_adv = loaded.models.size() == 1
                                 ? pgd_attack(loaded.models[0], x, y, per)
                                 : pgd_attack(std::span<const Model>(loaded.models), x, y, per);
        adv.inputs[idx] = x_adv;
        const auto clean_pred = ensemble_predict(loaded.models, x);
        if (clean_pred.cls != y) continue;
        clean_correct += 1;
        const auto adv_pred = ensemble_predict(loaded.models, x_adv);
        const bool success = config.targeted ? adv_pred.cls == *config.targeted
                                             : adv_pred.cls != y;
        if (success) fooled += 1;
    }
    save_dataset(adv, (fs::path(outdir) / "adversarial.json").string());
    json stats{{"test_samples", indices.size()},
               {"clean_correct", clean_correct},
               {"fooled", fooled},
               {"success_rate",
                clean_correct > 0 ? static_cast<double>(fooled) / clean_correct : 0.0},
               {"attack", attack_config_json(config)}};
    write_json(stats, (fs::path(outdir) / "attack_stats.json").string());
    json cfg{{"checkpoint", checkpoint_path}, {"dataset", dataset_path},
             {"attack", flags.to_json()}, {"out", outdir}};
    write_manifest("attack", cfg.dump(), outdir);
    return kExitOk;
}

json transfer_report_json(const TransferReport& report) {
    json pairs = json::array();
    for (const auto& rec : report.pairs) {
        json jp{{"source", rec.source},
                {"target", rec.target},
                {"eligible_count", rec.eligible_count},
                {"transferred_count", rec.transferred_count}};
        if (rec.rate) jp["rate"] = *rec.rate;
        else jp["rate"] = nullptr;
        pairs.push_back(jp);
    }
    json doc{{"pairs", pairs}, {"attack", attack_config_json(report.attack)}};
    if (report.mean_rate) doc["mean_rate"] = *report.mean_rate;
    else doc["mean_rate"] = nullptr;
    return doc;
}

int cmd_transfer(const std::string& ensemble_path, const std::string& dataset_path,
                 const AttackFlags& flags, const std::string& outdir) {
    const auto loaded = load_checkpoint(ensemble_path);
    if (loaded.models.size() < 2) throw ConfigError("transfer: checkpoint has fewer than 2 models");
    const auto data = load_dataset(dataset_path);
    const auto report =
        ensemble_transfer_rate(loaded.models, data, Split::Test, flags.to_config());
    const json doc = transfer_report_json(report);
    std::cout << doc.dump(1) << "\n";
    if (!outdir.empty()) {
        fs::create_directories(outdir);
        write_json(doc, (fs::path(outdir) / "transfer_report.json").string());
        json cfg{{"ensemble", ensemble_path}, {"dataset", dataset_path},
                 {"attack", flags.to_json()}, {"out", outdir}};
        write_manifest("transfer", cfg.dump(), outdir);
    }
    return kExitOk;
}

int cmd_blackbox(const std::string& surrogate_path, const std::string& ensemble_path,
                 const std::string& dataset_path, const AttackFlags& flags,
                 const std::string& outdir) {
    const auto surrogate = load_checkpoint(surrogate_path);
    const auto ensemble = load_checkpoint(ensemble_path);
    const auto data = load_dataset(dataset_path);
    auto report = blackbox_robust_accuracy(surrogate.models[0], ensemble.models, data, Split::Test,
                                           flags.to_config());
    report.surrogate = surrogate_path;
    json doc{{"clean_accuracy", report.clean_accuracy},
             {"eligible_count", report.eligible_count},
             {"robust_correct_count", report.robust_correct_count},
             {"surrogate", report.surrogate},
             {"attack", attack_config_json(report.attack)}};
    if (report.robust_accuracy) doc["robust_accuracy"] = *report.robust_accuracy;
    else doc["robust_accuracy"] = nullptr;
    std::cout << doc.dump(1) << "\n";
    if (!outdir.empty()) {
        fs::create_directories(outdir);
        write_json(doc, (fs::path(outdir) / "blackbox_report.json").string());
        json cfg{{"surrogate", surrogate_path}, {"ensemble", ensemble_path},
                 {"dataset", dataset_path}, {"attack", flags.to_json()}, {"out", outdir}};
        write_manifest("blackbox", cfg.dump(), outdir);
    }
    return kExitOk;
}

int cmd_prop1(const std::string& model_f_path, const std::string& model_g_path,
              const std::string& dataset_path, const AttackFlags& flags, std::size_t batches,
              const std::string& outdir) {
    const auto f = load_checkpoint(model_f_path);
    const auto g = load_checkpoint(model_g_path);
    const auto data = load_dataset(dataset_path);
    const auto report = proposition1_check(f.models[0], g.models[0], data, Split::Test,
                                           flags.to_config(), batches);
    json jb = json::array();
    for (const auto& batch : report.batches)
        jb.push_back(json{{"lhs", batch.lhs}, {"rhs", batch.rhs}, {"holds", batch.holds}});
    json doc{{"batches", jb}, {"lipschitz", report.lipschitz}, {"epsilon", report.epsilon},
             {"all_hold", report.all_hold()}};
    std::cout << doc.dump(1) << "\n";
    if (!outdir.empty()) {
        fs::create_directories(outdir);
        write_json(doc, (fs::path(outdir) / "prop1_report.json").string());
        json cfg{{"model_f", model_f_path}, {"model_g", model_g_path},
                 {"dataset", dataset_path}, {"attack", flags.to_json()},
                 {"batches", batches}, {"out", outdir}};
        write_manifest("prop1", cfg.dump(), outdir);
    }
    return report.all_hold() ? kExitOk : kExitVerificationFailure;
}

int cmd_gen_data(const std::string& generator, const std::string& params_csv, std::uint64_t seed,
                 const std::string& out_path) {
    DatasetSpec spec;
    spec.generator = generator;
    std::stringstream ss(params_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("gen-data: params must be key=value");
        spec.params[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
    const auto data = generate_dataset(spec, seed);
    save_dataset(data, out_path);
    const fs::path dir = fs::path(out_path).parent_path();
    json cfg{{"generator", generator}, {"params", params_csv}, {"seed", seed}, {"out", out_path}};
    write_manifest("gen-data", cfg.dump(), dir.empty() ? "." : dir.string());
    return kExitOk;
}

int cmd_sweep_clip(const ExperimentConfig& config, const std::vector<double>& values) {
    write_manifest("sweep-clip", experiment_config_to_json(config), config.outdir);
    {
        // record the sweep values next to the config manifest
        json doc = json::parse(experiment_config_to_json(config));
        json full{{"command", "sweep-clip"}, {"toolkit_version", kToolkitVersion},
                  {"config", doc}, {"values", values}};
        write_json(full, (fs::path(config.outdir) / "manifest.json").string());
    }
    return run_sweep_clip(config, values, (fs::path(config.outdir) / "sweep.csv").string());
}

std::vector<double> parse_clip_values(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (item == "inf") values.push_back(std::numeric_limits<double>::infinity());
        else values.push_back(std::stod(item));
    }
    if (values.empty()) throw ConfigError("sweep-clip: empty --values");
    return values;
}

int cmd_rerun(const std::string& manifest_path, const std::string& outdir_override) {
    std::ifstream in(manifest_path);
    if (!in) throw MalformedFile("rerun: cannot open " + manifest_path);
    json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedFile(std::string("rerun: ") + e.what());
    }
    const std::string command = doc.at("command").get<std::string>();
    json cfg = doc.at("config");
    auto out_or = [&](const std::string& recorded) {
        return outdir_override.empty() ? recorded : outdir_override;
    };

    if (command == "train") {
        ExperimentConfig config = experiment_config_from_json_file(manifest_path);
        if (!outdir_override.empty()) config.outdir = outdir_override;
        return run_train(config);
    }
    if (command == "sweep-clip") {
        ExperimentConfig config = experiment_config_from_json_file(manifest_path);
        if (!outdir_override.empty()) config.outdir = outdir_override;
        const auto values = doc.at("values").get<std::vector<double>>();
        return cmd_sweep_clip(config, values);
    }
    if (command == "spectrum")
        return cmd_spectrum(cfg.at("filter").get<Vector>(), cfg.at("n").get<std::size_t>(),
                            out_or(cfg.value("out", "")));
    if (command == "verify-bounds")
        return cmd_verify_bounds(cfg.at("trials").get<std::size_t>(),
                                 cfg.at("seed").get<std::uint64_t>(),
                                 cfg.at("tmax").get<std::size_t>(),
                                 cfg.at("nmax").get<std::size_t>(), out_or(cfg.value("out", "")));
    if (command == "attack")
        return cmd_attack(cfg.at("checkpoint").get<std::string>(),
                          cfg.at("dataset").get<std::string>(),
                          AttackFlags::from_json(cfg.at("attack")), out_or(cfg.at("out")));
    if (command == "transfer")
        return cmd_transfer(cfg.at("ensemble").get<std::string>(),
                            cfg.at("dataset").get<std::string>(),
                            AttackFlags::from_json(cfg.at("attack")), out_or(cfg.value("out", "")));
    if (command == "blackbox")
        return cmd_blackbox(cfg.at("surrogate").get<std::string>(),
                            cfg.at("ensemble").get<std::string>(),
                            cfg.at("dataset").get<std::string>(),
                            AttackFlags::from_json(cfg.at("attack")), out_or(cfg.value("out", "")));
    if (command == "prop1")
        return cmd_prop1(cfg.at("model_f").get<std::string>(), cfg.at("model_g").get<std::string>(),
                         cfg.at("dataset").get<std::string>(),
                         AttackFlags::from_json(cfg.at("attack")),
                         cfg.at("batches").get<std::size_t>(), out_or(cfg.value("out", "")));
    if (command == "gen-data")
        return cmd_gen_data(cfg.at("generator").get<std::string>(),
                            cfg.at("params").get<std::string>(), cfg.at("seed").get<std::uint64_t>(),
                            out_or(cfg.at("out")));
    throw ConfigError("rerun: unknown command " + command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"layer-wise orthogonalization toolkit for robust ensembles"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train an ensemble per an experiment config");
    std::string train_config_path;
    std::string train_outdir;
    train_cmd->add_option("--config", train_config_path, "experiment config JSON")->required();
    train_cmd->add_option("--out", train_outdir, "output directory override");

    // attack
    auto* attack_cmd = app.add_subcommand("attack", "generate adversarial examples");
    std::string attack_checkpoint, attack_dataset, attack_out;
    AttackFlags attack_flags;
    attack_cmd->add_option("--checkpoint", attack_checkpoint, "model or ensemble checkpoint")
        ->required();
    attack_cmd->add_option("--dataset", attack_dataset, "dataset JSON")->required();
    attack_cmd->add_option("--out", attack_out, "output directory");
    attack_flags.add_to(attack_cmd);

    // transfer
    auto* transfer_cmd = app.add_subcommand("transfer", "ordered-pair transferability report");
    std::string transfer_ensemble, transfer_dataset, transfer_out;
    AttackFlags transfer_flags;
    transfer_cmd->add_option("--ensemble", transfer_ensemble, "ensemble checkpoint")->required();
    transfer_cmd->add_option("--dataset", transfer_dataset, "dataset JSON")->required();
    transfer_cmd->add_option("--out", transfer_out, "output directory");
    transfer_flags.add_to(transfer_cmd);

    // blackbox
    auto* blackbox_cmd = app.add_subcommand("blackbox", "black-box robust accuracy report");
    std::string bb_surrogate, bb_ensemble, bb_dataset, bb_out;
    AttackFlags bb_flags;
    blackbox_cmd->add_option("--surrogate", bb_surrogate, "surrogate checkpoint")->required();
    blackbox_cmd->add_option("--ensemble", bb_ensemble, "target ensemble checkpoint")->required();
    blackbox_cmd->add_option("--dataset", bb_dataset, "dataset JSON")->required();
    blackbox_cmd->add_option("--out", bb_out, "output directory");
    bb_flags.add_to(blackbox_cmd);

    // spectrum
    auto* spectrum_cmd = app.add_subcommand("spectrum", "exact circulant spectrum of a filter");
    std::string spectrum_filter;
    std::size_t spectrum_n = 0;
    std::string spectrum_out;
    spectrum_cmd->add_option("--filter", spectrum_filter, "comma-separated taps")->required();
    spectrum_cmd->add_option("--n", spectrum_n, "input length")->required();
    spectrum_cmd->add_option("--out", spectrum_out, "optional output directory");

    // verify-bounds
    auto* verify_cmd = app.add_subcommand("verify-bounds", "check the circulant gap bounds");
    std::size_t verify_trials = 1000, verify_tmax = 5, verify_nmax = 64;
    std::uint64_t verify_seed = 1;
    std::string verify_out;
    verify_cmd->add_option("--trials", verify_trials, "number of random filter pairs");
    verify_cmd->add_option("--seed", verify_seed, "rng seed");
    verify_cmd->add_option("--tmax", verify_tmax, "max filter length");
    verify_cmd->add_option("--nmax", verify_nmax, "max input length");
    verify_cmd->add_option("--out", verify_out, "optional output directory");

    // sweep-clip
    auto* sweep_cmd = app.add_subcommand("sweep-clip", "accuracy / robustness / transfer vs C");
    std::string sweep_values = "0.8,1.0,1.2,1.5,inf";
    std::string sweep_config_path, sweep_outdir;
    sweep_cmd->add_option("--values", sweep_values, "comma-separated clip values; inf = no clip");
    sweep_cmd->add_option("--config", sweep_config_path, "experiment config JSON")->required();
    sweep_cmd->add_option("--out", sweep_outdir, "output directory override");

    // prop1
    auto* prop1_cmd = app.add_subcommand("prop1", "empirical risk-gap inequality report");
    std::string prop1_f, prop1_g, prop1_dataset, prop1_out;
    std::size_t prop1_batches = 10;
    AttackFlags prop1_flags;
    prop1_cmd->add_option("--model-f", prop1_f, "source model checkpoint")->required();
    prop1_cmd->add_option("--model-g", prop1_g, "comparison model checkpoint")->required();
    prop1_cmd->add_option("--dataset", prop1_dataset, "dataset JSON")->required();
    prop1_cmd->add_option("--batches", prop1_batches, "number of evaluation batches");
    prop1_cmd->add_option("--out", prop1_out, "output directory");
    prop1_flags.add_to(prop1_cmd);

    // gen-data
    auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset file");
    std::string gen_generator = "patch_textures", gen_params, gen_out;
    std::uint64_t gen_seed = 1;
    gen_cmd->add_option("--generator", gen_generator, "generator name");
    gen_cmd->add_option("--params", gen_params, "key=value,key=value generator parameters");
    gen_cmd->add_option("--seed", gen_seed, "rng seed");
    gen_cmd->add_option("--out", gen_out, "output dataset path")->required();

    // rerun
    auto* rerun_cmd = app.add_subcommand("rerun", "re-execute a recorded manifest");
    std::string rerun_manifest, rerun_outdir;
    rerun_cmd->add_option("--manifest", rerun_manifest, "manifest JSON")->required();
    rerun_cmd->add_option("--out", rerun_outdir, "output directory override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train_cmd) {
            ExperimentConfig config = experiment_config_from_json_file(train_config_path);
            if (!train_outdir.empty()) config.outdir = train_outdir;
            config.outdir = default_outdir(config.outdir);
            return run_train(config);
        }
        if (*attack_cmd)
            return cmd_attack(attack_checkpoint, attack_dataset, attack_flags,
                              default_outdir(attack_out));
        if (*transfer_cmd)
            return cmd_transfer(transfer_ensemble, transfer_dataset, transfer_flags, transfer_out);
        if (*blackbox_cmd)
            return cmd_blackbox(bb_surrogate, bb_ensemble, bb_dataset, bb_flags, bb_out);
        if (*spectrum_cmd)
            return cmd_spectrum(parse_filter(spectrum_filter), spectrum_n, spectrum_out);
        if (*verify_cmd)
            return cmd_verify_bounds(verify_trials, verify_seed, verify_tmax, verify_nmax,
                                     verify_out);
        if (*sweep_cmd) {
            ExperimentConfig config = experiment_config_from_json_file(sweep_config_path);
            if (!sweep_outdir.empty()) config.outdir = sweep_outdir;
            config.outdir = default_outdir(config.outdir);
            return cmd_sweep_clip(config, parse_clip_values(sweep_values));
        }
        if (*prop1_cmd)
            return cmd_prop1(prop1_f, prop1_g, prop1_dataset, prop1_flags, prop1_batches,
                             prop1_out);
        if (*gen_cmd) return cmd_gen_data(gen_generator, gen_params, gen_seed, gen_out);
        if (*rerun_cmd) return cmd_rerun(rerun_manifest, rerun_outdir);
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const MalformedFile& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UnsupportedVersion& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericFailure;
    }
}
