#include "lotos/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace lotos {

namespace {

using nlohmann::json;

json spec_to_json(const ModelSpec& spec) {
    json layers = json::array();
    for (const auto& l : spec.layers) {
        json jl;
        jl["kind"] = l.kind == LayerDesc::Kind::Dense ? "dense" : "conv1d";
        if (l.kind == LayerDesc::Kind::Dense) jl["out_dim"] = l.out_dim;
        else jl["taps"] = l.taps;
        jl["activation"] = l.activation == Activation::Relu ? "relu" : "none";
        layers.push_back(jl);
    }
    return json{{"input_dim", spec.input_dim}, {"classes", spec.classes}, {"layers", layers}};
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.classes = j.at("classes").get<std::size_t>();
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
            throw MalformedFile("checkpoint: unknown layer kind " + kind);
        }
        const std::string act = jl.at("activation").get<std::string>();
        desc.activation = act == "relu" ? Activation::Relu : Activation::None;
        spec.layers.push_back(desc);
    }
    return spec;
}

json model_to_json(const Model& model) {
    json layers = json::array();
    for (const auto& layer : model.layers) layers.push_back(get_parameters(layer));
    return json{{"spec", spec_to_json(model.spec)}, {"parameters", layers}};
}

Model model_from_json(const json& j) {
    Model model = build_model(spec_from_json(j.at("spec")), 0);
    const auto& params = j.at("parameters");
    if (params.size() != model.layers.size())
        throw ShapeError("checkpoint: layer count mismatch between spec and parameters");
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const Vector p = params[li].get<Vector>();
        if (p.size() != parameter_count(model.layers[li]))
            throw ShapeError("checkpoint: parameter size mismatch at layer " + std::to_string(li));
        set_parameters(model.layers[li], p);
    }
    return model;
}

void write_doc(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("save_checkpoint: cannot open " + path);
    out << doc.dump(1) << "\n";
}

json common_header(const CheckpointMeta& meta, bool ensemble) {
    return json{{"format_version", 1},
                {"kind", ensemble ? "ensemble" : "model"},
                {"method", meta.method},
                {"seed", meta.seed}};
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path, const CheckpointMeta& meta) {
    json doc = common_header(meta, false);
    doc["models"] = json::array({model_to_json(model)});
    write_doc(doc, path);
}

void save_checkpoint(std::span<const Model> ensemble, const std::string& path,
                     const CheckpointMeta& meta) {
    json doc = common_header(meta, true);
    json models = json::array();
    for (const auto& model : ensemble) models.push_back(model_to_json(model));
    doc["models"] = models;
    write_doc(doc, path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedFile("load_checkpoint: cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedFile(std::string("load_checkpoint: ") + e.what());
    }
    LoadedCheckpoint loaded;
    try {
        if (!doc.contains("format_version") || !doc["format_version"].is_number_integer())
            throw MalformedFile("load_checkpoint: missing format_version");
        if (doc["format_version"].get<int>() != 1)
            throw UnsupportedVersion("load_checkpoint: unsupported format version " +
                                     doc["format_version"].dump());
        loaded.is_ensemble = doc.at("kind").get<std::string>() == "ensemble";
        loaded.meta.method = doc.at("method").get<std::string>();
        loaded.meta.seed = doc.at("seed").get<std::uint64_t>();
        for (const auto& jm : doc.at("models")) loaded.models.push_back(model_from_json(jm));
    } catch (const nlohmann::json::exception& e) {
        throw MalformedFile(std::string("load_checkpoint: ") + e.what());
    }
    if (loaded.models.empty()) throw MalformedFile("load_checkpoint: no models");
    return loaded;
}

}  // namespace lotos
