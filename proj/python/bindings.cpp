#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lotos/experiment.hpp"

namespace py = pybind11;
using namespace lotos;

namespace {

Matrix matrix_from_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) throw InvalidInput("matrix: empty");
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols) throw ShapeError("matrix: ragged rows");
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

std::vector<Vector> matrix_to_rows(const Matrix& m) {
    std::vector<Vector> rows(m.rows, Vector(m.cols));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) rows[i][j] = m(i, j);
    return rows;
}

AttackConfig attack_from_kwargs(double eps, std::size_t steps, const std::string& norm,
                                bool random_start, long long targeted, std::uint64_t seed) {
    AttackConfig c;
    c.epsilon = eps;
    c.steps = steps;
    if (norm == "l2") c.norm = AttackNorm::L2;
    else if (norm == "linf") c.norm = AttackNorm::Linf;
    else throw ConfigError("norm must be 'l2' or 'linf'");
    c.random_start = random_start;
    if (targeted >= 0) c.targeted = static_cast<std::size_t>(targeted);
    c.seed = seed;
    return c;
}

}  // namespace

PYBIND11_MODULE(_lotos, m) {
    m.doc() = "layer-wise orthogonalization toolkit: spectra, clipping, ensembles, attacks";

    py::register_exception<InvalidInput>(m, "InvalidInputError");
    py::register_exception<ShapeError>(m, "ShapeErrorException");
    py::register_exception<ConfigError>(m, "ConfigErrorException");

    // --- spectra and bounds ---
    m.def("autocorrelation_coeffs",
          [](const Vector& taps) { return autocorrelation_coeffs(ConvFilter{taps}); },
          py::arg("taps"));

    m.def("circulant_spectrum",
          [](const Vector& taps, std::size_t n) {
              const auto spec = circulant_spectrum(ConvFilter{taps}, n);
              return py::dict(py::arg("s_squared") = spec.values,
                              py::arg("coeffs") = spec.coeffs,
                              py::arg("singular_values_sorted") = spec.sorted_singular_values());
          },
          py::arg("taps"), py::arg("n"));

    m.def("lemma_gap_bound",
          [](const Vector& taps, std::size_t n, std::size_t p) {
              return lemma_gap_bound(ConvFilter{taps}, n, p);
          },
          py::arg("taps"), py::arg("n"), py::arg("p"));

    m.def("corollary_gap_bound",
          [](const Vector& taps, std::size_t n, std::size_t j, std::size_t p) {
              return corollary_gap_bound(ConvFilter{taps}, n, j, p);
          },
          py::arg("taps"), py::arg("n"), py::arg("j"), py::arg("p"));

    m.def("theorem_cross_bound",
          [](double eps, const Vector& taps, std::size_t n, std::size_t p) {
              return theorem_cross_bound(eps, ConvFilter{taps}, n, p);
          },
          py::arg("eps"), py::arg("taps"), py::arg("n"), py::arg("p"));

    m.def("verify_circulant_bounds",
          [](const Vector& taps_a, const Vector& taps_b, std::size_t n) {
              const auto report = verify_circulant_bounds(ConvFilter{taps_a}, ConvFilter{taps_b}, n);
              return py::dict(py::arg("eps") = report.eps,
                              py::arg("all_hold") = report.all_hold(),
                              py::arg("n") = report.n);
          },
          py::arg("taps_a"), py::arg("taps_b"), py::arg("n"));

    // --- numerics ---
    m.def("svd",
          [](const std::vector<Vector>& rows) {
              const auto result = svd_oracle(matrix_from_rows(rows));
              return py::make_tuple(result.singular_values, matrix_to_rows(result.left_vectors),
                                    matrix_to_rows(result.right_vectors));
          },
          py::arg("matrix"), "full SVD; returns (singular_values, U_rows, V_rows)");

    m.def("spectral_norm",
          [](const std::vector<Vector>& rows) {
              const Matrix mat = matrix_from_rows(rows);
              return power_iteration(LinearOperator::from_matrix(mat), std::nullopt,
                                     {.max_iters = 5000, .tol = 1e-10})
                  .sigma;
          },
          py::arg("matrix"));

    // --- datasets ---
    m.def("generate_dataset",
          [](const std::string& generator, const std::map<std::string, double>& params,
             std::uint64_t seed) {
              DatasetSpec spec;
              spec.generator = generator;
              spec.params = params;
              const auto data = generate_dataset(spec, seed);
              std::vector<int> splits;
              for (Split s : data.splits) splits.push_back(static_cast<int>(s));
              return py::dict(py::arg("inputs") = data.inputs, py::arg("labels") = data.labels,
                              py::arg("splits") = splits, py::arg("dim") = data.dim,
                              py::arg("classes") = data.classes);
          },
          py::arg("generator"), py::arg("params"), py::arg("seed"));

    // --- models and ensembles ---
    py::class_<Model>(m, "Model")
        .def("predict",
             [](const Model& model, const Vector& x) {
                 const auto probs = model_forward(model, x).probabilities;
                 std::size_t cls = 0;
                 for (std::size_t i = 1; i < probs.size(); ++i)
                     if (probs[i] > probs[cls]) cls = i;
                 return py::make_tuple(cls, probs);
             },
             py::arg("x"), "returns (class, probabilities)")
        .def("loss_lipschitz_bound", [](const Model& model) { return loss_lipschitz_bound(model); })
        .def("layer_spectral_norms", [](const Model& model) {
            Vector norms;
            for (const auto& layer : model.layers)
                norms.push_back(power_iteration(as_operator(layer), std::nullopt,
                                                {.max_iters = 5000, .tol = 1e-8})
                                    .sigma);
            return norms;
        });

    py::class_<EnsembleTrainState>(m, "Ensemble")
        .def_property_readonly("size", &EnsembleTrainState::size)
        .def("model", [](EnsembleTrainState& state, std::size_t i) -> Model& {
                 if (i >= state.size()) throw InvalidInput("model index out of range");
                 return state.models[i];
             },
             py::return_value_policy::reference_internal, py::arg("index"))
        .def("predict", [](const EnsembleTrainState& state, const Vector& x) {
            const auto pred = ensemble_predict(state.models, x);
            return py::make_tuple(pred.cls, pred.probabilities);
        });

    m.def("train_ensemble",
          [](const std::string& generator, const std::map<std::string, double>& params,
             std::uint64_t seed, std::size_t ensemble_size, const std::string& method,
             std::size_t epochs, double clip_to, double lambda, double mal, std::size_t k,
             const std::string& layer_selection) {
              ExperimentConfig config = ExperimentConfig::desk_default();
              config.dataset.generator = generator;
              config.dataset.params = params;
              config.ensemble_size = ensemble_size;
              config.method = train_method_from_string(method);
              config.clip_value = clip_to;
              config.train.epochs = epochs;
              config.lotos.lambda = lambda;
              config.lotos.mal = mal;
              config.lotos.k = k;
              config.lotos.selection = layer_selection == "all_affine"
                                           ? LayerSelection::AllAffine
                                           : LayerSelection::FirstOnly;
              const auto data = dataset_for(config, seed);
              auto trained = train_for_seed(config, data, seed);
              return std::move(trained.state);
          },
          py::arg("generator"), py::arg("params"), py::arg("seed"), py::arg("ensemble_size") = 3,
          py::arg("method") = "lotos", py::arg("epochs") = 16, py::arg("clip_to") = 1.0,
          py::arg("lambda_") = 1.0, py::arg("mal") = 0.8, py::arg("k") = 1,
          py::arg("layer_selection") = "first_only",
          "train an ensemble on a generated dataset; method: orig | clip | lotos | random_control");

    // --- attacks and evaluation ---
    m.def("pgd_attack",
          [](const Model& model, const Vector& x, std::size_t label, double eps, std::size_t steps,
             const std::string& norm, bool random_start, long long targeted, std::uint64_t seed) {
              return pgd_attack(model, x, label,
                                attack_from_kwargs(eps, steps, norm, random_start, targeted, seed));
          },
          py::arg("model"), py::arg("x"), py::arg("label"), py::arg("eps") = 0.04,
          py::arg("steps") = 50, py::arg("norm") = "l2", py::arg("random_start") = false,
          py::arg("targeted") = -1, py::arg("seed") = 1);

    m.def("transfer_rate",
          [](const EnsembleTrainState& state, const std::string& generator,
             const std::map<std::string, double>& params, std::uint64_t seed, double eps,
             std::size_t steps) {
              DatasetSpec spec;
              spec.generator = generator;
              spec.params = params;
              const auto data = generate_dataset(spec, seed);
              AttackConfig config;
              config.epsilon = eps;
              config.steps = steps;
              const auto report =
                  ensemble_transfer_rate(state.models, data, Split::Test, config);
              py::list pairs;
              for (const auto& rec : report.pairs) {
                  py::dict d;
                  d["source"] = rec.source;
                  d["target"] = rec.target;
                  d["eligible"] = rec.eligible_count;
                  d["transferred"] = rec.transferred_count;
                  d["rate"] = rec.rate ? py::cast(*rec.rate) : py::none();
                  pairs.append(d);
              }
              return py::dict(py::arg("pairs") = pairs,
                              py::arg("mean_rate") = report.mean_rate
                                  ? py::cast(*report.mean_rate)
                                  : py::none());
          },
          py::arg("ensemble"), py::arg("generator"), py::arg("params"), py::arg("seed"),
          py::arg("eps") = 0.3, py::arg("steps") = 50);

    m.def("clip_model",
          [](Model& model, double C, double tol) {
              ClipOptions opts;
              opts.tol = tol;
              for (std::size_t li = 0; li < model.layers.size(); ++li)
                  clip_spectral_norm(model.layers[li], C, opts, &model.spectral[li]);
          },
          py::arg("model"), py::arg("C") = 1.0, py::arg("tol") = 1e-2);

    m.attr("__version__") = kToolkitVersion;
}
