// Python bindings for the satgrad core. Binary64 only: the Python surface is
// a lab notebook interface, and the C++ CLI covers binary32 runs.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "satgrad/attacks.hpp"
#include "satgrad/dataset.hpp"
#include "satgrad/diagnostics.hpp"
#include "satgrad/model_io.hpp"
#include "satgrad/train.hpp"

namespace py = pybind11;
using namespace satgrad;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix<double> matrix_from_numpy(const Array& a) {
    if (a.ndim() != 2) throw ValueError("expected a 2-d array");
    Matrix<double> m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::memcpy(m.data(), a.data(), sizeof(double) * m.size());
    return m;
}

// The ShapeContainer+data constructors copy and set proper strides on every
// pybind11 version in circulation; the (count)+mutable_data pattern produces
// stride-0 arrays on pybind11 2.9.
py::array_t<double> numpy_from_matrix(const Matrix<double>& m) {
    return py::array_t<double>(
        py::array::ShapeContainer{static_cast<py::ssize_t>(m.rows()),
                                  static_cast<py::ssize_t>(m.cols())},
        m.data());
}

std::vector<double> vector_from_numpy(const Array& a) {
    if (a.ndim() != 1) throw ValueError("expected a 1-d array");
    return {a.data(), a.data() + a.shape(0)};
}

template <typename T>
py::array_t<T> numpy_from_vector(const std::vector<T>& v) {
    return py::array_t<T>(
        py::array::ShapeContainer{static_cast<py::ssize_t>(v.size())}, v.data());
}

Dataset<double> dataset_from_numpy(const Array& images, const py::array_t<std::uint8_t>& labels,
                                   bool test_split) {
    Dataset<double> ds;
    ds.images = matrix_from_numpy(images);
    if (labels.ndim() != 1) throw ValueError("labels must be 1-d");
    ds.labels.assign(labels.data(), labels.data() + labels.shape(0));
    if (ds.images.rows() != ds.labels.size())
        throw ValueError("image/label count mismatch");
    for (std::uint8_t l : ds.labels)
        if (l > 9) throw ValueError("labels must lie in 0-9");
    ds.split = test_split ? Split::Test : Split::Train;
    return ds;
}

} // namespace

PYBIND11_MODULE(_satgrad, m) {
    m.doc() = "saturated-network gradient masking laboratory (binary64 core)";

    py::register_exception<Error>(m, "SatgradError");

    py::enum_<Activation>(m, "Activation")
        .value("Sigmoid", Activation::Sigmoid)
        .value("ReLU", Activation::ReLU);

    py::enum_<AttackMode>(m, "AttackMode")
        .value("Naive", AttackMode::Naive)
        .value("StableGain", AttackMode::StableGain)
        .value("StableLogit", AttackMode::StableLogit);

    py::class_<MlpModel<double>>(m, "MlpModel")
        .def_readonly("dims", &MlpModel<double>::dims)
        .def_readonly("activation", &MlpModel<double>::activation)
        .def_readonly("gain", &MlpModel<double>::gain)
        .def_readonly("logit_scale", &MlpModel<double>::logit_scale)
        .def_property_readonly("parameter_count", &MlpModel<double>::parameter_count)
        .def("weight", [](const MlpModel<double>& mm, std::size_t layer) {
            if (layer >= mm.layer_count()) throw ValueError("layer out of range");
            return numpy_from_matrix(mm.weights[layer]);
        })
        .def("bias", [](const MlpModel<double>& mm, std::size_t layer) {
            if (layer >= mm.layer_count()) throw ValueError("layer out of range");
            return numpy_from_vector<double>(mm.biases[layer]);
        });

    py::class_<Dataset<double>>(m, "Dataset")
        .def(py::init([](const Array& images, const py::array_t<std::uint8_t>& labels,
                         bool test_split) { return dataset_from_numpy(images, labels, test_split); }),
             py::arg("images"), py::arg("labels"), py::arg("test_split") = false)
        .def_property_readonly("size", &Dataset<double>::size)
        .def_property_readonly("images",
                               [](const Dataset<double>& ds) { return numpy_from_matrix(ds.images); })
        .def_property_readonly("labels", [](const Dataset<double>& ds) {
            return numpy_from_vector<std::uint8_t>(ds.labels);
        });

    m.def("load_mnist", [](const std::filesystem::path& dir, bool test_split) {
              return load_mnist_split<double>(dir, test_split ? Split::Test : Split::Train);
          },
          py::arg("data_dir"), py::arg("test_split") = false);

    // numerics
    m.def("sigmoid", [](double z, double gain) { return sigmoid(z, gain); }, py::arg("z"),
          py::arg("gain") = 1.0);
    m.def("relu", [](double z) { return relu(z); });
    m.def("softmax_stable", [](const Array& v) {
        const auto logits = vector_from_numpy(v);
        auto p = softmax_stable(std::span<const double>(logits));
        return numpy_from_vector<double>(p);
    });
    m.def("cross_entropy", [](const Array& probs, std::size_t label) {
        const auto p = vector_from_numpy(probs);
        return cross_entropy(std::span<const double>(p), label);
    });
    m.def("sign", [](double x) { return sign(x); });
    m.def("kurtosis", [](const Array& v) {
        const auto s = vector_from_numpy(v);
        return kurtosis(std::span<const double>(s));
    });

    // model operations
    m.def("init_model", [](const std::vector<std::size_t>& dims, Activation act,
                           std::uint64_t seed) { return init_model<double>(dims, act, seed); },
          py::arg("dims"), py::arg("activation"), py::arg("seed"));

    m.def("forward", [](const MlpModel<double>& model, const Array& x,
                        std::optional<std::size_t> label) {
              const auto xs = vector_from_numpy(x);
              ForwardTrace<double> t = forward(model, std::span<const double>(xs), label);
              py::dict d;
              d["logits"] = numpy_from_vector<double>(t.logits);
              d["probs"] = numpy_from_vector<double>(t.probs);
              d["predicted"] = t.predicted;
              if (t.loss) d["loss"] = *t.loss;
              py::list acts;
              for (const auto& a : t.act) acts.append(numpy_from_vector<double>(a));
              d["activations"] = acts;
              return d;
          },
          py::arg("model"), py::arg("x"), py::arg("label") = std::nullopt);

    m.def("input_gradient", [](const MlpModel<double>& model, const Array& x, std::size_t label) {
              const auto xs = vector_from_numpy(x);
              ForwardTrace<double> t = forward(model, std::span<const double>(xs), label);
              GradientRecord<double> rec = backward(model, t, label);
              py::dict d;
              d["gradient"] =
                  numpy_from_vector<double>(rec.input_gradient);
              d["exact_zero_count"] = rec.exact_zero_count;
              d["max_abs"] = rec.max_abs;
              d["all_zero"] = rec.all_zero;
              return d;
          },
          py::arg("model"), py::arg("x"), py::arg("label"));

    m.def("surrogate_gain", [](const MlpModel<double>& model, double g) {
        return surrogate_gain(model, g);
    });
    m.def("surrogate_logit_scale", [](const MlpModel<double>& model, double s) {
        return surrogate_logit_scale(model, s);
    });

    m.def("save_model", [](const MlpModel<double>& model, const std::filesystem::path& p) {
        save_model(model, p);
    });
    m.def("load_model", [](const std::filesystem::path& p) {
        AnyModel any = load_model(p);
        if (!std::holds_alternative<MlpModel<double>>(any))
            throw ValueError("only binary64 models are exposed to Python");
        return std::get<MlpModel<double>>(std::move(any));
    });

    // training
    py::class_<TrainingConfig>(m, "TrainingConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &TrainingConfig::epochs)
        .def_readwrite("batch_size", &TrainingConfig::batch_size)
        .def_readwrite("learning_rate", &TrainingConfig::learning_rate)
        .def_readwrite("lambda_max", &TrainingConfig::lambda_max)
        .def_readwrite("ramp_epochs", &TrainingConfig::ramp_epochs)
        .def_readwrite("seed", &TrainingConfig::seed);

    m.def("train", [](const TrainingConfig& cfg, const Dataset<double>& train_ds,
                      const Dataset<double>& test_ds, Activation act,
                      const std::vector<std::size_t>& dims) {
              auto [model, metrics] = train(cfg, train_ds, test_ds, act, dims);
              py::list rows;
              for (const auto& e : metrics.epochs) {
                  py::dict r;
                  r["epoch"] = e.epoch;
                  r["loss"] = e.train_loss;
                  r["penalty"] = e.penalty;
                  r["accuracy"] = e.test_accuracy;
                  r["saturation_bitwise"] = e.saturation_bitwise;
                  r["saturation_near"] = e.saturation_near;
                  rows.append(r);
              }
              return py::make_tuple(model, rows);
          },
          py::arg("config"), py::arg("train_dataset"), py::arg("test_dataset"),
          py::arg("activation"), py::arg("dims"));

    m.def("evaluate_accuracy", [](const MlpModel<double>& model, const Dataset<double>& ds) {
        return evaluate_accuracy(model, ds.images, ds.labels);
    });

    // attacks and diagnostics
    py::class_<AttackConfig>(m, "AttackConfig")
        .def(py::init<>())
        .def_readwrite("epsilon", &AttackConfig::epsilon)
        .def_readwrite("mode", &AttackConfig::mode)
        .def_readwrite("gain_prime", &AttackConfig::gain_prime)
        .def_readwrite("logit_prime", &AttackConfig::logit_prime)
        .def_readwrite("clip", &AttackConfig::clip);

    m.def("fgsm_direction", [](const MlpModel<double>& surrogate, const Array& x,
                               std::size_t label) {
        const auto xs = vector_from_numpy(x);
        auto dir = fgsm_direction(surrogate, std::span<const double>(xs), label);
        return numpy_from_vector<std::int8_t>(dir);
    });

    m.def("attack", [](const MlpModel<double>& target, const AttackConfig& cfg, const Array& x,
                       std::size_t label) {
        const auto xs = vector_from_numpy(x);
        AttackOutcome<double> out = attack(target, cfg, std::span<const double>(xs), label);
        py::dict d;
        d["adversarial"] = numpy_from_vector<double>(out.adversarial);
        d["zero_perturbation"] = out.zero_perturbation;
        d["pre_label"] = out.pre_label;
        d["post_label"] = out.post_label;
        d["success"] = out.success;
        return d;
    });

    m.def("attack_accuracy", [](const MlpModel<double>& target, const AttackConfig& cfg,
                                const Dataset<double>& ds) {
        AttackSummary s = attack_accuracy(target, cfg, ds);
        py::dict d;
        d["accuracy"] = s.accuracy;
        d["clean_accuracy"] = s.clean_accuracy;
        d["attacked"] = s.attacked;
        return d;
    });

    m.def("gradient_stats", [](const MlpModel<double>& model, const Dataset<double>& ds) {
        GradientStatsReport r = gradient_stats(model, ds);
        py::dict d;
        d["zero_element_ratio"] = r.zero_element_ratio;
        d["all_zero_image_ratio"] = r.all_zero_image_ratio;
        d["exact_zero_elements"] = r.exact_zero_elements;
        d["element_count"] = r.element_count;
        if (r.median_nonzero_abs) d["median_nonzero_abs"] = *r.median_nonzero_abs;
        return d;
    });

    m.def("gain_sweep", [](const MlpModel<double>& target, const Dataset<double>& ds,
                           const std::vector<double>& gains, double epsilon) {
        auto points = gain_sweep(target, ds, gains, epsilon);
        py::list rows;
        for (const auto& p : points) {
            py::dict r;
            r["gain"] = p.gain;
            r["nonzero_gradient_ratio"] = p.nonzero_gradient_ratio;
            r["attack_accuracy"] = p.attack_accuracy;
            rows.append(r);
        }
        return rows;
    });

    m.def("distribution_report", [](const MlpModel<double>& model, const Dataset<double>& ds,
                                    double delta, std::size_t batch) {
              DistributionReport r = distribution_report(model, ds, delta, batch);
              py::dict d;
              py::list k;
              for (const auto& layer : r.layers) k.append(layer.kurtosis);
              d["weight_kurtosis"] = k;
              d["activation_kurtosis"] = r.activation_kurtosis;
              d["activation_mass_near_zero"] = r.activation_mass_near_zero;
              d["activation_mass_near_one"] = r.activation_mass_near_one;
              return d;
          },
          py::arg("model"), py::arg("dataset"), py::arg("delta") = 1e-3,
          py::arg("batch") = 2048);

#ifdef SATGRAD_VERSION
    m.attr("__version__") = SATGRAD_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
