// Python bindings for the main operations: the statevector circuit layer,
// the composite losses, the evaluation statistics, synthetic data
// generation, and the end-to-end model.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hqcm/config.hpp"
#include "hqcm/data.hpp"
#include "hqcm/loss.hpp"
#include "hqcm/metrics.hpp"
#include "hqcm/model.hpp"
#include "hqcm/qsim.hpp"
#include "hqcm/train.hpp"

namespace py = pybind11;
using namespace hqcm;

namespace {

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return std::vector<double>(a.data(), a.data() + a.size());
}

qsim::CircuitParams make_circuit(int qubits, int layers,
                                 const py::array_t<double, py::array::c_style | py::array::forcecast>& angles) {
    qsim::CircuitParams p = qsim::CircuitParams::ring(qubits, layers);
    if (static_cast<std::size_t>(angles.size()) != p.angles.size())
        throw std::invalid_argument("angles must have layers*qubits*3 values");
    std::copy(angles.data(), angles.data() + angles.size(), p.angles.begin());
    return p;
}

Tensor<float> tensor_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    std::vector<int> shape;
    for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(static_cast<int>(a.shape(i)));
    Tensor<float> t(shape);
    std::copy(a.data(), a.data() + a.size(), t.data.begin());
    return t;
}

py::array_t<float> array_from_tensor(const Tensor<float>& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<float> out(shape);
    std::copy(t.data.begin(), t.data.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_hqcm, m) {
    m.doc() = "hybrid quantum-classical image classifier core";

    // ------------------------------------------------------------ circuits
    m.def(
        "run_circuit",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& input, int qubits,
           int layers, const py::array_t<double, py::array::c_style | py::array::forcecast>& angles) {
            auto out = qsim::run_circuit(to_vector(input), make_circuit(qubits, layers, angles));
            return py::make_tuple(out.expectations, out.degenerate_embed);
        },
        py::arg("input"), py::arg("qubits"), py::arg("layers"), py::arg("angles"),
        "Amplitude-embed `input`, run the ring-entangled layers, return (<Y_j> list, degenerate flag)");

    m.def(
        "grad_circuit",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& input, int qubits,
           int layers, const py::array_t<double, py::array::c_style | py::array::forcecast>& angles,
           const std::vector<double>& upstream) {
            auto g = qsim::grad_circuit(to_vector(input), make_circuit(qubits, layers, angles), upstream);
            return py::make_tuple(g.grad_angles, g.grad_input);
        },
        py::arg("input"), py::arg("qubits"), py::arg("layers"), py::arg("angles"), py::arg("upstream"));

    m.def(
        "parameter_shift_grad",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& input, int qubits,
           int layers, const py::array_t<double, py::array::c_style | py::array::forcecast>& angles,
           const std::vector<double>& upstream) {
            return qsim::parameter_shift_grad(to_vector(input), make_circuit(qubits, layers, angles),
                                              upstream);
        },
        py::arg("input"), py::arg("qubits"), py::arg("layers"), py::arg("angles"), py::arg("upstream"));

    m.def(
        "amplitude_embed",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& v) {
            auto r = qsim::amplitude_embed(to_vector(v));
            std::vector<std::complex<double>> amps(r.state.amps.begin(), r.state.amps.end());
            return py::make_tuple(amps, r.degenerate);
        },
        py::arg("v"));

    // -------------------------------------------------------------- losses
    m.def(
        "cross_entropy",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& logits,
           const std::vector<int>& labels, const std::vector<double>& class_weights) {
            auto r = cross_entropy(tensor_from_array(logits), labels, class_weights);
            return py::make_tuple(r.value, array_from_tensor(r.grad));
        },
        py::arg("logits"), py::arg("labels"), py::arg("class_weights"));

    m.def(
        "bce_attention",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& attention,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& mask) {
            auto r = bce_attention(tensor_from_array(attention), tensor_from_array(mask));
            return py::make_tuple(r.value, array_from_tensor(r.grad));
        },
        py::arg("attention"), py::arg("mask"));

    m.def(
        "dice_loss",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& attention,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& mask, double eps) {
            auto r = dice_loss(tensor_from_array(attention), tensor_from_array(mask), eps);
            return py::make_tuple(r.value, array_from_tensor(r.grad));
        },
        py::arg("attention"), py::arg("mask"), py::arg("eps") = 1e-6);

    // ------------------------------------------------------------- metrics
    m.def(
        "wilcoxon_signed_rank",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            auto r = wilcoxon_signed_rank(a, b);
            py::dict d;
            d["statistic"] = r.statistic;
            d["p_value"] = r.p_value;
            d["n"] = r.n;
            d["exact"] = r.exact;
            d["flagged"] = r.flagged;
            return d;
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "jaccard_at",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& attention,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& mask, double tau) {
            bool flagged = false;
            const double score = jaccard_at(tensor_from_array(attention), tensor_from_array(mask), tau, &flagged);
            return py::make_tuple(score, flagged);
        },
        py::arg("attention"), py::arg("mask"), py::arg("tau"));

    m.def(
        "classification_report_json",
        [](const std::vector<int>& predictions, const std::vector<int>& labels, int num_classes) {
            return report_to_json(classification_report(predictions, labels, num_classes));
        },
        py::arg("predictions"), py::arg("labels"), py::arg("num_classes"));

    // ---------------------------------------------------------------- data
    m.def(
        "generate_synthetic",
        [](int n, int size, std::uint64_t seed, const std::string& out_dir) {
            auto s = generate_synthetic(n, size, seed, out_dir);
            py::dict d;
            d["manifest"] = s.manifest_path;
            d["class_counts"] = s.class_counts;
            d["split_counts"] = s.split_counts;
            return d;
        },
        py::arg("n"), py::arg("size"), py::arg("seed"), py::arg("out_dir"));

    // --------------------------------------------------------------- model
    py::class_<Model<float>>(m, "Model")
        .def(py::init([](int input_size, int num_classes, int qubits, int depth, int circuits,
                         const std::string& variant, int reduction_ratio, std::uint64_t seed) {
                 ModelConfig cfg;
                 cfg.input_size = input_size;
                 cfg.num_classes = num_classes;
                 cfg.quantum = {qubits, depth, circuits};
                 cfg.variant = variant_from_name(variant);
                 cfg.reduction_ratio = reduction_ratio;
                 auto model = std::make_unique<Model<float>>(cfg);
                 model->init_params(seed);
                 model->set_training(false);
                 return model;
             }),
             py::arg("input_size") = 128, py::arg("num_classes") = 4, py::arg("qubits") = 5,
             py::arg("depth") = 2, py::arg("circuits") = 5, py::arg("variant") = "hybrid",
             py::arg("reduction_ratio") = 8, py::arg("seed") = 42)
        .def("forward",
             [](Model<float>& self, const py::array_t<float, py::array::c_style | py::array::forcecast>& images) {
                 auto out = self.forward(tensor_from_array(images));
                 py::dict d;
                 d["logits"] = array_from_tensor(out.logits);
                 d["attention"] = array_from_tensor(out.attention);
                 d["quantum_out"] = array_from_tensor(out.quantum_out);
                 d["pre_head"] = array_from_tensor(out.pre_head);
                 return d;
             })
        .def("param_count", &Model<float>::param_count)
        .def("save", [](Model<float>& self, const std::string& path) { save_checkpoint(self, path); })
        .def_static("load", [](const std::string& path) {
            auto model = std::make_unique<Model<float>>(load_checkpoint<float>(path));
            model->set_training(false);
            return model;
        });
}
