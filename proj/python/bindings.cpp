#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "semitc/error.hpp"
#include "semitc/features.hpp"
#include "semitc/flow.hpp"
#include "semitc/ingest.hpp"
#include "semitc/nn/gradcheck.hpp"
#include "semitc/pipeline.hpp"
#include "semitc/sampling.hpp"
#include "semitc/synth.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace semitc;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::object& o) {
  if (o.is_none()) return json::object();
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

TrainConfig config_from(const py::object& o) { return train_config_from_json(from_py(o)); }

Flow flow_from(std::string id, const std::vector<std::pair<double, int>>& packets, std::optional<std::string> label) {
  Flow f;
  f.id = std::move(id);
  f.label = std::move(label);
  for (const auto& [t, len] : packets) f.packets.push_back({t, len});
  if (auto problem = validate(f)) throw DataError("flow '" + f.id + "': " + *problem);
  return f;
}

}  // namespace

PYBIND11_MODULE(_semitc, m) {
  m.doc() = "Native core of the semitc traffic classifier";

  auto base = py::register_exception<Error>(m, "SemitcError");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<VersionError>(m, "VersionError", base);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<UnsupportedFormatError>(m, "UnsupportedFormatError", base);
  py::register_exception<TruncatedCaptureError>(m, "TruncatedCaptureError", base);

  py::class_<Flow>(m, "Flow")
      .def(py::init(&flow_from), py::arg("id"), py::arg("packets"), py::arg("label") = std::nullopt)
      .def_readonly("id", &Flow::id)
      .def_readwrite("label", &Flow::label)
      .def_property_readonly("packets",
                             [](const Flow& f) {
                               std::vector<std::pair<double, int>> out;
                               for (const auto& p : f.packets) out.emplace_back(p.rel_time, p.signed_length);
                               return out;
                             })
      .def_property_readonly("tuple", [](const Flow& f) { return to_string(f.tuple); })
      .def("__len__", &Flow::size)
      .def("__repr__", [](const Flow& f) {
        return "<Flow " + f.id + " packets=" + std::to_string(f.size()) + (f.label ? " label=" + *f.label : "") + ">";
      });

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind",
                             [](const Model& mo) { return mo.kind == Model::Kind::Regressor ? "regressor" : "classifier"; })
      .def_readonly("classes", &Model::classes)
      .def_readonly("transferred", &Model::transferred)
      .def_property_readonly("loss_history", [](const Model& mo) { return mo.history.epoch_loss; })
      .def_property_readonly("config", [](const Model& mo) { return to_py(to_json(mo.config)); })
      .def_property_readonly("trunk_checksum", [](const Model& mo) { return mo.network.trunk_checksum(); })
      .def("to_json", [](const Model& mo) { return to_py(model_to_json(mo)); })
      .def("save", [](const Model& mo, const std::string& path) { save_model(path, mo); }, py::arg("path"));

  m.def("read_flows", &read_flows_file, py::arg("path"));
  m.def("write_flows", &write_flows_file, py::arg("path"), py::arg("flows"));
  m.def(
      "ingest_pcap",
      [](const std::string& path, double timeout, std::size_t min_packets) {
        return ingest_capture(read_pcap_file(path), timeout, min_packets).flows;
      },
      py::arg("path"), py::arg("timeout") = 60.0, py::arg("min_packets") = 100);
  m.def(
      "synthesize",
      [](std::size_t classes, std::size_t flows_per_class, std::uint64_t seed, double difficulty) {
        return generate({classes, flows_per_class, seed, difficulty});
      },
      py::arg("classes") = 5, py::arg("flows_per_class") = 120, py::arg("seed") = 0, py::arg("difficulty") = 1.0);

  m.def("stat_feature_names", [] {
    const auto& names = stat_feature_names();
    return std::vector<std::string>(names.begin(), names.end());
  });
  m.def("stat_features", &stat_features, py::arg("flow"));
  m.def(
      "sample_indices",
      [](const std::string& method, const std::string& params, std::size_t start, std::size_t flow_len,
         std::size_t window, std::uint64_t seed) {
        Rng rng(seed);
        return sample_indices(parse_sampling(method, params), start, flow_len, window, rng);
      },
      py::arg("method"), py::arg("params"), py::arg("start"), py::arg("flow_len"), py::arg("window") = 45,
      py::arg("seed") = 0);

  m.def("default_config", [] { return to_py(to_json(TrainConfig{})); });
  m.def(
      "pretrain",
      [](const std::vector<Flow>& flows, const py::object& cfg) {
        const TrainConfig c = config_from(cfg);
        py::gil_scoped_release unlocked;
        return pretrain(flows, c);
      },
      py::arg("flows"), py::arg("config") = py::none());
  m.def(
      "retrain",
      [](const Model& pre, const std::vector<Flow>& flows, const std::vector<std::string>& classes,
         const py::object& cfg) {
        const TrainConfig c = config_from(cfg);
        py::gil_scoped_release unlocked;
        return retrain(pre, flows, classes, c);
      },
      py::arg("model"), py::arg("flows"), py::arg("classes"), py::arg("config") = py::none());
  m.def(
      "train_baseline",
      [](const std::vector<Flow>& flows, const std::vector<std::string>& classes, const py::object& cfg) {
        const TrainConfig c = config_from(cfg);
        py::gil_scoped_release unlocked;
        return train_supervised_baseline(flows, classes, c);
      },
      py::arg("flows"), py::arg("classes"), py::arg("config") = py::none());
  m.def(
      "classify",
      [](const Model& mo, const Flow& flow, const py::object& cfg) {
        const TrainConfig c = cfg.is_none() ? mo.config : config_from(cfg);
        const auto r = classify(mo, flow, c);
        return py::make_tuple(mo.classes.at(r.class_index), r.per_copy);
      },
      py::arg("model"), py::arg("flow"), py::arg("config") = py::none());
  m.def(
      "evaluate",
      [](const Model& mo, const std::vector<Flow>& flows, const py::object& cfg) {
        const TrainConfig c = cfg.is_none() ? mo.config : config_from(cfg);
        return to_py(to_json(evaluate(mo, flows, mo.classes, c)));
      },
      py::arg("model"), py::arg("flows"), py::arg("config") = py::none());
  m.def("load_model", &load_model, py::arg("path"));

  m.def("split_per_class", &split_per_class, py::arg("flows"), py::arg("n_train"), py::arg("seed"));
  m.def("label_set", &label_set, py::arg("flows"));
  m.def(
      "knn_evaluate",
      [](const std::vector<Flow>& train, const std::vector<Flow>& test, std::size_t k) {
        return to_py(to_json(evaluate_knn(train, test, label_set(train), k)));
      },
      py::arg("train"), py::arg("test"), py::arg("k") = 5);
  m.def(
      "knn_leave_one_out",
      [](const std::vector<Flow>& flows, std::size_t k) {
        return knn_leave_one_out(flows, label_set(flows), k).macro_accuracy;
      },
      py::arg("flows"), py::arg("k") = 5);
  m.def(
      "gradcheck",
      [](std::size_t seeds) {
        nn::GradCheckOptions opts;
        opts.seeds = seeds;
        py::list out;
        for (const auto& r : nn::run_gradcheck_suite(opts))
          out.append(py::dict(py::arg("name") = r.name, py::arg("max_relative_error") = r.max_relative_error,
                              py::arg("passed") = r.passed));
        return out;
      },
      py::arg("seeds") = 10);
}
