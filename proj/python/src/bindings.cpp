#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "emgds/emgds.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

py::object to_python(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(j.get<bool>());
    case json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case json::value_t::number_float: return py::float_(j.get<double>());
    case json::value_t::string: return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(to_python(v));
      return out;
    }
    default: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_python(v);
      return out;
    }
  }
}

std::string code(emgds::Activity a) { return std::string(1, emgds::activity_code(a)); }

std::vector<double> as_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<double> rows_array(const std::vector<emgds::FeatureVector>& rows, std::size_t d) {
  py::array_t<double> out({rows.size(), d});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = rows[i].values[j];
  return out;
}

emgds::Hyperparams hyperparams(const std::string& kernel, double c, std::optional<double> gamma, int degree,
                               double coef0, double pca_var, std::optional<std::size_t> pca_dims, double tol,
                               int max_passes, std::uint64_t seed) {
  emgds::Hyperparams h;
  if (pca_dims) h.retain = emgds::ComponentCount{*pca_dims};
  else h.retain = emgds::VarianceFraction{pca_var};
  if (kernel == "linear") h.svm.kernel = emgds::LinearKernel{};
  else if (kernel == "poly") h.svm.kernel = emgds::PolynomialKernel{degree, coef0};
  else if (kernel == "rbf") h.svm.kernel = emgds::RbfKernel{gamma};
  else throw py::value_error("kernel must be 'rbf', 'linear' or 'poly'");
  h.svm.c = c;
  h.svm.tol = tol;
  h.svm.max_passes = max_passes;
  h.svm.seed = seed;
  return h;
}

emgds::Retain retain_of(double pca_var, std::optional<std::size_t> pca_dims) {
  if (pca_dims) return emgds::ComponentCount{*pca_dims};
  return emgds::VarianceFraction{pca_var};
}

#define HYPER_ARGS                                                                                       \
  py::arg("kernel") = "rbf", py::arg("c") = 1.0, py::arg("gamma") = py::none(), py::arg("degree") = 3,   \
  py::arg("coef0") = 1.0, py::arg("pca_var") = 0.95, py::arg("pca_dims") = py::none(),                 \
  py::arg("tol") = 1e-3, py::arg("max_passes") = 200, py::arg("seed") = 42

}  // namespace

PYBIND11_MODULE(_emgds, m) {
  m.doc() = "Dual-stage sEMG grasp classification";
  // Messages start with the error code name, e.g. "SchemaError: ...".
  py::register_exception<emgds::Error>(m, "EmgdsError", PyExc_RuntimeError);

  // --- corpus --------------------------------------------------------------
  py::class_<emgds::Recording>(m, "Recording")
      .def_readonly("subject", &emgds::Recording::subject)
      .def_property_readonly("activity", [](const emgds::Recording& r) { return code(r.activity); })
      .def_readonly("repetition", &emgds::Recording::repetition)
      .def_readonly("rate_hz", &emgds::Recording::rate_hz)
      .def_property_readonly("channels", [](const emgds::Recording& r) {
        py::array_t<double> out({std::size_t{2}, r.size()});
        auto a = out.mutable_unchecked<2>();
        for (std::size_t c = 0; c < 2; ++c)
          for (std::size_t i = 0; i < r.size(); ++i) a(c, i) = r.channels[c][i];
        return out;
      });

  py::class_<emgds::Corpus>(m, "Corpus")
      .def_readonly("recordings", &emgds::Corpus::recordings)
      .def("__len__", [](const emgds::Corpus& c) { return c.recordings.size(); })
      .def("__eq__", [](const emgds::Corpus& a, const emgds::Corpus& b) { return a == b; });

  m.def(
      "synth_corpus",
      [](int subjects, int reps, double rate_hz, double duration_s, std::uint64_t seed, double power_scale) {
        emgds::SynthConfig cfg{subjects, reps, rate_hz, duration_s, seed, power_scale};
        return emgds::synth_corpus(cfg);
      },
      py::arg("subjects") = 5, py::arg("reps") = 30, py::arg("rate_hz") = 500.0, py::arg("duration_s") = 6.0,
      py::arg("seed") = 42, py::arg("power_scale") = 3.0);
  m.def("ingest_csv", &emgds::ingest_csv, py::arg("path"), py::arg("rate_hz") = 500.0);
  m.def("write_csv", &emgds::write_csv, py::arg("corpus"), py::arg("path"));

  // --- features --------------------------------------------------------------
  m.def("mav", [](py::array_t<double> x) { return emgds::mav(as_vector(x)); });
  m.def("std_dev", [](py::array_t<double> x) { return emgds::std_dev(as_vector(x)); });
  m.def("rms", [](py::array_t<double> x) { return emgds::rms(as_vector(x)); });
  m.def("ssc", [](py::array_t<double> x) { return emgds::ssc(as_vector(x)); });
  m.def("waveform_length", [](py::array_t<double> x) { return emgds::waveform_length(as_vector(x)); });
  m.def("skewness", [](py::array_t<double> x) { return emgds::skewness(as_vector(x)); });
  m.def("kurtosis", [](py::array_t<double> x) { return emgds::kurtosis(as_vector(x)); });
  m.def(
      "ar_coeffs",
      [](py::array_t<double> x, int order) {
        const auto fit = emgds::ar_coeffs(as_vector(x), order);
        return py::make_tuple(fit.coeffs, fit.residual_variance);
      },
      py::arg("x"), py::arg("order") = 4);

  py::class_<emgds::FeatureTable>(m, "FeatureTable")
      .def("__len__", [](const emgds::FeatureTable& t) { return t.rows.size(); })
      .def_property_readonly("layout", [](const emgds::FeatureTable& t) { return t.config.layout(); })
      .def_property_readonly("values",
                             [](const emgds::FeatureTable& t) { return rows_array(t.rows, t.config.dimension()); })
      .def_property_readonly("labels",
                             [](const emgds::FeatureTable& t) {
                               std::vector<std::string> out;
                               for (const auto& r : t.rows) out.push_back(r.label ? code(*r.label) : "");
                               return out;
                             })
      .def_property_readonly("subjects",
                             [](const emgds::FeatureTable& t) {
                               std::vector<std::string> out;
                               for (const auto& r : t.rows) out.push_back(r.key.subject);
                               return out;
                             })
      .def("subset",
           [](const emgds::FeatureTable& t, const std::vector<std::size_t>& idx) {
             emgds::FeatureTable out{t.config, {}};
             for (auto i : idx) {
               if (i >= t.rows.size()) throw py::index_error("row index out of range");
               out.rows.push_back(t.rows[i]);
             }
             return out;
           })
      .def("holdout_split",
           [](const emgds::FeatureTable& t, double train_fraction, std::uint64_t seed) {
             std::vector<emgds::RecordingKey> keys;
             for (const auto& r : t.rows) keys.push_back(r.key);
             const auto s = emgds::holdout_split(keys, emgds::Holdout{train_fraction, seed});
             return py::make_tuple(s.train, s.test);
           },
           py::arg("train_fraction") = 0.7, py::arg("seed") = 42)
      .def("to_csv", [](const emgds::FeatureTable& t) { return emgds::format_features_csv(t); });

  m.def(
      "extract",
      [](const emgds::Corpus& corpus, int ar_order, const std::string& window) {
        emgds::FeatureConfig cfg;
        cfg.ar_order = ar_order;
        cfg.validate();
        return emgds::FeatureTable{cfg, emgds::extract(corpus, cfg, emgds::parse_window(window))};
      },
      py::arg("corpus"), py::arg("ar_order") = 4, py::arg("window") = "full");
  m.def("read_features_csv", &emgds::read_features_csv, py::arg("path"));
  m.def("write_features_csv", &emgds::write_features_csv, py::arg("table"), py::arg("path"));

  // --- reduction ---------------------------------------------------------------
  py::class_<emgds::PcaModel>(m, "PcaModel")
      .def_property_readonly("input_dim", &emgds::PcaModel::input_dim)
      .def_property_readonly("output_dim", &emgds::PcaModel::output_dim)
      .def_readonly("eigenvalues", &emgds::PcaModel::eigenvalues)
      .def_readonly("spectrum", &emgds::PcaModel::spectrum)
      .def("explained_fraction", &emgds::PcaModel::explained_fraction)
      .def("project", [](const emgds::PcaModel& p, py::array_t<double> v) { return emgds::project(p, as_vector(v)); })
      .def("reconstruct",
           [](const emgds::PcaModel& p, py::array_t<double> z) { return emgds::reconstruct(p, as_vector(z)); });
  m.def(
      "fit_pca",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x, double pca_var,
         std::optional<std::size_t> pca_dims, bool standardize) {
        if (x.ndim() != 2) throw py::value_error("expected a 2-D array");
        std::vector<std::vector<double>> rows(static_cast<std::size_t>(x.shape(0)));
        auto a = x.unchecked<2>();
        for (py::ssize_t i = 0; i < x.shape(0); ++i)
          for (py::ssize_t j = 0; j < x.shape(1); ++j) rows[static_cast<std::size_t>(i)].push_back(a(i, j));
        return emgds::fit_pca(rows, retain_of(pca_var, pca_dims), emgds::PcaOptions{standardize});
      },
      py::arg("x"), py::arg("pca_var") = 0.95, py::arg("pca_dims") = py::none(), py::arg("standardize") = true);

  // --- classification ------------------------------------------------------------
  py::class_<emgds::ModelDocument>(m, "Model")
      .def_property_readonly("mode",
                             [](const emgds::ModelDocument& d) {
                               return std::holds_alternative<emgds::DualStageModel>(d.model) ? "dual" : "single";
                             })
      .def("predict",
           [](const emgds::ModelDocument& d, const emgds::FeatureTable& t) {
             std::vector<std::string> out;
             for (const auto& r : t.rows) out.push_back(code(emgds::predict(d.model, r)));
             return out;
           })
      .def("evaluate",
           [](const emgds::ModelDocument& d, const emgds::FeatureTable& t) {
             return to_python(emgds::to_json(emgds::evaluate(d.model, t.rows)));
           })
      .def("save", [](const emgds::ModelDocument& d, const std::filesystem::path& p) { emgds::save_model(d, p); })
      .def("to_json", [](const emgds::ModelDocument& d) { return to_python(emgds::model_to_json(d)); });

  m.def(
      "train",
      [](const emgds::FeatureTable& t, const std::string& mode, const std::string& kernel, double c,
         std::optional<double> gamma, int degree, double coef0, double pca_var, std::optional<std::size_t> pca_dims,
         double tol, int max_passes, std::uint64_t seed) {
        const auto h = hyperparams(kernel, c, gamma, degree, coef0, pca_var, pca_dims, tol, max_passes, seed);
        emgds::ModelDocument doc;
        py::gil_scoped_release release;
        if (mode == "single") doc.model = emgds::train_single(t.rows, h);
        else if (mode == "dual") doc.model = emgds::train_dual(t.rows, h);
        else throw emgds::Error(emgds::ErrorCode::InvalidConfig, "mode must be 'single' or 'dual'");
        return doc;
      },
      py::arg("table"), py::arg("mode") = "dual", HYPER_ARGS);
  m.def("load_model", &emgds::load_model, py::arg("path"));

  // --- grouping ------------------------------------------------------------------
  m.def(
      "dendrogram",
      [](const emgds::FeatureTable& t, double pca_var, std::optional<std::size_t> pca_dims,
         const std::string& method) {
        const auto pca = emgds::fit_pca(t.rows, retain_of(pca_var, pca_dims));
        std::vector<std::vector<double>> z;
        std::vector<emgds::Activity> labels;
        for (const auto& r : t.rows) {
          z.push_back(emgds::project(pca, r.values));
          labels.push_back(*r.label);
        }
        const auto tree = emgds::linkage(emgds::class_separation(z, labels), emgds::parse_linkage(method));
        const auto& root = tree.nodes[static_cast<std::size_t>(tree.root())];
        auto side = [&](int node) {
          std::string s;
          for (auto a : tree.leaves(node)) s += emgds::activity_code(a);
          return s;
        };
        py::dict out;
        out["tree"] = to_python(json::parse(emgds::export_dendrogram(tree, emgds::DendrogramFormat::Json)));
        out["newick"] = emgds::export_dendrogram(tree, emgds::DendrogramFormat::Newick);
        out["dot"] = emgds::export_dendrogram(tree, emgds::DendrogramFormat::Dot);
        out["root_split"] = py::make_tuple(side(root.left), side(root.right));
        out["root_height"] = root.height;
        return out;
      },
      py::arg("table"), py::arg("pca_var") = 0.95, py::arg("pca_dims") = py::none(), py::arg("linkage") = "single");
}
