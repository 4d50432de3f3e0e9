#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gatedgan/checkpoint.hpp"
#include "gatedgan/evaluation.hpp"
#include "gatedgan/image_io.hpp"
#include "gatedgan/textures.hpp"
#include "gatedgan/training.hpp"

namespace py = pybind11;
using namespace gatedgan;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

TensorF to_tensor(const Array& a) {
  if (a.ndim() != 4) throw ShapeError("expected a 4-d (N, C, H, W) array");
  Shape shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(std::size_t(a.shape(i)));
  return TensorF(shape, std::vector<float>(a.data(), a.data() + a.size()));
}

Array to_array(const TensorF& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

// Accepts a style index or name.
std::size_t style_of(const TrainState& s, const py::handle& style) {
  if (py::isinstance<py::int_>(style)) return resolve_style(s, std::to_string(style.cast<long long>()));
  return resolve_style(s, style.cast<std::string>());
}

struct Model {
  TrainState state;

  static Model load(const std::string& path) { return {load_checkpoint(path)}; }

  Array noise(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    return to_array(sample_noise(state.config, rng));
  }
  Array generate(const Array& x, const py::handle& style) const {
    return to_array(gatedgan::generate(state.generator, to_tensor(x), style_of(state, style)));
  }
  Array stylize(const Array& image, const py::handle& style) const {
    return to_array(stylize_native(state.generator, to_tensor(image), style_of(state, style)));
  }
  Array reconstruct(const Array& x) const { return to_array(reconstruct_image(state.generator, to_tensor(x))); }
  std::vector<Array> interpolate(const Array& x, const py::handle& from, const py::handle& to,
                                 std::size_t steps) const {
    std::vector<Array> frames;
    for (const auto& f :
         render_interpolation(to_tensor(x), state.generator, style_of(state, from), style_of(state, to), steps)) {
      frames.push_back(to_array(f));
    }
    return frames;
  }
  py::bytes to_bytes() const {
    const auto b = checkpoint_bytes(state);
    return {reinterpret_cast<const char*>(b.data()), b.size()};
  }
};

Model train_textures(const std::vector<std::string>& kinds, std::size_t iterations, std::uint64_t seed,
                     std::size_t image_size, double width_scale, double lambda_r) {
  TrainConfig cfg;
  cfg.mode = TrainMode::texture_synthesis;
  cfg.style_count = kinds.size();
  cfg.iterations = iterations;
  cfg.seed = seed;
  cfg.image_size = image_size;
  cfg.width_scale = width_scale;
  cfg.weights.lambda_r = lambda_r;
  TrainingData data;
  for (std::size_t c = 0; c < kinds.size(); ++c) {
    data.styles.push_back(texture_collection(parse_texture_kind(kinds[c]), 8, cfg.effective_scale_size(), 5 + c));
    data.style_names.push_back(kinds[c]);
  }
  py::gil_scoped_release release;
  return {train(cfg, data, {})};
}

}  // namespace

PYBIND11_MODULE(_gatedgan, m) {
  m.doc() = "Gated-GAN multi-collection style transfer";

  auto base = py::register_exception<Error>(m, "GatedGanError", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<IndexError>(m, "IndexError", base);
  py::register_exception<ArgumentError>(m, "ArgumentError", base);
  py::register_exception<NumericError>(m, "NumericError", base);
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<DecodeError>(m, "DecodeError", base);
  py::register_exception<FormatError>(m, "FormatError", base);
  py::register_exception<ChecksumError>(m, "ChecksumError", base);
  py::register_exception<VersionError>(m, "VersionError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<DatasetError>(m, "DatasetError", base);

  m.def("make_texture", [](const std::string& kind, std::size_t size, std::uint64_t seed) {
    return to_array(make_texture(parse_texture_kind(kind), size, seed));
  }, py::arg("kind"), py::arg("size"), py::arg("seed") = 0);
  m.def("load_image", [](const std::string& path) { return to_array(load_image(path)); });
  m.def("save_image", [](const Array& image, const std::string& path) { save_image(to_tensor(image), path); });

  m.def("fid", [](const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                  const Eigen::MatrixXd& s2) {
    return fid(GaussianStats::from_moments(mu1, s1, 2), GaussianStats::from_moments(mu2, s2, 2));
  }, "Frechet distance between two Gaussians given by mean and covariance.");
  m.def("fid_between", [](const std::vector<Array>& a, const std::vector<Array>& b, std::uint64_t seed) {
    std::vector<TensorF> ta, tb;
    for (const auto& x : a) ta.push_back(to_tensor(x));
    for (const auto& x : b) tb.push_back(to_tensor(x));
    return fid_between(ta, tb, seed);
  }, py::arg("a"), py::arg("b"), py::arg("extractor_seed") = 0);
  m.def("matrix_sqrt_psd", &matrix_sqrt_psd);
  m.def("receptive_field", [] { return receptive_field(discriminator_layers()); });
  m.def("probe_receptive_field", [](std::size_t extent) {
    return probe_receptive_field(discriminator_layers(), extent);
  }, py::arg("extent") = 128);

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def_property_readonly("style_names", [](const Model& s) { return s.state.style_names; })
      .def_property_readonly("style_count", [](const Model& s) { return s.state.generator.style_count(); })
      .def_property_readonly("iteration", [](const Model& s) { return s.state.iteration; })
      .def_property_readonly("image_size", [](const Model& s) { return s.state.config.image_size; })
      .def("noise", &Model::noise, py::arg("seed") = 0)
      .def("generate", &Model::generate, py::arg("x"), py::arg("style"))
      .def("stylize", &Model::stylize, py::arg("image"), py::arg("style"))
      .def("reconstruct", &Model::reconstruct, py::arg("x"))
      .def("interpolate", &Model::interpolate, py::arg("x"), py::arg("from_style"), py::arg("to_style"),
           py::arg("steps"))
      .def("save", [](const Model& s, const std::string& path) { save_checkpoint(s.state, path); })
      .def("to_bytes", &Model::to_bytes);

  m.def("train_textures", &train_textures, py::arg("kinds"), py::arg("iterations"), py::arg("seed") = 0,
        py::arg("image_size") = 32, py::arg("width_scale") = 0.25, py::arg("lambda_r") = 10.0,
        "Train a texture-synthesis model on procedural textures.");
}
