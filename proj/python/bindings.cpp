#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "ragan/channels.hpp"
#include "ragan/comms.hpp"
#include "ragan/errors.hpp"
#include "ragan/experiment.hpp"
#include "ragan/training.hpp"

namespace py = pybind11;
using namespace ragan;

namespace {

// A trained transmitter/receiver pair plus the run's records.
struct Trained {
  exp::ExperimentConfig config;
  std::shared_ptr<exp::ExperimentResult> result;

  nn::Matrix transmit(const std::vector<std::size_t>& messages) const {
    return comms::transmit_batch(result->trained.transmitter,
                                 comms::one_hot_batch(messages, config.link.M));
  }

  nn::Matrix receive(const nn::Matrix& frames) const {
    return comms::receive_batch(result->trained.receiver, frames);
  }

  std::vector<std::size_t> decode(const nn::Matrix& frames) const {
    const nn::Matrix p = receive(frames);
    std::vector<std::size_t> out(static_cast<std::size_t>(p.rows()));
    for (nn::Index r = 0; r < p.rows(); ++r) out[static_cast<std::size_t>(r)] = comms::decide_row(p.row(r));
    return out;
  }

  double bler(double ebn0_db, std::size_t trials, std::uint64_t seed) const {
    const auto channel = exp::make_channel(config);
    Rng rng(derive_seed(seed, "python-eval"));
    return training::evaluate_bler(result->trained.transmitter, result->trained.receiver,
                                   config.link, channel, ebn0_db, trials, channels::Split::valid, rng)
        .bler;
  }

  py::list losses() const {
    py::list rows;
    for (const auto& e : result->trained.report.epochs) {
      py::dict d;
      d["epoch"] = e.epoch;
      d["loss_hat_r"] = e.loss_hat_r;
      d["loss_hat_t"] = e.loss_hat_t;
      d["loss_tilde_r"] = e.loss_tilde_r;
      d["loss_tilde_t"] = e.loss_tilde_t;
      d["loss_hat_g"] = e.loss_hat_g;
      d["loss_hat_d"] = e.loss_hat_d;
      d["penalty_r"] = e.penalty_r;
      d["penalty_t"] = e.penalty_t;
      d["penalty_g"] = e.penalty_g;
      d["penalty_d"] = e.penalty_d;
      d["bler"] = e.bler;
      rows.append(d);
    }
    return rows;
  }

  std::vector<std::tuple<double, double, std::size_t>> curve() const {
    std::vector<std::tuple<double, double, std::size_t>> out;
    for (const auto& p : result->curve.points) out.emplace_back(p.ebn0_db, p.bler, p.trials);
    return out;
  }
};

py::dict config_dict(const exp::ExperimentConfig& cfg) {
  py::dict d;
  d["scheme"] = std::string(training::to_string(cfg.scheme));
  d["channel"] = std::string(channels::to_string(cfg.channel));
  d["dataset_path"] = cfg.dataset_path;
  d["M"] = cfg.link.M;
  d["n"] = cfg.link.n;
  d["train_ebn0_db"] = cfg.link.ebn0_db;
  d["batch_size"] = cfg.link.batch;
  d["lambda"] = cfg.link.lambda;
  d["pilot"] = cfg.link.pilot;
  d["eval_ebn0_db"] = cfg.eval_grid;
  d["eval_n"] = cfg.eval_n;
  d["valid_n"] = cfg.valid_n;
  d["epochs"] = cfg.epochs;
  d["n_train"] = cfg.train_size;
  d["learning_rate"] = cfg.learning_rate;
  d["sigma_p"] = cfg.sigma_p;
  d["seed"] = cfg.seed;
  d["out_dir"] = cfg.out_dir.string();
  return d;
}

Trained run(const std::string& text, const exp::Overrides& overrides, unsigned threads,
            bool write_csv) {
  Trained t{exp::parse_config_text(text, overrides), nullptr};
  py::gil_scoped_release release;
  t.result = std::make_shared<exp::ExperimentResult>(
      write_csv ? exp::run_experiment(t.config, threads) : exp::run_in_memory(t.config, threads));
  return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "End-to-end learned links trained with optimal, GAN, RA-GAN or RL schemes.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<TrainingAbort>(m, "TrainingAbort", PyExc_RuntimeError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_OSError);

  m.def("ebn0_to_noise_var", &comms::ebn0_to_noise_var, py::arg("ebn0_db"), py::arg("M"),
        py::arg("n"), "Noise variance per complex channel use.");
  m.def("one_hot", [](std::size_t index, std::size_t M) { return comms::encode_one_hot(index, M).onehot; },
        py::arg("index"), py::arg("M"));
  m.def("normalize_power", [](const nn::Vector& v) { return comms::normalize_power(v).values; },
        py::arg("v"), "Scale v so that its squared norm equals len(v) / 2.");
  m.def("bler",
        [](const std::vector<std::size_t>& decisions, const std::vector<std::size_t>& truths) {
          return comms::bler(decisions, truths);
        },
        py::arg("decisions"), py::arg("truths"));
  m.def("awgn",
        [](const nn::Vector& x, double noise_var, std::uint64_t seed) {
          Rng rng(seed);
          return channels::awgn_apply(x, noise_var, rng);
        },
        py::arg("x"), py::arg("noise_var"), py::arg("seed") = 0);
  m.def("parse_config",
        [](const std::string& text, const exp::Overrides& overrides) {
          return config_dict(exp::parse_config_text(text, overrides));
        },
        py::arg("text"), py::arg("overrides") = exp::Overrides{},
        "Parse flat 'key = value' text into a validated configuration dict.");

  py::class_<Trained>(m, "TrainedLink")
      .def_property_readonly("config", [](const Trained& t) { return config_dict(t.config); })
      .def_property_readonly("losses", &Trained::losses)
      .def_property_readonly("curve", &Trained::curve)
      .def_property_readonly("iterations_per_epoch",
                             [](const Trained& t) { return t.result->trained.report.iterations_per_epoch; })
      .def_property_readonly("wall_seconds",
                             [](const Trained& t) { return t.result->trained.report.wall_seconds; })
      .def("transmit", &Trained::transmit, py::arg("messages"),
           "Transmitted signals, one row of 2n reals per message.")
      .def("receive", &Trained::receive, py::arg("frames"), "Receiver probabilities per frame.")
      .def("decode", &Trained::decode, py::arg("frames"))
      .def("bler", &Trained::bler, py::arg("ebn0_db"), py::arg("trials") = 100000,
           py::arg("seed") = 0);

  m.def("train",
        [](const std::string& text, const exp::Overrides& overrides, unsigned threads) {
          return run(text, overrides, threads, false);
        },
        py::arg("config"), py::arg("overrides") = exp::Overrides{}, py::arg("threads") = 1,
        "Train and sweep BLER in memory.");
  m.def("run_experiment",
        [](const std::string& text, const exp::Overrides& overrides, unsigned threads) {
          return run(text, overrides, threads, true);
        },
        py::arg("config"), py::arg("overrides") = exp::Overrides{}, py::arg("threads") = 1,
        "Train, sweep BLER and write losses.csv and bler.csv into out_dir.");
}
