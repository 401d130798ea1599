#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "ragan/errors.hpp"
#include "ragan/experiment.hpp"

using namespace ragan;
using namespace ragan::exp;

namespace {

std::string config_error(const std::string& text, const Overrides& ov = {}) {
  try {
    parse_config_text(text, ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "ragan_unit_exp" / name;
  std::filesystem::remove_all(dir);
  return dir;
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

const char* kAwgn = "M = 16\nn = 7\nscheme = ra-gan\nchannel = awgn\ntrain_ebn0_db = 3.0\n";

}  // namespace

TEST_CASE("parse a valid config") {
  const auto cfg = parse_config_text(kAwgn);
  CHECK(cfg.scheme == training::Scheme::ra_gan);
  CHECK(cfg.link.M == 16);
  CHECK(cfg.link.n == 7);
  CHECK(cfg.link.ebn0_db == 3.0);
  CHECK(cfg.link.batch == 320);
  CHECK(cfg.link.lambda == 0.01);
  CHECK_FALSE(cfg.link.pilot);
  CHECK(cfg.eval_n == 100000);
  CHECK(cfg.eval_grid.size() == 9);

  const auto fading = parse_config_text(
      "# comment\nscheme = gan\nchannel = rayleigh\ntrain_ebn0_db = 13\neval_ebn0_db = 0, 5, 10\n");
  CHECK(fading.link.pilot);
  CHECK(fading.link.frame_width() == 28);
  CHECK(fading.eval_grid == std::vector<double>{0.0, 5.0, 10.0});
  CHECK(fading.epochs == 100);
}

TEST_CASE("config errors name the key") {
  CHECK(config_error(std::string(kAwgn) + "M = banana\n").starts_with("M: "));
  CHECK(config_error(std::string(kAwgn) + "colour = red\n").starts_with("colour: "));
  CHECK(config_error("M = 16\nchannel = awgn\ntrain_ebn0_db = 3\n").starts_with("scheme: "));
  CHECK(config_error(std::string(kAwgn) + "pilot = maybe\n").starts_with("pilot: "));
  CHECK(config_error("scheme = ra-gan\nchannel = dataset\ntrain_ebn0_db = 13\n")
            .starts_with("dataset_path: "));
  CHECK(config_error(std::string(kAwgn) + "eval_n = 0\n").starts_with("eval_n: "));
  CHECK(config_error(std::string(kAwgn) + "scheme = wgan\n").starts_with("scheme: "));
}

TEST_CASE("flags alone make a config") {
  const Overrides flags{{"scheme", "optimal"}, {"channel", "awgn"}, {"train_ebn0_db", "3"},
                        {"seed", "4"}, {"eval_n", "10"}};
  const auto cfg = parse_config_text("", flags);
  CHECK(cfg.scheme == training::Scheme::optimal);
  CHECK(cfg.seed == 4);
  CHECK(cfg.eval_n == 10);
  const auto over = parse_config_text(kAwgn, {{"M", "8"}, {"eval_ebn0_db", "0:0.5:2"}});
  CHECK(over.link.M == 8);
  CHECK(over.eval_grid == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
}

TEST_CASE("csv emission and round trip") {
  auto cfg = parse_config_text(kAwgn, {{"epochs", "3"}, {"eval_n", "1"}, {"n_train", "640"},
                                       {"valid_n", "100"}, {"eval_ebn0_db", "8, 0, 4"}});
  cfg.out_dir = fresh_dir("roundtrip");
  const auto result = run_experiment(cfg, 2);
  CHECK(count_lines(cfg.out_dir / "losses.csv") == 4);

  const auto losses = read_losses_csv(cfg.out_dir / "losses.csv");
  REQUIRE(losses.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    const auto& a = losses[e];
    const auto& b = result.trained.report.epochs[e];
    CHECK(a.epoch == b.epoch);
    CHECK(a.loss_hat_r == b.loss_hat_r);
    CHECK(a.loss_tilde_t == b.loss_tilde_t);
    CHECK(a.loss_hat_g == b.loss_hat_g);
    CHECK(a.penalty_d == b.penalty_d);
    CHECK(a.bler == b.bler);
  }

  const auto curve = read_bler_csv(cfg.out_dir / "bler.csv");
  REQUIRE(curve.points.size() == 3);
  CHECK(curve.points[0].ebn0_db == 0.0);
  CHECK(curve.points[1].ebn0_db == 4.0);
  CHECK(curve.points[2].ebn0_db == 8.0);
  for (const auto& p : curve.points) {
    CHECK(p.trials == 1);
    CHECK(p.bler >= 0.0);
    CHECK(p.bler <= 1.0);
  }
  CHECK(curve.scheme == training::Scheme::ra_gan);
}

TEST_CASE("format_double is lossless") {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("emit_csv into an unwritable place fails with IoError") {
  const auto file = fresh_dir("blocker");
  std::filesystem::create_directories(file.parent_path());
  std::ofstream(file) << "x";
  CHECK_THROWS_AS(emit_csv({}, {}, file), IoError);
}

TEST_CASE("50 epochs give 51 lines of losses") {
  auto cfg = parse_config_text(kAwgn, {{"scheme", "optimal"}, {"eval_n", "10"},
                                       {"valid_n", "50"}, {"eval_ebn0_db", "3"}});
  cfg.out_dir = fresh_dir("fifty");
  run_experiment(cfg);
  CHECK(count_lines(cfg.out_dir / "losses.csv") == 51);
}

TEST_CASE("AWGN curves: optimal is monotone and rl stays close") {
  auto cfg = parse_config_text(kAwgn, {{"scheme", "optimal"}, {"eval_n", "100000"}, {"seed", "3"}});
  const auto optimal = run_in_memory(cfg, 2).curve;
  for (std::size_t i = 1; i < optimal.points.size(); ++i) {
    const double p = optimal.points[i - 1].bler;
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / 100000.0);
    CHECK(optimal.points[i].bler - p < 3.0 * se);
  }

  // Eb/N0 at which the curve first drops to 1e-2, log-interpolated.
  auto reach = [](const BlerCurve& c) {
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      if (c.points[i].bler <= 1e-2) {
        const double a = std::log10(c.points[i - 1].bler);
        const double b = std::log10(std::max(c.points[i].bler, 1e-12));
        return c.points[i - 1].ebn0_db + (a + 2.0) / (a - b);
      }
    }
    return 1e9;
  };
  cfg.scheme = training::Scheme::rl;
  const auto rl = run_in_memory(cfg, 2).curve;
  CHECK(reach(rl) - reach(optimal) <= 2.0);
}
