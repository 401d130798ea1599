// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Run with --only N[,N...] to select criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ragan/adversarial.hpp"
#include "ragan/channels.hpp"
#include "ragan/comms.hpp"
#include "ragan/experiment.hpp"
#include "ragan/nn.hpp"
#include "ragan/tape.hpp"
#include "ragan/training.hpp"

namespace {

using namespace ragan;
using nn::Matrix;
using nn::Var;
using nn::Vector;
using training::Scheme;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// First Eb/N0 at which the curve reaches `target`, interpolating log10(BLER)
// linearly between grid points. +inf when the curve never gets there.
double crossing_db(const exp::BlerCurve& curve, double target) {
  const auto& pts = curve.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].bler <= target) {
      if (i == 0) return pts[0].ebn0_db;
      const double b0 = std::log10(std::max(pts[i - 1].bler, 1e-12));
      const double b1 = std::log10(std::max(pts[i].bler, 1e-12));
      const double t = std::log10(target);
      if (b0 == b1) return pts[i].ebn0_db;
      const double frac = (b0 - t) / (b0 - b1);
      return pts[i - 1].ebn0_db + frac * (pts[i].ebn0_db - pts[i - 1].ebn0_db);
    }
  }
  return std::numeric_limits<double>::infinity();
}

double bler_at(const exp::BlerCurve& curve, double ebn0_db) {
  for (const auto& p : curve.points) {
    if (std::abs(p.ebn0_db - ebn0_db) < 1e-9) return p.bler;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Gradient check against central differences of the same loss.

double max_relative_fd_error(nn::ParamStore& store, const std::function<double()>& loss,
                             std::size_t coords, Rng& rng) {
  loss();
  const Vector analytic = store.flatten_grad();
  Vector theta = store.flatten();
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < coords; ++k) {
    const auto i = static_cast<nn::Index>(rng.index(static_cast<std::uint64_t>(theta.size())));
    const double saved = theta[i];
    theta[i] = saved + kStep;
    store.assign(theta);
    const double up = loss();
    theta[i] = saved - kStep;
    store.assign(theta);
    const double down = loss();
    theta[i] = saved;
    store.assign(theta);
    const double numeric = (up - down) / (2.0 * kStep);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

Outcome ac1_gradients() {
  comms::LinkConfig link;
  link.batch = 24;
  Rng rng(derive_seed(11, "ac1"));
  auto tx = comms::make_transmitter(link.M, link.n);
  auto rx = comms::make_receiver(link.M, link.frame_width());
  auto pair = adversarial::make_adversarial_pair(link.M, link.n, false, true);
  for (auto* s : {&tx, &rx, &pair.generator, &pair.discriminator}) nn::xavier_init(*s, rng);
  Rng mrng(1), crng(2), zrng(3);
  const auto batch = training::draw_minibatch(tx, link, channels::ChannelModel::awgn(), mrng,
                                              crng, &zrng, pair.latent_dim);
  const double lambda = link.lambda;

  std::vector<std::pair<const char*, double>> errors;
  Rng pick(derive_seed(11, "ac1-coords"));
  errors.emplace_back("transmitter", max_relative_fd_error(tx, [&] {
    return training::transmitter_gradient_optimal(tx, rx, batch, lambda).total();
  }, 20, pick));
  errors.emplace_back("receiver", max_relative_fd_error(rx, [&] {
    return training::receiver_gradient(rx, batch, lambda).total();
  }, 20, pick));
  errors.emplace_back("generator", max_relative_fd_error(pair.generator, [&] {
    return training::generator_gradient(pair, batch, lambda).total();
  }, 20, pick));
  errors.emplace_back("discriminator", max_relative_fd_error(pair.discriminator, [&] {
    return training::discriminator_gradient(pair, batch, lambda).total();
  }, 20, pick));

  Outcome out{true, ""};
  for (const auto& [name, err] : errors) {
    out.pass = out.pass && err < 1e-4;
    out.detail += fmt("%s %.2e ", name, err);
  }
  out.detail += "(max rel err, limit 1e-4)";
  return out;
}

Outcome ac2_loss_oracles() {
  const std::size_t M = 16;
  // Oracle: -[ln(1/M) + (M-1) ln(1 - 1/M)] summed directly.
  const double ce_oracle = -(std::log(1.0 / M) + (M - 1) * std::log(1.0 - 1.0 / M));
  nn::Tape tape;
  const Var uniform = tape.constant(Matrix::Constant(4, M, 1.0 / M));
  Matrix targets = Matrix::Zero(4, M);
  for (int r = 0; r < 4; ++r) targets(r, r * 3) = 1.0;
  const double ce = tape.scalar(training::ce_loss(tape, uniform, targets));

  auto pair = adversarial::make_adversarial_pair(M, 7, false, true);
  Rng rng(5);
  const Var real = tape.constant(adversarial::draw_latent(8, 14, rng));
  const Var fake = tape.constant(adversarial::draw_latent(8, 14, rng));
  // Oracle: -2 ln 0.5.
  const double d_oracle = -2.0 * std::log(0.5);
  const double d_loss = tape.scalar(adversarial::discriminator_loss(tape, pair, real, fake));

  auto store = comms::make_receiver(M, 14);
  nn::xavier_init(store, rng);
  const double lambda = 0.01;
  nn::Tape reg;
  const Var total = adversarial::regularized_loss(reg, reg.constant(Matrix::Constant(1, 1, 0.3)),
                                                  store, lambda);
  reg.backward(total);
  bool exact = true;
  for (std::size_t i = 0; i < store.layer_count(); ++i) {
    exact = exact && (store.weight_grad(i).array() == (lambda * store.weight(i)).array()).all();
    exact = exact && (store.bias_grad(i).array() == (lambda * store.bias(i)).array()).all();
  }

  const bool pass = std::abs(ce - 3.7407) <= 1e-4 && std::abs(ce - ce_oracle) <= 1e-12 &&
                    std::abs(d_loss - d_oracle) <= 1e-6 && exact;
  return {pass, fmt("ce %.6f (oracle %.6f), D loss %.7f (oracle %.7f), reg grad == lambda*theta: %s", ce,
                    ce_oracle, d_loss, d_oracle, exact ? "yes" : "no")};
}

Outcome ac3_noise() {
  const double var = comms::ebn0_to_noise_var(3.0, 16, 7);
  const std::size_t draws = 100000;
  Rng rng(derive_seed(3, "ac3"));
  const Vector x = comms::normalize_power(Vector::LinSpaced(14, -1.0, 2.0)).values;
  Vector sum = Vector::Zero(14);
  Vector sq = Vector::Zero(14);
  for (std::size_t d = 0; d < draws; ++d) {
    const Vector w = channels::awgn_apply(x, var, rng) - x;
    sum += w;
    sq += w.cwiseProduct(w);
  }
  const double n = static_cast<double>(draws);
  double worst = 0.0;
  for (int i = 0; i < 14; ++i) {
    const double mean = sum[i] / n;
    const double v = (sq[i] - n * mean * mean) / (n - 1.0);
    worst = std::max(worst, std::abs(v / (var / 2.0) - 1.0));
  }
  const bool pass = std::abs(var - 0.43854) <= 1e-5 && worst < 0.02;
  return {pass, fmt("delta^2 %.6f, worst per-component variance deviation %.2f%%", var,
                    100.0 * worst)};
}

Outcome ac4_residual() {
  comms::LinkConfig link;
  link.batch = 64;
  Rng rng(derive_seed(4, "ac4"));
  auto tx = comms::make_transmitter(link.M, link.n);
  auto rx = comms::make_receiver(link.M, link.frame_width());
  auto pair = adversarial::make_adversarial_pair(link.M, link.n, false, true);
  for (auto* s : {&tx, &rx, &pair.generator, &pair.discriminator}) nn::xavier_init(*s, rng);

  bool identity = true;
  double drift = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto msg = comms::encode_one_hot(rng.index(link.M), link.M);
    const Vector x = comms::transmit(tx, msg).values;
    const auto gin = adversarial::make_input(pair, x, rng);
    const Vector body = adversarial::generator_body(pair, gin);
    const Vector fake = adversarial::residual_generator_forward(pair, gin);
    identity = identity && (fake.array() == (x + body).array()).all();
    drift = std::max(drift, (fake - body - x).cwiseAbs().maxCoeff());
  }

  Rng mrng(1), crng(2), zrng(3);
  const auto batch = training::draw_minibatch(tx, link, channels::ChannelModel::awgn(), mrng,
                                              crng, &zrng, pair.latent_dim);
  using adversarial::SkipRoute;
  training::transmitter_gradient_surrogate(tx, pair, rx, batch, link.lambda, SkipRoute::both);
  const Vector both = tx.flatten_grad();
  training::transmitter_gradient_surrogate(tx, pair, rx, batch, 0.0, SkipRoute::body_only);
  const Vector body = tx.flatten_grad();
  training::transmitter_gradient_surrogate(tx, pair, rx, batch, 0.0, SkipRoute::skip_only);
  const Vector skip = tx.flatten_grad();
  // The penalty gradient lambda*theta belongs to the total, not to either path.
  const Vector penalty = link.lambda * tx.flatten();
  const double rel = (body + skip + penalty - both).norm() / both.norm();

  const bool pass = identity && drift < 1e-14 && rel < 1e-9;
  return {pass, fmt("y~ == x + body bitwise: %s, max |y~ - body - x| %.1e, "
                    "path decomposition rel err %.2e",
                    identity ? "yes" : "no", drift, rel)};
}

// ---------------------------------------------------------------------------
// Shared AWGN runs for criteria 5, 7 and 8.

struct AwgnRuns {
  exp::ExperimentConfig cfg;
  exp::ExperimentResult optimal;
  exp::ExperimentResult ra_gan;
  double optimal_seconds = 0.0;
  double ra_gan_seconds = 0.0;
};

exp::ExperimentConfig awgn_config(Scheme scheme) {
  exp::ExperimentConfig cfg = exp::parse_config_text(
      "M = 16\nn = 7\nchannel = awgn\ntrain_ebn0_db = 3\nepochs = 50\n"
      "eval_ebn0_db = 0:1:8\neval_n = 100000\nseed = 1\nscheme = ra-gan\n");
  cfg.scheme = scheme;
  return cfg;
}

const AwgnRuns& awgn_runs() {
  static const AwgnRuns runs = [] {
    AwgnRuns r;
    r.cfg = awgn_config(Scheme::ra_gan);
    auto t0 = std::chrono::steady_clock::now();
    r.optimal = exp::run_in_memory(awgn_config(Scheme::optimal));
    auto t1 = std::chrono::steady_clock::now();
    r.ra_gan = exp::run_in_memory(awgn_config(Scheme::ra_gan));
    auto t2 = std::chrono::steady_clock::now();
    r.optimal_seconds = std::chrono::duration<double>(t1 - t0).count();
    r.ra_gan_seconds = std::chrono::duration<double>(t2 - t1).count();
    return r;
  }();
  return runs;
}

Outcome ac5_awgn() {
  const auto& runs = awgn_runs();
  const double opt = bler_at(runs.optimal.curve, 6.0);
  const double ra = bler_at(runs.ra_gan.curve, 6.0);
  const double untrained = 15.0 / 16.0;
  const bool ratio_ok = std::max(opt, ra) <= 2.0 * std::min(opt, ra);
  const bool trained = opt <= untrained / 10.0 && ra <= untrained / 10.0;
  const bool fast = runs.optimal_seconds <= 600.0 && runs.ra_gan_seconds <= 600.0;
  std::string curve;
  for (std::size_t i = 0; i < runs.optimal.curve.points.size(); ++i) {
    curve += fmt(" %g:%.2g/%.2g", runs.optimal.curve.points[i].ebn0_db,
                 runs.optimal.curve.points[i].bler, runs.ra_gan.curve.points[i].bler);
  }
  return {ratio_ok && trained && fast,
          fmt("BLER@6dB optimal %.3g, ra-gan %.3g; runtimes %.0fs / %.0fs; opt/ra-gan:",
              opt, ra, runs.optimal_seconds, runs.ra_gan_seconds) + curve};
}

Outcome ac7_loss_gap() {
  const auto& rep = awgn_runs().ra_gan.trained.report;
  const double lambda = awgn_runs().cfg.link.lambda;
  const std::size_t n = rep.epochs.size();
  double gap = 0.0;
  for (std::size_t i = n - 5; i < n; ++i) {
    gap += std::abs(rep.epochs[i].loss_tilde_t - rep.epochs[i].loss_tilde_r);
  }
  gap /= 5.0;
  double identity = 0.0;
  for (const auto& e : rep.epochs) {
    const double lhs = e.loss_hat_r - e.loss_hat_t;
    const double rhs = e.loss_tilde_r - e.loss_tilde_t + (e.penalty_r - e.penalty_t);
    identity = std::max(identity, std::abs(lhs - rhs));
  }
  (void)lambda;
  return {gap < 0.1 && identity <= 1e-12,
          fmt("mean |L~T - L~R| over last 5 epochs %.4f (limit 0.1), identity residual %.1e",
              gap, identity)};
}

Outcome ac8_generator_fidelity() {
  const auto& runs = awgn_runs();
  const auto& trained = runs.ra_gan.trained;
  const auto& pair = *trained.adversarial;
  const auto& link = runs.cfg.link;
  const double target = comms::ebn0_to_noise_var(link.ebn0_db, link.M, link.n) / 2.0;
  Rng rng(derive_seed(8, "ac8"));
  const std::size_t draws = 10000;
  const auto width = static_cast<nn::Index>(2 * link.n);
  Vector sum = Vector::Zero(width);
  Vector sq = Vector::Zero(width);
  for (std::size_t d = 0; d < draws; ++d) {
    const auto msg = comms::encode_one_hot(rng.index(link.M), link.M);
    const Vector x = comms::transmit(trained.transmitter, msg).values;
    const Vector diff = adversarial::residual_generator_forward(pair, x, rng) - x;
    sum += diff;
    sq += diff.cwiseProduct(diff);
  }
  const double n = static_cast<double>(draws);
  double worst_mean = 0.0;
  double worst_var = 0.0;
  for (nn::Index i = 0; i < width; ++i) {
    const double mean = sum[i] / n;
    const double var = (sq[i] - n * mean * mean) / (n - 1.0);
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_var = std::max(worst_var, std::abs(var / target - 1.0));
  }
  return {worst_mean <= 0.05 && worst_var <= 0.15,
          fmt("worst |mean| %.4f (limit 0.05), worst variance deviation %.1f%% of %.4f "
              "(limit 15%%)",
              worst_mean, 100.0 * worst_var, target)};
}

// ---------------------------------------------------------------------------
// Scheme ordering on fading channels (criteria 6 and 9).

struct OrderingStats {
  std::vector<double> ra_cross, gan_cross, ra_at, gan_at;
  double seconds = 0.0;
};

OrderingStats ordering_runs(const std::string& base_text, double at_db) {
  OrderingStats stats;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (Scheme scheme : {Scheme::ra_gan, Scheme::gan}) {
      auto cfg = exp::parse_config_text(base_text);
      cfg.scheme = scheme;
      cfg.seed = seed;
      const auto result = exp::run_in_memory(cfg);
      const double cross = crossing_db(result.curve, 0.1);
      const double at = bler_at(result.curve, at_db);
      std::printf("    seed %llu %-6s BLER@%gdB %.4f, BLER 0.1 reached at %.2f dB\n",
                  static_cast<unsigned long long>(seed), std::string(training::to_string(scheme)).c_str(),
                  at_db, at, cross);
      std::fflush(stdout);
      (scheme == Scheme::ra_gan ? stats.ra_cross : stats.gan_cross).push_back(cross);
      (scheme == Scheme::ra_gan ? stats.ra_at : stats.gan_at).push_back(at);
    }
  }
  stats.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

Outcome ac6_rayleigh() {
  const auto stats = ordering_runs(
      "M = 16\nn = 7\nscheme = ra-gan\nchannel = rayleigh\npilot = true\n"
      "train_ebn0_db = 13\nepochs = 100\nlambda = 0.01\n"
      "eval_ebn0_db = 0:1:30\neval_n = 50000\n",
      13.0);
  const double ra_at = median(stats.ra_at);
  const double gan_at = median(stats.gan_at);
  const double ra_cross = median(stats.ra_cross);
  const double gan_cross = median(stats.gan_cross);
  const bool pass = ra_at < gan_at && gan_cross - ra_cross >= 1.5 && stats.seconds <= 1800.0;
  return {pass, fmt("median BLER@13dB ra-gan %.4f vs gan %.4f; median BLER-0.1 point %.2f vs "
                    "%.2f dB (gain %.2f dB, need 1.5); %.0fs",
                    ra_at, gan_at, ra_cross, gan_cross, gan_cross - ra_cross, stats.seconds)};
}

Outcome ac9_dataset() {
  const auto dir = std::filesystem::temp_directory_path() / "ragan_acceptance";
  std::filesystem::create_directories(dir);
  const auto file = dir / "multipath.csv";
  Rng rng(derive_seed(9, "ac9-dataset"));
  channels::write_channel_file(file, channels::synthesize_multipath(200, 64, 5, rng));

  const auto stats = ordering_runs(
      "M = 16\nn = 7\nscheme = ra-gan\nchannel = dataset\npilot = true\n"
      "dataset_path = " + file.string() + "\n"
      "train_ebn0_db = 13\nepochs = 100\nbatch_size = 640\nlambda = 0.005\n"
      "eval_ebn0_db = 0:1:30\neval_n = 50000\n",
      13.0);
  const double ra_cross = median(stats.ra_cross);
  const double gan_cross = median(stats.gan_cross);
  return {gan_cross - ra_cross >= 1.0,
          fmt("median BLER-0.1 point ra-gan %.2f vs gan %.2f dB (gain %.2f dB, need 1.0); %.0fs",
              ra_cross, gan_cross, gan_cross - ra_cross, stats.seconds)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome ac10_determinism() {
  const auto root = std::filesystem::temp_directory_path() / "ragan_acceptance_det";
  std::filesystem::remove_all(root);
  bool same = true;
  std::string detail;
  for (const char* scheme : {"ra-gan", "rl"}) {
    exp::Overrides ov{{"scheme", scheme}, {"epochs", "3"}, {"eval_n", "5000"}, {"seed", "77"}};
    std::vector<std::string> files;
    for (const char* run : {"a", "b"}) {
      ov["out_dir"] = (root / scheme / run).string();
      const auto cfg = exp::parse_config_text(
          "M = 16\nn = 7\nchannel = rayleigh\ntrain_ebn0_db = 13\neval_ebn0_db = 0:5:20\n", ov);
      exp::run_experiment(cfg, run[0] == 'a' ? 1 : 3);
      files.push_back(slurp(root / scheme / run / "losses.csv") +
                      slurp(root / scheme / run / "bler.csv"));
    }
    const bool eq = files[0] == files[1] && !files[0].empty();
    same = same && eq;
    detail += fmt("%s %s (%zu bytes) ", scheme, eq ? "identical" : "DIFFER", files[0].size());
  }
  return {same, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    }
  }
  const std::vector<std::pair<int, std::pair<const char*, std::function<Outcome()>>>> criteria = {
      {1, {"gradient correctness", ac1_gradients}},
      {2, {"loss oracles", ac2_loss_oracles}},
      {3, {"noise calibration", ac3_noise}},
      {4, {"residual identity and path decomposition", ac4_residual}},
      {5, {"AWGN end-to-end", ac5_awgn}},
      {7, {"loss gap", ac7_loss_gap}},
      {8, {"residual generator fidelity", ac8_generator_fidelity}},
      {10, {"determinism", ac10_determinism}},
      {6, {"Rayleigh scheme ordering", ac6_rayleigh}},
      {9, {"dataset scheme ordering", ac9_dataset}},
  };
  int failed = 0;
  for (const auto& [id, entry] : criteria) {
    if (!only.empty() && !only.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = entry.second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] AC%-2d %s: %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", id, entry.first,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += out.pass ? 0 : 1;
  }
  std::printf("%d criterion(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
