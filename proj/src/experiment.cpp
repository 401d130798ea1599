#include "ragan/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "ragan/errors.hpp"

namespace ragan::exp {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void type_error(const std::string& key, std::string_view want,
                             std::string_view got) {
  throw ConfigError(key + ": expected " + std::string(want) + ", got '" + std::string(got) + "'");
}

std::uint64_t parse_unsigned(const std::string& key, std::string_view text) {
  text = trim(text);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    type_error(key, "a non-negative integer", text);
  }
  return out;
}

double parse_real(const std::string& key, std::string_view text) {
  text = trim(text);
  std::string_view digits = text;
  if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size() ||
      !std::isfinite(out)) {
    type_error(key, "a real number", text);
  }
  return out;
}

bool parse_bool(const std::string& key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  type_error(key, "a boolean", text);
}

std::vector<double> parse_grid(const std::string& key, std::string_view text) {
  text = trim(text);
  std::vector<double> grid;
  if (text.find(':') != std::string_view::npos) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
      const auto colon = text.find(':', start);
      parts.push_back(text.substr(start, colon - start));
      if (colon == std::string_view::npos) break;
      start = colon + 1;
    }
    if (parts.size() != 3) type_error(key, "start:step:stop", text);
    const double lo = parse_real(key, parts[0]);
    const double step = parse_real(key, parts[1]);
    const double hi = parse_real(key, parts[2]);
    if (!(step > 0.0) || hi < lo) type_error(key, "start:step:stop with step > 0", text);
    for (std::size_t i = 0;; ++i) {
      const double v = lo + static_cast<double>(i) * step;
      if (v > hi + 1e-9 * step) break;
      grid.push_back(v);
    }
    return grid;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    grid.push_back(parse_real(key, text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return grid;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "scheme",     "channel", "dataset_path", "train_ebn0_db", "eval_ebn0_db",
      "M",          "n",       "batch_size",   "n_train",       "lambda",
      "pilot",      "epochs",  "learning_rate", "sigma_p",      "eval_n",
      "valid_n",    "seed",    "out_dir"};
  return keys;
}

}  // namespace

void ExperimentConfig::validate() const {
  link.validate();
  if (eval_n < 1) throw ConfigError("eval_n: must be at least 1");
  if (valid_n < 1) throw ConfigError("valid_n: must be at least 1");
  if (eval_grid.empty()) throw ConfigError("eval_ebn0_db: grid is empty");
  if (channel == channels::ChannelKind::dataset && dataset_path.empty()) {
    throw ConfigError("dataset_path: required for channel = dataset");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate: must be positive");
  if (scheme == training::Scheme::rl && !(sigma_p > 0.0 && sigma_p < 1.0)) {
    throw ConfigError("sigma_p: must lie in (0, 1)");
  }
  if (train_size < link.batch) throw ConfigError("n_train: smaller than batch_size");
}

ExperimentConfig parse_config_text(const std::string& text, const Overrides& overrides) {
  std::map<std::string, std::string> values;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto eq = row.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(row.substr(0, eq)));
    if (!known_keys().contains(key)) throw ConfigError(key + ": unknown key");
    values[key] = std::string(trim(row.substr(eq + 1)));
  }
  for (const auto& [key, value] : overrides) {
    if (!known_keys().contains(key)) throw ConfigError(key + ": unknown key");
    values[key] = value;
  }
  for (const char* required : {"scheme", "channel", "train_ebn0_db"}) {
    if (!values.contains(required)) throw ConfigError(std::string(required) + ": missing required key");
  }

  ExperimentConfig cfg;
  auto has = [&](const char* key) { return values.contains(key); };
  auto get = [&](const char* key) -> const std::string& { return values.at(key); };

  try {
    cfg.scheme = training::parse_scheme(get("scheme"));
  } catch (const ConfigError&) {
    type_error("scheme", "one of optimal, gan, ra-gan, rl", get("scheme"));
  }
  try {
    cfg.channel = channels::parse_channel_kind(get("channel"));
  } catch (const ConfigError&) {
    type_error("channel", "one of awgn, rayleigh, dataset", get("channel"));
  }
  const bool awgn = cfg.channel == channels::ChannelKind::awgn;
  cfg.link.ebn0_db = parse_real("train_ebn0_db", get("train_ebn0_db"));
  cfg.link.pilot = !awgn;
  cfg.epochs = awgn ? 50 : 100;
  cfg.eval_grid = awgn ? parse_grid("eval_ebn0_db", "0:1:8") : parse_grid("eval_ebn0_db", "0:2:30");

  if (has("dataset_path")) cfg.dataset_path = get("dataset_path");
  if (has("eval_ebn0_db")) cfg.eval_grid = parse_grid("eval_ebn0_db", get("eval_ebn0_db"));
  if (has("M")) cfg.link.M = parse_unsigned("M", get("M"));
  if (has("n")) cfg.link.n = parse_unsigned("n", get("n"));
  if (has("batch_size")) cfg.link.batch = parse_unsigned("batch_size", get("batch_size"));
  if (has("n_train")) cfg.train_size = parse_unsigned("n_train", get("n_train"));
  if (has("lambda")) cfg.link.lambda = parse_real("lambda", get("lambda"));
  if (has("pilot")) cfg.link.pilot = parse_bool("pilot", get("pilot"));
  if (has("epochs")) cfg.epochs = parse_unsigned("epochs", get("epochs"));
  if (has("learning_rate")) cfg.learning_rate = parse_real("learning_rate", get("learning_rate"));
  if (has("sigma_p")) cfg.sigma_p = parse_real("sigma_p", get("sigma_p"));
  if (has("eval_n")) cfg.eval_n = parse_unsigned("eval_n", get("eval_n"));
  if (has("valid_n")) cfg.valid_n = parse_unsigned("valid_n", get("valid_n"));
  if (has("seed")) cfg.seed = parse_unsigned("seed", get("seed"));
  if (has("out_dir")) cfg.out_dir = get("out_dir");

  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  return parse_config_text(text, overrides);
}

channels::ChannelModel make_channel(const ExperimentConfig& cfg) {
  switch (cfg.channel) {
    case channels::ChannelKind::awgn:
      return channels::ChannelModel::awgn();
    case channels::ChannelKind::rayleigh:
      return channels::ChannelModel::rayleigh();
    case channels::ChannelKind::dataset:
      return channels::ChannelModel::dataset(std::make_shared<const channels::ChannelDataset>(
          channels::dataset_load(cfg.dataset_path)));
  }
  throw ConfigError("channel: unsupported kind");
}

BlerCurve evaluate_curve(const ExperimentConfig& cfg, const nn::ParamStore& transmitter,
                         const nn::ParamStore& receiver, const channels::ChannelModel& channel,
                         unsigned threads) {
  BlerCurve curve;
  curve.scheme = cfg.scheme;
  curve.seed = cfg.seed;
  curve.points.resize(cfg.eval_grid.size());

  auto work = [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, "eval-grid", i));
    const auto point = training::evaluate_bler(transmitter, receiver, cfg.link, channel,
                                               cfg.eval_grid[i], cfg.eval_n,
                                               channels::Split::valid, rng);
    curve.points[i] = CurvePoint{cfg.eval_grid[i], point.bler, point.trials};
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.eval_grid.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < cfg.eval_grid.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < cfg.eval_grid.size(); i += threads) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  std::stable_sort(curve.points.begin(), curve.points.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.ebn0_db < b.ebn0_db; });
  return curve;
}

ExperimentResult run_in_memory(const ExperimentConfig& cfg, unsigned threads) {
  cfg.validate();
  const auto channel = make_channel(cfg);
  training::TrainOptions options;
  options.scheme = cfg.scheme;
  options.epochs = cfg.epochs;
  options.train_size = cfg.train_size;
  options.validation_size = cfg.valid_n;
  options.adam.lr = cfg.learning_rate;
  options.sigma_p = cfg.sigma_p;
  RngStreams streams = seed_everything(cfg.seed);
  ExperimentResult result{training::train(options, cfg.link, channel, streams), {}};
  result.curve =
      evaluate_curve(cfg, result.trained.transmitter, result.trained.receiver, channel, threads);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir.string());
  try {
    ExperimentResult result = run_in_memory(cfg, threads);
    emit_csv(result.trained.report, result.curve, cfg.out_dir);
    return result;
  } catch (const TrainingAbort& abort) {
    std::filesystem::remove(cfg.out_dir / "losses.csv", ec);
    std::filesystem::remove(cfg.out_dir / "bler.csv", ec);
    std::ofstream diag(cfg.out_dir / "abort.txt");
    diag << "training aborted\n"
         << "scheme: " << training::to_string(cfg.scheme) << "\n"
         << "seed: " << cfg.seed << "\n"
         << "epoch: " << abort.epoch() << "\n"
         << "iteration: " << abort.iteration() << "\n"
         << "reason: " << abort.what() << "\n";
    throw;
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

void write_atomically(const std::filesystem::path& target, const std::string& content) {
  const auto tmp = std::filesystem::path(target.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + target.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void emit_csv(const training::TrainReport& report, const BlerCurve& curve,
              const std::filesystem::path& dir) {
  std::string losses = std::string(kLossesHeader) + "\n";
  for (const auto& r : report.epochs) {
    losses += std::to_string(r.epoch);
    for (double v : {r.loss_hat_r, r.loss_hat_t, r.loss_tilde_r, r.loss_tilde_t, r.loss_hat_g,
                     r.loss_hat_d, r.penalty_r, r.penalty_t, r.penalty_g, r.penalty_d, r.bler}) {
      losses += ',';
      losses += format_double(v);
    }
    losses += '\n';
  }

  auto points = curve.points;
  std::stable_sort(points.begin(), points.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.ebn0_db < b.ebn0_db; });
  std::string bler = std::string(kBlerHeader) + "\n";
  for (const auto& p : points) {
    bler += format_double(p.ebn0_db) + ',' + format_double(p.bler) + ',' +
            std::to_string(p.trials) + ',' + std::string(training::to_string(curve.scheme)) +
            ',' + std::to_string(curve.seed) + '\n';
  }

  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  write_atomically(dir / "losses.csv", losses);
  write_atomically(dir / "bler.csv", bler);
}

std::vector<training::EpochRecord> read_losses_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::string line;
  std::getline(in, line);
  if (line != kLossesHeader) throw IoError(file.string() + ": unexpected header");
  std::vector<training::EpochRecord> out;
  while (std::getline(in, line)) {
    const auto cells = split_csv(line);
    if (cells.size() != 12) throw IoError(file.string() + ": bad row");
    training::EpochRecord r;
    r.epoch = parse_unsigned("epoch", cells[0]);
    double* fields[] = {&r.loss_hat_r, &r.loss_hat_t, &r.loss_tilde_r, &r.loss_tilde_t,
                        &r.loss_hat_g, &r.loss_hat_d, &r.penalty_r,    &r.penalty_t,
                        &r.penalty_g,  &r.penalty_d,  &r.bler};
    for (std::size_t i = 0; i < 11; ++i) *fields[i] = parse_real("losses", cells[i + 1]);
    out.push_back(r);
  }
  return out;
}

BlerCurve read_bler_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::string line;
  std::getline(in, line);
  if (line != kBlerHeader) throw IoError(file.string() + ": unexpected header");
  BlerCurve curve;
  while (std::getline(in, line)) {
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw IoError(file.string() + ": bad row");
    curve.points.push_back({parse_real("ebn0_db", cells[0]), parse_real("bler", cells[1]),
                            parse_unsigned("trials", cells[2])});
    curve.scheme = training::parse_scheme(cells[3]);
    curve.seed = parse_unsigned("seed", cells[4]);
  }
  return curve;
}

}  // namespace ragan::exp
