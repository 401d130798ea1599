#include "ragan/channels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "ragan/errors.hpp"

namespace ragan::channels {

namespace {

void add_noise(Eigen::Ref<Vector> v, double noise_var, Rng& rng) {
  if (noise_var == 0.0) return;
  const double sd = std::sqrt(noise_var / 2.0);
  for (nn::Index i = 0; i < v.size(); ++i) v[i] += sd * rng.normal();
}

Vector apply_gain(const Vector& x, Complex h) {
  if (x.size() % 2 != 0) throw ShapeError("signal length must be even");
  Vector y(x.size());
  for (nn::Index i = 0; i < x.size(); i += 2) {
    const Complex s = h * Complex(x[i], x[i + 1]);
    y[i] = s.real();
    y[i + 1] = s.imag();
  }
  return y;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

std::size_t train_rows(std::size_t total) {
  return std::max<std::size_t>(1, total * 8 / 10);
}

}  // namespace

Vector awgn_apply(const Vector& x, double noise_var, Rng& rng) {
  if (!(noise_var >= 0.0)) throw DomainError("noise variance must be non-negative");
  Vector y = x;
  add_noise(y, noise_var, rng);
  return y;
}

Complex rayleigh_sample(Rng& rng) {
  const double sd = std::sqrt(0.5);
  const double re = sd * rng.normal();
  const double im = sd * rng.normal();
  return {re, im};
}

Vector fading_apply(const Vector& x, const ChannelRealization& real, Rng& rng) {
  if (!(real.noise_var >= 0.0)) throw DomainError("noise variance must be non-negative");
  Vector y = apply_gain(x, real.gain);
  add_noise(y, real.noise_var, rng);
  return y;
}

Vector pilot_sequence(std::size_t n) {
  Vector xp = Vector::Zero(static_cast<nn::Index>(2 * n));
  for (std::size_t i = 0; i < n; ++i) xp[static_cast<nn::Index>(2 * i)] = 1.0;
  return xp;
}

Vector PilotFrame::frame() const {
  Vector out(received_pilot.size() + received_data.size());
  out << received_pilot, received_data;
  return out;
}

PilotFrame make_pilot_frame(const Vector& x, const ChannelRealization& real, Rng& rng) {
  PilotFrame frame;
  frame.pilot = pilot_sequence(static_cast<std::size_t>(x.size() / 2));
  frame.received_pilot = fading_apply(frame.pilot, real, rng);
  frame.received_data = fading_apply(x, real, rng);
  return frame;
}

ChannelDataset dataset_from_samples(std::vector<Complex> samples, std::string source) {
  if (samples.empty()) throw LoadError(LoadError::Kind::empty_file, "no channel samples");
  double power = 0.0;
  for (const auto& h : samples) power += std::norm(h);
  power /= static_cast<double>(samples.size());
  if (!(power > 0.0)) {
    throw LoadError(LoadError::Kind::malformed_row, "channel samples have zero mean power");
  }
  const double factor = std::sqrt(power);
  for (auto& h : samples) h /= factor;

  ChannelDataset ds;
  ds.train_count = train_rows(samples.size());
  ds.samples = std::move(samples);
  ds.source_path = std::move(source);
  ds.normalization_factor = factor;
  return ds;
}

ChannelDataset dataset_load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError(LoadError::Kind::missing_file, "cannot open channel file " + path.string());
  }
  std::vector<Complex> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto comma = row.find(',');
    double re = 0.0;
    double im = 0.0;
    if (comma == std::string_view::npos || !parse_double(row.substr(0, comma), re) ||
        !parse_double(row.substr(comma + 1), im)) {
      throw LoadError(LoadError::Kind::malformed_row,
                      path.string() + ":" + std::to_string(line_no) + ": expected 're,im'");
    }
    samples.emplace_back(re, im);
  }
  if (samples.empty()) {
    throw LoadError(LoadError::Kind::empty_file, path.string() + ": no channel samples");
  }
  return dataset_from_samples(std::move(samples), path.string());
}

std::vector<ChannelRealization> dataset_sample_batch(const ChannelDataset& ds, std::size_t batch,
                                                     Split split, double noise_var, Rng& rng) {
  const auto pool = ds.split(split);
  if (pool.empty()) throw ContractError("dataset split is empty");
  std::vector<ChannelRealization> out(batch);
  for (auto& r : out) {
    r.gain = pool[rng.index(pool.size())];
    r.noise_var = noise_var;
  }
  return out;
}

void write_channel_file(const std::filesystem::path& path, std::span<const Complex> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write channel file " + path.string());
  out << "# re,im\n";
  char buf[64];
  for (const auto& h : samples) {
    auto res = std::to_chars(buf, buf + sizeof buf, h.real(), std::chars_format::general, 17);
    *res.ptr++ = ',';
    res = std::to_chars(res.ptr, buf + sizeof buf, h.imag(), std::chars_format::general, 17);
    *res.ptr++ = '\n';
    out.write(buf, res.ptr - buf);
  }
  if (!out) throw IoError("failed writing channel file " + path.string());
}

std::vector<Complex> synthesize_multipath(std::size_t users, std::size_t subcarriers,
                                          std::size_t paths, Rng& rng) {
  constexpr double kMaxDelay = 8.0;
  std::vector<Complex> out;
  out.reserve(users * subcarriers);
  std::vector<Complex> amp(paths);
  std::vector<double> delay(paths);
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t l = 0; l < paths; ++l) {
      amp[l] = std::sqrt(std::exp(-static_cast<double>(l))) * rayleigh_sample(rng);
      delay[l] = rng.uniform(0.0, kMaxDelay);
    }
    for (std::size_t k = 0; k < subcarriers; ++k) {
      Complex h{0.0, 0.0};
      for (std::size_t l = 0; l < paths; ++l) {
        const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) * delay[l] /
                             static_cast<double>(subcarriers);
        h += amp[l] * std::polar(1.0, phase);
      }
      out.push_back(h);
    }
  }
  return out;
}

ChannelKind parse_channel_kind(std::string_view tag) {
  if (tag == "awgn") return ChannelKind::awgn;
  if (tag == "rayleigh") return ChannelKind::rayleigh;
  if (tag == "dataset") return ChannelKind::dataset;
  throw ConfigError("unknown channel kind '" + std::string(tag) + "'");
}

std::string_view to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::awgn: return "awgn";
    case ChannelKind::rayleigh: return "rayleigh";
    case ChannelKind::dataset: return "dataset";
  }
  return "?";
}

ChannelModel ChannelModel::dataset(std::shared_ptr<const ChannelDataset> ds) {
  if (!ds) throw ConfigError("dataset channel requires loaded samples");
  return ChannelModel(ChannelKind::dataset, std::move(ds));
}

std::vector<ChannelRealization> ChannelModel::draw(std::size_t batch, double noise_var,
                                                   Split split, Rng& rng) const {
  switch (kind_) {
    case ChannelKind::awgn:
      return std::vector<ChannelRealization>(batch, ChannelRealization{{1.0, 0.0}, noise_var});
    case ChannelKind::rayleigh: {
      std::vector<ChannelRealization> out(batch);
      for (auto& r : out) r = {rayleigh_sample(rng), noise_var};
      return out;
    }
    case ChannelKind::dataset:
      return dataset_sample_batch(*dataset_, batch, split, noise_var, rng);
  }
  return {};
}

Matrix ChannelPass::frames() const {
  if (!has_pilot()) return received;
  Matrix out(received.rows(), received_pilot.cols() + received.cols());
  out << received_pilot, received;
  return out;
}

ChannelPass propagate(const Matrix& signals, std::span<const ChannelRealization> reals,
                      bool with_pilot, Rng& rng) {
  if (static_cast<nn::Index>(reals.size()) != signals.rows()) {
    throw ShapeError("propagate: one realization per signal required");
  }
  const nn::Index rows = signals.rows();
  const nn::Index width = signals.cols();
  ChannelPass pass;
  pass.gains.reserve(reals.size());
  pass.noise = Matrix::Zero(rows, width);
  pass.received.resize(rows, width);
  if (with_pilot) pass.received_pilot.resize(rows, width);
  const Vector pilot = pilot_sequence(static_cast<std::size_t>(width / 2));

  for (nn::Index r = 0; r < rows; ++r) {
    const ChannelRealization& real = reals[static_cast<std::size_t>(r)];
    if (!(real.noise_var >= 0.0)) throw DomainError("noise variance must be non-negative");
    pass.gains.push_back(real.gain);
    if (with_pilot) pass.received_pilot.row(r) = fading_apply(pilot, real, rng).transpose();
    Vector noise = Vector::Zero(width);
    add_noise(noise, real.noise_var, rng);
    pass.noise.row(r) = noise.transpose();
    pass.received.row(r) = (apply_gain(signals.row(r).transpose(), real.gain) + noise).transpose();
  }
  return pass;
}

}  // namespace ragan::channels
