// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "arnse/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "arnse/dsp.hpp"
#include "arnse/random.hpp"

namespace arnse {

double SampleSnrDb(std::mt19937_64& rng) {
  const bool low_range = UnitUniform(rng()) < 0.5;
  return low_range ? Uniform(rng, -7.0, 0.0) : Uniform(rng, 0.0, 10.0);
}

double SnrPolicy::Sample(std::mt19937_64& rng) const {
  return kind == Kind::kFixed ? fixed_db : SampleSnrDb(rng);
}

std::string SnrPolicy::ToText() const {
  if (kind == Kind::kTwoRanges) return "two_ranges";
  std::ostringstream out;
  out.precision(17);
  out << "fixed:" << fixed_db;
  return out.str();
}

SnrPolicy SnrPolicy::FromText(const std::string& text) {
  if (text == "two_ranges") return TwoRanges();
  if (text.rfind("fixed:", 0) == 0) {
    try {
      return Fixed(std::stod(text.substr(6)));
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("unknown SNR policy: " + text);
}

MixturePair MixAtSnr(const AudioBuffer& clean, const AudioBuffer& noise, double snr_db,
                     double target_rms) {
  if (clean.size() != noise.size()) throw DataError("mix: clean and noise lengths differ");
  if (clean.sample_rate != noise.sample_rate) throw DataError("mix: sample rates differ");
  if (!(target_rms > 0.0)) throw ConfigError("mix: target RMS must be positive");
  const double rms_s = Rms(clean.samples);
  const double rms_n = Rms(noise.samples);
  if (rms_s == 0.0) throw DataError("mix: zero-energy clean signal");
  if (rms_n == 0.0) throw DataError("mix: zero-energy noise signal");

  const double gain = (rms_n / rms_s) * std::pow(10.0, snr_db / 20.0);
  const Eigen::VectorXd s0 = gain * clean.samples;
  const double rms_y0 = Rms(s0 + noise.samples);
  if (rms_y0 == 0.0) throw DataError("mix: mixture cancels to silence");
  const double level = target_rms / rms_y0;

  MixturePair pair;
  pair.clean = AudioBuffer(s0 * level, clean.sample_rate);
  pair.noise = AudioBuffer(noise.samples * level, clean.sample_rate);
  pair.mixture = AudioBuffer(pair.clean.samples + pair.noise.samples, clean.sample_rate);
  pair.snr_db = snr_db;
  return pair;
}

AudioBuffer CropNoise(const AudioBuffer& noise, Eigen::Index offset, Eigen::Index length,
                      bool loop) {
  const Eigen::Index n = noise.size();
  if (n == 0) throw DataError("empty noise signal");
  if (offset < 0 || offset >= n) throw DataError("noise offset out of range");
  if (!loop && offset + length > n) {
    throw DataError("noise shorter than utterance and looping is disabled");
  }
  Eigen::VectorXd out(length);
  for (Eigen::Index i = 0; i < length; ++i) out[i] = noise.samples[(offset + i) % n];
  return AudioBuffer(std::move(out), noise.sample_rate);
}

Eigen::Index SampleNoiseOffset(std::mt19937_64& rng, Eigen::Index noise_len,
                               Eigen::Index utterance_len, bool loop) {
  if (noise_len >= utterance_len) {
    return static_cast<Eigen::Index>(
        UniformIndex(rng, static_cast<std::uint64_t>(noise_len - utterance_len + 1)));
  }
  if (!loop) throw DataError("noise shorter than utterance and looping is disabled");
  return static_cast<Eigen::Index>(UniformIndex(rng, static_cast<std::uint64_t>(noise_len)));
}

// ---------------------------------------------------------------------------

AudioBuffer SynthSpeechLike(std::uint64_t seed, double duration_s, int sample_rate) {
  if (!(duration_s > 0.0)) throw ConfigError("duration must be positive");
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  std::mt19937_64 rng(seed);
  const Eigen::Index total = static_cast<Eigen::Index>(std::llround(duration_s * sample_rate));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(std::max<Eigen::Index>(total, 1));
  const double two_pi = 2.0 * std::numbers::pi;
  const double nyquist = sample_rate / 2.0;

  Eigen::Index pos = static_cast<Eigen::Index>(Uniform(rng, 0.02, 0.1) * sample_rate);
  while (pos < total) {
    const Eigen::Index word = static_cast<Eigen::Index>(Uniform(rng, 0.2, 0.6) * sample_rate);
    const Eigen::Index pause = static_cast<Eigen::Index>(Uniform(rng, 0.08, 0.25) * sample_rate);
    const double f_start = Uniform(rng, 90.0, 300.0);
    const double f_end = std::clamp(f_start * Uniform(rng, 0.75, 1.3), 90.0, 300.0);
    const int harmonics = 3 + static_cast<int>(UniformIndex(rng, 6));
    const double am_rate = Uniform(rng, 2.0, 8.0);
    const double am_phase = Uniform(rng, 0.0, two_pi);
    const double formant = Uniform(rng, 300.0, 1200.0);
    std::vector<double> amp(harmonics);
    for (int k = 0; k < harmonics; ++k) {
      const double fk = (k + 1) * f_start;
      amp[k] = (1.0 / (k + 1)) * (1.0 + 1.5 * std::exp(-std::pow((fk - formant) / 300.0, 2)));
    }
    const double aspiration = Uniform(rng, 0.01, 0.03);
    double phase = Uniform(rng, 0.0, two_pi);
    const Eigen::Index end = std::min(total, pos + word);
    const Eigen::Index len = std::max<Eigen::Index>(end - pos, 1);
    for (Eigen::Index i = pos; i < end; ++i) {
      const double u = static_cast<double>(i - pos) / len;
      const double f0 = f_start + (f_end - f_start) * u;
      phase += two_pi * f0 / sample_rate;
      // Word envelope: raised-cosine edges, 2-8 Hz syllabic modulation.
      const double edge = std::min(1.0, std::min(u, 1.0 - u) * 10.0);
      const double shape = 0.5 - 0.5 * std::cos(std::numbers::pi * edge);
      const double t = static_cast<double>(i - pos) / sample_rate;
      const double am = 0.6 + 0.4 * std::sin(two_pi * am_rate * t + am_phase);
      double v = 0.0;
      for (int k = 0; k < harmonics; ++k) {
        if ((k + 1) * f0 >= nyquist) break;
        v += amp[k] * std::sin((k + 1) * phase);
      }
      v += aspiration * Gaussian(rng);
      x[i] = shape * am * v;
    }
    pos = end + pause;
  }
  const double peak = x.cwiseAbs().maxCoeff();
  if (peak > 0.0) x *= 0.5 / peak;
  return AudioBuffer(x.head(total), sample_rate);
}

AudioBuffer SynthNoise(std::uint64_t seed, double duration_s, int sample_rate, NoiseKind kind) {
  if (!(duration_s > 0.0)) throw ConfigError("duration must be positive");
  std::mt19937_64 rng(seed);
  const Eigen::Index total = static_cast<Eigen::Index>(std::llround(duration_s * sample_rate));
  Eigen::VectorXd x(total);
  // Paul Kellet's economy pink filter.
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (Eigen::Index i = 0; i < total; ++i) {
    const double w = Gaussian(rng);
    if (kind == NoiseKind::kWhite) {
      x[i] = w;
    } else {
      b0 = 0.99765 * b0 + w * 0.0990460;
      b1 = 0.96300 * b1 + w * 0.2965164;
      b2 = 0.57000 * b2 + w * 1.0526913;
      x[i] = b0 + b1 + b2 + w * 0.1848;
    }
  }
  const double level = Rms(x);
  if (level > 0.0) x *= 0.1 / level;
  return AudioBuffer(std::move(x), sample_rate);
}

// ---------------------------------------------------------------------------

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void CheckPath(const std::string& p) {
  if (p.find_first_of(" \t\r\n") != std::string::npos) {
    throw DataError("manifest paths may not contain whitespace: " + p);
  }
}

}  // namespace

std::string CorpusManifest::ToText() const {
  std::ostringstream out;
  out.precision(17);
  out << "# arnse corpus manifest v1\n";
  out << "seed = " << seed << "\n";
  out << "target_rms = " << target_rms << "\n";
  out << "snr_policy = " << policy.ToText() << "\n";
  out << "loop_noise = " << (loop_noise ? 1 : 0) << "\n";
  out << "count = " << entries.size() << "\n";
  for (const auto& e : entries) {
    CheckPath(e.clean_path);
    CheckPath(e.noise_path);
    out << "entry id=" << e.id << " clean=" << e.clean_path << " noise=" << e.noise_path
        << " noise_offset=" << e.noise_offset << " snr_db=" << e.snr_db << " seed=" << e.seed
        << " length=" << e.length << "\n";
  }
  return out.str();
}

CorpusManifest CorpusManifest::FromText(const std::string& text) {
  CorpusManifest m;
  std::istringstream in(text);
  std::string line;
  long declared = -1;
  int line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      line = Trim(line);
      if (line.empty() || line[0] == '#') continue;
      if (line.rfind("entry ", 0) == 0) {
        ManifestEntry e;
        std::istringstream fields(line.substr(6));
        for (std::string kv; fields >> kv;) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw DataError("bad entry field " + kv);
          const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
          if (key == "id") e.id = value;
          else if (key == "clean") e.clean_path = value;
          else if (key == "noise") e.noise_path = value;
          else if (key == "noise_offset") e.noise_offset = std::stoll(value);
          else if (key == "snr_db") e.snr_db = std::stod(value);
          else if (key == "seed") e.seed = std::stoull(value);
          else if (key == "length") e.length = std::stoll(value);
          else throw DataError("unknown entry field " + key);
        }
        m.entries.push_back(std::move(e));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw DataError("expected key = value");
      const std::string key = Trim(line.substr(0, eq)), value = Trim(line.substr(eq + 1));
      if (key == "seed") m.seed = std::stoull(value);
      else if (key == "target_rms") m.target_rms = std::stod(value);
      else if (key == "snr_policy") m.policy = SnrPolicy::FromText(value);
      else if (key == "loop_noise") m.loop_noise = std::stoi(value) != 0;
      else if (key == "count") declared = std::stol(value);
      else throw DataError("unknown manifest key " + key);
    }
  } catch (const std::logic_error& e) {
    throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
  }
  if (declared >= 0 && declared != static_cast<long>(m.entries.size())) {
    throw DataError("manifest count does not match number of entries");
  }
  return m;
}

void CorpusManifest::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << ToText();
}

CorpusManifest CorpusManifest::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return FromText(ss.str());
}

MixturePair RealizeEntry(const ManifestEntry& entry, double target_rms, bool loop_noise) {
  const AudioBuffer clean = ReadWav(entry.clean_path);
  const AudioBuffer noise_src = ReadWav(entry.noise_path);
  if (clean.size() != entry.length) throw DataError("clean length differs from manifest");
  if (noise_src.sample_rate != clean.sample_rate) throw DataError("sample rates differ");
  const AudioBuffer noise = CropNoise(noise_src, entry.noise_offset, entry.length, loop_noise);
  MixturePair pair = MixAtSnr(clean, noise, entry.snr_db, target_rms);
  pair.seed = entry.seed;
  return pair;
}

std::vector<std::filesystem::path> ListWavs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

CorpusManifest BuildCorpus(const CorpusOptions& opts) {
  if (opts.count < 0) throw ConfigError("count must be non-negative");
  CorpusManifest manifest;
  manifest.seed = opts.seed;
  manifest.target_rms = opts.target_rms;
  manifest.policy = opts.policy;
  manifest.loop_noise = opts.loop_noise;
  std::filesystem::create_directories(opts.out_dir);
  if (opts.count == 0) {
    manifest.Save(opts.out_dir / "manifest.txt");
    return manifest;
  }

  const auto clean_files = ListWavs(opts.clean_dir);
  const auto noise_files = ListWavs(opts.noise_dir);
  if (clean_files.empty()) throw DataError("no clean WAV files in " + opts.clean_dir.string());
  if (noise_files.empty()) throw DataError("no noise WAV files in " + opts.noise_dir.string());
  std::vector<Eigen::Index> noise_lengths;
  for (const auto& f : noise_files) noise_lengths.push_back(ReadWav(f).size());

  for (const char* sub : {"clean", "noise", "mix"}) {
    std::filesystem::create_directories(opts.out_dir / sub);
  }
  for (int i = 0; i < opts.count; ++i) {
    const std::uint64_t entry_seed = DeriveSeed(opts.seed, static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(entry_seed);
    ManifestEntry e;
    char id[32];
    std::snprintf(id, sizeof(id), "mix_%05d", i);
    e.id = id;
    const auto& clean_file = clean_files[UniformIndex(rng, clean_files.size())];
    const std::size_t noise_idx = UniformIndex(rng, noise_files.size());
    e.clean_path = clean_file.string();
    e.noise_path = noise_files[noise_idx].string();
    e.length = ReadWav(clean_file).size();
    e.noise_offset = SampleNoiseOffset(rng, noise_lengths[noise_idx], e.length, opts.loop_noise);
    e.snr_db = opts.policy.Sample(rng);
    e.seed = entry_seed;

    const MixturePair pair = RealizeEntry(e, opts.target_rms, opts.loop_noise);
    WriteWav(pair.clean, opts.out_dir / "clean" / (e.id + ".wav"));
    WriteWav(pair.noise, opts.out_dir / "noise" / (e.id + ".wav"));
    WriteWav(pair.mixture, opts.out_dir / "mix" / (e.id + ".wav"));
    manifest.entries.push_back(std::move(e));
  }
  manifest.Save(opts.out_dir / "manifest.txt");
  return manifest;
}

}  // namespace arnse
