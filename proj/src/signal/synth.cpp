#include "fullend/signal/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "fullend/error.hpp"

namespace fullend::signal {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vowel {
  double f1, f2, f3;
};

constexpr std::array<Vowel, 6> kVowels{{
    {730, 1090, 2440},  // a
    {270, 2290, 3010},  // i
    {300, 870, 2240},   // u
    {530, 1840, 2480},  // e
    {570, 840, 2410},   // o
    {660, 1720, 2410},  // ae
}};

struct Syllable {
  std::size_t start = 0;
  std::size_t fricative_len = 0;
  std::size_t nucleus_len = 0;
  bool voiced = true;
  Vowel vowel{};
  double amp = 1.0;
};

void normalize_rms(std::vector<double>& x, double target) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  const double rms = std::sqrt(acc / static_cast<double>(std::max<std::size_t>(1, x.size())));
  if (rms <= 0.0) return;
  const double g = target / rms;
  for (double& v : x) v *= g;
}

// RBJ cookbook biquad, direct form I.
struct Biquad {
  double b0, b1, b2, a1, a2;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  static Biquad lowpass(double fc, double sr, double q = 0.7071) {
    const double w = kTwoPi * fc / sr, c = std::cos(w), al = std::sin(w) / (2 * q), a0 = 1 + al;
    return {(1 - c) / 2 / a0, (1 - c) / a0, (1 - c) / 2 / a0, -2 * c / a0, (1 - al) / a0};
  }
  static Biquad highpass(double fc, double sr, double q = 0.7071) {
    const double w = kTwoPi * fc / sr, c = std::cos(w), al = std::sin(w) / (2 * q), a0 = 1 + al;
    return {(1 + c) / 2 / a0, -(1 + c) / a0, (1 + c) / 2 / a0, -2 * c / a0, (1 - al) / a0};
  }
  double operator()(double x) {
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

std::vector<double> white(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = nd(rng);
  return out;
}

std::vector<double> pink(std::mt19937_64& rng, std::size_t n) {
  // Paul Kellet's refined 1/f filter.
  std::vector<double> w = white(rng, n);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  for (double& v : w) {
    const double x = v;
    b0 = 0.99886 * b0 + x * 0.0555179;
    b1 = 0.99332 * b1 + x * 0.0750759;
    b2 = 0.96900 * b2 + x * 0.1538520;
    b3 = 0.86650 * b3 + x * 0.3104856;
    b4 = 0.55000 * b4 + x * 0.5329522;
    b5 = -0.7616 * b5 - x * 0.0168980;
    v = b0 + b1 + b2 + b3 + b4 + b5 + b6 + x * 0.5362;
    b6 = x * 0.115926;
  }
  return w;
}

std::vector<double> babble(std::uint64_t seed, std::size_t talkers, double duration_s, int sr) {
  const std::size_t n = static_cast<std::size_t>(std::lround(duration_s * sr));
  std::vector<double> acc(n, 0.0);
  for (std::size_t k = 0; k < talkers; ++k) {
    const auto s = synth_speech(mix_seed(seed, 100 + k), duration_s, sr);
    for (std::size_t i = 0; i < n; ++i) acc[i] += s.samples[i];
  }
  return acc;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string_view noise_name(NoiseType t) {
  switch (t) {
    case NoiseType::White: return "white";
    case NoiseType::Pink: return "pink";
    case NoiseType::Brown: return "brown";
    case NoiseType::Hum: return "hum";
    case NoiseType::Babble: return "babble";
    case NoiseType::Modulated: return "modulated";
    case NoiseType::Cafeteria: return "cafeteria";
    case NoiseType::Announcement: return "announcement";
  }
  return "unknown";
}

NoiseType parse_noise(std::string_view name) {
  for (NoiseType t : {NoiseType::White, NoiseType::Pink, NoiseType::Brown, NoiseType::Hum, NoiseType::Babble,
                      NoiseType::Modulated, NoiseType::Cafeteria, NoiseType::Announcement})
    if (noise_name(t) == name) return t;
  throw ContractError("unknown noise type: " + std::string(name));
}

const std::vector<NoiseType>& training_noises() {
  static const std::vector<NoiseType> v{NoiseType::White, NoiseType::Pink,   NoiseType::Brown,
                                        NoiseType::Hum,   NoiseType::Babble, NoiseType::Modulated};
  return v;
}

dsp::Waveform synth_speech(std::uint64_t seed, double duration_s, int sample_rate) {
  if (duration_s <= 0.0 || sample_rate <= 0) throw ContractError("synth_speech: invalid duration or rate");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

  const double sr = sample_rate;
  const std::size_t n = static_cast<std::size_t>(std::lround(duration_s * sr));
  const double f0_base = u(95.0, 220.0);
  const double rate = u(3.5, 4.5);
  const double ph1 = u(0.0, kTwoPi), ph2 = u(0.0, kTwoPi);

  std::vector<Syllable> syllables;
  std::size_t cursor = static_cast<std::size_t>(u(0.05, 0.15) * sr);
  while (cursor < n) {
    Syllable syl;
    syl.start = cursor;
    const double period = u(0.8, 1.2) * sr / rate;
    syl.voiced = uni(rng) < 0.88;
    syl.vowel = kVowels[static_cast<std::size_t>(uni(rng) * kVowels.size()) % kVowels.size()];
    syl.amp = u(0.45, 1.0);
    syl.fricative_len = uni(rng) < 0.35 ? static_cast<std::size_t>(u(0.03, 0.09) * sr) : 0;
    syl.nucleus_len = static_cast<std::size_t>(0.78 * period) - std::min<std::size_t>(syl.fricative_len, period / 3);
    syllables.push_back(syl);
    cursor += static_cast<std::size_t>(period);
  }

  std::vector<double> out(n, 0.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  double theta = 0.0;
  double prev_noise = 0.0;
  constexpr std::size_t kControl = 16;
  std::vector<double> amps;
  Vowel prev_vowel = kVowels[0];
  std::size_t syl_idx = 0;

  for (std::size_t start = 0; start < n; start += kControl) {
    while (syl_idx + 1 < syllables.size() && syllables[syl_idx + 1].start <= start) {
      prev_vowel = syllables[syl_idx].vowel;
      ++syl_idx;
    }
    const double t = start / sr;
    const double f0 = f0_base * (1.0 + 0.06 * std::sin(kTwoPi * 0.6 * t + ph1) + 0.02 * std::sin(kTwoPi * 5.0 * t + ph2)) *
                      (1.0 - 0.08 * t / duration_s);
    const Syllable* syl = syllables.empty() || syllables[syl_idx].start > start ? nullptr : &syllables[syl_idx];

    // Formant track: glide from the previous vowel over the first 40% of the nucleus.
    Vowel v = prev_vowel;
    double voiced_env = 0.0, fric_env = 0.0;
    if (syl != nullptr) {
      const double local = static_cast<double>(start - syl->start);
      const double fl = static_cast<double>(syl->fricative_len);
      const double nl = static_cast<double>(syl->nucleus_len);
      if (local < fl) {
        fric_env = syl->amp * std::pow(std::sin(std::numbers::pi * local / fl), 2.0);
      } else if (local < fl + nl) {
        const double p = (local - fl) / nl;
        if (syl->voiced) voiced_env = syl->amp * std::pow(std::sin(std::numbers::pi * p), 1.5);
        else fric_env = 0.6 * syl->amp * std::pow(std::sin(std::numbers::pi * p), 2.0);
        const double g = std::min(1.0, p / 0.4);
        v = {prev_vowel.f1 + g * (syl->vowel.f1 - prev_vowel.f1), prev_vowel.f2 + g * (syl->vowel.f2 - prev_vowel.f2),
             prev_vowel.f3 + g * (syl->vowel.f3 - prev_vowel.f3)};
      } else {
        v = syl->vowel;
      }
    }

    const std::size_t harmonics = static_cast<std::size_t>(std::min(5000.0, 0.45 * sr) / f0);
    amps.assign(harmonics + 1, 0.0);
    if (voiced_env > 0.0) {
      for (std::size_t h = 1; h <= harmonics; ++h) {
        const double f = static_cast<double>(h) * f0;
        const double res = 1.0 * std::exp(-0.5 * std::pow((f - v.f1) / 110.0, 2)) +
                           0.6 * std::exp(-0.5 * std::pow((f - v.f2) / 150.0, 2)) +
                           0.35 * std::exp(-0.5 * std::pow((f - v.f3) / 200.0, 2));
        amps[h] = voiced_env * (res + 0.03) / std::pow(static_cast<double>(h), 0.5);
      }
    }

    const std::size_t stop = std::min(n, start + kControl);
    const double dtheta = kTwoPi * f0 / sr;
    for (std::size_t i = start; i < stop; ++i) {
      double acc = 0.0;
      if (voiced_env > 0.0) {
        // sin(h*theta) by the Chebyshev recurrence.
        const double c2 = 2.0 * std::cos(theta);
        double s_prev = 0.0, s_cur = std::sin(theta);
        for (std::size_t h = 1; h <= harmonics; ++h) {
          acc += amps[h] * s_cur;
          const double s_next = c2 * s_cur - s_prev;
          s_prev = s_cur;
          s_cur = s_next;
        }
      }
      const double nz = nd(rng);
      const double hp = nz - prev_noise;
      prev_noise = nz;
      acc += 0.35 * fric_env * hp + 0.015 * voiced_env * nz;
      out[i] = acc;
      theta += dtheta;
      if (theta > kTwoPi) theta -= kTwoPi;
    }
  }
  normalize_rms(out, 0.05);
  return dsp::Waveform(std::move(out), sample_rate);
}

dsp::Waveform synth_noise(NoiseType type, std::uint64_t seed, double duration_s, int sample_rate) {
  if (duration_s <= 0.0 || sample_rate <= 0) throw ContractError("synth_noise: invalid duration or rate");
  std::mt19937_64 rng(mix_seed(seed, 7));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double sr = sample_rate;
  const std::size_t n = static_cast<std::size_t>(std::lround(duration_s * sr));
  std::vector<double> x;

  switch (type) {
    case NoiseType::White:
      x = white(rng, n);
      break;
    case NoiseType::Pink:
      x = pink(rng, n);
      break;
    case NoiseType::Brown: {
      x = white(rng, n);
      double acc = 0.0;
      for (double& v : x) {
        acc = 0.995 * acc + 0.1 * v;
        v = acc;
      }
      break;
    }
    case NoiseType::Hum: {
      x = white(rng, n);
      const double mains = uni(rng) < 0.5 ? 50.0 : 60.0;
      std::array<double, 12> phase{};
      for (double& p : phase) p = kTwoPi * uni(rng);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.05 * x[i];
        for (std::size_t h = 1; h <= phase.size(); ++h)
          acc += std::sin(kTwoPi * mains * h * i / sr + phase[h - 1]) / static_cast<double>(h);
        x[i] = acc;
      }
      break;
    }
    case NoiseType::Babble:
      x = babble(seed, 6, duration_s, sample_rate);
      break;
    case NoiseType::Modulated: {
      x = pink(rng, n);
      const double r = 1.0 + 2.0 * uni(rng);
      const double ph = kTwoPi * uni(rng);
      for (std::size_t i = 0; i < n; ++i) x[i] *= 1.0 + 0.8 * std::sin(kTwoPi * r * i / sr + ph);
      break;
    }
    case NoiseType::Cafeteria: {
      x = babble(seed, 10, duration_s, sample_rate);
      normalize_rms(x, 1.0);
      std::vector<double> bed = pink(rng, n);
      normalize_rms(bed, 0.3);
      std::normal_distribution<double> nd(0.0, 1.0);
      std::exponential_distribution<double> gap(3.0);
      double t = gap(rng);
      while (t < duration_s) {
        const std::size_t at = static_cast<std::size_t>(t * sr);
        const double amp = 0.5 + 1.5 * uni(rng);
        const double tau = (0.008 + 0.02 * uni(rng)) * sr;
        double prev = 0.0;
        for (std::size_t i = at; i < std::min(n, at + static_cast<std::size_t>(6 * tau)); ++i) {
          const double z = nd(rng);
          x[i] += amp * std::exp(-static_cast<double>(i - at) / tau) * (z - prev);
          prev = z;
        }
        t += gap(rng);
      }
      for (std::size_t i = 0; i < n; ++i) x[i] += bed[i];
      break;
    }
    case NoiseType::Announcement: {
      const auto talker = synth_speech(mix_seed(seed, 300), duration_s, sample_rate);
      Biquad hp = Biquad::highpass(300.0, sr), hp2 = Biquad::highpass(300.0, sr);
      Biquad lp = Biquad::lowpass(3400.0, sr), lp2 = Biquad::lowpass(3400.0, sr);
      std::vector<double> band(n);
      for (std::size_t i = 0; i < n; ++i) band[i] = lp2(lp(hp2(hp(talker.samples[i]))));
      const std::size_t d1 = static_cast<std::size_t>(0.12 * sr), d2 = static_cast<std::size_t>(0.24 * sr);
      x.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = band[i];
        if (i >= d1) x[i] += 0.4 * band[i - d1];
        if (i >= d2) x[i] += 0.25 * band[i - d2];
      }
      std::vector<double> bed = pink(rng, n);
      normalize_rms(x, 1.0);
      normalize_rms(bed, 0.15);
      for (std::size_t i = 0; i < n; ++i) x[i] += bed[i];
      break;
    }
  }
  normalize_rms(x, 1.0);
  return dsp::Waveform(std::move(x), sample_rate);
}

}  // namespace fullend::signal
