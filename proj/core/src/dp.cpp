#include "fedfair/dp.hpp"

#include <algorithm>

#include "fedfair/errors.hpp"
#include "fedfair/rng.hpp"

namespace fedfair {

void DPMechanism::validate() const {
  if (kind == Kind::none) return;
  if (!(scale > 0.0)) throw ConfigError("dp.scale must be positive for an active mechanism");
  if (!(clip_lo < clip_hi)) throw ConfigError("dp.clip_lo must be below dp.clip_hi");
}

std::string dp_kind_to_string(DPMechanism::Kind k) {
  switch (k) {
    case DPMechanism::Kind::none: return "none";
    case DPMechanism::Kind::gaussian: return "gaussian";
    case DPMechanism::Kind::laplace: return "laplace";
  }
  throw ValidationError("dp_kind_to_string: bad enum value");
}

DPMechanism::Kind dp_kind_from_string(const std::string& s) {
  if (s == "none") return DPMechanism::Kind::none;
  if (s == "gaussian") return DPMechanism::Kind::gaussian;
  if (s == "laplace") return DPMechanism::Kind::laplace;
  throw ConfigError("unknown dp mechanism '" + s + "'");
}

PredictionSets protect(const PredictionSets& sets, const DPMechanism& mech,
                       std::uint64_t noise_seed) {
  if (!mech.active()) return sets;
  mech.validate();
  PredictionSets out = sets;
  for (std::size_t j = 0; j < out.scores.size(); ++j) {
    for (int a = 0; a < 2; ++a) {
      auto rng = RngStream::derive(noise_seed, StreamId::dp_noise,
                                   {static_cast<std::uint64_t>(j),
                                    static_cast<std::uint64_t>(a)});
      auto& scores = out.scores[j][static_cast<std::size_t>(a)];
      for (auto& s : scores) {
        s = std::clamp(s, mech.clip_lo, mech.clip_hi);
        s += mech.kind == DPMechanism::Kind::gaussian ? mech.scale * rng.normal()
                                                      : rng.laplace(mech.scale);
      }
      std::sort(scores.begin(), scores.end());
    }
  }
  return out;
}

double dp_expected_c(double z, const PredictionSets& sets, std::size_t set_index,
                     const DPMechanism& mech, const KernelPtr& base,
                     const ConvolveOptions& options) {
  if (set_index >= sets.scores.size())
    throw ValidationError("dp_expected_c: set index out of range");
  const auto& pair = sets.scores[set_index];
  if (!mech.active()) return c_function(z, pair[0], pair[1], *base);
  mech.validate();

  NoiseSpec noise;
  noise.kind = mech.kind == DPMechanism::Kind::gaussian ? NoiseSpec::Kind::gaussian
                                                        : NoiseSpec::Kind::laplace;
  noise.scale = mech.scale;
  const KernelPtr convolved = dp_convolve(base, noise, options);

  std::array<std::vector<double>, 2> clipped;
  for (int a = 0; a < 2; ++a) {
    clipped[a].reserve(pair[a].size());
    for (double s : pair[static_cast<std::size_t>(a)])
      clipped[static_cast<std::size_t>(a)].push_back(std::clamp(s, mech.clip_lo, mech.clip_hi));
  }
  return c_function(z, clipped[0], clipped[1], *convolved);
}

}  // namespace fedfair
