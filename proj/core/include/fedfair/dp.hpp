#pragma once

#include <cstdint>
#include <string>

#include "fedfair/fairness.hpp"
#include "fedfair/kernel.hpp"

namespace fedfair {

// Output perturbation applied to broadcast score sets: clip to
// [clip_lo, clip_hi], then add i.i.d. noise to every score.
struct DPMechanism {
  enum class Kind { none, gaussian, laplace };
  Kind kind = Kind::none;
  double scale = 0.0;
  double clip_lo = 0.0;
  double clip_hi = 1.0;

  bool active() const { return kind != Kind::none; }
  void validate() const;
};

std::string dp_kind_to_string(DPMechanism::Kind k);
DPMechanism::Kind dp_kind_from_string(const std::string& s);

// Clip-and-noise every score; sets come back re-sorted.  Kind none is the
// identity (no clipping either).  noise_seed scopes the draws, e.g. to a
// round.
PredictionSets protect(const PredictionSets& sets, const DPMechanism& mech,
                       std::uint64_t noise_seed);

// E[C(z; protected sets) | sets]: the C function evaluated with the
// noise-convolved kernel on the clipped but unnoised sets.  Kind none means
// plain c_function with the base kernel.
double dp_expected_c(double z, const PredictionSets& sets, std::size_t set_index,
                     const DPMechanism& mech, const KernelPtr& base,
                     const ConvolveOptions& options = {});

}  // namespace fedfair
