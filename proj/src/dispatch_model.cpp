#include "synpa/dispatch_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "synpa/error.hpp"

namespace synpa {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::kFullDispatch: return "full_dispatch";
    case Category::kFrontend: return "frontend";
    case Category::kBackend: return "backend";
  }
  return "?";
}

std::string_view to_string(AppClass c) {
  switch (c) {
    case AppClass::kBackendBound: return "backend";
    case AppClass::kFrontendBound: return "frontend";
    case AppClass::kOther: return "other";
  }
  return "?";
}

CategoryVector CategoryVector::from_fractions(double fe, double be, double fdc) {
  for (double x : {fe, be, fdc}) {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0 + kSumTolerance) {
      throw Error(Errc::kInvalidArgument, "category fraction out of [0,1]: " + std::to_string(x));
    }
  }
  if (std::abs(fe + be + fdc - 1.0) > kSumTolerance) {
    throw Error(Errc::kInvalidArgument, "category fractions sum to " + std::to_string(fe + be + fdc));
  }
  return CategoryVector(CategoryTriple{fdc, fe, be});
}

CategoryVector CategoryVector::renormalize(const CategoryTriple& t, bool* ok) {
  CategoryTriple c{std::max(0.0, t.fdc), std::max(0.0, t.fe), std::max(0.0, t.be)};
  for (auto cat : kCategories) {
    if (!std::isfinite(c[cat])) c[cat] = 0.0;
  }
  const double s = c.sum();
  if (!(s > 0.0)) {
    if (ok) *ok = false;
    return CategoryVector(CategoryTriple{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  }
  if (ok) *ok = true;
  return CategoryVector(CategoryTriple{c.fdc / s, c.fe / s, c.be / s});
}

CategoryBreakdown characterize(const RawCounterSample& sample, unsigned dispatch_width) {
  if (dispatch_width == 0) throw Error(Errc::kInvalidArgument, "dispatch width must be >= 1");
  if (sample.cpu_cycles == 0) {
    throw Error(Errc::kDegenerateSample, "thread '" + sample.thread_id + "' quantum " +
                                             std::to_string(sample.quantum_index) + " has zero cycles");
  }
  using u128 = unsigned __int128;
  const u128 w = dispatch_width;
  const u128 total = static_cast<u128>(sample.cpu_cycles) * w;
  if (total > std::numeric_limits<std::uint64_t>::max()) {
    throw Error(Errc::kInvalidArgument, "cycle count overflows slot accounting");
  }

  CategoryBreakdown b;
  b.dispatch_width = dispatch_width;
  b.total_slots = static_cast<std::uint64_t>(total);

  u128 fe = static_cast<u128>(sample.stall_frontend) * w;
  u128 be = static_cast<u128>(sample.stall_backend) * w;
  if (fe + be > total) {
    // Stall counters overshoot the cycle counter: scale both down
    // proportionally so that dispatch cycles clamp to zero.
    const u128 sum = fe + be;
    fe = fe * total / sum;
    be = total - fe;
    b.clamped = true;
  }
  const u128 dispatch = total - fe - be;
  u128 full = sample.inst_spec;  // inst_spec / width cycles == inst_spec slots
  if (full > dispatch) {
    full = dispatch;
    b.clamped = true;
  }
  const u128 revealed = dispatch - full;

  b.fe_slots = static_cast<std::uint64_t>(fe);
  b.revealed_slots = static_cast<std::uint64_t>(revealed);
  b.be_slots = static_cast<std::uint64_t>(be + revealed);
  b.full_dispatch_slots = b.total_slots - b.fe_slots - b.be_slots;
  return b;
}

CategoryVector normalize(const CategoryBreakdown& b) {
  if (b.total_slots == 0) throw Error(Errc::kDegenerateSample, "breakdown has zero total cycles");
  const double t = static_cast<double>(b.total_slots);
  const double fe = static_cast<double>(b.fe_slots) / t;
  const double be = static_cast<double>(b.be_slots) / t;
  const double fdc = static_cast<double>(b.full_dispatch_slots) / t;
  return CategoryVector::from_fractions(fe, be, fdc);
}

AppClass classify(const CategoryVector& v) {
  if (v.be() > kBackendBoundThreshold) return AppClass::kBackendBound;
  if (v.fe() > kFrontendBoundThreshold) return AppClass::kFrontendBound;
  return AppClass::kOther;
}

RawCounterSample synthesize_sample(const CategoryVector& v, std::uint64_t cycles, unsigned dispatch_width,
                                   std::string thread_id, std::uint64_t quantum_index) {
  if (dispatch_width == 0 || cycles == 0) throw Error(Errc::kInvalidArgument, "synthesize_sample needs cycles and width");
  const double c = static_cast<double>(cycles);
  RawCounterSample s;
  s.cpu_cycles = cycles;
  s.thread_id = std::move(thread_id);
  s.quantum_index = quantum_index;
  s.stall_frontend = std::min<std::uint64_t>(cycles, static_cast<std::uint64_t>(std::llround(v.fe() * c)));
  const std::uint64_t slots_left = (cycles - s.stall_frontend) * dispatch_width;
  s.inst_spec = std::min<std::uint64_t>(slots_left, static_cast<std::uint64_t>(std::llround(v.fdc() * c * dispatch_width)));
  const std::uint64_t dispatch_cycles = (s.inst_spec + dispatch_width - 1) / dispatch_width;
  s.stall_backend = cycles - s.stall_frontend - dispatch_cycles;
  return s;
}

}  // namespace synpa
