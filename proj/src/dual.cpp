#include "qcdiff/dual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qcdiff {

DualScheme annihilator(const Scheme& scheme) {
  ScalarMat d = scheme.basis().transposed().inverse();
  std::size_t n = scheme.total_dim();
  Scheme lat = [&] {
    if (scheme.exact()) return Scheme::custom_exact(scheme.physical_dim(),
                                                    scheme.internal_dim(), d, scheme.root());
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) rows[i][j] = d.at(i, j).to_double();
    return Scheme::custom(scheme.physical_dim(), scheme.internal_dim(), rows);
  }();
  return DualScheme(scheme, std::move(lat));
}

double character_residual(const DualScheme& dual, const Coords& dual_coords,
                          const Coords& lattice_coords) {
  ScalarVec freq = dual.dual_basis().matvec(dual_coords);
  ScalarVec vec = dual.parent().basis().matvec(lattice_coords);
  Scalar pairing;
  for (std::size_t i = 0; i < freq.size(); ++i) pairing += freq[i] * vec[i];
  double p = pairing.to_double();
  std::int64_t nearest = std::llround(p);
  if (dual.parent().exact()) {
    Scalar diff = pairing - Scalar::exact_int(nearest);
    if (diff.is_zero()) return 0.0;
    return std::abs(diff.to_double());
  }
  return std::abs(p - (double)nearest);
}

std::vector<FourierModulePoint> bragg_candidates(const DualScheme& dual, const Region& k_range,
                                                 const AmplitudeFn& amp, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("bragg: threshold must be nonnegative");
  double radius = amp.cutoff_radius(threshold);
  if (!std::isfinite(radius))
    throw std::invalid_argument("bragg: threshold gives an unbounded search radius");

  // conservative pad; the radius only caps the search, membership is by value
  double r = radius * (1.0 + 1e-9) + 1e-12;
  std::size_t e = dual.lattice().internal_dim();
  WBox box;
  for (std::size_t i = 0; i < e; ++i) {
    box.lo.push_back(Scalar::fp(-r));
    box.hi.push_back(Scalar::fp(r));
  }
  Window cutoff = Window::from_boxes(e, {box});

  auto pts = enumerate_points(dual.lattice(), cutoff, k_range);
  std::vector<FourierModulePoint> out;
  for (const auto& p : pts) {
    double a = amp.value(p.internal_d);
    if (a < threshold) continue;
    FourierModulePoint pk;
    pk.dual_coords = p.coords;
    pk.chi = p.physical_d;
    pk.chi_star = p.internal_d;
    pk.amplitude = a;
    out.push_back(std::move(pk));
  }
  std::sort(out.begin(), out.end(), [](const FourierModulePoint& a, const FourierModulePoint& b) {
    if (a.amplitude != b.amplitude) return a.amplitude > b.amplitude;
    return a.dual_coords < b.dual_coords;
  });
  return out;
}

} // namespace qcdiff
