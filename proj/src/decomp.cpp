#include "qcdiff/decomp.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace qcdiff {

namespace {

bool vec_is_zero(const ScalarVec& v) {
  for (const auto& s : v)
    if (!s.is_zero()) return false;
  return true;
}

ScalarVec vec_scale(const ScalarVec& v, std::int64_t f) {
  ScalarVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * Scalar::exact_int(f);
  return out;
}

ScalarVec vec_sub(const ScalarVec& a, const ScalarVec& b) {
  ScalarVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

ScalarVec vec_neg(const ScalarVec& a) {
  ScalarVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = -a[i];
  return out;
}

} // namespace

std::int64_t ell_steps(const Window& window, const ScalarVec& x, const ScalarVec& s) {
  if (vec_is_zero(x)) return window.contains(s) ? 0 : -1;
  constexpr std::int64_t cap = 1000000;
  std::int64_t k = -1;
  for (std::int64_t n = 0;; ++n) {
    ScalarVec probe = vec_sub(s, vec_scale(x, n));
    if (!window.contains(probe)) break;
    k = n;
    if (n > cap) throw std::domain_error("ell_steps: run does not terminate");
  }
  return k;
}

SubScheme::SubScheme(std::int64_t k_, Scheme lattice_, std::vector<Coords> representatives_)
    : k(k_), lattice(std::move(lattice_)), representatives(std::move(representatives_)) {
  for (std::size_t i = 0; i < representatives.size(); ++i) {
    Coords r = residue_of(representatives[i]);
    if (!residue_to_rep_.emplace(std::move(r), i).second)
      throw std::invalid_argument("subscheme: representatives collide modulo kL");
  }
}

Coords SubScheme::residue_of(const Coords& c) const {
  Coords r(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) r[i] = ((c[i] % k) + k) % k;
  return r;
}

std::size_t SubScheme::rep_index_of(const Coords& c) const {
  auto it = residue_to_rep_.find(residue_of(c));
  if (it == residue_to_rep_.end())
    throw std::logic_error("subscheme: residue system is incomplete");
  return it->second;
}

SubScheme build_subscheme(const Scheme& scheme, const DependencySet& dset) {
  std::int64_t k = 2 * dset.max_abs_coord() + 1;
  std::size_t n = scheme.total_dim();

  ScalarMat scaled(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      scaled.at(i, j) = scheme.basis().at(i, j) * Scalar::exact_int(k);
  Scheme lat = [&] {
    if (scheme.exact())
      return Scheme::custom_exact(scheme.physical_dim(), scheme.internal_dim(), scaled,
                                  scheme.root());
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) rows[i][j] = scaled.at(i, j).to_double();
    return Scheme::custom(scheme.physical_dim(), scheme.internal_dim(), rows);
  }();

  std::vector<Coords> reps = dset.elems();
  std::unordered_map<Coords, bool, CoordsHash> taken;
  auto residue = [&](const Coords& c) {
    Coords r(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) r[i] = ((c[i] % k) + k) % k;
    return r;
  };
  for (const auto& d : reps)
    if (!taken.emplace(residue(d), true).second)
      throw std::invalid_argument("subscheme: dependency elements collide modulo kL");

  // odometer over {0..k-1}^n fills the remaining cosets with themselves
  Coords c(n, 0);
  while (true) {
    if (!taken.count(c)) {
      taken.emplace(c, true);
      reps.push_back(c);
    }
    std::size_t i = 0;
    while (i < n && ++c[i] == k) c[i++] = 0;
    if (i == n) break;
  }

  std::size_t expect = 1;
  for (std::size_t i = 0; i < n; ++i) expect *= (std::size_t)k;
  if (reps.size() != expect) throw std::logic_error("subscheme: residue system incomplete");
  return SubScheme(k, std::move(lat), std::move(reps));
}

LevelSetFamily level_sets(const Window& window, const ScalarVec& delta) {
  LevelSetFamily fam;
  fam.delta = delta;
  if (vec_is_zero(delta)) {
    fam.ell = 0;
    fam.sets = {window};
    return fam;
  }
  constexpr std::int64_t cap = 1000000;
  Window reach = window; // points of W surviving k backward steps
  for (std::int64_t k = 0;; ++k) {
    if (k > cap) throw std::domain_error("level sets: displacement does not terminate");
    Window next_shift = window.translated(vec_scale(delta, k + 1));
    fam.sets.push_back(reach.subtract(next_shift));
    reach = reach.intersect(next_shift);
    if (reach.empty()) {
      fam.ell = k;
      break;
    }
  }
  return fam;
}

Partition partition(const Scheme& scheme, const Window& window, const DependencySet& dset,
                    const Coords& g, const Region& region) {
  SubScheme sub = build_subscheme(scheme, dset);
  std::size_t g_rep = sub.rep_index_of(g);

  ScalarVec delta = vec_sub(scheme.star(g), scheme.star(sub.representatives[g_rep]));
  LevelSetFamily fam = level_sets(window, delta);

  Partition part{std::move(sub), std::move(fam), g, g_rep, {}, {}};
  if (scheme.name() == "custom")
    part.notes.push_back("internal span of the sublattice assumed dense; not verified "
                         "for custom bases");

  for (std::size_t c = 0; c < part.sub.representatives.size(); ++c) {
    const Coords& rep = part.sub.representatives[c];
    ScalarVec rep_phys = scheme.physical(rep);
    ScalarVec rep_star = scheme.star(rep);
    Region shifted{vec_sub(region.lo, rep_phys), vec_sub(region.hi, rep_phys)};
    for (std::int64_t lvl = 0; lvl <= part.family.ell; ++lvl) {
      PartitionCell cell;
      cell.coset = c;
      cell.level = lvl;
      cell.representative = rep;
      cell.window = part.family.sets[(std::size_t)lvl].translated(vec_neg(rep_star));
      if (cell.window.empty()) continue;
      for (const auto& p : enumerate_points(part.sub.lattice, cell.window, shifted)) {
        Coords parent(p.coords.size());
        for (std::size_t i = 0; i < p.coords.size(); ++i)
          parent[i] = rep[i] + part.sub.k * p.coords[i];
        cell.points.push_back(scheme.make_point(parent));
      }
      part.cells.push_back(std::move(cell));
    }
  }
  return part;
}

bool verify_cell_separation(const PartitionCell& cell, const Coords& g,
                            const DependencySet& dset) {
  for (std::size_t i = 0; i < cell.points.size(); ++i)
    for (std::size_t j = i + 1; j < cell.points.size(); ++j) {
      const Coords& s = cell.points[i].coords;
      const Coords& t = cell.points[j].coords;
      if (!separation_check({s, coords_sub(s, g)}, {t, coords_sub(t, g)}, dset)) return false;
    }
  return true;
}

PartitionCheck check_partition(const Partition& part, const Scheme& scheme,
                               const Window& window, const DependencySet& dset,
                               const Region& region) {
  PartitionCheck out;
  auto pts = enumerate_points(scheme, window, region);
  out.lattice_points = pts.size();

  std::map<Coords, int> counts;
  for (const auto& cell : part.cells)
    for (const auto& p : cell.points) {
      ++counts[p.coords];
      ++out.cell_points;
    }

  constexpr std::size_t max_witness = 8;
  std::map<Coords, bool> in_lattice;
  for (const auto& p : pts) in_lattice.emplace(p.coords, true);
  for (const auto& p : pts)
    if (!counts.count(p.coords) && out.missing.size() < max_witness)
      out.missing.push_back(p.coords);
  for (const auto& [c, n] : counts) {
    if (n > 1 && out.duplicated.size() < max_witness) out.duplicated.push_back(c);
    if (!in_lattice.count(c) && out.extra.size() < max_witness) out.extra.push_back(c);
  }
  out.exact_cover = out.missing.empty() && out.extra.empty() && out.duplicated.empty() &&
                    out.lattice_points == out.cell_points;

  out.separation_ok = true;
  for (const auto& cell : part.cells)
    if (!verify_cell_separation(cell, part.g, dset)) out.separation_ok = false;
  return out;
}

} // namespace qcdiff
