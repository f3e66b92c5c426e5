#include "etaforge/enumerate.hpp"

#include "etaforge/arith.hpp"
#include "etaforge/exactla.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace etaforge {

namespace {

using IntMatrix = std::vector<std::vector<Integer>>;  // [row][col]

std::int64_t to_int64(const Integer& x) {
  if (!x.fits_slong_p()) {
    throw std::overflow_error("lattice basis entry does not fit in 64 bits");
  }
  return x.get_si();
}

void column_axpy(IntMatrix& m, std::size_t dst, std::size_t src, const Integer& factor) {
  for (auto& row : m) {
    row[dst] -= factor * row[src];
  }
}

void column_swap(IntMatrix& m, std::size_t a, std::size_t b) {
  for (auto& row : m) {
    std::swap(row[a], row[b]);
  }
}

void column_scale(IntMatrix& m, std::size_t c, const Integer& factor) {
  for (auto& row : m) {
    row[c] *= factor;
  }
}

struct Congruence {
  std::vector<std::int64_t> coeffs;
  std::int64_t modulus;
};

std::vector<Congruence> newman_congruences(std::int64_t level, const std::vector<std::int64_t>& divs) {
  std::vector<Congruence> out;
  Congruence lower{{}, 24};
  Congruence upper{{}, 24};
  for (std::int64_t d : divs) {
    lower.coeffs.push_back(d);
    upper.coeffs.push_back(level / d);
  }
  out.push_back(std::move(lower));
  out.push_back(std::move(upper));
  for (const auto& [p, e] : factorize(level)) {
    Congruence sq{{}, 2};
    for (std::int64_t d : divs) {
      sq.coeffs.push_back(valuation(d, p));
    }
    out.push_back(std::move(sq));
  }
  return out;
}

/// Columns of the returned matrix form a basis of {r in Z^l : all congruences hold}.
IntMatrix congruence_lattice(std::size_t l, const std::vector<Congruence>& constraints) {
  IntMatrix basis(l, std::vector<Integer>(l, 0));
  for (std::size_t i = 0; i < l; ++i) {
    basis[i][i] = 1;
  }
  for (const Congruence& con : constraints) {
    const Integer m(static_cast<long>(con.modulus));
    std::vector<Integer> a(l);
    for (std::size_t c = 0; c < l; ++c) {
      Integer s = 0;
      for (std::size_t i = 0; i < l; ++i) {
        s += basis[i][c] * con.coeffs[i];
      }
      mpz_fdiv_r(s.get_mpz_t(), s.get_mpz_t(), m.get_mpz_t());
      a[c] = s;
    }
    for (std::size_t c = 1; c < l; ++c) {
      while (a[c] != 0) {
        const Integer q = a[0] / a[c];
        column_axpy(basis, 0, c, q);
        a[0] -= q * a[c];
        column_swap(basis, 0, c);
        std::swap(a[0], a[c]);
      }
    }
    Integer g;
    mpz_gcd(g.get_mpz_t(), a[0].get_mpz_t(), m.get_mpz_t());
    column_scale(basis, 0, m / g);
  }
  return basis;
}

struct LatticeWalk {
  std::size_t dim = 0;
  std::vector<std::size_t> order;           // walk coordinate j -> cusp index
  std::vector<std::vector<std::int64_t>> h;  // lower triangular, walk coordinates
  std::vector<std::vector<std::int64_t>> c;  // exponents = c * t
  std::vector<std::int64_t> eps;             // per walk coordinate
  std::int64_t total = 0;
};

/// Hermite form H = W U (lower triangular, positive diagonal) with U tracked
/// through `track`. W may have fewer rows than columns. Returns false if the
/// rows of W are dependent.
bool lower_hermite(IntMatrix& w, IntMatrix& track) {
  const std::size_t rows = w.size();
  const std::size_t cols = rows == 0 ? 0 : w[0].size();
  for (std::size_t j = 0; j < rows; ++j) {
    for (std::size_t i = j + 1; i < cols; ++i) {
      while (w[j][i] != 0) {
        const Integer q = w[j][j] / w[j][i];
        column_axpy(w, j, i, q);
        column_axpy(track, j, i, q);
        column_swap(w, j, i);
        column_swap(track, j, i);
      }
    }
    if (w[j][j] == 0) {
      return false;
    }
    if (w[j][j] < 0) {
      column_scale(w, j, Integer(-1));
      column_scale(track, j, Integer(-1));
    }
    for (std::size_t c = 0; c < j; ++c) {
      Integer q;
      mpz_fdiv_q(q.get_mpz_t(), w[j][c].get_mpz_t(), w[j][j].get_mpz_t());
      if (q != 0) {
        column_axpy(w, c, j, q);
        column_axpy(track, c, j, q);
      }
    }
  }
  return true;
}

std::optional<LatticeWalk> build_walk(std::int64_t level, int weight, const std::vector<std::int64_t>& divs,
                                      const std::vector<std::vector<std::int64_t>>& order_matrix) {
  const std::size_t l = divs.size();
  LatticeWalk walk;
  walk.dim = l;
  walk.total = 2 * static_cast<std::int64_t>(weight) * index_gamma0(level);

  IntMatrix basis = congruence_lattice(l, newman_congruences(level, divs));
  IntMatrix image(l, std::vector<Integer>(l, 0));
  for (std::size_t cusp = 0; cusp < l; ++cusp) {
    for (std::size_t col = 0; col < l; ++col) {
      Integer s = 0;
      for (std::size_t i = 0; i < l; ++i) {
        s += basis[i][col] * order_matrix[cusp][i];
      }
      image[cusp][col] = s;
    }
  }

  // Greedy coordinate order: next take the cusp whose coordinate has the
  // fewest admissible values given the ones already fixed, i.e. range T/eps
  // divided by the new Hermite diagonal entry. Front-loading the lattice
  // constraints keeps the number of dead-end prefixes small.
  std::vector<bool> used(l, false);
  IntMatrix prefix;
  Integer prefix_det = 1;
  IntMatrix no_track;
  for (std::size_t step = 0; step < l; ++step) {
    std::optional<std::size_t> best;
    Rational best_choices;
    Integer best_det;
    for (std::size_t cusp = 0; cusp < l; ++cusp) {
      if (used[cusp]) {
        continue;
      }
      IntMatrix trial = prefix;
      trial.push_back(image[cusp]);
      if (!lower_hermite(trial, no_track)) {
        return std::nullopt;
      }
      Integer det = 1;
      for (std::size_t j = 0; j < trial.size(); ++j) {
        det *= trial[j][j];
      }
      const Rational choices(Integer(walk.total / cusp_multiplicity(level, divs[cusp])) * prefix_det, det);
      if (!best || choices < best_choices) {
        best = cusp;
        best_choices = choices;
        best_det = det;
      }
    }
    used[*best] = true;
    walk.order.push_back(*best);
    prefix.push_back(image[*best]);
    prefix_det = best_det;
  }

  IntMatrix w(l);
  for (std::size_t j = 0; j < l; ++j) {
    w[j] = image[walk.order[j]];
  }
  if (!lower_hermite(w, basis)) {
    return std::nullopt;
  }
  walk.h.assign(l, std::vector<std::int64_t>(l, 0));
  walk.c.assign(l, std::vector<std::int64_t>(l, 0));
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      walk.h[i][j] = to_int64(w[i][j]);
      walk.c[i][j] = to_int64(basis[i][j]);
    }
  }
  for (std::size_t j = 0; j < l; ++j) {
    walk.eps.push_back(cusp_multiplicity(level, divs[walk.order[j]]));
  }
  return walk;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) {
    --q;
  }
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

class Walker {
 public:
  Walker(const LatticeWalk& walk, std::int64_t level, std::atomic<std::int64_t>& nodes, std::int64_t budget)
      : walk_(walk), level_(level), nodes_(nodes), budget_(budget), acc_(walk.dim + 1, std::vector<std::int64_t>(walk.dim, 0)),
        t_(walk.dim, 0) {}

  /// Walks the subtree below t_0 = first.
  void run_from(std::int64_t first) {
    descend_with(0, first, walk_.total);
  }

  std::pair<std::int64_t, std::int64_t> first_range() const {
    return coordinate_range(0, walk_.total);
  }

  std::vector<std::vector<int>>& results() { return results_; }

 private:
  std::pair<std::int64_t, std::int64_t> coordinate_range(std::size_t j, std::int64_t remaining) const {
    const std::int64_t base = acc_[j][j];
    const std::int64_t h = walk_.h[j][j];
    const std::int64_t w_max = remaining / walk_.eps[j];
    return {ceil_div(-base, h), floor_div(w_max - base, h)};
  }

  void descend_with(std::size_t j, std::int64_t t, std::int64_t remaining) {
    if (nodes_.fetch_add(1, std::memory_order_relaxed) >= budget_) {
      throw EnumerationBudgetExceeded("eta quotient enumeration at level " + std::to_string(level_) +
                                      " exceeded its node budget of " + std::to_string(budget_));
    }
    const std::size_t l = walk_.dim;
    t_[j] = t;
    const std::int64_t w = acc_[j][j] + walk_.h[j][j] * t;
    const std::int64_t rest = remaining - walk_.eps[j] * w;
    for (std::size_t i = j + 1; i < l; ++i) {
      acc_[j + 1][i] = acc_[j][i] + walk_.h[i][j] * t;
    }
    const std::size_t next = j + 1;
    if (next + 1 == l) {
      finish(rest);
      return;
    }
    const auto [lo, hi] = coordinate_range(next, rest);
    for (std::int64_t u = lo; u <= hi; ++u) {
      descend_with(next, u, rest);
    }
  }

  void finish(std::int64_t remaining) {
    const std::size_t j = walk_.dim - 1;
    const std::int64_t e = walk_.eps[j];
    if (remaining < 0 || remaining % e != 0) {
      return;
    }
    const std::int64_t w = remaining / e;
    const std::int64_t diff = w - acc_[j][j];
    if (diff % walk_.h[j][j] != 0) {
      return;
    }
    t_[j] = diff / walk_.h[j][j];
    std::vector<int> r(walk_.dim);
    for (std::size_t i = 0; i < walk_.dim; ++i) {
      std::int64_t s = 0;
      for (std::size_t k = 0; k < walk_.dim; ++k) {
        s += walk_.c[i][k] * t_[k];
      }
      r[i] = static_cast<int>(s);
    }
    results_.push_back(std::move(r));
  }

  const LatticeWalk& walk_;
  std::int64_t level_;
  std::atomic<std::int64_t>& nodes_;
  std::int64_t budget_;
  std::vector<std::vector<std::int64_t>> acc_;
  std::vector<std::int64_t> t_;
  std::vector<std::vector<int>> results_;
};

EnumerationResult finalize(std::int64_t level, int weight, std::vector<std::vector<int>> exps) {
  std::sort(exps.begin(), exps.end());
  exps.erase(std::unique(exps.begin(), exps.end()), exps.end());
  EnumerationResult out;
  out.level = level;
  out.weight = weight;
  out.quotients.reserve(exps.size());
  for (auto& r : exps) {
    out.quotients.emplace_back(level, std::move(r));
  }
  return out;
}

}  // namespace

std::vector<std::vector<std::int64_t>> scaled_order_matrix(std::int64_t level) {
  const std::vector<std::int64_t> divs = divisors(level);
  std::vector<std::vector<std::int64_t>> m(divs.size(), std::vector<std::int64_t>(divs.size(), 0));
  for (std::size_t j = 0; j < divs.size(); ++j) {
    const std::int64_t d = divs[j];
    const std::int64_t g = std::gcd(d, level / d);
    for (std::size_t i = 0; i < divs.size(); ++i) {
      const std::int64_t gi = std::gcd(d, divs[i]);
      // N gcd^2 / (g d d_i) is integral; divide in an order that stays exact.
      m[j][i] = (level / divs[i]) * gi / d * gi / g;
    }
  }
  return m;
}

EnumerationResult enumerate_eta_quotients(std::int64_t level, int weight, const EnumerationOptions& options) {
  if (level < 1) {
    throw std::invalid_argument("level must be positive");
  }
  if (weight < 0 || weight % 2 != 0) {
    throw std::invalid_argument("weight must be a nonnegative even integer");
  }
  const std::vector<std::int64_t> divs = divisors(level);
  const auto order_matrix = scaled_order_matrix(level);
  const std::int64_t mu = index_gamma0(level);
  for (std::size_t i = 0; i < divs.size(); ++i) {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < divs.size(); ++j) {
      s += cusp_multiplicity(level, divs[j]) * order_matrix[j][i];
    }
    if (s != mu) {
      throw std::logic_error("valence identity fails for the order matrix at level " + std::to_string(level));
    }
  }

  const std::optional<LatticeWalk> walk = build_walk(level, weight, divs, order_matrix);
  if (!walk) {
    return box_scan_eta_quotients(level, weight, 30);
  }
  if (walk->dim == 1) {
    // Level 1: a single coordinate fixed by the valence identity.
    std::vector<std::vector<int>> exps;
    if (walk->total % (walk->eps[0] * walk->h[0][0]) == 0) {
      const std::int64_t t = walk->total / walk->eps[0] / walk->h[0][0];
      exps.push_back({static_cast<int>(walk->c[0][0] * t)});
    }
    return finalize(level, weight, std::move(exps));
  }

  std::atomic<std::int64_t> nodes{0};
  Walker probe(*walk, level, nodes, options.node_budget);
  const auto [lo, hi] = probe.first_range();
  const int workers = std::max(1, options.workers);
  std::vector<std::vector<std::vector<int>>> parts(static_cast<std::size_t>(workers));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  const auto job = [&](int id) {
    try {
      Walker walker(*walk, level, nodes, options.node_budget);
      for (std::int64_t t = lo + id; t <= hi; t += workers) {
        walker.run_from(t);
      }
      parts[static_cast<std::size_t>(id)] = std::move(walker.results());
    } catch (...) {
      errors[static_cast<std::size_t>(id)] = std::current_exception();
    }
  };
  if (workers == 1) {
    job(0);
  } else {
    std::vector<std::thread> threads;
    for (int id = 0; id < workers; ++id) {
      threads.emplace_back(job, id);
    }
    for (auto& th : threads) {
      th.join();
    }
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  std::vector<std::vector<int>> all;
  for (auto& p : parts) {
    all.insert(all.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return finalize(level, weight, std::move(all));
}

EnumerationResult box_scan_eta_quotients(std::int64_t level, int weight, int radius) {
  return box_scan_eta_quotients(level, weight, std::vector<std::int64_t>(divisors(level).size(), radius));
}

EnumerationResult box_scan_eta_quotients(std::int64_t level, int weight, const std::vector<std::int64_t>& bounds) {
  const std::vector<std::int64_t> divs = divisors(level);
  const auto m = scaled_order_matrix(level);
  const std::size_t l = divs.size();
  if (bounds.size() != l || std::any_of(bounds.begin(), bounds.end(), [](std::int64_t b) { return b < 0; })) {
    throw std::invalid_argument("box scan needs one nonnegative bound per divisor");
  }
  const std::int64_t target = 2 * static_cast<std::int64_t>(weight);

  // For each cusp j and suffix start i, the free coordinates i..l-1 sorted by
  // decreasing coefficient m[j][k].
  std::vector<std::vector<std::vector<std::size_t>>> by_coeff(l, std::vector<std::vector<std::size_t>>(l + 1));
  for (std::size_t j = 0; j < l; ++j) {
    for (std::size_t i = 0; i <= l; ++i) {
      auto& ks = by_coeff[j][i];
      for (std::size_t k = i; k < l; ++k) {
        ks.push_back(k);
      }
      std::stable_sort(ks.begin(), ks.end(), [&](std::size_t a, std::size_t b) { return m[j][a] > m[j][b]; });
    }
  }

  std::vector<std::vector<int>> found;
  std::vector<int> r(l, 0);
  std::vector<std::int64_t> partial(l, 0);

  std::vector<std::int64_t> suffix(l + 1, 0);
  for (std::size_t i = l; i-- > 0;) {
    suffix[i] = suffix[i + 1] + bounds[i];
  }

  // Largest value of sum_{k >= i} m[j][k] r_k over the box with the coordinate
  // sum fixed to s: start every coordinate at its lower bound and spend the
  // surplus on the largest coefficients first.
  const auto best_completion = [&](std::size_t j, std::size_t i, std::int64_t s) {
    std::int64_t surplus = s + suffix[i];
    std::int64_t value = 0;
    for (std::size_t k : by_coeff[j][i]) {
      const std::int64_t step = std::min<std::int64_t>(surplus, 2 * bounds[k]);
      value += m[j][k] * (step - bounds[k]);
      surplus -= step;
    }
    return value;
  };
  // Smallest value of the same sum: spend the surplus on the smallest coefficients.
  const auto worst_completion = [&](std::size_t j, std::size_t i, std::int64_t s) {
    std::int64_t surplus = s + suffix[i];
    std::int64_t value = 0;
    const auto& ks = by_coeff[j][i];
    for (auto it = ks.rbegin(); it != ks.rend(); ++it) {
      const std::int64_t step = std::min<std::int64_t>(surplus, 2 * bounds[*it]);
      value += m[j][*it] * (step - bounds[*it]);
      surplus -= step;
    }
    return value;
  };
  // The valence identity caps each scaled order once all the others are nonnegative.
  const std::int64_t total = 2 * static_cast<std::int64_t>(weight) * index_gamma0(level);
  std::vector<std::int64_t> order_cap(l);
  for (std::size_t j = 0; j < l; ++j) {
    order_cap[j] = total / cusp_multiplicity(level, divs[j]);
  }

  const auto recurse = [&](auto&& self, std::size_t i, std::int64_t sum) -> void {
    if (i == l) {
      if (sum == target && is_holomorphic(EtaQuotient(level, r))) {
        found.push_back(r);
      }
      return;
    }
    const std::int64_t rest = suffix[i + 1];
    for (auto v = static_cast<int>(-bounds[i]); v <= bounds[i]; ++v) {
      const std::int64_t s = target - sum - v;
      if (s < -rest || s > rest) {
        continue;
      }
      bool feasible = true;
      for (std::size_t j = 0; j < l && feasible; ++j) {
        const std::int64_t fixed = partial[j] + m[j][i] * v;
        feasible = fixed + best_completion(j, i + 1, s) >= 0 && fixed + worst_completion(j, i + 1, s) <= order_cap[j];
      }
      if (!feasible) {
        continue;
      }
      r[i] = v;
      for (std::size_t j = 0; j < l; ++j) {
        partial[j] += m[j][i] * v;
      }
      self(self, i + 1, sum + v);
      for (std::size_t j = 0; j < l; ++j) {
        partial[j] -= m[j][i] * v;
      }
    }
    r[i] = 0;
  };
  recurse(recurse, 0, 0);
  return finalize(level, weight, std::move(found));
}

std::vector<std::int64_t> exponent_bounds(std::int64_t level, int weight) {
  const std::vector<std::int64_t> divs = divisors(level);
  const auto m = scaled_order_matrix(level);
  const auto l = static_cast<Eigen::Index>(divs.size());
  Matrix<Rational> a(l, l);
  for (Eigen::Index j = 0; j < l; ++j) {
    for (Eigen::Index i = 0; i < l; ++i) {
      a(j, i) = Rational(m[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
    }
  }
  const auto inv = inverse<Rational>(a);
  if (!inv) {
    throw std::domain_error("order matrix is singular at level " + std::to_string(level));
  }
  const std::int64_t total = 2 * static_cast<std::int64_t>(weight) * index_gamma0(level);
  std::vector<std::int64_t> bounds;
  for (Eigen::Index i = 0; i < l; ++i) {
    Rational best = 0;
    for (Eigen::Index j = 0; j < l; ++j) {
      Rational v = abs((*inv)(i, j)) * total / cusp_multiplicity(level, divs[static_cast<std::size_t>(j)]);
      if (v > best) {
        best = v;
      }
    }
    Integer c;
    mpz_cdiv_q(c.get_mpz_t(), best.get_num_mpz_t(), best.get_den_mpz_t());
    bounds.push_back(c.get_si());
  }
  return bounds;
}

void save_enumeration(const EnumerationResult& result, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out << "# level=" << result.level << " weight=" << result.weight << " count=" << result.count() << '\n';
    for (const auto& q : result.quotients) {
      out << to_string(q) << '\n';
    }
    if (!out) {
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

EnumerationResult load_enumeration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::string header;
  std::getline(in, header);
  EnumerationResult out;
  long long count = -1;
  if (std::sscanf(header.c_str(), "# level=%ld weight=%d count=%lld", &out.level, &out.weight, &count) != 3) {
    throw std::runtime_error(path.string() + ": malformed header");
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    out.quotients.push_back(parse_eta_quotient(line));
    if (out.quotients.back().level() != out.level) {
      throw std::runtime_error(path.string() + ": quotient level does not match header");
    }
  }
  if (out.count() != count) {
    throw std::runtime_error(path.string() + ": header count " + std::to_string(count) + " but " +
                             std::to_string(out.count()) + " quotients listed");
  }
  return out;
}

EnumerationResult cached_enumeration(std::int64_t level, int weight, const std::optional<std::filesystem::path>& cache_dir,
                                     const EnumerationOptions& options) {
  if (!cache_dir) {
    return enumerate_eta_quotients(level, weight, options);
  }
  const std::filesystem::path path =
      *cache_dir / "quotients" / ("eta_" + std::to_string(level) + "_" + std::to_string(weight) + ".txt");
  if (std::filesystem::exists(path)) {
    return load_enumeration(path);
  }
  EnumerationResult result = enumerate_eta_quotients(level, weight, options);
  save_enumeration(result, path);
  return result;
}

}  // namespace etaforge
