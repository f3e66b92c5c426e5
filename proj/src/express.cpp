#include "etaforge/express.hpp"

#include "etaforge/arith.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <type_traits>
#include <unordered_map>

namespace etaforge {

InsufficientCoefficients::InsufficientCoefficients(const std::string& label, std::int64_t required, std::int64_t available)
    : std::runtime_error(label + ": needs coefficients a_1..a_" + std::to_string(required) + " but only " +
                         std::to_string(available) + " are available"),
      required_(required),
      available_(available) {}

Vector<Rational> target_coefficients(const TargetForm& f, std::int64_t bound) {
  if (bound < 0) {
    throw std::invalid_argument("target_coefficients: negative bound");
  }
  if (static_cast<std::int64_t>(f.an.size()) < bound) {
    throw InsufficientCoefficients(f.label, bound, static_cast<std::int64_t>(f.an.size()));
  }
  Vector<Rational> out(bound + 1);
  out(0) = 0;
  for (std::int64_t n = 1; n <= bound; ++n) {
    out(n) = Rational(f.an[static_cast<std::size_t>(n - 1)]);
  }
  return out;
}

void validate_expression(const Expression& e) {
  std::set<std::vector<int>> seen;
  std::optional<Rational> common_weight;
  for (const Term& t : e.terms) {
    if (t.coef == 0) {
      throw std::invalid_argument("expression has a zero coefficient on " + to_string(t.quotient));
    }
    if (t.quotient.level() != e.level) {
      throw std::invalid_argument("quotient " + to_string(t.quotient) + " is not at level " + std::to_string(e.level));
    }
    if (!seen.insert(t.quotient.exponents()).second) {
      throw std::invalid_argument("quotient " + to_string(t.quotient) + " appears twice");
    }
    const Rational w = weight(t.quotient);
    if (common_weight && *common_weight != w) {
      throw std::invalid_argument("expression mixes weights");
    }
    common_weight = w;
  }
}

Integer height_product(const Expression& e) {
  Integer out = 1;
  for (const Term& t : e.terms) {
    if (t.coef == 0) {
      throw std::invalid_argument("height of a zero coefficient is undefined");
    }
    out *= abs(t.coef.get_num()) * t.coef.get_den();
  }
  return out;
}

SizeOrder size_order(const Expression& a, const Expression& b) {
  if (a.length() != b.length()) {
    return a.length() < b.length() ? SizeOrder::Smaller : SizeOrder::Larger;
  }
  const int c = cmp(height_product(a), height_product(b));
  if (c == 0) {
    return SizeOrder::Equivalent;
  }
  return c < 0 ? SizeOrder::Smaller : SizeOrder::Larger;
}

Vector<Rational> expression_coefficients(const Expression& e, std::int64_t bound) {
  Vector<Rational> out(bound + 1);
  for (std::int64_t i = 0; i <= bound; ++i) {
    out(i) = 0;
  }
  for (const Term& t : e.terms) {
    const CoeffVector<Integer> c = form_coefficients<Integer>(t.quotient, bound);
    for (std::int64_t i = 0; i <= bound; ++i) {
      if (c(i) != 0) {
        out(i) += t.coef * c(i);
      }
    }
  }
  return out;
}

bool verify_expression(const Expression& e, const TargetForm& f) {
  validate_expression(e);
  if (e.level % f.level != 0) {
    return false;
  }
  for (const Term& t : e.terms) {
    if (weight(t.quotient) != f.weight) {
      return false;
    }
  }
  const std::int64_t bound = sturm_bound(e.level, f.weight);
  const Vector<Rational> target = target_coefficients(f, bound);
  const Vector<Rational> got = expression_coefficients(e, bound);
  for (std::int64_t i = 0; i <= bound; ++i) {
    if (got(i) != target(i)) {
      return false;
    }
  }
  return true;
}

std::string to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::ProvedMinimal:
      return "proved-minimal";
    case SearchStatus::InferredMinimal:
      return "inferred-minimal";
    case SearchStatus::Bounded:
      return "bounded";
    case SearchStatus::NoneFound:
      return "none-found";
  }
  return "none-found";
}

SearchStatus parse_search_status(std::string_view text) {
  for (SearchStatus s : {SearchStatus::ProvedMinimal, SearchStatus::InferredMinimal, SearchStatus::Bounded,
                         SearchStatus::NoneFound}) {
    if (text == to_string(s)) {
      return s;
    }
  }
  throw std::invalid_argument("unknown search status '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Quotient tables

QuotientTable::QuotientTable(std::vector<EtaQuotient> quotients, std::int64_t bound, int workers)
    : bound_(bound), quotients_(std::move(quotients)) {
  if (bound < 0) {
    throw std::invalid_argument("QuotientTable: negative bound");
  }
  if (!quotients_.empty()) {
    level_ = quotients_.front().level();
  }
  for (const EtaQuotient& q : quotients_) {
    if (q.level() != level_) {
      throw std::invalid_argument("QuotientTable: quotients at different levels");
    }
  }
  residues_.resize(quotients_.size());
  exact_.resize(quotients_.size());
  exact_once_ = std::make_unique<std::once_flag[]>(quotients_.size());
  const auto fill = [&](std::size_t start, std::size_t step) {
    for (std::size_t i = start; i < quotients_.size(); i += step) {
      residues_[i] = form_coefficients<ModP>(quotients_[i], bound_);
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, workers));
  if (count == 1) {
    fill(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < count; ++w) {
      threads.emplace_back(fill, w, count);
    }
    for (auto& t : threads) {
      t.join();
    }
  }
}

QuotientTable::QuotientTable(const EnumerationResult& quotients, std::int64_t bound, int workers)
    : QuotientTable(quotients.quotients, bound, workers) {
  level_ = quotients.level;
}

const Vector<Rational>& QuotientTable::exact(std::size_t i) const {
  std::call_once(exact_once_[i], [&] {
    const CoeffVector<Integer> c = form_coefficients<Integer>(quotients_[i], bound_);
    Vector<Rational> v(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      v(j) = Rational(c(j));
    }
    exact_[i] = std::move(v);
  });
  return exact_[i];
}

namespace {

// ---------------------------------------------------------------------------
// Shared search machinery

struct Context {
  const QuotientTable& table;
  Vector<Rational> target_exact;
  Vector<ModP> target_mod;

  Context(const QuotientTable& t, const TargetForm& f)
      : table(t), target_exact(target_coefficients(f, t.bound())), target_mod(reduce_mod_p(target_exact)) {}
};

template <class Scalar>
const Vector<Scalar>& vec(const Context& ctx, std::size_t i) {
  if constexpr (std::is_same_v<Scalar, ModP>) {
    return ctx.table.residues(i);
  } else {
    return ctx.table.exact(i);
  }
}

template <class Scalar>
const Vector<Scalar>& target_vec(const Context& ctx) {
  if constexpr (std::is_same_v<Scalar, ModP>) {
    return ctx.target_mod;
  } else {
    return ctx.target_exact;
  }
}

std::uint64_t mix(std::uint64_t h, std::uint64_t x) {
  h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 31;
  h *= 0xbf58476d1ce4e5b9ULL;
  return h ^ (h >> 29);
}

std::uint64_t scalar_hash(const ModP& x) { return x.value(); }

std::uint64_t scalar_hash(const Rational& x) {
  const std::uint64_t n = mpz_get_ui(x.get_num_mpz_t()) ^ (mpz_sgn(x.get_num_mpz_t()) < 0 ? 0x5bd1e995ULL : 0ULL);
  return mix(n, mpz_get_ui(x.get_den_mpz_t()));
}

template <class Scalar>
bool is_zero_vec(const Vector<Scalar>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != Scalar(0)) {
      return false;
    }
  }
  return true;
}

bool colex_less(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) {
    return a.size() < b.size();
  }
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a[i] != b[i]) {
      return a[i] < b[i];
    }
  }
  return false;
}

/// Exact relation f = sum coefs[i] * quotient(subset[i]) with no zero coefficient.
struct Candidate {
  std::vector<std::size_t> subset;
  std::vector<Rational> coefs;
  Integer height;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.subset.size() != b.subset.size()) {
    return a.subset.size() < b.subset.size();
  }
  if (const int c = cmp(a.height, b.height); c != 0) {
    return c < 0;
  }
  return colex_less(a.subset, b.subset);
}

std::optional<Candidate> confirm(const Context& ctx, const std::vector<std::size_t>& subset) {
  std::vector<Vector<Rational>> basis;
  basis.reserve(subset.size());
  for (std::size_t i : subset) {
    basis.push_back(ctx.table.exact(i));
  }
  const auto sol = solve_in_span(basis, ctx.target_exact);
  if (!sol) {
    return std::nullopt;
  }
  Candidate c;
  c.height = 1;
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const Rational& a = (*sol)[k];
    if (a != 0) {
      c.subset.push_back(subset[k]);
      c.coefs.push_back(a);
      c.height *= abs(a.get_num()) * a.get_den();
    }
  }
  return c;
}

Expression to_expression(const QuotientTable& table, const Candidate& c) {
  Expression e;
  e.level = table.level();
  for (std::size_t k = 0; k < c.subset.size(); ++k) {
    e.terms.push_back(Term{c.coefs[k], table.quotient(c.subset[k])});
  }
  return e;
}

/// Is quotient z in the exact span of the prefix (and the target, when asked)?
bool exactly_dependent(const Context& ctx, const std::vector<std::size_t>& prefix, std::size_t z, bool with_target) {
  std::vector<Vector<Rational>> basis;
  if (with_target) {
    basis.push_back(ctx.target_exact);
  }
  for (std::size_t i : prefix) {
    basis.push_back(ctx.table.exact(i));
  }
  return solve_in_span(basis, ctx.table.exact(z)).has_value();
}

using Propose = std::function<void(std::vector<std::size_t>)>;

/// A prefix P of quotients with everything reduced modulo span(P): the target
/// t (nonzero, so f is not in span(P)) and the remaining candidates.
template <class Scalar>
struct Level {
  EchelonBasis<Scalar> basis;
  Vector<Scalar> target;
  Eigen::Index lead = 0;  // first nonzero entry of target
  std::vector<std::size_t> prefix;
  std::vector<std::size_t> cand;
  std::vector<Vector<Scalar>> images;

  explicit Level(Eigen::Index dim) : basis(dim) {}
};

template <class Scalar>
Eigen::Index first_nonzero(const Vector<Scalar>& v) {
  Eigen::Index i = 0;
  while (i < v.size() && v(i) == Scalar(0)) {
    ++i;
  }
  return i;
}

/// Subtracts v[p] times `row` from v.
template <class Scalar>
void eliminate(Vector<Scalar>& v, const Vector<Scalar>& row, Eigen::Index p) {
  const Scalar f = v(p);
  if (f == Scalar(0)) {
    return;
  }
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (row(j) != Scalar(0)) {
      v(j) = v(j) - f * row(j);
    }
  }
}

/// Splits a reduced image y as y = a t + y' with y'[lead] = 0. Then y' is
/// the image modulo span(P, f) and a is the coordinate along the target.
template <class Scalar>
Scalar split_target(const Level<Scalar>& lv, const Vector<Scalar>& y, Vector<Scalar>& rest) {
  const Scalar a = y(lv.lead) / lv.target(lv.lead);
  rest = y;
  if (a != Scalar(0)) {
    for (Eigen::Index j = lv.lead; j < y.size(); ++j) {
      if (lv.target(j) != Scalar(0)) {
        rest(j) = rest(j) - a * lv.target(j);
      }
    }
  }
  return a;
}

/// Nullopt when the target already lies in span(prefix) over Scalar.
template <class Scalar>
std::optional<Level<Scalar>> root_level(const Context& ctx, const std::vector<std::size_t>& prefix,
                                        const std::vector<std::size_t>& cand) {
  Level<Scalar> lv(ctx.table.bound() + 1);
  for (std::size_t i : prefix) {
    if (!lv.basis.insert(vec<Scalar>(ctx, i))) {
      throw std::logic_error("root_level: dependent prefix");
    }
  }
  lv.target = lv.basis.reduce(target_vec<Scalar>(ctx));
  lv.lead = first_nonzero(lv.target);
  if (lv.lead == lv.target.size()) {
    return std::nullopt;
  }
  lv.prefix = prefix;
  lv.cand = cand;
  lv.images.reserve(cand.size());
  for (std::size_t i : cand) {
    lv.images.push_back(lv.basis.reduce(vec<Scalar>(ctx, i)));
  }
  return lv;
}

/// Moves candidate k into the prefix; its image must not lie in span(P, f).
/// Later candidates are kept, or all others when `keep_all`.
template <class Scalar>
Level<Scalar> extend(const Level<Scalar>& lv, std::size_t k, bool keep_all = false) {
  Level<Scalar> child(lv.basis.dim());
  child.basis = lv.basis;
  child.prefix = lv.prefix;
  child.prefix.push_back(lv.cand[k]);
  child.basis.insert(lv.images[k]);
  const Vector<Scalar>& row = child.basis.rows().back();
  const Eigen::Index p = child.basis.pivots().back();
  const auto skip = static_cast<std::ptrdiff_t>(k);
  if (keep_all) {
    child.cand = lv.cand;
    child.images = lv.images;
    child.cand.erase(child.cand.begin() + skip);
    child.images.erase(child.images.begin() + skip);
  } else {
    child.cand.assign(lv.cand.begin() + skip + 1, lv.cand.end());
    child.images.assign(lv.images.begin() + skip + 1, lv.images.end());
  }
  for (auto& img : child.images) {
    eliminate(img, row, p);
  }
  child.target = lv.target;
  eliminate(child.target, row, p);
  child.lead = first_nonzero(child.target);
  return child;
}

std::vector<std::size_t> with(std::vector<std::size_t> base, std::initializer_list<std::size_t> extra) {
  base.insert(base.end(), extra.begin(), extra.end());
  std::sort(base.begin(), base.end());
  return base;
}

/// Candidates whose image is a nonzero multiple of the target; over ModP a
/// vanishing image that does not vanish exactly is proposed too.
template <class Scalar>
void single_completions(const Context& ctx, const Level<Scalar>& lv, const Propose& propose) {
  Vector<Scalar> rest;
  for (std::size_t k = 0; k < lv.cand.size(); ++k) {
    const Scalar a = split_target(lv, lv.images[k], rest);
    if (!is_zero_vec(rest)) {
      continue;
    }
    bool candidate = a != Scalar(0);
    if constexpr (std::is_same_v<Scalar, ModP>) {
      if (!candidate) {
        candidate = !exactly_dependent(ctx, lv.prefix, lv.cand[k], false);
      }
    }
    if (candidate) {
      propose(with(lv.prefix, {lv.cand[k]}));
    }
  }
}

/// Pairs {x, y} with f in span(P, x, y) using both: images modulo span(P, f)
/// that are proportional and nonzero, with different target coordinates after
/// scaling (equal ones give a relation among the quotients alone). Vanishing
/// images that do not vanish exactly (a modular accident) are paired with
/// everything. Stops after `limit` proposals.
template <class Scalar>
void pair_completions(const Context& ctx, const Level<Scalar>& lv, const Propose& propose,
                      std::size_t limit = std::numeric_limits<std::size_t>::max()) {
  std::size_t made = 0;
  const auto counted = [&](std::vector<std::size_t> s) {
    if (made < limit) {
      ++made;
      propose(std::move(s));
    }
  };
  const std::size_t m = lv.cand.size();
  std::vector<Vector<Scalar>> normal(m);
  std::vector<Scalar> coordinate(m);
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  std::vector<std::uint64_t> order;
  Vector<Scalar> rest;
  for (std::size_t k = 0; k < m && made < limit; ++k) {
    const Scalar a = split_target(lv, lv.images[k], rest);
    const Eigen::Index lead = first_nonzero(rest);
    if (lead == rest.size()) {
      if constexpr (std::is_same_v<Scalar, ModP>) {
        if (!exactly_dependent(ctx, lv.prefix, lv.cand[k], true)) {
          for (std::size_t k2 = 0; k2 < m && made < limit; ++k2) {
            if (k2 != k) {
              counted(with(lv.prefix, {lv.cand[k], lv.cand[k2]}));
            }
          }
        }
      }
      continue;
    }
    const Scalar inv = Scalar(1) / rest(lead);
    std::uint64_t h = static_cast<std::uint64_t>(lead);
    for (Eigen::Index j = lead; j < rest.size(); ++j) {
      if (rest(j) != Scalar(0)) {
        rest(j) = rest(j) * inv;
        h = mix(h, mix(static_cast<std::uint64_t>(j), scalar_hash(rest(j))));
      }
    }
    normal[k] = rest;
    coordinate[k] = a * inv;
    auto [it, fresh] = buckets.try_emplace(h);
    if (fresh) {
      order.push_back(h);
    }
    it->second.push_back(k);
  }
  for (std::uint64_t h : order) {
    const std::vector<std::size_t>& members = buckets[h];
    for (std::size_t a = 0; a < members.size() && made < limit; ++a) {
      for (std::size_t b = a + 1; b < members.size() && made < limit; ++b) {
        const std::size_t x = members[a];
        const std::size_t y = members[b];
        if (coordinate[x] != coordinate[y] && normal[x] == normal[y]) {
          counted(with(lv.prefix, {lv.cand[x], lv.cand[y]}));
        }
      }
    }
  }
}

/// Proposes a superset of the n-subsets (prefix + completions) on which the
/// target is a minimal-length combination, assuming no shorter combination
/// exists among the candidates. Depth-0 branches are sharded across workers.
template <class Scalar>
void descend(const Context& ctx, const Level<Scalar>& lv, int need, const Propose& propose, int worker, int workers,
             bool top) {
  if (need == 1) {
    single_completions(ctx, lv, propose);
    return;
  }
  if (need == 2) {
    pair_completions(ctx, lv, propose);
    return;
  }
  const std::size_t m = lv.cand.size();
  Vector<Scalar> rest;
  for (std::size_t k = 0; k + static_cast<std::size_t>(need) <= m; ++k) {
    if (top && static_cast<int>(k % static_cast<std::size_t>(workers)) != worker) {
      continue;
    }
    split_target(lv, lv.images[k], rest);
    if (is_zero_vec(rest)) {
      // z lies in span(P, f). Exactly, a minimal relation through P cannot
      // use z; otherwise the modular image lost information, so redo the
      // branch over Q.
      if (exactly_dependent(ctx, lv.prefix, lv.cand[k], true)) {
        continue;
      }
      if constexpr (std::is_same_v<Scalar, ModP>) {
        std::vector<std::size_t> prefix = lv.prefix;
        prefix.push_back(lv.cand[k]);
        const std::vector<std::size_t> later(lv.cand.begin() + static_cast<std::ptrdiff_t>(k) + 1, lv.cand.end());
        if (auto exact = root_level<Rational>(ctx, prefix, later)) {
          descend(ctx, *exact, need - 1, propose, 0, 1, false);
        }
      }
      continue;
    }
    descend(ctx, extend(lv, k), need - 1, propose, worker, workers, false);
  }
}

/// Confirms proposals over Q in parallel and returns the confirmed relations sorted.
std::vector<Candidate> confirm_all(const Context& ctx, std::vector<std::vector<std::size_t>> proposals, int workers,
                                   std::int64_t& exact_checks) {
  std::sort(proposals.begin(), proposals.end());
  proposals.erase(std::unique(proposals.begin(), proposals.end()), proposals.end());
  exact_checks += static_cast<std::int64_t>(proposals.size());
  std::vector<std::optional<Candidate>> results(proposals.size());
  const auto run = [&](std::size_t start, std::size_t step) {
    for (std::size_t i = start; i < proposals.size(); i += step) {
      results[i] = confirm(ctx, proposals[i]);
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, workers));
  if (count == 1 || proposals.size() < 64) {
    run(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < count; ++w) {
      threads.emplace_back(run, w, count);
    }
    for (auto& t : threads) {
      t.join();
    }
  }
  std::vector<Candidate> out;
  for (auto& r : results) {
    if (r) {
      out.push_back(std::move(*r));
    }
  }
  std::sort(out.begin(), out.end(), candidate_less);
  return out;
}

/// All confirmed minimal relations of size n inside `pool`, assuming none shorter exists there.
std::vector<Candidate> relations_of_size(const Context& ctx, const std::vector<std::size_t>& pool, int n, int workers,
                                         std::int64_t& exact_checks) {
  const int shards = n >= 3 ? std::max(1, workers) : 1;
  std::vector<std::vector<std::vector<std::size_t>>> found(static_cast<std::size_t>(shards));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(shards));
  const std::optional<Level<ModP>> root = root_level<ModP>(ctx, {}, pool);
  if (!root) {
    throw std::logic_error("relations_of_size: zero target");
  }
  const auto job = [&](int id) {
    try {
      auto& sink = found[static_cast<std::size_t>(id)];
      descend<ModP>(ctx, *root, n, [&](std::vector<std::size_t> s) { sink.push_back(std::move(s)); }, id, shards, true);
    } catch (...) {
      errors[static_cast<std::size_t>(id)] = std::current_exception();
    }
  };
  if (shards == 1) {
    job(0);
  } else {
    std::vector<std::thread> threads;
    for (int id = 0; id < shards; ++id) {
      threads.emplace_back(job, id);
    }
    for (auto& t : threads) {
      t.join();
    }
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  std::vector<std::vector<std::size_t>> proposals;
  for (auto& f : found) {
    proposals.insert(proposals.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
  }
  std::vector<Candidate> confirmed = confirm_all(ctx, std::move(proposals), workers, exact_checks);
  std::erase_if(confirmed, [&](const Candidate& c) { return static_cast<int>(c.subset.size()) != n; });
  return confirmed;
}

std::vector<std::size_t> iota_pool(std::size_t m) {
  std::vector<std::size_t> pool(m);
  for (std::size_t i = 0; i < m; ++i) {
    pool[i] = i;
  }
  return pool;
}

SearchOutcome outcome_from(const QuotientTable& table, const std::optional<Candidate>& best, SearchStatus status) {
  SearchOutcome out;
  out.status = best ? status : SearchStatus::NoneFound;
  if (best) {
    out.best = to_expression(table, *best);
    out.n_upper = static_cast<std::int64_t>(best->subset.size());
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Membership

std::optional<Expression> find_any_expression(const TargetForm& f, const QuotientTable& table) {
  const Context ctx(table, f);
  const Eigen::Index dim = table.bound() + 1;
  EchelonBasis<ModP> modular(dim);
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (modular.insert(table.residues(i))) {
      chosen.push_back(i);
    }
  }

  const auto expression_over = [&](const std::vector<std::size_t>& subset) -> std::optional<Expression> {
    if (auto c = confirm(ctx, subset)) {
      return to_expression(table, *c);
    }
    return std::nullopt;
  };

  if (modular.contains(ctx.target_mod)) {
    if (auto e = expression_over(chosen)) {
      return e;
    }
  }

  // Exact certificate: a functional y with y.g = 0 on every quotient and
  // y.f = 1. Quotients violating the current y are independent of the chosen
  // ones over Q and join them.
  while (true) {
    Matrix<Rational> a(static_cast<Eigen::Index>(chosen.size()) + 1, dim);
    for (std::size_t r = 0; r < chosen.size(); ++r) {
      a.row(static_cast<Eigen::Index>(r)) = table.exact(chosen[r]).transpose();
    }
    a.row(static_cast<Eigen::Index>(chosen.size())) = ctx.target_exact.transpose();
    Vector<Rational> rhs(a.rows());
    for (Eigen::Index r = 0; r < rhs.size(); ++r) {
      rhs(r) = 0;
    }
    rhs(rhs.size() - 1) = 1;
    const auto y = solve_linear_system<Rational>(a, rhs);
    if (!y) {
      return expression_over(chosen);
    }
    std::optional<std::size_t> violator;
    for (std::size_t i = 0; i < table.size() && !violator; ++i) {
      const Vector<Rational>& g = table.exact(i);
      Rational dot = 0;
      for (Eigen::Index j = 0; j < dim; ++j) {
        if (g(j) != 0 && (*y)(j) != 0) {
          dot += g(j) * (*y)(j);
        }
      }
      if (dot != 0) {
        violator = i;
      }
    }
    if (!violator) {
      return std::nullopt;
    }
    chosen.push_back(*violator);
  }
}

std::optional<Expression> find_any_expression(const TargetForm& f, const EnumerationResult& quotients) {
  if (quotients.weight != f.weight) {
    throw std::invalid_argument("quotient weight does not match the target weight");
  }
  return find_any_expression(f, QuotientTable(quotients, sturm_bound(quotients.level, f.weight)));
}

std::optional<LevelMultiplier> minimal_level_multiplier(const TargetForm& f, std::int64_t d_max, const LevelOptions& options) {
  if (d_max < 1) {
    throw std::invalid_argument("d_max must be at least 1");
  }
  for (std::int64_t d = 1; d <= d_max; ++d) {
    const std::int64_t level = f.level * d;
    const std::int64_t bound = sturm_bound(level, f.weight);
    if (static_cast<std::int64_t>(f.an.size()) < bound) {
      throw InsufficientCoefficients(f.label, bound, static_cast<std::int64_t>(f.an.size()));
    }
    const EnumerationResult quotients = cached_enumeration(level, f.weight, options.cache_dir, options.enumeration);
    const QuotientTable table(quotients, bound, options.enumeration.workers);
    std::optional<Expression> e = find_any_expression(f, table);
    if (options.on_level) {
      options.on_level(d, e.has_value());
    }
    if (e) {
      return LevelMultiplier{d, std::move(*e)};
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Exhaustive search

SearchOutcome exhaustive_search(const TargetForm& f, const QuotientTable& table, const ExhaustiveOptions& options) {
  const Context ctx(table, f);
  SearchOutcome out;
  const std::optional<Expression> any = find_any_expression(f, table);
  if (!any) {
    out.n_lower = kUnreachable;
    return out;
  }
  const std::size_t m = table.size();
  const std::vector<std::size_t> pool = iota_pool(m);
  for (std::int64_t n = 1; n <= static_cast<std::int64_t>(m); ++n) {
    const std::int64_t subsets = binomial_saturating(static_cast<std::int64_t>(m), n, options.subset_budget);
    if (subsets > options.subset_budget) {
      break;
    }
    std::vector<Candidate> found = relations_of_size(ctx, pool, static_cast<int>(n), options.workers, out.spent.exact_checks);
    out.spent.subsets += subsets;
    out.n_lower = n;
    if (!found.empty()) {
      out.best = to_expression(table, found.front());
      out.n_upper = n;
      out.status = SearchStatus::ProvedMinimal;
      out.exhaustive_at_upper = true;
      if (options.on_progress) {
        options.on_progress(out);
      }
      return out;
    }
    out.n_lower = n + 1;
    if (options.on_progress) {
      options.on_progress(out);
    }
  }
  out.best = any;
  out.n_upper = static_cast<std::int64_t>(any->length());
  out.status = SearchStatus::Bounded;
  return out;
}

SearchOutcome exhaustive_search(const TargetForm& f, const EnumerationResult& quotients, std::int64_t subset_budget) {
  ExhaustiveOptions options;
  options.subset_budget = subset_budget;
  return exhaustive_search(f, QuotientTable(quotients, sturm_bound(quotients.level, f.weight)), options);
}

// ---------------------------------------------------------------------------
// Random search

namespace {

/// Uniform integer in [0, n) by rejection; independent of the standard
/// library's distribution implementation.
std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) {
    x = rng();
  }
  return static_cast<std::size_t>(x % n);
}

// Late in an iteration nearly every candidate pair completes the subset, so
// each step looks at a bounded sample of the proposals and confirms only a
// few of them over Q.
constexpr std::size_t kProposalsPerStep = 64;
constexpr std::size_t kConfirmedPerStep = 4;

std::optional<Candidate> random_iteration(const Context& ctx, std::uint64_t seed, std::int64_t iteration, std::size_t cap,
                                          std::int64_t& exact_checks) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(static_cast<std::uint64_t>(iteration) >> 32)};
  std::mt19937_64 rng(seq);
  const std::size_t m = ctx.table.size();
  std::optional<Level<ModP>> start = root_level<ModP>(ctx, {}, iota_pool(m));
  if (!start) {
    throw std::logic_error("random_search: zero target");
  }
  Level<ModP> lv = std::move(*start);
  std::optional<Candidate> best;
  while (true) {
    const std::size_t s = lv.prefix.size();
    std::vector<std::vector<std::size_t>> proposals;
    const Propose sink = [&](std::vector<std::size_t> sub) {
      if (proposals.size() < kProposalsPerStep) {
        proposals.push_back(std::move(sub));
      }
    };
    if (s + 1 <= cap) {
      single_completions(ctx, lv, sink);
    }
    // A single completion is always shorter than any pair completion.
    if (proposals.empty() && s + 2 <= cap) {
      pair_completions(ctx, lv, sink, kProposalsPerStep);
    }
    std::sort(proposals.begin(), proposals.end());
    proposals.erase(std::unique(proposals.begin(), proposals.end()), proposals.end());
    std::size_t confirmed = 0;
    for (const auto& sub : proposals) {
      if (confirmed == kConfirmedPerStep) {
        break;
      }
      ++exact_checks;
      if (auto c = confirm(ctx, sub)) {
        ++confirmed;
        if (!best || candidate_less(*c, *best)) {
          best = std::move(c);
          cap = std::min(cap, best->subset.size());
        }
      }
    }
    // One more element only helps if its completions can still reach the cap.
    if (s + 2 > cap) {
      break;
    }
    std::vector<std::size_t> live;
    Vector<ModP> rest;
    for (std::size_t k = 0; k < lv.cand.size(); ++k) {
      split_target(lv, lv.images[k], rest);
      if (!is_zero_vec(rest)) {
        live.push_back(k);
      }
    }
    if (live.empty()) {
      break;
    }
    // The subset is unordered here, so every other candidate stays available.
    Level<ModP> next = extend(lv, live[uniform_below(rng, live.size())], true);
    lv = std::move(next);
  }
  return best;
}

}  // namespace

SearchOutcome random_search(const TargetForm& f, const QuotientTable& table, std::int64_t iterations, std::uint64_t seed,
                            const RandomOptions& options) {
  SearchOutcome out;
  if (iterations <= 0 || table.size() == 0) {
    if (options.incumbent) {
      out.best = options.incumbent;
      out.n_upper = static_cast<std::int64_t>(options.incumbent->length());
      out.status = SearchStatus::Bounded;
    }
    return out;
  }
  const Context ctx(table, f);
  std::optional<Expression> record = options.incumbent;
  const std::int64_t batch = std::max<std::int64_t>(1, options.batch);
  const std::int64_t end = options.first_iteration + iterations;
  for (std::int64_t start = options.first_iteration; start < end; start += batch) {
    const std::int64_t stop = std::min(end, start + batch);
    const std::size_t cap = record ? record->length() : std::numeric_limits<std::size_t>::max();
    std::vector<std::optional<Candidate>> results(static_cast<std::size_t>(stop - start));
    std::vector<std::int64_t> checks(results.size(), 0);
    std::vector<std::exception_ptr> errors(results.size());
    const auto run = [&](std::size_t first, std::size_t step) {
      for (std::size_t i = first; i < results.size(); i += step) {
        try {
          results[i] = random_iteration(ctx, seed, start + static_cast<std::int64_t>(i), cap, checks[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const auto workers = static_cast<std::size_t>(std::max(1, options.workers));
    if (workers == 1) {
      run(0, 1);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back(run, w, workers);
      }
      for (auto& t : threads) {
        t.join();
      }
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (errors[i]) {
        std::rethrow_exception(errors[i]);
      }
      out.spent.exact_checks += checks[i];
      if (!results[i]) {
        continue;
      }
      Expression e = to_expression(table, *results[i]);
      if (!record || size_order(e, *record) == SizeOrder::Smaller) {
        record = std::move(e);
      }
    }
    out.spent.iterations += stop - start;
    out.best = record;
    out.n_upper = record ? static_cast<std::int64_t>(record->length()) : 0;
    out.status = record ? SearchStatus::Bounded : SearchStatus::NoneFound;
    if (options.on_progress) {
      options.on_progress(out, stop);
    }
  }
  return out;
}

SearchOutcome random_search(const TargetForm& f, const EnumerationResult& quotients, std::int64_t iterations,
                            std::uint64_t seed) {
  return random_search(f, QuotientTable(quotients, sturm_bound(quotients.level, f.weight)), iterations, seed);
}

// ---------------------------------------------------------------------------
// Permutation heuristic

SearchOutcome permutation_search(const TargetForm& f, const QuotientTable& table, std::int64_t budget) {
  SearchOutcome out;
  if (budget <= 0 || table.size() == 0) {
    return out;
  }
  const Context ctx(table, f);
  std::map<std::vector<int>, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < table.size(); ++i) {
    std::vector<int> key = table.quotient(i).exponents();
    std::sort(key.begin(), key.end());
    classes[key].push_back(i);
  }
  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(classes.size());
  for (auto& [key, members] : classes) {
    groups.push_back(std::move(members));
  }
  // Small classes first, so one huge class cannot eat the whole budget.
  std::stable_sort(groups.begin(), groups.end(), [](const auto& x, const auto& y) { return x.size() < y.size(); });

  std::optional<Candidate> best;
  std::int64_t left = budget;
  const auto longest = [&] { return best ? best->subset.size() : std::numeric_limits<std::size_t>::max(); };
  // Searches size n inside a pool; false once the pool is settled (solved or unaffordable).
  const auto search = [&](const std::vector<std::size_t>& pool, std::size_t n) {
    const std::int64_t cost = binomial_saturating(static_cast<std::int64_t>(pool.size()), static_cast<std::int64_t>(n), left);
    if (cost > left) {
      return false;
    }
    left -= cost;
    out.spent.subsets += cost;
    std::vector<Candidate> found = relations_of_size(ctx, pool, static_cast<int>(n), 1, out.spent.exact_checks);
    if (found.empty()) {
      return true;
    }
    if (!best || candidate_less(found.front(), *best)) {
      best = found.front();
    }
    return false;
  };

  // Single classes, breadth first in n. A class keeps going only while it has
  // no relation, which keeps the no-shorter-relation premise of the walk.
  std::vector<bool> open(groups.size(), true);
  for (std::size_t n = 1; n <= longest() && left > 0; ++n) {
    bool any = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (open[g] && groups[g].size() >= n && n <= longest()) {
        open[g] = search(groups[g], n);
        any = true;
      }
    }
    if (!any) {
      break;
    }
  }

  // Unions of two classes. Size 1 is already settled by the class pass.
  std::vector<std::vector<bool>> union_open(groups.size());
  for (std::size_t a = 0; a < groups.size(); ++a) {
    union_open[a].assign(groups.size(), true);
  }
  for (std::size_t n = 2; n <= longest() && left > 0; ++n) {
    bool any = false;
    for (std::size_t a = 0; a < groups.size() && left > 0; ++a) {
      for (std::size_t b = a + 1; b < groups.size() && left > 0; ++b) {
        if (!union_open[a][b] || groups[a].size() + groups[b].size() < n || n > longest()) {
          continue;
        }
        std::vector<std::size_t> pool;
        std::merge(groups[a].begin(), groups[a].end(), groups[b].begin(), groups[b].end(), std::back_inserter(pool));
        union_open[a][b] = search(pool, n);
        any = true;
      }
    }
    if (!any) {
      break;
    }
  }
  out = [&] {
    SearchOutcome r = outcome_from(table, best, SearchStatus::Bounded);
    r.spent = out.spent;
    return r;
  }();
  return out;
}

SearchOutcome permutation_search(const TargetForm& f, const EnumerationResult& quotients, std::int64_t budget) {
  return permutation_search(f, QuotientTable(quotients, sturm_bound(quotients.level, f.weight)), budget);
}

// ---------------------------------------------------------------------------
// Certification

SearchOutcome certify(SearchOutcome outcome) {
  if (!outcome.best || outcome.status == SearchStatus::ProvedMinimal) {
    return outcome;
  }
  const auto length = static_cast<std::int64_t>(outcome.best->length());
  if (outcome.exhaustive_at_upper && outcome.n_lower == length) {
    outcome.status = SearchStatus::ProvedMinimal;
    return outcome;
  }
  if (outcome.status == SearchStatus::InferredMinimal) {
    return outcome;
  }
  const bool unit = std::all_of(outcome.best->terms.begin(), outcome.best->terms.end(),
                                [](const Term& t) { return t.coef == 1 || t.coef == -1; });
  if (unit && outcome.n_lower == length) {
    outcome.status = SearchStatus::InferredMinimal;
  }
  return outcome;
}

const std::vector<std::string>& single_quotient_newforms() {
  static const std::vector<std::string> labels = {"11.2.a.a", "14.2.a.a", "15.2.a.a", "20.2.a.a", "24.2.a.a", "27.2.a.a",
                                                  "32.2.a.a", "36.2.a.a", "48.2.a.a", "64.2.a.a", "80.2.a.b"};
  return labels;
}

bool rule_out_single_quotient(const TargetForm& f) {
  const auto& labels = single_quotient_newforms();
  return std::find(labels.begin(), labels.end(), f.label) == labels.end();
}

SearchOutcome apply_single_quotient_exclusion(SearchOutcome outcome, const TargetForm& f) {
  if (rule_out_single_quotient(f) && outcome.n_lower < 2) {
    outcome.n_lower = 2;
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Text form

std::string format_expression(const Expression& e) {
  std::string out;
  for (const Term& t : e.terms) {
    out += to_string(t.coef) + " * " + to_string(t.quotient) + "\n";
  }
  return out;
}

std::string format_block(const ExpressionBlock& block) {
  static const std::vector<std::string> preferred = {"label", "level", "status", "n_lower", "n_upper"};
  std::string header = "#";
  for (const std::string& key : preferred) {
    if (auto it = block.header.find(key); it != block.header.end()) {
      header += " " + key + "=" + it->second;
    }
  }
  for (const auto& [key, value] : block.header) {
    if (std::find(preferred.begin(), preferred.end(), key) == preferred.end()) {
      header += " " + key + "=" + value;
    }
  }
  return header + "\n" + format_expression(block.expression);
}

std::vector<ExpressionBlock> parse_expression_blocks(std::string_view text) {
  std::vector<ExpressionBlock> blocks;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  const auto fail = [&](const std::string& why) {
    return std::invalid_argument("expression text line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      continue;
    }
    if (line[first] == '#') {
      ExpressionBlock block;
      std::istringstream fields(line.substr(first + 1));
      std::string tok;
      while (fields >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw fail("header field '" + tok + "' is not key=value");
        }
        block.header[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
      if (auto it = block.header.find("level"); it != block.header.end()) {
        block.expression.level = std::stoll(it->second);
      }
      blocks.push_back(std::move(block));
      continue;
    }
    if (blocks.empty()) {
      throw fail("term before any header");
    }
    const auto star = line.find('*');
    if (star == std::string::npos) {
      throw fail("expected '<coef> * eta_N[...]'");
    }
    Term term{parse_rational(line.substr(0, star)), parse_eta_quotient(line.substr(star + 1))};
    Expression& e = blocks.back().expression;
    if (e.terms.empty()) {
      e.level = term.quotient.level();
    } else if (e.level != term.quotient.level()) {
      throw fail("quotient level differs from the block's other terms");
    }
    e.terms.push_back(std::move(term));
  }
  return blocks;
}

ExpressionBlock outcome_block(const std::string& label, const SearchOutcome& outcome) {
  ExpressionBlock block;
  block.header["label"] = label;
  if (outcome.best) {
    block.expression = *outcome.best;
    block.header["level"] = std::to_string(outcome.best->level);
  }
  block.header["status"] = to_string(outcome.status);
  block.header["n_lower"] = outcome.n_lower == kUnreachable ? "inf" : std::to_string(outcome.n_lower);
  block.header["n_upper"] = std::to_string(outcome.n_upper);
  return block;
}

}  // namespace etaforge
