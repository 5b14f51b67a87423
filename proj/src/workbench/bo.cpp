#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gsl/gsl_multimin.h>

#include "sciagent/errors.hpp"
#include "sciagent/workbench.hpp"

namespace sciagent {

std::string to_string(EvalSource source) {
  switch (source) {
    case EvalSource::agent: return "agent";
    case EvalSource::bo: return "bo";
    case EvalSource::random_init: return "random_init";
  }
  return "unknown";
}

void CampaignConfig::validate() const {
  if (n_init < 1) throw ConfigError("campaign n_init must be >= 1");
  if (eval_budget < n_init) throw ConfigError("campaign eval_budget must be >= n_init");
  if (!std::isfinite(yield_threshold_log10)) throw ConfigError("campaign yield_threshold_log10 must be finite");
}

void to_json(Json& j, const CampaignConfig& c) {
  j = {{"n_init", c.n_init},
       {"eval_budget", c.eval_budget},
       {"seed", c.seed},
       {"yield_threshold_log10", c.yield_threshold_log10}};
}

void from_json(const Json& j, CampaignConfig& c) {
  if (!j.is_object()) throw ConfigError("campaign config must be an object");
  try {
    c.n_init = j.value("n_init", c.n_init);
    c.eval_budget = j.value("eval_budget", c.eval_budget);
    c.seed = j.value("seed", c.seed);
    c.yield_threshold_log10 = j.value("yield_threshold_log10", c.yield_threshold_log10);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("campaign config: ") + e.what());
  }
  c.validate();
}

std::vector<Vec> latin_hypercube(int n, std::size_t dim, std::uint64_t seed) {
  if (n < 1 || dim == 0) throw PreconditionError("latin_hypercube needs n >= 1 and dim >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Vec> pts(static_cast<std::size_t>(n), Vec(dim));
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (std::size_t d = 0; d < dim; ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double v = (perm[i] + unif(rng)) / n;
      pts[i][d] = std::min(v, std::nextafter(1.0, 0.0));
    }
  }
  return pts;
}

namespace {

struct EiProblem {
  const GPModel* model;
  const Box* box;
  double best;
};

Vec clamp_unit(const gsl_vector* v) {
  Vec u(v->size);
  for (std::size_t i = 0; i < v->size; ++i) u[i] = std::clamp(gsl_vector_get(v, i), 0.0, 1.0);
  return u;
}

double neg_ei(const gsl_vector* v, void* params) {
  auto& p = *static_cast<EiProblem*>(params);
  return -expected_improvement(*p.model, p.box->from_unit(clamp_unit(v)), p.best);
}

std::pair<double, Vec> refine(EiProblem& problem, const Vec& start, int budget) {
  const std::size_t n = start.size();
  gsl_multimin_function fn{&neg_ei, n, &problem};
  gsl_vector* x0 = gsl_vector_alloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x0, i, start[i]);
  gsl_vector_set_all(step, 0.05);
  auto* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x0, step);
  for (int it = 0; it < budget; ++it) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_fminimizer_size(s) < 1e-7) break;
  }
  std::pair<double, Vec> out{-s->fval, clamp_unit(s->x)};
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x0);
  return out;
}

bool near_existing(const Vec& u, const std::vector<Vec>& seen) {
  for (const auto& s : seen) {
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) d = std::max(d, std::abs(u[i] - s[i]));
    if (d < 1e-9) return true;
  }
  return false;
}

}  // namespace

std::vector<EvalRecord> bo_campaign(const Objective& objective, const Box& box, const CampaignConfig& config,
                                    const BoOptions& options) {
  config.validate();
  if (!objective) throw PreconditionError("bo_campaign: no objective");
  if (box.dim() == 0 || box.lo.size() != box.hi.size()) throw PreconditionError("bo_campaign: bad box");
  if (options.candidates < 1 || options.refine_starts < 0 || options.refit_every < 1) {
    throw PreconditionError("bo_campaign: bad options");
  }
  const double sign = options.sense == Sense::minimize ? 1.0 : -1.0;
  std::vector<EvalRecord> history;
  std::vector<Vec> unit_seen;
  std::vector<Vec> xs;
  Vec ys;  // internal minimization values

  auto evaluate = [&](const Vec& u, EvalSource source) {
    auto x = box.from_unit(u);
    double value = objective(x);
    history.push_back({x, value, static_cast<int>(history.size()) + 1, source});
    unit_seen.push_back(u);
    xs.push_back(x);
    ys.push_back(sign * value);
  };

  for (const auto& u : latin_hypercube(config.n_init, box.dim(), config.seed)) evaluate(u, EvalSource::random_init);

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::optional<GpHyper> previous;
  int proposal = 0;
  while (static_cast<int>(history.size()) < config.eval_budget) {
    GpFitOptions fit = options.gp;
    fit.seed = config.seed * 1000003ULL + static_cast<std::uint64_t>(history.size());
    if (previous && proposal % options.refit_every != 0) {
      fit.starts = std::max(1, options.warm_starts);
      fit.warm_start = previous;
    }
    auto model = xs.size() >= 2 ? gp_fit(xs, ys, box, fit) : GPModel{};
    previous = model.hyper();
    ++proposal;
    double best = *std::min_element(ys.begin(), ys.end());

    Vec chosen;
    if (xs.size() < 2 || model.degenerate()) {
      chosen.resize(box.dim());
      for (auto& v : chosen) v = unif(rng);
    } else {
      EiProblem problem{&model, &box, best};
      std::vector<std::pair<double, Vec>> cands;
      cands.reserve(static_cast<std::size_t>(options.candidates));
      for (int c = 0; c < options.candidates; ++c) {
        Vec u(box.dim());
        for (auto& v : u) v = unif(rng);
        cands.emplace_back(expected_improvement(model, box.from_unit(u), best), std::move(u));
      }
      auto top = std::min<std::size_t>(static_cast<std::size_t>(options.refine_starts), cands.size());
      std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(top), cands.end(),
                        [](const auto& a, const auto& b) { return a.first > b.first; });
      double best_ei = cands.front().first;
      chosen = cands.front().second;
      for (std::size_t i = 0; i < top; ++i) {
        auto [ei, u] = refine(problem, cands[i].second, options.refine_evals);
        if (ei > best_ei && !near_existing(u, unit_seen)) {
          best_ei = ei;
          chosen = u;
        }
      }
    }
    if (near_existing(chosen, unit_seen)) {
      for (auto& v : chosen) v = unif(rng);
    }
    evaluate(chosen, EvalSource::bo);
  }
  return history;
}

}  // namespace sciagent
