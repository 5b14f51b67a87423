#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sciagent/agents.hpp"

namespace sciagent {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Objectives

/// (4 - 2.1 x1^2 + x1^4/3) x1^2 + x1 x2 + (-4 + 4 x2^2) x2^2
double six_hump_camel(double x1, double x2);

struct Box {
  Vec lo;
  Vec hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(const Vec& x) const;
  Vec to_unit(const Vec& x) const;
  Vec from_unit(const Vec& u) const;
};

/// x1 in [-3, 3], x2 in [-2, 2].
Box camel_box();

struct DesignParameter {
  std::string name;
  std::string unit;
  double lo;
  double hi;
};

/// ablator_outer_radius, cushion_thickness, tamper_thickness,
/// inner_shell_thickness, fuel_radius (micrometres).
const std::array<DesignParameter, 5>& design_parameters();
Box design_box();

/// Synthetic stand-in for a simulator's log10 neutron yield. With u the
/// design scaled to the unit box, c = kYieldCenter and w = kYieldWidths:
///
///   f(u) = 10 + 3 exp(-|u-c|^2 / (2 * 0.35^2)) + 4.5 exp(-sum ((u_i-c_i)/w_i)^2 / 2)
///
/// so f(c) = 17.5 is the maximum. Designs with every u_i > 0.75 give 0
/// (no yield). Out-of-box designs raise OutOfBounds.
double synthetic_yield(const Vec& design);

inline constexpr std::array<double, 5> kYieldCenter{0.62, 0.35, 0.48, 0.30, 0.55};
inline constexpr std::array<double, 5> kYieldWidths{0.06, 0.10, 0.08, 0.12, 0.07};
inline constexpr double kYieldPeak = 17.5;

/// Physical design at the synthetic optimum.
Vec yield_optimum();

// ---------------------------------------------------------------------------
// Gaussian process

struct GpHyper {
  Vec lengthscales;  // in unit-box coordinates
  double signal_variance = 1.0;  // standardized output units
  double noise_variance = 1e-6;
};

struct GpFitOptions {
  int starts = 64;
  int evals_per_start = 200;
  std::optional<double> fixed_noise;  // standardized units; skips noise search
  std::uint64_t seed = 0;
  std::optional<GpHyper> warm_start;  // added as one extra start
};

class GPModel {
 public:
  struct Prediction {
    double mean;
    double variance;
  };

  Prediction predict(const Vec& x) const;
  double log_marginal_likelihood() const { return lml_; }
  const GpHyper& hyper() const { return hyper_; }  // standardized units
  bool degenerate() const { return degenerate_; }
  double jitter() const { return jitter_; }
  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  /// Noise variance in the caller's output units.
  double noise_variance() const { return hyper_.noise_variance * y_scale_ * y_scale_; }
  double signal_variance() const { return hyper_.signal_variance * y_scale_ * y_scale_; }

 private:
  friend GPModel gp_fit(const std::vector<Vec>&, const Vec&, const Box&, const GpFitOptions&);
  friend GPModel gp_with_hyper(const std::vector<Vec>&, const Vec&, const Box&, const GpHyper&);

  Box box_;
  Eigen::MatrixXd x_;  // unit-box inputs
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  GpHyper hyper_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double lml_ = 0.0;
  double jitter_ = 0.0;
  bool degenerate_ = false;
};

/// Squared-exponential ARD GP. Inputs are scaled to the unit box, outputs
/// standardized; hyperparameters maximize the log marginal likelihood by
/// multi-start Nelder-Mead in log space. Identical outputs give a flagged
/// noise-only model.
GPModel gp_fit(const std::vector<Vec>& x, const Vec& y, const Box& box, const GpFitOptions& options = {});

/// Model with the given (standardized) hyperparameters, no search.
GPModel gp_with_hyper(const std::vector<Vec>& x, const Vec& y, const Box& box, const GpHyper& hyper);

/// Hyperparameters used before any tuning: lengthscales 0.5, unit signal,
/// noise 1e-6.
GpHyper default_hyper(std::size_t dim);

/// Expected improvement for minimization.
double expected_improvement(double mean, double sigma, double best);
double expected_improvement(const GPModel& model, const Vec& x, double best);

// ---------------------------------------------------------------------------
// Campaigns

enum class EvalSource { agent, bo, random_init };
std::string to_string(EvalSource source);

struct EvalRecord {
  Vec design;
  double objective = 0.0;
  int step_index = 0;  // 1-based
  EvalSource source = EvalSource::bo;
};

struct CampaignConfig {
  int n_init = 10;
  int eval_budget = 60;
  std::uint64_t seed = 0;
  double yield_threshold_log10 = 17.0;

  void validate() const;
};

void to_json(Json& j, const CampaignConfig& c);
void from_json(const Json& j, CampaignConfig& c);

/// One point per equal-width stratum in each dimension, in [0,1)^dim.
std::vector<Vec> latin_hypercube(int n, std::size_t dim, std::uint64_t seed);

enum class Sense { minimize, maximize };

struct BoOptions {
  Sense sense = Sense::minimize;
  GpFitOptions gp;  // seed is derived from the campaign seed
  int candidates = 2000;
  int refine_starts = 5;
  int refine_evals = 100;
  /// Full hyperparameter search every `refit_every` proposals; in between,
  /// a short search warm-started from the previous optimum.
  int refit_every = 1;
  int warm_starts = 8;
};

using Objective = std::function<double(const Vec&)>;

/// Latin-hypercube initial design, then EI-argmax proposals until the budget
/// is spent. Deterministic for a fixed seed.
std::vector<EvalRecord> bo_campaign(const Objective& objective, const Box& box, const CampaignConfig& config,
                                    const BoOptions& options = {});

struct AgentCampaignOptions {
  int iterations = 10;
  bool hypothesize_first = true;
  std::string goal;  // task text; a default describing the design problem is used when empty
};

/// Simulator tool over synthetic_yield, exposing only design in and log10
/// yield out. Each successful run is appended to state.data["campaign"].
Tool simulator_tool();

/// Optional hypothesizer rationale, then an executor conversation with the
/// simulator tool, re-prompted `iterations` times for a better design.
/// Errors end the loop early; the history so far is returned.
std::vector<EvalRecord> agent_campaign(Session& session, const ToolRegistry& registry, RunState& state,
                                       const CampaignConfig& config, const AgentCampaignOptions& options = {});

std::vector<EvalRecord> campaign_history(const RunState& state);

struct NamedHistory {
  std::string name;
  std::vector<EvalRecord> records;
  Sense sense = Sense::maximize;
};

struct CampaignSummary {
  std::string name;
  std::vector<double> running_best;
  double best = 0.0;
  std::optional<int> evals_to_threshold;          // counting every evaluation
  // non-init evaluations spent when the threshold was first reached (0 if an
  // initial point already reached it)
  std::optional<int> evals_to_threshold_no_init;
};

struct Comparison {
  std::vector<CampaignSummary> campaigns;
  double threshold = 0.0;

  std::string table() const;  // aligned text, "none" when unreached
};

std::vector<double> running_max(const std::vector<double>& values);
std::vector<double> running_min(const std::vector<double>& values);

/// First 1-based index whose value reaches `threshold` (>= for maximize,
/// <= for minimize).
std::optional<int> evaluations_to_threshold(const std::vector<double>& values, double threshold,
                                            Sense sense = Sense::maximize);

Comparison compare_campaigns(const std::vector<NamedHistory>& histories, double threshold);

/// step,source,x1,x2,x3,x4,x5,objective,running_max (running best in the
/// campaign's sense; unused coordinates left empty).
std::string campaign_csv(const NamedHistory& history);

/// Running-best curves with the threshold as a dashed line.
std::string comparison_svg(const Comparison& comparison, const std::string& title);

}  // namespace sciagent
