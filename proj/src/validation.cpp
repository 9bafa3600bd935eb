#include "optimcorr/validation.hpp"

#include <algorithm>
#include <cmath>

#include "optimcorr/metrics.hpp"
#include "optimcorr/parallel.hpp"
#include "optimcorr/random.hpp"

namespace optimcorr {

double harrell_correct(double theta_app, double optimism) { return theta_app - optimism; }

double estimator_632(double theta_app, double theta_out) { return 0.368 * theta_app + 0.632 * theta_out; }

Estimate632Plus estimator_632_plus(double theta_app, double theta_out, double gamma) {
  Estimate632Plus r;
  r.theta_out_clamped = std::max(theta_out, gamma);
  r.R = gamma != theta_app ? (r.theta_out_clamped - theta_app) / (gamma - theta_app) : 0.0;
  r.R = std::clamp(r.R, 0.0, 1.0);
  r.w = 0.632 / (1.0 - 0.368 * r.R);
  r.estimate = (1.0 - r.w) * theta_app + r.w * r.theta_out_clamped;
  return r;
}

namespace {

// The full-data fit uses index 0 of the pipeline stream; replicate b uses b + 1.
std::uint64_t pipeline_seed(std::uint64_t seed, std::size_t replicate) {
  return derive_seed(seed, replicate, StreamPurpose::Pipeline);
}

double c_on(const FittedModel& model, const Dataset& data) {
  return c_statistic(linear_predictor(model, data.predictors()), data.outcomes());
}

}  // namespace

double apparent(const Pipeline& pipeline, const Dataset& data, std::uint64_t seed) {
  return c_on(pipeline.fit(data, pipeline_seed(seed, 0)), data);
}

ValidationReport bootstrap_optimism(const Pipeline& pipeline, const Dataset& data, std::size_t B, std::uint64_t seed,
                                    unsigned threads, const FittedModel* final_model) {
  if (B < 1) throw Error(ErrorCode::InvalidArgument, "B must be at least 1");
  if (data.events() == 0 || data.non_events() == 0) {
    throw Error(ErrorCode::AllSameOutcome, "validation needs at least one event and one non-event");
  }
  ValidationReport report;
  report.B = B;
  report.seed = seed;
  report.model = final_model ? *final_model : pipeline.fit(data, pipeline_seed(seed, 0));
  const Vector original_scores = linear_predictor(report.model, data.predictors());
  report.theta_app = c_statistic(original_scores, data.outcomes());

  const auto n = static_cast<std::size_t>(data.n());
  report.replicates.resize(B);
  parallel_for(B, threads, [&](std::size_t b) {
    ReplicateRecord& rec = report.replicates[b];
    rec.index = b;
    Rng rng = make_stream(seed, b, StreamPurpose::Bootstrap);
    std::vector<Index> draw(n);
    std::vector<bool> in_bag(n, false);
    for (auto& d : draw) {
      d = static_cast<Index>(uniform_below(rng, n));
      in_bag[static_cast<std::size_t>(d)] = true;
    }
    std::vector<Index> oob;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_bag[i]) oob.push_back(static_cast<Index>(i));
    }
    rec.oob_size = oob.size();
    for (Index i : oob) rec.oob_events += data.outcomes()[i] == 1.0 ? 1 : 0;

    const Dataset resample = data.rows(draw);
    FittedModel model;
    try {
      model = pipeline.fit(resample, pipeline_seed(seed, b + 1));
    } catch (const Error&) {
      rec.skipped_reason = "fit_failure";
      return;
    }
    rec.intercept_only = model.intercept_only();
    try {
      rec.theta_boot = c_on(model, resample);
    } catch (const Error&) {
      rec.skipped_reason = "undefined_boot_c";
      return;
    }
    rec.theta_orig = c_on(model, data);
    if (!oob.empty()) {
      try {
        rec.theta_out = c_on(model, data.rows(oob));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UndefinedC) throw;
      }
    }
  });

  // Fixed-order reduction over replicate index.
  double optimism_sum = 0.0;
  double out_sum = 0.0;
  std::size_t used = 0;
  std::size_t out_used = 0;
  for (const ReplicateRecord& rec : report.replicates) {
    if (rec.skipped_reason) {
      ++report.skipped;
      continue;
    }
    optimism_sum += *rec.theta_boot - *rec.theta_orig;
    ++used;
    if (rec.theta_out) {
      out_sum += *rec.theta_out;
      ++out_used;
    } else {
      ++report.skipped_oob;
    }
  }
  if (2 * report.skipped > B) {
    throw Error(ErrorCode::ValidationDegenerate, std::to_string(report.skipped) + " of " + std::to_string(B) +
                                                     " bootstrap replicates failed");
  }
  if (out_used == 0) {
    throw Error(ErrorCode::ValidationDegenerate, "no replicate had a defined out-of-bag C-statistic");
  }
  report.optimism = optimism_sum / static_cast<double>(used);
  report.theta_out_mean = out_sum / static_cast<double>(out_used);
  report.harrell = harrell_correct(report.theta_app, report.optimism);
  report.est_632 = estimator_632(report.theta_app, report.theta_out_mean);
  const Estimate632Plus plus = estimator_632_plus(report.theta_app, report.theta_out_mean, report.gamma);
  report.est_632_plus = plus.estimate;
  report.overfit_R = plus.R;
  report.weight_w = plus.w;
  return report;
}

}  // namespace optimcorr
