#pragma once

// Detection metrics (AUROC via rank statistics, FPR at 95% TPR), the code
// search retrieval metric (mRR over distractor codes), and multi-seed
// aggregation.

#include <string>
#include <vector>

#include "coodkit/common.hpp"

namespace cood::metrics {

COOD_DEFINE_ERROR(EmptySet);
COOD_DEFINE_ERROR(GoldMissing);
COOD_DEFINE_ERROR(MismatchedScenario);

// P(random ID score > random OOD score), ties counting 0.5; computed from
// average ranks (Mann-Whitney U)
double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores);

// fraction of OOD scores >= the threshold that retains 95% of ID scores
double fpr_at_95_tpr(const std::vector<double>& id_scores,
                     const std::vector<double>& ood_scores);

// Mean reciprocal rank of each query's gold code among the pool under
// descending cosine similarity. Gold loses ties.
double mrr(const std::vector<std::vector<double>>& query_vectors,
           const std::vector<std::string>& gold_ids,
           const std::vector<std::pair<std::string, std::vector<double>>>& code_pool);

struct MetricsRow {
    std::string scenario;
    int seed = 0;
    double auroc = 0.0;
    double fpr95 = 0.0;
    int n_id = 0;
    int n_ood = 0;
};

struct MetricsAggregate {
    std::string scenario;
    double auroc_mean = 0.0, auroc_std = 0.0;
    double fpr95_mean = 0.0, fpr95_std = 0.0;
    int n_seeds = 0;
};

// arithmetic mean and sample (n-1) standard deviation over >= 2 rows of one
// scenario
MetricsAggregate seed_average(const std::vector<MetricsRow>& rows);

struct SearchEvalRow {
    std::string dataset;  // original | corrupted | filtered_gt | filtered_model
    double mrr = 0.0;
    int n_queries = 0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& r);
std::string aggregate_csv_header();
std::string aggregate_csv_row(const MetricsAggregate& a);
std::string search_csv_header();
std::string search_csv_row(const SearchEvalRow& r);

} // namespace cood::metrics
