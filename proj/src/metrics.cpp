#include "coodkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "coodkit/scoring.hpp"

namespace cood::metrics {

double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores) {
    if (id_scores.empty() || ood_scores.empty())
        throw EmptySet("auroc needs non-empty score sets");
    // average ranks over the combined sample; AUROC = (R_id - n_id(n_id+1)/2)
    // / (n_id * n_ood), which matches the pairwise definition with ties = 0.5
    struct Entry {
        double score;
        bool is_id;
    };
    std::vector<Entry> all;
    all.reserve(id_scores.size() + ood_scores.size());
    for (double s : id_scores) all.push_back({s, true});
    for (double s : ood_scores) all.push_back({s, false});
    std::sort(all.begin(), all.end(),
              [](const Entry& a, const Entry& b) { return a.score < b.score; });

    double rank_sum_id = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (all[k].is_id) rank_sum_id += avg_rank;
        i = j;
    }
    const double n1 = static_cast<double>(id_scores.size());
    const double n0 = static_cast<double>(ood_scores.size());
    return (rank_sum_id - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

double fpr_at_95_tpr(const std::vector<double>& id_scores,
                     const std::vector<double>& ood_scores) {
    if (id_scores.empty() || ood_scores.empty())
        throw EmptySet("fpr_at_95_tpr needs non-empty score sets");
    const double thresh = scoring::calibrate_threshold(id_scores, 0.95);
    std::size_t fp = 0;
    for (double s : ood_scores)
        if (s >= thresh) ++fp;
    return static_cast<double>(fp) / static_cast<double>(ood_scores.size());
}

double mrr(const std::vector<std::vector<double>>& query_vectors,
           const std::vector<std::string>& gold_ids,
           const std::vector<std::pair<std::string, std::vector<double>>>& code_pool) {
    if (query_vectors.empty()) throw EmptySet("mrr needs at least one query");
    if (query_vectors.size() != gold_ids.size())
        throw Error("ShapeMismatch", "queries and gold ids differ in count");
    double total = 0.0;
    for (std::size_t q = 0; q < query_vectors.size(); ++q) {
        int gold_idx = -1;
        for (std::size_t p = 0; p < code_pool.size(); ++p)
            if (code_pool[p].first == gold_ids[q]) {
                gold_idx = static_cast<int>(p);
                break;
            }
        if (gold_idx < 0) throw GoldMissing(gold_ids[q]);
        const double gold_sim =
            scoring::score_cl(query_vectors[q], code_pool[static_cast<std::size_t>(gold_idx)].second);
        // gold loses ties: every distractor scoring >= gold outranks it
        long ahead = 0;
        for (std::size_t p = 0; p < code_pool.size(); ++p) {
            if (static_cast<int>(p) == gold_idx) continue;
            if (scoring::score_cl(query_vectors[q], code_pool[p].second) >= gold_sim) ++ahead;
        }
        total += 1.0 / static_cast<double>(1 + ahead);
    }
    return total / static_cast<double>(query_vectors.size());
}

MetricsAggregate seed_average(const std::vector<MetricsRow>& rows) {
    if (rows.size() < 2) throw Error("TooFewRows", "seed_average needs >= 2 rows");
    for (const auto& r : rows)
        if (r.scenario != rows[0].scenario)
            throw MismatchedScenario(rows[0].scenario + " vs " + r.scenario);
    MetricsAggregate a;
    a.scenario = rows[0].scenario;
    a.n_seeds = static_cast<int>(rows.size());
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        a.auroc_mean += r.auroc;
        a.fpr95_mean += r.fpr95;
    }
    a.auroc_mean /= n;
    a.fpr95_mean /= n;
    double va = 0.0, vf = 0.0;
    for (const auto& r : rows) {
        va += (r.auroc - a.auroc_mean) * (r.auroc - a.auroc_mean);
        vf += (r.fpr95 - a.fpr95_mean) * (r.fpr95 - a.fpr95_mean);
    }
    a.auroc_std = std::sqrt(va / (n - 1.0));
    a.fpr95_std = std::sqrt(vf / (n - 1.0));
    return a;
}

std::string metrics_csv_header() { return "scenario,seed,auroc,fpr95,n_id,n_ood"; }

std::string metrics_csv_row(const MetricsRow& r) {
    char buf[192];
    std::snprintf(buf, sizeof buf, "%s,%d,%.9g,%.9g,%d,%d", r.scenario.c_str(), r.seed, r.auroc,
                  r.fpr95, r.n_id, r.n_ood);
    return buf;
}

std::string aggregate_csv_header() {
    return "scenario,auroc_mean,auroc_std,fpr95_mean,fpr95_std,n_seeds";
}

std::string aggregate_csv_row(const MetricsAggregate& a) {
    char buf[224];
    std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.9g,%d", a.scenario.c_str(), a.auroc_mean,
                  a.auroc_std, a.fpr95_mean, a.fpr95_std, a.n_seeds);
    return buf;
}

std::string search_csv_header() { return "dataset,mrr,n_queries"; }

std::string search_csv_row(const SearchEvalRow& r) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%.9g,%d", r.dataset.c_str(), r.mrr, r.n_queries);
    return buf;
}

} // namespace cood::metrics
