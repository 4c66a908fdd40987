#pragma once

// OOD scoring functions, threshold calibration at fixed ID retention, and
// dataset filtering. Higher scores mean more in-distribution. Retention uses
// the non-strict rule: a record is retained iff score >= threshold.

#include <string>
#include <vector>

#include "coodkit/common.hpp"

namespace cood::scoring {

COOD_DEFINE_ERROR(TooFewScores);

// cosine similarity in [-1, 1]; norms are epsilon-guarded
double score_cl(const std::vector<double>& v_t, const std::vector<double>& v_c);

double sigmoid(double x);

// P_ID = sigma(sim) * p_bc
double score_combined(double sim, double p_bc);

// max of softmax(logits)
double score_msp(const std::vector<double>& logits);

// The largest threshold retaining at least `retention` of the calibration
// scores under the >= rule: with k = n - ceil(retention * n), the (k+1)-th
// smallest score.
double calibrate_threshold(std::vector<double> id_scores, double retention = 0.95);

// One scored test record. p_bc < 0 encodes "absent" (unsupervised mode), in
// which case p_id is the raw similarity.
struct ScoredRecord {
    std::string id;
    double sim = 0.0;
    double p_cl_star = 0.5;
    double p_bc = -1.0;
    double p_id = 0.0;
    int label = 1;
    std::string scenario = "id";
};

ScoredRecord make_scored(const std::string& id, double sim, double p_bc, int label,
                         const std::string& scenario);

// subset with p_id >= threshold, order preserved
std::vector<ScoredRecord> filter(const std::vector<ScoredRecord>& records, double threshold);

std::string scored_csv_header();
std::string scored_csv_row(const ScoredRecord& r);

} // namespace cood::scoring
