#include "coodkit/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cood::scoring {

double score_cl(const std::vector<double>& v_t, const std::vector<double>& v_c) {
    if (v_t.size() != v_c.size()) throw Error("ShapeMismatch", "score_cl dims differ");
    constexpr double eps = 1e-8;
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < v_t.size(); ++i) {
        dot += v_t[i] * v_c[i];
        na += v_t[i] * v_t[i];
        nb += v_c[i] * v_c[i];
    }
    return dot / ((std::sqrt(na) + eps) * (std::sqrt(nb) + eps));
}

double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double score_combined(double sim, double p_bc) {
    if (p_bc < 0.0 || p_bc > 1.0) throw Error("BadProbability", "p_bc outside [0,1]");
    return sigmoid(sim) * p_bc;
}

double score_msp(const std::vector<double>& logits) {
    if (logits.empty()) throw Error("EmptyLogits", "score_msp needs at least one logit");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (double l : logits) z += std::exp(l - mx);
    return 1.0 / z;  // exp(mx - mx) / z
}

double calibrate_threshold(std::vector<double> id_scores, double retention) {
    if (id_scores.size() < 20)
        throw TooFewScores("calibration needs >= 20 scores, got " +
                           std::to_string(id_scores.size()));
    if (!(retention > 0.0 && retention < 1.0))
        throw Error("BadRetention", "retention must be in (0, 1)");
    std::sort(id_scores.begin(), id_scores.end());
    const std::size_t n = id_scores.size();
    const std::size_t keep = static_cast<std::size_t>(
        std::ceil(retention * static_cast<double>(n)));
    const std::size_t k = n - keep;  // index of the smallest retained score
    return id_scores[k];
}

ScoredRecord make_scored(const std::string& id, double sim, double p_bc, int label,
                         const std::string& scenario) {
    ScoredRecord r;
    r.id = id;
    r.sim = sim;
    r.p_cl_star = sigmoid(sim);
    r.p_bc = p_bc;
    r.p_id = p_bc >= 0.0 ? score_combined(sim, p_bc) : sim;
    r.label = label;
    r.scenario = scenario;
    return r;
}

std::vector<ScoredRecord> filter(const std::vector<ScoredRecord>& records, double threshold) {
    std::vector<ScoredRecord> out;
    for (const auto& r : records)
        if (r.p_id >= threshold) out.push_back(r);
    return out;
}

std::string scored_csv_header() {
    return "id,sim,p_cl_star,p_bc,p_id,label,scenario";
}

std::string scored_csv_row(const ScoredRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.9g,%d,%s", r.id.c_str(), r.sim,
                  r.p_cl_star, r.p_bc, r.p_id, r.label, r.scenario.c_str());
    return buf;
}

} // namespace cood::scoring
