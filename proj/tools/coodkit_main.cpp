// coodkit command-line interface.
//
// Subcommands: synth, gen-benchmark, train, eval, search-eval, score.
// Exit code 0 on success; on failure a single machine-readable JSON error
// line goes to stderr and the exit code is 1.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coodkit/corpus.hpp"
#include "coodkit/pipeline.hpp"
#include "coodkit/scenarios.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int fail(const std::string& code, const std::string& message) {
    json j;
    j["error"] = code;
    j["message"] = message;
    std::cerr << j.dump() << "\n";
    return 1;
}

void print_eval_summary(const cood::pipeline::EvalResult& result) {
    std::printf("%-18s %12s %12s\n", "scenario", "auroc(%)", "fpr95(%)");
    for (const auto& a : result.aggregates)
        std::printf("%-18s %6.2f±%-5.2f %6.2f±%-5.2f\n", a.scenario.c_str(),
                    100.0 * a.auroc_mean, 100.0 * a.auroc_std, 100.0 * a.fpr95_mean,
                    100.0 * a.fpr95_std);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"COOD/COOD+ out-of-distribution detection toolkit"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate the synthetic two-domain corpora");
    std::string synth_out;
    int synth_n = 2500;
    std::uint64_t synth_seed = 1;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--n", synth_n, "pairs per domain");
    synth->add_option("--seed", synth_seed, "generator seed");

    // ---- gen-benchmark ----
    auto* genb = app.add_subcommand("gen-benchmark", "assemble an ID/OOD benchmark");
    std::string gb_id, gb_foreign, gb_out;
    std::uint64_t gb_seed = 1;
    double gb_train_frac = cood::scenarios::kDefaultTrainOodFrac;
    double gb_test_ratio = cood::scenarios::kDefaultTestOodRatio;
    int gb_id_train = 0, gb_id_test = 0, gb_seeds = cood::scenarios::kDefaultTestSeeds;
    genb->add_option("--id", gb_id, "ID corpus JSONL")->required();
    genb->add_option("--foreign", gb_foreign, "foreign corpus JSONL")->required();
    genb->add_option("--out", gb_out, "output directory")->required();
    genb->add_option("--seed", gb_seed, "benchmark seed");
    genb->add_option("--train-ood-frac", gb_train_frac, "per-scenario train replacement");
    genb->add_option("--test-ood-ratio", gb_test_ratio, "test outlier ratio");
    genb->add_option("--id-train", gb_id_train, "ID train rows (default 80% of corpus)");
    genb->add_option("--id-test", gb_id_test, "ID test rows (default the remainder)");
    genb->add_option("--test-seeds", gb_seeds, "test resample count");

    // ---- train ----
    auto* train = app.add_subcommand("train", "train a cood or cood-plus model");
    std::string tr_mode, tr_config, tr_manifest, tr_out, tr_init;
    train->add_option("--mode", tr_mode, "cood | cood-plus")->required();
    train->add_option("--config", tr_config, "RunConfig JSON path");
    train->add_option("--manifest", tr_manifest, "benchmark directory")->required();
    train->add_option("--out", tr_out, "checkpoint output path")->required();
    train->add_option("--init-from", tr_init, "checkpoint to fine-tune from");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "per-scenario AUROC/FPR95 evaluation");
    std::string ev_ckpt, ev_manifest, ev_out;
    eval->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    eval->add_option("--manifest", ev_manifest, "benchmark directory")->required();
    eval->add_option("--out", ev_out, "per-seed rows CSV path")->required();

    // ---- search-eval ----
    auto* se = app.add_subcommand("search-eval", "corrupt-filter-recover code search run");
    std::string se_ckpt, se_manifest, se_out;
    double se_corruption = 0.15, se_retention = 0.95;
    se->add_option("--ckpt", se_ckpt, "checkpoint path")->required();
    se->add_option("--manifest", se_manifest, "benchmark directory")->required();
    se->add_option("--corruption", se_corruption, "total corruption fraction");
    se->add_option("--retention", se_retention, "ID retention for the filter");
    se->add_option("--out", se_out, "CSV output path")->required();

    // ---- score ----
    auto* score = app.add_subcommand("score", "score a JSONL file with a checkpoint");
    std::string sc_ckpt, sc_in, sc_out;
    score->add_option("--ckpt", sc_ckpt, "checkpoint path")->required();
    score->add_option("--in", sc_in, "input JSONL")->required();
    score->add_option("--out", sc_out, "scored CSV output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            cood::corpus::SynthSpec spec;
            spec.n_pairs = synth_n;
            spec.seed = synth_seed;
            cood::SeededRng rng(synth_seed);
            fs::create_directories(synth_out);
            auto a = cood::corpus::generate_synthetic_corpus(spec, rng);
            auto b = cood::corpus::generate_synthetic_foreign_corpus(spec, rng);
            cood::corpus::save_jsonl(a, (fs::path(synth_out) / "corpus_a.jsonl").string());
            cood::corpus::save_jsonl(b, (fs::path(synth_out) / "corpus_b.jsonl").string());
            std::cout << "wrote " << a.size() << " + " << b.size() << " pairs to " << synth_out
                      << "\n";
        } else if (genb->parsed()) {
            auto id_corpus = cood::corpus::load_jsonl(gb_id);
            auto foreign = cood::corpus::load_jsonl(gb_foreign);
            cood::scenarios::BenchmarkManifest draft;
            draft.seed = gb_seed;
            draft.train_ood_frac = gb_train_frac;
            draft.test_ood_ratio = gb_test_ratio;
            draft.n_test_seeds = gb_seeds;
            draft.id_train = gb_id_train > 0
                                 ? gb_id_train
                                 : static_cast<int>(0.8 * static_cast<double>(id_corpus.size()));
            draft.id_test = gb_id_test > 0
                                ? gb_id_test
                                : static_cast<int>(id_corpus.size()) - draft.id_train;
            auto manifest = cood::scenarios::assemble_benchmark(
                id_corpus, foreign, draft, gb_out, fs::absolute(gb_id).string(),
                fs::absolute(gb_foreign).string());
            std::cout << "benchmark at " << gb_out << ": train " << manifest.train_cood_rows
                      << " ID rows, " << manifest.train_cood_plus_rows << " mixed rows, "
                      << manifest.test_scenarios.size() << " scenarios x "
                      << manifest.n_test_seeds << " seeds\n";
        } else if (train->parsed()) {
            cood::pipeline::RunConfig cfg;
            if (!tr_config.empty()) cfg = cood::pipeline::load_run_config(tr_config);
            cfg.mode = cood::pipeline::mode_from_name(tr_mode);
            if (!tr_init.empty()) cfg.warm_start = tr_init;
            auto ckpt = cood::pipeline::train(cfg, tr_manifest, &std::cout);
            cood::pipeline::save_checkpoint(tr_out, ckpt);
            cood::corpus::save_vocab(ckpt.vocab, tr_out + ".vocab.json");
            std::cout << "saved " << tr_out << " (val loss " << ckpt.final_loss << ")\n";
        } else if (eval->parsed()) {
            auto ckpt = cood::pipeline::load_checkpoint(ev_ckpt);
            auto result = cood::pipeline::evaluate_run(ckpt, ev_manifest);
            const std::string agg_path =
                (fs::path(ev_out).parent_path() /
                 (fs::path(ev_out).stem().string() + "_aggregate.csv"))
                    .string();
            cood::pipeline::write_eval_csv(result, ev_out, agg_path);
            print_eval_summary(result);
            std::cout << "rows: " << ev_out << "\naggregate: " << agg_path << "\n";
        } else if (se->parsed()) {
            auto ckpt = cood::pipeline::load_checkpoint(se_ckpt);
            auto rows = cood::pipeline::search_eval(ckpt, se_manifest, se_corruption,
                                                    se_retention);
            cood::pipeline::write_search_csv(rows, se_out);
            for (const auto& r : rows)
                std::printf("%-16s mRR %6.2f%%  (%d queries)\n", r.dataset.c_str(),
                            100.0 * r.mrr, r.n_queries);
        } else if (score->parsed()) {
            auto ckpt = cood::pipeline::load_checkpoint(sc_ckpt);
            cood::pipeline::score_file(ckpt, sc_in, sc_out);
            std::cout << "scored " << sc_in << " -> " << sc_out << "\n";
        }
    } catch (const cood::Error& e) {
        return fail(e.code, e.what());
    } catch (const std::exception& e) {
        return fail("Unhandled", e.what());
    }
    return 0;
}
