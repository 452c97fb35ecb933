// aicfc: batch driver for the fact-verification pipeline.
//
//   aicfc precompute --config run.json [--force] [--workers N]
//   aicfc verify     --config run.json [--resume] [--think | --no-think] [--workers N]
//   aicfc evaluate   --pred predictions.json --gold dev.json

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "aicfc/aicfc.hpp"

namespace {

void print_evaluation(const aicfc::LabelEvaluation& ev) {
    std::printf("claims    %zu\n", ev.total);
    std::printf("accuracy  %.4f (%zu/%zu)\n", ev.accuracy, ev.correct, ev.total);
    std::printf("\nconfusion [gold rows x predicted columns]: S R NEE C\n");
    for (aicfc::Label g : aicfc::kLabels) {
        const auto gi = static_cast<std::size_t>(g);
        std::printf("%-36s", std::string(aicfc::label_name(g)).c_str());
        for (std::size_t p = 0; p < 4; ++p) {
            std::printf(" %5zu", ev.confusion[gi][p]);
        }
        std::printf("\n");
    }
    std::printf("\n%-36s %9s %9s\n", "label", "precision", "recall");
    for (aicfc::Label l : aicfc::kLabels) {
        const auto li = static_cast<std::size_t>(l);
        const auto fmt = [](const std::optional<double>& v) {
            char buf[32];
            if (v) {
                std::snprintf(buf, sizeof buf, "%.4f", *v);
            } else {
                std::snprintf(buf, sizeof buf, "n/a");
            }
            return std::string(buf);
        };
        std::printf("%-36s %9s %9s\n", std::string(aicfc::label_name(l)).c_str(), fmt(ev.precision[li]).c_str(),
                    fmt(ev.recall[li]).c_str());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented claim verification: precompute stores, verify claims, score labels"};
    app.require_subcommand(1);

    std::string config_path;
    std::size_t workers = 0;
    bool quiet = false;

    auto* precompute = app.add_subcommand("precompute", "chunk, embed and store every claim's knowledge store");
    bool force = false;
    precompute->add_option("--config", config_path, "run configuration (JSON)")->required();
    precompute->add_flag("--force", force, "rebuild stores that already exist");
    precompute->add_option("--workers", workers, "parallel workers (overrides config)");
    precompute->add_flag("--quiet", quiet, "suppress per-claim log lines on stderr");

    auto* verify = app.add_subcommand("verify", "retrieve sources, query the model and write predictions");
    bool resume = false;
    std::optional<bool> think;
    verify->add_option("--config", config_path, "run configuration (JSON)")->required();
    verify->add_flag("--resume", resume, "continue from <output>.partial.jsonl");
    verify->add_flag_function("--think", [&](std::int64_t) { think = true; }, "let the model emit <think> blocks");
    verify->add_flag_function("--no-think", [&](std::int64_t) { think = false; }, "disable thinking mode");
    verify->add_option("--workers", workers, "parallel workers (overrides config)");
    verify->add_flag("--quiet", quiet, "suppress per-claim log lines on stderr");

    auto* evaluate = app.add_subcommand("evaluate", "label accuracy and confusion matrix against gold labels");
    std::string pred_path;
    std::string gold_path;
    std::string gold_id_field = "claim_id";
    evaluate->add_option("--pred", pred_path, "predictions file")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--gold", gold_path, "gold claims file")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--gold-id-field", gold_id_field, "id field in the gold file (array position if absent)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (evaluate->parsed()) {
            aicfc::ClaimFields fields;
            fields.id = gold_id_field;
            print_evaluation(aicfc::evaluate_label_files(pred_path, gold_path, fields));
            return 0;
        }

        auto cfg = aicfc::load_config(config_path);
        if (workers > 0) {
            cfg.workers = workers;
        }
        if (think) {
            cfg.llm.think = *think;
        }
        aicfc::StageLog log(std::cerr);
        auto pipeline = aicfc::Pipeline::from_config(cfg, quiet ? nullptr : &log);

        if (precompute->parsed()) {
            const auto report = pipeline.precompute(force);
            std::size_t chunks = 0;
            for (const auto& [_, n] : report.chunks_per_claim) {
                chunks += n;
            }
            std::printf("built %zu stores, skipped %zu, failed %zu in %.2f s\n", report.built, report.skipped,
                        report.failures.size(), report.seconds);
            if (report.built > 0) {
                std::printf("mean chunks per rebuilt claim: %.1f\n",
                            static_cast<double>(chunks) / static_cast<double>(report.built));
            }
            for (const auto& [id, why] : report.failures) {
                std::printf("  claim %lld: %s\n", static_cast<long long>(id), why.c_str());
            }
            return report.failures.empty() ? 0 : 1;
        }

        const auto report = pipeline.verify_batch(resume);
        std::printf("%zu predictions written to %s (%zu verified now, %zu resumed)\n", report.predictions,
                    cfg.paths.output.string().c_str(), report.processed, report.resumed);
        std::printf("time per claim: mean %.2f s, p95 %.2f s\n", report.mean_s, report.p95_s);
        std::printf("max source chars per claim: %zu\n", report.max_source_chars);
        std::printf("llm calls: %zu\n", report.llm_calls);
        for (const auto& [status, n] : report.status_counts) {
            std::printf("  %s: %zu\n", status.c_str(), n);
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "aicfc: %s\n", e.what());
        return 2;
    }
}
