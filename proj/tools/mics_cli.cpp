// Copyright 2026 The mics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// mics: index, train, run, evaluate and serve from the command line.
// Reports go to stdout as JSON; diagnostics go to stderr.
// Exit status: 0 success, 2 usage error or missing file, 1 anything else.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "mics/mics.hpp"

namespace {

using nlohmann::json;

constexpr int kUsage = 2;

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        mics::fail(mics::ErrorCode::input, "cannot write " + path);
    }
    return out;
}

void print(const json& report) { std::cout << report.dump(2) << '\n'; }

json scores_json(const mics::ClassifierReport& report) {
    json folds = json::array();
    for (const auto& f : report.folds) {
        folds.push_back(json{{"macro_f1", f.macro_f1}, {"accuracy", f.accuracy}});
    }
    return json{{"folds", folds}, {"mean_macro_f1", report.mean_macro_f1}, {"mean_accuracy", report.mean_accuracy}};
}

/// First tab-separated field of every non-empty line, as a label 0..3.
std::vector<int> read_labels(const std::string& path) {
    auto in = mics::open_input(path);
    std::vector<int> labels;
    const auto lines = mics::read_lines(in);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (mics::trim(lines[n]).empty()) {
            continue;
        }
        const auto field = std::string(mics::trim(mics::split(lines[n], '\t').front()));
        if (field.size() != 1 || field[0] < '0' || field[0] > '3') {
            throw mics::ParseError(n + 1, path + ": label must be 0..3");
        }
        labels.push_back(field[0] - '0');
    }
    return labels;
}

struct EngineFlags {
    std::string config;
    std::string index;
    std::string pool;
    std::string model;
    std::string annotations;
    std::string run_id;
    std::optional<bool> rm3;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--config", config, "Engine config file");
        cmd->add_option("--index", index, "Index file (overrides config)");
        cmd->add_option("--pool", pool, "Clarifying question pool (overrides config)");
        cmd->add_option("--model", model, "Usefulness model (overrides config)");
        cmd->add_option("--annotations", annotations, "Training set used when no model is given");
        cmd->add_option("--run-id", run_id, "Run tag for run files");
    }

    [[nodiscard]] mics::EngineConfig resolve() const {
        mics::EngineConfig c = config.empty() ? mics::EngineConfig{} : mics::load_config(config);
        if (!index.empty()) c.index = index;
        if (!pool.empty()) c.pool = pool;
        if (!model.empty()) c.model = model;
        if (!annotations.empty()) c.annotations = annotations;
        if (!run_id.empty()) c.run_id = run_id;
        if (c.index.empty()) {
            mics::fail(mics::ErrorCode::config, "no index given (use --index or an index key in --config)");
        }
        return c;
    }
};

httplib::Server* g_server = nullptr;

void stop_server(int) {
    if (g_server != nullptr) {
        g_server->stop();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed-initiative conversational passage retrieval"};
    app.require_subcommand(1);

    std::string corpus_path;
    std::string index_out;
    auto* index_cmd = app.add_subcommand("index", "Build an index from an `id \\t text` corpus");
    index_cmd->add_option("corpus", corpus_path)->required();
    index_cmd->add_option("out", index_out)->required();

    std::string annotations_path;
    std::string model_out;
    mics::TrainingOptions training;
    auto* train_cmd = app.add_subcommand("train-usefulness", "Cross-validate and train the usefulness classifier");
    train_cmd->add_option("annotations", annotations_path)->required();
    train_cmd->add_option("--folds", training.folds)->check(CLI::Range(2, 1000));
    train_cmd->add_option("--seed", training.seed);
    train_cmd->add_option("--epochs", training.epochs);
    train_cmd->add_option("--out", model_out, "Where to write the trained model");

    std::string topics_path;
    std::string mode_name;
    std::string run_out;
    EngineFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "Replay scripted topics and write a TREC run file");
    run_cmd->add_option("topics", topics_path)->required();
    run_cmd->add_option("--mode", mode_name)->check(CLI::IsMember({"no_mi", "mi_all", "mi_clf", "NO_MI", "MI_ALL", "MI_CLF"}));
    run_cmd->add_option("--out", run_out)->required();
    run_flags.add_to(run_cmd);

    std::string run_path;
    std::string qrels_path;
    std::string metric_list = "r@1000,map,mrr,ndcg,ndcg@3,ndcg@5";
    mics::eval::EvalOptions eval_options;
    std::string gain_name = "linear";
    bool per_turn = false;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a run file against qrels");
    eval_cmd->add_option("run", run_path)->required();
    eval_cmd->add_option("qrels", qrels_path)->required();
    eval_cmd->add_option("--metrics", metric_list);
    eval_cmd->add_option("--rel-threshold", eval_options.rel_threshold);
    eval_cmd->add_option("--gain", gain_name)->check(CLI::IsMember({"linear", "exponential"}));
    eval_cmd->add_flag("--per-turn", per_turn, "Include per-turn values");

    std::string ann_a;
    std::string ann_b;
    auto* kappa_cmd = app.add_subcommand("kappa", "Cohen's kappa between two label files");
    kappa_cmd->add_option("a", ann_a)->required();
    kappa_cmd->add_option("b", ann_b)->required();

    std::string synth_out;
    std::size_t synth_total = 150;
    std::uint64_t synth_seed = 2023;
    auto* synth_cmd = app.add_subcommand("synth-annotations", "Write the generated usefulness training set");
    synth_cmd->add_option("--out", synth_out)->required();
    synth_cmd->add_option("--total", synth_total);
    synth_cmd->add_option("--seed", synth_seed);

    EngineFlags serve_flags;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string snapshot;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP session service");
    serve_flags.add_to(serve_cmd);
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--port", port);
    serve_cmd->add_option("--snapshot", snapshot, "Load sessions from and save them to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (*index_cmd) {
            auto in = mics::open_input(corpus_path);
            const auto corpus = mics::read_corpus(in);
            const auto index = mics::build_index(corpus);
            auto out = open_output(index_out);
            index.write(out);
            print(json{{"passages", index.doc_count()}, {"terms", index.term_count()}, {"out", index_out}});
        } else if (*train_cmd) {
            auto in = mics::open_input(annotations_path);
            const auto examples = mics::read_annotations(in);
            auto [model, report] = mics::train(examples, training);
            if (!model_out.empty()) {
                auto out = open_output(model_out);
                model.write(out);
            }
            auto j = scores_json(report);
            j["examples"] = examples.size();
            j["seed"] = training.seed;
            if (!model_out.empty()) {
                j["out"] = model_out;
            }
            print(j);
        } else if (*run_cmd) {
            auto config = run_flags.resolve();
            if (!mode_name.empty()) {
                config.mode = mics::parse_mode(mode_name);
            }
            auto in = mics::open_input(topics_path);
            const auto topics = mics::parse_topic_file(in);
            const auto engine = mics::build_engine(config);
            const auto run = mics::run_batch(engine, topics, config.mode, config.run_id);
            {
                auto out = open_output(run_out);
                mics::eval::write_run(out, run.records);
            }
            {
                auto out = open_output(run_out + ".meta");
                mics::write_metadata(out, run.metadata);
            }
            print(json{{"mode", mics::to_string(config.mode)},
                       {"topics", topics.size()},
                       {"turns", run.metadata.size()},
                       {"records", run.records.size()},
                       {"out", run_out},
                       {"metadata", run_out + ".meta"}});
        } else if (*eval_cmd) {
            std::vector<mics::eval::MetricSpec> metrics;
            for (const auto& name : mics::split(metric_list, ',')) {
                if (!mics::trim(name).empty()) {
                    metrics.push_back(mics::eval::MetricSpec::parse(name));
                }
            }
            eval_options.gain = gain_name == "exponential" ? mics::eval::Gain::exponential : mics::eval::Gain::linear;
            auto run_in = mics::open_input(run_path);
            auto qrels_in = mics::open_input(qrels_path);
            const auto records = mics::eval::read_run(run_in);
            const auto qrels = mics::eval::read_qrels(qrels_in);
            const auto report = mics::eval::evaluate(mics::eval::rankings_of(records), qrels, metrics, eval_options);
            json values = json::object();
            json details = json::object();
            for (const auto& spec : metrics) {
                const auto& r = report.metrics.at(spec.name());
                values[spec.name()] = r.mean;
                json d{{"evaluated", r.evaluated}, {"excluded", r.excluded}, {"flagged", r.flagged}};
                if (per_turn) {
                    d["per_turn"] = r.per_turn;
                }
                details[spec.name()] = d;
            }
            print(json{{"metrics", values},
                       {"details", details},
                       {"turns_in_run", report.turns_in_run},
                       {"turns_skipped", report.turns_skipped}});
        } else if (*kappa_cmd) {
            const auto a = read_labels(ann_a);
            const auto b = read_labels(ann_b);
            if (a.size() != b.size()) {
                mics::fail(mics::ErrorCode::invalid_arguments, "label files differ in length: " + std::to_string(a.size()) +
                                                                   " vs " + std::to_string(b.size()));
            }
            print(json{{"kappa", mics::eval::cohens_kappa(a, b)}, {"items", a.size()}});
        } else if (*synth_cmd) {
            const auto examples = mics::generate_annotations(synth_total, synth_seed);
            auto out = open_output(synth_out);
            mics::write_annotations(out, examples);
            print(json{{"examples", examples.size()}, {"seed", synth_seed}, {"out", synth_out}});
        } else if (*serve_cmd) {
            const auto config = serve_flags.resolve();
            auto engine = std::make_shared<const mics::Engine>(mics::build_engine(config));
            mics::service::SessionService service(engine, {config.mode});
            if (!snapshot.empty() && std::filesystem::exists(snapshot)) {
                service.load(snapshot);
            }
            httplib::Server server;
            service.mount(server);
            g_server = &server;
            std::signal(SIGINT, stop_server);
            std::signal(SIGTERM, stop_server);
            if (!server.bind_to_port(host, port)) {
                mics::fail(mics::ErrorCode::config, "cannot listen on " + host + ":" + std::to_string(port));
            }
            std::cerr << "listening on " << host << ":" << port << '\n';
            server.listen_after_bind();
            g_server = nullptr;
            if (!snapshot.empty()) {
                service.save(snapshot);
            }
        }
    } catch (const mics::Error& e) {
        std::cerr << "mics: " << e.what() << '\n';
        switch (e.code()) {
        case mics::ErrorCode::not_found:
        case mics::ErrorCode::config:
        case mics::ErrorCode::invalid_arguments: return kUsage;
        default: return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "mics: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
