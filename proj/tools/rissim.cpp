// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------
//
// Command-line front end: generate, train, eval, protocol, datafrac.
// Each command prints one JSON status line on stdout; failures print one
// JSON error line on stderr and exit nonzero.

#include "rissim/access.hpp"
#include "rissim/experiment.hpp"
#include "rissim/textio.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App *cmd, CommonArgs &args)
{
    cmd->add_option("--config", args.config, "JSON experiment configuration (defaults apply when omitted)");
    cmd->add_option("--seed", args.seed, "seed override for this stage");
    cmd->add_option("--out", args.out, "output directory (defaults to the configured out_dir)");
}

rissim::ExperimentConfig resolve(const CommonArgs &args)
{
    rissim::ExperimentConfig c =
        args.config.empty() ? rissim::default_experiment_config() : rissim::load_config(args.config);
    if (!args.out.empty())
        c.out_dir = args.out;
    return c;
}

int fail(const std::string &kind, const std::string &message)
{
    std::cerr << json{{"status", "error"}, {"kind", kind}, {"message", message}}.dump() << std::endl;
    return 1;
}

rissim::ProtocolTrace load_trace(const std::string &path)
{
    std::istringstream is(rissim::read_file(path));
    return rissim::read_trace(is);
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"rissim: RIS beam selection and initial-access experiments"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, proto_args, frac_args;
    std::optional<std::size_t> num_scenes;
    std::string train_data, eval_data, eval_models, proto_data, proto_models, frac_data;
    bool oracle = false;
    std::vector<std::string> diff_pair;
    std::vector<double> fractions;

    auto *gen = app.add_subcommand("generate", "generate the scene dataset");
    add_common(gen, gen_args);
    gen->add_option("--scenes", num_scenes, "number of scenes");

    auto *trn = app.add_subcommand("train", "train one beam-set model per camera");
    add_common(trn, train_args);
    trn->add_option("--data", train_data, "dataset directory (defaults to --out)");

    auto *ev = app.add_subcommand("eval", "accuracy/recall and rate tables");
    add_common(ev, eval_args);
    ev->add_option("--data", eval_data, "dataset directory (defaults to --out)");
    ev->add_option("--models", eval_models, "model directory (defaults to --out)");
    ev->add_flag("--oracle", oracle, "score with the true targets instead of a trained model");

    auto *proto = app.add_subcommand("protocol", "initial-access overhead runs");
    add_common(proto, proto_args);
    proto->add_option("--data", proto_data, "dataset directory (defaults to --out)");
    proto->add_option("--models", proto_models, "model directory (defaults to --out)");
    proto->add_option("--diff", diff_pair, "compare two trace files event by event and exit")->expected(2);

    auto *frac = app.add_subcommand("datafrac", "accuracy/recall vs training-set fraction");
    add_common(frac, frac_args);
    frac->add_option("--data", frac_data, "dataset directory (defaults to --out)");
    frac->add_option("--fractions", fractions, "training fractions in (0, 1]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return fail("usage", e.what());
    }

    auto or_out = [](const std::string &dir, const rissim::ExperimentConfig &c) {
        return dir.empty() ? c.out_dir : fs::path(dir);
    };

    try {
        if (*gen) {
            rissim::ExperimentConfig c = resolve(gen_args);
            if (gen_args.seed)
                c.seed = *gen_args.seed;
            if (num_scenes)
                c.num_scenes = *num_scenes;
            const fs::path manifest = rissim::cmd_generate(c, c.out_dir);
            std::cout << json{{"status", "ok"}, {"command", "generate"}, {"manifest", manifest.string()}}.dump()
                      << std::endl;
        } else if (*trn) {
            rissim::ExperimentConfig c = resolve(train_args);
            if (train_args.seed)
                c.train.seed = *train_args.seed;
            rissim::cmd_train(c, or_out(train_data, c), c.out_dir);
            std::cout << json{{"status", "ok"}, {"command", "train"}, {"out", c.out_dir.string()}}.dump()
                      << std::endl;
        } else if (*ev) {
            rissim::ExperimentConfig c = resolve(eval_args);
            if (eval_args.seed)
                c.seed = *eval_args.seed;
            rissim::EvalOptions opts;
            opts.oracle_predictor = oracle;
            const auto tables = rissim::cmd_eval(c, or_out(eval_data, c), or_out(eval_models, c), c.out_dir, opts);
            json metrics = json::object();
            for (std::size_t i = 0; i < tables.size(); ++i)
                metrics[c.cameras[i].name] = {{"accuracy", tables[i].metrics.column("accuracy").at(0)},
                                              {"recall", tables[i].metrics.column("recall").at(0)}};
            std::cout << json{{"status", "ok"}, {"command", "eval"}, {"metrics", metrics}}.dump() << std::endl;
        } else if (*proto) {
            if (!diff_pair.empty()) {
                const auto diffs = rissim::diff_traces(load_trace(diff_pair[0]), load_trace(diff_pair[1]));
                for (const std::string &d : diffs)
                    std::cout << d << '\n';
                std::cout << json{{"status", diffs.empty() ? "identical" : "different"},
                                  {"command", "protocol"},
                                  {"differences", diffs.size()}}
                                 .dump()
                          << std::endl;
                return diffs.empty() ? 0 : 2;
            }
            rissim::ExperimentConfig c = resolve(proto_args);
            if (proto_args.seed)
                c.seed = *proto_args.seed;
            rissim::cmd_protocol(c, or_out(proto_data, c), or_out(proto_models, c), c.out_dir);
            std::cout << json{{"status", "ok"}, {"command", "protocol"}, {"out", c.out_dir.string()}}.dump()
                      << std::endl;
        } else if (*frac) {
            rissim::ExperimentConfig c = resolve(frac_args);
            if (frac_args.seed)
                c.train.seed = *frac_args.seed;
            if (!fractions.empty())
                c.data_fractions = fractions;
            rissim::cmd_datafrac(c, or_out(frac_data, c), c.out_dir);
            std::cout << json{{"status", "ok"}, {"command", "datafrac"}, {"out", c.out_dir.string()}}.dump()
                      << std::endl;
        }
    } catch (const rissim::PipelineError &e) {
        return fail("pipeline", e.what());
    } catch (const std::invalid_argument &e) {
        return fail("invalid_argument", e.what());
    } catch (const std::exception &e) {
        return fail("runtime", e.what());
    }
    return 0;
}
