// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#include "rissim/experiment.hpp"
#include "rissim/textio.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

using namespace rissim;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::current_path() / "harness_work";

ExperimentConfig small_config(std::size_t scenes = 40)
{
    ExperimentConfig c = default_experiment_config();
    c.num_scenes = scenes;
    c.train_fraction = 0.5;
    c.train.epochs = 3;
    c.train.hidden = {16};
    c.protocol.runs = 8;
    c.data_fractions = {0.5, 1.0};
    return c;
}

// One generated dataset shared by the tests that only read it.
const fs::path &shared_dataset()
{
    static const fs::path dir = [] {
        const fs::path d = kWork / "shared";
        fs::remove_all(d);
        cmd_generate(small_config(), d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path &p) { return read_file(p); }

std::vector<fs::path> listing(const fs::path &dir)
{
    std::vector<fs::path> out;
    for (const auto &e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file())
            out.push_back(fs::relative(e.path(), dir));
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST_SUITE("configuration")
{
    TEST_CASE("dump and parse reproduce the configuration")
    {
        const ExperimentConfig c = default_experiment_config();
        const std::string text = dump_config(c);
        CHECK(dump_config(parse_config(text)) == text);
        CHECK(c.train.epochs == 300);
        CHECK(c.protocol.snr_db == -30.0);
        CHECK(c.predicted_set_size() == 3);
        REQUIRE(c.cameras.size() == 2);
        CHECK(c.cameras[0].name == "cam5");
        CHECK(c.cameras[0].model.fov_deg == 110.0);
        CHECK(c.cameras[1].model.fov_deg == 75.0);
    }

    TEST_CASE("partial overrides keep the other defaults")
    {
        const ExperimentConfig c = parse_config(R"({"seed": 9, "train": {"epochs": 4}, "protocol": {"set_size": 5}})");
        CHECK(c.seed == 9);
        CHECK(c.train.epochs == 4);
        CHECK(c.predicted_set_size() == 5);
        CHECK(c.num_scenes == 2000);
    }

    TEST_CASE("unknown keys and bad values are rejected")
    {
        CHECK_THROWS_AS(parse_config(R"({"sede": 1})"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config(R"({"train": {"epoch": 1}})"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("{not json"), std::invalid_argument);
        ExperimentConfig c = default_experiment_config();
        c.train_fraction = 1.0;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        c = default_experiment_config();
        c.cameras[1].name = "cam5";
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    }

    TEST_CASE("stream seeds are deterministic and distinct")
    {
        std::set<std::uint64_t> seen;
        for (std::uint64_t s = 1; s <= 4; ++s)
            for (std::uint64_t i = 0; i < 100; ++i)
                seen.insert(derive_seed(7, s, i));
        CHECK(seen.size() == 400);
        CHECK(derive_seed(7, 2, 3) == derive_seed(7, 2, 3));
        CHECK(derive_seed(7, 2, 3) != derive_seed(8, 2, 3));
    }
}

TEST_SUITE("result tables")
{
    TEST_CASE("CSV round-trip is exact")
    {
        ResultTable t({"a", "b"});
        t.add_row({1.0, 0.1});
        t.add_row({-2.5e-17, 1.0 / 3.0});
        const ResultTable back = ResultTable::from_csv(t.to_csv());
        CHECK(back == t);
        CHECK(back.column("b") == std::vector<double>{0.1, 1.0 / 3.0});
    }

    TEST_CASE("shape errors are rejected")
    {
        ResultTable t({"a", "b"});
        CHECK_THROWS_AS(t.add_row({1.0}), std::invalid_argument);
        CHECK_THROWS_AS(t.column("c"), std::out_of_range);
        CHECK_THROWS_AS(ResultTable({"a", "a"}), std::invalid_argument);
        CHECK_THROWS(ResultTable::from_csv("a,b\n1\n"));
    }
}

TEST_SUITE("dataset generation")
{
    TEST_CASE("zero scenes gives an empty but valid dataset")
    {
        const fs::path d = kWork / "empty";
        fs::remove_all(d);
        const fs::path manifest = cmd_generate(small_config(0), d);
        CHECK(fs::exists(manifest));
        const Dataset data = load_dataset(d);
        CHECK(data.scenes.empty());
        for (const auto &recs : data.records)
            CHECK(recs.empty());
        CHECK(data.Q.size() == 64);
    }

    TEST_CASE("regenerating with the same seed is byte-identical")
    {
        const fs::path a = kWork / "regen_a";
        const fs::path b = kWork / "regen_b";
        fs::remove_all(a);
        fs::remove_all(b);
        cmd_generate(small_config(12), a);
        cmd_generate(small_config(12), b);
        const auto files = listing(a);
        REQUIRE(files == listing(b));
        for (const fs::path &f : files)
            CHECK(slurp(a / f) == slurp(b / f));

        ExperimentConfig other = small_config(12);
        other.seed = 2;
        const fs::path c = kWork / "regen_c";
        fs::remove_all(c);
        cmd_generate(other, c);
        CHECK(slurp(a / "records_cam5.jsonl") != slurp(c / "records_cam5.jsonl"));
    }

    TEST_CASE("scenes are blocked and labels follow the matched UEs")
    {
        const Dataset data = load_dataset(shared_dataset());
        const ExperimentConfig &cfg = data.config;
        REQUIRE(data.scenes.size() == 40);
        CHECK(data.train_scene_end == 20);
        for (const SceneRecord &s : data.scenes) {
            CHECK(s.scene == generate_scene(cfg.scene, cfg.seed + s.index));
            for (const SceneUE &u : s.scene.ues)
                CHECK_FALSE(has_bs_los(s.scene, u));
        }
        std::size_t checked = 0;
        for (std::size_t c = 0; c < cfg.cameras.size(); ++c)
            for (const CameraRecord &r : data.records[c]) {
                const SceneRecord &s = data.scenes[r.scene_index];
                CHECK(r.matched_ue == match_detections(s.scene, cfg.cameras[c].model, r.detections));
                const auto labeled = r.labeled_ues();
                REQUIRE_FALSE(labeled.empty());
                const SceneChannels ch = build_channels(cfg, s);
                std::vector<FreqChannel> hs;
                for (std::size_t u : labeled)
                    hs.push_back(ch.h_R[u]);
                CHECK(r.target == optimal_beam_set(hs, data.Q, ReferenceVector::ones(data.Q.elements())));
                CHECK(r.V == encode_ue_info(r.detections, cfg.cameras[c].model, 3, cfg.scene.u_max));
                ++checked;
            }
        CHECK(checked > 0);
    }

    TEST_CASE("normalized channels have unit mean element power")
    {
        const Dataset data = load_dataset(shared_dataset());
        const SceneChannels ch = build_channels(data.config, data.scenes[0]);
        auto power = [](const FreqChannel &h) {
            double p = 0.0;
            for (const cplx &v : h.data())
                p += std::norm(v);
            return p / static_cast<double>(h.data().size());
        };
        CHECK(power(ch.h_T) == doctest::Approx(1.0));
        for (const FreqChannel &h : ch.h_R)
            CHECK(power(h) == doctest::Approx(1.0));
        CHECK(channel_from_json(channel_to_json(ch.h_T)).data().size() == ch.h_T.data().size());
        const FreqChannel back = channel_from_json(channel_to_json(ch.h_T));
        CHECK(std::equal(back.data().begin(), back.data().end(), ch.h_T.data().begin()));
    }

    TEST_CASE("tampered files and foreign codebooks are rejected")
    {
        const fs::path d = kWork / "tamper";
        fs::remove_all(d);
        cmd_generate(small_config(6), d);
        ExperimentConfig other = small_config(6);
        other.ue_codebook.oversample_az = 2;
        CHECK_THROWS_AS(load_dataset(d, &other), PipelineError);
        {
            std::ofstream f(d / "records_cam4.jsonl", std::ios::app);
            f << "\n";
        }
        CHECK_THROWS_AS(load_dataset(d), PipelineError);
        CHECK_THROWS_AS(load_dataset(kWork / "does_not_exist"), PipelineError);
    }
}

TEST_SUITE("pipeline stages")
{
    TEST_CASE("oracle scores reach perfect metrics and a bounded rate")
    {
        const fs::path out = kWork / "eval_oracle";
        const ExperimentConfig cfg = small_config();
        const auto tables = cmd_eval(cfg, shared_dataset(), {}, out, EvalOptions{true});
        REQUIRE(tables.size() == 2);
        for (const EvalTables &t : tables) {
            CHECK(t.metrics.column("accuracy")[0] == 1.0);
            CHECK(t.metrics.column("recall")[0] == 1.0);
            const auto ratio = t.rate_k.column("rate_ratio");
            REQUIRE(ratio.size() == 64);
            CHECK(ratio.back() == doctest::Approx(1.0).epsilon(1e-12));
            for (std::size_t i = 1; i < ratio.size(); ++i)
                CHECK(ratio[i] >= ratio[i - 1]);
            CHECK(t.bound.column("violations")[0] == 0.0);
            const auto eg = t.rate_snr.column("equal_gain");
            const auto ex = t.rate_snr.column("exhaustive");
            const auto pr = t.rate_snr.column("predicted");
            for (std::size_t s = 0; s < eg.size(); ++s) {
                CHECK(ex[s] <= eg[s] * (1.0 + 1e-12));
                CHECK(pr[s] <= ex[s] * (1.0 + 1e-12));
            }
        }
        CHECK(fs::exists(out / "rate_k_cam5.csv"));
    }

    TEST_CASE("exhaustive rate matches a joint search with the BS beam fixed")
    {
        ExperimentConfig cfg = small_config();
        cfg.eval.snr_db = {-10.0, 10.0};
        const auto tables = cmd_eval(cfg, shared_dataset(), {}, kWork / "eval_cross", EvalOptions{true});
        const Dataset data = load_dataset(shared_dataset());
        const ReferenceVector ref = ReferenceVector::ones(data.P.elements());
        const int K = data.config.wideband.subcarriers;
        for (std::size_t s = 0; s < 2; ++s) {
            const double snr = std::pow(10.0, cfg.eval.snr_db[s] / 10.0);
            double sum = 0.0;
            std::size_t pairs = 0;
            for (const CameraRecord &r : data.test_records(0)) {
                const SceneChannels ch = build_channels(data.config, data.scenes[r.scene_index]);
                PhaseCodebook only;
                only.beams = {data.P[decoupled_bs_beam(ch.h_T, data.P, ref)]};
                for (std::size_t u : r.labeled_ues()) {
                    sum += joint_beam_search(ch.h_T, ch.h_R[u], only, data.Q, LinkBudget{snr * K, 1.0}).rate;
                    ++pairs;
                }
            }
            REQUIRE(pairs > 0);
            CHECK(tables[0].rate_snr.column("exhaustive")[s] ==
                  doctest::Approx(sum / static_cast<double>(pairs)).epsilon(1e-9));
        }
    }

    TEST_CASE("train, eval, protocol and datafrac run end to end")
    {
        const ExperimentConfig cfg = small_config();
        const fs::path out = kWork / "stages";
        fs::remove_all(out);
        const TrainedModels m = cmd_train(cfg, shared_dataset(), out);
        CHECK(m.per_camera.size() == 2);
        CHECK(fs::exists(out / "models.json"));
        CHECK(ResultTable::from_csv(slurp(out / "curve_cam5.csv")).num_rows() == 3);

        const auto ev = cmd_eval(cfg, shared_dataset(), out, out);
        CHECK(ev[0].bound.column("violations")[0] == 0.0);

        const auto pr = cmd_protocol(cfg, shared_dataset(), out, out);
        for (const ProtocolTables &t : pr) {
            const auto policy = t.runs.column("policy");
            const auto success = t.runs.column("success");
            const auto tried = t.runs.column("beams_tried");
            const auto access = t.runs.column("t_access_ms");
            for (double c : t.runs.column("causal"))
                CHECK(c == 1.0);
            for (double n : t.runs.column("ris_messages"))
                CHECK(n == 0.0);
            for (std::size_t i = 0; i < policy.size(); ++i) {
                if (policy[i] == kPolicyPredicted)
                    CHECK(tried[i] <= 3.0);
                if (policy[i] == kPolicyOracle && success[i] == 1.0) {
                    CHECK(tried[i] == 1.0);
                    CHECK(access[i] == 11.0);
                }
            }
            CHECK(t.summary.num_rows() == 3);
        }
        CHECK(fs::exists(out / "traces" / "cam4_oracle_0.jsonl"));

        const auto df = cmd_datafrac(cfg, shared_dataset(), out);
        CHECK(df[0].column("fraction") == std::vector<double>{0.5, 1.0});
        const auto n = df[0].column("train_records");
        CHECK(n[0] <= n[1]);
    }

    TEST_CASE("models must belong to the dataset")
    {
        const ExperimentConfig cfg = small_config();
        const fs::path foreign = kWork / "foreign";
        fs::remove_all(foreign);
        cmd_generate(small_config(10), foreign);
        const fs::path models = kWork / "foreign_models";
        cmd_train(small_config(10), foreign, models);
        CHECK_THROWS_AS(cmd_eval(cfg, shared_dataset(), models, kWork / "x"), PipelineError);
    }
}

#ifdef RISSIM_CLI
TEST_SUITE("command line")
{
    TEST_CASE("errors print one JSON line and exit nonzero")
    {
        const fs::path err = kWork / "cli_err.txt";
        fs::create_directories(kWork);
        const std::string cmd = std::string("\"") + RISSIM_CLI + "\" eval --data \"" + (kWork / "nowhere").string() +
                                "\" --models \"" + (kWork / "nowhere").string() + "\" --out \"" +
                                (kWork / "cli_out").string() + "\" > /dev/null 2> \"" + err.string() + "\"";
        const int rc = std::system(cmd.c_str());
        CHECK(rc != 0);
        const std::string text = slurp(err);
        CHECK(text.find("\"status\":\"error\"") != std::string::npos);
        CHECK(text.find("\"kind\":\"pipeline\"") != std::string::npos);
        CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    }

    TEST_CASE("generate reports its manifest")
    {
        const fs::path out = kWork / "cli_gen";
        const fs::path log = kWork / "cli_gen.txt";
        fs::remove_all(out);
        const std::string cmd = std::string("\"") + RISSIM_CLI + "\" generate --scenes 3 --out \"" + out.string() +
                                "\" > \"" + log.string() + "\"";
        CHECK(std::system(cmd.c_str()) == 0);
        CHECK(slurp(log).find("\"status\":\"ok\"") != std::string::npos);
        CHECK(fs::exists(out / "manifest.json"));
    }
}
#endif
