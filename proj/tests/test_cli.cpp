// End-to-end exercises of the installed command-line surface. Every call
// shells out to the real binary.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qcnn/trainer.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = QCNN_CLI_PATH;

struct Invocation {
    int exit_code;
    std::string output;
};

Invocation run(const std::string& args, const fs::path& dir) {
    const fs::path log = dir / "last_run.log";
    const std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::string output((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    int code = -1;
    if (WIFEXITED(status)) code = WEXITSTATUS(status);
    return {code, output};
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("qcnn_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

} // namespace

TEST_CASE("the full pipeline: synth-data, split, train, eval, ensemble, predict") {
    Workspace ws;
    const std::string data = (ws.dir / "data").string();
    const std::string out = (ws.dir / "out").string();
    const std::string manifest = (ws.dir / "manifest.tsv").string();

    // synthetic dataset to disk
    Invocation r = run("synth-data --out " + data + " --n 12 --size 16 --seed 4", ws.dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(fs::exists(fs::path(data) / "benign"));

    // manifest only
    r = run("split --data-root " + data + " --manifest " + manifest + " --seed 2", ws.dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(r.output.find("24 images") != std::string::npos);
    CHECK(fs::exists(manifest));

    // train twice with the same seed: checkpoints must match byte for byte
    const std::string train_flags = "train --model toy --data-root " + data + " --manifest " +
                                    manifest + " --epochs 3 --seed 11 --out ";
    r = run(train_flags + out, ws.dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    const fs::path ckpt = fs::path(out) / "toy_best.ckpt";
    REQUIRE(fs::exists(ckpt));
    CHECK(fs::exists(fs::path(out) / "toy_history.tsv"));

    const std::vector<char> first_bytes = slurp(ckpt);
    r = run(train_flags + out, ws.dir); // identical config, same destination
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(first_bytes == slurp(ckpt));

    // evaluate on val and test splits
    for (const std::string split : {"val", "test"}) {
        r = run("eval --ckpt " + ckpt.string() + " --data-root " + data + " --manifest " +
                    manifest + " --split " + split + " --out " + out,
                ws.dir);
        REQUIRE_MESSAGE(r.exit_code == 0, r.output);
        CHECK(fs::exists(fs::path(out) / ("toy_" + split + "_predictions.tsv")));
    }
    const fs::path metrics_json = fs::path(out) / "toy_test_metrics.json";
    REQUIRE(fs::exists(metrics_json));
    {
        std::ifstream in(metrics_json);
        const nlohmann::json j = nlohmann::json::parse(in);
        CHECK(j.contains("accuracy"));
        CHECK(j["samples"].get<int>() == 6); // 12 per class: 7/2/3 each, so 6 test
        CHECK(j["macro"].contains("f1"));
    }

    // ensemble of the model with itself, weighted by validation records
    const std::string test_preds = (fs::path(out) / "toy_test_predictions.tsv").string();
    const std::string val_preds = (fs::path(out) / "toy_val_predictions.tsv").string();
    r = run("ensemble " + test_preds + " " + test_preds + " --method weighted --weight-from " +
                val_preds + " --weight-from " + val_preds + " --out " + out,
            ws.dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(r.output.find("weights: 0.5 0.5") != std::string::npos);
    REQUIRE(fs::exists(fs::path(out) / "ensemble_weighted.tsv"));

    // fused-with-self must match the single model's predictions
    const auto single = qcnn::train::read_predictions(test_preds);
    const auto fused = qcnn::train::read_predictions(fs::path(out) / "ensemble_weighted.tsv");
    REQUIRE(single.size() == fused.size());
    for (std::size_t i = 0; i < single.size(); ++i) {
        CHECK(single[i].id == fused[i].id);
        CHECK(single[i].predicted == fused[i].predicted);
    }

    // single-image prediction
    std::string image;
    for (const auto& entry : fs::directory_iterator(fs::path(data) / "malignant")) {
        image = entry.path().string();
        break;
    }
    REQUIRE(!image.empty());
    r = run("predict --ckpt " + ckpt.string() + " --image " + image, ws.dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(r.output.find("p(malignant)") != std::string::npos);

    // config file applies, flags override
    const fs::path cfg = ws.dir / "train.cfg";
    {
        std::ofstream f(cfg);
        f << "# flat key=value config\nmodel=toy\nepochs=2\nseed=11\n";
    }
    r = run("train --data-root " + data + " --manifest " + manifest + " --config " +
                cfg.string() + " --out " + (ws.dir / "out3").string(),
            ws.dir);
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(r.output.find("training toy") != std::string::npos);
    CHECK(r.output.find("epoch 2") != std::string::npos);
    CHECK(r.output.find("epoch 3") == std::string::npos);
}

TEST_CASE("exit codes distinguish usage, data, and checkpoint failures") {
    Workspace ws;
    // unknown flag -> 1
    Invocation r = run("train --bogus-flag", ws.dir);
    CHECK(r.exit_code == 1);

    // missing dataset -> 2
    r = run("train --model toy --data-root " + (ws.dir / "nope").string(), ws.dir);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("data error") != std::string::npos);

    // not a checkpoint -> 4
    const fs::path junk = ws.dir / "junk.ckpt";
    {
        std::ofstream f(junk);
        f << "garbage";
    }
    r = run("eval --ckpt " + junk.string() + " --data-root " + ws.dir.string(), ws.dir);
    CHECK(r.exit_code == 4);

    // help -> 0
    r = run("--help", ws.dir);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("Subcommands") != std::string::npos);
}
