// qcnn: hybrid quantum-classical CNN training, evaluation, and ensembling.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include "qcnn/checkpoint.hpp"
#include "qcnn/data.hpp"
#include "qcnn/error.hpp"
#include "qcnn/hybrid.hpp"
#include "qcnn/metrics.hpp"
#include "qcnn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json report_to_json(const qcnn::metrics::MetricsReport& r) {
    auto cls = [](const qcnn::metrics::ClassMetrics& m) {
        return json{{"precision", m.precision},
                    {"recall", m.recall},
                    {"f1", m.f1},
                    {"zero_denominator", m.zero_denominator}};
    };
    return json{{"samples", r.sample_count},
                {"accuracy", r.accuracy},
                {"positive", cls(r.positive)},
                {"negative", cls(r.negative)},
                {"macro",
                 {{"precision", r.macro_precision},
                  {"recall", r.macro_recall},
                  {"f1", r.macro_f1}}}};
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw qcnn::DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw qcnn::DataError("cannot create output directory " + dir.string());
}

// Turns "--config FILE" into the equivalent "--key=value" tokens, spliced in
// right after the subcommand so later command-line flags override the file.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty() || args[0].empty() || args[0][0] == '-') return args;

    std::string config_path;
    std::vector<std::string> rest;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw qcnn::UsageError("--config needs a file path");
            config_path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }

    std::vector<std::string> out = {args[0]};
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw qcnn::UsageError("cannot read config file " + config_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw qcnn::UsageError("config file " + config_path + " line " +
                                       std::to_string(line_no) + ": expected key=value");
            }
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty() || key == "config") continue;
            out.push_back("--" + key + "=" + value);
        }
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

// Splits from --manifest when given, otherwise scan + seeded 3:1:1 split.
qcnn::data::Split resolve_split(const std::string& data_root, const std::string& manifest,
                                std::uint64_t seed) {
    if (!manifest.empty()) {
        return qcnn::data::split_from_manifest(qcnn::data::read_manifest(manifest));
    }
    const qcnn::data::ScanResult scan = qcnn::data::scan_dataset(data_root);
    return qcnn::data::stratified_split(scan.records, {seed});
}

struct TrainArgs {
    std::string model = "m1";
    std::string data_root;
    std::string manifest;
    std::string out = ".";
    std::string head = "analytic";
    int epochs = 100;
    double lr = 0.001;
    int batch = 4;
    std::uint64_t seed = 0;
    bool no_cache = false;
};

int run_train(const TrainArgs& args) {
    ensure_dir(args.out);
    const qcnn::data::Split split = resolve_split(args.data_root, args.manifest, args.seed);
    if (args.manifest.empty()) {
        qcnn::data::write_manifest(split, fs::path(args.out) / "split_manifest.tsv");
    }

    const int input_size = qcnn::hybrid::model_input_size(args.model);
    auto [source, indices] =
        qcnn::train::disk_split_source(args.data_root, split, input_size, !args.no_cache);

    qcnn::train::TrainConfig config;
    config.model_id = args.model;
    config.epochs = args.epochs;
    config.learning_rate = args.lr;
    config.batch_size = args.batch;
    config.seed = args.seed;
    config.head_mode = args.head;
    config.config_echo = {{"data_root", args.data_root},
                          {"manifest", args.manifest},
                          {"out", args.out}};

    std::cout << "training " << args.model << " on " << indices.train.size() << " samples ("
              << indices.val.size() << " val, " << indices.test.size() << " test)\n";

    const qcnn::train::TrainResult result = qcnn::train::train(config, *source, indices);

    const fs::path history_path = fs::path(args.out) / (args.model + "_history.tsv");
    {
        std::ofstream hist(history_path);
        hist << "# epoch\ttrain_loss\tval_loss\tval_accuracy\n";
        for (std::size_t e = 0; e < result.history.size(); ++e) {
            const auto& s = result.history[e];
            hist << (e + 1) << '\t' << s.train_loss << '\t' << s.val_loss << '\t'
                 << s.val_accuracy << '\n';
            std::cout << "epoch " << (e + 1) << "  train " << s.train_loss << "  val "
                      << s.val_loss << "  acc " << s.val_accuracy << "\n";
        }
    }

    const fs::path ckpt_path = fs::path(args.out) / (args.model + "_best.ckpt");
    qcnn::train::save_checkpoint(result.best, ckpt_path);
    std::cout << "best epoch " << (result.best_epoch + 1) << " (val loss " << result.best_val_loss
              << ") -> " << ckpt_path.string() << "\n";
    return 0;
}

struct EvalArgs {
    std::string ckpt;
    std::string data_root;
    std::string manifest;
    std::string split = "test";
    std::string out = ".";
    std::string head = "analytic";
    std::uint64_t seed = 0;
    bool no_cache = false;
};

int run_eval(const EvalArgs& args) {
    ensure_dir(args.out);
    const qcnn::train::Checkpoint ckpt = qcnn::train::load_checkpoint(args.ckpt);
    const qcnn::data::Split split = resolve_split(args.data_root, args.manifest, args.seed);

    const std::vector<qcnn::data::SampleRecord>* records = nullptr;
    if (args.split == "train") {
        records = &split.train;
    } else if (args.split == "val") {
        records = &split.val;
    } else if (args.split == "test") {
        records = &split.test;
    } else {
        throw qcnn::UsageError("--split must be train, val, or test");
    }

    const int input_size = qcnn::hybrid::model_input_size(ckpt.model_id);
    qcnn::train::DiskSource source(args.data_root, *records, input_size, !args.no_cache);
    std::vector<std::size_t> indices(source.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;

    const qcnn::train::EvalResult result =
        qcnn::train::evaluate(ckpt, source, indices, args.head);

    const fs::path pred_path =
        fs::path(args.out) / (ckpt.model_id + "_" + args.split + "_predictions.tsv");
    qcnn::train::write_predictions(result.records, pred_path);
    write_json(report_to_json(result.report),
               fs::path(args.out) / (ckpt.model_id + "_" + args.split + "_metrics.json"));

    std::cout << "model " << ckpt.model_id << " on " << args.split << " split\n"
              << qcnn::metrics::format_report(result.report) << "predictions -> "
              << pred_path.string() << "\n";
    return 0;
}

struct EnsembleArgs {
    std::vector<std::string> files;
    std::vector<std::string> weight_from;
    std::string method = "average";
    std::string out = ".";
};

int run_ensemble(const EnsembleArgs& args) {
    ensure_dir(args.out);
    std::vector<std::vector<qcnn::train::PredictionRecord>> preds;
    for (const std::string& file : args.files) {
        preds.push_back(qcnn::train::read_predictions(file));
    }
    std::vector<std::vector<qcnn::train::PredictionRecord>> val_preds;
    for (const std::string& file : args.weight_from) {
        val_preds.push_back(qcnn::train::read_predictions(file));
    }

    const qcnn::train::EnsembleEvalResult result = qcnn::train::ensemble_eval(
        preds, args.method, val_preds.empty() ? nullptr : &val_preds);

    const fs::path fused_path = fs::path(args.out) / ("ensemble_" + args.method + ".tsv");
    qcnn::train::write_predictions(result.fused, fused_path);
    json j = report_to_json(result.report);
    if (result.weights) {
        j["weights"] = result.weights->weights;
        j["misclassification_counts"] = result.weights->misclassification_counts;
    }
    write_json(j, fs::path(args.out) / ("ensemble_" + args.method + "_metrics.json"));

    std::cout << "ensemble (" << args.method << ") of " << preds.size() << " models\n";
    if (result.weights) {
        std::cout << "weights:";
        for (double w : result.weights->weights) std::cout << " " << w;
        std::cout << "\n";
    }
    std::cout << qcnn::metrics::format_report(result.report) << "fused -> "
              << fused_path.string() << "\n";
    return 0;
}

struct PredictArgs {
    std::string ckpt;
    std::string image;
    std::string head = "analytic";
};

int run_predict(const PredictArgs& args) {
    const qcnn::train::Checkpoint ckpt = qcnn::train::load_checkpoint(args.ckpt);
    qcnn::hybrid::HybridModel model = qcnn::hybrid::build_model(ckpt.model_id, 0);
    qcnn::train::load_into_model(ckpt, model);
    model.set_head(qcnn::hybrid::QuantumHead(qcnn::train::parse_head_mode(args.head, 0)));

    const int input_size = qcnn::hybrid::model_input_size(ckpt.model_id);
    const qcnn::nn::Tensor image = qcnn::data::load_image(fs::path(args.image), input_size);
    qcnn::hybrid::HybridModel::Context ctx;
    const auto probs = model.forward(image, ctx, qcnn::nn::Mode::Eval);
    const int label = probs[1] >= probs[0] ? 1 : 0;

    std::cout << args.image << "\n"
              << "p(benign)    = " << probs[0] << "\n"
              << "p(malignant) = " << probs[1] << "\n"
              << "prediction   = " << (label == 1 ? "malignant" : "benign") << "\n";
    return 0;
}

struct SynthArgs {
    std::string out;
    int n = 16;
    int size = 32;
    std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& args) {
    if (args.n > 999) throw qcnn::UsageError("synth-data supports at most 999 images per class");
    ensure_dir(fs::path(args.out) / "benign");
    ensure_dir(fs::path(args.out) / "malignant");

    const auto samples = qcnn::data::synthesize_dataset(args.n, args.seed, args.size, 3);
    int index_in_class[2] = {0, 0};
    for (const auto& s : samples) {
        cv::Mat img(args.size, args.size, CV_8UC3);
        for (int y = 0; y < args.size; ++y) {
            unsigned char* row = img.ptr<unsigned char>(y);
            for (int x = 0; x < args.size; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const float v = s.image.at3(c, y, x, args.size, args.size);
                    // BGR order on disk
                    row[3 * x + (2 - c)] = static_cast<unsigned char>(std::lround(v * 255.0f));
                }
            }
        }
        qcnn::data::SampleRecord record;
        record.label = s.label == 1 ? qcnn::data::Label::Malignant : qcnn::data::Label::Benign;
        record.subtype = "SYN";
        record.slide_id = std::to_string(args.seed % 100) + "-" + std::to_string(args.size);
        record.magnification = 400;
        record.sequence = ++index_in_class[s.label];
        const fs::path dir = fs::path(args.out) / (s.label == 1 ? "malignant" : "benign");
        cv::imwrite((dir / qcnn::data::render_filename(record)).string(), img);
    }
    std::cout << "wrote " << samples.size() << " synthetic images (" << args.n << " per class, "
              << args.size << "x" << args.size << ") under " << args.out << "\n";
    return 0;
}

struct SplitArgs {
    std::string data_root;
    std::string manifest = "split_manifest.tsv";
    std::uint64_t seed = 0;
};

int run_split(const SplitArgs& args) {
    const qcnn::data::ScanResult scan = qcnn::data::scan_dataset(args.data_root);
    std::size_t benign = 0, malignant = 0;
    for (const auto& r : scan.records) {
        (r.label == qcnn::data::Label::Benign ? benign : malignant) += 1;
    }
    const qcnn::data::Split split = qcnn::data::stratified_split(scan.records, {args.seed});
    qcnn::data::write_manifest(split, args.manifest);

    std::cout << "scanned " << scan.records.size() << " images (" << benign << " benign, "
              << malignant << " malignant), skipped " << scan.skipped.size() << " files\n";
    for (const auto& [path, reason] : scan.skipped) {
        std::cout << "  skipped " << path << ": " << reason << "\n";
    }
    std::cout << "split " << split.train.size() << "/" << split.val.size() << "/"
              << split.test.size() << " (train/val/test) -> " << args.manifest << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid quantum-classical CNN toolkit"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model end to end");
    train_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    train_cmd->add_option("--model", train_args.model, "m1, m2, or m3")
        ->check(CLI::IsMember({"m1", "m2", "m3", "toy"}));
    train_cmd->add_option("--data-root", train_args.data_root, "dataset directory")->required();
    train_cmd->add_option("--manifest", train_args.manifest, "reuse an existing split manifest");
    train_cmd->add_option("--out", train_args.out, "output directory");
    train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
    train_cmd->add_option("--lr", train_args.lr, "Adam learning rate");
    train_cmd->add_option("--batch", train_args.batch, "minibatch size");
    train_cmd->add_option("--seed", train_args.seed, "global seed");
    train_cmd->add_option("--head", train_args.head, "analytic or shots:N");
    train_cmd->add_flag("--no-cache", train_args.no_cache, "reload images every epoch");
    std::string config_doc;
    train_cmd->add_option("--config", config_doc, "flat key=value config file");

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    eval_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    eval_cmd->add_option("--ckpt", eval_args.ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--data-root", eval_args.data_root, "dataset directory")->required();
    eval_cmd->add_option("--manifest", eval_args.manifest, "split manifest");
    eval_cmd->add_option("--split", eval_args.split, "train, val, or test");
    eval_cmd->add_option("--out", eval_args.out, "output directory");
    eval_cmd->add_option("--head", eval_args.head, "analytic or shots:N");
    eval_cmd->add_option("--seed", eval_args.seed, "split seed when no manifest is given");
    eval_cmd->add_flag("--no-cache", eval_args.no_cache, "do not cache decoded images");
    eval_cmd->add_option("--config", config_doc, "flat key=value config file");

    EnsembleArgs ens_args;
    CLI::App* ens_cmd = app.add_subcommand("ensemble", "fuse prediction files");
    ens_cmd->add_option("files", ens_args.files, "per-model prediction files")
        ->required()
        ->expected(-2);
    ens_cmd->add_option("--method", ens_args.method, "majority, average, or weighted")
        ->check(CLI::IsMember({"majority", "average", "weighted"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    ens_cmd->add_option("--weight-from", ens_args.weight_from,
                        "per-model validation prediction files (weighted method)");
    ens_cmd->add_option("--out", ens_args.out, "output directory");
    ens_cmd->add_option("--config", config_doc, "flat key=value config file");

    PredictArgs pred_args;
    CLI::App* pred_cmd = app.add_subcommand("predict", "classify a single image");
    pred_cmd->add_option("--ckpt", pred_args.ckpt, "checkpoint file")->required();
    pred_cmd->add_option("--image", pred_args.image, "image file")->required();
    pred_cmd->add_option("--head", pred_args.head, "analytic or shots:N");

    SynthArgs synth_args;
    CLI::App* synth_cmd = app.add_subcommand("synth-data", "emit a synthetic dataset to disk");
    synth_cmd->add_option("--out", synth_args.out, "output directory")->required();
    synth_cmd->add_option("--n", synth_args.n, "images per class");
    synth_cmd->add_option("--size", synth_args.size, "image side length");
    synth_cmd->add_option("--seed", synth_args.seed, "generator seed");

    SplitArgs split_args;
    CLI::App* split_cmd = app.add_subcommand("split", "scan a dataset and emit a manifest");
    split_cmd->add_option("--data-root", split_args.data_root, "dataset directory")->required();
    split_cmd->add_option("--manifest", split_args.manifest, "manifest output path");
    split_cmd->add_option("--seed", split_args.seed, "split seed");

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
        if (train_cmd->parsed()) return run_train(train_args);
        if (eval_cmd->parsed()) return run_eval(eval_args);
        if (ens_cmd->parsed()) return run_ensemble(ens_args);
        if (pred_cmd->parsed()) return run_predict(pred_args);
        if (synth_cmd->parsed()) return run_synth(synth_args);
        if (split_cmd->parsed()) return run_split(split_args);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const qcnn::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const qcnn::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const qcnn::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return 4;
    } catch (const qcnn::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const qcnn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
