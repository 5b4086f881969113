#include "gm/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include <json.hpp>

#include "gm/checks.hpp"
#include "gm/displacement.hpp"
#include "gm/group_spec.hpp"
#include "gm/io.hpp"
#include "gm/nn.hpp"

namespace gm::cli {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------
// Strict config handling: unknown keys are rejected everywhere, required
// keys and types are checked up front (mirrors schemas/experiment.schema.json).

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

const json& require_key(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key))
        throw std::invalid_argument("config: missing key '" + key + "' in " + where);
    return obj.at(key);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

nn::SyntheticTask parse_task(const json& j, std::uint64_t seed) {
    reject_unknown(j, "task",
                   {"kind", "samples", "test_fraction", "support_radius", "sigma", "rank",
                    "classes", "noise"});
    nn::SyntheticTask task;
    std::string kind = require_key(j, "task", "kind").get<std::string>();
    if (kind == "exact_gconv_target")
        task.kind = nn::TaskKind::ExactGconv;
    else if (kind == "perturbed_gconv_target")
        task.kind = nn::TaskKind::PerturbedGconv;
    else if (kind == "invariant_classification")
        task.kind = nn::TaskKind::InvariantClassification;
    else
        throw std::invalid_argument("config: unknown task kind '" + kind + "'");
    task.samples = get_or(j, "samples", 256);
    task.test_fraction = get_or(j, "test_fraction", 0.25);
    task.support_radius = get_or(j, "support_radius", 1);
    task.sigma = get_or(j, "sigma", 0.0);
    task.rank = get_or(j, "rank", 1);
    task.classes = get_or(j, "classes", 3);
    task.noise = get_or(j, "noise", 0.0);
    task.seed = seed;
    return task;
}

nn::TrainConfig parse_train(const json& j, std::uint64_t seed) {
    reject_unknown(j, "train",
                   {"optimizer", "lr", "beta1", "beta2", "eps", "weight_decay", "batch_size",
                    "max_epochs", "patience"});
    nn::TrainConfig cfg;
    cfg.optimizer.kind = get_or<std::string>(j, "optimizer", "adam");
    if (cfg.optimizer.kind != "adam" && cfg.optimizer.kind != "sgd")
        throw std::invalid_argument("config: unknown optimizer '" + cfg.optimizer.kind + "'");
    cfg.optimizer.lr = get_or(j, "lr", 0.003);
    cfg.optimizer.beta1 = get_or(j, "beta1", 0.9);
    cfg.optimizer.beta2 = get_or(j, "beta2", 0.999);
    cfg.optimizer.eps = get_or(j, "eps", 1e-8);
    cfg.optimizer.weight_decay = get_or(j, "weight_decay", 0.0);
    if (cfg.optimizer.lr <= 0 || cfg.optimizer.weight_decay < 0)
        throw std::invalid_argument("config: rates must be positive");
    cfg.batch_size = get_or(j, "batch_size", 0);
    cfg.max_epochs = get_or(j, "max_epochs", 500);
    cfg.patience = get_or(j, "patience", 0);
    cfg.seed = seed;
    return cfg;
}

// A built model keeps the input group alive alongside the network.
struct BuiltModel {
    std::shared_ptr<const FiniteGroup> group;
    nn::Network net;
    json layer_report;  // per-layer parameter summary
};

BuiltModel build_model(std::shared_ptr<const FiniteGroup> group, const json& layers,
                       std::mt19937_64& rng) {
    const FiniteGroup& gref = *group;
    BuiltModel model{std::move(group), nn::Network(gref, 1), json::array()};
    const FiniteGroup* cur = model.group.get();

    for (const json& spec : layers) {
        reject_unknown(spec, "layer",
                       {"type", "group", "k", "out_channels", "error", "ldr_rank", "residual",
                        "generators", "mode", "out_dim"});
        std::string type = require_key(spec, "layer", "type").get<std::string>();
        json entry{{"type", type}};
        if (type == "conv") {
            if (spec.contains("group")) {
                FiniteGroup named = parse_group_spec(spec.at("group").get<std::string>());
                if (named.order() != cur->order())
                    throw std::invalid_argument(
                        "config: conv layer group does not match the running group");
            }
            int k = get_or(spec, "k", 1);
            int out_channels = get_or(spec, "out_channels", 1);
            std::string error = get_or<std::string>(spec, "error", "none");
            ErrorKind kind = ErrorKind::None;
            int rank = 0;
            if (error == "full") {
                kind = ErrorKind::FullF;
            } else if (error == "ldr") {
                kind = ErrorKind::Ldr;
                rank = get_or(spec, "ldr_rank", 1);
            } else if (error != "none") {
                throw std::invalid_argument("config: unknown error kind '" + error + "'");
            }
            GmConvLayer layer = make_conv_layer(*cur, k, model.net.output_channels(),
                                                out_channels, kind, rank, &rng);
            entry["params"] = layer.param_count();
            entry["params_per_channel_pair"] = layer.params_per_channel_pair();
            entry["kernel_support"] = layer.support_size();
            model.net.add_conv(std::move(layer), get_or(spec, "residual", false));
        } else if (type == "prelu") {
            model.net.add_prelu();
            entry["params"] = model.net.output_channels();
        } else if (type == "pool" || type == "stride") {
            std::vector<ElementId> gens;
            for (const json& v : require_key(spec, type + " layer", "generators"))
                gens.push_back(v.get<ElementId>());
            Subgroup sub = Subgroup::from_generators(*cur, gens);
            if (type == "pool") {
                std::string mode = get_or<std::string>(spec, "mode", "mean");
                if (mode != "mean" && mode != "max")
                    throw std::invalid_argument("config: unknown pool mode '" + mode + "'");
                model.net.add_pool(make_pool_layer(*cur, sub,
                                                   mode == "mean" ? PoolMode::Mean
                                                                  : PoolMode::Max,
                                                   model.net.output_channels()));
                entry["params"] = 0;
                cur = &std::get<GmPoolLayer>(model.net.layers().back().impl)
                           .partition.subgroup.as_group();
            } else {
                int k = get_or(spec, "k", 1);
                int out_channels = get_or(spec, "out_channels", 1);
                GmConvLayer conv = make_conv_layer(*cur, k, model.net.output_channels(),
                                                   out_channels, ErrorKind::None, 0, &rng);
                entry["params"] = conv.param_count();
                model.net.add_stride(make_stride_layer(std::move(sub), std::move(conv)));
                cur = &std::get<StrideLayer>(model.net.layers().back().impl)
                           .subgroup.as_group();
            }
            entry["subgroup_order"] = cur->order();
        } else if (type == "dense") {
            int out_dim = require_key(spec, "dense layer", "out_dim").get<int>();
            model.net.add_dense(out_dim, &rng);
            const auto& dense = std::get<nn::DenseLayer>(model.net.layers().back().impl);
            entry["params"] = dense.weight.size() + dense.bias.size();
        } else {
            throw std::invalid_argument("config: unknown layer type '" + type + "'");
        }
        model.layer_report.push_back(std::move(entry));
    }
    return model;
}

// ---------------------------------------------------------------------
// Output writers.

void write_metrics_csv(const std::vector<nn::EpochRow>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "epoch,train_loss,val_loss,equivariance_error,wall_ms\n";
    char buf[128];
    for (const auto& row : history) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.3f\n", row.epoch,
                      row.train_loss, row.val_loss, row.equiv_error, row.wall_ms);
        out << buf;
    }
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << j.dump(2) << '\n';
}

void write_params(nn::Network& net, const json& layer_report, const std::string& dir) {
    auto blocks = net.param_blocks();
    std::size_t total = 0;
    for (auto* b : blocks) total += b->size();
    Eigen::MatrixXd flat(total, 1);
    json manifest{{"total", total}, {"blocks", json::array()}};
    std::size_t at = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        manifest["blocks"].push_back(
            json{{"index", b}, {"offset", at}, {"size", blocks[b]->size()}});
        for (double v : *blocks[b]) flat(static_cast<Eigen::Index>(at++), 0) = v;
    }
    manifest["layers"] = layer_report;
    write_matrix_gmat(flat, dir + "/params.gmat");
    write_json(manifest, dir + "/manifest.json");
}

// ---------------------------------------------------------------------
// Commands.

struct CommonOpts {
    std::string group_spec = "C8";
    std::string group2_spec = "C2";
    std::uint64_t seed = 0;
    int trials = 1000;
    std::string out_dir;
    std::string format = "text";
};

int cmd_group_info(const CommonOpts& opts) {
    FiniteGroup g = parse_group_spec(opts.group_spec);
    std::map<int, int> histogram;
    for (ElementId e = 0; e < static_cast<ElementId>(g.order()); ++e)
        ++histogram[g.word_dist(e)];
    std::vector<std::size_t> ball_sizes;
    for (int k = 0; k <= g.diameter(); ++k) ball_sizes.push_back(word_ball(g, k).size());

    if (opts.format == "json") {
        json j{{"group", opts.group_spec},
               {"order", g.order()},
               {"identity", g.identity()},
               {"diameter", g.diameter()},
               {"generators", g.generators()},
               {"ball_sizes", ball_sizes}};
        for (const auto& [dist, count] : histogram)
            j["word_distance_histogram"][std::to_string(dist)] = count;
        std::cout << j.dump(2) << '\n';
        return 0;
    }
    std::cout << "group " << opts.group_spec << "\norder " << g.order() << "\ngenerators:";
    for (ElementId e : g.generators()) std::cout << ' ' << g.label(e);
    std::cout << "\ndiameter " << g.diameter() << "\nword-distance histogram:";
    for (const auto& [dist, count] : histogram) std::cout << ' ' << dist << ':' << count;
    std::cout << "\nball sizes:";
    for (std::size_t k = 0; k < ball_sizes.size(); ++k)
        std::cout << " N_" << k << '=' << ball_sizes[k];
    std::cout << '\n';
    return 0;
}

int cmd_analyze(const std::string& matrix_file, const CommonOpts& opts,
                const std::vector<std::string>& dim_classes) {
    FiniteGroup g = parse_group_spec(opts.group_spec);
    Eigen::MatrixXd m = read_matrix_auto(matrix_file);
    if (m.rows() != g.order() || m.cols() != g.order())
        throw std::invalid_argument("matrix dimensions do not match the group order");

    GmDistance dist = distance_to_gm(m, g);
    DisplacementResult disp = displacement_D(F_of(m, g));

    json report{{"file", matrix_file},
                {"group", opts.group_spec},
                {"order", g.order()},
                {"distance", dist.distance},
                {"relative_distance", dist.distance / std::max(m.norm(), 1e-300)},
                {"displacement_rank", disp.rank},
                {"rank_tol", disp.rank_tol}};
    for (Eigen::Index i = 0; i < dist.projection.coeffs.size(); ++i)
        report["coefficients"].push_back(dist.projection.coeffs(i));

    for (const std::string& cls : dim_classes) {
        if (cls == "gm") {
            std::vector<Eigen::MatrixXd> basis;
            for (ElementId e = 0; e < static_cast<ElementId>(g.order()); ++e)
                basis.push_back(densify(group_diagonal(g, e)));
            report["dim_D"]["gm"] = displacement_dimension(g, basis);
        } else if (cls.rfind("ldr:", 0) == 0) {
            int r = std::stoi(cls.substr(4));
            std::vector<ElementId> positions;
            for (int j = 0; j < r; ++j) positions.push_back(static_cast<ElementId>(j));
            report["dim_D"]["ldr_r" + std::to_string(r)] =
                displacement_dimension(g, ldr_class_basis(g, positions));
        } else {
            throw std::invalid_argument("unknown dim class '" + cls + "' (use gm or ldr:<r>)");
        }
    }

    // Distance-bound checks of the input against itself.
    BoundCheck t = prop2_transpose(m, g);
    BoundCheck p = prop2_product(m, m, g);
    report["prop2"]["transpose"] = json{{"left", t.left}, {"right", t.right}, {"pass", t.pass}};
    report["prop2"]["product_with_self"] =
        json{{"left", p.left}, {"right", p.right}, {"pass", p.pass}};
    Prop3Report p3 = prop3_transpose(g, {m});
    report["prop3"]["transpose_dim"] = json{
        {"dim", p3.dim_result}, {"expected", p3.dim_a}, {"pass", p3.pass}};
    Prop3Report p3s = prop3_sum(g, {m}, {m.transpose()});
    report["prop3"]["sum_dim"] = json{
        {"dim", p3s.dim_result}, {"bound", p3s.bound}, {"pass", p3s.pass}};

    std::string text = report.dump(2);
    if (!opts.out_dir.empty()) {
        std::filesystem::create_directories(opts.out_dir);
        write_json(report, opts.out_dir + "/analyze.json");
    }
    std::cout << text << '\n';
    return 0;
}

int cmd_check(const std::string& suite, const CommonOpts& opts, const std::string& window_spec,
              int radius) {
    checks::SuiteResult result;
    if (suite == "ddim") {
        PaddedWindow window =
            window_spec.find('x') == std::string::npos
                ? PaddedWindow::line(std::stoi(window_spec), radius)
                : PaddedWindow::box(std::stoi(window_spec.substr(0, window_spec.find('x'))),
                                    std::stoi(window_spec.substr(window_spec.find('x') + 1)),
                                    radius);
        result = checks::check_ddim(window);
    } else {
        FiniteGroup g = parse_group_spec(opts.group_spec);
        if (suite == "prop1" || suite == "prop2" || suite == "prop3") {
            FiniteGroup h = parse_group_spec(opts.group2_spec);
            FiniteGroup gh = direct_product(g, h);
            if (suite == "prop1")
                result = checks::check_prop1(g, h, gh, opts.trials, opts.seed);
            else if (suite == "prop2")
                result = checks::check_prop2(g, h, gh, opts.trials, opts.seed);
            else
                result = checks::check_prop3(g, h, gh);
        } else if (suite == "lemma1") {
            result = checks::check_lemma1(g, opts.trials, opts.seed);
        } else if (suite == "gradcheck") {
            result = checks::check_gradcheck(g, opts.trials, opts.seed);
        } else if (suite == "equiv") {
            result = checks::check_equivariance(g, opts.trials, opts.seed);
        } else if (suite == "displacement") {
            result = checks::check_displacement(g, opts.trials, opts.seed);
        } else {
            throw std::invalid_argument("unknown suite '" + suite + "'");
        }
    }

    std::cout << (result.pass ? "PASS" : "FAIL") << ' ' << result.name << ": " << result.trials
              << " trials, " << result.failures << " failures";
    if (result.skipped) std::cout << ", " << result.skipped << " skipped";
    std::cout << " (" << result.detail << ")\n";

    if (!result.pass) {
        // Dump everything needed to replay the first counterexample.
        std::string dir = opts.out_dir.empty() ? "gmcnn-failures" : opts.out_dir;
        std::filesystem::create_directories(dir);
        json replay{{"suite", suite},
                    {"group", opts.group_spec},
                    {"group2", opts.group2_spec},
                    {"trials", opts.trials},
                    {"seed", opts.seed},
                    {"failing_trial", result.failing_trial},
                    {"failing_trial_seed", result.failing_seed}};
        write_json(replay, dir + "/replay.json");
        for (std::size_t i = 0; i < result.counterexample.size(); ++i)
            write_matrix_csv(result.counterexample[i],
                             dir + "/counterexample_" + std::to_string(i) + ".csv");
        std::cout << "counterexample written to " << dir << '\n';
    }
    return result.pass ? 0 : 1;
}

int cmd_train(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error(config_path + ": cannot open");
    json cfg = json::parse(in);

    reject_unknown(cfg, "config root",
                   {"mode", "group", "seed", "out", "task", "train", "model", "levels",
                    "models"});
    std::string mode = require_key(cfg, "config root", "mode").get<std::string>();
    std::string group_spec = require_key(cfg, "config root", "group").get<std::string>();
    std::uint64_t seed = require_key(cfg, "config root", "seed").get<std::uint64_t>();
    std::string out_dir = require_key(cfg, "config root", "out").get<std::string>();
    nn::SyntheticTask task = parse_task(require_key(cfg, "config root", "task"), seed);
    nn::TrainConfig train_cfg = parse_train(require_key(cfg, "config root", "train"), seed);

    auto group = std::make_shared<const FiniteGroup>(parse_group_spec(group_spec));
    std::filesystem::create_directories(out_dir);

    if (mode == "train") {
        const json& model_spec = require_key(cfg, "config root", "model");
        reject_unknown(model_spec, "model", {"layers"});
        std::mt19937_64 rng(seed ^ 0x696e6974ULL);
        BuiltModel model =
            build_model(group, require_key(model_spec, "model", "layers"), rng);

        nn::Dataset data = nn::make_task(*group, task);
        nn::TrainResult result = nn::train_network(model.net, data, train_cfg);

        write_metrics_csv(result.history, out_dir + "/metrics.csv");
        json report{{"mode", "train"},
                    {"group", group_spec},
                    {"order", group->order()},
                    {"seed", seed},
                    {"param_count", result.param_count},
                    {"epochs_run", result.history.size()},
                    {"final_train_loss", result.final_train_loss},
                    {"final_test_loss", result.final_val_loss},
                    {"equivariance_error", result.equiv_error},
                    {"layers", model.layer_report}};
        write_json(report, out_dir + "/report.json");
        write_params(model.net, model.layer_report, out_dir);
        std::cout << "final_test_loss " << result.final_val_loss << ", equivariance_error "
                  << result.equiv_error << ", outputs in " << out_dir << '\n';
        return 0;
    }

    if (mode != "sweep") throw std::invalid_argument("config: unknown mode '" + mode + "'");
    std::vector<double> levels;
    for (const json& v : require_key(cfg, "config root", "levels"))
        levels.push_back(v.get<double>());
    std::vector<std::pair<std::string, nn::ModelBuilder>> builders;
    json model_reports = json::array();
    for (const json& spec : require_key(cfg, "config root", "models")) {
        reject_unknown(spec, "models[]", {"name", "layers"});
        std::string name = require_key(spec, "models[]", "name").get<std::string>();
        json layers = require_key(spec, "models[]", "layers");
        builders.emplace_back(name, [group, layers](std::mt19937_64& rng) {
            return build_model(group, layers, rng).net;
        });
        model_reports.push_back(json{{"name", name}, {"layers", layers}});
    }

    auto rows = nn::run_equivariance_sweep(*group, task, levels, builders, train_cfg);

    // One CSV row per perturbation level, one column pair per model.
    std::ofstream csv(out_dir + "/sweep.csv");
    csv << "level";
    for (const auto& [name, _] : builders)
        csv << ',' << name << "_equiv_error," << name << "_test_loss";
    csv << '\n';
    json report{{"mode", "sweep"}, {"group", group_spec}, {"seed", seed},
                {"models", model_reports}, {"rows", json::array()}};
    for (const auto& row : rows) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", row.level);
        csv << buf;
        json jrow{{"level", row.level}};
        for (const auto& m : row.models) {
            std::snprintf(buf, sizeof buf, ",%.17g", m.equiv_error);
            csv << buf;
            std::snprintf(buf, sizeof buf, ",%.17g", m.test_loss);
            csv << buf;
            jrow["models"].push_back(json{{"name", m.name},
                                          {"equiv_error", m.equiv_error},
                                          {"test_loss", m.test_loss}});
        }
        csv << '\n';
        report["rows"].push_back(std::move(jrow));
    }
    write_json(report, out_dir + "/report.json");
    std::cout << "sweep over " << levels.size() << " levels written to " << out_dir << '\n';
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Group-matrix convolution toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string matrix_file, suite, config_path, window_spec = "8";
    int radius = 1;
    std::vector<std::string> dim_classes{"gm", "ldr:1"};

    CLI::App* info = app.add_subcommand("group-info", "inspect a group spec");
    info->add_option("--group", opts.group_spec, "group spec, e.g. C8, D4, C4xC4");
    info->add_option("--format", opts.format)->check(CLI::IsMember({"text", "json"}));

    CLI::App* analyze = app.add_subcommand("analyze", "analyze a matrix against a group");
    analyze->add_option("matrix", matrix_file, "CSV or GMAT matrix file")->required();
    analyze->add_option("--group", opts.group_spec);
    analyze->add_option("--dim-class", dim_classes, "classes for dim_D (gm, ldr:<r>)");
    analyze->add_option("--out", opts.out_dir, "directory for the JSON report");

    CLI::App* check = app.add_subcommand("check", "run a property suite");
    check
        ->add_option("suite", suite,
                     "prop1|prop2|prop3|lemma1|ddim|gradcheck|equiv|displacement")
        ->required();
    check->add_option("--group", opts.group_spec);
    check->add_option("--group2", opts.group2_spec, "second group (prop1-3 Kronecker items)");
    check->add_option("--trials", opts.trials);
    check->add_option("--seed", opts.seed);
    check->add_option("--out", opts.out_dir, "counterexample dump directory");
    check->add_option("--window", window_spec, "ddim window, e.g. 8 or 8x8");
    check->add_option("--radius", radius, "ddim kernel radius");

    CLI::App* train = app.add_subcommand("train", "run a training/sweep experiment config");
    train->add_option("config", config_path, "experiment JSON config")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (info->parsed()) return cmd_group_info(opts);
        if (analyze->parsed()) return cmd_analyze(matrix_file, opts, dim_classes);
        if (check->parsed()) return cmd_check(suite, opts, window_spec, radius);
        return cmd_train(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace gm::cli
