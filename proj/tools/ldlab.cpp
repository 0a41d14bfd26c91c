// Command-line front end: lab / geld / detect / props subcommands over a JSON
// config with flag overrides. Exit codes: 0 ok, 2 config or input error,
// 3 property violation, 1 internal error.

#include <array>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldlab/dataset.hpp"
#include "ldlab/evaluate.hpp"
#include "ldlab/geld.hpp"
#include "ldlab/io.hpp"
#include "ldlab/learners.hpp"
#include "ldlab/regression_lab.hpp"
#include "ldlab/weighting.hpp"

namespace {

using ldlab::io::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known) throw ConfigError("config: unknown key '" + where + "." + key + "'");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

struct RunConfig {
    std::uint64_t seed = 3;
    std::string out = "out";

    // lab / props sweep settings
    ldlab::RidgeConfig ridge;
    int pool_size = 4000;
    int eval_size = 200;
    double noise_sigma = 1.2;

    // classification dataset settings
    int classes = 3;
    std::vector<int> per_class = {200, 200, 200};
    int dimension = 2;
    double separation = 6.0;
    int validation_per_class = 60;
    std::string dataset_csv;     // optional: load training data instead
    std::string validation_csv;  // required with dataset_csv
    ldlab::NoiseSpec noise;      // rate 0 disables injection

    ldlab::LearnerSpec learner;
    ldlab::GeldConfig geld;
    bool dump_tensor = false;

    ldlab::DetectionSpec detect;
    std::vector<double> r_grid = {0.8, 0.9, 1.0, 1.1, 1.2};

    ldlab::PropositionParams props;
    std::vector<std::string> checks = {"P2", "P3", "P4", "P5", "P6",
                                       "C1", "C2", "C3", "C4"};
};

ldlab::NoiseKind parse_noise_kind(const std::string& s) {
    if (s == "symmetric") return ldlab::NoiseKind::symmetric;
    if (s == "pair_flip") return ldlab::NoiseKind::pair_flip;
    if (s == "salt_pepper") return ldlab::NoiseKind::salt_pepper;
    throw ConfigError("config: unknown noise kind '" + s + "'");
}

ldlab::LearnerKind parse_learner_kind(const std::string& s) {
    if (s == "softmax_regression") return ldlab::LearnerKind::softmax_regression;
    if (s == "mlp") return ldlab::LearnerKind::mlp;
    throw ConfigError("config: unknown learner kind '" + s + "'");
}

RunConfig load_config(const std::string& path) {
    RunConfig c;
    c.learner.epochs = 10;
    c.learner.learning_rate = 0.3;
    c.learner.batch_size = 8;
    c.geld.repeats = 3;
    c.geld.folds = 5;
    c.detect.v = 0.4;
    c.detect.repeats = 3;
    c.noise.kind = ldlab::NoiseKind::pair_flip;
    c.noise.rate = 0.4;
    if (path.empty()) return c;

    json root;
    try {
        root = json::parse(ldlab::io::read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("config: cannot parse '" + path + "': " + e.what());
    }
    require_keys(root, "", {"seed", "out", "lab", "dataset", "learner", "geld", "detect",
                            "props"});
    c.seed = get_or<std::uint64_t>(root, "seed", c.seed);
    c.out = get_or<std::string>(root, "out", c.out);

    if (root.contains("lab")) {
        const json& lab = root["lab"];
        require_keys(lab, "lab", {"degree", "ensemble_size", "train_size", "pool_size",
                                  "eval_size", "noise_sigma", "lambda_grid"});
        c.ridge.degree = get_or(lab, "degree", c.ridge.degree);
        c.ridge.ensemble_size = get_or(lab, "ensemble_size", c.ridge.ensemble_size);
        c.ridge.train_size = get_or(lab, "train_size", c.ridge.train_size);
        c.pool_size = get_or(lab, "pool_size", c.pool_size);
        c.eval_size = get_or(lab, "eval_size", c.eval_size);
        c.noise_sigma = get_or(lab, "noise_sigma", c.noise_sigma);
        if (lab.contains("lambda_grid"))
            c.ridge.lambda_grid = get_or(lab, "lambda_grid", c.ridge.lambda_grid);
    }
    if (root.contains("dataset")) {
        const json& ds = root["dataset"];
        require_keys(ds, "dataset",
                     {"classes", "per_class", "dimension", "separation",
                      "validation_per_class", "csv", "validation_csv", "noise"});
        c.classes = get_or(ds, "classes", c.classes);
        c.per_class = get_or(ds, "per_class", c.per_class);
        c.dimension = get_or(ds, "dimension", c.dimension);
        c.separation = get_or(ds, "separation", c.separation);
        c.validation_per_class = get_or(ds, "validation_per_class", c.validation_per_class);
        c.dataset_csv = get_or<std::string>(ds, "csv", "");
        c.validation_csv = get_or<std::string>(ds, "validation_csv", "");
        if (ds.contains("noise")) {
            const json& nz = ds["noise"];
            require_keys(nz, "dataset.noise", {"kind", "rate", "snr"});
            c.noise.kind = parse_noise_kind(get_or<std::string>(nz, "kind", "pair_flip"));
            c.noise.rate = get_or(nz, "rate", c.noise.rate);
            c.noise.snr = get_or(nz, "snr", c.noise.snr);
        }
    }
    if (root.contains("learner")) {
        const json& ln = root["learner"];
        require_keys(ln, "learner",
                     {"kind", "epochs", "learning_rate", "lr_decay", "lr_decay_period",
                      "hidden_sizes", "batch_size", "l2"});
        c.learner.kind =
            parse_learner_kind(get_or<std::string>(ln, "kind", "softmax_regression"));
        c.learner.epochs = get_or(ln, "epochs", c.learner.epochs);
        c.learner.learning_rate = get_or(ln, "learning_rate", c.learner.learning_rate);
        c.learner.lr_decay = get_or(ln, "lr_decay", c.learner.lr_decay);
        c.learner.lr_decay_period = get_or(ln, "lr_decay_period", c.learner.lr_decay_period);
        c.learner.hidden_sizes = get_or(ln, "hidden_sizes", c.learner.hidden_sizes);
        c.learner.batch_size = get_or(ln, "batch_size", c.learner.batch_size);
        c.learner.l2 = get_or(ln, "l2", c.learner.l2);
    }
    if (root.contains("geld")) {
        const json& g = root["geld"];
        require_keys(g, "geld", {"K", "M", "mu", "prob_floor", "renormalize", "centered",
                                 "dump_tensor"});
        c.geld.repeats = get_or(g, "K", c.geld.repeats);
        c.geld.folds = get_or(g, "M", c.geld.folds);
        c.geld.mu = get_or(g, "mu", c.geld.mu);
        c.geld.prob_floor = get_or(g, "prob_floor", c.geld.prob_floor);
        c.geld.renormalize = get_or(g, "renormalize", c.geld.renormalize);
        c.geld.centered = get_or(g, "centered", c.geld.centered);
        c.dump_tensor = get_or(g, "dump_tensor", c.dump_tensor);
    }
    if (root.contains("detect")) {
        const json& d = root["detect"];
        require_keys(d, "detect", {"v", "r_grid", "repeats"});
        c.detect.v = get_or(d, "v", c.detect.v);
        c.r_grid = get_or(d, "r_grid", c.r_grid);
        c.detect.repeats = get_or(d, "repeats", c.detect.repeats);
    }
    if (root.contains("props")) {
        const json& p = root["props"];
        require_keys(p, "props", {"omega", "gamma_ladder", "checks"});
        c.props.omega = get_or(p, "omega", c.props.omega);
        c.props.gamma_ladder = get_or(p, "gamma_ladder", c.props.gamma_ladder);
        c.checks = get_or(p, "checks", c.checks);
    }
    return c;
}

std::vector<double> parse_lambda_grid(const std::string& s) {
    // "e<a>..e<b>" with integer exponents, e.g. "e-7..e1".
    const auto sep = s.find("..");
    if (sep == std::string::npos || s.empty() || s[0] != 'e' || sep + 3 > s.size() ||
        s[sep + 2] != 'e')
        throw ConfigError("--lambda-grid: expected form e<a>..e<b>, e.g. e-7..e1");
    int lo = 0, hi = 0;
    try {
        lo = std::stoi(s.substr(1, sep - 1));
        hi = std::stoi(s.substr(sep + 3));
    } catch (const std::exception&) {
        throw ConfigError("--lambda-grid: exponents must be integers");
    }
    if (lo > hi) throw ConfigError("--lambda-grid: lower exponent exceeds upper");
    std::vector<double> grid;
    for (int k = lo; k <= hi; ++k) grid.push_back(std::exp(static_cast<double>(k)));
    return grid;
}

int parse_thread_cap() {
    const char* env = std::getenv("LDLAB_THREADS");
    if (env == nullptr) return 0;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
        throw ConfigError("LDLAB_THREADS must be a positive integer");
    return static_cast<int>(v);
}

void write_json(const std::string& path, const json& j) {
    ldlab::io::write_file(path, j.dump(2) + "\n");
}

std::pair<ldlab::Dataset, ldlab::Dataset> build_classification_data(const RunConfig& c,
                                                                    std::uint64_t seed) {
    if (!c.dataset_csv.empty()) {
        if (c.validation_csv.empty())
            throw ConfigError("config: dataset.csv requires dataset.validation_csv");
        ldlab::Dataset train =
            ldlab::io::dataset_from_csv(ldlab::io::read_file(c.dataset_csv), c.classes);
        ldlab::Dataset val =
            ldlab::io::dataset_from_csv(ldlab::io::read_file(c.validation_csv), c.classes);
        return {std::move(train), std::move(val)};
    }
    ldlab::Dataset clean = ldlab::make_blobs(c.classes, c.per_class, c.dimension,
                                             c.separation, ldlab::derive_seed(seed, 0xb10b));
    std::vector<int> vcounts(c.classes, c.validation_per_class);
    ldlab::Dataset val = ldlab::make_blobs(c.classes, vcounts, c.dimension, c.separation,
                                           ldlab::derive_seed(seed, 0x0a1d));
    if (c.noise.rate > 0.0) {
        ldlab::NoiseSpec ns = c.noise;
        ns.seed = ldlab::derive_seed(seed, 0x015e);
        clean = ns.kind == ldlab::NoiseKind::salt_pepper
                    ? ldlab::inject_feature_noise(clean, ns)
                    : ldlab::inject_label_noise(clean, ns);
    }
    return {std::move(clean), std::move(val)};
}

json optimum_entry(const ldlab::LambdaSweep& sweep, const ldlab::Optimum& o) {
    json j = ldlab::io::optimum_json(o);
    return j;
}

int cmd_lab(const RunConfig& c) {
    namespace fs = std::filesystem;
    fs::create_directories(c.out);

    const std::array<double, 3> strata = {100.0 / 175, 50.0 / 175, 25.0 / 175};

    ldlab::Dataset pool1 = ldlab::sample_regression_example(
        c.pool_size, std::nullopt, c.noise_sigma, ldlab::derive_seed(c.seed, 1));
    ldlab::Dataset eval1 = ldlab::sample_regression_example(c.eval_size, std::nullopt, 0.0,
                                                            ldlab::derive_seed(c.seed, 2));
    ldlab::LambdaSweep s1 =
        ldlab::run_sweep(c.ridge, pool1, eval1, ldlab::derive_seed(c.seed, 3));

    ldlab::Dataset pool2 = ldlab::sample_regression_example(c.pool_size, strata, c.noise_sigma,
                                                            ldlab::derive_seed(c.seed, 4));
    ldlab::Dataset eval2 = ldlab::sample_regression_example(c.eval_size, strata, 0.0,
                                                            ldlab::derive_seed(c.seed, 5));
    ldlab::LambdaSweep s2 =
        ldlab::run_sweep(c.ridge, pool2, eval2, ldlab::derive_seed(c.seed, 6));

    ldlab::io::write_file(c.out + "/example1_sweep.csv", ldlab::io::sweep_to_csv(s1));
    ldlab::io::write_file(c.out + "/example2_sweep.csv", ldlab::io::sweep_to_csv(s2));

    json verdicts;
    verdicts["seed"] = c.seed;
    verdicts["uniform"] = {{"whole", optimum_entry(s1, ldlab::optimal_complexity(s1))}};
    json regions;
    regions["whole"] = optimum_entry(s2, ldlab::optimal_complexity(s2));
    regions["easy"] = optimum_entry(s2, ldlab::optimal_complexity(s2, 0.0, 1.5));
    regions["medium"] = optimum_entry(s2, ldlab::optimal_complexity(s2, 1.5, 3.5));
    regions["hard"] = optimum_entry(s2, ldlab::optimal_complexity(s2, 3.5, 5.000001));
    verdicts["stratified"] = regions;

    ldlab::DifficultyThresholds th;
    json samples = json::array();
    for (std::size_t j = 0; j < s2.eval_count(); ++j) {
        const ldlab::DifficultyVerdict v =
            ldlab::difficulty_verdict(s2, s2.eval_ids[j], th);
        json row;
        row["sample_id"] = s2.eval_ids[j];
        row["x"] = s2.eval_x[j];
        row["ld"] = v.ld;
        row["ldc"] = v.ldc;
        row["partition"] = ldlab::partition_name(v.partition);
        samples.push_back(std::move(row));
    }
    verdicts["samples"] = std::move(samples);
    write_json(c.out + "/verdicts.json", verdicts);
    return 0;
}

int cmd_geld(const RunConfig& c) {
    std::filesystem::create_directories(c.out);
    auto [train, val] = build_classification_data(c, c.seed);

    ldlab::GeldConfig gc = c.geld;
    gc.seed = ldlab::derive_seed(c.seed, 0x9e1d);
    gc.learner = c.learner;
    auto [tensor, report] = ldlab::run_geld(train, val, gc);

    ldlab::LearnerSpec ls = c.learner;
    ls.seed = ldlab::derive_seed(c.seed, 0xba5e);
    const auto loss = ldlab::baseline_loss(train, val, ls, ldlab::BaselineMode::final_epoch);
    const auto ave =
        ldlab::baseline_loss(train, val, ls, ldlab::BaselineMode::average_last_e, 100);
    for (std::size_t i = 0; i < train.size(); ++i) {
        report.rows[i].loss = loss.values[i];
        report.rows[i].ave_loss = ave.values[i];
    }
    if (!ave.warning.empty()) std::cerr << "warning: " << ave.warning << "\n";

    ldlab::io::write_file(c.out + "/difficulty.csv", ldlab::io::report_to_csv(report, &train));
    write_json(c.out + "/difficulty.json", ldlab::io::report_to_json(report, &train));
    if (c.dump_tensor)
        ldlab::io::write_file(c.out + "/tensor.csv", ldlab::io::tensor_to_csv(tensor));
    return 0;
}

int cmd_detect(const RunConfig& c) {
    std::filesystem::create_directories(c.out);
    if (!c.dataset_csv.empty() && c.validation_csv.empty())
        throw ConfigError("config: dataset.csv requires dataset.validation_csv");

    struct Cell {
        double precision = 0.0, recall = 0.0, f1 = 0.0;
    };
    const std::vector<std::string> methods = {"GELD", "Loss", "AveLoss"};
    std::vector<std::vector<Cell>> table(methods.size(),
                                         std::vector<Cell>(c.r_grid.size()));

    for (int rep = 0; rep < c.detect.repeats; ++rep) {
        const std::uint64_t seed = ldlab::derive_seed(c.seed, 0xde7ec7, rep);
        auto [train, val] = build_classification_data(c, seed);
        if (train.truth.noisy_ids.empty())
            throw ConfigError("detect: dataset has no noisy-label ground truth");

        ldlab::GeldConfig gc = c.geld;
        gc.seed = ldlab::derive_seed(seed, 0x9e1d);
        gc.learner = c.learner;
        auto [tensor, report] = ldlab::run_geld(train, val, gc);

        ldlab::LearnerSpec ls = c.learner;
        ls.seed = ldlab::derive_seed(seed, 0xba5e);
        const auto loss =
            ldlab::baseline_loss(train, val, ls, ldlab::BaselineMode::final_epoch);
        const auto ave =
            ldlab::baseline_loss(train, val, ls, ldlab::BaselineMode::average_last_e, 100);

        std::array<ldlab::DifficultyReport, 3> reports;
        reports[0] = report;
        for (int b = 1; b < 3; ++b) {
            reports[b].rows.resize(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) {
                reports[b].rows[i].id = train.samples[i].id;
                reports[b].rows[i].err = b == 1 ? loss.values[i] : ave.values[i];
            }
        }
        const int n = static_cast<int>(train.size());
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            for (std::size_t ri = 0; ri < c.r_grid.size(); ++ri) {
                ldlab::DetectionSpec ds = c.detect;
                ds.r = c.r_grid[ri];
                const auto sel = ldlab::top_k_select(reports[mi], ds, n);
                const auto pr = ldlab::f1_against(sel, train.truth.noisy_ids);
                table[mi][ri].precision += pr.precision / c.detect.repeats;
                table[mi][ri].recall += pr.recall / c.detect.repeats;
                table[mi][ri].f1 += pr.f1 / c.detect.repeats;
            }
        }
    }

    std::ostringstream csv, md;
    csv << "method,v,r,precision,recall,f1\n";
    md << "| method | v | r | precision | recall | F1 |\n|---|---|---|---|---|---|\n";
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        for (std::size_t ri = 0; ri < c.r_grid.size(); ++ri) {
            const Cell& cell = table[mi][ri];
            csv << methods[mi] << ',' << ldlab::io::fmt(c.detect.v) << ','
                << ldlab::io::fmt(c.r_grid[ri]) << ',' << ldlab::io::fmt(cell.precision)
                << ',' << ldlab::io::fmt(cell.recall) << ',' << ldlab::io::fmt(cell.f1)
                << '\n';
            md << "| " << methods[mi] << " | " << ldlab::io::fmt(c.detect.v) << " | "
               << ldlab::io::fmt(c.r_grid[ri]) << " | " << ldlab::io::fmt(cell.precision)
               << " | " << ldlab::io::fmt(cell.recall) << " | " << ldlab::io::fmt(cell.f1)
               << " |\n";
        }
    ldlab::io::write_file(c.out + "/detection.csv", csv.str());
    ldlab::io::write_file(c.out + "/detection.md", md.str());
    return 0;
}

int cmd_props(const RunConfig& c) {
    std::filesystem::create_directories(c.out);
    const std::array<double, 3> strata = {100.0 / 175, 50.0 / 175, 25.0 / 175};
    ldlab::Dataset pool = ldlab::sample_regression_example(c.pool_size, strata, c.noise_sigma,
                                                           ldlab::derive_seed(c.seed, 4));
    ldlab::Dataset eval_set = ldlab::sample_regression_example(c.eval_size, strata, 0.0,
                                                               ldlab::derive_seed(c.seed, 5));
    ldlab::LambdaSweep sweep =
        ldlab::run_sweep(c.ridge, pool, eval_set, ldlab::derive_seed(c.seed, 6));

    bool violated = false;
    std::vector<ldlab::PropositionReport> ok_reports;
    json rows = json::array();
    for (const std::string& id : c.checks) {
        try {
            ldlab::PropositionReport r = ldlab::check_proposition(id, sweep, c.props);
            rows.push_back(ldlab::io::proposition_json(r));
            if (r.verdict == ldlab::Verdict::violated) violated = true;
            ok_reports.push_back(std::move(r));
        } catch (const ldlab::PreconditionError& e) {
            json row;
            row["id"] = id;
            row["error"] = e.what();
            rows.push_back(std::move(row));
            violated = true;
        }
    }
    json out;
    out["seed"] = c.seed;
    out["checks"] = std::move(rows);
    write_json(c.out + "/propositions.json", out);
    ldlab::io::write_file(c.out + "/propositions.md",
                          ldlab::io::propositions_markdown(ok_reports));
    return violated ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learning-difficulty lab"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<double> mu, noise_rate, snr, v, r;
    std::optional<int> K, M;
    std::optional<std::string> noise_kind, gamma_ladder, lambda_grid;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "root seed (overrides config)");
    app.add_option("--out", out, "output directory (overrides config)");

    CLI::App* lab = app.add_subcommand("lab", "bias/variance sweeps over the lambda grid");
    lab->add_option("--lambda-grid", lambda_grid, "grid as e<a>..e<b>, e.g. e-7..e1");
    CLI::App* geld = app.add_subcommand("geld", "cross-validated difficulty report");
    CLI::App* detect = app.add_subcommand("detect", "noisy-label detection comparison");
    CLI::App* props = app.add_subcommand("props", "weighting proposition checks");
    for (CLI::App* cmd : {geld, detect}) {
        cmd->add_option("--mu", mu, "variance weight");
        cmd->add_option("--K", K, "repeats");
        cmd->add_option("--M", M, "folds");
        cmd->add_option("--noise-kind", noise_kind, "symmetric | pair_flip | salt_pepper");
        cmd->add_option("--noise-rate", noise_rate, "label noise rate");
        cmd->add_option("--snr", snr, "salt_pepper signal-to-noise ratio");
    }
    detect->add_option("--v", v, "assumed noise rate");
    detect->add_option("--r", r, "single selection multiplier (replaces the r grid)");
    props->add_option("--gamma-ladder", gamma_ladder, "comma-separated exponents");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        (void)parse_thread_cap();  // execution is sequential; the cap is validated only
        RunConfig c = load_config(config_path);
        if (seed) c.seed = *seed;
        if (out) c.out = *out;
        if (mu) c.geld.mu = *mu;
        if (K) c.geld.repeats = *K;
        if (M) c.geld.folds = *M;
        if (noise_kind) c.noise.kind = parse_noise_kind(*noise_kind);
        if (noise_rate) c.noise.rate = *noise_rate;
        if (snr) c.noise.snr = *snr;
        if (v) c.detect.v = *v;
        if (r) c.r_grid = {*r};
        if (lambda_grid) c.ridge.lambda_grid = parse_lambda_grid(*lambda_grid);
        if (gamma_ladder) {
            std::vector<double> ladder;
            std::istringstream ss(*gamma_ladder);
            std::string tok;
            while (std::getline(ss, tok, ',')) ladder.push_back(std::stod(tok));
            if (ladder.empty()) throw ConfigError("--gamma-ladder: empty list");
            c.props.gamma_ladder = std::move(ladder);
        }

        if (lab->parsed()) return cmd_lab(c);
        if (geld->parsed()) return cmd_geld(c);
        if (detect->parsed()) return cmd_detect(c);
        if (props->parsed()) return cmd_props(c);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ldlab::PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ldlab::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
