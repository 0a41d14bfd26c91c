#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldlab/dataset.hpp"
#include "ldlab/errors.hpp"
#include "ldlab/geld.hpp"
#include "ldlab/regression_lab.hpp"
#include "ldlab/weighting.hpp"

namespace ldlab::io {

using json = nlohmann::ordered_json;

// Shortest round-trip decimal representation (std::to_chars), so serialized
// numbers are deterministic and parse back exactly.
inline std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// One row per sample: id, features..., label, clean_label, noisy_flag,
// margin, uncertainty. For regression the label columns carry the targets.
inline std::string dataset_to_csv(const Dataset& d) {
    std::ostringstream out;
    const int dim = d.dimension();
    out << "id";
    for (int j = 0; j < dim; ++j) out << ",x" << j;
    out << ",label,clean_label,noisy_flag,margin,uncertainty\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Sample& s = d.samples[i];
        out << s.id;
        for (int j = 0; j < dim; ++j) out << ',' << fmt(s.features[j]);
        if (d.is_classification())
            out << ',' << s.label << ',' << s.clean_label;
        else
            out << ',' << fmt(s.target) << ',' << fmt(s.clean_target);
        out << ',' << (d.truth.noisy_ids.count(s.id) ? 1 : 0);
        out << ',' << (d.truth.margins.empty() ? "" : fmt(d.truth.margins[i]));
        out << ',' << (d.truth.uncertainties.empty() ? "" : fmt(d.truth.uncertainties[i]));
        out << '\n';
    }
    return out.str();
}

inline json ground_truth_json(const Dataset& d) {
    json j;
    j["class_count"] = d.class_count;
    j["sample_count"] = d.size();
    j["noisy_ids"] = d.truth.noisy_ids;
    j["class_sizes"] = d.truth.class_sizes;
    j["has_margins"] = !d.truth.margins.empty();
    j["has_uncertainties"] = !d.truth.uncertainties.empty();
    return j;
}

inline Dataset dataset_from_csv(const std::string& text, int class_count) {
    Dataset d;
    d.class_count = class_count;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("dataset_from_csv: empty file");
    // Count feature columns from the header.
    int dim = 0;
    {
        std::istringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ','))
            if (col.size() > 1 && col[0] == 'x') ++dim;
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (static_cast<int>(cells.size()) < dim + 4)
            throw InvalidArgument("dataset_from_csv: short row");
        Sample s;
        s.id = std::stoi(cells[0]);
        for (int j = 0; j < dim; ++j) s.features.push_back(std::stod(cells[1 + j]));
        if (class_count > 0) {
            s.label = std::stoi(cells[1 + dim]);
            s.clean_label = std::stoi(cells[2 + dim]);
        } else {
            s.target = std::stod(cells[1 + dim]);
            s.clean_target = std::stod(cells[2 + dim]);
        }
        if (std::stoi(cells[3 + dim]) != 0) d.truth.noisy_ids.insert(s.id);
        if (cells.size() > static_cast<std::size_t>(4 + dim) && !cells[4 + dim].empty())
            d.truth.margins.push_back(std::stod(cells[4 + dim]));
        if (cells.size() > static_cast<std::size_t>(5 + dim) && !cells[5 + dim].empty())
            d.truth.uncertainties.push_back(std::stod(cells[5 + dim]));
        d.samples.push_back(std::move(s));
    }
    if (class_count > 0) {
        d.truth.class_sizes.assign(class_count, 0);
        for (const Sample& s : d.samples) ++d.truth.class_sizes[s.clean_label];
    }
    return d;
}

inline std::string sweep_to_csv(const LambdaSweep& sweep) {
    std::ostringstream out;
    out << "lambda,complexity,mean_bias,mean_variance,mean_error\n";
    for (std::size_t i = 0; i < sweep.lambdas.size(); ++i) {
        out << fmt(sweep.lambdas[i]) << ',' << fmt(sweep.complexity[i]) << ','
            << fmt(sweep.mean_bias[i]) << ',' << fmt(sweep.mean_variance[i]) << ','
            << fmt(sweep.mean_error[i]) << '\n';
    }
    return out.str();
}

inline std::string sweep_to_long_csv(const LambdaSweep& sweep) {
    std::ostringstream out;
    out << "sample_id,lambda,bias,variance,error\n";
    for (std::size_t j = 0; j < sweep.eval_count(); ++j)
        for (std::size_t i = 0; i < sweep.lambdas.size(); ++i)
            out << sweep.eval_ids[j] << ',' << fmt(sweep.lambdas[i]) << ','
                << fmt(sweep.bias[i][j]) << ',' << fmt(sweep.variance[i][j]) << ','
                << fmt(sweep.error[i][j]) << '\n';
    return out.str();
}

inline std::string report_to_csv(const DifficultyReport& report, const Dataset* d = nullptr) {
    std::ostringstream out;
    out << "sample_id,bias,variance,err,rank,loss,ave_loss,noisy_flag\n";
    for (const DifficultyRow& r : report.rows) {
        out << r.id << ',' << fmt(r.bias) << ',' << fmt(r.variance) << ',' << fmt(r.err) << ','
            << r.rank << ',';
        out << (std::isnan(r.loss) ? "" : fmt(r.loss)) << ','
            << (std::isnan(r.ave_loss) ? "" : fmt(r.ave_loss)) << ',';
        out << (d && d->truth.noisy_ids.count(r.id) ? 1 : 0) << '\n';
    }
    return out.str();
}

inline json report_to_json(const DifficultyReport& report, const Dataset* d = nullptr) {
    json rows = json::array();
    for (const DifficultyRow& r : report.rows) {
        json row;
        row["sample_id"] = r.id;
        row["bias"] = r.bias;
        row["variance"] = r.variance;
        row["err"] = r.err;
        row["rank"] = r.rank;
        if (!std::isnan(r.loss)) row["loss"] = r.loss;
        if (!std::isnan(r.ave_loss)) row["ave_loss"] = r.ave_loss;
        if (d) row["noisy"] = d->truth.noisy_ids.count(r.id) > 0;
        rows.push_back(std::move(row));
    }
    json j;
    j["mu"] = report.mu;
    j["samples"] = std::move(rows);
    return j;
}

inline std::string tensor_to_csv(const PredictionTensor& tensor) {
    std::ostringstream out;
    out << "sample_id,k,m,class,prob\n";
    for (std::size_t i = 0; i < tensor.sample_ids.size(); ++i)
        for (int k = 0; k < tensor.repeats; ++k)
            for (int m = 0; m < tensor.folds; ++m)
                for (int c = 0; c < tensor.classes; ++c)
                    out << tensor.sample_ids[i] << ',' << k << ',' << m << ',' << c << ','
                        << fmt(tensor.preds[i][static_cast<std::size_t>(k) * tensor.folds + m][c])
                        << '\n';
    return out.str();
}

inline json optimum_json(const Optimum& o) {
    json j;
    j["lambda_star"] = o.lambda_star;
    j["c_star"] = o.c_star;
    j["err_star"] = o.err_star;
    j["grid_index"] = o.grid_index;
    return j;
}

inline json proposition_json(const PropositionReport& r) {
    json j;
    j["id"] = r.id;
    j["scheme"] = r.scheme_description;
    j["baseline"] = optimum_json(r.baseline);
    j["weighted"] = optimum_json(r.weighted);
    j["verdict"] = verdict_name(r.verdict);
    j["excluded_samples"] = r.excluded_samples;
    return j;
}

inline std::string propositions_markdown(const std::vector<PropositionReport>& reports) {
    std::ostringstream out;
    out << "| proposition | scheme | c* | c'* | verdict |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& r : reports)
        out << "| " << r.id << " | " << r.scheme_description << " | " << fmt(r.baseline.c_star)
            << " | " << fmt(r.weighted.c_star) << " | " << verdict_name(r.verdict) << " |\n";
    return out.str();
}

}  // namespace ldlab::io
