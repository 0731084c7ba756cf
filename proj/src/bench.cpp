#include "lvqcf/bench.hpp"

#include "lvqcf/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace lvqcf {

// ---------------------------------------------------------------------------
// Data

Dataset make_synthetic(const SyntheticSpec& spec)
{
    if (spec.classes < 2) throw InputError("synthetic: at least 2 classes required");
    if (spec.dim < 2) throw InputError("synthetic: dim must be at least 2");
    if (spec.n < spec.classes) throw InputError("synthetic: n must be at least the number of classes");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> spread(0.5, 1.5);

    const double radius = spec.separation / (2.0 * std::sin(std::numbers::pi / spec.classes));
    MatrixXd centers = MatrixXd::Zero(spec.classes, spec.dim);
    MatrixXd scales(spec.classes, spec.dim);
    for (int c = 0; c < spec.classes; ++c) {
        const double angle = 2.0 * std::numbers::pi * c / spec.classes;
        centers(c, 0) = radius * std::cos(angle);
        centers(c, 1) = radius * std::sin(angle);
        for (int j = 0; j < spec.dim; ++j)
            scales(c, j) = spread(rng);
    }

    Dataset data;
    data.x.resize(spec.n, spec.dim);
    data.y.resize(static_cast<std::size_t>(spec.n));
    for (int r = 0; r < spec.n; ++r) {
        const int c = r % spec.classes;
        data.y[static_cast<std::size_t>(r)] = c;
        for (int j = 0; j < spec.dim; ++j)
            data.x(r, j) = centers(c, j) + scales(c, j) * normal(rng);
    }
    for (int j = 0; j < spec.dim; ++j)
        data.feature_names.push_back("f" + std::to_string(j));
    return data;
}

namespace {

std::string trim(std::string s)
{
    auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ','))
        cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& s, double& out)
{
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

void append_number(std::string& out, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& label_column)
{
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        header = split_line(line);
        break;
    }
    if (header.empty())
        throw ParseError("csv: missing header row");
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end())
        throw ParseError("csv: label column \"" + label_column + "\" not found in header (line " +
                         std::to_string(line_no) + ")");
    const auto label_idx = static_cast<std::size_t>(label_it - header.begin());

    Dataset data;
    for (std::size_t k = 0; k < header.size(); ++k)
        if (k != label_idx) data.feature_names.push_back(header[k]);
    const auto d = static_cast<Index>(data.feature_names.size());
    if (d == 0)
        throw ParseError("csv: no feature columns");

    std::vector<std::vector<double>> rows;
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++data_row;
        const auto cells = split_line(line);
        const std::string where = "csv: row " + std::to_string(data_row) + " (line " + std::to_string(line_no) + ")";
        if (cells.size() != header.size())
            throw ParseError(where + ": " + std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(header.size()));
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(d));
        for (std::size_t k = 0; k < cells.size(); ++k) {
            double v = 0.0;
            if (!parse_double(cells[k], v))
                throw ParseError(where + ", column \"" + header[k] + "\": not a number: '" + cells[k] + "'");
            if (!std::isfinite(v))
                throw ParseError(where + ", column \"" + header[k] + "\": non-finite value");
            if (k == label_idx) {
                if (v != std::floor(v) || std::abs(v) > 1e9)
                    throw ParseError(where + ", column \"" + header[k] + "\": label must be an integer");
                data.y.push_back(static_cast<int>(v));
            } else {
                values.push_back(v);
            }
        }
        rows.push_back(std::move(values));
    }
    data.x.resize(static_cast<Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (Index j = 0; j < d; ++j)
            data.x(static_cast<Index>(r), j) = rows[r][static_cast<std::size_t>(j)];
    return data;
}

Dataset ingest_csv(const std::string& path, const std::string& label_column)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open csv file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), label_column);
}

std::string to_csv(const Dataset& data, const std::string& label_column)
{
    std::string out;
    for (Index j = 0; j < data.dim(); ++j) {
        out += j < static_cast<Index>(data.feature_names.size()) ? data.feature_names[static_cast<std::size_t>(j)]
                                                                  : "f" + std::to_string(j);
        out += ',';
    }
    out += label_column + '\n';
    for (Index r = 0; r < data.size(); ++r) {
        for (Index j = 0; j < data.dim(); ++j) {
            append_number(out, data.x(r, j));
            out += ',';
        }
        out += std::to_string(data.y[static_cast<std::size_t>(r)]) + '\n';
    }
    return out;
}

void write_csv(const Dataset& data, const std::string& path, const std::string& label_column)
{
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write csv file '" + path + "'");
    out << to_csv(data, label_column);
}

// ---------------------------------------------------------------------------
// Folds

Standardizer Standardizer::fit(const MatrixXd& x)
{
    Standardizer s;
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - s.mean(j)).square().sum() / static_cast<double>(std::max<Index>(1, x.rows()));
        s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

MatrixXd Standardizer::apply(const MatrixXd& x) const
{
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

std::vector<std::vector<Index>> make_folds(const std::vector<int>& labels, int folds, std::uint64_t seed)
{
    if (folds < 2) throw InputError("folds must be at least 2");
    if (labels.size() < static_cast<std::size_t>(folds)) throw InputError("fewer rows than folds");
    std::map<int, std::vector<Index>> by_class;
    for (std::size_t r = 0; r < labels.size(); ++r) by_class[labels[r]].push_back(static_cast<Index>(r));
    std::mt19937_64 rng(seed);
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
    std::size_t next = 0;
    for (auto& [label, rows] : by_class) {
        std::shuffle(rows.begin(), rows.end(), rng);
        for (Index r : rows) out[next++ % static_cast<std::size_t>(folds)].push_back(r);
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

namespace {

Dataset subset(const Dataset& data, const std::vector<Index>& rows)
{
    Dataset out;
    out.feature_names = data.feature_names;
    out.x.resize(static_cast<Index>(rows.size()), data.dim());
    out.y.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.x.row(static_cast<Index>(r)) = data.x.row(rows[r]);
        out.y.push_back(data.y[static_cast<std::size_t>(rows[r])]);
    }
    return out;
}

MatrixXd symmetric_sqrt(const MatrixXd& m)
{
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
    return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

MatrixXd normalized_inverse(const MatrixXd& cov)
{
    const Index d = cov.rows();
    const MatrixXd reg = cov + 1e-3 * std::max(1e-12, cov.trace() / static_cast<double>(d)) * MatrixXd::Identity(d, d);
    MatrixXd lambda = reg.ldlt().solve(MatrixXd::Identity(d, d));
    lambda = 0.5 * (lambda + lambda.transpose());
    return lambda * (static_cast<double>(d) / lambda.trace());
}

}  // namespace

FoldData prepare_fold(const Dataset& data, const std::vector<Index>& train_rows, const std::vector<Index>& test_rows)
{
    FoldData fold;
    const Dataset raw_train = subset(data, train_rows);
    fold.standardizer = Standardizer::fit(raw_train.x);
    fold.train = raw_train;
    fold.train.x = fold.standardizer.apply(raw_train.x);
    fold.test = subset(data, test_rows);
    fold.test.x = fold.standardizer.apply(fold.test.x);
    fold.mad = mad_weights(fold.train.x, &fold.zero_mad_features);
    return fold;
}

MetricRequest estimate_metric(const Dataset& train, MetricKind kind)
{
    MetricRequest req;
    req.kind = kind;
    if (kind == MetricKind::identity)
        return req;

    const Index d = train.dim();
    std::map<int, std::vector<Index>> by_class;
    for (Index r = 0; r < train.size(); ++r)
        by_class[train.y[static_cast<std::size_t>(r)]].push_back(r);

    MatrixXd pooled = MatrixXd::Zero(d, d);
    for (const auto& [label, rows] : by_class) {
        const Dataset cls = subset(train, rows);
        const MatrixXd centered = cls.x.rowwise() - cls.x.colwise().mean();
        const MatrixXd scatter = centered.transpose() * centered;
        pooled += scatter;
        if (kind == MetricKind::local) {
            const double denom = static_cast<double>(std::max<Index>(1, cls.size() - 1));
            req.class_omegas[label] = symmetric_sqrt(normalized_inverse(scatter / denom));
        }
    }
    if (kind == MetricKind::global) {
        pooled /= static_cast<double>(std::max<Index>(1, train.size() - static_cast<Index>(by_class.size())));
        req.global_omega = symmetric_sqrt(normalized_inverse(pooled));
    }
    return req;
}

// ---------------------------------------------------------------------------
// Benchmark

const char* to_string(Method m)
{
    return m == Method::ours ? "ours" : "baseline-ds";
}

Method method_from_string(const std::string& name)
{
    if (name == "ours") return Method::ours;
    if (name == "baseline-ds" || name == "ds") return Method::baseline_ds;
    throw InputError("unknown method '" + name + "' (expected ours or baseline-ds)");
}

const char* model_name(MetricKind kind)
{
    switch (kind) {
    case MetricKind::identity: return "glvq";
    case MetricKind::global: return "gmlvq";
    case MetricKind::local: return "lgmlvq";
    }
    return "?";
}

MetricKind model_kind_from_name(const std::string& name)
{
    if (name == "glvq") return MetricKind::identity;
    if (name == "gmlvq") return MetricKind::global;
    if (name == "lgmlvq") return MetricKind::local;
    throw InputError("unknown model kind '" + name + "' (expected glvq, gmlvq or lgmlvq)");
}

std::vector<BenchSpec> parse_bench_specs(const std::string& json_text)
{
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bench spec: malformed JSON: ") + e.what());
    }
    std::vector<json> items;
    if (doc.is_array())
        items.assign(doc.begin(), doc.end());
    else
        items.push_back(doc);

    std::vector<BenchSpec> specs;
    for (std::size_t k = 0; k < items.size(); ++k) {
        const json& j = items[k];
        const std::string where = "bench spec[" + std::to_string(k) + "]";
        if (!j.is_object()) throw ParseError(where + ": expected an object");
        BenchSpec s;
        try {
            s.name = j.value("name", s.name);
            if (j.contains("dataset")) {
                const json& ds = j["dataset"];
                const std::string type = ds.value("type", "synthetic");
                if (type == "synthetic") {
                    SyntheticSpec syn;
                    syn.classes = ds.value("classes", syn.classes);
                    syn.dim = ds.value("dim", syn.dim);
                    syn.n = ds.value("n", syn.n);
                    syn.separation = ds.value("separation", syn.separation);
                    syn.seed = ds.value("seed", syn.seed);
                    s.dataset = syn;
                } else if (type == "csv") {
                    if (!ds.contains("path")) throw ParseError(where + ".dataset.path: missing");
                    s.dataset = CsvSource{ds["path"].get<std::string>(), ds.value("label_column", "label")};
                } else {
                    throw ParseError(where + ".dataset.type: unknown '" + type + "'");
                }
            }
            if (j.contains("models")) {
                s.models.clear();
                for (const auto& m : j["models"]) s.models.push_back(model_kind_from_name(m.get<std::string>()));
            }
            if (j.contains("methods")) {
                s.methods.clear();
                for (const auto& m : j["methods"]) s.methods.push_back(method_from_string(m.get<std::string>()));
            }
            s.prototypes_per_class = j.value("prototypes_per_class", s.prototypes_per_class);
            s.folds = j.value("folds", s.folds);
            s.epsilon = j.value("epsilon", s.epsilon);
            s.seed = j.value("seed", s.seed);
            s.max_cases_per_fold = j.value("max_cases_per_fold", s.max_cases_per_fold);
            s.parallel = j.value("parallel", s.parallel);
            const std::string reg = j.value("regularizer", std::string("manhattan"));
            if (reg == "manhattan") s.regularizer = RegularizerKind::weighted_manhattan;
            else if (reg == "euclidean") s.regularizer = RegularizerKind::euclidean;
            else throw ParseError(where + ".regularizer: expected manhattan or euclidean");
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        } catch (const InputError& e) {
            throw ParseError(where + ": " + e.what());
        }
        specs.push_back(std::move(s));
    }
    return specs;
}

namespace {

double median_of(std::vector<double> v)
{
    return v.empty() ? 0.0 : median(std::move(v));
}

int next_label(const std::vector<int>& labels, int current)
{
    const auto it = std::upper_bound(labels.begin(), labels.end(), current);
    return it == labels.end() ? labels.front() : *it;
}

}  // namespace

BenchReport run_bench(const BenchSpec& spec)
{
    using Clock = std::chrono::steady_clock;
    const Dataset data = std::holds_alternative<SyntheticSpec>(spec.dataset)
                             ? make_synthetic(std::get<SyntheticSpec>(spec.dataset))
                             : ingest_csv(std::get<CsvSource>(spec.dataset).path,
                                          std::get<CsvSource>(spec.dataset).label_column);

    const std::set<int> classes(data.y.begin(), data.y.end());
    if (spec.folds < 2)
        throw InputError("bench: folds must be at least 2");
    if (classes.size() < 2)
        throw InputError("bench: data set needs at least 2 classes");
    if (data.size() < static_cast<Index>(spec.folds) * static_cast<Index>(classes.size()))
        throw InputError("bench: data set too small, need at least folds * classes = " +
                         std::to_string(spec.folds * static_cast<int>(classes.size())) + " rows");
    if (spec.models.empty() || spec.methods.empty())
        throw InputError("bench: no models or methods requested");

    BenchReport report;
    const auto folds = make_folds(data.y, spec.folds, spec.seed);
    for (int f = 0; f < spec.folds; ++f) {
        std::vector<Index> train_rows;
        for (int g = 0; g < spec.folds; ++g)
            if (g != f)
                train_rows.insert(train_rows.end(), folds[static_cast<std::size_t>(g)].begin(),
                                  folds[static_cast<std::size_t>(g)].end());
        std::sort(train_rows.begin(), train_rows.end());
        const auto& test_rows = folds[static_cast<std::size_t>(f)];
        const FoldData fold = prepare_fold(data, train_rows, test_rows);
        const Regularizer reg = spec.regularizer == RegularizerKind::weighted_manhattan
                                    ? Regularizer::manhattan(fold.mad)
                                    : Regularizer::euclidean();

        // small folds: never ask for more prototypes than a class has points
        std::map<int, int> class_count;
        for (int label : fold.train.y) ++class_count[label];
        int k = spec.prototypes_per_class;
        for (const auto& [label, count] : class_count) k = std::min(k, count);
        if (class_count.size() < 2 || k < 1)
            throw InputError("bench: fold " + std::to_string(f) + " lacks training rows for some class");

        for (MetricKind kind : spec.models) {
            const LvqModel model = fit_plumbing(fold.train, k,
                                                estimate_metric(fold.train, kind), spec.seed + static_cast<std::uint64_t>(f));
            Index cases = fold.test.size();
            if (spec.max_cases_per_fold > 0) cases = std::min<Index>(cases, spec.max_cases_per_fold);
            for (Index r = 0; r < cases; ++r) {
                const VectorXd x = fold.test.x.row(r).transpose();
                const int y_target = next_label(model.labels(), model.predict(x));
                for (Method method : spec.methods) {
                    BenchCase bc;
                    bc.model = model_name(kind);
                    bc.method = to_string(method);
                    bc.fold = f;
                    bc.row = test_rows[static_cast<std::size_t>(r)];
                    bc.y_target = y_target;
                    const auto start = Clock::now();
                    CfResult res;
                    if (method == Method::ours) {
                        CfRequest req;
                        req.x = x;
                        req.y_target = y_target;
                        req.regularizer = reg;
                        req.epsilon = spec.epsilon;
                        req.parallel = spec.parallel;
                        res = explain(model, req);
                    } else {
                        BaselineConfig cfg = spec.baseline;
                        cfg.epsilon = spec.epsilon;
                        res = baseline_explain(model, x, y_target, reg, cfg);
                    }
                    bc.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
                    bc.success = res.success && model.predict(res.x_cf) == y_target;
                    bc.distance = bc.success ? res.distance : 0.0;
                    report.cases.push_back(bc);
                }
            }
        }
    }

    // aggregate
    for (MetricKind kind : spec.models) {
        const std::string model = model_name(kind);
        // rows solved by every method
        std::map<std::pair<int, Index>, int> solved;
        for (const auto& c : report.cases)
            if (c.model == model && c.success) ++solved[{c.fold, c.row}];
        const int all = static_cast<int>(spec.methods.size());

        std::map<std::string, double> medians;
        for (Method method : spec.methods) {
            BenchRow row;
            row.dataset = spec.name;
            row.model = model;
            row.method = to_string(method);
            std::vector<double> times;
            double sum = 0.0, sum_paired = 0.0;
            std::size_t paired = 0;
            for (const auto& c : report.cases) {
                if (c.model != model || c.method != row.method) continue;
                ++row.cases;
                times.push_back(c.wall_time_ms);
                if (!c.success) {
                    ++row.failures;
                    continue;
                }
                sum += c.distance;
                if (solved[{c.fold, c.row}] == all) {
                    sum_paired += c.distance;
                    ++paired;
                }
            }
            const std::size_t ok = row.cases - row.failures;
            row.failure_rate = row.cases ? static_cast<double>(row.failures) / static_cast<double>(row.cases) : 0.0;
            row.mean_distance = ok ? sum / static_cast<double>(ok) : std::nan("");
            row.mean_distance_paired = paired ? sum_paired / static_cast<double>(paired) : std::nan("");
            row.median_wall_ms = median_of(times);
            medians[row.method] = row.median_wall_ms;
            report.rows.push_back(row);
        }
        if (medians.count("ours") && medians.count("baseline-ds"))
            report.speedups.push_back({spec.name, model,
                                       medians["ours"] > 0 ? medians["baseline-ds"] / medians["ours"] : 0.0});
    }
    return report;
}

const BenchRow* BenchReport::find(const std::string& dataset, const std::string& model,
                                  const std::string& method) const
{
    for (const auto& r : rows)
        if (r.dataset == dataset && r.model == model && r.method == method) return &r;
    return nullptr;
}

void BenchReport::merge(BenchReport other)
{
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    speedups.insert(speedups.end(), other.speedups.begin(), other.speedups.end());
    cases.insert(cases.end(), std::make_move_iterator(other.cases.begin()),
                 std::make_move_iterator(other.cases.end()));
}

std::string BenchReport::to_csv() const
{
    std::string out =
        "dataset,model,method,cases,failures,failure_rate,mean_distance,mean_distance_paired,median_wall_ms\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%zu,%zu,%.6g,%.17g,%.17g,%.17g\n", r.dataset.c_str(),
                      r.model.c_str(), r.method.c_str(), r.cases, r.failures, r.failure_rate, r.mean_distance,
                      r.mean_distance_paired, r.median_wall_ms);
        out += buf;
    }
    return out;
}

std::string BenchReport::to_table() const
{
    // one block per dataset, models as rows, methods as columns
    std::vector<std::string> datasets, methods;
    for (const auto& r : rows) {
        if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    }
    std::string out;
    char buf[256];
    for (const auto& ds : datasets) {
        out += "Data set: " + ds + "  (mean distance / failure rate / median ms)\n";
        std::snprintf(buf, sizeof buf, "%-8s", "Model");
        out += buf;
        for (const auto& m : methods) {
            std::snprintf(buf, sizeof buf, " | %-30s", m.c_str());
            out += buf;
        }
        out += '\n';
        std::vector<std::string> models;
        for (const auto& r : rows)
            if (r.dataset == ds && std::find(models.begin(), models.end(), r.model) == models.end())
                models.push_back(r.model);
        for (const auto& model : models) {
            std::snprintf(buf, sizeof buf, "%-8s", model.c_str());
            out += buf;
            for (const auto& m : methods) {
                const BenchRow* r = find(ds, model, m);
                if (r)
                    std::snprintf(buf, sizeof buf, " | %8.4f %6.1f%% %12.4f", r->mean_distance,
                                  100.0 * r->failure_rate, r->median_wall_ms);
                else
                    std::snprintf(buf, sizeof buf, " | %-30s", "-");
                out += buf;
            }
            out += '\n';
        }
        for (const auto& s : speedups)
            if (s.dataset == ds) {
                std::snprintf(buf, sizeof buf, "speedup %-8s %.1fx\n", s.model.c_str(), s.ratio);
                out += buf;
            }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Oracles and scenarios

std::optional<GridOracleResult> grid_oracle(const LvqModel& model, const VectorXd& x, int y_target,
                                            const Regularizer& reg, const VectorXd& lower, const VectorXd& upper,
                                            double step, double epsilon)
{
    const Index d = model.dim();
    if (d > 3)
        throw InputError("grid_oracle: dimension " + std::to_string(d) + " exceeds 3");
    if (x.size() != d || lower.size() != d || upper.size() != d)
        throw InputError("grid_oracle: dimension mismatch");
    if (!(step > 0.0))
        throw InputError("grid_oracle: step must be positive");
    for (Index j = 0; j < d; ++j)
        if (!(lower(j) <= x(j) && x(j) <= upper(j)))
            throw InputError("grid_oracle: box does not contain x");

    std::vector<Index> counts(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j)
        counts[static_cast<std::size_t>(j)] = static_cast<Index>(std::floor((upper(j) - lower(j)) / step + 1e-9)) + 1;

    std::vector<std::size_t> own, other;
    for (std::size_t i = 0; i < model.size(); ++i)
        (model.prototype(i).label == y_target ? own : other).push_back(i);

    std::optional<GridOracleResult> best;
    std::vector<Index> idx(static_cast<std::size_t>(d), 0);
    VectorXd point(d);
    while (true) {
        for (Index j = 0; j < d; ++j)
            point(j) = lower(j) + static_cast<double>(idx[static_cast<std::size_t>(j)]) * step;
        const double theta = reg.evaluate(point, x);
        if (!best || theta < best->distance) {
            double d_own = std::numeric_limits<double>::infinity();
            double d_other = std::numeric_limits<double>::infinity();
            for (std::size_t i : own) d_own = std::min(d_own, model.distance(point, i));
            for (std::size_t j : other) d_other = std::min(d_other, model.distance(point, j));
            if (d_own + epsilon <= d_other)
                best = GridOracleResult{point, theta};
        }
        Index j = 0;
        while (j < d && ++idx[static_cast<std::size_t>(j)] == counts[static_cast<std::size_t>(j)]) {
            idx[static_cast<std::size_t>(j)] = 0;
            ++j;
        }
        if (j == d) break;
    }
    return best;
}

HousingScenario housing_scenario()
{
    // Standardized features: TotalBsmt, 1stFlr, 2ndFlr, GrLivA. Label 1 =
    // expensive, label 0 = cheap; the query is an expensive house.
    auto proto = [](std::initializer_list<double> w, int label) {
        Prototype p;
        p.w = Eigen::Map<const VectorXd>(w.begin(), static_cast<Index>(w.size()));
        p.label = label;
        return p;
    };
    std::vector<Prototype> protos = {
        proto({0.2, 1.0, 0.3, 1.3}, 1),
        proto({0.8, 1.4, 0.6, 1.9}, 1),
        proto({-0.3, 0.5, 2.4, 2.8}, 0),
        proto({-0.9, -0.4, -0.5, -0.8}, 0),
    };
    HousingScenario s{LvqModel(std::move(protos), MetricKind::identity),
                      VectorXd(4),
                      0,
                      Regularizer::manhattan(VectorXd::Ones(4)),
                      {},
                      {"TotalBsmt", "1stFlr", "2ndFlr", "GrLivA"}};
    s.x << 0.0, 0.9, 0.4, 1.2;
    LinearRow row{VectorXd::Zero(4), 0.0};
    row.a << 0.0, -1.0, 1.0, 0.0;
    s.constraint.linear.push_back(row);
    return s;
}

}  // namespace lvqcf
