#include "lvqcf/baseline.hpp"
#include "lvqcf/bench.hpp"
#include "lvqcf/constraints.hpp"
#include "lvqcf/engine.hpp"
#include "lvqcf/error.hpp"
#include "lvqcf/lvq_model.hpp"
#include "lvqcf/program.hpp"
#include "lvqcf/regularizer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

using namespace lvqcf;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_no_solution = 2;

// An input problem attributed to one flag.
struct FlagError : std::runtime_error {
    FlagError(const std::string& flag, const std::string& what) : std::runtime_error(flag + ": " + what) {}
};

template <class F>
auto for_flag(const std::string& flag, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const FlagError&) {
        throw;
    } catch (const std::exception& e) {
        throw FlagError(flag, e.what());
    }
}

struct Common {
    std::string model;
    std::uint64_t seed = 0;
    double epsilon = 1e-4;
    std::string output;
    bool parallel = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_model)
{
    if (with_model)
        cmd->add_option("--model", c.model, "model JSON file")->required();
    cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
    cmd->add_option("--epsilon", c.epsilon, "margin in squared-distance units")->capture_default_str();
    cmd->add_option("--output", c.output, "write the result here instead of stdout");
    cmd->add_option("--parallel", c.parallel, "solve target prototypes concurrently")
        ->capture_default_str()
        ->expected(0, 1)
        ->default_str("false");
}

void emit(const Common& c, const std::string& text)
{
    if (c.output.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(c.output);
    if (!out) throw FlagError("--output", "cannot write '" + c.output + "'");
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

VectorXd parse_vector(const std::string& text)
{
    std::vector<double> values;
    std::stringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (cell.empty() || used != cell.size())
            throw InputError("not a number: '" + cell + "'");
        if (!std::isfinite(v))
            throw InputError("non-finite value '" + cell + "'");
        values.push_back(v);
    }
    if (values.empty()) throw InputError("empty vector");
    return Eigen::Map<VectorXd>(values.data(), static_cast<Index>(values.size()));
}

std::string vector_text(const VectorXd& v)
{
    std::string out = "[";
    char buf[40];
    for (Index j = 0; j < v.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%s%.6g", j ? ", " : "", v(j));
        out += buf;
    }
    return out + "]";
}

LvqModel model_flag(const std::string& path)
{
    return for_flag("--model", [&] { return load_model(path); });
}

// ---------------------------------------------------------------------------

struct FitArgs {
    Common common;
    std::string data;
    std::string label_column = "label";
    std::string kind = "glvq";
    int prototypes = 3;
};

int cmd_fit(const FitArgs& a)
{
    const Dataset data = for_flag("--data", [&] { return ingest_csv(a.data, a.label_column); });
    const MetricKind kind = for_flag("--kind", [&] { return model_kind_from_name(a.kind); });
    const LvqModel model = for_flag("--prototypes-per-class", [&] {
        return fit_plumbing(data, a.prototypes, estimate_metric(data, kind), a.common.seed);
    });
    emit(a.common, serialize_model(model));
    std::cerr << "fitted " << a.kind << " model: " << model.size() << " prototypes, dimension " << model.dim()
              << "\n";
    return exit_ok;
}

struct PredictArgs {
    Common common;
    std::string input;
    std::string data;
    std::string label_column = "label";
};

int cmd_predict(const PredictArgs& a)
{
    const LvqModel model = model_flag(a.common.model);
    nlohmann::json out;
    if (!a.input.empty()) {
        const VectorXd x = for_flag("--input", [&] {
            VectorXd v = parse_vector(a.input);
            if (v.size() != model.dim())
                throw InputError("length " + std::to_string(v.size()) + ", model dimension is " +
                                 std::to_string(model.dim()));
            return v;
        });
        const std::size_t i = model.nearest(x);
        out = {{"label", model.prototype(i).label}, {"nearest_prototype", i}};
        std::cerr << "predicted label " << model.prototype(i).label << " (prototype " << i << ")\n";
    } else {
        const Dataset data = for_flag("--data", [&] {
            Dataset d = ingest_csv(a.data, a.label_column);
            if (d.dim() != model.dim())
                throw InputError(std::to_string(d.dim()) + " feature columns, model dimension is " +
                                 std::to_string(model.dim()));
            return d;
        });
        std::vector<int> labels;
        Index correct = 0;
        for (Index r = 0; r < data.size(); ++r) {
            labels.push_back(model.predict(data.x.row(r).transpose()));
            if (labels.back() == data.y[static_cast<std::size_t>(r)]) ++correct;
        }
        const double accuracy = data.size() ? static_cast<double>(correct) / static_cast<double>(data.size()) : 0.0;
        out = {{"labels", labels}, {"accuracy", accuracy}};
        std::cerr << "predicted " << data.size() << " rows, accuracy " << accuracy << "\n";
    }
    emit(a.common, out.dump(2));
    return exit_ok;
}

struct ExplainArgs {
    Common common;
    std::string input;
    int target_label = 0;
    std::string regularizer = "euclidean";
    std::string mad_from;
    std::string label_column = "label";
    std::string constraints;
    bool debug_dump = false;
    bool baseline = false;
};

Regularizer regularizer_flag(const ExplainArgs& a, const LvqModel& model)
{
    if (a.regularizer == "euclidean") {
        if (!a.mad_from.empty()) throw FlagError("--mad-from", "only used with --regularizer manhattan");
        return Regularizer::euclidean();
    }
    if (a.regularizer == "gl2") {
        if (!a.mad_from.empty()) throw FlagError("--mad-from", "only used with --regularizer manhattan");
        if (model.metric() == MetricKind::local)
            throw FlagError("--regularizer", "gl2 needs a model with an identity or global metric");
        return Regularizer::generalized_l2(model.lambda(0));
    }
    if (a.regularizer != "manhattan")
        throw FlagError("--regularizer", "expected manhattan, euclidean or gl2, got '" + a.regularizer + "'");
    if (a.mad_from.empty())
        return Regularizer::manhattan_unit(model.dim());

    const Dataset data = for_flag("--mad-from", [&] { return ingest_csv(a.mad_from, a.label_column); });
    if (data.dim() != model.dim())
        throw FlagError("--mad-from", std::to_string(data.dim()) + " feature columns, model dimension is " +
                                          std::to_string(model.dim()));
    std::vector<Index> zero;
    const VectorXd alpha = for_flag("--mad-from", [&] { return mad_weights(data.x, &zero); });
    if (!zero.empty()) {
        std::cerr << "WARNING: zero MAD for feature(s)";
        for (Index j : zero) std::cerr << ' ' << data.feature_names[static_cast<std::size_t>(j)];
        std::cerr << "; using weight 1 for them\n";
    }
    return Regularizer::manhattan(alpha);
}

int cmd_explain(const ExplainArgs& a)
{
    const LvqModel model = model_flag(a.common.model);
    CfRequest req;
    req.x = for_flag("--input", [&] {
        VectorXd v = parse_vector(a.input);
        if (v.size() != model.dim())
            throw InputError("length " + std::to_string(v.size()) + ", model dimension is " +
                             std::to_string(model.dim()));
        return v;
    });
    if (!model.has_label(a.target_label))
        throw FlagError("--target-label", "label " + std::to_string(a.target_label) + " has no prototype");
    if (!(a.common.epsilon > 0.0) || !std::isfinite(a.common.epsilon))
        throw FlagError("--epsilon", "must be positive");
    req.y_target = a.target_label;
    req.epsilon = a.common.epsilon;
    req.parallel = a.common.parallel;
    req.regularizer = regularizer_flag(a, model);
    if (!a.constraints.empty())
        req.user_constraints = for_flag("--constraints", [&] {
            UserConstraints uc = load_user_constraints(a.constraints);
            uc.validate(model.dim());
            return uc;
        });

    if (a.debug_dump && model.metric() != MetricKind::local) {
        for (std::size_t i = 0; i < model.size(); ++i) {
            if (model.prototype(i).label != a.target_label) continue;
            const auto prog = build_linear_program(model, i, req);
            std::cerr << "# target prototype " << i << "\n";
            if (prog)
                std::cerr << dump_program(prog->program);
            else
                std::cerr << "degenerate\n";
        }
    }

    CfResult result;
    if (a.baseline) {
        BaselineConfig cfg;
        cfg.epsilon = req.epsilon;
        result = baseline_explain(model, req.x, req.y_target, req.regularizer, cfg);
    } else {
        result = explain(model, req);
    }
    emit(a.common, result_to_json(result));

    if (result.success) {
        std::cerr << "counterfactual " << vector_text(result.x_cf) << " distance " << result.distance
                  << " via prototype " << result.target_prototype << "\n";
        return exit_ok;
    }
    std::cerr << "no counterfactual found for label " << a.target_label << ":";
    for (const auto& t : result.per_target) std::cerr << " [" << t.index << "] " << t.status;
    std::cerr << "\n";
    return exit_no_solution;
}

struct BenchArgs {
    Common common;
    std::string spec;
    std::string cases;
};

int cmd_bench(const BenchArgs& a)
{
    const auto specs = for_flag("--spec", [&] {
        std::ifstream in(a.spec);
        if (!in) throw InputError("cannot open '" + a.spec + "'");
        std::stringstream buffer;
        buffer << in.rdbuf();
        return parse_bench_specs(buffer.str());
    });
    BenchReport report;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        BenchSpec s = specs[k];
        s.seed += a.common.seed;
        s.epsilon = a.common.epsilon;
        s.parallel = s.parallel || a.common.parallel;
        report.merge(for_flag("--spec", [&] { return run_bench(s); }));
    }
    emit(a.common, report.to_csv());
    std::cerr << report.to_table();
    if (!a.cases.empty()) {
        std::ofstream out(a.cases);
        if (!out) throw FlagError("--cases", "cannot write '" + a.cases + "'");
        out << "model,method,fold,row,y_target,success,distance,wall_time_ms\n";
        for (const auto& c : report.cases)
            out << c.model << ',' << c.method << ',' << c.fold << ',' << c.row << ',' << c.y_target << ','
                << (c.success ? 1 : 0) << ',' << c.distance << ',' << c.wall_time_ms << '\n';
    }
    return exit_ok;
}

int cmd_validate(const Common& c)
{
    const LvqModel model = model_flag(c.model);
    nlohmann::json out = {{"valid", true},
                          {"metric", to_string(model.metric())},
                          {"dimension", model.dim()},
                          {"prototypes", model.size()},
                          {"labels", model.labels()}};
    emit(c, out.dump(2));
    std::cerr << "model ok: " << model.size() << " prototypes, " << to_string(model.metric()) << " metric\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Counterfactual explanations for prototype classifiers"};
    app.require_subcommand(1);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit a prototype model to a labeled CSV");
    add_common(fit_cmd, fit.common, false);
    fit_cmd->add_option("--data", fit.data, "training CSV")->required();
    fit_cmd->add_option("--label-column", fit.label_column)->capture_default_str();
    fit_cmd->add_option("--kind", fit.kind, "glvq, gmlvq or lgmlvq")->capture_default_str();
    fit_cmd->add_option("--prototypes-per-class", fit.prototypes)->capture_default_str();

    PredictArgs predict;
    auto* predict_cmd = app.add_subcommand("predict", "classify one vector or a CSV");
    add_common(predict_cmd, predict.common, true);
    auto* pin = predict_cmd->add_option("--input", predict.input, "comma-separated feature values");
    auto* pdata = predict_cmd->add_option("--data", predict.data, "CSV with a label column");
    pin->excludes(pdata);
    predict_cmd->add_option("--label-column", predict.label_column)->capture_default_str();

    ExplainArgs ex;
    auto* explain_cmd = app.add_subcommand("explain", "compute a counterfactual");
    add_common(explain_cmd, ex.common, true);
    explain_cmd->add_option("--input", ex.input, "comma-separated feature values")->required();
    explain_cmd->add_option("--target-label", ex.target_label)->required();
    explain_cmd->add_option("--regularizer", ex.regularizer, "manhattan, euclidean or gl2")->capture_default_str();
    explain_cmd->add_option("--mad-from", ex.mad_from, "CSV for MAD weights of the manhattan regularizer");
    explain_cmd->add_option("--label-column", ex.label_column, "label column of --mad-from")->capture_default_str();
    explain_cmd->add_option("--constraints", ex.constraints, "constraints JSON");
    explain_cmd->add_flag("--debug-dump", ex.debug_dump, "print the per-target programs to stderr");
    explain_cmd->add_flag("--baseline", ex.baseline, "use the Nelder-Mead black-box method");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark suite");
    add_common(bench_cmd, bench.common, false);
    bench_cmd->add_option("--spec", bench.spec, "bench spec JSON")->required();
    bench_cmd->add_option("--cases", bench.cases, "also write per-case CSV here");

    Common validate;
    auto* validate_cmd = app.add_subcommand("validate-model", "check a model file");
    add_common(validate_cmd, validate, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_input;
    }

    try {
        if (*fit_cmd) return cmd_fit(fit);
        if (*predict_cmd) {
            if (predict.input.empty() && predict.data.empty())
                throw FlagError("--input", "one of --input or --data is required");
            return cmd_predict(predict);
        }
        if (*explain_cmd) return cmd_explain(ex);
        if (*bench_cmd) return cmd_bench(bench);
        if (*validate_cmd) return cmd_validate(validate);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    }
    return exit_input;
}
