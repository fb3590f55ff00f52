#include "vtax/cli.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vtax/active.hpp"
#include "vtax/audit.hpp"
#include "vtax/calculators.hpp"
#include "vtax/core_types.hpp"
#include "vtax/error.hpp"
#include "vtax/estimators.hpp"
#include "vtax/experiments.hpp"
#include "vtax/lecam.hpp"
#include "vtax/parallel.hpp"
#include "vtax/sequential.hpp"
#include "vtax/temp_scaling.hpp"

namespace vtax::cli {

namespace {

using Json = nlohmann::ordered_json;

// Input that exists but cannot be read or validated; exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Result {
    Json fields = Json::object();
    std::string headline;  // plain-format output when set
    std::string table;     // CSV body for tabular results
};

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string integer(double x) { return fixed(x, 0); }

std::string scalar_text(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    return v.dump();
}

std::string csv_cell(const Json& v) {
    std::string s = scalar_text(v);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

Json csv_to_json(const std::string& table) {
    Json rows = Json::array();
    Json notes = Json::array();
    std::istringstream in(table);
    std::string line;
    std::vector<std::string> header;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        return cells;
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            notes.push_back(line.substr(line.find_first_not_of("# ")));
            continue;
        }
        if (header.empty()) {
            header = split(line);
            continue;
        }
        const auto cells = split(line);
        Json row = Json::object();
        for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(cells[i].c_str(), &end);
            if (!cells[i].empty() && end && *end == '\0')
                row[header[i]] = v;
            else
                row[header[i]] = cells[i];
        }
        rows.push_back(row);
    }
    Json out = Json::object();
    out["rows"] = rows;
    if (!notes.empty()) out["notes"] = notes;
    return out;
}

void emit(const Result& r, const std::string& format, std::ostream& out) {
    if (format == "json") {
        Json j = r.fields;
        if (!r.table.empty()) {
            const Json parsed = csv_to_json(r.table);
            for (const auto& [k, v] : parsed.items()) j[k] = v;
        }
        out << j.dump(2) << '\n';
        return;
    }
    if (!r.table.empty()) {
        out << r.table;
        return;
    }
    if (format == "csv") {
        bool first = true;
        for (auto& [k, v] : r.fields.items()) {
            out << (first ? "" : ",") << k;
            first = false;
        }
        out << '\n';
        first = true;
        for (auto& [k, v] : r.fields.items()) {
            out << (first ? "" : ",") << csv_cell(v);
            first = false;
        }
        out << '\n';
        return;
    }
    if (!r.headline.empty()) {
        out << r.headline << '\n';
        return;
    }
    for (auto& [k, v] : r.fields.items()) out << k << ": " << scalar_text(v) << '\n';
}

Json ci_json(const BootstrapCI& ci) {
    return Json{{"point", ci.point}, {"lo", ci.lo}, {"hi", ci.hi}, {"level", ci.level}};
}

template <class T>
Json opt_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

Dataset load_dataset(const std::string& path, std::istream& in) {
    try {
        if (path == "-") return load_jsonl(in, "stdin");
        return load_jsonl_file(path);
    } catch (const Error& e) {
        throw DataError(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(e.what());
    }
}

template <class F>
auto load_data(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw DataError(e.what());
    }
}

Result self_eval_result(const SelfEval& se) {
    Result r;
    r.fields["qualifying_bins"] = se.qualifying_bins;
    r.fields["degenerate"] = se.degenerate;
    r.fields["rho_conf_acc"] = se.conf_acc.rho;
    r.fields["p_conf_acc"] = se.conf_acc.p_value;
    r.fields["rho_conf_gap"] = se.conf_gap.rho;
    r.fields["p_conf_gap"] = se.conf_gap.p_value;
    return r;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in) {
    CLI::App app{"Calibration verification toolkit: floors, sample sizes, audits and simulations.", "vtax"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 0;
    std::optional<unsigned> threads;
    std::string format = "plain";
    std::string output;
    app.add_option("--seed", seed, "Seed for all randomness (default 0)");
    app.add_option("--threads", threads, "Cap on worker threads (default: all cores)")->check(CLI::PositiveNumber);
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"plain", "json", "csv"}));
    app.add_option("--output", output, "Write output to this file instead of stdout");

    std::map<CLI::App*, std::function<Result()>> actions;

    // floor
    {
        auto* s = app.add_subcommand("floor", "ECE and accuracy verification floors");
        auto p = std::make_shared<RateParams>();
        auto gap = std::make_shared<std::optional<double>>();
        s->add_option("--L", p->lipschitz, "Lipschitz constant of the calibration gap")->required();
        s->add_option("--eps", p->error_rate, "Error rate")->required();
        s->add_option("--n", p->samples, "Number of evaluation samples")->required();
        s->add_option("--gap", *gap, "Observed gap to classify against the floor");
        actions[s] = [p, gap] {
            p->target_gap = gap->value_or(0.1);
            const auto rep = floor_report(*p);
            Result r;
            r.fields["L"] = p->lipschitz;
            r.fields["eps"] = p->error_rate;
            r.fields["n"] = p->samples;
            if (*gap) r.fields["gap"] = **gap;
            r.fields["ece_floor"] = rep.ece_floor;
            r.fields["acc_floor"] = rep.acc_floor;
            r.headline = fixed(rep.ece_floor, 4);
            if (*gap) {
                const auto v = classify_gap(**gap, rep.ece_floor, rep.verdict_threshold_ratio);
                r.fields["verdict"] = verdict_name(v);
                r.headline += "\n" + std::string(verdict_name(v));
            }
            return r;
        };
    }

    // size
    {
        auto* s = app.add_subcommand("size", "Holdout size for a target ECE precision");
        auto v = std::make_shared<std::array<double, 3>>();
        s->add_option("--L", (*v)[0])->required();
        s->add_option("--eps", (*v)[1])->required();
        s->add_option("--delta", (*v)[2], "Target precision")->required();
        actions[s] = [v] {
            Result r;
            r.fields["L"] = (*v)[0];
            r.fields["eps"] = (*v)[1];
            r.fields["delta"] = (*v)[2];
            const double m = holdout_size((*v)[0], (*v)[1], (*v)[2]);
            r.fields["m"] = m;
            r.headline = integer(m);
            return r;
        };
    }

    // fairness
    {
        auto* s = app.add_subcommand("fairness", "Samples to certify calibration for every group");
        struct Args {
            int K = 2;
            double pi_min = 0.1, delta = 0.05, eps = 0.1, L = 1.0;
            std::string mode = "passive";
        };
        auto a = std::make_shared<Args>();
        s->add_option("--K", a->K, "Number of groups")->required();
        s->add_option("--pi-min", a->pi_min, "Smallest group share")->required();
        s->add_option("--delta", a->delta)->required();
        s->add_option("--eps", a->eps)->required();
        s->add_option("--L", a->L)->required();
        s->add_option("--mode", a->mode)->check(CLI::IsMember({"passive", "active"}));
        actions[s] = [a] {
            const double m = fairness_size(a->K, a->pi_min, a->delta, a->eps, a->L,
                                           a->mode == "active" ? SizingMode::Active : SizingMode::Passive);
            Result r;
            r.fields["K"] = a->K;
            r.fields["pi_min"] = a->pi_min;
            r.fields["delta"] = a->delta;
            r.fields["eps"] = a->eps;
            r.fields["L"] = a->L;
            r.fields["mode"] = a->mode;
            r.fields["m"] = m;
            r.headline = integer(m);
            return r;
        };
    }

    // horizon
    {
        auto* s = app.add_subcommand("horizon", "Model size beyond which calibration cannot be verified");
        struct Args {
            double alpha = 0.5, c0 = 1.0, M = 1.0, L = 1.0;
            std::optional<double> model_size;
        };
        auto a = std::make_shared<Args>();
        s->add_option("--alpha", a->alpha, "Scaling exponent of the error rate")->required();
        s->add_option("--c0", a->c0, "Error-rate prefactor")->required();
        s->add_option("--M", a->M, "Total evaluation budget")->required();
        s->add_option("--L", a->L)->required();
        s->add_option("--model-size", a->model_size);
        actions[s] = [a] {
            const auto h = verification_horizon(a->alpha, a->c0, a->M, a->L, a->model_size);
            Result r;
            r.fields["alpha"] = a->alpha;
            r.fields["c0"] = a->c0;
            r.fields["M"] = a->M;
            r.fields["L"] = a->L;
            if (a->model_size) r.fields["model_size"] = *a->model_size;
            r.fields["n_star_passive"] = h.n_star_passive;
            r.fields["n_star_active"] = h.n_star_active;
            if (h.gap_ratio) r.fields["gap_ratio"] = *h.gap_ratio;
            return r;
        };
    }

    // halflife
    {
        auto* s = app.add_subcommand("halflife", "Verification half-life under drift");
        auto v = std::make_shared<std::array<double, 4>>();
        s->add_option("--delta", (*v)[0])->required();
        s->add_option("--lambda", (*v)[1], "Drift rate")->required();
        s->add_option("--L", (*v)[2])->required();
        s->add_option("--eps", (*v)[3])->required();
        actions[s] = [v] {
            const auto h = verification_half_life((*v)[0], (*v)[1], (*v)[2], (*v)[3]);
            Result r;
            r.fields["delta"] = (*v)[0];
            r.fields["lambda"] = (*v)[1];
            r.fields["L"] = (*v)[2];
            r.fields["eps"] = (*v)[3];
            r.fields["t_half"] = h.unbounded ? Json("inf") : Json(h.t_half);
            r.fields["perpetual_rate"] = h.perpetual_rate;
            r.fields["unbounded"] = h.unbounded;
            return r;
        };
    }

    // recal-trap
    {
        auto* s = app.add_subcommand("recal-trap", "Recalibration rounds before verification runs out");
        auto v = std::make_shared<std::array<double, 4>>();
        s->add_option("--gamma", (*v)[0], "Per-round ECE improvement factor")->required();
        s->add_option("--eps", (*v)[1])->required();
        s->add_option("--ece0", (*v)[2], "Initial ECE")->required();
        s->add_option("--M", (*v)[3], "Total evaluation budget")->required();
        actions[s] = [v] {
            const int k = recalibration_trap((*v)[0], (*v)[1], (*v)[2], (*v)[3]);
            Result r;
            r.fields["gamma"] = (*v)[0];
            r.fields["eps"] = (*v)[1];
            r.fields["ece0"] = (*v)[2];
            r.fields["M"] = (*v)[3];
            r.fields["k_star"] = k;
            r.headline = std::to_string(k);
            return r;
        };
    }

    // compose
    {
        auto* s = app.add_subcommand("compose", "Verification cost of a multi-stage pipeline");
        struct Args {
            std::vector<double> L;
            double eps = 0.1, delta = 0.05;
            std::optional<double> M;
        };
        auto a = std::make_shared<Args>();
        s->add_option("--L", a->L, "Per-stage Lipschitz constants")->required()->delimiter(',');
        s->add_option("--eps", a->eps)->required();
        s->add_option("--delta", a->delta)->required();
        s->add_option("--M", a->M, "Budget; also report the deepest verifiable pipeline (single --L)");
        actions[s] = [a] {
            const auto t = compositional_tax(a->L, a->eps, a->delta);
            Result r;
            r.fields["L"] = a->L;
            r.fields["eps"] = a->eps;
            r.fields["delta"] = a->delta;
            if (a->M) r.fields["M"] = *a->M;
            r.fields["L_sys_bound"] = t.L_sys_bound;
            r.fields["m_sys"] = t.m_sys;
            r.fields["cost_ratio"] = t.cost_ratio;
            if (a->M) {
                if (a->L.size() != 1) throw CLI::ValidationError("--M", "needs exactly one --L value");
                try {
                    r.fields["max_depth"] = max_verifiable_depth(*a->M, a->delta, a->eps, a->L[0]);
                } catch (const UnboundedDepth&) {
                    r.fields["max_depth"] = "unbounded";
                }
            }
            return r;
        };
    }

    // transfer
    {
        auto* s = app.add_subcommand("transfer", "Fine-tuning verification size from a base model");
        struct Args {
            double L_h = 1.0, eps2 = 0.1, delta = 0.05;
            std::optional<double> base_L, base_delta;
        };
        auto a = std::make_shared<Args>();
        s->add_option("--L-h", a->L_h, "Lipschitz constant of the fine-tuning shift")->required();
        s->add_option("--eps2", a->eps2, "Error rate after fine-tuning")->required();
        s->add_option("--delta-ft", a->delta, "Target precision")->required();
        s->add_option("--baseline-L", a->base_L);
        s->add_option("--baseline-delta", a->base_delta);
        actions[s] = [a] {
            const auto t = transfer_size(a->L_h, a->eps2, a->delta, a->base_L, a->base_delta);
            Result r;
            r.fields["L_h"] = a->L_h;
            r.fields["eps2"] = a->eps2;
            r.fields["delta_ft"] = a->delta;
            r.fields["m2"] = t.m2;
            r.fields["baseline"] = opt_json(t.baseline);
            r.fields["saving"] = opt_json(t.saving);
            if (!t.baseline) r.headline = integer(t.m2);
            return r;
        };
    }

    // audit
    {
        auto* s = app.add_subcommand("audit", "Calibration audit of a JSONL prediction file");
        struct Args {
            std::string input;
            AuditOptions opt;
        };
        auto a = std::make_shared<Args>();
        s->add_option("input", a->input, "JSONL file, or - for stdin")->required();
        s->add_option("--replicates", a->opt.replicates)->check(CLI::PositiveNumber);
        s->add_option("--level", a->opt.level)->check(CLI::Range(0.5, 0.999));
        s->add_option("--permutations", a->opt.self_eval.permutations)->check(CLI::PositiveNumber);
        actions[s] = [a, &seed, &in] {
            const auto data = load_dataset(a->input, in);
            a->opt.seed = seed;
            a->opt.self_eval.seed = seed;
            const auto rep = audit(data, a->opt);
            Result r;
            r.fields["n"] = rep.n;
            r.fields["eps_hat"] = ci_json(rep.eps_hat);
            r.fields["ece"] = ci_json(rep.ece);
            r.fields["L_hat"] = rep.L_hat ? ci_json(*rep.L_hat) : Json(nullptr);
            r.fields["L_used"] = rep.L_used;
            r.fields["floor"] = rep.floor ? ci_json(*rep.floor) : Json(nullptr);
            r.fields["floor_point"] = rep.floor_point;
            r.fields["acc_floor"] = rep.acc_floor;
            r.fields["bins"] = rep.bins_used;
            r.fields["saturation"] = rep.saturation;
            r.fields["self_eval"] = rep.self_eval ? self_eval_result(*rep.self_eval).fields : Json(nullptr);
            r.fields["warnings"] = rep.warnings;
            return r;
        };
    }

    // self-eval
    {
        auto* s = app.add_subcommand("self-eval", "Rank test of confidence against accuracy and gap");
        struct Args {
            std::string input;
            SelfEvalOptions opt;
        };
        auto a = std::make_shared<Args>();
        s->add_option("input", a->input, "JSONL file, or - for stdin")->required();
        s->add_option("--bins", a->opt.bins)->check(CLI::PositiveNumber);
        s->add_option("--permutations", a->opt.permutations)->check(CLI::PositiveNumber);
        actions[s] = [a, &seed, &in] {
            const auto data = load_dataset(a->input, in);
            a->opt.seed = seed;
            try {
                return self_eval_result(self_eval_analysis(data, a->opt));
            } catch (const InsufficientBins& e) {
                throw DataError(e.what());
            }
        };
    }

    // compare
    {
        auto* s = app.add_subcommand("compare", "Is a score difference above the verification floor?");
        struct Args {
            std::optional<double> a, b, n, eps;
            std::string metric = "accuracy";
            double L = 1.0, ratio = 1.25;
            std::string scores, benchmarks;
        };
        auto a = std::make_shared<Args>();
        s->add_option("--a", a->a, "Score of model A");
        s->add_option("--b", a->b, "Score of model B");
        s->add_option("--n", a->n, "Benchmark size");
        s->add_option("--eps", a->eps, "Error rate (default: 1 - mean score)");
        s->add_option("--metric", a->metric)->check(CLI::IsMember({"accuracy", "ece"}));
        s->add_option("--L", a->L);
        s->add_option("--ratio", a->ratio, "Marginal band as a multiple of the floor");
        s->add_option("--scores", a->scores, "CSV of published scores (model,benchmark,n,score)");
        s->add_option("--benchmarks", a->benchmarks, "CSV with per-benchmark eps (benchmark,eps,...)");
        actions[s] = [a] {
            const Metric metric = a->metric == "ece" ? Metric::ECE : Metric::Accuracy;
            Result r;
            if (!a->scores.empty()) {
                const auto scores = load_data([&] { return load_published_scores(a->scores); });
                std::map<std::string, double> eps;
                if (!a->benchmarks.empty())
                    for (const auto& b : load_data([&] { return load_benchmarks(a->benchmarks); }))
                        eps[b.benchmark] = b.eps;
                std::ostringstream t;
                t << "model_a,model_b,benchmark,n,gap,floor,verdict\n";
                for (const auto& v : compare_published(scores, eps, metric, a->L, a->ratio))
                    t << v.model_a << ',' << v.model_b << ',' << v.benchmark << ',' << v.n << ',' << v.gap << ','
                      << v.floor << ',' << verdict_name(v.verdict) << '\n';
                r.table = t.str();
                return r;
            }
            if (!a->a || !a->b || !a->n) throw CLI::ValidationError("compare", "needs --a, --b and --n, or --scores");
            const auto v = compare_pair(*a->a, *a->b, *a->n, a->eps, metric, a->L, a->ratio);
            r.fields["a"] = *a->a;
            r.fields["b"] = *a->b;
            r.fields["n"] = *a->n;
            r.fields["metric"] = a->metric;
            r.fields["gap"] = v.gap;
            r.fields["floor"] = v.floor;
            r.fields["verdict"] = verdict_name(v.verdict);
            r.headline = std::string(verdict_name(v.verdict));
            return r;
        };
    }

    // leaderboard
    {
        auto* s = app.add_subcommand("leaderboard", "Per-subject rankability of a score table");
        struct Args {
            std::string subjects = fixture_path("subjects.csv");
            std::string source = "fixture";
            double L = 1.0;
        };
        auto a = std::make_shared<Args>();
        s->add_option("--subjects", a->subjects, "Subject table CSV (default: bundled fixture)");
        s->add_option("--floor-source", a->source)->check(CLI::IsMember({"fixture", "best", "mean"}));
        s->add_option("--L", a->L);
        actions[s] = [a] {
            const auto rows = load_data([&] { return load_subjects(a->subjects); });
            const FloorSource src = a->source == "best"   ? FloorSource::OneMinusBest
                                    : a->source == "mean" ? FloorSource::OneMinusMean
                                                          : FloorSource::Fixture;
            const auto sum = leaderboard_noise(rows, src, a->L);
            std::ostringstream t;
            t << "subject,n,max_gap,floor,verifiable,pairs,pairs_below\n";
            for (const auto& v : sum.subjects)
                t << v.subject << ',' << v.n << ',' << v.max_gap << ',' << v.floor << ',' << (v.verifiable ? 1 : 0)
                  << ',' << v.pairs << ',' << v.pairs_below << '\n';
            t << "# pairs=" << sum.pairs << " below_floor=" << sum.pairs_below << " fraction=" << sum.fraction_below
              << " fully_unranked=" << sum.fully_unranked << " flag_mismatches=" << sum.flag_mismatches << '\n';
            Result r;
            r.table = t.str();
            return r;
        };
    }

    // simulate
    {
        auto* s = app.add_subcommand("simulate", "Monte-Carlo experiments (CSV output)");
        s->require_subcommand(1);
        auto replicates = std::make_shared<std::optional<int>>();
        s->add_option("--replicates", *replicates, "Replicates (trials for phase) per grid point")
            ->check(CLI::PositiveNumber);

        auto* ph = s->add_subcommand("phase", "Detection power against m*eps");
        auto pcfg = std::make_shared<PhaseConfig>();
        ph->add_option("--eps-grid", pcfg->eps_grid)->delimiter(',');
        ph->add_option("--m-eps-grid", pcfg->m_eps_grid)->delimiter(',');
        ph->add_option("--alpha", pcfg->alpha);
        actions[ph] = [pcfg, replicates, &seed] {
            pcfg->seed = seed;
            if (*replicates) pcfg->trials = **replicates;
            std::ostringstream t;
            write_csv(t, phase_transition_experiment(*pcfg));
            return Result{Json::object(), "", t.str()};
        };

        auto* sl = s->add_subcommand("slope", "Passive estimation error against m");
        auto scfg = std::make_shared<SlopeConfig>();
        sl->add_option("--k-grid", scfg->k_grid)->delimiter(',');
        sl->add_option("--m-grid", scfg->m_grid)->delimiter(',');
        sl->add_option("--amplitude", scfg->amplitude);
        sl->add_option("--eps", scfg->eps);
        actions[sl] = [scfg, replicates, &seed] {
            scfg->seed = seed;
            if (*replicates) scfg->replicates = **replicates;
            std::ostringstream t;
            write_csv(t, slope_study(*scfg));
            return Result{Json::object(), "", t.str()};
        };

        auto* ac = s->add_subcommand("active", "Active against passive estimation error");
        auto acfg = std::make_shared<ActiveStudyConfig>();
        ac->add_option("--L-grid", acfg->L_grid)->delimiter(',');
        ac->add_option("--m-grid", acfg->m_grid)->delimiter(',');
        ac->add_option("--eps", acfg->eps);
        actions[ac] = [acfg, replicates, &seed] {
            acfg->seed = seed;
            if (*replicates) acfg->replicates = **replicates;
            std::ostringstream t;
            write_csv(t, active_vs_passive_study(*acfg));
            return Result{Json::object(), "", t.str()};
        };

        auto* pi = s->add_subcommand("pipeline", "Sample cost against pipeline depth");
        auto ccfg = std::make_shared<CompositionConfig>();
        pi->add_option("--L", ccfg->L, "Per-stage Lipschitz constant");
        pi->add_option("--K-grid", ccfg->K_grid)->delimiter(',');
        pi->add_option("--delta", ccfg->delta_target);
        actions[pi] = [ccfg, replicates, &seed] {
            ccfg->seed = seed;
            if (*replicates) ccfg->replicates = **replicates;
            std::ostringstream t;
            write_csv(t, compositional_experiment(*ccfg));
            return Result{Json::object(), "", t.str()};
        };

        auto* ps = s->add_subcommand("pseudo", "Softmax pseudo-classifier convergence");
        auto qcfg = std::make_shared<PseudoConfig>();
        ps->add_option("--classes", qcfg->classes);
        ps->add_option("--eps-target", qcfg->eps_target);
        ps->add_option("--N", qcfg->N);
        ps->add_option("--m-grid", qcfg->m_grid)->delimiter(',');
        actions[ps] = [qcfg, replicates, &seed] {
            qcfg->seed = seed;
            if (*replicates) qcfg->replicates = **replicates;
            std::ostringstream t;
            write_csv(t, pseudo_classifier_control(*qcfg));
            return Result{Json::object(), "", t.str()};
        };
    }

    // sequential
    {
        auto* s = app.add_subcommand("sequential", "Anytime-valid ECE monitor over a JSONL stream");
        struct Args {
            std::string input = "-";
            bool simulate = false;
            SequentialConfig cfg;
            double eps = 0.05;
            std::size_t runs = 1000, length = 100000;
        };
        auto a = std::make_shared<Args>();
        s->add_option("--input", a->input, "JSONL stream (default: stdin)");
        s->add_flag("--simulate", a->simulate, "Run the coverage study on calibrated synthetic streams instead");
        s->add_option("--alpha", a->cfg.alpha);
        s->add_option("--delta", a->cfg.delta, "Stop once the radius is at most delta");
        s->add_option("--L", a->cfg.L);
        s->add_option("--pilot", a->cfg.pilot, "Records before the bin count is frozen");
        s->add_option("--eps", a->eps, "Error rate of the simulated world");
        s->add_option("--runs", a->runs);
        s->add_option("--length", a->length);
        actions[s] = [a, &seed, &in] {
            Result r;
            if (!a->simulate) {
                const auto data = load_dataset(a->input, in);
                auto st = make_sequential_state(a->cfg);
                std::ostringstream t;
                t.precision(10);
                t << "t,ece,radius,stopped\n";
                for (std::size_t i = 0; i < data.size(); ++i) {
                    update_in_place(st, data.confidence()[i], data.correct()[i] != 0);
                    t << st.t << ',' << st.ece << ',' << st.radius << ',' << (st.stopped ? 1 : 0) << '\n';
                }
                t << "# bins=" << st.bins << " stop_time=" << (st.stop_time ? std::to_string(*st.stop_time) : "none")
                  << '\n';
                r.table = t.str();
                return r;
            }
            auto world = sinusoid_world(0.0, 1, a->eps, seed);
            const auto st = sequential_study(world, a->runs, a->length, a->cfg);
            r.fields["runs"] = st.runs;
            r.fields["violation_fraction"] = st.violation_fraction;
            r.fields["mean_stop_time"] = st.mean_stop_time;
            r.fields["min_stop_time"] = st.min_stop_time;
            r.fields["never_stopped_fraction"] = st.never_stopped_fraction;
            r.fields["wald_bound"] = st.wald_bound;
            return r;
        };
    }

    // tempscale
    {
        auto* s = app.add_subcommand("tempscale", "Temperature-scaling fit, or its convergence study");
        struct Args {
            std::string input;
            RateStudyConfig cfg;
        };
        auto a = std::make_shared<Args>();
        s->add_option("--input", a->input, "Fit this JSONL file (- for stdin); without it run the rate study");
        s->add_option("--replicates", a->cfg.replicates)->check(CLI::PositiveNumber);
        s->add_option("--m-grid", a->cfg.m_grid)->delimiter(',');
        actions[s] = [a, &seed, &in] {
            Result r;
            if (!a->input.empty()) {
                const auto data = load_dataset(a->input, in);
                TempFit f;
                try {
                    f = fit_temperature(data);
                } catch (const AllBoundary& e) {
                    throw DataError(e.what());
                }
                r.fields["t_hat"] = f.t_hat;
                r.fields["neg_log_lik"] = f.neg_log_lik;
                r.fields["neg_log_lik_at_1"] = f.neg_log_lik_at_1;
                r.fields["fisher_info_at_1"] = f.fisher_info_at_1;
                r.fields["used"] = f.used;
                r.fields["excluded_boundary"] = f.excluded_boundary;
                r.fields["degenerate"] = f.degenerate ? Json(f.degenerate_reason) : Json(false);
                r.fields["unimodal"] = f.unimodal;
                return r;
            }
            a->cfg.seed = seed;
            const auto st = parametric_rate_study(a->cfg);
            std::ostringstream t;
            t << "m,mean_abs_error,se\n";
            for (const auto& p : st.points) t << p.m << ',' << p.mean_abs_error << ',' << p.se << '\n';
            t << "# slope=" << st.fit.slope << " slope_se=" << st.fit.slope_stderr << '\n';
            r.table = t.str();
            return r;
        };
    }

    // lecam-constants
    {
        auto* s = app.add_subcommand("lecam-constants", "Two-point lower-bound constants c1(eps)");
        struct Args {
            std::vector<double> eps{0.01, 0.02, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35};
            std::string bound = "all";
            int m_ref = 1000;
        };
        auto a = std::make_shared<Args>();
        s->add_option("--eps-grid", a->eps)->delimiter(',');
        s->add_option("--bound", a->bound, "bretagnolle-huber, pinsker, exact-lrt, quadratic-kl or all");
        s->add_option("--m-ref", a->m_ref)->check(CLI::PositiveNumber);
        actions[s] = [a] {
            std::vector<LeCamBound> bounds;
            if (a->bound == "all")
                bounds = {LeCamBound::BretagnolleHuber, LeCamBound::Pinsker, LeCamBound::ExactLRT,
                          LeCamBound::QuadraticBH};
            else
                bounds = {parse_bound(a->bound)};
            std::ostringstream t;
            t << "eps,bound,c1,delta_star,m_detect\n";
            for (double e : a->eps)
                for (auto b : bounds) {
                    const auto c = lecam_constant(e, b, a->m_ref);
                    t << e << ',' << bound_name(b) << ',' << fixed(c.c1, 4) << ',' << c.delta_star << ','
                      << detection_sample_size(e) << '\n';
                }
            Result r;
            r.table = t.str();
            return r;
        };
    }

    if (args.empty()) {
        err << app.help();
        return 1;
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        err << "run with --help for usage\n";
        return 1;
    }

    std::function<Result()> action;
    for (const auto& [sub, fn] : actions) {
        if (!sub->parsed()) continue;
        // A parsed parent with a parsed child: the child wins.
        bool child = false;
        for (const auto& [other, _] : actions)
            if (other != sub && other->parsed() && other->get_parent() == sub) child = true;
        if (!child) action = fn;
    }
    if (!action) {
        err << app.help();
        return 1;
    }

    if (threads) set_max_threads(*threads);
    try {
        const Result result = action();
        std::ostringstream buf;
        emit(result, format, buf);
        if (output.empty()) {
            out << buf.str();
        } else {
            std::ofstream f(output, std::ios::binary);
            if (!f) {
                err << "error: cannot write " << output << '\n';
                return 2;
            }
            f << buf.str();
        }
        return 0;
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidParam& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        err << "data error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace vtax::cli
