#include "vtax/audit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "vtax/error.hpp"
#include "vtax/estimators.hpp"
#include "vtax/rng.hpp"

namespace vtax {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_number(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidParam("not a number in column " + what + ": '" + s + "'");
    }
}

SelfEvalPair rank_test(const std::vector<double>& x, const std::vector<double>& y, int permutations,
                       std::uint64_t seed) {
    SelfEvalPair out;
    const auto r = permutation_test(x, y, PermStatistic::SpearmanRho, permutations, seed);
    out.rho = r.stat;
    out.p_value = r.p_value;
    out.degenerate = std::isnan(r.stat);
    return out;
}

}  // namespace

SelfEval self_eval_analysis(const Dataset& data, const SelfEvalOptions& opt) {
    if (data.empty()) throw EmptyDataset();
    SelfEval se;
    const auto conf = data.confidence();
    if (std::all_of(conf.begin(), conf.end(), [&](double p) { return p == conf[0]; })) {
        se.degenerate = true;
        se.conf_acc.degenerate = se.conf_gap.degenerate = true;
        se.conf_acc.rho = se.conf_gap.rho = std::nan("");
        se.conf_acc.p_value = se.conf_gap.p_value = std::nan("");
        return se;
    }
    const auto stats = bin_statistics(conf, data.correct(), opt.bins);
    std::vector<double> c, acc, gap;
    for (const auto& s : stats) {
        if (s.count < opt.min_count) continue;
        c.push_back(*s.mean_confidence);
        acc.push_back(*s.accuracy);
        gap.push_back(std::abs(*s.gap));
    }
    se.qualifying_bins = static_cast<int>(c.size());
    if (se.qualifying_bins < opt.min_bins)
        throw InsufficientBins("self-eval needs " + std::to_string(opt.min_bins) + " bins with " +
                               std::to_string(opt.min_count) + " records, got " + std::to_string(c.size()));
    se.conf_acc = rank_test(c, acc, opt.permutations, stream_key(opt.seed, {1}));
    se.conf_gap = rank_test(c, gap, opt.permutations, stream_key(opt.seed, {2}));
    se.degenerate = se.conf_acc.degenerate && se.conf_gap.degenerate;
    return se;
}

AuditReport audit(const Dataset& data, const AuditOptions& opt) {
    if (data.empty()) throw EmptyDataset();
    AuditReport rep;
    rep.n = data.size();
    const double n = static_cast<double>(rep.n);
    if (rep.n < opt.low_sample)
        rep.warnings.push_back("LowSample: " + std::to_string(rep.n) + " records (< " +
                               std::to_string(opt.low_sample) + ")");

    auto safe_eps = [n](double e) { return std::max(e, 1.0 / n); };
    auto lipschitz_or_default = [&](const Dataset& d, bool* ok) {
        try {
            const double l = estimate_lipschitz(d).value;
            if (ok) *ok = true;
            // Zero slope everywhere still needs a positive L for the formulas.
            return std::max(l, 1e-6);
        } catch (const InsufficientBins&) {
            if (ok) *ok = false;
            return 1.0;
        }
    };

    const double eps_point = estimate_error_rate(data);
    bool l_ok = false;
    rep.L_used = lipschitz_or_default(data, &l_ok);
    if (!l_ok) rep.warnings.push_back("L-hat unavailable (fewer than two bins with 30 records); using L = 1");
    rep.bins_used = optimal_bin_count(rep.L_used, n, safe_eps(eps_point));
    rep.floor_point = verification_floor(rep.L_used, eps_point, n);
    rep.acc_floor = accuracy_floor(eps_point, n);

    const auto conf = data.confidence();
    rep.saturation = static_cast<double>(std::count_if(conf.begin(), conf.end(),
                                                       [&](double p) { return p > opt.saturation_threshold; })) /
                     n;

    // Same seed for every statistic, so all intervals come from the same resamples.
    const int bins = rep.bins_used;
    rep.eps_hat = bootstrap_ci(data, estimate_error_rate, opt.replicates, opt.level, opt.seed);
    rep.ece = bootstrap_ci(
        data, [bins](const Dataset& d) { return estimate_ece(d, bins).value; }, opt.replicates, opt.level,
        opt.seed);
    if (l_ok) {
        try {
            rep.L_hat = bootstrap_ci(
                data, [](const Dataset& d) { return estimate_lipschitz(d).value; }, opt.replicates, opt.level,
                opt.seed);
            rep.floor = bootstrap_ci(
                data,
                [](const Dataset& d) {
                    return verification_floor(std::max(estimate_lipschitz(d).value, 1e-6), estimate_error_rate(d),
                                              static_cast<double>(d.size()));
                },
                opt.replicates, opt.level, opt.seed);
        } catch (const StatisticFailure& e) {
            rep.warnings.push_back(std::string("L-hat bootstrap failed: ") + e.what());
        }
    }

    try {
        rep.self_eval = self_eval_analysis(data, opt.self_eval);
    } catch (const InsufficientBins& e) {
        rep.warnings.push_back(std::string("self-eval skipped: ") + e.what());
    }
    return rep;
}

ComparisonVerdict compare_pair(double score_a, double score_b, double n, std::optional<double> eps, Metric metric,
                               double L, double threshold_ratio) {
    if (!(score_a >= 0.0 && score_a <= 1.0 && score_b >= 0.0 && score_b <= 1.0))
        throw InvalidParam("scores must be in [0,1]");
    const double e = eps.value_or(1.0 - 0.5 * (score_a + score_b));
    ComparisonVerdict v;
    v.n = n;
    v.gap = std::abs(score_a - score_b);
    v.floor = metric == Metric::Accuracy ? accuracy_floor(e, n) : verification_floor(L, e, n);
    v.verdict = classify_gap(v.gap, v.floor, threshold_ratio);
    return v;
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidParam("missing CSV column: " + name);
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    while (std::getline(in, line)) {
        const std::string s = trim(line);
        if (s.empty()) continue;
        if (s[0] == '#') {
            t.comments.push_back(s);
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (s.back() == ',') cells.emplace_back();
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw MalformedRecord(t.rows.size(), "expected " + std::to_string(t.header.size()) + " columns, got " +
                                                     std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw EmptyDataset();
    return t;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidParam("cannot open " + path);
    return read_csv(f);
}

std::string fixture_path(const std::string& file) { return std::string(VTAX_FIXTURE_DIR) + "/" + file; }

std::vector<BenchmarkRow> load_benchmarks(const std::string& path) {
    const auto t = read_csv_file(path);
    const auto cb = t.column("benchmark"), cn = t.column("n"), ce = t.column("eps"), cf = t.column("floor");
    std::vector<BenchmarkRow> out;
    for (const auto& r : t.rows)
        out.push_back({r[cb], to_number(r[cn], "n"), to_number(r[ce], "eps"), to_number(r[cf], "floor")});
    return out;
}

std::vector<PairRow> load_pairs(const std::string& path) {
    const auto t = read_csv_file(path);
    const auto ca = t.column("model_a"), cb = t.column("model_b"), cbench = t.column("benchmark"),
               cn = t.column("n"), cg = t.column("gap"), cd = t.column("delta_acc"), cv = t.column("verdict");
    std::vector<PairRow> out;
    for (const auto& r : t.rows)
        out.push_back({r[ca], r[cb], r[cbench], to_number(r[cn], "n"), to_number(r[cg], "gap"),
                       to_number(r[cd], "delta_acc"), r[cv]});
    return out;
}

std::vector<SubjectRow> load_subjects(const std::string& path) {
    const auto t = read_csv_file(path);
    const auto cs = t.column("subject"), cn = t.column("n"), cg = t.column("max_gap"), cf = t.column("floor"),
               cv = t.column("verifiable");
    const std::set<std::size_t> fixed{cs, cn, cg, cf, cv, t.column("instability")};
    std::vector<SubjectRow> out;
    for (const auto& r : t.rows) {
        SubjectRow s;
        s.subject = r[cs];
        s.n = to_number(r[cn], "n");
        s.max_gap = to_number(r[cg], "max_gap");
        s.floor = to_number(r[cf], "floor");
        s.verifiable = to_number(r[cv], "verifiable") != 0.0;
        for (std::size_t c = 0; c < t.header.size(); ++c)
            if (!fixed.count(c)) s.scores[t.header[c]] = to_number(r[c], t.header[c]);
        if (s.scores.size() < 2) throw InvalidParam("subject table needs at least two model columns");
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<PublishedScore> load_published_scores(const std::string& path) {
    const auto t = read_csv_file(path);
    const auto cm = t.column("model"), cb = t.column("benchmark"), cn = t.column("n"), cs = t.column("score");
    std::vector<PublishedScore> out;
    for (const auto& r : t.rows) {
        PublishedScore p{r[cm], r[cb], to_number(r[cn], "n"), to_number(r[cs], "score")};
        if (!(p.score >= 0.0 && p.score <= 1.0)) throw MalformedRecord(out.size(), "score out of range");
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<ComparisonVerdict> compare_published(const std::vector<PublishedScore>& scores,
                                                 const std::map<std::string, double>& benchmark_eps, Metric metric,
                                                 double L, double threshold_ratio) {
    std::vector<ComparisonVerdict> out;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        for (std::size_t j = i + 1; j < scores.size(); ++j) {
            const auto& a = scores[i];
            const auto& b = scores[j];
            if (a.benchmark != b.benchmark) continue;
            std::optional<double> eps;
            if (auto it = benchmark_eps.find(a.benchmark); it != benchmark_eps.end()) eps = it->second;
            auto v = compare_pair(a.score, b.score, std::min(a.n, b.n), eps, metric, L, threshold_ratio);
            v.model_a = a.model;
            v.model_b = b.model;
            v.benchmark = a.benchmark;
            out.push_back(std::move(v));
        }
    }
    return out;
}

LeaderboardSummary leaderboard_noise(const std::vector<SubjectRow>& subjects, FloorSource source, double L) {
    if (subjects.empty()) throw InvalidParam("need at least one subject");
    LeaderboardSummary sum;
    for (const auto& s : subjects) {
        if (s.scores.size() < 2) throw InvalidParam("subject " + s.subject + " needs at least two models");
        std::vector<double> v;
        for (const auto& [model, score] : s.scores) v.push_back(score);
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());

        SubjectVerdict sv;
        sv.subject = s.subject;
        sv.n = s.n;
        sv.max_gap = *hi - *lo;
        double mean_score = 0.0;
        for (double x : v) mean_score += x;
        mean_score /= static_cast<double>(v.size());
        switch (source) {
            case FloorSource::Fixture: sv.floor = s.floor; break;
            case FloorSource::OneMinusBest: sv.floor = verification_floor(L, 1.0 - *hi, s.n); break;
            case FloorSource::OneMinusMean: sv.floor = verification_floor(L, 1.0 - mean_score, s.n); break;
        }
        sv.verifiable = sv.max_gap >= sv.floor;
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j) {
                ++sv.pairs;
                sv.pairs_below += std::abs(v[i] - v[j]) < sv.floor ? 1 : 0;
            }
        sv.fixture_flag = s.verifiable;
        if (sv.verifiable != s.verifiable) ++sum.flag_mismatches;
        sum.pairs += sv.pairs;
        sum.pairs_below += sv.pairs_below;
        sum.fully_unranked += sv.pairs_below == sv.pairs ? 1 : 0;
        sum.with_unranked_pair += sv.pairs_below > 0 ? 1 : 0;
        sum.subjects.push_back(std::move(sv));
    }
    sum.fraction_below = static_cast<double>(sum.pairs_below) / static_cast<double>(sum.pairs);
    return sum;
}

}  // namespace vtax
