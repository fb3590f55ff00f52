#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vtax/calculators.hpp"
#include "vtax/core_types.hpp"
#include "vtax/resample.hpp"

namespace vtax {

struct SelfEvalPair {
    double rho = 0.0;
    double p_value = 1.0;
    bool degenerate = false;
};

struct SelfEval {
    SelfEvalPair conf_acc;
    SelfEvalPair conf_gap;
    int qualifying_bins = 0;
    bool degenerate = false;
};

struct SelfEvalOptions {
    int bins = 20;
    std::size_t min_count = 10;
    int min_bins = 5;
    int permutations = 10000;
    std::uint64_t seed = 0;
};

// Spearman + permutation p for bin confidence vs bin accuracy and vs |gap|.
// Constant confidence gives a Degenerate result; fewer than min_bins
// qualifying bins otherwise throws InsufficientBins.
SelfEval self_eval_analysis(const Dataset& data, const SelfEvalOptions& opt = {});

struct AuditOptions {
    int replicates = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    double saturation_threshold = 0.99;
    std::size_t low_sample = 200;
    SelfEvalOptions self_eval;
};

struct AuditReport {
    std::size_t n = 0;
    BootstrapCI eps_hat;
    BootstrapCI ece;
    std::optional<BootstrapCI> L_hat;  // absent when the bootstrap could not estimate L
    double L_used = 1.0;               // point L-hat, or 1 when it could not be estimated
    std::optional<BootstrapCI> floor;
    double floor_point = 0.0;
    double acc_floor = 0.0;
    int bins_used = 1;
    double saturation = 0.0;
    std::optional<SelfEval> self_eval;
    std::vector<std::string> warnings;
};

AuditReport audit(const Dataset& data, const AuditOptions& opt = {});

enum class Metric { Accuracy, ECE };

struct ComparisonVerdict {
    std::string model_a, model_b, benchmark;
    double n = 0.0;
    double gap = 0.0;
    double floor = 0.0;
    Verdict verdict = Verdict::No;
};

// eps defaults to 1 - mean(score_a, score_b).
ComparisonVerdict compare_pair(double score_a, double score_b, double n, std::optional<double> eps, Metric metric,
                               double L = 1.0, double threshold_ratio = 1.25);

// Published-score tables ------------------------------------------------------

// Rows of a comma-separated file; '#' lines are provenance comments and the
// first non-comment line is the header.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;

    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

std::string fixture_path(const std::string& file);

struct BenchmarkRow {
    std::string benchmark;
    double n = 0.0;
    double eps = 0.0;
    double floor = 0.0;
};
std::vector<BenchmarkRow> load_benchmarks(const std::string& path);

struct PairRow {
    std::string model_a, model_b, benchmark;
    double n = 0.0;
    double gap = 0.0;
    double delta_acc = 0.0;
    std::string verdict;
};
std::vector<PairRow> load_pairs(const std::string& path);

struct SubjectRow {
    std::string subject;
    double n = 0.0;
    std::map<std::string, double> scores;
    double max_gap = 0.0;
    double floor = 0.0;
    bool verifiable = false;
};
std::vector<SubjectRow> load_subjects(const std::string& path);

// Published-scores CSV (model, benchmark, n, score).
struct PublishedScore {
    std::string model, benchmark;
    double n = 0.0;
    double score = 0.0;
};
std::vector<PublishedScore> load_published_scores(const std::string& path);

// All pairwise verdicts within each benchmark of a published-scores table.
std::vector<ComparisonVerdict> compare_published(const std::vector<PublishedScore>& scores,
                                                 const std::map<std::string, double>& benchmark_eps, Metric metric,
                                                 double L = 1.0, double threshold_ratio = 1.25);

enum class FloorSource { Fixture, OneMinusBest, OneMinusMean };

struct SubjectVerdict {
    std::string subject;
    double n = 0.0;
    double max_gap = 0.0;
    double floor = 0.0;
    bool verifiable = false;
    int pairs = 0;
    int pairs_below = 0;
    std::optional<bool> fixture_flag;
};

struct LeaderboardSummary {
    std::vector<SubjectVerdict> subjects;
    int pairs = 0;
    int pairs_below = 0;
    double fraction_below = 0.0;
    int fully_unranked = 0;
    int with_unranked_pair = 0;
    int flag_mismatches = 0;  // against the fixture's own flags, when present
};

LeaderboardSummary leaderboard_noise(const std::vector<SubjectRow>& subjects, FloorSource source, double L = 1.0);

}  // namespace vtax
