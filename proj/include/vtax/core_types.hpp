#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vtax {

struct PredictionRecord {
    std::string item_id;
    double confidence = 0.0;
    bool correct = false;
    std::optional<std::string> group;
    std::optional<std::string> subject;
    std::optional<std::int64_t> stage;

    bool operator==(const PredictionRecord&) const = default;
};

// Immutable, validated collection of records. Stored column-wise so the
// estimators can run over contiguous confidence/label arrays.
class Dataset {
public:
    Dataset() = default;

    // Synthetic data path: ids are implicit ("0".."m-1") and no tags are kept.
    static Dataset from_columns(std::string name, std::vector<double> confidence,
                                std::vector<std::uint8_t> correct);

    std::size_t size() const noexcept { return impl_ ? impl_->confidence.size() : 0; }
    bool empty() const noexcept { return size() == 0; }
    const std::string& name() const noexcept;

    std::span<const double> confidence() const noexcept;
    std::span<const std::uint8_t> correct() const noexcept;

    PredictionRecord record(std::size_t i) const;
    std::vector<PredictionRecord> records() const;

    // Rows by index, possibly repeated (bootstrap). Repeated rows would break
    // id uniqueness, so the result drops explicit ids and tags.
    Dataset resample(std::span<const std::size_t> rows) const;
    // Rows by index, each at most once; ids and tags are preserved.
    Dataset subset(std::span<const std::size_t> rows, std::string name) const;

    bool operator==(const Dataset& other) const;

private:
    struct Impl {
        std::string name;
        std::vector<double> confidence;
        std::vector<std::uint8_t> correct;
        std::vector<std::string> ids;  // empty: implicit ids
        std::vector<std::optional<std::string>> group, subject;
        std::vector<std::optional<std::int64_t>> stage;
    };
    explicit Dataset(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;

    friend Dataset validate_dataset(const std::vector<PredictionRecord>&, std::string);
};

struct BinStat {
    int bin_index = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    // Undefined for empty bins rather than silently zero.
    std::optional<double> mean_confidence;
    std::optional<double> accuracy;
    std::optional<double> gap;  // accuracy - mean_confidence
};

struct RateParams {
    double lipschitz = 1.0;
    double error_rate = 0.1;
    double samples = 1.0;
    double target_gap = 0.1;

    void validate() const;
};

// Throws EmptyDataset or MalformedRecord(index, reason).
Dataset validate_dataset(const std::vector<PredictionRecord>& raw, std::string name = "dataset");

// JSON Lines. Blank lines are skipped; a parse failure is reported with the
// zero-based index of the offending record.
std::vector<PredictionRecord> read_jsonl(std::istream& in);
Dataset load_jsonl(std::istream& in, std::string name = "dataset");
Dataset load_jsonl_file(const std::string& path);
void write_jsonl(std::ostream& out, const Dataset& data);

}  // namespace vtax
