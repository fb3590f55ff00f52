#include "vtax/core_types.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "vtax/error.hpp"

namespace vtax {

namespace {

const std::string kEmptyName;

bool in_unit_interval(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace

Dataset Dataset::from_columns(std::string name, std::vector<double> confidence,
                              std::vector<std::uint8_t> correct) {
    if (confidence.empty()) throw EmptyDataset();
    if (confidence.size() != correct.size())
        throw InvalidParam("confidence and correct columns differ in length");
    for (std::size_t i = 0; i < confidence.size(); ++i) {
        if (!in_unit_interval(confidence[i])) throw MalformedRecord(i, "confidence out of range");
        if (correct[i] > 1) throw MalformedRecord(i, "correct must be boolean");
    }
    auto impl = std::make_shared<Impl>();
    impl->name = std::move(name);
    impl->confidence = std::move(confidence);
    impl->correct = std::move(correct);
    return Dataset(std::move(impl));
}

const std::string& Dataset::name() const noexcept { return impl_ ? impl_->name : kEmptyName; }

std::span<const double> Dataset::confidence() const noexcept {
    if (!impl_) return {};
    return impl_->confidence;
}

std::span<const std::uint8_t> Dataset::correct() const noexcept {
    if (!impl_) return {};
    return impl_->correct;
}

PredictionRecord Dataset::record(std::size_t i) const {
    if (i >= size()) throw InvalidParam("record index out of range");
    PredictionRecord r;
    r.item_id = impl_->ids.empty() ? std::to_string(i) : impl_->ids[i];
    r.confidence = impl_->confidence[i];
    r.correct = impl_->correct[i] != 0;
    if (!impl_->group.empty()) r.group = impl_->group[i];
    if (!impl_->subject.empty()) r.subject = impl_->subject[i];
    if (!impl_->stage.empty()) r.stage = impl_->stage[i];
    return r;
}

std::vector<PredictionRecord> Dataset::records() const {
    std::vector<PredictionRecord> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(record(i));
    return out;
}

Dataset Dataset::resample(std::span<const std::size_t> rows) const {
    if (rows.empty()) throw EmptyDataset();
    auto impl = std::make_shared<Impl>();
    impl->name = name();
    impl->confidence.reserve(rows.size());
    impl->correct.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= size()) throw InvalidParam("row index out of range");
        impl->confidence.push_back(impl_->confidence[r]);
        impl->correct.push_back(impl_->correct[r]);
    }
    return Dataset(std::move(impl));
}

Dataset Dataset::subset(std::span<const std::size_t> rows, std::string new_name) const {
    if (rows.empty()) throw EmptyDataset();
    std::vector<char> seen(size(), 0);
    auto impl = std::make_shared<Impl>();
    impl->name = std::move(new_name);
    for (std::size_t r : rows) {
        if (r >= size()) throw InvalidParam("row index out of range");
        if (seen[r]) throw InvalidParam("subset rows must be distinct");
        seen[r] = 1;
        impl->confidence.push_back(impl_->confidence[r]);
        impl->correct.push_back(impl_->correct[r]);
        if (!impl_->ids.empty()) impl->ids.push_back(impl_->ids[r]);
        if (!impl_->group.empty()) impl->group.push_back(impl_->group[r]);
        if (!impl_->subject.empty()) impl->subject.push_back(impl_->subject[r]);
        if (!impl_->stage.empty()) impl->stage.push_back(impl_->stage[r]);
    }
    return Dataset(std::move(impl));
}

bool Dataset::operator==(const Dataset& other) const {
    if (size() != other.size() || name() != other.name()) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (record(i) != other.record(i)) return false;
    return true;
}

void RateParams::validate() const {
    if (!(lipschitz > 0.0)) throw InvalidParam("L must be positive");
    if (!(error_rate > 0.0 && error_rate <= 1.0)) throw InvalidParam("eps must be in (0,1]");
    if (!(samples >= 1.0)) throw InvalidParam("sample count must be positive");
    if (!(target_gap > 0.0 && target_gap <= 1.0)) throw InvalidParam("delta must be in (0,1]");
}

Dataset validate_dataset(const std::vector<PredictionRecord>& raw, std::string name) {
    if (raw.empty()) throw EmptyDataset();
    auto impl = std::make_shared<Dataset::Impl>();
    impl->name = std::move(name);
    const std::size_t n = raw.size();
    impl->confidence.reserve(n);
    impl->correct.reserve(n);
    impl->ids.reserve(n);

    bool any_group = false, any_subject = false, any_stage = false;
    std::unordered_map<std::string, std::size_t> first_seen;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = raw[i];
        if (r.item_id.empty()) throw MalformedRecord(i, "empty item_id");
        if (!in_unit_interval(r.confidence)) throw MalformedRecord(i, "confidence out of range");
        if (r.stage && *r.stage < 0) throw MalformedRecord(i, "stage must be non-negative");
        auto [it, inserted] = first_seen.emplace(r.item_id, i);
        if (!inserted)
            throw MalformedRecord(i, "duplicate item_id (first at " + std::to_string(it->second) + ")");
        impl->confidence.push_back(r.confidence);
        impl->correct.push_back(r.correct ? 1 : 0);
        impl->ids.push_back(r.item_id);
        any_group |= r.group.has_value();
        any_subject |= r.subject.has_value();
        any_stage |= r.stage.has_value();
    }
    if (any_group)
        for (const auto& r : raw) impl->group.push_back(r.group);
    if (any_subject)
        for (const auto& r : raw) impl->subject.push_back(r.subject);
    if (any_stage)
        for (const auto& r : raw) impl->stage.push_back(r.stage);
    return Dataset(std::move(impl));
}

std::vector<PredictionRecord> read_jsonl(std::istream& in) {
    using nlohmann::json;
    std::vector<PredictionRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::size_t index = out.size();
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            throw MalformedRecord(index, "invalid JSON");
        }
        if (!j.is_object()) throw MalformedRecord(index, "record must be a JSON object");

        PredictionRecord r;
        auto id = j.find("item_id");
        if (id == j.end() || !id->is_string()) throw MalformedRecord(index, "item_id must be a string");
        r.item_id = id->get<std::string>();

        auto conf = j.find("confidence");
        if (conf == j.end() || !conf->is_number()) throw MalformedRecord(index, "confidence must be a number");
        r.confidence = conf->get<double>();

        auto corr = j.find("correct");
        if (corr == j.end() || !corr->is_boolean())
            throw MalformedRecord(index, "correct must be a boolean");
        r.correct = corr->get<bool>();

        for (const char* key : {"group", "subject"}) {
            auto f = j.find(key);
            if (f == j.end() || f->is_null()) continue;
            if (!f->is_string()) throw MalformedRecord(index, std::string(key) + " must be a string");
            (key[0] == 'g' ? r.group : r.subject) = f->get<std::string>();
        }
        auto st = j.find("stage");
        if (st != j.end() && !st->is_null()) {
            if (!st->is_number_integer()) throw MalformedRecord(index, "stage must be an integer");
            r.stage = st->get<std::int64_t>();
        }
        out.push_back(std::move(r));
    }
    return out;
}

Dataset load_jsonl(std::istream& in, std::string name) {
    return validate_dataset(read_jsonl(in), std::move(name));
}

Dataset load_jsonl_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidParam("cannot open " + path);
    return load_jsonl(f, path);
}

void write_jsonl(std::ostream& out, const Dataset& data) {
    using nlohmann::json;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = data.record(i);
        json j = {{"item_id", r.item_id}, {"confidence", r.confidence}, {"correct", r.correct}};
        if (r.group) j["group"] = *r.group;
        if (r.subject) j["subject"] = *r.subject;
        if (r.stage) j["stage"] = *r.stage;
        out << j.dump() << '\n';
    }
}

}  // namespace vtax
