#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vtax {

// Every library failure derives from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParam : public Error {
public:
    using Error::Error;
};

class EmptyDataset : public Error {
public:
    EmptyDataset() : Error("empty dataset") {}
};

class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t index, std::string reason)
        : Error("record " + std::to_string(index) + ": " + reason),
          index_(index), reason_(std::move(reason)) {}

    std::size_t index() const noexcept { return index_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t index_;
    std::string reason_;
};

class InsufficientBins : public Error {
public:
    using Error::Error;
};

class BudgetTooSmall : public Error {
public:
    using Error::Error;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class UnboundedDepth : public Error {
public:
    UnboundedDepth() : Error("depth is unbounded for L <= 1") {}
};

class AllBoundary : public Error {
public:
    AllBoundary() : Error("no records with confidence strictly inside (0,1)") {}
};

class StatisticFailure : public Error {
public:
    explicit StatisticFailure(std::size_t replicate)
        : Error("statistic failed on replicate " + std::to_string(replicate)),
          replicate_(replicate) {}

    std::size_t replicate() const noexcept { return replicate_; }

private:
    std::size_t replicate_;
};

class OracleFailure : public Error {
public:
    using Error::Error;
};

// Clipping or another data-quality guard tripped inside an experiment.
class ExperimentAborted : public Error {
public:
    using Error::Error;
};

}  // namespace vtax
