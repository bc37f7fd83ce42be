#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace drum {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or degenerate geometric input (zero area, non-simple polygon, vertex off-grid).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Meshing, assembly or eigensolver failure.
class FemError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value. `field()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Malformed binary file. Carries the byte offset and, when known, the record index.
class FormatError : public Error {
public:
    static constexpr std::int64_t kNoRecord = -1;

    FormatError(const std::string& message, std::uint64_t offset, std::int64_t record = kNoRecord)
        : Error(describe(message, offset, record)), offset_(offset), record_(record) {}

    std::uint64_t offset() const noexcept { return offset_; }
    std::int64_t record() const noexcept { return record_; }

private:
    static std::string describe(const std::string& message, std::uint64_t offset, std::int64_t record) {
        std::string s = message + " (byte offset " + std::to_string(offset);
        if (record != kNoRecord) s += ", record " + std::to_string(record);
        return s + ")";
    }

    std::uint64_t offset_;
    std::int64_t record_;
};

/// Tensor/config shape mismatch in the network code.
class ShapeError : public Error {
public:
    using Error::Error;
};

}  // namespace drum
