#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace attrib {

// Reference-count class of a sentence.
enum class RefClass : int { Zero = 0, One = 1, Multi = 2 };

inline const char* to_string(RefClass c) {
    switch (c) {
        case RefClass::Zero: return "zero";
        case RefClass::One: return "one";
        case RefClass::Multi: return "multi";
    }
    return "?";
}

// Parses "zero" / "one" / "multi"; throws on anything else.
RefClass ref_class_from_string(const std::string& s);

// Unrecoverable error: bad schema, violated precondition, corrupt input.
class FatalError : public std::runtime_error {
public:
    explicit FatalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Transient failure (service unreachable, timeout); the caller may retry.
class RetriableError : public std::runtime_error {
public:
    explicit RetriableError(const std::string& msg) : std::runtime_error(msg) {}
};

// Collector for recoverable diagnostics. Pass nullptr to discard.
class Warnings {
public:
    void add(std::string msg) { items_.push_back(std::move(msg)); }
    const std::vector<std::string>& items() const { return items_; }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }

private:
    std::vector<std::string> items_;
};

inline void warn(Warnings* sink, std::string msg) {
    if (sink) sink->add(std::move(msg));
}

}  // namespace attrib
