#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace cfd {

/// Insertion-ordered JSON value with fixed floating-point formatting
/// (17 significant digits), so identical runs produce byte-identical reports.
class Json {
  public:
    Json() : value_(nullptr) {}
    Json(std::nullptr_t) : value_(nullptr) {}
    Json(bool b) : value_(b) {}
    Json(double d) : value_(d) {}
    Json(int i) : value_(static_cast<std::int64_t>(i)) {}
    Json(std::int64_t i) : value_(i) {}
    Json(std::uint64_t i) : value_(static_cast<std::int64_t>(i)) {}
    Json(const char* s) : value_(std::string(s)) {}
    Json(std::string s) : value_(std::move(s)) {}

    static Json array() {
        Json j;
        j.value_ = Array{};
        return j;
    }
    static Json object() {
        Json j;
        j.value_ = Object{};
        return j;
    }

    Json& push_back(Json v) {
        std::get<Array>(value_).push_back(std::move(v));
        return *this;
    }
    Json& set(std::string key, Json v) {
        std::get<Object>(value_).emplace_back(std::move(key), std::move(v));
        return *this;
    }

    static std::string format_double(double d);
    std::string dump(int indent = 2) const;

  private:
    struct Array : std::vector<Json> {};
    struct Object : std::vector<std::pair<std::string, Json>> {};
    std::variant<std::nullptr_t, bool, double, std::int64_t, std::string, Array, Object>
        value_;

    void write(std::string& out, int indent, int depth) const;
};

}  // namespace cfd
