#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace latdiag::json {

// Minimal JSON document model with a fully deterministic serializer: object
// keys are emitted sorted, doubles use 17 significant digits (exact
// round-trip), non-finite doubles become quoted strings. Output bytes depend
// only on the document content.
class Value {
public:
    using Array = std::vector<Value>;
    using Object = std::map<std::string, Value>;

    Value() : data_(false) {}
    Value(bool b) : data_(b) {}
    Value(int v) : data_(static_cast<std::int64_t>(v)) {}
    Value(long v) : data_(static_cast<std::int64_t>(v)) {}
    Value(long long v) : data_(static_cast<std::int64_t>(v)) {}
    Value(unsigned v) : data_(static_cast<std::int64_t>(v)) {}
    Value(unsigned long v) : data_(static_cast<std::int64_t>(v)) {}
    Value(unsigned long long v) : data_(static_cast<std::int64_t>(v)) {}
    Value(double v) : data_(v) {}
    Value(const char* s) : data_(std::string(s)) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(Array a) : data_(std::move(a)) {}
    Value(Object o) : data_(std::move(o)) {}

    static Value object() { return Value(Object{}); }
    static Value array() { return Value(Array{}); }

    Value& operator[](const std::string& key) {
        return std::get<Object>(data_)[key];
    }

    void push_back(Value v) { std::get<Array>(data_).push_back(std::move(v)); }

    bool is_object() const { return std::holds_alternative<Object>(data_); }
    bool is_array() const { return std::holds_alternative<Array>(data_); }

    const Object& as_object() const { return std::get<Object>(data_); }
    const Array& as_array() const { return std::get<Array>(data_); }
    const Value& at(const std::string& key) const { return as_object().at(key); }

    double as_double() const {
        if (std::holds_alternative<std::int64_t>(data_)) {
            return static_cast<double>(std::get<std::int64_t>(data_));
        }
        return std::get<double>(data_);
    }
    std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
    bool as_bool() const { return std::get<bool>(data_); }
    const std::string& as_string() const { return std::get<std::string>(data_); }

    std::string dump(int indent = 2) const {
        std::string out;
        write(out, indent, 0);
        return out;
    }

    static std::string format_double(double v) {
        if (std::isnan(v)) return "\"nan\"";
        if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

private:
    static std::string escape(const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\r': out += "\\r"; break;
                case '\t': out += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out += buf;
                    } else {
                        out.push_back(c);
                    }
            }
        }
        out.push_back('"');
        return out;
    }

    void write(std::string& out, int indent, int depth) const {
        const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
        const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
        if (std::holds_alternative<bool>(data_)) {
            out += std::get<bool>(data_) ? "true" : "false";
        } else if (std::holds_alternative<std::int64_t>(data_)) {
            out += std::to_string(std::get<std::int64_t>(data_));
        } else if (std::holds_alternative<double>(data_)) {
            out += format_double(std::get<double>(data_));
        } else if (std::holds_alternative<std::string>(data_)) {
            out += escape(std::get<std::string>(data_));
        } else if (std::holds_alternative<Array>(data_)) {
            const Array& a = std::get<Array>(data_);
            if (a.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < a.size(); ++i) {
                out += pad;
                a[i].write(out, indent, depth + 1);
                if (i + 1 < a.size()) out += ",";
                out += "\n";
            }
            out += close_pad + "]";
        } else {
            const Object& o = std::get<Object>(data_);
            if (o.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            std::size_t i = 0;
            for (const auto& [key, value] : o) { // std::map: keys already sorted
                out += pad + escape(key) + ": ";
                value.write(out, indent, depth + 1);
                if (++i < o.size()) out += ",";
                out += "\n";
            }
            out += close_pad + "}";
        }
    }

    std::variant<bool, std::int64_t, double, std::string, Array, Object> data_;
};

} // namespace latdiag::json
