#include "schema.hpp"

#include <cmath>

#include "schema_text.hpp"

namespace entlab::cli {

namespace {

std::string summarize(const std::vector<SchemaViolation>& v) {
  std::string s = "config violates the schema:";
  for (const auto& x : v) s += "\n  " + (x.pointer.empty() ? std::string("/") : x.pointer) + ": " + x.message;
  return s;
}

std::string escape(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

bool has_type(const nlohmann::json& doc, const std::string& t) {
  if (t == "object") return doc.is_object();
  if (t == "array") return doc.is_array();
  if (t == "string") return doc.is_string();
  if (t == "boolean") return doc.is_boolean();
  if (t == "null") return doc.is_null();
  if (t == "number") return doc.is_number();
  if (t == "integer") return doc.is_number_integer();
  return false;
}

class Validator {
 public:
  explicit Validator(const nlohmann::json& root) : root_(root) {}

  void run(const nlohmann::json& s, const nlohmann::json& doc, const std::string& ptr,
           std::vector<SchemaViolation>& out) const {
    if (s.contains("$ref")) {
      const std::string ref = s["$ref"].get<std::string>();
      run(root_.at(nlohmann::json::json_pointer(ref.substr(1))), doc, ptr, out);
      return;
    }
    if (s.contains("type")) {
      const auto& t = s["type"];
      bool ok = false;
      if (t.is_string()) ok = has_type(doc, t.get<std::string>());
      else
        for (const auto& x : t) ok = ok || has_type(doc, x.get<std::string>());
      if (!ok) {
        out.push_back({ptr, "expected type " + (t.is_string() ? t.get<std::string>() : t.dump())});
        return;
      }
    }
    if (s.contains("enum")) {
      bool ok = false;
      for (const auto& e : s["enum"]) ok = ok || e == doc;
      if (!ok) out.push_back({ptr, "value " + doc.dump() + " not one of " + s["enum"].dump()});
    }
    if (s.contains("const") && s["const"] != doc) out.push_back({ptr, "expected " + s["const"].dump()});
    if (doc.is_number()) {
      const double v = doc.get<double>();
      if (!std::isfinite(v)) out.push_back({ptr, "non-finite number"});
      if (s.contains("minimum") && v < s["minimum"].get<double>())
        out.push_back({ptr, "must be >= " + s["minimum"].dump()});
      if (s.contains("maximum") && v > s["maximum"].get<double>())
        out.push_back({ptr, "must be <= " + s["maximum"].dump()});
      if (s.contains("exclusiveMinimum") && v <= s["exclusiveMinimum"].get<double>())
        out.push_back({ptr, "must be > " + s["exclusiveMinimum"].dump()});
    }
    if (doc.is_object()) {
      if (s.contains("required"))
        for (const auto& r : s["required"]) {
          const std::string k = r.get<std::string>();
          if (!doc.contains(k)) out.push_back({ptr + "/" + escape(k), "required field is missing"});
        }
      const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
      for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string p = ptr + "/" + escape(it.key());
        if (s.contains("properties") && s["properties"].contains(it.key())) run(s["properties"][it.key()], it.value(), p, out);
        else if (closed) out.push_back({p, "unknown field"});
      }
    }
    if (doc.is_array()) {
      if (s.contains("minItems") && doc.size() < s["minItems"].get<std::size_t>())
        out.push_back({ptr, "needs at least " + s["minItems"].dump() + " items"});
      if (s.contains("maxItems") && doc.size() > s["maxItems"].get<std::size_t>())
        out.push_back({ptr, "allows at most " + s["maxItems"].dump() + " items"});
      if (s.contains("items"))
        for (std::size_t i = 0; i < doc.size(); ++i) run(s["items"], doc[i], ptr + "/" + std::to_string(i), out);
    }
    if (s.contains("allOf"))
      for (const auto& sub : s["allOf"]) run(sub, doc, ptr, out);
    if (s.contains("if") && s.contains("then")) {
      std::vector<SchemaViolation> probe;
      run(s["if"], doc, ptr, probe);
      if (probe.empty()) run(s["then"], doc, ptr, out);
    }
    if (s.contains("oneOf")) {
      int matches = 0;
      std::vector<SchemaViolation> best;
      bool have_best = false;
      for (const auto& sub : s["oneOf"]) {
        std::vector<SchemaViolation> v;
        run(sub, doc, ptr, v);
        if (v.empty()) ++matches;
        else if (!have_best || v.size() < best.size()) {
          best = std::move(v);
          have_best = true;
        }
      }
      if (matches == 0) out.insert(out.end(), best.begin(), best.end());
      else if (matches > 1) out.push_back({ptr, "matches more than one allowed form"});
    }
  }

 private:
  const nlohmann::json& root_;
};

}  // namespace

SchemaError::SchemaError(std::vector<SchemaViolation> v) : Error(summarize(v), 2), violations_(std::move(v)) {}

SchemaError::SchemaError(const std::string& pointer, const std::string& message)
    : SchemaError(std::vector<SchemaViolation>{{pointer, message}}) {}

nlohmann::json SchemaError::to_json() const {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& v : violations_) a.push_back({{"path", v.pointer}, {"message", v.message}});
  return {{"error", "SchemaError"}, {"violations", a}};
}

std::vector<SchemaViolation> validate(const nlohmann::json& schema, const nlohmann::json& doc) {
  std::vector<SchemaViolation> out;
  Validator(schema).run(schema, doc, "", out);
  return out;
}

const nlohmann::json& config_schema() {
  static const nlohmann::json s = nlohmann::json::parse(kConfigSchemaText);
  return s;
}

}  // namespace entlab::cli
