#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "entlab/errors.hpp"

namespace entlab::cli {

struct SchemaViolation {
  std::string pointer;  // JSON pointer into the document, "" for the root
  std::string message;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<SchemaViolation> v);
  SchemaError(const std::string& pointer, const std::string& message);
  const std::vector<SchemaViolation>& violations() const { return violations_; }
  nlohmann::json to_json() const;

 private:
  std::vector<SchemaViolation> violations_;
};

// Draft-07 subset: type, enum, const, minimum, maximum, exclusiveMinimum,
// required, properties, additionalProperties (bool), items, minItems,
// maxItems, allOf, oneOf, if/then, local $ref.
std::vector<SchemaViolation> validate(const nlohmann::json& schema, const nlohmann::json& doc);

// The config schema compiled into the binary.
const nlohmann::json& config_schema();

}  // namespace entlab::cli
