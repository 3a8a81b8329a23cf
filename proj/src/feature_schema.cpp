#include <algorithm>
#include <unordered_map>

#include <json.hpp>

#include "patchguard/error.hpp"
#include "patchguard/features.hpp"

namespace patchguard {
namespace {

struct Described {
  const char* name;
  const char* description;
};

const Described kOperators[] = {
    {"opAdd", "binary '+' or compound '+='"},
    {"opSub", "binary '-' or compound '-='"},
    {"opMul", "binary '*' or compound '*='"},
    {"opDiv", "binary '/' or compound '/='"},
    {"opMod", "binary '%' or compound '%='"},
    {"opEqual", "relational '=='"},
    {"opNotEqual", "relational '!='"},
    {"opLessThan", "relational '<'"},
    {"opLessEqual", "relational '<='"},
    {"opGreaterThan", "relational '>'"},
    {"opGreaterEqual", "relational '>='"},
    {"uopInc", "prefix or postfix '++'"},
    {"uopDec", "prefix or postfix '--', or unary minus"},
    {"opBitwise", "'&', '|', '^', '~', shifts, or their compound assignments"},
};

const Described kVariables[] = {
    {"localVar", "a referenced variable resolves to a parameter or local of the enclosing callable"},
    {"globalVar", "a referenced variable is a field or cannot be resolved"},
    {"abstVar", "a referenced variable's declared type is an interface or abstract class declared in the file"},
    {"primVar", "a referenced variable has a primitive declared type"},
    {"enum", "a referenced variable has an enum type declared in the file, or is an enum constant"},
};

const Described kStatements[] = {
    {"assignConst", "an assignment or initialized declarator whose value is a literal"},
    {"assignLhs", "an assignment whose target is a field access or array element"},
    {"assignZero", "an assignment or initialized declarator whose value is a zero numeric literal or null"},
    {"callee", "a method invocation with an explicit receiver expression"},
    {"callArgument", "a call or instantiation passes a variable as an argument"},
    {"stmtCond", "an if statement or a conditional expression"},
    {"stmtCall", "a method invocation"},
    {"stmtLoop", "a for, enhanced-for, while or do loop"},
    {"memberAccess", "a field access expression"},
    {"funcArgument", "a reference to a parameter of the enclosing method"},
    {"stmtAssign", "an assignment statement or assignment expression"},
    {"stmtReturn", "a return statement"},
    {"stmtTry", "a try statement or catch clause"},
    {"stmtBranch", "a switch case group"},
    {"stmtBreak", "a break statement"},
    {"stmtContinue", "a continue statement"},
    {"stmtThrow", "a throw statement"},
    {"stmtNew", "an object or array creation"},
    {"stmtCast", "a cast expression"},
    {"stmtDecl", "a local or field variable declaration"},
    {"constant", "any literal"},
};

const Described kAstOperations[] = {
    {"insertStmt", "ADD of a statement"},
    {"replaceCond", "any action inside the condition of a retained if or loop"},
    {"replaceStmt", "a statement is deleted and a statement is added under matched parents"},
    {"removePartialIf", "DEL inside a retained if: a branch or part of its condition"},
    {"removeWholeBlock", "DEL of a block"},
    {"insertCond", "ADD of an if statement, a conditional expression, or a node inside a condition"},
    {"removeStmt", "DEL of a statement"},
    {"updateStmt", "UPD inside a statement that survives the patch"},
    {"moveStmt", "MOV of a statement"},
    {"updateLiteral", "UPD of a literal"},
};

const Described kRepairPatterns[] = {
    {"wrapsIf", "an added if without else holds a moved statement in its then-branch"},
    {"wrapsElse", "a retained if gains an else branch that holds a moved statement"},
    {"wrapsLoop", "an added loop holds a moved statement in its body"},
    {"wrapsTryCatch", "an added try holds a moved statement in its try block"},
    {"unwrapTryCatch", "a deleted try had a statement that is moved out of it"},
    {"wrapsIfElse", "an added if with else holds a moved statement in one of its branches"},
    {"unwrapIfElse", "a deleted if had a statement that is moved out of it"},
    {"wrapsMethod", "an added method invocation takes a moved expression as argument"},
    {"unwrapMethod", "a deleted method invocation had an argument that is moved out of it"},
    {"expLogicExpand", "an added '&&' or '||' takes a moved operand"},
    {"expArithMod", "an arithmetic operator is updated, added or deleted"},
    {"expLogicReduce", "a deleted '&&' or '||' had an operand that is moved out"},
    {"expLogicMod", "a logical or relational operator is updated"},
    {"condBlockOthersAdd", "an added if has a branch statement other than return or throw"},
    {"condBlockRem", "an if statement is deleted"},
    {"condBlockExcAdd", "an added if has a throw statement in a branch"},
    {"condBlockRetAdd", "an added if has a return statement in a branch"},
    {"missNullCheckP", "an added '== null' comparison inside a condition"},
    {"missNullCheckN", "an added '!= null' comparison inside a condition"},
    {"codeMove", "a statement is moved under a parent that exists in the buggy version"},
    {"copyPaste", "two or more added statements are isomorphic"},
    {"wrongVarRef", "a variable reference is renamed"},
    {"wrongMethodRef", "a method name in an invocation is renamed"},
    {"singleLine", "all touched nodes lie on a single line on each side"},
    {"constChange", "a literal is updated"},
    {"notClassified", "no other repair pattern fired"},
};

const Described kContextStrings[] = {
    {"typeOfFaultyStatementAfter1", "kind of the first statement after the faulty statement in its block"},
    {"typeOfFaultyStatementAfter2", "kind of the second statement after the faulty statement in its block"},
    {"typeOfFaultyStatementAfter3", "kind of the third statement after the faulty statement in its block"},
    {"typeOfFaultyStatementBefore1", "kind of the statement immediately before the faulty statement"},
    {"typeOfFaultyStatementBefore2", "kind of the second statement before the faulty statement"},
    {"typeOfFaultyStatementBefore3", "kind of the third statement before the faulty statement"},
    {"typeOfFaultyStatement", "kind of the faulty statement (first changed statement)"},
    {"typeOfFaultyStatementParent", "kind of the nearest enclosing non-block statement"},
    {"faultyClassExceptionType", "exception category of the enclosing class's superclass"},
};

const Described kContextBinary[] = {
    {"methodCallWithNullGuard", "the faulty statement calls a method under a null-comparison guard"},
    {"methodCallWithTryCatch", "the faulty statement calls a method inside a try block"},
    {"inSynchronizedMethod", "the faulty statement is in a synchronized method or block"},
    {"hasObjectiveMethodCall", "the faulty statement calls a method on an object variable"},
    {"methodThrowsException", "the enclosing method declares a throws clause"},
    {"methodCallWithNormalGuard", "the faulty statement calls a method under a guard without null comparison"},
    {"hasInvocationsProneException", "the faulty statement calls a method of the file that declares or raises exceptions"},
    {"similarObjectTypeWithNormalGuard", "another variable of the same object type is guarded without null comparison in the method"},
    {"similarObjectTypeWithNullGuard", "another variable of the same object type is null-checked in the method"},
    {"similarPrimitiveTypeWithNormalGuard", "another variable of the same primitive type is guarded in the method"},
    {"similarPrimitiveTypeWithNullGuard", "another variable of the same primitive type appears in a null-comparing guard"},
    {"fieldNotAssigned", "the enclosing class has a field without initializer that is never assigned"},
    {"fieldNotUsed", "the enclosing class has a field that is never read"},
    {"localVarNotAssigned", "the enclosing method has a local without initializer that is never assigned"},
    {"localVarNotUsed", "the enclosing method has a local that is never read"},
    {"objectUsedInAssignment", "the faulty statement assigns to or from an object variable"},
    {"primitiveUsedInAssignment", "the faulty statement assigns to or from a primitive variable"},
};

template <std::size_t N>
std::vector<std::string> names_of(const Described (&table)[N]) {
  std::vector<std::string> out;
  for (const auto& d : table) out.emplace_back(d.name);
  return out;
}

std::vector<std::string> statement_vocab() {
  std::vector<std::string> v;
  for (NodeKind k : statement_kinds()) v.emplace_back(kind_name(k));
  v.emplace_back(kNoneValue);
  return v;
}

FeatureSchema build_standard() {
  std::vector<FeatureEntry> entries;
  const std::pair<std::string_view, FeatureGroup> windows[] = {
      {kSrcPrefix, FeatureGroup::kCodeDescriptionSrc},
      {kFormerPrefix, FeatureGroup::kCodeDescriptionFormer},
      {kLatterPrefix, FeatureGroup::kCodeDescriptionLatter},
  };
  for (auto [prefix, group] : windows) {
    std::string where = group == FeatureGroup::kCodeDescriptionSrc ? "in the changed statements"
                        : group == FeatureGroup::kCodeDescriptionFormer
                            ? "in up to three statements before a changed statement in its block"
                            : "in up to three statements after a changed statement in its block";
    auto add = [&](const Described& d, bool ast_op) {
      std::string desc = d.description;
      if (ast_op && group != FeatureGroup::kCodeDescriptionSrc) {
        desc += "; always 0 outside the SRC window";
      } else {
        desc += " " + where;
      }
      entries.push_back({std::string(prefix) + d.name, FeatureKind::kBinary, group, {}, desc});
    };
    for (const auto& d : kOperators) add(d, false);
    for (const auto& d : kVariables) add(d, false);
    for (const auto& d : kStatements) add(d, false);
    for (const auto& d : kAstOperations) add(d, true);
  }
  for (const auto& d : kRepairPatterns) {
    entries.push_back({d.name, FeatureKind::kBinary, FeatureGroup::kRepairPattern, {}, d.description});
  }
  for (const auto& d : kContextStrings) {
    std::vector<std::string> vocab = statement_vocab();
    if (std::string_view(d.name) == "faultyClassExceptionType") {
      vocab = {"checked", "runtime", "error", std::string(kOtherValue), std::string(kNoneValue)};
    }
    entries.push_back({d.name, FeatureKind::kString, FeatureGroup::kContextual, std::move(vocab), d.description});
  }
  for (const auto& d : kContextBinary) {
    entries.push_back({d.name, FeatureKind::kBinary, FeatureGroup::kContextual, {}, d.description});
  }
  return FeatureSchema("1", std::move(entries));
}

}  // namespace

std::string_view group_name(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::kCodeDescriptionSrc:
      return "code-description-SRC";
    case FeatureGroup::kCodeDescriptionFormer:
      return "code-description-FORMER";
    case FeatureGroup::kCodeDescriptionLatter:
      return "code-description-LATTER";
    case FeatureGroup::kRepairPattern:
      return "repair-pattern";
    case FeatureGroup::kContextual:
      return "contextual";
  }
  return "?";
}

FeatureSchema::FeatureSchema(std::string version, std::vector<FeatureEntry> entries)
    : version_(std::move(version)), entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const FeatureEntry& e = entries_[i];
    if (!by_name_.emplace(e.name, i).second) throw SchemaMismatch("duplicate feature name " + e.name);
    offsets_.push_back(columns_.size());
    if (e.kind == FeatureKind::kBinary) {
      columns_.push_back(e.name);
    } else {
      ++string_count_;
      if (e.vocab.empty()) throw SchemaMismatch("string feature " + e.name + " has no vocabulary");
      for (const auto& v : e.vocab) columns_.push_back(e.name + "_" + v);
    }
  }
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (!by_column_.emplace(columns_[c], c).second) throw SchemaMismatch("duplicate column " + columns_[c]);
  }
}

const FeatureSchema& FeatureSchema::standard() {
  static const FeatureSchema schema = build_standard();
  return schema;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

const FeatureEntry& FeatureSchema::entry(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw SchemaMismatch("feature " + std::string(name) + " is not in schema " + version_);
  return entries_[*i];
}

std::optional<std::size_t> FeatureSchema::column_index(std::string_view column) const {
  auto it = by_column_.find(column);
  if (it == by_column_.end()) return std::nullopt;
  return it->second;
}

std::string FeatureSchema::catalog_json() const {
  nlohmann::ordered_json doc;
  doc["schema_version"] = version_;
  doc["raw_feature_count"] = entries_.size();
  doc["expanded_column_count"] = columns_.size();
  auto& list = doc["features"] = nlohmann::ordered_json::array();
  for (const auto& e : entries_) {
    nlohmann::ordered_json f;
    f["name"] = e.name;
    f["kind"] = e.kind == FeatureKind::kBinary ? "binary" : "string";
    f["group"] = group_name(e.group);
    f["detector"] = e.description;
    if (e.kind == FeatureKind::kString) f["vocab"] = e.vocab;
    list.push_back(std::move(f));
  }
  return doc.dump(2) + "\n";
}

int RawFeatures::flag(std::string_view name) const {
  auto it = values.find(name);
  if (it == values.end() || !std::holds_alternative<int>(it->second)) {
    throw SchemaMismatch("no binary value for " + std::string(name));
  }
  return std::get<int>(it->second);
}

const std::string& RawFeatures::text(std::string_view name) const {
  auto it = values.find(name);
  if (it == values.end() || !std::holds_alternative<std::string>(it->second)) {
    throw SchemaMismatch("no string value for " + std::string(name));
  }
  return std::get<std::string>(it->second);
}

void RawFeatures::merge(const RawFeatures& other) {
  for (const auto& [k, v] : other.values) values.insert_or_assign(k, v);
}

FeatureVector encode(const std::vector<RawFeatures>& per_diff, const FeatureSchema& schema) {
  if (per_diff.empty()) throw SchemaMismatch("a patch must contribute at least one diff");
  FeatureVector out;
  out.schema_version = schema.version();
  out.values.assign(schema.expanded_size(), 0);
  for (const RawFeatures& raw : per_diff) {
    if (raw.values.size() != schema.raw_size()) {
      throw SchemaMismatch("diff has " + std::to_string(raw.values.size()) + " features, schema " +
                           schema.version() + " declares " + std::to_string(schema.raw_size()));
    }
    for (std::size_t i = 0; i < schema.raw_size(); ++i) {
      const FeatureEntry& e = schema.entries()[i];
      auto it = raw.values.find(e.name);
      if (it == raw.values.end()) throw SchemaMismatch("missing feature " + e.name);
      std::size_t col = schema.column_offset(i);
      if (e.kind == FeatureKind::kBinary) {
        const int* v = std::get_if<int>(&it->second);
        if (v == nullptr || (*v != 0 && *v != 1)) throw SchemaMismatch("feature " + e.name + " must be 0 or 1");
        out.values[col] += *v;
      } else {
        const std::string* v = std::get_if<std::string>(&it->second);
        if (v == nullptr) throw SchemaMismatch("feature " + e.name + " must be a string");
        auto pos = std::find(e.vocab.begin(), e.vocab.end(), *v);
        if (pos == e.vocab.end()) pos = std::find(e.vocab.begin(), e.vocab.end(), kOtherValue);
        if (pos == e.vocab.end()) throw SchemaMismatch("value '" + *v + "' outside vocabulary of " + e.name);
        out.values[col + static_cast<std::size_t>(pos - e.vocab.begin())] += 1;
      }
    }
  }
  return out;
}

const std::vector<std::string>& operator_flag_names() {
  static const auto v = names_of(kOperators);
  return v;
}
const std::vector<std::string>& variable_flag_names() {
  static const auto v = names_of(kVariables);
  return v;
}
const std::vector<std::string>& statement_flag_names() {
  static const auto v = names_of(kStatements);
  return v;
}
const std::vector<std::string>& ast_operation_flag_names() {
  static const auto v = names_of(kAstOperations);
  return v;
}
const std::vector<std::string>& repair_pattern_names() {
  static const auto v = names_of(kRepairPatterns);
  return v;
}
const std::vector<std::string>& contextual_string_names() {
  static const auto v = names_of(kContextStrings);
  return v;
}
const std::vector<std::string>& contextual_binary_names() {
  static const auto v = names_of(kContextBinary);
  return v;
}

}  // namespace patchguard
