#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fcsum/corpus/tokenize.hpp"
#include "fcsum/error.hpp"

namespace fcsum {

// Serialized AST node: {"label": "MethodDeclaration", "value": "...", "children": [...]}.
// `value` is optional and only meaningful on leaves (identifiers, literals).
struct AstNode {
  std::string label;
  std::string value;
  std::vector<AstNode> children;

  std::size_t node_count() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c.node_count();
    return n;
  }
};

namespace detail {

inline AstNode ast_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError("AST node at '" + path + "' is not an object");
  const auto label = j.find("label");
  if (label == j.end() || !label->is_string() || label->get_ref<const std::string&>().empty()) {
    throw ParseError("AST node at '" + path + "' lacks a string 'label'");
  }
  AstNode node;
  node.label = label->get<std::string>();
  if (const auto v = j.find("value"); v != j.end()) {
    if (!v->is_string()) throw ParseError("AST node at '" + path + "' has a non-string 'value'");
    node.value = v->get<std::string>();
  }
  if (const auto ch = j.find("children"); ch != j.end()) {
    if (!ch->is_array()) throw ParseError("AST node at '" + path + "' has non-array 'children'");
    for (std::size_t i = 0; i < ch->size(); ++i) {
      node.children.push_back(ast_from_json((*ch)[i], path + "/children/" + std::to_string(i)));
    }
  }
  return node;
}

}  // namespace detail

inline AstNode parse_ast(const nlohmann::json& j) { return detail::ast_from_json(j, ""); }

// Parses the textual form; syntax errors report the byte offset.
inline AstNode parse_ast(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed AST at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return parse_ast(j);
}

inline nlohmann::json ast_to_json(const AstNode& node) {
  nlohmann::json j = {{"label", node.label}};
  if (!node.value.empty()) j["value"] = node.value;
  if (!node.children.empty()) {
    j["children"] = nlohmann::json::array();
    for (const auto& c : node.children) j["children"].push_back(ast_to_json(c));
  }
  return j;
}

// Token for one node: lowercase type, with a leaf's value appended as type_value.
inline std::string sbt_label(const AstNode& node) {
  std::string label = detail::lower(node.label);
  if (node.children.empty() && !node.value.empty()) label += "_" + detail::lower(node.value);
  return label;
}

// Structure-based traversal: entering X emits "(" label(X); leaving emits ")" label(X).
// Iterative so deep trees cannot exhaust the call stack.
inline std::vector<std::string> sbt_flatten(const AstNode& root) {
  std::vector<std::string> out;
  out.reserve(4 * root.node_count());
  std::vector<std::pair<const AstNode*, std::size_t>> stack;
  out.emplace_back("(");
  out.push_back(sbt_label(root));
  stack.emplace_back(&root, 0);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->children.size()) {
      const AstNode* child = &node->children[next++];
      out.emplace_back("(");
      out.push_back(sbt_label(*child));
      stack.emplace_back(child, 0);
    } else {
      out.emplace_back(")");
      out.push_back(sbt_label(*node));
      stack.pop_back();
    }
  }
  return out;
}

}  // namespace fcsum
