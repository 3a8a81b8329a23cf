#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "patchguard/ast.hpp"

namespace patchguard {

enum class EditOp : std::uint8_t { kUpdate, kAdd, kDelete, kMove };

std::string_view op_name(EditOp op);  // "UPD", "ADD", "DEL", "MOV"

// One edit. Nodes are identified by their id in the buggy (src) or patched
// (dst) tree; ADD and MOV name the destination parent by its patched id,
// kNoNode meaning the tree root slot.
struct EditAction {
  EditOp op = EditOp::kUpdate;
  NodeId src = kNoNode;
  NodeId dst = kNoNode;
  NodeId dst_parent = kNoNode;
  std::size_t position = 0;
  NodeKind kind = NodeKind::kOther;  // inserted kind (ADD)
  std::string label;                 // inserted label (ADD) or new label (UPD)
};

using NodeMapping = std::vector<std::pair<NodeId, NodeId>>;  // (buggy, patched)

struct EditScript {
  std::string grammar_id;
  std::vector<EditAction> actions;
  // Matched pairs whose label is unchanged; sorted by buggy id.
  NodeMapping mapping;
};

// GumTree-style node matching: greedy isomorphic-subtree anchors, bottom-up
// container matching with child recovery, then isomorphic DEL+ADD pairs
// collapsed into moves. Matched pairs always share a kind.
NodeMapping match(const NormalizedAst& buggy, const NormalizedAst& patched);

// Edit script from a mapping (Chawathe et al. generation order).
EditScript generate_script(const NormalizedAst& buggy, const NormalizedAst& patched, const NodeMapping& mapping);

// Throws GrammarMismatch when the trees come from different grammars.
EditScript diff(const NormalizedAst& buggy, const NormalizedAst& patched);

// Replays a script on buggy. The result carries no source spans.
// Throws InvalidScript when an action references a missing node or slot.
NormalizedAst apply(const NormalizedAst& buggy, const EditScript& script);

struct ChangedStatements {
  std::vector<NodeId> src;  // in buggy, source order
  std::vector<NodeId> dst;  // in patched, source order
};

// Outermost statements (non-block, nearest enclosing per action node) touched
// by the script on each side.
ChangedStatements changed_statements(const EditScript& script, const NormalizedAst& buggy,
                                     const NormalizedAst& patched);

// `/i/j/k` child-index path from the root ("/" for the root itself).
std::string node_path(const NormalizedAst& ast, NodeId id);

// One line per action: `OP src_path dst_path position` ('-' for absent parts).
std::string to_text(const EditScript& script, const NormalizedAst& buggy, const NormalizedAst& patched);

}  // namespace patchguard
