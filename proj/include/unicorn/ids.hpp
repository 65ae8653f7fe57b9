#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace unicorn {

enum class NodeKind : uint8_t { User = 0, Item = 1, Attribute = 2 };

// Typed node handle: (kind, per-kind dense index).
struct NodeId {
  NodeKind kind;
  int32_t index;

  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline NodeId user_node(int32_t i) { return {NodeKind::User, i}; }
inline NodeId item_node(int32_t i) { return {NodeKind::Item, i}; }
inline NodeId attr_node(int32_t i) { return {NodeKind::Attribute, i}; }

inline std::string to_string(NodeId n) {
  switch (n.kind) {
    case NodeKind::User: return "u:" + std::to_string(n.index);
    case NodeKind::Item: return "v:" + std::to_string(n.index);
    case NodeKind::Attribute: return "p:" + std::to_string(n.index);
  }
  return "?";
}

}  // namespace unicorn

template <>
struct std::hash<unicorn::NodeId> {
  size_t operator()(const unicorn::NodeId& n) const noexcept {
    return (static_cast<size_t>(n.kind) << 32) ^ static_cast<size_t>(static_cast<uint32_t>(n.index));
  }
};
