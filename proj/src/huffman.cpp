#include "synkb/huffman.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace synkb {

std::uint64_t HuffmanTree::weighted_code_length(
    std::span<const std::uint64_t> counts) const {
  std::uint64_t total = 0;
  for (std::size_t w = 0; w < words.size(); ++w) {
    total += counts[w] * words[w].bits.size();
  }
  return total;
}

HuffmanTree build_huffman(std::span<const std::uint64_t> counts) {
  const std::size_t n = counts.size();
  if (n < 2) {
    throw std::invalid_argument("huffman tree requires at least two words");
  }

  // Node ids: [0, n) leaves, [n, 2n-1) internal in creation order.
  struct Pending {
    std::uint64_t count;
    std::uint32_t node;
    bool operator>(const Pending& o) const {
      if (count != o.count) return count > o.count;
      return node > o.node;
    }
  };
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> heap;
  for (std::size_t w = 0; w < n; ++w) {
    heap.push({counts[w], static_cast<std::uint32_t>(w)});
  }

  const std::size_t total_nodes = 2 * n - 1;
  std::vector<std::uint32_t> parent(total_nodes, 0);
  std::vector<std::uint8_t> branch(total_nodes, 0);

  std::uint32_t next_id = static_cast<std::uint32_t>(n);
  while (heap.size() > 1) {
    Pending left = heap.top();
    heap.pop();
    Pending right = heap.top();
    heap.pop();
    parent[left.node] = next_id;
    branch[left.node] = 0;
    parent[right.node] = next_id;
    branch[right.node] = 1;
    heap.push({left.count + right.count, next_id});
    ++next_id;
  }

  const std::uint32_t root = static_cast<std::uint32_t>(total_nodes - 1);
  HuffmanTree tree;
  tree.internal_nodes = n - 1;
  tree.words.resize(n);
  for (std::size_t w = 0; w < n; ++w) {
    HuffmanTree::WordCode& code = tree.words[w];
    // Walk leaf -> root, then reverse so decisions read root first.
    std::uint32_t node = static_cast<std::uint32_t>(w);
    while (node != root) {
      code.bits.push_back(branch[node]);
      code.nodes.push_back(parent[node] - static_cast<std::uint32_t>(n));
      node = parent[node];
    }
    std::reverse(code.bits.begin(), code.bits.end());
    std::reverse(code.nodes.begin(), code.nodes.end());
  }
  return tree;
}

}  // namespace synkb
