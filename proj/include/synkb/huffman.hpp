#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace synkb {

// Huffman code over word counts, used as the hierarchical-softmax output
// layer. Leaves are vocabulary ids; the |V|-1 internal nodes are numbered in
// creation order and carry one parameter vector each.
//
// Determinism: merges always take the two pending nodes with the smallest
// (count, node id) key, and the first-taken node becomes the left child.
// Descending left appends bit 0 to the code; a training update at the node
// uses target 1 - bit, so the left branch is the "positive" direction.
struct HuffmanTree {
  struct WordCode {
    std::vector<std::uint8_t> bits;    // branch decisions, root first
    std::vector<std::uint32_t> nodes;  // internal node of each decision
  };

  std::vector<WordCode> words;  // indexed by vocabulary id
  std::size_t internal_nodes = 0;

  std::uint64_t weighted_code_length(std::span<const std::uint64_t> counts) const;
};

// Requires at least two words.
HuffmanTree build_huffman(std::span<const std::uint64_t> counts);

}  // namespace synkb
