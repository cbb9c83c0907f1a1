#pragma once

/**
 * Monte Carlo search tree over prompt-score nodes.
 *
 * Each node stands for one prompt choice at one problem segment. Two prompts
 * that receive the same score from the scorer are treated as the same node, so
 * a parent never holds two children with equal scores. Node statistics follow
 * the usual UCT bookkeeping: `q` is the cumulative reward, `visits` the number
 * of backpropagations that passed through the node.
 *
 * Nodes live in a flat arena and are addressed by `NodeId`; ids are stable for
 * the lifetime of the tree.
 */

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mctsops {

struct NodeId {
    std::uint32_t value = 0;

    friend bool operator==(NodeId, NodeId) = default;
    friend auto operator<=>(NodeId, NodeId) = default;
};

inline constexpr double kUnvisitedUct = std::numeric_limits<double>::infinity();

struct SearchConfig {
    double exploration_c = 1.4142;
    int simulations = 20;
    int max_children = 3;
    int max_depth = 8;
    std::uint64_t rng_seed = 0;

    // Throws ConfigError when a field is out of range.
    void validate() const;
};

struct TreeNode {
    NodeId id;
    std::string prompt_text;
    std::optional<int> prompt_score;  // absent only at the root
    double q = 0.0;
    std::uint64_t visits = 0;
    std::optional<NodeId> parent;
    std::vector<NodeId> children;
    int depth = 0;

    double mean_reward() const { return visits == 0 ? 0.0 : q / static_cast<double>(visits); }
};

// Q/N + c*sqrt(ln(N_parent)/N). Unvisited nodes get +inf so they are tried first.
// parent_visits == 0 is a contract violation.
double uct_value(double q, std::uint64_t visits, std::uint64_t parent_visits, double c);

struct ExpandResult {
    NodeId node;
    bool reused = false;
};

class SearchTree {
public:
    SearchTree();

    NodeId root() const { return NodeId{0}; }
    const TreeNode& node(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }
    const std::vector<TreeNode>& nodes() const { return nodes_; }

    // Child of `parent` with the highest UCT value; ties go to the lowest
    // child index. Throws NoChildren on a leaf.
    NodeId select_child(NodeId parent, double exploration_c) const;

    // Child of `parent` whose score equals `score`, if any.
    std::optional<NodeId> child_with_score(NodeId parent, int score) const;

    bool saturated(NodeId parent, const SearchConfig& config) const;

    // Exact-score sibling reuse, else a fresh child while under the branching
    // cap, else the child with the nearest score (ties to the lower score).
    ExpandResult expand_or_reuse(NodeId parent, std::string prompt_text, int prompt_score,
                                 const SearchConfig& config);

    // visits += 1 and q += reward on every node from `leaf` up to the root.
    void backpropagate(NodeId leaf, double reward);

    // Greedy descent by mean reward over visited children.
    std::vector<NodeId> best_path() const;

    nlohmann::json to_json() const;

private:
    TreeNode& mutable_node(NodeId id);

    std::vector<TreeNode> nodes_;
};

}  // namespace mctsops
