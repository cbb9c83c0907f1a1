#include "mctsops/search_tree.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include <json.hpp>

#include "mctsops/errors.hpp"

namespace mctsops {

void SearchConfig::validate() const {
    if (!(exploration_c >= 0.0) || !std::isfinite(exploration_c)) {
        throw ConfigError("search.exploration_c must be a finite non-negative number");
    }
    if (simulations < 1) {
        throw ConfigError("search.simulations must be >= 1");
    }
    if (max_children < 1) {
        throw ConfigError("search.max_children must be >= 1");
    }
    if (max_depth < 1) {
        throw ConfigError("search.max_depth must be >= 1");
    }
}

double uct_value(double q, std::uint64_t visits, std::uint64_t parent_visits, double c) {
    if (parent_visits == 0) {
        throw ContractViolation("uct_value: parent has no visits");
    }
    if (visits == 0) {
        return kUnvisitedUct;
    }
    const double n = static_cast<double>(visits);
    return q / n + c * std::sqrt(std::log(static_cast<double>(parent_visits)) / n);
}

SearchTree::SearchTree() {
    TreeNode root;
    root.id = NodeId{0};
    nodes_.push_back(std::move(root));
}

const TreeNode& SearchTree::node(NodeId id) const {
    if (id.value >= nodes_.size()) {
        throw ContractViolation("unknown node id " + std::to_string(id.value));
    }
    return nodes_[id.value];
}

TreeNode& SearchTree::mutable_node(NodeId id) {
    if (id.value >= nodes_.size()) {
        throw ContractViolation("unknown node id " + std::to_string(id.value));
    }
    return nodes_[id.value];
}

NodeId SearchTree::select_child(NodeId parent, double exploration_c) const {
    const TreeNode& p = node(parent);
    if (p.children.empty()) {
        throw NoChildren("select_child: node " + std::to_string(parent.value) + " has no children");
    }
    // Selection only happens below a node that has already been backpropagated
    // through, so N(p) >= 1; uct_value rejects anything else.
    const std::uint64_t parent_visits = p.visits;
    NodeId best = p.children.front();
    double best_value = -std::numeric_limits<double>::infinity();
    for (NodeId child_id : p.children) {
        const TreeNode& child = nodes_[child_id.value];
        const double value = uct_value(child.q, child.visits, parent_visits, exploration_c);
        if (value > best_value) {
            best_value = value;
            best = child_id;
        }
    }
    return best;
}

std::optional<NodeId> SearchTree::child_with_score(NodeId parent, int score) const {
    for (NodeId child_id : node(parent).children) {
        if (nodes_[child_id.value].prompt_score == score) {
            return child_id;
        }
    }
    return std::nullopt;
}

bool SearchTree::saturated(NodeId parent, const SearchConfig& config) const {
    return node(parent).children.size() >= static_cast<std::size_t>(config.max_children);
}

ExpandResult SearchTree::expand_or_reuse(NodeId parent, std::string prompt_text, int prompt_score,
                                         const SearchConfig& config) {
    if (prompt_score < 0 || prompt_score > 10) {
        throw ContractViolation("prompt score out of 0..10: " + std::to_string(prompt_score));
    }
    const int parent_depth = node(parent).depth;
    if (parent_depth >= config.max_depth) {
        throw DepthExceeded("expand_or_reuse: parent depth " + std::to_string(parent_depth) +
                            " at max_depth " + std::to_string(config.max_depth));
    }
    if (auto same = child_with_score(parent, prompt_score)) {
        return {*same, true};
    }
    if (!saturated(parent, config)) {
        TreeNode child;
        child.id = NodeId{static_cast<std::uint32_t>(nodes_.size())};
        child.prompt_text = std::move(prompt_text);
        child.prompt_score = prompt_score;
        child.parent = parent;
        child.depth = parent_depth + 1;
        const NodeId id = child.id;
        nodes_.push_back(std::move(child));
        nodes_[parent.value].children.push_back(id);
        return {id, false};
    }
    const auto& children = node(parent).children;
    NodeId nearest = children.front();
    int nearest_gap = std::numeric_limits<int>::max();
    int nearest_score = std::numeric_limits<int>::max();
    for (NodeId child_id : children) {
        const int s = *nodes_[child_id.value].prompt_score;
        const int gap = std::abs(s - prompt_score);
        if (gap < nearest_gap || (gap == nearest_gap && s < nearest_score)) {
            nearest = child_id;
            nearest_gap = gap;
            nearest_score = s;
        }
    }
    return {nearest, true};
}

void SearchTree::backpropagate(NodeId leaf, double reward) {
    std::optional<NodeId> cursor = leaf;
    while (cursor) {
        TreeNode& n = mutable_node(*cursor);
        n.visits += 1;
        n.q += reward;
        cursor = n.parent;
    }
}

std::vector<NodeId> SearchTree::best_path() const {
    if (nodes_.front().visits == 0) {
        throw EmptyTree("best_path: root has not been visited");
    }
    std::vector<NodeId> path{root()};
    for (;;) {
        const TreeNode& current = nodes_[path.back().value];
        std::optional<NodeId> best;
        double best_mean = -std::numeric_limits<double>::infinity();
        for (NodeId child_id : current.children) {
            const TreeNode& child = nodes_[child_id.value];
            if (child.visits == 0) {
                continue;
            }
            if (child.mean_reward() > best_mean) {
                best_mean = child.mean_reward();
                best = child_id;
            }
        }
        if (!best) {
            return path;
        }
        path.push_back(*best);
    }
}

nlohmann::json SearchTree::to_json() const {
    nlohmann::json out;
    out["root"] = 0;
    auto& list = out["nodes"] = nlohmann::json::array();
    for (const TreeNode& n : nodes_) {
        nlohmann::json j;
        j["id"] = n.id.value;
        j["parent"] = n.parent ? nlohmann::json(n.parent->value) : nlohmann::json(nullptr);
        j["prompt"] = n.prompt_text;
        j["score"] = n.prompt_score ? nlohmann::json(*n.prompt_score) : nlohmann::json(nullptr);
        j["q"] = n.q;
        j["visits"] = n.visits;
        j["depth"] = n.depth;
        auto& kids = j["children"] = nlohmann::json::array();
        for (NodeId c : n.children) {
            kids.push_back(c.value);
        }
        list.push_back(std::move(j));
    }
    return out;
}

}  // namespace mctsops
