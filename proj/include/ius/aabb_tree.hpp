#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace ius {

// Static bounding-volume hierarchy over axis-aligned boxes. Built by median
// split along the longest axis; leaves hold a handful of primitive indices.
// Traversal order is fixed, so query results do not depend on timing.
template <int Dim>
class AabbTree {
public:
    using Box = Eigen::AlignedBox<double, Dim>;
    using Point = Eigen::Matrix<double, Dim, 1>;

    AabbTree() = default;

    explicit AabbTree(std::vector<Box> boxes) : boxes_(std::move(boxes))
    {
        order_.resize(boxes_.size());
        std::iota(order_.begin(), order_.end(), 0);
        if (!boxes_.empty()) {
            nodes_.reserve(2 * boxes_.size() / kLeafSize + 2);
            build(0, static_cast<int>(order_.size()));
        }
    }

    bool empty() const { return nodes_.empty(); }
    const Box& primitive_box(int prim) const { return boxes_[static_cast<std::size_t>(prim)]; }

    // Calls visit(prim) for every primitive in nodes whose box passes `enter`.
    template <class Enter, class Visit>
    void traverse(Enter&& enter, Visit&& visit) const
    {
        if (nodes_.empty()) {
            return;
        }
        std::vector<int> stack{0};
        while (!stack.empty()) {
            const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
            stack.pop_back();
            if (!enter(node.box)) {
                continue;
            }
            if (node.left < 0) {
                for (int i = node.begin; i < node.end; ++i) {
                    visit(order_[static_cast<std::size_t>(i)]);
                }
            } else {
                stack.push_back(node.right);
                stack.push_back(node.left);
            }
        }
    }

    // Branch-and-bound nearest primitive. `sq_dist(prim)` returns the squared
    // distance from the query to the primitive. Ties resolve to the lowest index.
    template <class SqDist>
    std::pair<int, double> nearest(const Point& p, SqDist&& sq_dist) const
    {
        int best = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        if (nodes_.empty()) {
            return {best, best_d2};
        }
        std::vector<std::pair<double, int>> stack{{0.0, 0}};
        while (!stack.empty()) {
            auto [bound, idx] = stack.back();
            stack.pop_back();
            if (bound > best_d2) {
                continue;
            }
            const Node& node = nodes_[static_cast<std::size_t>(idx)];
            if (node.left < 0) {
                for (int i = node.begin; i < node.end; ++i) {
                    const int prim = order_[static_cast<std::size_t>(i)];
                    const double d2 = sq_dist(prim);
                    if (d2 < best_d2 || (d2 == best_d2 && prim < best)) {
                        best_d2 = d2;
                        best = prim;
                    }
                }
                continue;
            }
            const double dl = nodes_[static_cast<std::size_t>(node.left)].box.squaredExteriorDistance(p);
            const double dr = nodes_[static_cast<std::size_t>(node.right)].box.squaredExteriorDistance(p);
            // Push the farther child first so the nearer one is explored first.
            if (dl <= dr) {
                stack.emplace_back(dr, node.right);
                stack.emplace_back(dl, node.left);
            } else {
                stack.emplace_back(dl, node.left);
                stack.emplace_back(dr, node.right);
            }
        }
        return {best, best_d2};
    }

private:
    static constexpr int kLeafSize = 4;

    struct Node {
        Box box;
        int left = -1;
        int right = -1;
        int begin = 0;
        int end = 0;
    };

    int build(int begin, int end)
    {
        const int idx = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        Box box;
        box.setEmpty();
        for (int i = begin; i < end; ++i) {
            box.extend(boxes_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])]);
        }
        nodes_[static_cast<std::size_t>(idx)].box = box;
        nodes_[static_cast<std::size_t>(idx)].begin = begin;
        nodes_[static_cast<std::size_t>(idx)].end = end;
        if (end - begin <= kLeafSize) {
            return idx;
        }
        int axis = 0;
        box.sizes().maxCoeff(&axis);
        const int mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
            const double ca = boxes_[static_cast<std::size_t>(a)].center()(axis);
            const double cb = boxes_[static_cast<std::size_t>(b)].center()(axis);
            return ca < cb || (ca == cb && a < b);
        });
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes_[static_cast<std::size_t>(idx)].left = left;
        nodes_[static_cast<std::size_t>(idx)].right = right;
        return idx;
    }

    std::vector<Box> boxes_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace ius
