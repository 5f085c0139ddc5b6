#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "latdiag/error.hpp"

namespace latdiag {

// k-d tree over points in R^d under the Chebyshev (L-infinity) metric.
// Supports the two queries the KSG estimator needs: distance to the k-th
// nearest neighbor of a stored point (excluding itself), and the number of
// points strictly within a radius. Points are not owned; the source buffer
// must outlive the tree.
class ChebyshevKdTree {
public:
    ChebyshevKdTree(const double* data, std::size_t n, std::size_t dim)
        : data_(data), n_(n), dim_(dim) {
        if (n == 0 || dim == 0) throw NumericError("kdtree: empty point set");
        order_.resize(n);
        for (std::size_t i = 0; i < n; ++i) order_[i] = static_cast<std::uint32_t>(i);
        nodes_.reserve(2 * n / kLeafSize + 2);
        build(0, n);
    }

    std::size_t size() const { return n_; }

    // Chebyshev distance from stored point i to its k-th nearest neighbor,
    // self excluded. Requires k < n.
    double kth_neighbor_distance(std::size_t i, std::size_t k) const {
        if (k == 0 || k + 1 > n_) {
            throw NumericError("kdtree: need k in [1, n-1] for neighbor query");
        }
        std::vector<double> heap; // max-heap of current best k distances
        heap.reserve(k);
        search_knn(0, point(i), i, k, heap);
        return heap.front();
    }

    // Number of stored points j != i with dist(i, j) < radius (strict).
    std::size_t count_within(std::size_t i, double radius) const {
        // Counts include the query point itself (distance 0), subtracted here.
        return count_node(0, point(i), radius) - 1;
    }

private:
    static constexpr std::size_t kLeafSize = 16;

    struct Node {
        std::uint32_t begin = 0, end = 0;       // range in order_
        std::int32_t left = -1, right = -1;      // child node ids, -1 for leaf
        std::uint32_t box_offset = 0;            // into boxes_: dim lows, dim highs
    };

    const double* point(std::size_t i) const { return data_ + i * dim_; }

    double chebyshev(const double* a, const double* b) const {
        double d = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) {
            const double diff = a[c] > b[c] ? a[c] - b[c] : b[c] - a[c];
            if (diff > d) d = diff;
        }
        return d;
    }

    // Builds the subtree over order_[begin, end); returns node id.
    std::int32_t build(std::size_t begin, std::size_t end) {
        const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(Node{});
        Node node;
        node.begin = static_cast<std::uint32_t>(begin);
        node.end = static_cast<std::uint32_t>(end);
        node.box_offset = static_cast<std::uint32_t>(boxes_.size());

        // Tight bounding box.
        std::vector<double> lo(dim_, std::numeric_limits<double>::infinity());
        std::vector<double> hi(dim_, -std::numeric_limits<double>::infinity());
        for (std::size_t t = begin; t < end; ++t) {
            const double* p = point(order_[t]);
            for (std::size_t c = 0; c < dim_; ++c) {
                lo[c] = std::min(lo[c], p[c]);
                hi[c] = std::max(hi[c], p[c]);
            }
        }
        boxes_.insert(boxes_.end(), lo.begin(), lo.end());
        boxes_.insert(boxes_.end(), hi.begin(), hi.end());

        if (end - begin > kLeafSize) {
            // Split on the widest extent; ties resolve to the lowest dim.
            std::size_t split_dim = 0;
            double widest = -1.0;
            for (std::size_t c = 0; c < dim_; ++c) {
                const double w = hi[c] - lo[c];
                if (w > widest) {
                    widest = w;
                    split_dim = c;
                }
            }
            if (widest > 0.0) {
                const std::size_t mid = begin + (end - begin) / 2;
                std::nth_element(
                    order_.begin() + static_cast<std::ptrdiff_t>(begin),
                    order_.begin() + static_cast<std::ptrdiff_t>(mid),
                    order_.begin() + static_cast<std::ptrdiff_t>(end),
                    [&](std::uint32_t a, std::uint32_t b) {
                        const double va = point(a)[split_dim];
                        const double vb = point(b)[split_dim];
                        if (va != vb) return va < vb;
                        return a < b; // deterministic tie-break
                    });
                node.left = build(begin, mid);
                node.right = build(mid, end);
            }
            // All points identical along every axis: keep as an oversized leaf.
        }
        nodes_[static_cast<std::size_t>(id)] = node;
        return id;
    }

    // L-inf distance from q to the node's box; 0 if q is inside.
    double box_min_dist(const Node& node, const double* q) const {
        const double* lo = boxes_.data() + node.box_offset;
        const double* hi = lo + dim_;
        double d = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) {
            double diff = 0.0;
            if (q[c] < lo[c]) diff = lo[c] - q[c];
            else if (q[c] > hi[c]) diff = q[c] - hi[c];
            if (diff > d) d = diff;
        }
        return d;
    }

    // Largest L-inf distance from q to any corner of the node's box.
    double box_max_dist(const Node& node, const double* q) const {
        const double* lo = boxes_.data() + node.box_offset;
        const double* hi = lo + dim_;
        double d = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) {
            const double diff = std::max(std::abs(q[c] - lo[c]), std::abs(q[c] - hi[c]));
            if (diff > d) d = diff;
        }
        return d;
    }

    static void heap_push(std::vector<double>& heap, std::size_t k, double d) {
        if (heap.size() < k) {
            heap.push_back(d);
            std::push_heap(heap.begin(), heap.end());
        } else if (d < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = d;
            std::push_heap(heap.begin(), heap.end());
        }
    }

    void search_knn(std::int32_t node_id, const double* q, std::size_t self,
                    std::size_t k, std::vector<double>& heap) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        if (heap.size() == k && box_min_dist(node, q) >= heap.front()) return;
        if (node.left < 0) {
            for (std::size_t t = node.begin; t < node.end; ++t) {
                const std::uint32_t j = order_[t];
                if (j == self) continue;
                heap_push(heap, k, chebyshev(q, point(j)));
            }
            return;
        }
        const double dl = box_min_dist(nodes_[static_cast<std::size_t>(node.left)], q);
        const double dr = box_min_dist(nodes_[static_cast<std::size_t>(node.right)], q);
        if (dl <= dr) {
            search_knn(node.left, q, self, k, heap);
            search_knn(node.right, q, self, k, heap);
        } else {
            search_knn(node.right, q, self, k, heap);
            search_knn(node.left, q, self, k, heap);
        }
    }

    std::size_t count_node(std::int32_t node_id, const double* q, double radius) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        if (box_min_dist(node, q) >= radius) return 0;
        if (box_max_dist(node, q) < radius) return node.end - node.begin;
        if (node.left < 0) {
            std::size_t count = 0;
            for (std::size_t t = node.begin; t < node.end; ++t) {
                if (chebyshev(q, point(order_[t])) < radius) ++count;
            }
            return count;
        }
        return count_node(node.left, q, radius) + count_node(node.right, q, radius);
    }

    const double* data_;
    std::size_t n_, dim_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::vector<double> boxes_;
};

} // namespace latdiag
