#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

namespace stakenli {

/// Disjoint sets over [0, n) with path halving and union by size.
class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Returns false when x and y were already joined.
    bool unite(std::size_t x, std::size_t y)
    {
        x = find(x);
        y = find(y);
        if (x == y) return false;
        if (size_[x] < size_[y]) std::swap(x, y);
        parent_[y] = x;
        size_[x] += size_[y];
        return true;
    }

    std::size_t size() const { return parent_.size(); }

    /// Groups of element indices; groups ordered by smallest member, members ascending.
    std::vector<std::vector<std::size_t>> groups()
    {
        std::vector<std::vector<std::size_t>> out;
        std::vector<std::size_t> slot(parent_.size(), static_cast<std::size_t>(-1));
        for (std::size_t i = 0; i < parent_.size(); ++i) {
            const std::size_t root = find(i);
            if (slot[root] == static_cast<std::size_t>(-1)) {
                slot[root] = out.size();
                out.emplace_back();
            }
            out[slot[root]].push_back(i);
        }
        return out;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

}  // namespace stakenli
