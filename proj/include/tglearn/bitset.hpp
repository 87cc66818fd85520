#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace tglearn {

/// Fixed-width bitset over dense atom indices. Width is set once at
/// construction and must match across all operands of a binary operation.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t width)
        : width_(width), blocks_((width + 63) / 64, 0) {}

    std::size_t width() const { return width_; }

    bool test(std::size_t i) const {
        return (blocks_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(std::size_t i) { blocks_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void reset(std::size_t i) {
        blocks_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
    }

    bool is_subset_of(const Bitset& other) const {
        for (std::size_t k = 0; k < blocks_.size(); ++k)
            if (blocks_[k] & ~other.blocks_[k]) return false;
        return true;
    }

    /// (this & ~del) | add
    Bitset apply(const Bitset& del, const Bitset& add) const {
        Bitset r(*this);
        for (std::size_t k = 0; k < blocks_.size(); ++k)
            r.blocks_[k] = (r.blocks_[k] & ~del.blocks_[k]) | add.blocks_[k];
        return r;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : blocks_) n += static_cast<std::size_t>(__builtin_popcountll(b));
        return n;
    }

    bool operator==(const Bitset& other) const {
        return width_ == other.width_ && blocks_ == other.blocks_;
    }

    std::size_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (auto b : blocks_) {
            h ^= b;
            h *= 0x100000001b3ull;
            h ^= h >> 29;
        }
        return static_cast<std::size_t>(h);
    }

private:
    std::size_t width_ = 0;
    std::vector<std::uint64_t> blocks_;
};

struct BitsetHash {
    std::size_t operator()(const Bitset& b) const { return b.hash(); }
};

}  // namespace tglearn
