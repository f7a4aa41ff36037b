#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <unordered_map>
#include <vector>

namespace kamforge {

using ModeVec = std::array<int16_t, 4>; // Fourier mode k in Z^{#A}, #A <= 4

inline int mode_l1(const ModeVec& k, int n) {
    int s = 0;
    for (int i = 0; i < n; ++i) s += std::abs(int(k[i]));
    return s;
}

struct ModeVecHash {
    size_t operator()(const ModeVec& k) const {
        uint64_t h = 0x9e3779b97f4a7c15ull;
        for (int i = 0; i < 4; ++i) { h ^= uint16_t(k[i]); h *= 0x100000001b3ull; }
        return size_t(h);
    }
};

// Enumeration of the modes {k : |k|_1 <= N} in a fixed deterministic order,
// with index lookup and the conjugate (-k) pairing.
class ModeSet {
public:
    ModeSet() = default;
    ModeSet(int n_angles, int cutoff);

    int n_angles() const { return n_; }
    int cutoff() const { return cutoff_; }
    int size() const { return static_cast<int>(modes_.size()); }
    const ModeVec& mode(int i) const { return modes_[i]; }
    int index_of(const ModeVec& k) const; // -1 if outside
    int conj_of(int i) const { return conj_index_[i]; }
    int zero_index() const { return zero_; }

private:
    int n_ = 0, cutoff_ = 0, zero_ = 0;
    std::vector<ModeVec> modes_;
    std::vector<int> conj_index_;
    std::unordered_map<ModeVec, int, ModeVecHash> lookup_;
};

} // namespace kamforge
