#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

namespace kamforge {

constexpr int kMaxDim = 4;

// Integer lattice site in Z^{d*}, d* <= kMaxDim.
struct Site {
    std::array<int32_t, kMaxDim> c{0, 0, 0, 0};
    int dim = 0;

    Site() = default;
    Site(std::initializer_list<int32_t> xs) {
        dim = static_cast<int>(xs.size());
        int i = 0;
        for (auto x : xs) c[i++] = x;
    }
    static Site zero(int d) { Site s; s.dim = d; return s; }

    int64_t norm2() const {
        int64_t n = 0;
        for (int i = 0; i < dim; ++i) n += int64_t(c[i]) * c[i];
        return n;
    }
    double norm() const;
    Site operator+(const Site& o) const {
        Site r = *this;
        for (int i = 0; i < dim; ++i) r.c[i] += o.c[i];
        return r;
    }
    Site operator-(const Site& o) const {
        Site r = *this;
        for (int i = 0; i < dim; ++i) r.c[i] -= o.c[i];
        return r;
    }
    Site operator-() const {
        Site r = *this;
        for (int i = 0; i < dim; ++i) r.c[i] = -r.c[i];
        return r;
    }
    bool operator==(const Site& o) const { return dim == o.dim && c == o.c; }
    std::string str() const;
};

struct SiteHash {
    size_t operator()(const Site& s) const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (int i = 0; i < s.dim; ++i) {
            h ^= static_cast<uint32_t>(s.c[i]);
            h *= 0x100000001b3ull;
        }
        return static_cast<size_t>(h ^ s.dim);
    }
};

// [a-b] = min(|a-b|, |a+b|), the pseudo-metric of the block decomposition.
double pseudo_dist(const Site& a, const Site& b);
int64_t pseudo_dist2_int(const Site& a, const Site& b);

// <a> = max(|a|,1)
double bracket_norm(const Site& a);

enum class SiteRole : uint8_t { Tangential, FiniteBlock, Elliptic }; // A, F, Lambda_inf

// Truncated lattice Lambda = A | F | Lambda_inf, all sites with |a| <= R_lat
// together with any listed A/F sites. Immutable after construction.
class LatticeModel {
public:
    LatticeModel(int d_star, double truncation_radius,
                 std::vector<Site> set_a, std::vector<Site> set_f);

    int d_star() const { return d_star_; }
    double radius() const { return radius_; }
    int n_sites() const { return static_cast<int>(sites_.size()); }
    int n_tangential() const { return static_cast<int>(a_ids_.size()); }

    const Site& site(int id) const { return sites_[id]; }
    SiteRole role(int id) const { return roles_[id]; }
    int id_of(const Site& s) const; // -1 if absent

    const std::vector<int>& a_ids() const { return a_ids_; }
    const std::vector<int>& f_ids() const { return f_ids_; }
    const std::vector<int>& inf_ids() const { return inf_ids_; }
    // sites carrying transverse variables w: F then Lambda_inf, model order
    const std::vector<int>& w_ids() const { return w_ids_; }
    // position of site id in w_ids, -1 for tangential sites
    int w_slot(int id) const { return w_slot_[id]; }
    // position of site id in a_ids, -1 otherwise
    int a_slot(int id) const { return a_slot_[id]; }

private:
    int d_star_;
    double radius_;
    std::vector<Site> sites_;
    std::vector<SiteRole> roles_;
    std::vector<int> a_ids_, f_ids_, inf_ids_, w_ids_, w_slot_, a_slot_;
    std::unordered_map<Site, int, SiteHash> index_;
};

// Block scale: a positive real >= 1 or infinity (exact sphere semantics).
class DeltaParam {
public:
    static DeltaParam finite(double v);
    static DeltaParam infinite() { DeltaParam d; d.inf_ = true; return d; }
    bool is_infinite() const { return inf_; }
    double value() const { return v_; }
    std::string str() const;

private:
    double v_ = 0.0;
    bool inf_ = false;
};

// Partition of F | Lambda_inf into E_Delta equivalence classes. The F sites
// form one dedicated block; Lambda_inf blocks live inside single spheres.
class BlockDecomposition {
public:
    const LatticeModel& model() const { return *model_; }
    DeltaParam delta() const { return delta_; }
    int n_blocks() const { return static_cast<int>(blocks_.size()); }
    const std::vector<int>& block(int b) const { return blocks_[b]; }
    int block_of(int site_id) const { return block_of_[site_id]; }
    int f_block() const { return f_block_; } // -1 when F empty
    // Euclidean norm2 shared by the members of a Lambda_inf block
    int64_t sphere_of(int b) const { return sphere_[b]; }

    // max pseudo-distance within one block
    double diameter_of(int b) const;
    // d_Delta: max over blocks, the F block included
    double diameter() const;
    // min pseudo-distance between two blocks
    double block_dist(int b1, int b2) const;

    friend BlockDecomposition decompose(const LatticeModel&, DeltaParam);

private:
    const LatticeModel* model_ = nullptr;
    DeltaParam delta_;
    std::vector<std::vector<int>> blocks_;
    std::vector<int> block_of_;
    std::vector<int64_t> sphere_;
    int f_block_ = -1;
};

// Equivalence classes of the closure of {|a|=|b| and [a-b] <= Delta},
// computed by union-find within each exact-norm2 sphere.
BlockDecomposition decompose(const LatticeModel& model, DeltaParam delta);

} // namespace kamforge
