#include "kamforge/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace kamforge {

double Site::norm() const { return std::sqrt(static_cast<double>(norm2())); }

std::string Site::str() const {
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < dim; ++i) os << c[i] << (i + 1 < dim ? "," : "");
    os << ')';
    return os.str();
}

int64_t pseudo_dist2_int(const Site& a, const Site& b) {
    if (a.dim != b.dim) throw std::invalid_argument("pseudo_dist: dimension mismatch");
    int64_t dm = 0, dp = 0;
    for (int i = 0; i < a.dim; ++i) {
        const int64_t m = int64_t(a.c[i]) - b.c[i];
        const int64_t p = int64_t(a.c[i]) + b.c[i];
        dm += m * m;
        dp += p * p;
    }
    return std::min(dm, dp);
}

double pseudo_dist(const Site& a, const Site& b) {
    return std::sqrt(static_cast<double>(pseudo_dist2_int(a, b)));
}

double bracket_norm(const Site& a) { return std::max(a.norm(), 1.0); }

namespace {

std::vector<Site> enumerate_ball(int d, double radius) {
    const int r = static_cast<int>(std::floor(radius));
    const int64_t r2 = static_cast<int64_t>(std::floor(radius * radius + 1e-9));
    std::vector<Site> out;
    Site s;
    s.dim = d;
    std::array<int, kMaxDim> x{};
    // odometer over [-r,r]^d
    for (int i = 0; i < d; ++i) x[i] = -r;
    while (true) {
        for (int i = 0; i < d; ++i) s.c[i] = x[i];
        if (s.norm2() <= r2) out.push_back(s);
        int i = 0;
        for (; i < d; ++i) {
            if (++x[i] <= r) break;
            x[i] = -r;
        }
        if (i == d) break;
    }
    return out;
}

} // namespace

LatticeModel::LatticeModel(int d_star, double truncation_radius,
                           std::vector<Site> set_a, std::vector<Site> set_f)
    : d_star_(d_star), radius_(truncation_radius) {
    if (d_star < 1 || d_star > kMaxDim)
        throw std::invalid_argument("LatticeModel: d_star out of range");
    if (truncation_radius <= 0) throw std::invalid_argument("LatticeModel: R_lat must be positive");

    auto check_dim = [&](const std::vector<Site>& v, const char* name) {
        for (const auto& s : v)
            if (s.dim != d_star)
                throw std::invalid_argument(std::string("LatticeModel: ") + name +
                                            " site dimension mismatch at " + s.str());
    };
    check_dim(set_a, "A");
    check_dim(set_f, "F");

    std::unordered_map<Site, SiteRole, SiteHash> tagged;
    for (const auto& s : set_a) {
        if (!tagged.emplace(s, SiteRole::Tangential).second)
            throw std::invalid_argument("LatticeModel: duplicate site in A: " + s.str());
    }
    for (const auto& s : set_f) {
        if (tagged.count(s))
            throw std::invalid_argument("LatticeModel: A and F overlap at " + s.str());
        tagged.emplace(s, SiteRole::FiniteBlock);
    }

    // deterministic ordering: A first, then F, then Lambda_inf sorted by (norm2, coords)
    for (const auto& s : set_a) { sites_.push_back(s); roles_.push_back(SiteRole::Tangential); }
    for (const auto& s : set_f) { sites_.push_back(s); roles_.push_back(SiteRole::FiniteBlock); }

    auto ball = enumerate_ball(d_star, truncation_radius);
    std::sort(ball.begin(), ball.end(), [](const Site& a, const Site& b) {
        const int64_t na = a.norm2(), nb = b.norm2();
        if (na != nb) return na < nb;
        return a.c < b.c;
    });
    for (const auto& s : ball) {
        if (tagged.count(s)) continue;
        sites_.push_back(s);
        roles_.push_back(SiteRole::Elliptic);
    }
    if (sites_.size() == set_a.size() + set_f.size())
        throw std::invalid_argument("LatticeModel: empty Lambda_inf (increase R_lat)");

    w_slot_.assign(sites_.size(), -1);
    a_slot_.assign(sites_.size(), -1);
    for (int id = 0; id < static_cast<int>(sites_.size()); ++id) {
        index_.emplace(sites_[id], id);
        switch (roles_[id]) {
            case SiteRole::Tangential:
                a_slot_[id] = static_cast<int>(a_ids_.size());
                a_ids_.push_back(id);
                break;
            case SiteRole::FiniteBlock: f_ids_.push_back(id); break;
            case SiteRole::Elliptic: inf_ids_.push_back(id); break;
        }
    }
    for (int id : f_ids_) { w_slot_[id] = static_cast<int>(w_ids_.size()); w_ids_.push_back(id); }
    for (int id : inf_ids_) { w_slot_[id] = static_cast<int>(w_ids_.size()); w_ids_.push_back(id); }
}

int LatticeModel::id_of(const Site& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? -1 : it->second;
}

DeltaParam DeltaParam::finite(double v) {
    if (!(v >= 1.0)) throw std::invalid_argument("DeltaParam: finite Delta must be >= 1");
    DeltaParam d;
    d.v_ = v;
    return d;
}

std::string DeltaParam::str() const {
    if (inf_) return "inf";
    std::ostringstream os;
    os << v_;
    return os.str();
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) { parent[x] = parent[parent[x]]; x = parent[x]; }
        return x;
    }
    void unite(int x, int y) {
        x = find(x); y = find(y);
        if (x != y) parent[std::max(x, y)] = std::min(x, y);
    }
};

} // namespace

BlockDecomposition decompose(const LatticeModel& model, DeltaParam delta) {
    BlockDecomposition d;
    d.model_ = &model;
    d.delta_ = delta;
    d.block_of_.assign(model.n_sites(), -1);

    if (!model.f_ids().empty()) {
        d.f_block_ = 0;
        d.blocks_.push_back(model.f_ids());
        d.sphere_.push_back(-1);
        for (int id : model.f_ids()) d.block_of_[id] = 0;
    }

    // group Lambda_inf by exact integer norm2; spheres are the only candidate classes
    std::map<int64_t, std::vector<int>> spheres;
    for (int id : model.inf_ids()) spheres[model.site(id).norm2()].push_back(id);

    for (auto& [n2, ids] : spheres) {
        if (delta.is_infinite()) {
            const int b = static_cast<int>(d.blocks_.size());
            for (int id : ids) d.block_of_[id] = b;
            d.blocks_.push_back(ids);
            d.sphere_.push_back(n2);
            continue;
        }
        const double dd = delta.value() * delta.value();
        UnionFind uf(static_cast<int>(ids.size()));
        for (size_t i = 0; i < ids.size(); ++i)
            for (size_t j = i + 1; j < ids.size(); ++j) {
                const auto pd2 = pseudo_dist2_int(model.site(ids[i]), model.site(ids[j]));
                if (static_cast<double>(pd2) <= dd) uf.unite(static_cast<int>(i), static_cast<int>(j));
            }
        std::map<int, std::vector<int>> classes;
        for (size_t i = 0; i < ids.size(); ++i)
            classes[uf.find(static_cast<int>(i))].push_back(ids[i]);
        for (auto& [root, members] : classes) {
            const int b = static_cast<int>(d.blocks_.size());
            for (int id : members) d.block_of_[id] = b;
            d.blocks_.push_back(members);
            d.sphere_.push_back(n2);
        }
    }
    return d;
}

double BlockDecomposition::diameter_of(int b) const {
    const auto& ids = blocks_[b];
    int64_t worst = 0;
    for (size_t i = 0; i < ids.size(); ++i)
        for (size_t j = i + 1; j < ids.size(); ++j)
            worst = std::max(worst, pseudo_dist2_int(model_->site(ids[i]), model_->site(ids[j])));
    return std::sqrt(static_cast<double>(worst));
}

double BlockDecomposition::diameter() const {
    double worst = 0.0;
    for (int b = 0; b < n_blocks(); ++b) worst = std::max(worst, diameter_of(b));
    return worst;
}

double BlockDecomposition::block_dist(int b1, int b2) const {
    int64_t best = std::numeric_limits<int64_t>::max();
    for (int i : blocks_[b1])
        for (int j : blocks_[b2])
            best = std::min(best, pseudo_dist2_int(model_->site(i), model_->site(j)));
    return std::sqrt(static_cast<double>(best));
}

} // namespace kamforge
