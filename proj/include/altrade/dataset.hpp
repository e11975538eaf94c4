#pragma once

#include <string>
#include <vector>

#include "altrade/errors.hpp"
#include "altrade/types.hpp"

namespace altrade {

/// Pool-based active-learning state over a fixed candidate set. `labeled`
/// and `pool` partition the candidate indices.
struct Dataset {
    PointList candidates;
    std::vector<std::size_t> labeled;
    std::vector<double> labels;
    std::vector<std::size_t> pool;

    std::size_t labeled_size() const { return labeled.size(); }
    std::size_t pool_size() const { return pool.size(); }

    PointList labeled_x() const { return gather(labeled); }
    PointList pool_x() const { return gather(pool); }
    Eigen::VectorXd labeled_y() const {
        return Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
    }

    // Moves pool[pool_position] into the labeled set.
    std::size_t label(std::size_t pool_position, double y) {
        if (pool_position >= pool.size()) throw InputError("dataset: pool position out of range");
        const std::size_t idx = pool[pool_position];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pool_position));
        labeled.push_back(idx);
        labels.push_back(y);
        return idx;
    }

    std::size_t label_candidate(std::size_t candidate_index, double y) {
        for (std::size_t p = 0; p < pool.size(); ++p) {
            if (pool[p] == candidate_index) return label(p, y);
        }
        throw InputError("dataset: candidate " + std::to_string(candidate_index) + " is not in the pool");
    }

private:
    PointList gather(const std::vector<std::size_t>& idx) const {
        PointList out(static_cast<Eigen::Index>(idx.size()), candidates.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = candidates.row(static_cast<Eigen::Index>(idx[r]));
        return out;
    }
};

/// All candidates unlabeled.
inline Dataset make_pool_dataset(PointList candidates) {
    Dataset d;
    d.candidates = std::move(candidates);
    d.pool.resize(static_cast<std::size_t>(d.candidates.rows()));
    for (std::size_t i = 0; i < d.pool.size(); ++i) d.pool[i] = i;
    return d;
}

/// Picks `count` distinct pool positions uniformly at random (order of draw).
inline std::vector<std::size_t> draw_pool_positions(std::size_t pool_size, std::size_t count, Rng& rng) {
    if (count > pool_size) throw InputError("cannot draw " + std::to_string(count) + " points from a pool of " + std::to_string(pool_size));
    std::vector<std::size_t> all(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) all[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool_size - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    all.resize(count);
    return all;
}

}  // namespace altrade
