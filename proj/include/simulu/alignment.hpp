#pragma once

// Attention-matrix decisions shared by the streaming policies: token/frame
// argmax alignment, the AlignAtt stable prefix, the speech history cut and the
// unit boundary between re-synthesized history and new speech.

#include "simulu/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace simulu {

// Rows are generated symbols (text tokens or units), columns are source
// positions (encoder frames or text tokens). Each row is a distribution.
template <typename Scalar>
using AttentionMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Attention = AttentionMatrix<double>;

// Per-row argmax column.
using AlignmentVector = std::vector<std::int64_t>;

inline constexpr double kRowSumTolerance = 1e-6;

// Throws ContractViolation if any entry is negative or non-finite, a non-empty
// matrix has no columns, or a row does not sum to 1 within `tol`.
template <typename Derived>
void validate_attention(const Eigen::MatrixBase<Derived>& m, double tol = kRowSumTolerance) {
    if (m.rows() > 0 && m.cols() == 0) {
        throw ContractViolation("attention: rows without any source position");
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = static_cast<double>(m(r, c));
            if (!std::isfinite(v) || v < 0.0) {
                throw ContractViolation("attention: entry (" + std::to_string(r) + "," + std::to_string(c) +
                                        ") is negative or non-finite");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) {
            throw ContractViolation("attention: row " + std::to_string(r) + " sums to " + std::to_string(sum));
        }
    }
}

// Smallest column attaining each row's maximum.
template <typename Derived>
AlignmentVector row_argmax(const Eigen::MatrixBase<Derived>& m) {
    AlignmentVector out(static_cast<std::size_t>(m.rows()), 0);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < m.cols(); ++c) {
            if (m(r, c) > m(r, best)) {
                best = c;
            }
        }
        out[static_cast<std::size_t>(r)] = best;
    }
    return out;
}

// AlignAtt: number of leading tokens committable when the last `cutoff`
// frames of a `total_frames` buffer are unstable. Emission stops at the first
// token aligned into the unstable tail.
inline std::size_t stable_prefix_len(std::span<const std::int64_t> align, std::int64_t total_frames,
                                     std::int64_t cutoff) {
    const std::int64_t stable_end = total_frames - cutoff;
    const auto first_unstable =
        std::find_if(align.begin(), align.end(), [stable_end](std::int64_t a) { return a >= stable_end; });
    return static_cast<std::size_t>(first_unstable - align.begin());
}

// Absolute frame at which to cut the speech history when the first
// `discard_count` committed tokens leave the text history: just past the last
// frame aligned to a discarded token, but never beyond a frame aligned to a
// retained token.
inline std::int64_t history_cut_frame(std::span<const std::int64_t> align, std::size_t discard_count) {
    if (discard_count == 0 || align.empty()) {
        return 0;
    }
    discard_count = std::min(discard_count, align.size());
    const auto split = align.begin() + static_cast<std::ptrdiff_t>(discard_count);
    std::int64_t cut = *std::max_element(align.begin(), split) + 1;
    if (split != align.end()) {
        cut = std::min(cut, *std::min_element(split, align.end()));
    }
    return cut;
}

// Units to drop from the front of a synthesis whose tokens [0, first_new_token)
// were already spoken: one past the last unit aligned to a history token.
inline std::size_t unit_history_boundary(std::span<const std::int64_t> unit_align, std::int64_t first_new_token) {
    for (std::size_t u = unit_align.size(); u-- > 0;) {
        if (unit_align[u] < first_new_token) {
            return u + 1;
        }
    }
    return 0;
}

} // namespace simulu
