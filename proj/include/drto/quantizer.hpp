#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace drto {

// Order-preserving quantization of a relaxed location vector. Candidate 1
// rounds every entry at 0.5; candidate k >= 2 thresholds at the (k-1)-th entry
// ranked by distance to 0.5 (ascending, ties by index), so each further
// candidate flips one more near-ambiguous entry. Ranking is never inverted:
// x_hat[n] <= x_hat[m] implies bit n <= bit m in every candidate.
inline std::vector<std::vector<int>> quantize(const std::vector<double>& x_hat, std::size_t k) {
  const std::size_t n = x_hat.size();
  if (n == 0) throw std::invalid_argument("quantize: empty relaxed location");
  if (k < 1 || k > n)
    throw std::invalid_argument("quantize: k = " + std::to_string(k) + " outside [1, " +
                                std::to_string(n) + "]");
  for (double v : x_hat)
    if (!(v > 0.0 && v < 1.0))
      throw std::invalid_argument("quantize: entries must lie in the open interval (0, 1)");

  std::vector<std::vector<int>> candidates;
  candidates.reserve(k);

  std::vector<int> rounded(n);
  for (std::size_t i = 0; i < n; ++i) rounded[i] = x_hat[i] > 0.5 ? 1 : 0;
  candidates.push_back(std::move(rounded));

  if (k > 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(x_hat[a] - 0.5) < std::abs(x_hat[b] - 0.5);
    });

    for (std::size_t c = 2; c <= k; ++c) {
      const double pivot = x_hat[order[c - 2]];
      std::vector<int> cand(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (x_hat[i] > pivot)
          cand[i] = 1;
        else if (x_hat[i] == pivot)
          cand[i] = pivot <= 0.5 ? 1 : 0;
        else
          cand[i] = 0;
      }
      candidates.push_back(std::move(cand));
    }
  }
  return candidates;
}

// Candidate-count schedule plus the sliding window of winning indices that
// drives it. The count starts at N; every `window` frames it is reset to one
// past the largest recently winning index, capped at N, so the candidate set
// shrinks once early winners concentrate at low indices and grows back when
// they do not.
class QuantizerState {
 public:
  QuantizerState(std::size_t n_st, std::size_t window)
      : k_current_(n_st), window_(window) {
    if (n_st == 0) throw std::invalid_argument("QuantizerState: n_st must be positive");
    if (window == 0) throw std::invalid_argument("QuantizerState: window must be positive");
    ring_.reserve(window);
  }

  std::size_t k_current() const { return k_current_; }
  std::size_t window_capacity() const { return window_; }
  std::size_t window_size() const { return ring_.size(); }

  std::size_t window_max() const {
    if (ring_.empty()) throw std::runtime_error("QuantizerState: empty window");
    return *std::max_element(ring_.begin(), ring_.end());
  }

  /// Remember the winning 1-based candidate index of the frame just decided;
  /// the oldest entry falls out once the window is full.
  void record_best(std::size_t k_star) {
    if (k_star < 1 || k_star > k_current_)
      throw std::invalid_argument("record_best: index " + std::to_string(k_star) +
                                  " outside [1, " + std::to_string(k_current_) + "]");
    if (ring_.size() < window_) {
      ring_.push_back(k_star);
    } else {
      ring_[head_] = k_star;
      head_ = (head_ + 1) % window_;
    }
  }

  /// Apply the schedule at the start of frame `frame` (1-based). Frame 1 uses
  /// N candidates; adjustment frames look back over the recorded window (the
  /// first adjustment sees however many entries exist).
  void maybe_adjust_k(std::uint64_t frame, std::size_t n_st) {
    if (frame == 0) throw std::invalid_argument("maybe_adjust_k: frames are 1-based");
    if (frame == 1) {
      k_current_ = n_st;
      return;
    }
    if (frame % window_ != 0 || ring_.empty()) return;
    k_current_ = std::min(window_max() + 1, n_st);
  }

 private:
  std::size_t k_current_;
  std::size_t window_;
  std::size_t head_ = 0;
  std::vector<std::size_t> ring_;
};

}  // namespace drto
