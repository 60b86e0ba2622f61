#include "stream_buffer.hpp"

#include <algorithm>

#include "errors.hpp"

namespace surgnav {

StreamBuffer::StreamBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(ErrorCode::ConfigError, "StreamBuffer: capacity must be positive");
}

void StreamBuffer::push_frame(int64_t index) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!retained_.empty() && index <= retained_.back())
    throw Error(ErrorCode::ConfigError, "StreamBuffer: frame indices must strictly increase");
  if (retained_.size() >= capacity_) evict_for_push_locked();
  retained_.push_back(index);
}

void StreamBuffer::evict_for_push_locked() {
  if (!selection_pending_) {
    retained_.erase(retained_.begin());
    return;
  }
  // evict unpinned history first
  if (retained_.front() < pin_from_) {
    retained_.erase(retained_.begin());
    return;
  }
  // fully pinned: halve the temporal resolution, keeping the anchor (position
  // 0) and the newest frame
  std::vector<int64_t> thinned;
  thinned.reserve(retained_.size() / 2 + 2);
  for (size_t i = 0; i < retained_.size(); ++i)
    if (i % 2 == 0 || i + 1 == retained_.size()) thinned.push_back(retained_[i]);
  if (thinned.size() >= retained_.size()) thinned.erase(thinned.begin() + 1);  // capacity 2 edge
  retained_.swap(thinned);
}

int64_t StreamBuffer::head() const {
  std::lock_guard<std::mutex> lock(mu_);
  return retained_.empty() ? -1 : retained_.back();
}

size_t StreamBuffer::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return retained_.size();
}

bool StreamBuffer::contains(int64_t index) const {
  std::lock_guard<std::mutex> lock(mu_);
  return std::binary_search(retained_.begin(), retained_.end(), index);
}

std::vector<int64_t> StreamBuffer::retained() const {
  std::lock_guard<std::mutex> lock(mu_);
  return retained_;
}

void StreamBuffer::begin_selection(int64_t t0) {
  std::lock_guard<std::mutex> lock(mu_);
  if (selection_pending_)
    throw Error(ErrorCode::SelectionAlreadyPending, "StreamBuffer: a selection is already pending");
  if (!std::binary_search(retained_.begin(), retained_.end(), t0))
    throw Error(ErrorCode::ConfigError, "StreamBuffer: selection anchor is not retained");
  selection_pending_ = true;
  pin_from_ = t0;
}

void StreamBuffer::cancel_selection() {
  std::lock_guard<std::mutex> lock(mu_);
  selection_pending_ = false;
  pin_from_ = -1;
}

bool StreamBuffer::selection_pending() const {
  std::lock_guard<std::mutex> lock(mu_);
  return selection_pending_;
}

std::vector<int64_t> StreamBuffer::sample_span(int64_t after, int64_t up_to, int k) const {
  std::lock_guard<std::mutex> lock(mu_);
  return sample_span_locked(after, up_to, k);
}

// ideal positions after + floor(i L / k); consecutive gaps then differ by at
// most one frame, and the endpoint lands exactly. Each ideal position snaps
// to the nearest retained frame (thinning may have removed the exact one).
std::vector<int64_t> StreamBuffer::sample_span_locked(int64_t after, int64_t up_to, int k) const {
  if (k <= 0) throw Error(ErrorCode::ConfigError, "StreamBuffer: sample count must be positive");
  std::vector<int64_t> out;
  const int64_t L = up_to - after;
  if (L <= 0) return out;
  for (int i = 1; i <= k; ++i) {
    const int64_t ideal = after + (static_cast<int64_t>(i) * L) / k;
    auto it = std::lower_bound(retained_.begin(), retained_.end(), ideal);
    int64_t pick;
    if (it == retained_.end()) {
      pick = retained_.back();
    } else if (it == retained_.begin()) {
      pick = *it;
    } else {
      const int64_t above = *it;
      const int64_t below = *(it - 1);
      pick = (ideal - below <= above - ideal) ? below : above;
    }
    if (pick <= after) continue;  // snapped out of the span
    if (pick > up_to) break;
    if (out.empty() || pick > out.back()) out.push_back(pick);
  }
  if (std::binary_search(retained_.begin(), retained_.end(), up_to) &&
      (out.empty() || out.back() != up_to))
    out.push_back(up_to);
  return out;
}

CatchUpResult StreamBuffer::run_catch_up(MaskPropagator& propagator, const BinaryMask& selection,
                                         int k) {
  int64_t t0;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (!selection_pending_)
      throw Error(ErrorCode::ConfigError, "StreamBuffer: no selection to catch up");
    t0 = pin_from_;
  }

  CatchUpResult result;
  int attempt_k = k;
  bool doubled = false;

restart:
  result.mask = selection;
  result.final_index = t0;
  result.hops.clear();
  result.retries = 0;
  result.doubled_k = doubled;
  result.converged = true;

  int64_t cur = t0;
  for (;;) {
    const int64_t target = head();
    if (target <= cur) break;
    std::vector<int64_t> samples;
    {
      std::lock_guard<std::mutex> lock(mu_);
      samples = sample_span_locked(cur, target, attempt_k);
    }
    try {
      for (int64_t s : samples) {
        result.mask = propagator.propagate(cur, result.mask, s);
        cur = s;
        result.hops.push_back(s);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PropagatorFailure || doubled) throw;
      doubled = true;
      attempt_k = 2 * k;
      goto restart;
    }
    result.final_index = cur;
    if (head() <= cur) break;
    if (++result.retries > 3) {
      result.converged = false;
      break;
    }
  }

  {
    std::lock_guard<std::mutex> lock(mu_);
    selection_pending_ = false;
    pin_from_ = -1;
  }
  return result;
}

}  // namespace surgnav
