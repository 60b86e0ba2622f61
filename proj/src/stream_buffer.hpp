#pragma once

#include <cstdint>
#include <mutex>
#include <vector>

#include "mask.hpp"

namespace surgnav {

// One hop of selection-mask transport between two buffered frames.
// Implementations throw Error(PropagatorFailure) when a hop cannot be made.
class MaskPropagator {
 public:
  virtual ~MaskPropagator() = default;
  virtual BinaryMask propagate(int64_t from_index, const BinaryMask& from_mask,
                               int64_t to_index) = 0;
};

struct CatchUpResult {
  BinaryMask mask;           // selection carried to final_index
  int64_t final_index = -1;  // head the catch-up ended on
  std::vector<int64_t> hops;  // frame indices visited, in order
  int retries = 0;            // extra passes spent chasing a moving head
  bool doubled_k = false;     // a propagator failure forced a denser retry
  bool converged = true;      // false when the head still moved after the retry budget
};

// Ring of retained frame indices for a live stream with one producer and one
// consumer. A pending selection pins frames from its anchor onward; when the
// ring overflows while everything is pinned, every other pinned frame is
// dropped instead (the anchor and the newest frame survive thinning).
class StreamBuffer {
 public:
  explicit StreamBuffer(size_t capacity);

  // producer side; indices must be strictly increasing
  void push_frame(int64_t index);

  int64_t head() const;
  size_t size() const;
  bool contains(int64_t index) const;
  std::vector<int64_t> retained() const;

  // consumer side
  void begin_selection(int64_t t0);
  void cancel_selection();
  bool selection_pending() const;

  // k retained samples spanning (after, up_to] with near-uniform index gaps,
  // the endpoint always included
  std::vector<int64_t> sample_span(int64_t after, int64_t up_to, int k) const;

  // carry the selection mask from the anchor to the live head: sample k
  // frames, hop through them, then chase any head movement (up to 3 extra
  // passes). One propagator failure restarts the whole run with 2k samples;
  // a second one propagates. Ends the pending selection on success.
  CatchUpResult run_catch_up(MaskPropagator& propagator, const BinaryMask& selection, int k);

 private:
  void evict_for_push_locked();
  std::vector<int64_t> sample_span_locked(int64_t after, int64_t up_to, int k) const;

  mutable std::mutex mu_;
  size_t capacity_;
  std::vector<int64_t> retained_;  // sorted ascending
  bool selection_pending_ = false;
  int64_t pin_from_ = -1;
};

}  // namespace surgnav
