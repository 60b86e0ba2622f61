#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "stream_buffer.hpp"

using namespace surgnav;

namespace {

BinaryMask stamp_mask() {
  BinaryMask m(8, 8);
  m.set(2, 3, true);
  m.set(4, 4, true);
  return m;
}

struct IdentityPropagator : MaskPropagator {
  std::vector<std::pair<int64_t, int64_t>> calls;
  BinaryMask propagate(int64_t from, const BinaryMask& mask, int64_t to) override {
    calls.emplace_back(from, to);
    return mask;
  }
};

// fails on selected call numbers (1-based), identity otherwise
struct FlakyPropagator : MaskPropagator {
  int fail_on = 1;
  int call = 0;
  BinaryMask propagate(int64_t, const BinaryMask& mask, int64_t) override {
    if (++call == fail_on) throw Error(ErrorCode::PropagatorFailure, "flaky hop");
    return mask;
  }
};

struct AlwaysFailPropagator : MaskPropagator {
  BinaryMask propagate(int64_t, const BinaryMask&, int64_t) override {
    throw Error(ErrorCode::PropagatorFailure, "dead transport");
  }
};

// pushes one new frame per hop, so the head outruns every pass
struct RunawayProducerPropagator : MaskPropagator {
  StreamBuffer* buf;
  explicit RunawayProducerPropagator(StreamBuffer* b) : buf(b) {}
  BinaryMask propagate(int64_t, const BinaryMask& mask, int64_t) override {
    buf->push_frame(buf->head() + 1);
    return mask;
  }
};

}  // namespace

TEST_CASE("frames must arrive in increasing order") {
  CHECK_THROWS_AS(StreamBuffer(0), Error);
  StreamBuffer buf(8);
  buf.push_frame(3);
  buf.push_frame(7);
  CHECK_THROWS_AS(buf.push_frame(7), Error);
  CHECK_THROWS_AS(buf.push_frame(1), Error);
  CHECK(buf.head() == 7);
  CHECK(buf.size() == 2);
  CHECK(buf.contains(3));
  CHECK_FALSE(buf.contains(4));
}

TEST_CASE("without a selection the oldest frame is evicted") {
  StreamBuffer buf(4);
  for (int64_t i = 0; i <= 5; ++i) buf.push_frame(i);
  CHECK(buf.retained() == std::vector<int64_t>{2, 3, 4, 5});
}

TEST_CASE("a pending selection pins its suffix and thins when full") {
  StreamBuffer buf(4);
  for (int64_t i = 2; i <= 5; ++i) buf.push_frame(i);
  buf.begin_selection(4);

  buf.push_frame(6);  // 2 precedes the anchor: plain eviction
  CHECK(buf.retained() == std::vector<int64_t>{3, 4, 5, 6});
  buf.push_frame(7);
  CHECK(buf.retained() == std::vector<int64_t>{4, 5, 6, 7});

  // fully pinned now: halve resolution, keep anchor and newest
  buf.push_frame(8);
  CHECK(buf.retained() == std::vector<int64_t>{4, 6, 7, 8});
}

TEST_CASE("thinning at capacity two still makes room") {
  StreamBuffer buf(2);
  buf.push_frame(0);
  buf.push_frame(1);
  buf.begin_selection(0);
  buf.push_frame(2);
  CHECK(buf.retained() == std::vector<int64_t>{0, 2});
}

TEST_CASE("selection bookkeeping") {
  StreamBuffer buf(8);
  buf.push_frame(10);
  CHECK_FALSE(buf.selection_pending());
  CHECK_THROWS_AS(buf.begin_selection(9), Error);  // not retained
  buf.begin_selection(10);
  CHECK(buf.selection_pending());
  CHECK_THROWS_AS(buf.begin_selection(10), Error);
  try {
    buf.begin_selection(10);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SelectionAlreadyPending);
  }
  buf.cancel_selection();
  CHECK_FALSE(buf.selection_pending());
}

TEST_CASE("span sampling lands near-uniformly and keeps the endpoint") {
  StreamBuffer buf(64);
  for (int64_t i = 0; i <= 20; ++i) buf.push_frame(i);
  CHECK(buf.sample_span(0, 20, 4) == std::vector<int64_t>{5, 10, 15, 20});
  CHECK(buf.sample_span(0, 20, 1) == std::vector<int64_t>{20});
  CHECK(buf.sample_span(20, 20, 3).empty());
  CHECK_THROWS_AS(buf.sample_span(0, 20, 0), Error);

  // oversampling collapses to one hop per retained frame
  const auto dense = buf.sample_span(0, 20, 40);
  CHECK(dense.size() == 20);
  CHECK(dense.front() == 1);
  CHECK(dense.back() == 20);

  StreamBuffer evens(64);
  for (int64_t i = 0; i <= 20; i += 2) evens.push_frame(i);
  // ideal positions 5 and 15 snap to the retained neighbor below on ties
  CHECK(evens.sample_span(0, 20, 4) == std::vector<int64_t>{4, 10, 14, 20});
  // a non-retained endpoint is not forced in
  CHECK(evens.sample_span(0, 19, 2) == std::vector<int64_t>{8, 18});
}

TEST_CASE("catch up hops through the sampled frames to the head") {
  StreamBuffer buf(128);
  for (int64_t i = 0; i <= 60; ++i) buf.push_frame(i);
  buf.begin_selection(0);

  IdentityPropagator prop;
  const BinaryMask sel = stamp_mask();
  const CatchUpResult r = buf.run_catch_up(prop, sel, 6);
  CHECK(r.hops == std::vector<int64_t>{10, 20, 30, 40, 50, 60});
  CHECK(r.final_index == 60);
  CHECK(r.retries == 0);
  CHECK_FALSE(r.doubled_k);
  CHECK(r.converged);
  CHECK(r.mask.bits() == sel.bits());
  CHECK_FALSE(buf.selection_pending());
  CHECK_THROWS_AS(buf.run_catch_up(prop, sel, 6), Error);  // nothing pending anymore

  // chained hops cover (from, to] without gaps or overlap
  for (size_t i = 1; i < prop.calls.size(); ++i)
    CHECK(prop.calls[i].first == prop.calls[i - 1].second);
}

TEST_CASE("catch up with the head already at the anchor is a no-op") {
  StreamBuffer buf(16);
  buf.push_frame(5);
  buf.begin_selection(5);
  IdentityPropagator prop;
  const CatchUpResult r = buf.run_catch_up(prop, stamp_mask(), 4);
  CHECK(r.hops.empty());
  CHECK(r.final_index == 5);
  CHECK(r.converged);
  CHECK_FALSE(buf.selection_pending());
}

TEST_CASE("one propagator failure restarts with twice the samples") {
  StreamBuffer buf(128);
  for (int64_t i = 0; i <= 60; ++i) buf.push_frame(i);
  buf.begin_selection(0);

  FlakyPropagator prop;  // fails on the very first hop
  const CatchUpResult r = buf.run_catch_up(prop, stamp_mask(), 6);
  CHECK(r.doubled_k);
  CHECK(r.converged);
  REQUIRE(r.hops.size() == 12);
  CHECK(r.hops.front() == 5);
  CHECK(r.hops.back() == 60);
  CHECK(r.final_index == 60);
}

TEST_CASE("a second failure propagates and leaves the selection pending") {
  StreamBuffer buf(128);
  for (int64_t i = 0; i <= 30; ++i) buf.push_frame(i);
  buf.begin_selection(0);

  AlwaysFailPropagator prop;
  CHECK_THROWS_AS(buf.run_catch_up(prop, stamp_mask(), 4), Error);
  CHECK(buf.selection_pending());  // caller decides whether to retry or cancel
  buf.cancel_selection();
  CHECK_FALSE(buf.selection_pending());
}

TEST_CASE("a head that keeps moving exhausts the retry budget") {
  StreamBuffer buf(512);
  for (int64_t i = 0; i <= 10; ++i) buf.push_frame(i);
  buf.begin_selection(0);

  RunawayProducerPropagator prop(&buf);
  const CatchUpResult r = buf.run_catch_up(prop, stamp_mask(), 2);
  CHECK_FALSE(r.converged);
  CHECK(r.retries == 4);
  CHECK(r.final_index < buf.head());
  CHECK_FALSE(buf.selection_pending());
}

TEST_CASE("concurrent producer and catch up consumer") {
  StreamBuffer buf(4096);
  for (int64_t i = 0; i <= 50; ++i) buf.push_frame(i);
  buf.begin_selection(25);

  std::thread producer([&buf] {
    for (int64_t i = 51; i <= 300; ++i) {
      buf.push_frame(i);
      std::this_thread::sleep_for(std::chrono::microseconds(20));
    }
  });

  struct SlowIdentity : MaskPropagator {
    BinaryMask propagate(int64_t, const BinaryMask& mask, int64_t) override {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      return mask;
    }
  } prop;

  const CatchUpResult r = buf.run_catch_up(prop, stamp_mask(), 4);
  producer.join();

  for (size_t i = 1; i < r.hops.size(); ++i) CHECK(r.hops[i] > r.hops[i - 1]);
  CHECK(r.final_index >= 50);
  CHECK(r.final_index <= 300);
  if (r.converged) CHECK(r.final_index == r.hops.back());
  CHECK_FALSE(buf.selection_pending());
  CHECK(buf.head() == 300);
}
