#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "laclab/parallel.hpp"
#include "laclab/philox.hpp"

using namespace laclab;

// Reference blocks produced by numpy.random.Philox (counter pre-incremented
// by one before the first block).
TEST_CASE("Philox4x64-10 known answers") {
  using C = Philox4x64::Counter;
  CHECK(Philox4x64::block({0, 0, 0, 0}, {0, 0}) ==
        C{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL, 0x7e68b68aec7ba23bULL});
  CHECK(Philox4x64::block({1, 0, 0, 0}, {0, 0}) ==
        C{0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL, 0x907d7a052fd5b4dcULL});
  CHECK(Philox4x64::block({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
                          {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL}) ==
        C{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL, 0x57bd43b5e52b7fe6ULL});
}

TEST_CASE("streams are reproducible and disjoint") {
  CounterRng a(7, 3, Stream::x_bits), b(7, 3, Stream::x_bits);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  std::set<std::uint64_t> first_words;
  for (std::uint64_t replica = 0; replica < 50; ++replica)
    for (auto s : {Stream::x_bits, Stream::auxiliary, Stream::iid, Stream::iid_second})
      first_words.insert(CounterRng(7, replica, s).next_u64());
  CHECK(first_words.size() == 200);
  CHECK(CounterRng(7, 0, Stream::iid).next_u64() != CounterRng(8, 0, Stream::iid).next_u64());
}

TEST_CASE("uniform draws") {
  CounterRng rng(1, 0, Stream::iid);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_FALSE((u < 0.0 || u >= 1.0));
    const double v = rng.uniform_open();
    CHECK_FALSE((v <= 0.0 || v >= 1.0));
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("for_each_replica visits every replica once for any thread count") {
  for (unsigned threads : {1u, 2u, 3u, 8u}) {
    std::vector<int> hits(1001, 0);
    for_each_replica(hits.size(), threads, [&](std::size_t r) { hits[r] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
  CHECK_THROWS(for_each_replica(10, 4, [](std::size_t r) {
    if (r == 7) throw std::runtime_error("boom");
  }));
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}
