// Copyright 2026 The raftdev Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RAFTDEV_UID_HPP_
#define RAFTDEV_UID_HPP_

#include <atomic>
#include <cstdint>
#include <random>
#include <string>

namespace raftdev {

/// Renders 128 random bits in the canonical 36-character hex-and-dash form
/// (8-4-4-4-12), with version-4/variant bits set.
inline std::string format_uuid(std::uint64_t hi, std::uint64_t lo) {
  hi = (hi & ~0xF000ULL) | 0x4000ULL;                       // version 4
  lo = (lo & ~(0xC0ULL << 56)) | (0x80ULL << 56);           // RFC variant
  static const char* hex = "0123456789abcdef";
  std::string out(36, '-');
  auto put = [&](std::uint64_t v, int nibbles, int pos) {
    for (int i = nibbles - 1; i >= 0; --i) {
      out[pos + i] = hex[v & 0xF];
      v >>= 4;
    }
  };
  put(hi >> 32, 8, 0);
  put((hi >> 16) & 0xFFFF, 4, 9);
  put(hi & 0xFFFF, 4, 14);
  put(lo >> 48, 4, 19);
  put(lo & 0xFFFFFFFFFFFFULL, 12, 24);
  return out;
}

/// Unique-id source for client requests and message ids. Seedable so client
/// sessions can be replayed; not thread-safe, use one per session/thread.
class UidGenerator {
 public:
  explicit UidGenerator(std::uint64_t seed) : rng_(seed) {}

  UidGenerator() : rng_(std::random_device{}()) {}

  std::string next() { return format_uuid(rng_(), rng_()); }

 private:
  std::mt19937_64 rng_;
};

/// Process-wide message-id source for transport envelopes.
inline std::string next_msg_id() {
  static std::atomic<std::uint64_t> counter{0};
  static const std::string prefix = [] {
    std::random_device rd;
    return format_uuid(((std::uint64_t)rd() << 32) | rd(),
                       ((std::uint64_t)rd() << 32) | rd())
        .substr(0, 8);
  }();
  return prefix + "-" + std::to_string(counter.fetch_add(1));
}

}  // namespace raftdev

#endif  // RAFTDEV_UID_HPP_
