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

#include "raftdev/discovery.hpp"

#include <gtest/gtest.h>

#include <thread>

namespace raftdev {
namespace {

using namespace std::chrono_literals;

// Each test uses its own port so suites can run back to back without
// cross-talk from earlier datagrams.
std::uint16_t test_port() {
  static std::atomic<std::uint16_t> next{38700};
  return next.fetch_add(1);
}

DiscoveryConfig device(const std::string& id, std::uint16_t port,
                       const std::string& address,
                       const std::string& type = kRaftDeviceType) {
  DiscoveryConfig c;
  c.port = port;
  c.endpoint_id = id;
  c.device_type = type;
  c.service_address = address;
  return c;
}

TEST(Discovery, HelloPopulatesAndByeRemoves) {
  std::uint16_t port = test_port();
  PeerTracker tracker(device("urn:watcher", port, "127.0.0.1:1"));
  DiscoveryAgent s1(device("urn:s1", port, "127.0.0.1:9001"), [](auto&, auto) {});

  s1.announce_hello();
  ASSERT_TRUE(tracker.await_peers(1, 2000));
  auto table = tracker.snapshot();
  ASSERT_TRUE(table.contains("urn:s1"));
  EXPECT_EQ(table.peers().at("urn:s1").service_address, "127.0.0.1:9001");

  s1.announce_bye();
  for (int i = 0; i < 100 && tracker.snapshot().contains("urn:s1"); ++i)
    std::this_thread::sleep_for(10ms);
  EXPECT_FALSE(tracker.snapshot().contains("urn:s1"));
}

TEST(Discovery, WrongDeviceTypeIsIgnored) {
  std::uint16_t port = test_port();
  PeerTracker tracker(device("urn:watcher", port, "127.0.0.1:1"));
  DiscoveryAgent other(device("urn:printer", port, "127.0.0.1:9009", "Printer"),
                       [](auto&, auto) {});
  other.announce_hello();
  EXPECT_FALSE(tracker.await_peers(1, 400));
  EXPECT_TRUE(tracker.snapshot().empty());
}

TEST(Discovery, ProbeCollectsAllLiveServers) {
  std::uint16_t port = test_port();
  DiscoveryAgent s1(device("urn:s1", port, "127.0.0.1:9001"), [](auto&, auto) {});
  DiscoveryAgent s2(device("urn:s2", port, "127.0.0.1:9002"), [](auto&, auto) {});
  DiscoveryAgent s3(device("urn:s3", port, "127.0.0.1:9003"), [](auto&, auto) {});

  auto matches = probe("239.255.255.250", port, kRaftDeviceType, 500);
  ASSERT_EQ(matches.size(), 3u);
  std::set<std::string> ids;
  for (const auto& m : matches) ids.insert(m.endpoint_id);
  EXPECT_EQ(ids, (std::set<std::string>{"urn:s1", "urn:s2", "urn:s3"}));
}

TEST(Discovery, ProbeWithNoServersReturnsEmpty) {
  std::uint16_t port = test_port();
  auto matches = probe("239.255.255.250", port, kRaftDeviceType, 200);
  EXPECT_TRUE(matches.empty());
}

TEST(Discovery, ProbeForOtherTypeGetsNoMatches) {
  std::uint16_t port = test_port();
  DiscoveryAgent s1(device("urn:s1", port, "127.0.0.1:9001"), [](auto&, auto) {});
  auto matches = probe("239.255.255.250", port, "Lightbulb", 200);
  EXPECT_TRUE(matches.empty());
}

TEST(PeerTableUnit, EventFoldSemantics) {
  PeerTable table;
  Message hello{"m1", "urn:s3", Hello{"urn:s3", kRaftDeviceType, "127.0.0.1:9003"}};
  handle_discovery_event(table, hello, 100);
  ASSERT_EQ(table.size(), 1u);

  // duplicate hello refreshes lastSeen, no new entry
  handle_discovery_event(table, hello, 200);
  ASSERT_EQ(table.size(), 1u);
  EXPECT_EQ(table.peers().at("urn:s3").last_seen_ms, 200);

  // bye for an unknown peer is a no-op
  Message bye_unknown{"m2", "urn:s9", Bye{"urn:s9"}};
  handle_discovery_event(table, bye_unknown, 300);
  EXPECT_EQ(table.size(), 1u);

  Message bye{"m3", "urn:s3", Bye{"urn:s3"}};
  handle_discovery_event(table, bye, 400);
  EXPECT_TRUE(table.empty());

  // a removed peer does not reappear without a fresh announcement
  handle_discovery_event(table, bye, 500);
  EXPECT_TRUE(table.empty());

  Message match{"m4", "urn:s3",
                ProbeMatch{"urn:s3", kRaftDeviceType, "127.0.0.1:9003"}};
  handle_discovery_event(table, match, 600);
  EXPECT_TRUE(table.contains("urn:s3"));

  Message other{"m5", "urn:tv", Hello{"urn:tv", "Television", "127.0.0.1:1"}};
  handle_discovery_event(table, other, 700);
  EXPECT_FALSE(table.contains("urn:tv"));
}

TEST(PeerTableUnit, ReplayOfEventStreamReproducesTable) {
  std::vector<Message> stream;
  for (int i = 0; i < 30; ++i) {
    std::string id = "urn:s" + std::to_string(i % 7);
    if (i % 5 == 4)
      stream.push_back(Message{"m", id, Bye{id}});
    else
      stream.push_back(Message{
          "m", id, Hello{id, kRaftDeviceType, "127.0.0.1:" + std::to_string(9000 + i)}});
  }
  PeerTable a, b;
  std::int64_t t = 0;
  for (const auto& m : stream) handle_discovery_event(a, m, ++t);
  t = 0;
  for (const auto& m : stream) handle_discovery_event(b, m, ++t);
  EXPECT_EQ(a, b);
}

TEST(Discovery, MalformedDatagramsCountedAndDropped) {
  std::uint16_t port = test_port();
  DiscoveryAgent agent(device("urn:s1", port, "127.0.0.1:9001"), [](auto&, auto) {});
  net::Fd tx = net::mcast_sender();
  ASSERT_TRUE(net::udp_send_to(tx.get(), "239.255.255.250", port, "not json"));
  for (int i = 0; i < 100 && agent.malformed_datagrams() == 0; ++i)
    std::this_thread::sleep_for(10ms);
  EXPECT_EQ(agent.malformed_datagrams(), 1u);
}

}  // namespace
}  // namespace raftdev
