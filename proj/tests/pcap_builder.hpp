#pragma once

// Byte-level pcap crafting for ingestion tests. Only what the reader consumes is
// modeled: global header, per-record headers, Ethernet(+802.1Q)/IPv4/TCP frames.

#include <cstdint>
#include <string>

namespace pcapgen {

enum class Order { kLe, kBe };

class Writer {
 public:
  explicit Writer(Order order = Order::kLe, bool nanos = false, uint32_t linktype = 1)
      : order_(order) {
    u32(nanos ? 0xa1b23c4du : 0xa1b2c3d4u);
    u16(2);
    u16(4);
    u32(0);
    u32(0);
    u32(65535);
    u32(linktype);
  }

  void record(uint32_t ts_sec, uint32_t ts_frac, const std::string& frame) {
    u32(ts_sec);
    u32(ts_frac);
    u32(static_cast<uint32_t>(frame.size()));
    u32(static_cast<uint32_t>(frame.size()));
    bytes_ += frame;
  }

  // Record header promising more bytes than follow (mid-file truncation).
  void truncated_record(uint32_t claimed_len, const std::string& partial_frame) {
    u32(0);
    u32(0);
    u32(claimed_len);
    u32(claimed_len);
    bytes_ += partial_frame;
  }

  void raw(const std::string& b) { bytes_ += b; }
  const std::string& bytes() const { return bytes_; }

 private:
  void u16(uint16_t v) {
    if (order_ == Order::kLe) {
      byte(v & 0xff);
      byte(v >> 8);
    } else {
      byte(v >> 8);
      byte(v & 0xff);
    }
  }
  void u32(uint32_t v) {
    if (order_ == Order::kLe) {
      byte(v & 0xff);
      byte((v >> 8) & 0xff);
      byte((v >> 16) & 0xff);
      byte(v >> 24);
    } else {
      byte(v >> 24);
      byte((v >> 16) & 0xff);
      byte((v >> 8) & 0xff);
      byte(v & 0xff);
    }
  }
  void byte(uint32_t v) { bytes_.push_back(static_cast<char>(v & 0xff)); }

  Order order_;
  std::string bytes_;
};

// Ethernet (optionally 802.1Q-tagged) / IPv4 / TCP frame carrying `payload`.
inline std::string tcp_frame(uint32_t src_ip, uint16_t sport, uint32_t dst_ip, uint16_t dport,
                             uint32_t seq, const std::string& payload, bool vlan = false) {
  std::string f;
  auto b = [&](uint32_t v) { f.push_back(static_cast<char>(v & 0xff)); };
  auto n16 = [&](uint16_t v) {
    b(v >> 8);
    b(v);
  };
  auto n32 = [&](uint32_t v) {
    b(v >> 24);
    b(v >> 16);
    b(v >> 8);
    b(v);
  };
  for (int i = 0; i < 12; ++i) b(0xaa);  // mac addresses, unread
  if (vlan) {
    n16(0x8100);
    n16(0x0064);  // tci: vlan 100
  }
  n16(0x0800);
  b(0x45);  // version 4, ihl 5
  b(0);
  n16(static_cast<uint16_t>(20 + 20 + payload.size()));
  n16(0);
  n16(0);
  b(64);
  b(6);  // tcp
  n16(0);
  n32(src_ip);
  n32(dst_ip);
  n16(sport);
  n16(dport);
  n32(seq);
  n32(0);
  b(0x50);  // data offset 5 words
  b(0x18);  // psh|ack
  n16(0xffff);
  n16(0);
  n16(0);
  f += payload;
  return f;
}

inline constexpr uint32_t kClientIp = 0x0a000001;  // 10.0.0.1
inline constexpr uint32_t kServerIp = 0x0a000002;  // 10.0.0.2

// Client-to-server segment on the canonical test flow.
inline std::string client_seg(uint32_t seq, const std::string& payload, uint16_t sport = 40000,
                              bool vlan = false) {
  return tcp_frame(kClientIp, sport, kServerIp, 80, seq, payload, vlan);
}

// Server-to-client segment (the response direction).
inline std::string server_seg(uint32_t seq, const std::string& payload) {
  return tcp_frame(kServerIp, 80, kClientIp, 40000, seq, payload);
}

}  // namespace pcapgen
