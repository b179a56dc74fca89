#include "xsslab/pcap.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <tuple>

#include "xsslab/util.hpp"

namespace xsslab {

namespace {

constexpr uint32_t kMagicLe = 0xa1b2c3d4u;
constexpr uint32_t kMagicBe = 0xd4c3b2a1u;
constexpr uint32_t kMagicLeNs = 0xa1b23c4du;
constexpr uint32_t kMagicBeNs = 0x4d3cb2a1u;
constexpr uint16_t kEthertypeIpv4 = 0x0800;
constexpr uint16_t kEthertypeVlan = 0x8100;
constexpr uint8_t kProtoTcp = 6;

const std::array<std::string, 9> kMethods = {"GET",     "POST",  "PUT",   "DELETE", "HEAD",
                                             "OPTIONS", "PATCH", "TRACE", "CONNECT"};

struct Reader {
  const std::string& data;
  bool swap = false;

  uint16_t u16_at(size_t off) const {
    uint16_t v = static_cast<uint16_t>((static_cast<unsigned char>(data[off]) << 0) |
                                       (static_cast<unsigned char>(data[off + 1]) << 8));
    return swap ? static_cast<uint16_t>((v >> 8) | (v << 8)) : v;
  }
  uint32_t u32_at(size_t off) const {
    uint32_t v = static_cast<uint32_t>(static_cast<unsigned char>(data[off])) |
                 (static_cast<uint32_t>(static_cast<unsigned char>(data[off + 1])) << 8) |
                 (static_cast<uint32_t>(static_cast<unsigned char>(data[off + 2])) << 16) |
                 (static_cast<uint32_t>(static_cast<unsigned char>(data[off + 3])) << 24);
    return swap ? __builtin_bswap32(v) : v;
  }
};

uint16_t net_u16(const std::string& d, size_t off) {
  return static_cast<uint16_t>((static_cast<unsigned char>(d[off]) << 8) |
                               static_cast<unsigned char>(d[off + 1]));
}

uint32_t net_u32(const std::string& d, size_t off) {
  return (static_cast<uint32_t>(static_cast<unsigned char>(d[off])) << 24) |
         (static_cast<uint32_t>(static_cast<unsigned char>(d[off + 1])) << 16) |
         (static_cast<uint32_t>(static_cast<unsigned char>(d[off + 2])) << 8) |
         static_cast<uint32_t>(static_cast<unsigned char>(d[off + 3]));
}

using FlowKey = std::tuple<uint32_t, uint16_t, uint32_t, uint16_t>;

struct Segment {
  uint32_t seq;
  std::string bytes;
  double ts;
};

struct Flow {
  size_t first_packet = 0;
  std::vector<Segment> segments;
};

struct Stream {
  std::string bytes;
  std::vector<std::pair<size_t, double>> boundaries;  // stream offset -> packet timestamp

  double ts_at(size_t offset) const {
    double ts = boundaries.empty() ? 0.0 : boundaries.front().second;
    for (const auto& [off, t] : boundaries) {
      if (off <= offset) ts = t;
      else break;
    }
    return ts;
  }
};

bool starts_with_method(const std::string& s, size_t off) {
  for (const auto& m : kMethods) {
    if (s.compare(off, m.size(), m) == 0 && off + m.size() < s.size() && s[off + m.size()] == ' ')
      return true;
  }
  return false;
}

bool looks_like_tls(const std::string& s) {
  return s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0x16 &&
         static_cast<unsigned char>(s[1]) == 0x03 && static_cast<unsigned char>(s[2]) <= 0x04;
}

// Reassembles one flow: segments ordered by sequence number relative to the first
// segment seen, exact-duplicate and already-covered bytes dropped, gaps truncate.
Stream reassemble(Flow& flow) {
  Stream out;
  if (flow.segments.empty()) return out;
  // Signed 32-bit deltas keep ordering correct across sequence wraparound and
  // when the lowest-seq segment was not the first one captured.
  uint32_t base = flow.segments.front().seq;
  std::stable_sort(flow.segments.begin(), flow.segments.end(), [&](const Segment& a, const Segment& b) {
    return static_cast<int32_t>(a.seq - base) < static_cast<int32_t>(b.seq - base);
  });
  uint32_t next_seq = flow.segments.front().seq;
  for (const Segment& seg : flow.segments) {
    int64_t rel = static_cast<int32_t>(seg.seq - next_seq);
    if (rel > 0) break;  // hole in the stream: everything past it is unusable
    if (static_cast<uint64_t>(-rel) >= seg.bytes.size()) continue;  // fully covered already
    size_t skip = static_cast<size_t>(-rel);
    out.boundaries.emplace_back(out.bytes.size(), seg.ts);
    out.bytes.append(seg.bytes, skip, seg.bytes.size() - skip);
    next_seq = seg.seq + static_cast<uint32_t>(seg.bytes.size());
  }
  return out;
}

struct ParsedRequest {
  CapturedRequest req;
  size_t next_offset = 0;
};

// Parses one HTTP request at `off`; returns false on any malformation.
bool parse_http_request(const Stream& stream, size_t off, ParsedRequest& out,
                        IngestDiagnostics& diag) {
  const std::string& s = stream.bytes;
  size_t line_end = s.find("\r\n", off);
  if (line_end == std::string::npos) return false;
  std::string request_line = s.substr(off, line_end - off);
  std::vector<std::string> parts = split(request_line, ' ');
  if (parts.size() != 3) return false;
  if (std::find(kMethods.begin(), kMethods.end(), parts[0]) == kMethods.end()) return false;
  if (parts[2].rfind("HTTP/", 0) != 0) return false;

  CapturedRequest req;
  req.method = parts[0];
  req.ts = stream.ts_at(off);
  std::string target = parts[1];
  if (target.rfind("http://", 0) == 0) {
    size_t slash = target.find('/', 7);
    target = slash == std::string::npos ? "/" : target.substr(slash);
  }
  size_t qmark = target.find('?');
  if (qmark == std::string::npos) {
    req.path = target;
  } else {
    req.path = target.substr(0, qmark);
    req.query_params = parse_query_string(target.substr(qmark + 1));
  }

  size_t headers_end = s.find("\r\n\r\n", line_end);
  if (headers_end == std::string::npos) return false;
  size_t cursor = line_end + 2;
  while (cursor < headers_end) {
    size_t eol = s.find("\r\n", cursor);
    std::string line = s.substr(cursor, eol - cursor);
    cursor = eol + 2;
    size_t colon = line.find(':');
    if (colon == std::string::npos) return false;
    req.headers.emplace_back(trim(line.substr(0, colon)), trim(line.substr(colon + 1)));
  }

  size_t body_start = headers_end + 4;
  std::string te = to_lower(req.header("Transfer-Encoding"));
  if (te.find("chunked") != std::string::npos) {
    size_t pos = body_start;
    std::string body;
    while (true) {
      size_t eol = s.find("\r\n", pos);
      if (eol == std::string::npos) return false;
      size_t chunk_len = 0;
      std::string size_line = trim(s.substr(pos, eol - pos));
      size_t semi = size_line.find(';');
      if (semi != std::string::npos) size_line = size_line.substr(0, semi);
      try {
        chunk_len = std::stoul(size_line, nullptr, 16);
      } catch (...) {
        return false;
      }
      pos = eol + 2;
      if (chunk_len == 0) {
        size_t trailer_end = s.find("\r\n", pos);
        if (trailer_end == std::string::npos) return false;
        pos = trailer_end + 2;
        break;
      }
      if (pos + chunk_len + 2 > s.size()) return false;
      body.append(s, pos, chunk_len);
      pos += chunk_len + 2;
    }
    req.raw_body = std::move(body);
    out.next_offset = pos;
  } else {
    std::string cl = req.header("Content-Length");
    size_t body_len = 0;
    if (!cl.empty()) {
      try {
        body_len = std::stoul(trim(cl));
      } catch (...) {
        return false;
      }
    }
    if (body_start + body_len > s.size()) return false;
    req.raw_body = s.substr(body_start, body_len);
    out.next_offset = body_start + body_len;
  }

  std::string ce = to_lower(req.header("Content-Encoding"));
  if (!ce.empty() && ce != "identity") ++diag.content_encoding_flagged;

  derive_body_params(req);
  out.req = std::move(req);
  return true;
}

size_t find_resync_offset(const std::string& s, size_t from) {
  size_t pos = s.find("\r\n", from);
  while (pos != std::string::npos) {
    if (starts_with_method(s, pos + 2)) return pos + 2;
    pos = s.find("\r\n", pos + 2);
  }
  return std::string::npos;
}

}  // namespace

std::vector<CapturedRequest> ingest_pcap(const std::string& path, const std::string& scanner_id,
                                         uint64_t& next_id, IngestDiagnostics& diag) {
  std::string data = read_file(path);
  if (data.size() < 24) throw IngestError("pcap too short for global header: " + path);

  Reader rd{data, false};
  uint32_t magic = rd.u32_at(0);
  double ts_div = 1e6;
  if (magic == kMagicLe) {
  } else if (magic == kMagicLeNs) {
    ts_div = 1e9;
  } else if (magic == kMagicBe) {
    rd.swap = true;
  } else if (magic == kMagicBeNs) {
    rd.swap = true;
    ts_div = 1e9;
  } else {
    throw IngestError("not a pcap file (bad magic): " + path);
  }
  uint32_t linktype = rd.u32_at(20);
  if (linktype != 1) {
    throw IngestError("unsupported pcap linktype " + std::to_string(linktype) +
                      " (only Ethernet is supported): " + path);
  }

  std::map<FlowKey, Flow> flows;
  std::vector<FlowKey> flow_order;
  size_t off = 24;
  size_t packet_index = 0;
  while (off < data.size()) {
    if (off + 16 > data.size()) {
      ++diag.truncated_packets;
      break;
    }
    uint32_t ts_sec = rd.u32_at(off);
    uint32_t ts_frac = rd.u32_at(off + 4);
    uint32_t incl_len = rd.u32_at(off + 8);
    off += 16;
    if (off + incl_len > data.size()) {
      ++diag.truncated_packets;
      break;
    }
    size_t pkt = off;
    size_t pkt_end = off + incl_len;
    off = pkt_end;
    double ts = static_cast<double>(ts_sec) + static_cast<double>(ts_frac) / ts_div;
    ++packet_index;

    if (pkt + 14 > pkt_end) {
      ++diag.skipped_packets;
      continue;
    }
    uint16_t ethertype = net_u16(data, pkt + 12);
    size_t ip_off = pkt + 14;
    if (ethertype == kEthertypeVlan) {
      if (ip_off + 4 > pkt_end) {
        ++diag.skipped_packets;
        continue;
      }
      ethertype = net_u16(data, pkt + 16);
      ip_off += 4;
    }
    if (ethertype != kEthertypeIpv4 || ip_off + 20 > pkt_end) {
      ++diag.skipped_packets;
      continue;
    }
    uint8_t vihl = static_cast<uint8_t>(data[ip_off]);
    if ((vihl >> 4) != 4) {
      ++diag.skipped_packets;
      continue;
    }
    size_t ihl = static_cast<size_t>(vihl & 0x0F) * 4;
    uint16_t ip_total = net_u16(data, ip_off + 2);
    uint8_t proto = static_cast<uint8_t>(data[ip_off + 9]);
    if (proto != kProtoTcp || ip_off + ihl + 20 > pkt_end) {
      ++diag.skipped_packets;
      continue;
    }
    size_t tcp_off = ip_off + ihl;
    uint16_t sport = net_u16(data, tcp_off);
    uint16_t dport = net_u16(data, tcp_off + 2);
    uint32_t seq = net_u32(data, tcp_off + 4);
    size_t doff = static_cast<size_t>((static_cast<unsigned char>(data[tcp_off + 12]) >> 4)) * 4;
    size_t payload_off = tcp_off + doff;
    size_t ip_end = std::min(pkt_end, ip_off + ip_total);
    if (payload_off >= ip_end) continue;  // pure ACK/SYN

    FlowKey key{net_u32(data, ip_off + 12), sport, net_u32(data, ip_off + 16), dport};
    auto [it, inserted] = flows.try_emplace(key);
    if (inserted) {
      it->second.first_packet = packet_index;
      flow_order.push_back(key);
    }
    Flow& flow = it->second;
    std::string payload = data.substr(payload_off, ip_end - payload_off);
    bool duplicate = std::any_of(flow.segments.begin(), flow.segments.end(), [&](const Segment& sgt) {
      return sgt.seq == seq && sgt.bytes == payload;
    });
    if (duplicate) continue;
    flow.segments.push_back(Segment{seq, std::move(payload), ts});
  }

  std::vector<CapturedRequest> out;
  for (const FlowKey& key : flow_order) {
    Stream stream = reassemble(flows[key]);
    if (stream.bytes.empty()) continue;
    if (looks_like_tls(stream.bytes)) {
      throw IngestError("TLS-encrypted stream in capture (plaintext HTTP required): " + path);
    }
    if (!starts_with_method(stream.bytes, 0)) continue;  // response or non-HTTP direction

    size_t cursor = 0;
    while (cursor < stream.bytes.size()) {
      ParsedRequest parsed;
      if (parse_http_request(stream, cursor, parsed, diag)) {
        parsed.req.scanner_id = scanner_id;
        out.push_back(std::move(parsed.req));
        cursor = parsed.next_offset;
        if (cursor >= stream.bytes.size()) break;
        if (!starts_with_method(stream.bytes, cursor)) {
          size_t resync = find_resync_offset(stream.bytes, cursor);
          if (resync == std::string::npos) break;
          ++diag.malformed_requests;
          cursor = resync;
        }
      } else {
        ++diag.malformed_requests;
        size_t resync = find_resync_offset(stream.bytes, cursor);
        if (resync == std::string::npos) break;
        cursor = resync;
      }
    }
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const CapturedRequest& a, const CapturedRequest& b) { return a.ts < b.ts; });
  for (auto& req : out) req.id = next_id++;
  return out;
}

}  // namespace xsslab
