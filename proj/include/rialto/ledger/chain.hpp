#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rialto/bytes.hpp"

namespace rialto {

using Event = nlohmann::ordered_json;

struct Block {
  std::uint64_t height = 0;
  Digest256 previous{};
  std::vector<Event> events;
  Digest256 hash{};
};

/// Append-only hash chain of event blocks.
class Chain {
 public:
  static Digest256 block_hash(std::uint64_t height, const Digest256& previous, const std::vector<Event>& events) {
    Bytes material(previous.begin(), previous.end());
    put_u64_be(material, height);
    const std::string body = Event(events).dump();
    material.insert(material.end(), body.begin(), body.end());
    return sha256(material);
  }

  void record(Event e) { pending_.push_back(std::move(e)); }
  const std::vector<Event>& pending() const { return pending_; }

  const Block& seal() {
    Block b;
    b.height = blocks_.size();
    b.previous = blocks_.empty() ? Digest256{} : blocks_.back().hash;
    b.events = std::move(pending_);
    pending_.clear();
    b.hash = block_hash(b.height, b.previous, b.events);
    blocks_.push_back(std::move(b));
    return blocks_.back();
  }

  const std::vector<Block>& blocks() const { return blocks_; }
  Digest256 head_hash() const { return blocks_.empty() ? Digest256{} : blocks_.back().hash; }

  bool verify() const {
    Digest256 prev{};
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& b = blocks_[i];
      if (b.height != i || b.previous != prev) return false;
      if (block_hash(b.height, b.previous, b.events) != b.hash) return false;
      prev = b.hash;
    }
    return true;
  }

  /// One event per line, each tagged with its block.
  std::string dump_jsonl() const {
    std::string out;
    for (const auto& b : blocks_) {
      for (const auto& e : b.events) {
        Event line;
        line["block"] = b.height;
        line["block_hash"] = to_hex(b.hash);
        line["event"] = e;
        out += line.dump();
        out += '\n';
      }
    }
    return out;
  }

  // Test hook: lets tamper tests corrupt history.
  std::vector<Block>& mutable_blocks_for_testing() { return blocks_; }

 private:
  std::vector<Block> blocks_;
  std::vector<Event> pending_;
};

}  // namespace rialto
