#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "minitrain/error.hpp"

namespace minitrain {

// ---------------------------------------------------------------------------
// Byte-exact allocation tracking plus FLOP / HBM-traffic counters.
//
// Counting conventions (fixed; every op and the analytic estimator share
// them):
//   matmul (N,K,P), any operand orientation:
//       flops += 2*N*K*P, hbm += N*K + K*P + N*P
//       operands whose label starts with "weights." also add their element
//       count to weight_read_elements
//   silu forward            4 flops/elem, hbm 2*elems
//   silu backward           4 flops/elem, hbm 3*elems
//   elementwise add/mul     1 flop/elem,  hbm 3*elems (2 for scalar operand)
//   softmax rows fwd/bwd    5 flops/elem, hbm 2*elems / 3*elems
//   cross-entropy fwd       5 flops per logits elem, hbm elems + 2*rows
//   cross-entropy bwd       5 flops per logits elem, hbm 2*elems + 2*rows
//   rmsnorm fwd / bwd       4 / 8 flops/elem, hbm 2*elems / 4*elems
//   copies (slice, concat)  0 flops, hbm 2*copied
//
// HBM accesses are whole-operand element reads/writes per block-level op; no
// cache modeling. Activation re-reads during backward are counted.
// ---------------------------------------------------------------------------

enum class MemEventKind : uint8_t { Alloc, Free };

struct MemEvent {
  uint64_t seq_no;
  MemEventKind kind;
  uint64_t bytes;
  std::string label;
  uint64_t live_after;  // total live bytes after this event
};

struct OpCounters {
  uint64_t flops = 0;         // everything, per the table above
  uint64_t matmul_flops = 0;  // matmul share of flops
  uint64_t hbm_elements = 0;
  uint64_t weight_read_elements = 0;

  OpCounters operator-(const OpCounters& o) const {
    return {flops - o.flops, matmul_flops - o.matmul_flops,
            hbm_elements - o.hbm_elements,
            weight_read_elements - o.weight_read_elements};
  }
};

// Snapshot of one region: its event slice plus enough entry state to replay
// per-label-class statistics.
struct MemReport {
  std::vector<MemEvent> events;
  uint64_t entry_live = 0;
  std::map<std::string, uint64_t> entry_live_by_label;

  // Max of live_after over the region's events; 0 for an empty region.
  uint64_t peak_bytes() const {
    uint64_t peak = 0;
    for (const auto& e : events) peak = std::max(peak, e.live_after);
    return peak;
  }

  uint64_t final_live() const {
    return events.empty() ? entry_live : events.back().live_after;
  }

  // Live bytes per label at the moment of the global peak.
  std::map<std::string, uint64_t> peak_by_label() const {
    std::map<std::string, uint64_t> live = entry_live_by_label;
    std::map<std::string, uint64_t> at_peak = live;
    uint64_t peak = 0;
    for (const auto& e : events) {
      apply(live, e);
      if (e.live_after > peak) {
        peak = e.live_after;
        at_peak = live;
      }
    }
    for (auto it = at_peak.begin(); it != at_peak.end();) {
      it = it->second == 0 ? at_peak.erase(it) : std::next(it);
    }
    return at_peak;
  }

  // Peak of summed live bytes over labels with the given prefix.
  uint64_t peak_for_prefix(const std::string& prefix) const {
    return replay_peak([&](const std::string& label) {
      return label.compare(0, prefix.size(), prefix) == 0;
    });
  }

  // Peak of total live bytes with one label class removed. Used for budget
  // probes where "attnscore." tensors model on-chip score tiles.
  uint64_t peak_excluding_prefix(const std::string& prefix) const {
    return replay_peak([&](const std::string& label) {
      return label.compare(0, prefix.size(), prefix) != 0;
    });
  }

 private:
  static void apply(std::map<std::string, uint64_t>& live, const MemEvent& e) {
    if (e.kind == MemEventKind::Alloc) {
      live[e.label] += e.bytes;
    } else {
      live[e.label] -= e.bytes;
    }
  }

  template <class Pred>
  uint64_t replay_peak(const Pred& match) const {
    uint64_t live = 0;
    for (const auto& [label, bytes] : entry_live_by_label) {
      if (match(label)) live += bytes;
    }
    uint64_t peak = live;
    for (const auto& e : events) {
      if (match(e.label)) {
        live += e.kind == MemEventKind::Alloc ? e.bytes : -e.bytes;
        peak = std::max(peak, live);
      }
    }
    return peak;
  }
};

class MemTracker {
 public:
  struct RegionStats {
    MemReport report;
    OpCounters counters;
  };

  // Thread-local current tracker. Tensors capture the tracker they were
  // allocated under and report their free to it, so scoped swaps stay exact.
  static std::shared_ptr<MemTracker>& current_ptr() {
    thread_local std::shared_ptr<MemTracker> tracker =
        std::make_shared<MemTracker>();
    return tracker;
  }
  static MemTracker& current() { return *current_ptr(); }

  void on_alloc(uint64_t bytes, const std::string& label) {
    live_ += bytes;
    live_by_label_[label] += bytes;
    events_.push_back({seq_++, MemEventKind::Alloc, bytes, label, live_});
  }

  void on_free(uint64_t bytes, const std::string& label) {
    auto it = live_by_label_.find(label);
    check<StateError>(it != live_by_label_.end() && it->second >= bytes,
                      "free exceeds live allocations for label '" + label + "'");
    it->second -= bytes;
    live_ -= bytes;
    events_.push_back({seq_++, MemEventKind::Free, bytes, label, live_});
  }

  void count_matmul(int64_t n, int64_t k, int64_t p, uint64_t weight_elems = 0) {
    check<Error>(n > 0 && k > 0 && p > 0, "count_matmul: extents must be positive");
    const uint64_t f = 2ull * n * k * p;
    counters_.flops += f;
    counters_.matmul_flops += f;
    counters_.hbm_elements +=
        static_cast<uint64_t>(n) * k + static_cast<uint64_t>(k) * p + static_cast<uint64_t>(n) * p;
    counters_.weight_read_elements += weight_elems;
  }

  void count_op(uint64_t flops, uint64_t hbm_elements) {
    counters_.flops += flops;
    counters_.hbm_elements += hbm_elements;
  }

  void count_weight_read(uint64_t elems) { counters_.weight_read_elements += elems; }

  void region_begin(const std::string& name) {
    open_.push_back({name, events_.size(), live_, live_by_label_, counters_});
  }

  RegionStats region_end(const std::string& name) {
    check<StateError>(!open_.empty(), "region_end('" + name + "') without begin");
    check<StateError>(open_.back().name == name,
                      "region_end('" + name + "') does not match open region '" +
                          open_.back().name + "'");
    OpenRegion region = std::move(open_.back());
    open_.pop_back();
    RegionStats stats;
    stats.report.events.assign(events_.begin() + region.event_start, events_.end());
    stats.report.entry_live = region.entry_live;
    stats.report.entry_live_by_label = std::move(region.entry_live_by_label);
    stats.counters = counters_ - region.entry_counters;
    return stats;
  }

  uint64_t live_bytes() const { return live_; }
  uint64_t live_bytes_for_label(const std::string& label) const {
    auto it = live_by_label_.find(label);
    return it == live_by_label_.end() ? 0 : it->second;
  }
  const OpCounters& totals() const { return counters_; }
  size_t open_regions() const { return open_.size(); }

 private:
  struct OpenRegion {
    std::string name;
    size_t event_start;
    uint64_t entry_live;
    std::map<std::string, uint64_t> entry_live_by_label;
    OpCounters entry_counters;
  };

  std::vector<MemEvent> events_;
  std::map<std::string, uint64_t> live_by_label_;
  uint64_t live_ = 0;
  uint64_t seq_ = 0;
  OpCounters counters_;
  std::vector<OpenRegion> open_;
};

// Installs a fresh (or supplied) tracker as the thread's current one and
// restores the previous tracker on scope exit.
class ScopedTracker {
 public:
  ScopedTracker() : ScopedTracker(std::make_shared<MemTracker>()) {}
  explicit ScopedTracker(std::shared_ptr<MemTracker> tracker)
      : previous_(MemTracker::current_ptr()), mine_(std::move(tracker)) {
    MemTracker::current_ptr() = mine_;
  }
  ~ScopedTracker() { MemTracker::current_ptr() = previous_; }

  ScopedTracker(const ScopedTracker&) = delete;
  ScopedTracker& operator=(const ScopedTracker&) = delete;

  MemTracker& tracker() { return *mine_; }
  std::shared_ptr<MemTracker> tracker_ptr() { return mine_; }

 private:
  std::shared_ptr<MemTracker> previous_;
  std::shared_ptr<MemTracker> mine_;
};

// RAII region; call end() to collect stats, otherwise the region closes
// silently on destruction.
class TrackedRegion {
 public:
  explicit TrackedRegion(std::string name)
      : tracker_(MemTracker::current_ptr()), name_(std::move(name)) {
    tracker_->region_begin(name_);
  }
  MemTracker::RegionStats end() {
    ended_ = true;
    return tracker_->region_end(name_);
  }
  ~TrackedRegion() {
    if (!ended_) tracker_->region_end(name_);
  }

  TrackedRegion(const TrackedRegion&) = delete;
  TrackedRegion& operator=(const TrackedRegion&) = delete;

 private:
  std::shared_ptr<MemTracker> tracker_;
  std::string name_;
  bool ended_ = false;
};

inline void export_timeline(const MemReport& report, std::ostream& out) {
  out << "seq_no,kind,bytes,label,live_after\n";
  for (const auto& e : report.events) {
    out << e.seq_no << ',' << (e.kind == MemEventKind::Alloc ? "alloc" : "free")
        << ',' << e.bytes << ',' << e.label << ',' << e.live_after << '\n';
  }
}

inline void export_timeline(const MemReport& report, const std::string& path) {
  std::ofstream out(path);
  check<Error>(out.good(), "export_timeline: cannot open '" + path + "'");
  export_timeline(report, out);
  out.flush();
  check<Error>(out.good(), "export_timeline: write failed for '" + path + "'");
}

}  // namespace minitrain
