#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "challenge.hpp"
#include "errors.hpp"
#include "image_io.hpp"
#include "random.hpp"
#include "verify.hpp"

namespace curvecaptcha {

// Milliseconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;

inline std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// Hand-driven clock for tests.
class ManualClock {
 public:
  explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now() const { return now_.load(); }
  void advance(std::int64_t ms) { now_ += ms; }
  Clock as_clock() { return [this] { return now(); }; }

 private:
  std::atomic<std::int64_t> now_;
};

struct ChallengeRecord {
  std::string id;
  Variant variant = Variant::Long;
  std::vector<PointSeries> curves;
  CanvasSpec canvas;
  std::int64_t created_at_ms = 0;
  std::int64_t expires_at_ms = 0;
  bool consumed = false;
  VerifyConfig cfg;
};

enum class TakeStatus { Taken, Unknown, Expired, Consumed };

struct TakeResult {
  TakeStatus status = TakeStatus::Unknown;
  std::optional<ChallengeRecord> record;
};

// Storage seam for challenge records. take() must check expiry and mark the
// record consumed in one atomic step.
class ChallengeStore {
 public:
  virtual ~ChallengeStore() = default;
  // Throws ResourceExhausted when full; returns false on id collision.
  virtual bool insert(ChallengeRecord record, std::int64_t now_ms) = 0;
  virtual TakeResult take(const std::string& id, const Clock& clock) = 0;
  virtual void invalidate(const std::string& id) = 0;
  virtual void purge(std::int64_t now_ms) = 0;
  virtual std::size_t size() const = 0;
};

// Records stay until created_at + 2*TTL so that late submissions still see
// "expired" for one extra TTL before the id is forgotten.
class InMemoryChallengeStore final : public ChallengeStore {
 public:
  InMemoryChallengeStore(std::int64_t ttl_ms, std::size_t capacity) : ttl_ms_(ttl_ms), capacity_(capacity) {}

  bool insert(ChallengeRecord record, std::int64_t now_ms) override {
    std::lock_guard lock(mu_);
    purge_locked(now_ms);
    if (records_.size() >= capacity_) throw ResourceExhausted("challenge store is full");
    if (records_.count(record.id)) return false;
    order_.emplace_back(record.expires_at_ms, record.id);
    records_.emplace(record.id, std::move(record));
    return true;
  }

  TakeResult take(const std::string& id, const Clock& clock) override {
    std::lock_guard lock(mu_);
    const std::int64_t now = clock();
    purge_locked(now);
    auto it = records_.find(id);
    if (it == records_.end()) return {TakeStatus::Unknown, std::nullopt};
    if (it->second.consumed) return {TakeStatus::Consumed, std::nullopt};
    if (now >= it->second.expires_at_ms) return {TakeStatus::Expired, std::nullopt};
    it->second.consumed = true;
    return {TakeStatus::Taken, it->second};
  }

  void invalidate(const std::string& id) override {
    std::lock_guard lock(mu_);
    if (auto it = records_.find(id); it != records_.end()) it->second.consumed = true;
  }

  void purge(std::int64_t now_ms) override {
    std::lock_guard lock(mu_);
    purge_locked(now_ms);
  }

  std::size_t size() const override {
    std::lock_guard lock(mu_);
    return records_.size();
  }

 private:
  void purge_locked(std::int64_t now_ms) {
    // TTL is fixed, so insertion order is expiry order.
    while (!order_.empty() && order_.front().first + ttl_ms_ <= now_ms) {
      records_.erase(order_.front().second);
      order_.pop_front();
    }
  }

  std::int64_t ttl_ms_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, ChallengeRecord> records_;
  std::deque<std::pair<std::int64_t, std::string>> order_;
};

struct ServiceConfig {
  int ttl_seconds = 60;
  std::size_t capacity = 100000;
  Variant default_variant = Variant::Long;
  ChallengeParams params;
  VerifyConfig verify;
  // Fixes challenge content and ids; testing only.
  std::optional<std::uint64_t> master_seed;
};

// What the client sees. Never carries curve geometry.
struct ChallengePayload {
  std::string id;
  Bytes image_png;
  int width = 0;
  int height = 0;
  Variant variant = Variant::Long;
  std::int64_t expires_at_ms = 0;
};

inline nlohmann::json payload_to_json(const ChallengePayload& p) {
  return {{"id", p.id},
          {"image_base64", base64_encode(p.image_png)},
          {"width", p.width},
          {"height", p.height},
          {"variant", std::string(to_string(p.variant))},
          {"expires_at", p.expires_at_ms}};
}

class CaptchaService {
 public:
  CaptchaService(ServiceConfig cfg, GlyphDatabase long_db, GlyphDatabase short_db,
                 Clock clock = system_clock_ms, std::unique_ptr<ChallengeStore> store = nullptr)
      : cfg_(std::move(cfg)),
        long_db_(std::move(long_db)),
        short_db_(std::move(short_db)),
        clock_(std::move(clock)),
        store_(store ? std::move(store)
                     : std::make_unique<InMemoryChallengeStore>(std::int64_t(cfg_.ttl_seconds) * 1000,
                                                                cfg_.capacity)) {
    detail::require(cfg_.ttl_seconds >= 1, "TTL must be at least one second");
    cfg_.verify.validate();
    if (!cfg_.master_seed) {
      std::random_device rd;
      entropy_seed_ = (std::uint64_t(rd()) << 32) ^ rd();
    }
  }

  // Synthetic glyph databases for both variants.
  static std::unique_ptr<CaptchaService> synthetic(ServiceConfig cfg, Clock clock = system_clock_ms) {
    const std::uint64_t db_seed = cfg.master_seed.value_or(std::random_device{}());
    ChallengeParams lp = cfg.params, sp = cfg.params;
    lp.variant = Variant::Long;
    sp.variant = Variant::Short;
    auto long_db = make_database_for(lp, derive_seed(db_seed, 1));
    auto short_db = make_database_for(sp, derive_seed(db_seed, 2));
    return std::make_unique<CaptchaService>(std::move(cfg), std::move(long_db), std::move(short_db),
                                            std::move(clock));
  }

  const ServiceConfig& config() const { return cfg_; }

  ChallengePayload create_challenge(std::optional<Variant> variant = std::nullopt) {
    ChallengeParams p = cfg_.params;
    p.variant = variant.value_or(cfg_.default_variant);
    Rng rng(next_seed());
    const Challenge c = assemble_challenge(rng, p.variant == Variant::Long ? long_db_ : short_db_, p);

    ChallengeRecord rec;
    rec.variant = c.variant;
    rec.curves = c.curves;
    rec.canvas = c.canvas;
    rec.cfg = cfg_.verify;
    for (;;) {
      rec.id = new_id();
      rec.created_at_ms = clock_();
      rec.expires_at_ms = rec.created_at_ms + std::int64_t(cfg_.ttl_seconds) * 1000;
      if (store_->insert(rec, rec.created_at_ms)) break;
    }
    return {rec.id, c.image.encoded, c.canvas.width, c.canvas.height, c.variant, rec.expires_at_ms};
  }

  // Single use: the record is consumed before evaluation, whatever the verdict.
  Verdict submit_trace(const std::string& id, const Trace& trace) {
    TakeResult t = store_->take(id, clock_);
    switch (t.status) {
      case TakeStatus::Unknown:
      case TakeStatus::Consumed: return Verdict::fail(VerdictReason::Consumed);
      case TakeStatus::Expired: return Verdict::fail(VerdictReason::Expired);
      case TakeStatus::Taken: break;
    }
    ++evaluations_;
    const ChallengeRecord& r = *t.record;
    return verify_geometry(r.variant, r.curves, r.canvas, trace, r.cfg);
  }

  // Invalidates the old id (known or not) and issues a brand-new challenge.
  ChallengePayload refresh_challenge(const std::string& old_id, std::optional<Variant> variant = std::nullopt) {
    store_->invalidate(old_id);
    return create_challenge(variant);
  }

  std::size_t evaluations() const { return evaluations_.load(); }
  std::size_t stored() const { return store_->size(); }
  void purge() { store_->purge(clock_()); }

 private:
  std::uint64_t next_seed() {
    const std::uint64_t n = counter_++;
    if (cfg_.master_seed) return derive_seed(*cfg_.master_seed, n);
    std::random_device rd;
    return derive_seed(entropy_seed_ ^ ((std::uint64_t(rd()) << 32) | rd()), n);
  }

  // 128-bit token, hex encoded.
  std::string new_id() {
    std::uint64_t hi, lo;
    if (cfg_.master_seed) {
      Rng r(derive_seed(*cfg_.master_seed ^ 0x1d5eedULL, id_counter_++));
      hi = r.next_u64();
      lo = r.next_u64();
    } else {
      std::random_device rd;
      hi = (std::uint64_t(rd()) << 32) | rd();
      lo = (std::uint64_t(rd()) << 32) | rd();
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s(32, '0');
    for (int i = 0; i < 16; ++i) {
      s[i] = kHex[(hi >> (60 - 4 * i)) & 15];
      s[16 + i] = kHex[(lo >> (60 - 4 * i)) & 15];
    }
    return s;
  }

  ServiceConfig cfg_;
  GlyphDatabase long_db_;
  GlyphDatabase short_db_;
  Clock clock_;
  std::unique_ptr<ChallengeStore> store_;
  std::uint64_t entropy_seed_ = 0;
  std::atomic<std::uint64_t> counter_{0};
  std::atomic<std::uint64_t> id_counter_{0};
  std::atomic<std::size_t> evaluations_{0};
};

}  // namespace curvecaptcha
