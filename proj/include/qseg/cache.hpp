#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qseg/errors.hpp"
#include "qseg/snippets.hpp"

namespace qseg {

namespace detail {

inline std::uint64_t fnv1a64(std::string_view data,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace detail

/// Durable on-disk snippet cache: one JSON file per key, keyed by the
/// normalized query text, source id and snippet cap. Entries are
/// human-inspectable and never expire; replaying an experiment against a
/// warm cache touches no source. Empty result sets are cached like any
/// other response. Writes are serialized and go through a rename so
/// readers never observe a partial entry.
class SnippetCache {
public:
  explicit SnippetCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& directory() const { return dir_; }

  struct Key {
    std::string query_text;  // normalized
    std::string source_id;
    int max_snippets = 10;

    std::string material() const {
      return query_text + "\n" + source_id + "\n" + std::to_string(max_snippets);
    }
    bool operator==(const Key&) const = default;
  };

  static Key make_key(const SnippetSource& source, std::string_view query_text) {
    return Key{normalize_query_text(query_text), source.config().source_id,
               source.config().max_snippets};
  }

  /// Returns the cached set for `key`, or nullopt on a miss. Throws
  /// CacheCorruptError when the entry exists but cannot be decoded.
  std::optional<SnippetSet> lookup(const Key& key) const {
    const auto path = entry_path(key);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    nlohmann::json entry;
    try {
      in >> entry;
    } catch (const nlohmann::json::exception& e) {
      throw CacheCorruptError("cache entry " + path.string() +
                              " is not valid JSON: " + e.what());
    }
    return decode(entry, key, path);
  }

  void store(const Key& key, const SnippetSet& set) {
    nlohmann::json entry;
    entry["key"] = {{"query_text", key.query_text},
                    {"source_id", key.source_id},
                    {"max_snippets", key.max_snippets}};
    entry["flavor"] = std::string(flavor_name(set.flavor));
    entry["fetched_at"] = set.fetched_at;
    auto& arr = entry["snippets"] = nlohmann::json::array();
    for (const Snippet& s : set.snippets)
      arr.push_back({{"rank", s.rank}, {"text", s.text}});

    const auto path = entry_path(key);
    std::lock_guard<std::mutex> lock(write_mutex_);
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << entry.dump(2) << "\n";
      if (!out) throw Error("cannot write cache entry: " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  void evict(const Key& key) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    std::error_code ec;
    std::filesystem::remove(entry_path(key), ec);
  }

  std::size_t entry_count() const {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir_))
      if (e.path().extension() == ".json") ++n;
    return n;
  }

private:
  std::filesystem::path entry_path(const Key& key) const {
    return dir_ / (detail::hex64(detail::fnv1a64(key.material())) + ".json");
  }

  std::optional<SnippetSet> decode(const nlohmann::json& entry, const Key& key,
                                   const std::filesystem::path& path) const {
    try {
      const auto& stored = entry.at("key");
      Key stored_key{stored.at("query_text").get<std::string>(),
                     stored.at("source_id").get<std::string>(),
                     stored.at("max_snippets").get<int>()};
      // A different key in this slot is a hash collision; treat as a miss
      // and let the new entry take the slot.
      if (!(stored_key == key)) return std::nullopt;

      SnippetSet set;
      set.query_text = key.query_text;
      set.source_id = key.source_id;
      set.flavor = parse_flavor(entry.at("flavor").get<std::string>());
      set.fetched_at = entry.at("fetched_at").get<std::int64_t>();
      for (const auto& s : entry.at("snippets")) {
        set.snippets.push_back(Snippet{s.at("text").get<std::string>(),
                                       s.at("rank").get<int>(), key.source_id});
      }
      return set;
    } catch (const nlohmann::json::exception& e) {
      throw CacheCorruptError("cache entry " + path.string() +
                              " has unexpected shape: " + e.what());
    } catch (const ParseError& e) {
      throw CacheCorruptError("cache entry " + path.string() + ": " + e.what());
    }
  }

  std::filesystem::path dir_;
  mutable std::mutex write_mutex_;
};

/// Cache-through fetch. Hits return the stored set (flavor rewritten to the
/// caller's, since identical submission texts share one entry); misses and
/// `refresh` calls go to the source and the response, empty or not, is
/// stored. Corrupt entries are evicted and refetched.
inline SnippetSet cached_fetch(SnippetCache& cache, SnippetSource& source,
                               std::string_view query_text,
                               QueryFlavor flavor = QueryFlavor::Base,
                               bool refresh = false) {
  const SnippetCache::Key key = SnippetCache::make_key(source, query_text);
  if (!refresh) {
    try {
      if (auto hit = cache.lookup(key)) {
        hit->query_text.assign(query_text);
        hit->flavor = flavor;
        return *std::move(hit);
      }
    } catch (const CacheCorruptError&) {
      cache.evict(key);
    }
  }
  SnippetSet fresh = source.fetch(query_text, flavor);
  cache.store(key, fresh);
  return fresh;
}

}  // namespace qseg
