#pragma once

#include "concmtf/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace concmtf {

/// One forum post: tokens are expected lowercase and pre-stemmed upstream.
struct PostRecord {
  std::string user;
  std::int64_t ts = 0;  // seconds since epoch
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

struct Vocabulary {
  std::vector<std::string> words;        // index order
  std::vector<std::int64_t> counts;      // corpus frequency per word
  std::unordered_map<std::string, Index> index;
  std::int64_t min_count = 0;

  Index size() const { return static_cast<Index>(words.size()); }
  /// -1 when the word is out of vocabulary.
  Index lookup(const std::string& w) const;
};

/// Post-number discretization. LogBucket floors the natural log of the
/// post number (p = 1 maps to bucket 0) and caps at num_buckets - 1;
/// LinearCapped uses the post number itself, capped.
struct BucketScheme {
  enum class Kind { log_bucket, linear_capped };
  Kind kind = Kind::log_bucket;
  int size = 9;  // num_buckets for log, cap for linear

  static BucketScheme log_buckets(int num_buckets);
  static BucketScheme linear_capped(int cap);
  int bucket_count() const { return size; }
};

constexpr std::int64_t kSecondsPerWeek = 604800;

/// Words whose total corpus frequency is strictly greater than min_count,
/// ordered by frequency descending, ties lexicographic.
Vocabulary build_vocabulary(std::span<const PostRecord> posts, std::int64_t min_count);

/// Per-user post numbers 1,2,3,... in (timestamp, stable input order).
/// Returned parallel to the input posts.
std::vector<std::int64_t> assign_post_numbers(std::span<const PostRecord> posts);

int bucket_post_number(std::int64_t p, const BucketScheme& scheme);

/// floor((ts - epoch_start) / one week); throws on ts < epoch_start.
std::int64_t week_index(std::int64_t ts, std::int64_t epoch_start);

/// Earliest post timestamp truncated to its week start on the epoch-aligned
/// week grid. Returns 0 for an empty corpus.
std::int64_t default_epoch_start(std::span<const PostRecord> posts);

/// (word, week, bucket) occurrence counts over in-vocabulary tokens.
/// Dims are (|vocab|, max week over all posts + 1, scheme.bucket_count()).
CooTensor build_corpus_tensor(std::span<const PostRecord> posts,
                              std::span<const std::int64_t> post_numbers,
                              const Vocabulary& vocab, const BucketScheme& scheme,
                              std::int64_t epoch_start);

/// (word, tag) counts: every in-vocabulary token occurrence in a post
/// increments the column of each of the post's listed tags.
Matrix build_tag_matrix(std::span<const PostRecord> posts, const Vocabulary& vocab,
                        std::span<const std::string> tag_list);

/// Tags ranked by total in-vocabulary token count (ties lexicographic),
/// truncated to at most n.
std::vector<std::string> top_tags(std::span<const PostRecord> posts, const Vocabulary& vocab,
                                  std::size_t n);

}  // namespace concmtf
