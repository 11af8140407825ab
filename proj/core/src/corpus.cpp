#include "concmtf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace concmtf {

Index Vocabulary::lookup(const std::string& w) const {
  auto it = index.find(w);
  return it == index.end() ? Index{-1} : it->second;
}

BucketScheme BucketScheme::log_buckets(int num_buckets) {
  if (num_buckets < 1) throw std::invalid_argument("BucketScheme: num_buckets must be >= 1");
  return {Kind::log_bucket, num_buckets};
}

BucketScheme BucketScheme::linear_capped(int cap) {
  if (cap < 1) throw std::invalid_argument("BucketScheme: cap must be >= 1");
  return {Kind::linear_capped, cap};
}

Vocabulary build_vocabulary(std::span<const PostRecord> posts, std::int64_t min_count) {
  if (min_count < 0) throw std::invalid_argument("build_vocabulary: min_count must be >= 0");
  std::map<std::string, std::int64_t> freq;
  for (const auto& post : posts)
    for (const auto& tok : post.tokens) ++freq[tok];

  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [word, count] : freq)
    if (count > min_count) kept.emplace_back(word, count);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.min_count = min_count;
  for (const auto& [word, count] : kept) {
    vocab.index.emplace(word, vocab.size());
    vocab.words.push_back(word);
    vocab.counts.push_back(count);
  }
  return vocab;
}

std::vector<std::int64_t> assign_post_numbers(std::span<const PostRecord> posts) {
  // Stable sort of indices per user by timestamp keeps input order for ties.
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < posts.size(); ++i) by_user[posts[i].user].push_back(i);

  std::vector<std::int64_t> numbers(posts.size(), 0);
  for (auto& [user, idx] : by_user) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return posts[a].ts < posts[b].ts; });
    std::int64_t n = 1;
    for (std::size_t i : idx) numbers[i] = n++;
  }
  return numbers;
}

int bucket_post_number(std::int64_t p, const BucketScheme& scheme) {
  if (p < 1) throw std::invalid_argument("bucket_post_number: post numbers start at 1");
  if (scheme.kind == BucketScheme::Kind::linear_capped)
    return static_cast<int>(std::min<std::int64_t>(p, scheme.size)) - 1;
  int b = static_cast<int>(std::floor(std::log(static_cast<double>(p))));
  return std::min(b, scheme.size - 1);
}

std::int64_t week_index(std::int64_t ts, std::int64_t epoch_start) {
  if (ts < epoch_start) throw std::invalid_argument("week_index: timestamp before epoch start");
  return (ts - epoch_start) / kSecondsPerWeek;
}

std::int64_t default_epoch_start(std::span<const PostRecord> posts) {
  if (posts.empty()) return 0;
  std::int64_t earliest = posts.front().ts;
  for (const auto& p : posts) earliest = std::min(earliest, p.ts);
  // Truncate toward the epoch-aligned week grid (timestamps are >= 0).
  return (earliest / kSecondsPerWeek) * kSecondsPerWeek;
}

CooTensor build_corpus_tensor(std::span<const PostRecord> posts,
                              std::span<const std::int64_t> post_numbers,
                              const Vocabulary& vocab, const BucketScheme& scheme,
                              std::int64_t epoch_start) {
  if (posts.size() != post_numbers.size())
    throw std::invalid_argument("build_corpus_tensor: post numbers not parallel to posts");

  std::int64_t max_week = -1;
  for (const auto& post : posts) max_week = std::max(max_week, week_index(post.ts, epoch_start));

  CooTensor coo;
  coo.dims = {vocab.size(), static_cast<Index>(max_week + 1),
              static_cast<Index>(scheme.bucket_count())};
  for (std::size_t n = 0; n < posts.size(); ++n) {
    const auto& post = posts[n];
    const Index week = static_cast<Index>(week_index(post.ts, epoch_start));
    const Index bucket = bucket_post_number(post_numbers[n], scheme);
    for (const auto& tok : post.tokens) {
      Index w = vocab.lookup(tok);
      if (w < 0) continue;
      coo.entries.push_back({w, week, bucket, 1.0});
    }
  }
  coo.canonicalize();
  return coo;
}

Matrix build_tag_matrix(std::span<const PostRecord> posts, const Vocabulary& vocab,
                        std::span<const std::string> tag_list) {
  std::unordered_map<std::string, Index> tag_index;
  for (std::size_t f = 0; f < tag_list.size(); ++f) {
    if (!tag_index.emplace(tag_list[f], static_cast<Index>(f)).second)
      throw std::invalid_argument("build_tag_matrix: duplicate tag in tag list");
  }

  Matrix y = Matrix::Zero(vocab.size(), static_cast<Index>(tag_list.size()));
  for (const auto& post : posts) {
    for (const auto& tok : post.tokens) {
      Index w = vocab.lookup(tok);
      if (w < 0) continue;
      for (const auto& tag : post.tags) {
        auto it = tag_index.find(tag);
        if (it != tag_index.end()) y(w, it->second) += 1.0;
      }
    }
  }
  return y;
}

std::vector<std::string> top_tags(std::span<const PostRecord> posts, const Vocabulary& vocab,
                                  std::size_t n) {
  std::map<std::string, std::int64_t> tag_mass;
  for (const auto& post : posts) {
    std::int64_t in_vocab = 0;
    for (const auto& tok : post.tokens)
      if (vocab.lookup(tok) >= 0) ++in_vocab;
    if (in_vocab == 0) continue;
    for (const auto& tag : post.tags) tag_mass[tag] += in_vocab;
  }
  std::vector<std::pair<std::string, std::int64_t>> ranked(tag_mass.begin(), tag_mass.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > n) ranked.resize(n);
  std::vector<std::string> tags;
  tags.reserve(ranked.size());
  for (auto& [tag, mass] : ranked) tags.push_back(std::move(tag));
  return tags;
}

}  // namespace concmtf
