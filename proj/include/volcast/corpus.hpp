#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "volcast/calendar.hpp"

namespace volcast {

struct HeadlineRecord {
    std::string stock_id;
    UtcTime timestamp_utc;
    std::string text;
};

enum class TimeCategory { before_market, during_market, after_market, holiday, weekend };

std::string to_string(TimeCategory c);

/// One trading day's worth of news for one stock, in chronological order.
struct AlignedDay {
    std::string stock_id;
    Date trading_date;
    std::vector<std::vector<std::string>> headlines;  // tokenized
    std::vector<std::string> raw_texts;               // original strings, same order
    bool has_news = false;
};

/// stock_id -> alternative written forms that identify the stock in text.
using SurfaceForms = std::map<std::string, std::vector<std::string>>;

/// Token -> row index into the embedding matrix; index 0 is padding and maps
/// to an all-zero row. tokens[i] is the token for index i (tokens[0] = "").
struct Vocabulary {
    std::unordered_map<std::string, int> index;
    std::vector<std::string> tokens;
    std::vector<std::vector<double>> rows;
    int dim = 0;

    std::size_t size() const { return index.size(); }  // excludes padding
};

/// Buckets a New York wall-clock instant. Weekends and holidays take
/// precedence; otherwise the market session [09:30:00, 16:00:00] is closed
/// on both ends.
TimeCategory categorize(const WallTime& new_york_time, const TradingCalendar& calendar);

/// Lowercases, splits on whitespace, strips leading/trailing punctuation from
/// each token (interior symbols survive: "p&g"), drops empties.
std::vector<std::string> tokenize(const std::string& text);

/// Stocks whose surface forms appear in the text as a contiguous token
/// subsequence (case-insensitive, both sides tokenized identically).
std::set<std::string> match_stock(const std::string& headline_text,
                                  const SurfaceForms& forms);

/// Groups headlines onto trading days: before/during-market news on its own
/// date; after-market, weekend, and holiday news on the next trading day.
/// Returns per-stock day sequences sorted by date; only days with news appear.
std::map<std::string, std::vector<AlignedDay>> align(
    const std::vector<HeadlineRecord>& records, const TradingCalendar& calendar);

/// Corpus-wide category counts (used for fixture goldens).
std::map<TimeCategory, int> category_histogram(
    const std::vector<HeadlineRecord>& records, const TradingCalendar& calendar);

/// Renders the histogram one "<category>\t<count>" line per category in enum
/// order, including zero counts.
std::string histogram_to_text(const std::map<TimeCategory, int>& hist);

/// Vocabulary = corpus tokens that also appear in the embeddings file.
/// Indices follow embeddings-file order (1-based; 0 is padding with a zero
/// row). The embedding width is taken from the first line and enforced.
Vocabulary build_vocab(const std::set<std::string>& corpus_tokens,
                       const std::string& embeddings_path);
Vocabulary build_vocab(const std::map<std::string, std::vector<AlignedDay>>& corpus,
                       const std::string& embeddings_path);

/// Index matrix for one day: first l_n headlines (chronological), each
/// truncated/padded to l_s in-vocabulary token indices; missing headlines are
/// zero rows. Out-of-vocabulary tokens are dropped before truncation.
std::vector<std::vector<int>> encode_day(const AlignedDay& day, const Vocabulary& vocab,
                                         int l_n, int l_s);

struct HeadlineLoadResult {
    std::vector<HeadlineRecord> records;
    std::vector<std::string> rejects;  // "path:line: reason"
};

/// Reads JSONL: {"stock": ..., "utc": "YYYY-MM-DDTHH:MM:SS+HH:MM", "text": ...}.
/// Malformed lines are collected per-record instead of aborting the load.
HeadlineLoadResult load_headlines_jsonl(const std::string& path);

/// {stock_id: [form, ...]}; every stock needs a non-empty list.
SurfaceForms load_surface_forms(const std::string& path);

}  // namespace volcast
