#include "volcast/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace volcast {

std::string to_string(TimeCategory c) {
    switch (c) {
        case TimeCategory::before_market: return "before_market";
        case TimeCategory::during_market: return "during_market";
        case TimeCategory::after_market: return "after_market";
        case TimeCategory::holiday: return "holiday";
        case TimeCategory::weekend: return "weekend";
    }
    throw std::invalid_argument("unknown time category");
}

TimeCategory categorize(const WallTime& t, const TradingCalendar& calendar) {
    if (calendar.is_weekend(t.date)) return TimeCategory::weekend;
    if (calendar.is_holiday(t.date)) return TimeCategory::holiday;
    const int sod = t.hour * 3600 + t.minute * 60 + t.second;
    if (sod < 9 * 3600 + 30 * 60) return TimeCategory::before_market;
    if (sod <= 16 * 3600) return TimeCategory::during_market;
    return TimeCategory::after_market;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string tok;
    auto flush = [&] {
        // trim punctuation off both ends; interior characters stay
        std::size_t b = 0, e = tok.size();
        auto is_punct = [](char c) {
            const auto u = static_cast<unsigned char>(c);
            return u < 128 && std::ispunct(u);
        };
        while (b < e && is_punct(tok[b])) ++b;
        while (e > b && is_punct(tok[e - 1])) --e;
        if (e > b) out.push_back(tok.substr(b, e - b));
        tok.clear();
    };
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isspace(u)) {
            if (!tok.empty()) flush();
        } else {
            tok.push_back(u < 128 ? static_cast<char>(std::tolower(u)) : c);
        }
    }
    if (!tok.empty()) flush();
    return out;
}

namespace {

bool contains_subsequence(const std::vector<std::string>& haystack,
                          const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool hit = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (haystack[i + j] != needle[j]) {
                hit = false;
                break;
            }
        }
        if (hit) return true;
    }
    return false;
}

}  // namespace

std::set<std::string> match_stock(const std::string& headline_text,
                                  const SurfaceForms& forms) {
    const auto tokens = tokenize(headline_text);
    std::set<std::string> hits;
    for (const auto& [stock, variants] : forms) {
        for (const auto& form : variants) {
            if (contains_subsequence(tokens, tokenize(form))) {
                hits.insert(stock);
                break;
            }
        }
    }
    return hits;
}

std::map<std::string, std::vector<AlignedDay>> align(
    const std::vector<HeadlineRecord>& records, const TradingCalendar& calendar) {
    std::vector<const HeadlineRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const HeadlineRecord* a, const HeadlineRecord* b) {
                         return a->timestamp_utc < b->timestamp_utc;
                     });

    std::map<std::string, std::map<Date, AlignedDay>> grouped;
    for (const HeadlineRecord* r : sorted) {
        const WallTime wall = to_new_york(r->timestamp_utc);
        const TimeCategory cat = categorize(wall, calendar);
        const Date target = cat == TimeCategory::before_market ||
                                    cat == TimeCategory::during_market
                                ? wall.date
                                : calendar.next_trading_day(wall.date);
        AlignedDay& day = grouped[r->stock_id][target];
        if (day.raw_texts.empty()) {
            day.stock_id = r->stock_id;
            day.trading_date = target;
        }
        day.headlines.push_back(tokenize(r->text));
        day.raw_texts.push_back(r->text);
        day.has_news = true;
    }

    std::map<std::string, std::vector<AlignedDay>> out;
    for (auto& [stock, days] : grouped) {
        auto& seq = out[stock];
        seq.reserve(days.size());
        for (auto& [date, day] : days) seq.push_back(std::move(day));
    }
    return out;
}

std::map<TimeCategory, int> category_histogram(
    const std::vector<HeadlineRecord>& records, const TradingCalendar& calendar) {
    std::map<TimeCategory, int> hist{{TimeCategory::before_market, 0},
                                     {TimeCategory::during_market, 0},
                                     {TimeCategory::after_market, 0},
                                     {TimeCategory::holiday, 0},
                                     {TimeCategory::weekend, 0}};
    for (const auto& r : records)
        ++hist[categorize(to_new_york(r.timestamp_utc), calendar)];
    return hist;
}

std::string histogram_to_text(const std::map<TimeCategory, int>& hist) {
    std::string out;
    for (TimeCategory c :
         {TimeCategory::before_market, TimeCategory::during_market,
          TimeCategory::after_market, TimeCategory::holiday, TimeCategory::weekend}) {
        const auto it = hist.find(c);
        out += to_string(c) + "\t" + std::to_string(it == hist.end() ? 0 : it->second) +
               "\n";
    }
    return out;
}

Vocabulary build_vocab(const std::set<std::string>& corpus_tokens,
                       const std::string& embeddings_path) {
    std::ifstream in(embeddings_path);
    if (!in) throw std::runtime_error("cannot open embeddings file: " + embeddings_path);

    Vocabulary vocab;
    vocab.tokens.push_back("");
    vocab.rows.emplace_back();  // pad row resized once the width is known

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string token;
        ss >> token;
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (!ss.eof() || token.empty() || row.empty())
            throw std::runtime_error(embeddings_path + ":" + std::to_string(lineno) +
                                     ": malformed embedding line");
        if (vocab.dim == 0) {
            vocab.dim = static_cast<int>(row.size());
            vocab.rows[0].assign(vocab.dim, 0.0);
        } else if (static_cast<int>(row.size()) != vocab.dim) {
            throw std::runtime_error(embeddings_path + ":" + std::to_string(lineno) +
                                     ": expected " + std::to_string(vocab.dim) +
                                     " values, got " + std::to_string(row.size()));
        }
        if (corpus_tokens.count(token) && !vocab.index.count(token)) {
            vocab.index.emplace(token, static_cast<int>(vocab.tokens.size()));
            vocab.tokens.push_back(token);
            vocab.rows.push_back(std::move(row));
        }
    }
    if (vocab.dim == 0) {
        // embeddings file had no usable lines; keep an empty 0-width pad
        vocab.rows[0].clear();
    }
    return vocab;
}

Vocabulary build_vocab(const std::map<std::string, std::vector<AlignedDay>>& corpus,
                       const std::string& embeddings_path) {
    std::set<std::string> tokens;
    for (const auto& [stock, days] : corpus)
        for (const auto& day : days)
            for (const auto& headline : day.headlines)
                tokens.insert(headline.begin(), headline.end());
    return build_vocab(tokens, embeddings_path);
}

std::vector<std::vector<int>> encode_day(const AlignedDay& day, const Vocabulary& vocab,
                                         int l_n, int l_s) {
    if (l_n < 1 || l_s < 1)
        throw std::invalid_argument("encode_day needs l_n, l_s >= 1");
    std::vector<std::vector<int>> out(static_cast<std::size_t>(l_n),
                                      std::vector<int>(static_cast<std::size_t>(l_s), 0));
    const std::size_t n_headlines =
        std::min<std::size_t>(day.headlines.size(), static_cast<std::size_t>(l_n));
    for (std::size_t h = 0; h < n_headlines; ++h) {
        int col = 0;
        for (const auto& tok : day.headlines[h]) {
            if (col >= l_s) break;
            const auto it = vocab.index.find(tok);
            if (it == vocab.index.end()) continue;  // out-of-vocabulary: skip
            out[h][static_cast<std::size_t>(col++)] = it->second;
        }
    }
    return out;
}

HeadlineLoadResult load_headlines_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open headlines file: " + path);
    HeadlineLoadResult result;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto reject = [&](const std::string& why) {
            result.rejects.push_back(path + ":" + std::to_string(lineno) + ": " + why);
        };
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            reject("invalid JSON object");
            continue;
        }
        if (!j.contains("stock") || !j.contains("utc") || !j.contains("text")) {
            reject("missing stock/utc/text field");
            continue;
        }
        if (!j["stock"].is_string() || !j["utc"].is_string() || !j["text"].is_string()) {
            reject("stock/utc/text must be strings");
            continue;
        }
        HeadlineRecord rec;
        rec.stock_id = j["stock"].get<std::string>();
        rec.text = j["text"].get<std::string>();
        if (rec.text.empty()) {
            reject("empty headline text");
            continue;
        }
        try {
            rec.timestamp_utc = parse_timestamp(j["utc"].get<std::string>());
        } catch (const std::invalid_argument& ex) {
            reject(ex.what());
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

SurfaceForms load_surface_forms(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open surface-forms file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error(path + ": " + ex.what());
    }
    if (!j.is_object()) throw std::runtime_error(path + ": expected a JSON object");
    SurfaceForms forms;
    for (const auto& [stock, variants] : j.items()) {
        if (!variants.is_array() || variants.empty())
            throw std::runtime_error(path + ": stock '" + stock +
                                     "' needs a non-empty array of forms");
        for (const auto& v : variants) {
            if (!v.is_string())
                throw std::runtime_error(path + ": forms of '" + stock +
                                         "' must be strings");
            forms[stock].push_back(v.get<std::string>());
        }
    }
    return forms;
}

}  // namespace volcast
