// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/outparse.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

namespace migkit {

namespace {

constexpr std::string_view kBoxStart = "<|box_start|>";
constexpr std::string_view kBoxEnd = "<|box_end|>";

char lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) {
  const char l = lower(c);
  return l >= 'a' && l <= 'z';
}
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower(c);
  return out;
}

// Cursor-based scanner over one response.
class Scanner {
 public:
  explicit Scanner(std::string_view s, std::size_t pos = 0) : s_(s), pos_(pos) {}

  std::size_t pos() const { return pos_; }

  void skip_ws() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool eat(std::string_view lit) {
    skip_ws();
    if (s_.substr(pos_, lit.size()) == lit) {
      pos_ += lit.size();
      return true;
    }
    return false;
  }

  // [+-]?digits(.digits)?
  std::optional<double> number() {
    skip_ws();
    std::size_t p = pos_;
    bool negative = false;
    if (p < s_.size() && (s_[p] == '-' || s_[p] == '+')) {
      negative = s_[p] == '-';
      ++p;
    }
    const std::size_t start = p;
    while (p < s_.size() && is_digit(s_[p])) ++p;
    if (p == start) return std::nullopt;
    if (p + 1 < s_.size() && s_[p] == '.' && is_digit(s_[p + 1])) {
      ++p;
      while (p < s_.size() && is_digit(s_[p])) ++p;
    }
    double value = 0;
    const auto [end, ec] = std::from_chars(s_.data() + start, s_.data() + p, value,
                                           std::chars_format::fixed);
    if (ec != std::errc() || end != s_.data() + p || !std::isfinite(value)) {
      return std::nullopt;
    }
    pos_ = p;
    return negative ? -value : value;
  }

  // "(a,b)"
  std::optional<std::array<double, 2>> pair() {
    const std::size_t save = pos_;
    if (eat('(')) {
      if (auto a = number(); a && eat(',')) {
        if (auto b = number(); b && eat(')')) return std::array<double, 2>{*a, *b};
      }
    }
    pos_ = save;
    return std::nullopt;
  }

  // "(a,b),(c,d)" with an optional separating comma.
  std::optional<std::array<double, 4>> pair_of_pairs() {
    const std::size_t save = pos_;
    if (auto p = pair()) {
      eat(',');
      if (auto q = pair()) return std::array<double, 4>{(*p)[0], (*p)[1], (*q)[0], (*q)[1]};
    }
    pos_ = save;
    return std::nullopt;
  }

  // "[a, b, c, d]"
  std::optional<std::array<double, 4>> quad() {
    const std::size_t save = pos_;
    if (eat('[')) {
      std::array<double, 4> v{};
      bool ok = true;
      for (std::size_t i = 0; i < 4 && ok; ++i) {
        auto n = number();
        ok = n.has_value() && (i == 3 || eat(','));
        if (ok) v[i] = *n;
      }
      if (ok && eat(']')) return v;
    }
    pos_ = save;
    return std::nullopt;
  }

 private:
  std::string_view s_;
  std::size_t pos_;
};

struct RawMatch {
  std::size_t pos;
  std::array<double, 4> coords;
};

std::vector<RawMatch> match_tier1(std::string_view text) {
  std::vector<RawMatch> out;
  std::size_t from = 0;
  while ((from = text.find(kBoxStart, from)) != std::string_view::npos) {
    Scanner sc(text, from + kBoxStart.size());
    if (auto q = sc.pair_of_pairs(); q && sc.eat(kBoxEnd)) {
      out.push_back({from, *q});
      from = sc.pos();
    } else {
      from += kBoxStart.size();
    }
  }
  return out;
}

std::vector<RawMatch> match_tier2(std::string_view text) {
  std::vector<RawMatch> out;
  std::size_t from = 0;
  while ((from = text.find('(', from)) != std::string_view::npos) {
    Scanner sc(text, from);
    if (auto q = sc.pair_of_pairs()) {
      out.push_back({from, *q});
      from = sc.pos();
    } else {
      ++from;
    }
  }
  return out;
}

std::vector<RawMatch> match_tier3(std::string_view text) {
  std::vector<RawMatch> out;
  std::size_t from = 0;
  while ((from = text.find('[', from)) != std::string_view::npos) {
    Scanner sc(text, from);
    if (auto q = sc.quad()) {
      out.push_back({from, *q});
      from = sc.pos();
    } else {
      ++from;
    }
  }
  return out;
}

// --- image labels -----------------------------------------------------------

struct ImageLabel {
  std::size_t pos;
  std::size_t k;  // 1-based as written
};

constexpr std::array<std::string_view, 4> kImageNouns = {"image", "picture", "photo",
                                                         "frame"};

constexpr std::array<std::string_view, 10> kOrdinalWords = {
    "first", "second", "third", "fourth", "fifth",
    "sixth", "seventh", "eighth", "ninth", "tenth"};

bool word_boundary_before(std::string_view s, std::size_t pos) {
  return pos == 0 || !is_alpha(s[pos - 1]);
}

// Returns the noun length if `lower_text` has an image noun (optionally
// plural) at `pos`.
std::size_t noun_at(std::string_view lower_text, std::size_t pos) {
  for (std::string_view noun : kImageNouns) {
    if (lower_text.substr(pos, noun.size()) == noun) return noun.size();
  }
  return 0;
}

// "the second image", "2nd picture"
std::optional<ImageLabel> ordinal_at(std::string_view lt, std::size_t pos) {
  if (!word_boundary_before(lt, pos)) return std::nullopt;
  std::size_t k = 0;
  std::size_t p = pos;
  for (std::size_t i = 0; i < kOrdinalWords.size(); ++i) {
    const auto w = kOrdinalWords[i];
    if (lt.substr(pos, w.size()) == w) {
      k = i + 1;
      p = pos + w.size();
      break;
    }
  }
  if (k == 0) {
    std::size_t q = pos;
    while (q < lt.size() && q - pos < 3 && is_digit(lt[q])) ++q;
    if (q == pos) return std::nullopt;
    const auto suffix = lt.substr(q, 2);
    if (suffix != "st" && suffix != "nd" && suffix != "rd" && suffix != "th") {
      return std::nullopt;
    }
    std::from_chars(lt.data() + pos, lt.data() + q, k);
    p = q + 2;
  }
  if (p < lt.size() && is_alpha(lt[p])) return std::nullopt;
  while (p < lt.size() && is_space(lt[p])) ++p;
  if (noun_at(lt, p) == 0) return std::nullopt;
  return ImageLabel{pos, k};
}

// "image2", "image-2", "image 2", "image_2", "image #2"
std::optional<ImageLabel> numbered_at(std::string_view lt, std::size_t pos) {
  if (!word_boundary_before(lt, pos)) return std::nullopt;
  const std::size_t n = noun_at(lt, pos);
  if (n == 0) return std::nullopt;
  std::size_t p = pos + n;
  if (p < lt.size() && lt[p] == 's') ++p;
  std::size_t seps = 0;
  while (p < lt.size() && seps < 2 &&
         (lt[p] == '-' || lt[p] == '_' || lt[p] == ' ' || lt[p] == '#')) {
    ++p;
    ++seps;
  }
  const std::size_t start = p;
  while (p < lt.size() && p - start < 3 && is_digit(lt[p])) ++p;
  if (p == start || (p < lt.size() && is_digit(lt[p]))) return std::nullopt;
  std::size_t k = 0;
  std::from_chars(lt.data() + start, lt.data() + p, k);
  return ImageLabel{pos, k};
}

std::vector<ImageLabel> find_image_labels(std::string_view text) {
  const std::string lt = to_lower(text);
  std::vector<ImageLabel> out;
  for (std::size_t i = 0; i < lt.size(); ++i) {
    if (auto l = numbered_at(lt, i)) {
      out.push_back(*l);
    } else if (auto o = ordinal_at(lt, i)) {
      out.push_back(*o);
    }
  }
  return out;
}

void trim(std::string& s) {
  std::size_t b = 0;
  while (b < s.size() && is_space(s[b])) ++b;
  std::size_t e = s.size();
  while (e > b && is_space(s[e - 1])) --e;
  s = s.substr(b, e - b);
}

void erase_all(std::string& s, std::string_view token) {
  std::size_t p;
  while ((p = s.find(token)) != std::string::npos) s.erase(p, token.size());
}

bool strip_prefix_ci(std::string& s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (lower(s[i]) != prefix[i]) return false;
  }
  s.erase(0, prefix.size());
  trim(s);
  return true;
}

bool strip_quotes(std::string& s) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 6> kQuotes = {{
      {"\"", "\""},
      {"'", "'"},
      {"`", "`"},
      {"\xE2\x80\x9C", "\xE2\x80\x9D"},  // curly double
      {"\xE2\x80\x98", "\xE2\x80\x99"},  // curly single
      {"*", "*"},
  }};
  for (const auto& [open, close] : kQuotes) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) &&
        s.ends_with(close)) {
      s = s.substr(open.size(), s.size() - open.size() - close.size());
      trim(s);
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::string> ParseFlags::names() const {
  std::vector<std::string> out;
  if (has(ParseFlag::fallback_used)) out.emplace_back("fallback_used");
  if (has(ParseFlag::corners_swapped)) out.emplace_back("corners_swapped");
  if (has(ParseFlag::clamped)) out.emplace_back("clamped");
  if (has(ParseFlag::no_match)) out.emplace_back("no_match");
  return out;
}

ParseFlags ParseFlags::from_names(const std::vector<std::string>& names) {
  ParseFlags f;
  for (const auto& n : names) {
    if (n == "fallback_used") f.set(ParseFlag::fallback_used);
    else if (n == "corners_swapped") f.set(ParseFlag::corners_swapped);
    else if (n == "clamped") f.set(ParseFlag::clamped);
    else if (n == "no_match") f.set(ParseFlag::no_match);
  }
  return f;
}

ParsedAnswer parse_boxes(std::string_view text, double max_coord) {
  ParsedAnswer ans;
  ans.raw = std::string(text);

  std::vector<RawMatch> matches = match_tier1(text);
  ans.tier = 1;
  if (matches.empty()) {
    matches = match_tier2(text);
    ans.tier = 2;
  }
  if (matches.empty()) {
    matches = match_tier3(text);
    ans.tier = 3;
  }
  if (matches.empty()) {
    ans.tier = 0;
    bool blank = std::all_of(text.begin(), text.end(), is_space);
    if (!blank) ans.flags.set(ParseFlag::no_match);
    return ans;
  }
  if (ans.tier > 1) ans.flags.set(ParseFlag::fallback_used);

  const std::vector<ImageLabel> labels = find_image_labels(text);
  std::size_t next_label = 0;
  std::optional<std::size_t> current;
  for (const RawMatch& m : matches) {
    while (next_label < labels.size() && labels[next_label].pos < m.pos) {
      const std::size_t k = labels[next_label].k;
      current = k >= 1 ? std::optional<std::size_t>(k - 1) : std::nullopt;
      ++next_label;
    }
    bool clamped = false;
    bool swapped = false;
    const auto& c = m.coords;
    BBox b = clamp(BBox{c[0], c[1], c[2], c[3]}, 0.0, 0.0, max_coord, max_coord, &clamped);
    b = BBox::canonical(b.x1, b.y1, b.x2, b.y2, &swapped);
    if (clamped) ans.flags.set(ParseFlag::clamped);
    if (swapped) ans.flags.set(ParseFlag::corners_swapped);
    ans.boxes.push_back({current, b});
  }
  return ans;
}

std::optional<std::size_t> parse_image_choice(std::string_view text,
                                              std::size_t n_images) {
  for (const ImageLabel& l : find_image_labels(text)) {
    if (l.k >= 1 && l.k <= n_images) return l.k - 1;
  }
  return std::nullopt;
}

std::string extract_referring(std::string_view text) {
  std::string s(text);
  for (std::string_view tok : {"<|object_ref_start|>", "<|object_ref_end|>", "<ref>",
                               "</ref>", "<|im_end|>", "<|endoftext|>", "**"}) {
    erase_all(s, tok);
  }
  trim(s);

  static constexpr std::array<std::string_view, 9> kPrefixes = {
      "referring expression:", "expression:", "assistant:", "response:",
      "answer:",               "output:",     "object:",    "a:",
      "the answer is"};
  for (bool again = true; again;) {
    again = false;
    for (std::string_view p : kPrefixes) again = again || strip_prefix_ci(s, p);
  }

  // Only the first non-empty line carries the expression.
  if (const auto nl = s.find('\n'); nl != std::string::npos) s.resize(nl);
  trim(s);
  while (strip_quotes(s)) {
  }
  while (!s.empty() && (s.back() == '.' || s.back() == ':')) s.pop_back();
  trim(s);
  while (strip_quotes(s)) {
  }
  return s;
}

std::string format_coord(double v) {
  if (v == 0) v = 0;  // drop negative zero
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ec == std::errc() ? end : buf.data());
}

std::string render_box_token(const BBox& box) {
  std::string s(kBoxStart);
  s += '(' + format_coord(box.x1) + ',' + format_coord(box.y1) + "),(" +
       format_coord(box.x2) + ',' + format_coord(box.y2) + ')';
  s += kBoxEnd;
  return s;
}

}  // namespace migkit
