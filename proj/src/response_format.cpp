#include "wmeval/response_format.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "wmeval/error.hpp"

namespace wmeval {

namespace {

constexpr std::array<std::string_view, 7> kTagNames = {"think", "type",   "quality", "jpeg",
                                                        "gaussian", "filter", "security"};
enum Tag : int { kThink, kType, kQuality, kJpeg, kGaussian, kFilter, kSecurity };

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool all_space(std::string_view s) noexcept { return trim(s).empty(); }

std::string open_tag(int tag) { return "<" + std::string(kTagNames[tag]) + ">"; }
std::string close_tag(int tag) { return "</" + std::string(kTagNames[tag]) + ">"; }

struct Token {
  int tag;
  bool closing;
  std::size_t begin;  // offset of '<'
  std::size_t end;    // one past '>'
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  for (std::size_t pos = text.find('<'); pos != std::string_view::npos; pos = text.find('<', pos + 1)) {
    const bool closing = pos + 1 < text.size() && text[pos + 1] == '/';
    const std::size_t name_at = pos + (closing ? 2 : 1);
    for (int t = 0; t < static_cast<int>(kTagNames.size()); ++t) {
      const auto name = kTagNames[t];
      if (text.compare(name_at, name.size(), name) == 0 && name_at + name.size() < text.size() &&
          text[name_at + name.size()] == '>') {
        tokens.push_back({t, closing, pos, name_at + name.size() + 1});
        break;
      }
    }
  }
  return tokens;
}

struct Block {
  int tag;
  std::size_t open_begin;
  std::size_t value_begin;
  std::size_t value_end;
  std::size_t close_end;
};

FormatVerdict fail(FormatFailure reason, std::string detail) { return {reason, std::move(detail)}; }

bool all_digits(std::string_view s) noexcept {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// Digits with an optional '.' and one or two fractional digits, as hundredths.
std::optional<long long> parse_centi(std::string_view s) {
  const auto dot = s.find('.');
  const std::string_view whole = s.substr(0, dot);
  if (!all_digits(whole) || whole.size() > 12) return std::nullopt;
  long long cents = std::stoll(std::string(whole)) * 100;
  if (dot != std::string_view::npos) {
    const std::string_view frac = s.substr(dot + 1);
    if (frac.empty() || frac.size() > 2 || !all_digits(frac)) return std::nullopt;
    cents += std::stoll(std::string(frac)) * (frac.size() == 1 ? 10 : 1);
  }
  return cents;
}

std::optional<long long> parse_small_int(std::string_view s) {
  if (!all_digits(s) || s.size() > 12) return std::nullopt;
  return std::stoll(std::string(s));
}

ParseResult parse_impl(std::string_view text, LengthUnit unit) {
  const auto tokens = tokenize(text);

  std::array<std::array<bool, 2>, kTagNames.size()> seen{};
  for (const auto& tok : tokens) {
    auto& flag = seen[tok.tag][tok.closing ? 1 : 0];
    if (flag) {
      return fail(FormatFailure::kDuplicateTag,
                  "duplicate " + (tok.closing ? close_tag(tok.tag) : open_tag(tok.tag)));
    }
    flag = true;
  }

  std::vector<Block> blocks;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    if (tok.closing) {
      if (seen[tok.tag][0]) return fail(FormatFailure::kTagOrder, close_tag(tok.tag) + " before its opening tag");
      return fail(FormatFailure::kMissingTag, "missing " + open_tag(tok.tag));
    }
    if (i + 1 < tokens.size() && tokens[i + 1].tag == tok.tag && tokens[i + 1].closing) {
      blocks.push_back({tok.tag, tok.begin, tok.end, tokens[i + 1].begin, tokens[i + 1].end});
      ++i;
      continue;
    }
    if (seen[tok.tag][1]) return fail(FormatFailure::kTagOrder, "tags nested inside " + open_tag(tok.tag));
    return fail(FormatFailure::kMissingTag, "missing " + close_tag(tok.tag));
  }

  std::size_t cursor = 0;
  for (const auto& b : blocks) {
    if (!all_space(text.substr(cursor, b.open_begin - cursor))) {
      return fail(FormatFailure::kStrayText, "text outside tags before " + open_tag(b.tag));
    }
    cursor = b.close_end;
  }
  if (!all_space(text.substr(cursor))) return fail(FormatFailure::kStrayText, "trailing text after last tag");

  for (int required : {kThink, kType, kQuality}) {
    if (!seen[required][0]) return fail(FormatFailure::kMissingTag, "missing " + open_tag(required));
  }
  for (int i = 0; i < 3; ++i) {
    if (blocks[i].tag != i) {
      return fail(FormatFailure::kTagOrder, "expected " + open_tag(i) + " at block " + std::to_string(i + 1));
    }
  }

  auto value = [&](const Block& b) { return trim(text.substr(b.value_begin, b.value_end - b.value_begin)); };

  ParsedResponse resp;
  const auto category = category_from_text(value(blocks[kType]));
  if (!category) return fail(FormatFailure::kUnparseableValue, "unknown watermark type");
  resp.category = *category;

  const bool residual = resp.category == Category::kResidual;
  const std::vector<int> expected = residual ? std::vector<int>{kJpeg, kGaussian, kFilter} : std::vector<int>{kSecurity};
  for (std::size_t i = 3; i < blocks.size(); ++i) {
    const bool belongs = std::find(expected.begin(), expected.end(), blocks[i].tag) != expected.end();
    if (!belongs) {
      return fail(FormatFailure::kWrongTagSet,
                  open_tag(blocks[i].tag) + " does not belong to the " + std::string(category_id(resp.category)) +
                      " template");
    }
  }
  for (int tag : expected) {
    if (!seen[tag][0]) return fail(FormatFailure::kMissingTag, "missing " + open_tag(tag));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (blocks[3 + i].tag != expected[i]) {
      return fail(FormatFailure::kTagOrder, "expected " + open_tag(expected[i]) + " at block " + std::to_string(4 + i));
    }
  }

  const auto think = value(blocks[kThink]);
  if (think.empty()) return fail(FormatFailure::kUnparseableValue, "empty <think> text");
  resp.think = std::string(think);

  const auto quality_text = value(blocks[kQuality]);
  if (residual) {
    const auto cents = parse_centi(quality_text);
    if (!cents) return fail(FormatFailure::kUnparseableValue, "residual quality is not a decimal with <= 2 places");
    if (*cents < 100 || *cents > 500) return fail(FormatFailure::kOutOfRange, "residual quality outside [1,5]");
    resp.residual_quality = static_cast<double>(*cents) / 100.0;

    std::array<std::uint8_t, 3> flags{};
    for (int i = 0; i < 3; ++i) {
      const auto v = parse_small_int(value(blocks[3 + i]));
      if (!v) return fail(FormatFailure::kUnparseableValue, open_tag(expected[i]) + " is not an integer");
      if (*v > 1) return fail(FormatFailure::kOutOfRange, open_tag(expected[i]) + " must be 0 or 1");
      flags[i] = static_cast<std::uint8_t>(*v);
    }
    resp.flags = SecurityFlags{flags[0], flags[1], flags[2]};
  } else {
    const auto q = parse_small_int(quality_text);
    if (!q) return fail(FormatFailure::kUnparseableValue, "semantic quality is not an integer");
    if (*q < 1 || *q > 3) return fail(FormatFailure::kOutOfRange, "semantic quality outside {1,2,3}");
    const auto s = parse_small_int(value(blocks[3]));
    if (!s) return fail(FormatFailure::kUnparseableValue, "semantic security is not an integer");
    if (*s < 1 || *s > 3) return fail(FormatFailure::kOutOfRange, "semantic security outside {1,2,3}");
    resp.semantic_quality = static_cast<int>(*q);
    resp.semantic_security = static_cast<int>(*s);
  }
  resp.raw_length = measure_length(text, unit);
  return resp;
}

}  // namespace

std::string_view category_text(Category c) noexcept {
  switch (c) {
    case Category::kResidual: return "residual watermark";
    case Category::kLosslessSemantic: return "watermark-free or performance-lossless semantic watermark";
    case Category::kRingSemantic: return "semantic watermark with ring patterns";
  }
  return "";
}

std::string_view category_id(Category c) noexcept {
  switch (c) {
    case Category::kResidual: return "residual";
    case Category::kLosslessSemantic: return "lossless_semantic";
    case Category::kRingSemantic: return "ring_semantic";
  }
  return "";
}

std::optional<Category> category_from_text(std::string_view text) noexcept {
  for (auto c : {Category::kResidual, Category::kLosslessSemantic, Category::kRingSemantic}) {
    if (text == category_text(c)) return c;
  }
  return std::nullopt;
}

std::optional<Category> category_from_id(std::string_view id) noexcept {
  for (auto c : {Category::kResidual, Category::kLosslessSemantic, Category::kRingSemantic}) {
    if (id == category_id(c)) return c;
  }
  return std::nullopt;
}

const char* to_string(FormatFailure f) noexcept {
  switch (f) {
    case FormatFailure::kMissingTag: return "missing_tag";
    case FormatFailure::kDuplicateTag: return "duplicate_tag";
    case FormatFailure::kWrongTagSet: return "wrong_tag_set";
    case FormatFailure::kUnparseableValue: return "unparseable_value";
    case FormatFailure::kOutOfRange: return "out_of_range";
    case FormatFailure::kTagOrder: return "tag_order";
    case FormatFailure::kStrayText: return "stray_text";
  }
  return "unknown";
}

void ParsedResponse::validate() const {
  if (trim(think).empty() || trim(think).size() != think.size()) {
    throw Error(ErrorKind::kInvariant, "think text must be non-empty without surrounding whitespace");
  }
  if (!tokenize(think).empty()) throw Error(ErrorKind::kInvariant, "think text must not contain template tags");
  if (category == Category::kResidual) {
    if (!residual_quality || !flags || semantic_quality || semantic_security) {
      throw Error(ErrorKind::kInvariant, "residual response needs quality and three flags only");
    }
    const double q = *residual_quality;
    if (!(q >= 1.0 && q <= 5.0)) throw Error(ErrorKind::kInvariant, "residual quality outside [1,5]");
    if (std::abs(q * 100.0 - std::round(q * 100.0)) > 1e-6) {
      throw Error(ErrorKind::kInvariant, "residual quality must have at most two decimals");
    }
    if (flags->jpeg > 1 || flags->gaussian > 1 || flags->filter > 1) {
      throw Error(ErrorKind::kInvariant, "security flags must be 0 or 1");
    }
  } else {
    if (residual_quality || flags || !semantic_quality || !semantic_security) {
      throw Error(ErrorKind::kInvariant, "semantic response needs quality and security levels only");
    }
    if (*semantic_quality < 1 || *semantic_quality > 3 || *semantic_security < 1 || *semantic_security > 3) {
      throw Error(ErrorKind::kInvariant, "semantic levels must be in {1,2,3}");
    }
  }
}

bool ParsedResponse::same_fields(const ParsedResponse& o) const {
  return think == o.think && category == o.category && residual_quality == o.residual_quality &&
         flags == o.flags && semantic_quality == o.semantic_quality && semantic_security == o.semantic_security;
}

ParseResult parse_response(std::string_view text, LengthUnit unit) noexcept {
  try {
    return parse_impl(text, unit);
  } catch (const std::exception& e) {
    return FormatVerdict{FormatFailure::kUnparseableValue, e.what()};
  }
}

std::string serialize_response(const ParsedResponse& resp) {
  resp.validate();
  std::string out;
  out += "<think>" + resp.think + "</think>\n";
  out += "<type>" + std::string(category_text(resp.category)) + "</type>\n";
  if (resp.category == Category::kResidual) {
    const long long cents = std::llround(*resp.residual_quality * 100.0);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%02lld", cents / 100, cents % 100);
    out += "<quality>" + std::string(buf) + "</quality>\n";
    out += "<jpeg>" + std::to_string(resp.flags->jpeg) + "</jpeg>\n";
    out += "<gaussian>" + std::to_string(resp.flags->gaussian) + "</gaussian>\n";
    out += "<filter>" + std::to_string(resp.flags->filter) + "</filter>";
  } else {
    out += "<quality>" + std::to_string(*resp.semantic_quality) + "</quality>\n";
    out += "<security>" + std::to_string(*resp.semantic_security) + "</security>";
  }
  return out;
}

std::size_t measure_length(std::string_view text, LengthUnit unit) noexcept {
  std::size_t count = 0;
  if (unit == LengthUnit::kWords) {
    bool in_word = false;
    for (char c : text) {
      if (is_space(c)) {
        in_word = false;
      } else if (!in_word) {
        in_word = true;
        ++count;
      }
    }
    return count;
  }
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xC2 && lead <= 0xDF) {
      len = 2;
    } else if (lead >= 0xE0 && lead <= 0xEF) {
      len = 3;
    } else if (lead >= 0xF0 && lead <= 0xF4) {
      len = 4;
    }
    bool valid = i + len <= text.size();
    for (std::size_t k = 1; valid && k < len; ++k) {
      valid = (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
    }
    i += valid ? len : 1;
    ++count;
  }
  return count;
}

}  // namespace wmeval
