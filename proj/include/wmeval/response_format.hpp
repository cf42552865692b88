#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "wmeval/labeler.hpp"

namespace wmeval {

enum class Category { kResidual, kLosslessSemantic, kRingSemantic };

// Exact <type> strings of the three response templates.
std::string_view category_text(Category c) noexcept;
// Short identifiers used in JSON: residual, lossless_semantic, ring_semantic.
std::string_view category_id(Category c) noexcept;
std::optional<Category> category_from_text(std::string_view text) noexcept;
std::optional<Category> category_from_id(std::string_view id) noexcept;
inline bool is_semantic(Category c) noexcept { return c != Category::kResidual; }

enum class LengthUnit { kCharacters, kWords };

struct ParsedResponse {
  std::string think;
  Category category = Category::kResidual;
  std::optional<double> residual_quality;  // two-decimal value in [1, 5]
  std::optional<SecurityFlags> flags;
  std::optional<int> semantic_quality;  // {1, 2, 3}
  std::optional<int> semantic_security;
  std::size_t raw_length = 0;

  // Throws ErrorKind::kInvariant when the category/field combination is invalid.
  void validate() const;

  // Field equality ignoring raw_length.
  bool same_fields(const ParsedResponse& other) const;
};

enum class FormatFailure {
  kMissingTag,
  kDuplicateTag,
  kWrongTagSet,
  kUnparseableValue,
  kOutOfRange,
  kTagOrder,
  kStrayText,  // non-whitespace text outside the tag blocks
};

const char* to_string(FormatFailure f) noexcept;

struct FormatVerdict {
  FormatFailure reason;
  std::string detail;
};

using ParseResult = std::variant<ParsedResponse, FormatVerdict>;

// Strict template parser. Never throws.
ParseResult parse_response(std::string_view text, LengthUnit unit = LengthUnit::kCharacters) noexcept;

// Canonical rendering: think, type, quality, then flags or security, one
// block per line. Quality is printed with two decimals.
std::string serialize_response(const ParsedResponse& resp);

// Unicode scalar count (malformed UTF-8 bytes count once each) or
// whitespace-delimited word count.
std::size_t measure_length(std::string_view text, LengthUnit unit = LengthUnit::kCharacters) noexcept;

}  // namespace wmeval
