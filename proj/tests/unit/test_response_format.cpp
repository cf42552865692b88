#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "../support/random_responses.hpp"
#include "../support/template_oracle.hpp"
#include "wmeval/error.hpp"
#include "wmeval/response_format.hpp"

using namespace wmeval;

namespace {

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(WMEVAL_FIXTURE_DIR) + "/responses/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FormatFailure failure_of(std::string_view text) {
  const auto r = parse_response(text);
  const auto* v = std::get_if<FormatVerdict>(&r);
  EXPECT_NE(v, nullptr) << text;
  return v ? v->reason : FormatFailure::kStrayText;
}

ParsedResponse ok(std::string_view text) {
  auto r = parse_response(text);
  if (auto* v = std::get_if<FormatVerdict>(&r)) {
    ADD_FAILURE() << to_string(v->reason) << ": " << v->detail;
    return {};
  }
  return std::get<ParsedResponse>(r);
}

const std::string kResidual =
    "<think>Soft blur.</think>\n<type>residual watermark</type>\n<quality>2.72</quality>\n"
    "<jpeg>1</jpeg>\n<gaussian>0</gaussian>\n<filter>1</filter>";
const std::string kSemantic =
    "<think>Rings.</think>\n<type>semantic watermark with ring patterns</type>\n<quality>2</quality>\n"
    "<security>1</security>";

}  // namespace

TEST(Parse, ResidualTemplateExample) {
  const auto text = read_fixture("residual_example.txt");
  const auto r = ok(text);
  EXPECT_EQ(r.category, Category::kResidual);
  EXPECT_EQ(*r.residual_quality, 2.72);
  EXPECT_EQ(*r.flags, (SecurityFlags{1, 1, 1}));
  EXPECT_EQ(r.raw_length, 897u);
  EXPECT_EQ(measure_length(text, LengthUnit::kWords), 115u);
  EXPECT_TRUE(r.think.starts_with("The image presents an abstract textile-like pattern"));
  EXPECT_FALSE(r.semantic_quality.has_value());
}

TEST(Parse, LosslessTemplateExample) {
  const auto r = ok(read_fixture("lossless_example.txt"));
  EXPECT_EQ(r.category, Category::kLosslessSemantic);
  EXPECT_EQ(*r.semantic_quality, 3);
  EXPECT_EQ(*r.semantic_security, 3);
  EXPECT_EQ(r.raw_length, 869u);
  EXPECT_TRUE(r.think.starts_with("The image, a high-quality"));  // leading space trimmed
}

TEST(Parse, RingTemplateExample) {
  const auto r = ok(read_fixture("ring_example.txt"));
  EXPECT_EQ(r.category, Category::kRingSemantic);
  EXPECT_EQ(*r.semantic_quality, 1);
  EXPECT_EQ(*r.semantic_security, 1);
  EXPECT_EQ(r.raw_length, 827u);
}

TEST(Parse, WordModeLength) {
  const auto r = parse_response(kSemantic, LengthUnit::kWords);
  EXPECT_EQ(std::get<ParsedResponse>(r).raw_length, measure_length(kSemantic, LengthUnit::kWords));
}

TEST(Parse, ResidualWithSecurityTagIsWrongTagSet) {
  const std::string text =
      "<think>t</think>\n<type>residual watermark</type>\n<quality>3.10</quality>\n<security>2</security>";
  EXPECT_EQ(failure_of(text), FormatFailure::kWrongTagSet);
  const std::string sem_with_flag =
      "<think>t</think><type>semantic watermark with ring patterns</type><quality>2</quality><jpeg>1</jpeg>";
  EXPECT_EQ(failure_of(sem_with_flag), FormatFailure::kWrongTagSet);
}

TEST(Parse, FailureReasons) {
  EXPECT_EQ(failure_of(""), FormatFailure::kMissingTag);
  EXPECT_EQ(failure_of("plain prose"), FormatFailure::kStrayText);
  EXPECT_EQ(failure_of(kResidual + "\n<jpeg>1</jpeg>"), FormatFailure::kDuplicateTag);
  EXPECT_EQ(failure_of(kResidual + " thanks"), FormatFailure::kStrayText);
  EXPECT_EQ(failure_of("hi " + kResidual), FormatFailure::kStrayText);
  std::string no_filter = kResidual.substr(0, kResidual.find("\n<filter>"));
  EXPECT_EQ(failure_of(no_filter), FormatFailure::kMissingTag);
  std::string no_close = kSemantic;
  no_close.erase(no_close.find("</type>"), 7);
  EXPECT_EQ(failure_of(no_close), FormatFailure::kMissingTag);
  EXPECT_EQ(failure_of("<type>residual watermark</type><think>t</think><quality>3</quality>"
                       "<jpeg>1</jpeg><gaussian>1</gaussian><filter>1</filter>"),
            FormatFailure::kTagOrder);
  EXPECT_EQ(failure_of("<think>t</think><type>residual watermark</type><quality>3</quality>"
                       "<gaussian>1</gaussian><jpeg>1</jpeg><filter>1</filter>"),
            FormatFailure::kTagOrder);
  EXPECT_EQ(failure_of("<think>t</think></type><type>residual watermark"), FormatFailure::kTagOrder);
  EXPECT_EQ(failure_of("<think>t</think><type>residual watermarks</type><quality>3</quality>"
                       "<jpeg>1</jpeg><gaussian>1</gaussian><filter>1</filter>"),
            FormatFailure::kUnparseableValue);
  EXPECT_EQ(failure_of("<think>  </think><type>residual watermark</type><quality>3</quality>"
                       "<jpeg>1</jpeg><gaussian>1</gaussian><filter>1</filter>"),
            FormatFailure::kUnparseableValue);
}

TEST(Parse, ValueRules) {
  auto residual_with = [](const std::string& q, const std::string& flag) {
    return "<think>t</think><type>residual watermark</type><quality>" + q + "</quality><jpeg>" + flag +
           "</jpeg><gaussian>0</gaussian><filter>0</filter>";
  };
  EXPECT_EQ(*ok(residual_with(" 3.5 ", "1")).residual_quality, 3.5);
  EXPECT_EQ(*ok(residual_with("1", "0")).residual_quality, 1.0);
  EXPECT_EQ(*ok(residual_with("5.00", "0")).residual_quality, 5.0);
  EXPECT_EQ(failure_of(residual_with("5.01", "0")), FormatFailure::kOutOfRange);
  EXPECT_EQ(failure_of(residual_with("0.99", "0")), FormatFailure::kOutOfRange);
  EXPECT_EQ(failure_of(residual_with("2.725", "0")), FormatFailure::kUnparseableValue);
  EXPECT_EQ(failure_of(residual_with("2,7", "0")), FormatFailure::kUnparseableValue);
  EXPECT_EQ(failure_of(residual_with("-2", "0")), FormatFailure::kUnparseableValue);
  EXPECT_EQ(failure_of(residual_with("3.", "0")), FormatFailure::kUnparseableValue);
  EXPECT_EQ(failure_of(residual_with("1e0", "0")), FormatFailure::kUnparseableValue);
  EXPECT_EQ(failure_of(residual_with("3", "2")), FormatFailure::kOutOfRange);
  EXPECT_EQ(failure_of(residual_with("3", "yes")), FormatFailure::kUnparseableValue);
  EXPECT_EQ(failure_of(residual_with("99999999999999999999", "0")), FormatFailure::kUnparseableValue);

  auto semantic_with = [](const std::string& q, const std::string& s) {
    return "<think>t</think><type>watermark-free or performance-lossless semantic watermark</type><quality>" + q +
           "</quality><security>" + s + "</security>";
  };
  EXPECT_EQ(*ok(semantic_with("3", "2")).semantic_security, 2);
  EXPECT_EQ(failure_of(semantic_with("2.5", "2")), FormatFailure::kUnparseableValue);
  EXPECT_EQ(failure_of(semantic_with("4", "2")), FormatFailure::kOutOfRange);
  EXPECT_EQ(failure_of(semantic_with("0", "2")), FormatFailure::kOutOfRange);
  EXPECT_EQ(failure_of(semantic_with("2", "")), FormatFailure::kUnparseableValue);
}

TEST(Parse, FirstFailureInDocumentOrderForValues) {
  // both quality and a flag are bad: quality comes first
  EXPECT_EQ(failure_of("<think>t</think><type>residual watermark</type><quality>9</quality>"
                       "<jpeg>x</jpeg><gaussian>0</gaussian><filter>0</filter>"),
            FormatFailure::kOutOfRange);
}

TEST(Serialize, CanonicalLayout) {
  ParsedResponse r;
  r.think = "Looks clean.";
  r.category = Category::kRingSemantic;
  r.semantic_quality = 2;
  r.semantic_security = 2;
  const auto s = serialize_response(r);
  EXPECT_NE(s.find("<quality>2</quality>"), std::string::npos);
  EXPECT_NE(s.find("<security>2</security>"), std::string::npos);
  EXPECT_EQ(s,
            "<think>Looks clean.</think>\n<type>semantic watermark with ring patterns</type>\n"
            "<quality>2</quality>\n<security>2</security>");

  ParsedResponse q;
  q.think = "t";
  q.residual_quality = 2.72;
  q.flags = SecurityFlags{1, 0, 1};
  EXPECT_NE(serialize_response(q).find("<quality>2.72</quality>"), std::string::npos);
  q.residual_quality = 4.1;
  EXPECT_NE(serialize_response(q).find("<quality>4.10</quality>"), std::string::npos);
  EXPECT_EQ(*ok(serialize_response(q)).residual_quality, 4.1);
}

TEST(Serialize, RejectsInvalidResponses) {
  ParsedResponse r;
  r.think = "t";
  EXPECT_THROW(serialize_response(r), Error);  // residual without fields
  r.residual_quality = 5.5;
  r.flags = SecurityFlags{};
  EXPECT_THROW(serialize_response(r), Error);
  r.residual_quality = 2.725;
  EXPECT_THROW(serialize_response(r), Error);
  r.residual_quality = 2.5;
  r.semantic_quality = 2;
  EXPECT_THROW(serialize_response(r), Error);
  ParsedResponse s;
  s.think = "has <type> inside";
  s.category = Category::kLosslessSemantic;
  s.semantic_quality = 1;
  s.semantic_security = 1;
  EXPECT_THROW(serialize_response(s), Error);
  s.think = " padded";
  EXPECT_THROW(serialize_response(s), Error);
}

TEST(RoundTrip, GeneratedResponses) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const auto r = support::random_valid_response(rng);
    const auto text = serialize_response(r);
    const auto back = ok(text);
    EXPECT_TRUE(back.same_fields(r)) << text;
    EXPECT_EQ(back.raw_length, measure_length(text));
    EXPECT_EQ(serialize_response(back), text);
  }
}

TEST(Fuzz, MutationsAgreeWithOracle) {
  std::mt19937_64 rng(2718);
  int accepted = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto base = serialize_response(support::random_valid_response(rng));
    const auto text = oracle::mutate(base, rng);
    const auto got = parse_response(text);
    const auto want = oracle::accept(text);
    const auto* resp = std::get_if<ParsedResponse>(&got);
    ASSERT_EQ(resp != nullptr, want.has_value()) << text;
    if (resp) {
      ++accepted;
      EXPECT_EQ(resp->think, want->think);
      EXPECT_EQ(static_cast<int>(resp->category), want->category);
    }
  }
  EXPECT_GT(accepted, 100);
}

TEST(Fuzz, TotalOnArbitraryBytes) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 5000; ++i) {
    std::string s(rng() % 200, '\0');
    for (auto& c : s) c = static_cast<char>(rng() % 256);
    const auto r = parse_response(s);
    EXPECT_EQ(std::holds_alternative<ParsedResponse>(r), oracle::accept(s).has_value());
  }
}

TEST(MeasureLength, Examples) {
  EXPECT_EQ(measure_length(""), 0u);
  EXPECT_EQ(measure_length("", LengthUnit::kWords), 0u);
  EXPECT_EQ(measure_length("abc def"), 7u);
  EXPECT_EQ(measure_length("abc def", LengthUnit::kWords), 2u);
  EXPECT_EQ(measure_length("  a\tb\n\nc  ", LengthUnit::kWords), 3u);
  EXPECT_EQ(measure_length("caf\xc3\xa9"), 4u);
  EXPECT_EQ(measure_length("\xe6\xb0\xb4\xe5\x8d\xb0"), 2u);
  EXPECT_EQ(measure_length("\xf0\x9f\x98\x80!"), 2u);
  EXPECT_EQ(measure_length("\xff\xfe"), 2u);
  EXPECT_EQ(measure_length("\xc3"), 1u);
  EXPECT_EQ(measure_length("\xe6\xb0x"), 3u);
}

TEST(Category, TextAndIds) {
  for (auto c : {Category::kResidual, Category::kLosslessSemantic, Category::kRingSemantic}) {
    EXPECT_EQ(category_from_text(category_text(c)), c);
    EXPECT_EQ(category_from_id(category_id(c)), c);
  }
  EXPECT_FALSE(category_from_text("Residual watermark").has_value());
  EXPECT_FALSE(category_from_id("semantic").has_value());
}
