#pragma once

// UTF-8 helpers. All offsets in this library count Unicode scalar values,
// never bytes, so spans stay valid regardless of how the text is encoded.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>
#include <unicode/utf8.h>

#include "adg/error.hpp"

namespace adg {

/// Half-open [start, end) range of scalar-value offsets.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t width() const noexcept { return end > start ? end - start : 0; }
  bool empty() const noexcept { return end <= start; }
  bool contains(const Span& other) const noexcept {
    return start <= other.start && other.end <= end;
  }
  bool overlaps(const Span& other) const noexcept {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Strict decode: ill-formed sequences, surrogates and overlongs throw invalid-utf8.
inline std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t at = i;
    UChar32 cp = 0;
    U8_NEXT(bytes, i, length, cp);
    if (cp < 0) throw Error("invalid-utf8", "malformed UTF-8 at byte " + std::to_string(at));
    out.push_back(static_cast<char32_t>(cp));
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(cp), error);
  if (error) throw Error("invalid-utf8", "not a Unicode scalar value: " + std::to_string(static_cast<uint32_t>(cp)));
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

inline std::string to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) append_utf8(out, cp);
  return out;
}

inline std::size_t scalar_length(std::string_view utf8) { return to_u32(utf8).size(); }

/// Substring by scalar offsets. Throws `span-out-of-range` if the span does not
/// lie inside the text.
inline std::string slice(std::string_view utf8, const Span& span) {
  const auto text = to_u32(utf8);
  if (span.start > span.end || span.end > text.size()) {
    throw Error("span-out-of-range", "span [" + std::to_string(span.start) + ", " +
                                         std::to_string(span.end) + ") exceeds text length " +
                                         std::to_string(text.size()));
  }
  return to_utf8(std::u32string_view(text).substr(span.start, span.width()));
}

inline bool is_space(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0; }

/// NFKC, lowercase, collapse whitespace runs to one ASCII space, trim.
/// Full-width Latin/digits fold to ASCII and half-width katakana to
/// full-width, which is what makes lexical matching usable on Japanese text.
inline std::u32string normalize_for_matching(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw Error("icu-failure", u_errorName(status));
  const auto source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString folded = nfkc->normalize(source, status);
  if (U_FAILURE(status)) throw Error("icu-failure", u_errorName(status));
  folded.toLower(icu::Locale::getRoot());
  std::string bytes;
  folded.toUTF8String(bytes);

  std::u32string out;
  bool pending_space = false;
  for (char32_t cp : to_u32(bytes)) {
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(cp);
  }
  return out;
}

}  // namespace adg
