#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ttsprep/errors.hpp"
#include "ttsprep/utf8.hpp"

namespace ttsprep {

struct NotHangulSyllable : Error {
  using Error::Error;
};

struct IndexOutOfRange : Error {
  using Error::Error;
};

struct EmptyText : Error {
  using Error::Error;
};

struct UnsupportedCharacter : Error {
  char32_t codepoint;
  std::size_t byte_offset;
  UnsupportedCharacter(char32_t cp, std::size_t offset)
      : Error("unsupported character U+" + [](char32_t c) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "%04X", static_cast<unsigned>(c));
          return std::string(buf);
        }(cp) + " at byte " + std::to_string(offset)),
        codepoint(cp),
        byte_offset(offset) {}
};

// Precomposed Hangul syllables and their Unicode arithmetic.
inline constexpr char32_t kHangulBase = 0xAC00;
inline constexpr char32_t kHangulEnd = 0xD7A3;
inline constexpr int kOnsetCount = 19;
inline constexpr int kNucleusCount = 21;
inline constexpr int kCodaCount = 28;  // index 0 is the empty coda

inline bool is_hangul_syllable(char32_t cp) { return cp >= kHangulBase && cp <= kHangulEnd; }

struct JamoIndices {
  int onset = 0;
  int nucleus = 0;
  int coda = 0;
};

inline JamoIndices decompose_syllable(char32_t cp) {
  if (!is_hangul_syllable(cp))
    throw NotHangulSyllable("codepoint U+" + std::to_string(static_cast<uint32_t>(cp)) +
                            " is not a precomposed Hangul syllable");
  const int s = static_cast<int>(cp - kHangulBase);
  return {s / 588, (s % 588) / 28, s % 28};
}

inline char32_t compose_syllable(int onset, int nucleus, int coda) {
  if (onset < 0 || onset >= kOnsetCount) throw IndexOutOfRange("onset index out of range");
  if (nucleus < 0 || nucleus >= kNucleusCount) throw IndexOutOfRange("nucleus index out of range");
  if (coda < 0 || coda >= kCodaCount) throw IndexOutOfRange("coda index out of range");
  return kHangulBase + static_cast<char32_t>(588 * onset + 28 * nucleus + coda);
}

// Symbol inventory: id 0 is padding, then 19 onsets, 21 nuclei, 28 codas
// (the empty coda keeps a slot but is never emitted), then the permitted
// non-Hangul extras. Jamo symbols use the conjoining-jamo codepoints, which
// keeps onset and coda consonants distinct.
class SymbolTable {
 public:
  static SymbolTable standard() {
    SymbolTable t;
    t.symbols_.push_back("<pad>");
    for (int i = 0; i < kOnsetCount; ++i)
      t.symbols_.push_back(detail::utf8_of(0x1100 + static_cast<char32_t>(i)));
    for (int i = 0; i < kNucleusCount; ++i)
      t.symbols_.push_back(detail::utf8_of(0x1161 + static_cast<char32_t>(i)));
    t.symbols_.push_back("<nocoda>");
    for (int i = 1; i < kCodaCount; ++i)
      t.symbols_.push_back(detail::utf8_of(0x11A7 + static_cast<char32_t>(i)));
    static constexpr std::array<char32_t, 7> punct = {U' ', U'.', U',', U'?', U'!', U'"', U'\''};
    for (char32_t c : punct) t.push_extra(c);
    for (char32_t c = U'0'; c <= U'9'; ++c) t.push_extra(c);
    return t;
  }

  int onset_id(int i) const { return 1 + i; }
  int nucleus_id(int i) const { return 1 + kOnsetCount + i; }
  int coda_id(int i) const { return 1 + kOnsetCount + kNucleusCount + i; }

  // -1 when the codepoint is not a permitted extra.
  int extra_id(char32_t cp) const {
    const auto it = extras_.find(cp);
    return it == extras_.end() ? -1 : it->second;
  }
  int space_id() const { return extra_id(U' '); }

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(int id) const { return symbols_[static_cast<std::size_t>(id)]; }
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  void push_extra(char32_t cp) {
    extras_[cp] = static_cast<int>(symbols_.size());
    symbols_.push_back(detail::utf8_of(cp));
  }

  std::vector<std::string> symbols_;
  std::map<char32_t, int> extras_;
};

struct GraphemeSequence {
  std::vector<int> ids;
  std::string source_text;
};

// Turns a sentence into grapheme IDs. Hangul syllables emit onset and nucleus
// always and the coda only when present; whitespace runs collapse to a single
// space symbol and edge whitespace is dropped; anything outside the table is
// rejected with its position.
inline GraphemeSequence text_to_graphemes(std::string_view text, const SymbolTable& table) {
  GraphemeSequence seq;
  seq.source_text = std::string(text);

  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t at = pos;
    const char32_t cp = detail::utf8_next(text, pos);
    if (cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\v' || cp == U'\f') {
      pending_space = !seq.ids.empty();
      continue;
    }
    if (pending_space) {
      seq.ids.push_back(table.space_id());
      pending_space = false;
    }
    if (is_hangul_syllable(cp)) {
      const auto jamo = decompose_syllable(cp);
      seq.ids.push_back(table.onset_id(jamo.onset));
      seq.ids.push_back(table.nucleus_id(jamo.nucleus));
      if (jamo.coda != 0) seq.ids.push_back(table.coda_id(jamo.coda));
      continue;
    }
    const int extra = table.extra_id(cp);
    if (extra < 0) throw UnsupportedCharacter(cp, at);
    seq.ids.push_back(extra);
  }
  if (seq.ids.empty()) throw EmptyText("no symbols left after whitespace normalization");
  return seq;
}

}  // namespace ttsprep
