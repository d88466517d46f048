#include "cahar/tag.h"

#include <algorithm>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "cahar/error.h"

namespace cahar {

std::string_view to_string(TagKind kind) {
  switch (kind) {
    case TagKind::kSemantic:
      return "semantic";
    case TagKind::kCultural:
      return "cultural";
  }
  return "semantic";
}

TagKind tag_kind_from_string(std::string_view name) {
  if (name == "semantic") return TagKind::kSemantic;
  if (name == "cultural") return TagKind::kCultural;
  throw DataError("unknown tag kind '" + std::string(name) + "'");
}

namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
        (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

icu::UnicodeString trim(const icu::UnicodeString& in) {
  int32_t begin = 0;
  int32_t end = in.length();
  while (begin < end) {
    const UChar32 c = in.char32At(begin);
    if (!u_isUWhiteSpace(c)) break;
    begin += U16_LENGTH(c);
  }
  while (end > begin) {
    const UChar32 c = in.char32At(end - 1);
    if (!u_isUWhiteSpace(c)) break;
    end -= U16_LENGTH(c);
  }
  return icu::UnicodeString(in, begin, end - begin);
}

}  // namespace

std::string normalize_tag_text(std::string_view raw) {
  if (!valid_utf8(raw)) {
    throw DataError("tag is not valid UTF-8");
  }
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw DataError("unicode normalizer unavailable");
  }
  icu::UnicodeString text = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  text = nfc->normalize(text, status);
  text.toLower(icu::Locale::getRoot());
  text = nfc->normalize(text, status);
  if (U_FAILURE(status)) {
    throw DataError("unicode normalization failed");
  }
  text = trim(text);
  std::string out;
  text.toUTF8String(out);
  if (out.empty()) {
    throw DataError("tag is empty after normalization");
  }
  return out;
}

Tag Tag::semantic(std::string_view raw) { return make(TagKind::kSemantic, raw); }

Tag Tag::cultural(std::string_view raw) { return make(TagKind::kCultural, raw); }

Tag Tag::make(TagKind kind, std::string_view raw) {
  return Tag(kind, normalize_tag_text(raw));
}

std::string Tag::display() const {
  if (kind_ == TagKind::kCultural) return "cultural:" + text_;
  return text_;
}

void TagSet::add(const Tag& tag, std::string_view source) {
  if (source.empty()) {
    throw DataError("tag '" + tag.display() + "' added without a source");
  }
  entries_[tag].emplace(source);
}

std::vector<Tag> TagSet::tags() const {
  std::vector<Tag> out;
  out.reserve(entries_.size());
  for (const auto& [tag, _] : entries_) out.push_back(tag);
  return out;
}

const std::set<std::string>& TagSet::sources(const Tag& tag) const {
  auto it = entries_.find(tag);
  if (it == entries_.end()) {
    throw DataError("tag '" + tag.display() + "' not in tag set of '" +
                    image_id_ + "'");
  }
  return it->second;
}

std::optional<Tag> TagSet::cultural_tag() const {
  for (const auto& [tag, _] : entries_) {
    if (tag.is_cultural()) return tag;
  }
  return std::nullopt;
}

TagSet inject_cultural_tag(const TagSet& tagset, std::string_view culture,
                           const std::vector<std::string>& registry) {
  const Tag tag = Tag::cultural(culture);
  if (std::find(registry.begin(), registry.end(), tag.text()) ==
      registry.end()) {
    throw DataError("culture '" + tag.text() + "' is not in the registry");
  }
  if (auto existing = tagset.cultural_tag()) {
    throw DataError("tag set of '" + tagset.image_id() +
                    "' already carries cultural tag '" + existing->text() +
                    "'");
  }
  TagSet out = tagset;
  out.add(tag, kCulturalProfileSource);
  return out;
}

}  // namespace cahar
