#ifndef CAHAR_TAG_H_
#define CAHAR_TAG_H_

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cahar {

// Semantic tags come from vision providers; cultural tags encode the
// cultural profile of the depicted person. Declaration order is the
// vocabulary sort order.
enum class TagKind {
  kSemantic = 0,
  kCultural = 1,
};

std::string_view to_string(TagKind kind);
TagKind tag_kind_from_string(std::string_view name);

// Trims Unicode whitespace, lowercases (root locale) and applies NFC.
// Idempotent. Throws DataError on invalid UTF-8 or an empty result.
std::string normalize_tag_text(std::string_view raw);

class Tag {
 public:
  static Tag semantic(std::string_view raw);
  static Tag cultural(std::string_view raw);
  static Tag make(TagKind kind, std::string_view raw);

  const std::string& text() const { return text_; }
  TagKind kind() const { return kind_; }
  bool is_cultural() const { return kind_ == TagKind::kCultural; }

  // "bed" or "cultural:japanese"; for messages and CSV output only.
  std::string display() const;

  friend auto operator<=>(const Tag& a, const Tag& b) {
    if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
    return a.text_ <=> b.text_;
  }
  friend bool operator==(const Tag& a, const Tag& b) = default;

 private:
  Tag(TagKind kind, std::string text) : kind_(kind), text_(std::move(text)) {}

  TagKind kind_;
  std::string text_;
};

// Normalized tags observed for one image, each attributed to the providers
// that reported it.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(std::string image_id) : image_id_(std::move(image_id)) {}

  const std::string& image_id() const { return image_id_; }

  // Adds `tag` (or merges the attribution when already present).
  void add(const Tag& tag, std::string_view source);

  bool contains(const Tag& tag) const { return entries_.count(tag) > 0; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::vector<Tag> tags() const;
  const std::set<std::string>& sources(const Tag& tag) const;
  const std::map<Tag, std::set<std::string>>& entries() const {
    return entries_;
  }

  std::optional<Tag> cultural_tag() const;

  friend bool operator==(const TagSet&, const TagSet&) = default;

 private:
  std::string image_id_;
  std::map<Tag, std::set<std::string>> entries_;
};

// Returns a copy of `tagset` carrying the cultural tag for `culture`.
// Throws DataError when the culture is not registered or the set already
// holds a cultural tag.
TagSet inject_cultural_tag(const TagSet& tagset, std::string_view culture,
                           const std::vector<std::string>& registry);

// Source name attributed to injected cultural tags.
inline constexpr std::string_view kCulturalProfileSource = "cultural-profile";

}  // namespace cahar

#endif  // CAHAR_TAG_H_
