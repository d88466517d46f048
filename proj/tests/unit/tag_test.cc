#include <doctest.h>

#include "cahar/error.h"
#include "cahar/tag.h"

using namespace cahar;

TEST_CASE("tag text is trimmed, lowercased and NFC-composed") {
  CHECK(normalize_tag_text("  Bed\t") == "bed");
  CHECK(normalize_tag_text("BEDROOM") == "bedroom");
  // e + combining acute composes to a single code point.
  CHECK(normalize_tag_text("Cafe\xCC\x81") == "caf\xC3\xA9");
  // U+3000 ideographic space is whitespace too.
  CHECK(normalize_tag_text("\xE3\x80\x80" "Futon") == "futon");
  CHECK(normalize_tag_text("sliding door") == "sliding door");
}

TEST_CASE("normalization is idempotent") {
  const char* samples[] = {"  Bed ",   "ÉCOLE",         "Cafe\xCC\x81",
                           "ǅungla",   "\xEF\xAC\x81le", "İstanbul",
                           "ΣΟΦΙΑ",    "tatami mat",    " Schlafzimmer\n"};
  for (const char* s : samples) {
    const std::string once = normalize_tag_text(s);
    CHECK(normalize_tag_text(once) == once);
  }
}

TEST_CASE("empty and invalid tag text is rejected") {
  CHECK_THROWS_AS(normalize_tag_text(""), Error);
  CHECK_THROWS_AS(normalize_tag_text(" \t\n"), Error);
  CHECK_THROWS_AS(normalize_tag_text("\xFF\xFE"), Error);
}

TEST_CASE("tag sets deduplicate after normalization and keep every source") {
  TagSet s("img");
  s.add(Tag::semantic("Room"), "clarifai");
  s.add(Tag::semantic(" room "), "google");
  s.add(Tag::semantic("bed"), "google");
  CHECK(s.size() == 2);
  CHECK(s.sources(Tag::semantic("room")) ==
        std::set<std::string>{"clarifai", "google"});
  CHECK_THROWS_AS(s.add(Tag::semantic("x"), ""), Error);
}

TEST_CASE("semantic and cultural tags with the same text are distinct") {
  TagSet s("img");
  s.add(Tag::semantic("japanese"), "p");
  s.add(Tag::cultural("japanese"), "p");
  CHECK(s.size() == 2);
  CHECK(s.cultural_tag() == Tag::cultural("japanese"));
  CHECK(Tag::cultural("japanese").display() == "cultural:japanese");
}

TEST_CASE("inject_cultural_tag") {
  const std::vector<std::string> registry{"european", "japanese"};
  TagSet s("img");
  s.add(Tag::semantic("bed"), "p");
  s.add(Tag::semantic("room"), "p");

  const TagSet injected = inject_cultural_tag(s, "european", registry);
  CHECK(injected.size() == 3);
  CHECK(injected.contains(Tag::cultural("european")));
  CHECK_FALSE(injected.contains(Tag::cultural("japanese")));
  CHECK(injected.sources(Tag::cultural("european")) ==
        std::set<std::string>{std::string(kCulturalProfileSource)});
  CHECK(s.size() == 2);

  SUBCASE("twice is an error") {
    CHECK_THROWS_AS(inject_cultural_tag(injected, "japanese", registry), Error);
  }
  SUBCASE("unknown culture is an error") {
    CHECK_THROWS_AS(inject_cultural_tag(s, "mexican", registry), Error);
  }
  SUBCASE("empty semantic evidence is allowed") {
    const TagSet only = inject_cultural_tag(TagSet("e"), "japanese", registry);
    CHECK(only.tags() == std::vector<Tag>{Tag::cultural("japanese")});
  }
}
