#include <filesystem>

#include "absa/common.hpp"
#include "absa/labels.hpp"
#include "doctest.h"

using namespace absa;

TEST_CASE("utf8 length counts scalar values") {
    CHECK(utf8_length("") == 0);
    CHECK(utf8_length("abc") == 3);
    CHECK(utf8_length("café") == 4);
    CHECK(utf8_length("\xF0\x9F\x98\x80") == 1);
}

TEST_CASE("to_lower handles Latin-1 capitals") {
    CHECK(to_lower("ÉÉN Keer") == "één keer");
    CHECK(to_lower_ascii("ÀB") == "Àb");
}

TEST_CASE("fnv1a matches published vectors") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("mix_seed separates streams") {
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
    CHECK(mix_seed(7, 3) == mix_seed(7, 3));
}

TEST_CASE("write_once accepts identical bytes only") {
    auto dir = std::filesystem::temp_directory_path() / "absa_test_common";
    std::filesystem::remove_all(dir);
    auto p = dir / "a.txt";
    write_once(p, "hello");
    CHECK_NOTHROW(write_once(p, "hello"));
    CHECK_THROWS_AS(write_once(p, "other"), Error);
    CHECK(read_file(p) == "hello");
    std::filesystem::remove_all(dir);
}

TEST_CASE("split and trim") {
    CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(trim("  x y \t\n") == "x y");
}

TEST_CASE("aspect names round trip") {
    for (Aspect a : kAllAspects) CHECK(parse_aspect(aspect_name(a)) == a);
    CHECK(all_aspect_sentiments().size() == 12);
    CHECK_FALSE(parse_aspect("weather"));
}

TEST_CASE("label set json") {
    LabelSet s;
    CHECK(s.key() == "no_topics");
    s.set(Aspect::Salary, Sentiment::Positive);
    s.set(Aspect::Contact, Sentiment::Negative);
    CHECK(s.size() == 2);
    auto back = label_set_from_json(to_json(s));
    CHECK(back == s);
    nlohmann::json dup = nlohmann::json::array(
        {{{"aspect", "salary"}, {"sentiment", "positive"}}, {{"aspect", "salary"}, {"sentiment", "negative"}}});
    CHECK_THROWS(label_set_from_json(dup));
}
