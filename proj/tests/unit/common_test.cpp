#include "doctest.h"

#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "common/money.hpp"
#include "common/text.hpp"

#include <random>

using namespace ouro;

TEST_CASE("money parses and prints exact decimals") {
    CHECK(Money::parse("3").to_string() == "3.00");
    CHECK(Money::parse("$0.712").to_string() == "0.712");
    CHECK(Money::parse("-0.000001").pico() == -1'000'000);
    CHECK(Money::parse("1.25").to_string(1) == "1.3");
    CHECK(Money::parse("0.0049").to_string(2) == "0.00");
    CHECK_THROWS_AS(Money::parse("1.2.3"), Error);
    CHECK_THROWS_AS(Money::parse("0.0000000000001"), Error);
}

TEST_CASE("money sums are order independent") {
    std::mt19937_64 rng(7);
    std::vector<Money> xs;
    for (int i = 0; i < 200; ++i) xs.push_back(Money::from_pico(static_cast<std::int64_t>(rng() % 1'000'000'007)));
    Money fwd, rev;
    for (auto m : xs) fwd += m;
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) rev += *it;
    CHECK(fwd == rev);
}

TEST_CASE("token rate from dollars per million") {
    auto r = TokenRate::per_million("3");
    CHECK(r.pico_per_token() == 3'000'000);
    CHECK(r.cost(1'000'000).to_string() == "3.00");
    CHECK(TokenRate::per_million("0.30").cost(10).pico() == 3'000'000);
    CHECK(TokenRate::per_million("15").per_million_string() == "15.00");
    CHECK_THROWS_AS(TokenRate::per_million("0.0000001"), Error);
}

TEST_CASE("template filling") {
    CHECK(text::fill_template("a {x} {{y}}", {{"x", "1"}}) == "a 1 {y}");
    CHECK(text::template_slots("{a} {b} {{c}}") == std::set<std::string>{"a", "b"});
    CHECK_THROWS_AS(text::fill_template("{bogus}", {}), Error);
}

TEST_CASE("utf8 prefix never splits a code point") {
    std::string s = "ab\xc3\xa9";  // "abé"
    CHECK(text::utf8_prefix_length(s, 3) == 2);
    CHECK(text::utf8_prefix_length(s, 4) == 4);
    CHECK(text::utf8_prefix_length(s, 10) == 4);
}

TEST_CASE("split_lines keeps interior empties") {
    CHECK(text::split_lines("a\n\nb\n") == std::vector<std::string>{"a", "", "b"});
    CHECK(text::split_lines("").empty());
    CHECK(text::split_lines("x") == std::vector<std::string>{"x"});
}

TEST_CASE("copy_tree and hash_tree") {
    fsx::TempDir tmp;
    auto src = tmp.path() / "src";
    fsx::write_file(src / "a.txt", "hello");
    fsx::write_file(src / "sub" / "b.txt", "world");
    fsx::copy_tree(src, tmp.path() / "dst");
    CHECK(fsx::hash_tree(src) == fsx::hash_tree(tmp.path() / "dst"));
    fsx::write_file(tmp.path() / "dst" / "a.txt", "changed");
    CHECK(fsx::hash_tree(src) != fsx::hash_tree(tmp.path() / "dst"));
    CHECK(fsx::read_file(src / "a.txt") == "hello");
}
