#include <doctest.h>

#include <set>

#include "coupledrec/dataset.hpp"
#include "support.hpp"

using namespace coupledrec;
using testsupport::TempDir;
using testsupport::write_file;

TEST_CASE("movielens ratings parser maps fields directly") {
    TempDir dir("ratings");
    write_file(dir.file("u.data"), "196\t242\t3\t881250949\n186\t302\t3\t891717742\n");
    RatingTable t = parse_movielens_ratings(dir.file("u.data"), 1, 5);
    REQUIRE(t.entries.size() == 2);
    CHECK(t.entries[0].user_id == "196");
    CHECK(t.entries[0].item_id == "242");
    CHECK(t.entries[0].rating == 3.0);
    CHECK(t.entries[0].timestamp == 881250949);
}

TEST_CASE("movielens ratings parser rejects bad input") {
    TempDir dir("ratings_bad");
    write_file(dir.file("empty"), "");
    CHECK_THROWS_AS(parse_movielens_ratings(dir.file("empty"), 1, 5), EmptyInputError);

    write_file(dir.file("range"), "1\t1\t9\t0\n");
    CHECK_THROWS_AS(parse_movielens_ratings(dir.file("range"), 1, 5), RangeError);

    write_file(dir.file("dup"), "1\t1\t3\t0\n1\t1\t4\t0\n");
    CHECK_THROWS_AS(parse_movielens_ratings(dir.file("dup"), 1, 5), DuplicateError);

    write_file(dir.file("malformed"), "1\t1\n");
    CHECK_THROWS_AS(parse_movielens_ratings(dir.file("malformed"), 1, 5), ParseError);

    CHECK_THROWS_AS(parse_movielens_ratings(dir.file("nope"), 1, 5), IoError);
}

TEST_CASE("movielens users parser derives zip prefix") {
    TempDir dir("users");
    write_file(dir.file("u.user"), "1|24|M|technician|85711\n2|53|F|other|94043\n");
    AttributeTable t = parse_movielens_users(dir.file("u.user"));
    REQUIRE(t.object_count() == 2);
    CHECK(t.cell("1", "age") == "24");
    CHECK(t.cell("1", "gender") == "M");
    CHECK(t.cell("1", "occupation") == "technician");
    CHECK(t.cell("1", "zip_prefix") == "8");
    CHECK(t.cell("2", "zip_prefix") == "9");
    CHECK(t.attributes[0].kind == AttrKind::Numeric);

    write_file(dir.file("bad"), "3|abc|M|writer|0\n");
    CHECK_THROWS_AS(parse_movielens_users(dir.file("bad")), ParseError);
}

namespace {
std::string item_line(const std::string& id, const std::string& date,
                      const std::string& flags) {
    return id + "|Some Title|" + date + "||http://example/|" + flags;
}
}  // namespace

TEST_CASE("movielens items parser derives decade and genres") {
    TempDir dir("items");
    // genre order: unknown, Action, Adventure, Animation, ...
    std::string animation = "0|0|0|1|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0";
    std::string none = "0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0";
    std::string three = "0|1|1|0|0|1|0|0|0|0|0|0|0|0|0|0|0|0|0";
    write_file(dir.file("u.item"), item_line("1", "01-Jan-1995", animation) + "\n" +
                                       item_line("2", "bogus", none) + "\n" +
                                       item_line("3", "15-Mar-1987", three) + "\n");
    AttributeTable t = parse_movielens_items(dir.file("u.item"));
    CHECK(t.cell("1", "release_decade") == "1990s");
    CHECK(t.cell("1", "genre_primary") == "Animation");
    CHECK(t.cell("1", "genre_count") == "1");
    CHECK(is_missing(t.cell("2", "release_decade")));
    CHECK(t.cell("2", "genre_primary") == "unknown");
    CHECK(t.cell("2", "genre_count") == "unknown");
    CHECK(t.cell("3", "release_decade") == "1980s");
    CHECK(t.cell("3", "genre_primary") == "Action");
    CHECK(t.cell("3", "genre_count") == "3+");

    write_file(dir.file("short"), "9|T|01-Jan-1990||u|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0\n");
    CHECK_THROWS_AS(parse_movielens_items(dir.file("short")), ParseError);
}

TEST_CASE("movielens items raw flag mode keeps all 19 genres") {
    TempDir dir("items_raw");
    std::string three = "0|1|1|0|0|1|0|0|0|0|0|0|0|0|0|0|0|0|0";
    write_file(dir.file("u.item"), item_line("1", "01-Jan-1995", three) + "\n");
    AttributeTable t = parse_movielens_items(dir.file("u.item"), true);
    CHECK(t.attribute_count() == 20);
    CHECK(t.cell("1", "genre_Action") == "1");
    CHECK(t.cell("1", "genre_Western") == "0");
}

TEST_CASE("generic csv parser") {
    TempDir dir("csv");
    write_file(dir.file("t.csv"), "id,city,sex\nu1,S,F\nu2,M,\nu3,S,M\n");
    std::vector<Attribute> schema = {{"city", AttrKind::Categorical},
                                     {"sex", AttrKind::Categorical}};
    AttributeTable t = parse_generic_csv(dir.file("t.csv"), schema);
    REQUIRE(t.object_count() == 3);
    CHECK(t.cell("u1", "city") == "S");
    CHECK(is_missing(t.cell("u2", "sex")));

    write_file(dir.file("dup.csv"), "id,city,sex\nu1,S,F\nu1,M,M\n");
    CHECK_THROWS_AS(parse_generic_csv(dir.file("dup.csv"), schema), DuplicateError);

    write_file(dir.file("hdr.csv"), "id,town,sex\nu1,S,F\n");
    CHECK_THROWS_AS(parse_generic_csv(dir.file("hdr.csv"), schema), SchemaError);
}

TEST_CASE("equal-width discretization cuts at the midpoint") {
    AttributeTable t;
    t.attributes = {{"age", AttrKind::Numeric}};
    t.add_object("a", {"24"});
    t.add_object("b", {"53"});
    t.add_object("c", {"23"});
    t.add_object("d", {"60"});
    DiscretizationSpec spec{"age", BinStrategy::EqualWidth, 2, {}};
    int bins = discretize(t, spec);
    CHECK(bins == 2);
    // cut at 23 + (60-23)/2 = 41.5
    CHECK(t.cell("a", "age") == t.cell("c", "age"));
    CHECK(t.cell("b", "age") == t.cell("d", "age"));
    CHECK(t.cell("a", "age") != t.cell("b", "age"));
    CHECK(t.attributes[0].kind == AttrKind::Categorical);
}

TEST_CASE("explicit cut points label by interval") {
    AttributeTable t;
    t.attributes = {{"age", AttrKind::Numeric}};
    t.add_object("a", {"24"});
    t.add_object("b", {"30"});
    t.add_object("c", {"55"});
    DiscretizationSpec spec{"age", BinStrategy::ExplicitCuts, 0, {30, 50}};
    discretize(t, spec);
    CHECK(t.cell("a", "age") == "<30");
    CHECK(t.cell("b", "age") == "[30,50)");
    CHECK(t.cell("c", "age") == ">=50");
}

TEST_CASE("degenerate equal-frequency input collapses to one bin") {
    AttributeTable t;
    t.attributes = {{"x", AttrKind::Numeric}};
    t.add_object("a", {"7"});
    t.add_object("b", {"7"});
    t.add_object("c", {"7"});
    DiscretizationSpec spec{"x", BinStrategy::EqualFrequency, 3, {}};
    CHECK(discretize(t, spec) == 1);
}

TEST_CASE("discretization guards") {
    AttributeTable t;
    t.attributes = {{"age", AttrKind::Numeric}, {"city", AttrKind::Categorical}};
    t.add_object("a", {"24", "S"});
    DiscretizationSpec unknown{"nope", BinStrategy::EqualWidth, 2, {}};
    CHECK_THROWS_AS(discretize(t, unknown), NotFoundError);
    DiscretizationSpec toofew{"age", BinStrategy::EqualWidth, 1, {}};
    CHECK_THROWS_AS(discretize(t, toofew), ConfigError);
    DiscretizationSpec recat{"city", BinStrategy::EqualWidth, 2, {}};
    CHECK_THROWS_AS(discretize(t, recat), PreconditionError);
    // MISSING survives discretization
    AttributeTable m;
    m.attributes = {{"age", AttrKind::Numeric}};
    m.add_object("a", {"24"});
    m.add_object("b", {""});
    m.add_object("c", {"60"});
    DiscretizationSpec spec{"age", BinStrategy::EqualWidth, 2, {}};
    discretize(m, spec);
    CHECK(is_missing(m.cell("b", "age")));
}

TEST_CASE("validate_dataset reports dangling ids and missing rates") {
    Dataset ds;
    ds.ratings.entries = {{"u1", "i1", 3.0, 0}, {"u2", "i9", 4.0, 0}};
    ds.users.attributes = {{"sex", AttrKind::Categorical}};
    ds.users.add_object("u1", {"F"});
    ds.users.add_object("u2", {""});
    ds.items.attributes = {{"genre", AttrKind::Categorical}};
    ds.items.add_object("i1", {"comedy"});
    auto r = validate_dataset(ds);
    CHECK(r.dangling_users.empty());
    REQUIRE(r.dangling_items.size() == 1);
    CHECK(r.dangling_items[0] == "i9");
    CHECK(r.user_missing_rates.at("sex") == doctest::Approx(0.5));
    CHECK_FALSE(r.clean());
}

TEST_CASE("canonical round trip preserves the dataset exactly") {
    Dataset ds;
    ds.ratings.scale_min = 1;
    ds.ratings.scale_max = 5;
    ds.ratings.entries = {{"u1", "i1", 3.5, 123}, {"u2", "i2", 1.0, 0}};
    ds.users.attributes = {{"age", AttrKind::Numeric}, {"sex", AttrKind::Categorical}};
    ds.users.add_object("u1", {"24", "F"});
    ds.users.add_object("u2", {"", "M"});
    ds.items.attributes = {{"genre", AttrKind::Categorical}};
    ds.items.add_object("i1", {"comedy"});
    ds.items.add_object("i2", {""});
    ds.environment = {{"note", "toy"}};
    TempDir dir("canon");
    save_dataset(ds, dir.str());
    Dataset back = load_dataset(dir.str());
    CHECK(back == ds);
    CHECK(dataset_digest(back) == dataset_digest(ds));
}

TEST_CASE("canonical round trip on random datasets") {
    std::mt19937_64 rng(7);
    for (int round = 0; round < 20; ++round) {
        Dataset ds;
        ds.users = testsupport::random_table(rng);
        ds.items = testsupport::random_table(rng);
        std::uniform_real_distribution<double> rating(1.0, 5.0);
        std::set<std::pair<int, int>> used;
        int n = 1 + static_cast<int>(rng() % 10);
        for (int i = 0; i < n; ++i) {
            int u = rng() % ds.users.object_count();
            int it = rng() % ds.items.object_count();
            if (!used.emplace(u, it).second) continue;
            ds.ratings.entries.push_back({ds.users.object_ids[u], ds.items.object_ids[it],
                                          rating(rng), static_cast<long long>(rng() % 1000)});
        }
        if (ds.ratings.entries.empty()) continue;
        TempDir dir("canon_rand");
        save_dataset(ds, dir.str());
        CHECK(load_dataset(dir.str()) == ds);
    }
}

TEST_CASE("parser outputs validate cleanly") {
    TempDir dir("strictset");
    write_file(dir.file("u.data"), "1\t1\t3\t0\n2\t2\t4\t0\n");
    write_file(dir.file("u.user"), "1|24|M|technician|85711\n2|53|F|other|94043\n");
    std::string none = "0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|1|0";
    write_file(dir.file("u.item"),
               item_line("1", "01-Jan-1995", none) + "\n" + item_line("2", "02-Feb-1998", none) + "\n");
    Dataset ds = load_movielens_dataset(dir.str(), true);
    CHECK(validate_dataset(ds).clean());
}

TEST_CASE("strict mode rejects dangling ids, lenient synthesizes rows") {
    TempDir dir("dangling");
    write_file(dir.file("u.data"), "1\t1\t3\t0\n9\t1\t4\t0\n");
    write_file(dir.file("u.user"), "1|24|M|technician|85711\n");
    std::string none = "0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|1|0";
    write_file(dir.file("u.item"), item_line("1", "01-Jan-1995", none) + "\n");
    CHECK_THROWS_AS(load_movielens_dataset(dir.str(), true), ValidationError);
    Dataset ds = load_movielens_dataset(dir.str(), false);
    CHECK(ds.users.object_count() == 2);
    CHECK(is_missing(ds.users.cell("9", "age")));
    CHECK(validate_dataset(ds).clean());
}
