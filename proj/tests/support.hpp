#ifndef COUPLEDREC_TESTS_SUPPORT_HPP
#define COUPLEDREC_TESTS_SUPPORT_HPP

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "coupledrec/dataset.hpp"

namespace testsupport {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("coupledrec_" + tag + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

/// The six-user reference table used across the similarity tests:
/// u1(F,S) u2(F,S) u3(F,M) u4(F,M) u5(M,S) u6(M,S), attributes gender, city.
inline coupledrec::AttributeTable reference_t6() {
    coupledrec::AttributeTable t;
    t.attributes = {{"gender", coupledrec::AttrKind::Categorical},
                    {"city", coupledrec::AttrKind::Categorical}};
    t.add_object("u1", {"F", "S"});
    t.add_object("u2", {"F", "S"});
    t.add_object("u3", {"F", "M"});
    t.add_object("u4", {"F", "M"});
    t.add_object("u5", {"M", "S"});
    t.add_object("u6", {"M", "S"});
    return t;
}

/// Random small categorical table; values drawn from per-attribute alphabets,
/// with an optional missing-cell probability.
inline coupledrec::AttributeTable random_table(std::mt19937_64& rng, int max_objects = 8,
                                               int max_attrs = 3, int max_values = 3,
                                               double missing_prob = 0.1) {
    coupledrec::AttributeTable t;
    std::uniform_int_distribution<int> nobj(1, max_objects), nattr(1, max_attrs),
        nval(1, max_values);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int attrs = nattr(rng);
    for (int a = 0; a < attrs; ++a)
        t.attributes.push_back({"a" + std::to_string(a), coupledrec::AttrKind::Categorical});
    int objects = nobj(rng);
    int values = nval(rng);
    for (int o = 0; o < objects; ++o) {
        std::vector<std::string> row;
        for (int a = 0; a < attrs; ++a) {
            if (unit(rng) < missing_prob)
                row.push_back("");
            else
                row.push_back("v" + std::to_string(std::uniform_int_distribution<int>(
                                        0, values - 1)(rng)));
        }
        t.add_object("o" + std::to_string(o), std::move(row));
    }
    return t;
}

}  // namespace testsupport

#endif
