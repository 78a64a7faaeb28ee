#ifndef COUPLEDREC_DATASET_HPP
#define COUPLEDREC_DATASET_HPP

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "coupledrec/errors.hpp"

namespace coupledrec {

/// Missing cells are stored as the empty string.
inline const std::string kMissing;

inline bool is_missing(const std::string& cell) { return cell.empty(); }

struct RatingEntry {
    std::string user_id;
    std::string item_id;
    double rating = 0.0;
    long long timestamp = 0;

    bool operator==(const RatingEntry&) const = default;
};

/// Table A: the explicit user-item rating information.
struct RatingTable {
    std::vector<RatingEntry> entries;
    double scale_min = 1.0;
    double scale_max = 5.0;

    bool operator==(const RatingTable&) const = default;
};

enum class AttrKind { Categorical, Numeric };

struct Attribute {
    std::string name;
    AttrKind kind = AttrKind::Categorical;

    bool operator==(const Attribute&) const = default;
};

/// Tables B and C: one row per object, one cell per attribute.
/// Numeric cells hold the decimal text of the value until discretized.
class AttributeTable {
public:
    std::vector<std::string> object_ids;
    std::vector<Attribute> attributes;
    /// cells[object][attribute]; empty string means MISSING.
    std::vector<std::vector<std::string>> cells;

    bool operator==(const AttributeTable& other) const {
        return object_ids == other.object_ids && attributes == other.attributes &&
               cells == other.cells;
    }

    std::size_t object_count() const { return object_ids.size(); }
    std::size_t attribute_count() const { return attributes.size(); }

    int object_index(const std::string& id) const;     // -1 if absent
    int attribute_index(const std::string& name) const;  // -1 if absent

    const std::string& cell(const std::string& object_id, const std::string& attr) const;

    /// Appends a row; throws DuplicateError on a repeated id.
    void add_object(const std::string& id, std::vector<std::string> row);

    void rebuild_index();

private:
    std::unordered_map<std::string, int> id_index_;
};

enum class BinStrategy { EqualWidth, EqualFrequency, ExplicitCuts };

struct DiscretizationSpec {
    std::string attribute_name;
    BinStrategy strategy = BinStrategy::EqualWidth;
    int bin_count = 0;
    std::vector<double> cut_points;  // for ExplicitCuts, ascending
};

/// The four-table bundle: ratings (A), users (B), items (C) and the
/// environment stub (E). Table D is derived by the coupling module.
struct Dataset {
    RatingTable ratings;
    AttributeTable users;
    AttributeTable items;
    std::map<std::string, std::string> environment;

    bool operator==(const Dataset&) const = default;
};

struct ValidationReport {
    std::vector<std::string> dangling_users;  // user ids in ratings absent from users
    std::vector<std::string> dangling_items;
    std::map<std::string, double> user_missing_rates;  // per attribute
    std::map<std::string, double> item_missing_rates;
    int scale_violations = 0;

    bool clean() const {
        return dangling_users.empty() && dangling_items.empty() && scale_violations == 0;
    }
    std::string to_text() const;
};

// --- ingestion ---

/// Tab-separated "user item rating timestamp" lines (MovieLens u.data).
RatingTable parse_movielens_ratings(const std::string& path,
                                    double scale_min, double scale_max);

/// Pipe-separated "user|age|gender|occupation|zip" lines (MovieLens u.user).
AttributeTable parse_movielens_users(const std::string& path);

/// Pipe-separated u.item lines with 19 trailing genre flags. Attributes are
/// derived: release decade, primary genre, genre-count bucket. With
/// raw_genre_flags each of the 19 flags becomes its own 0/1 attribute instead.
AttributeTable parse_movielens_items(const std::string& path, bool raw_genre_flags = false);

/// Header row must match the schema; first column is the object id.
AttributeTable parse_generic_csv(const std::string& path,
                                 const std::vector<Attribute>& schema);

/// Loads u.data/u.user/u.item from a MovieLens 100K directory. With strict,
/// dangling ids are an error; otherwise missing attribute rows are synthesized
/// with all cells MISSING.
Dataset load_movielens_dataset(const std::string& dir, bool strict = false);

// --- transforms ---

/// Replaces a numeric attribute by categorical bin labels. Idempotence is by
/// rejection: an already-categorical attribute is an error. Returns the number
/// of distinct bins actually produced (a degenerate input can collapse to one).
int discretize(AttributeTable& table, const DiscretizationSpec& spec);

ValidationReport validate_dataset(const Dataset& ds);

// --- canonical on-disk format ---
// One directory with ratings.tsv, users.tsv, items.tsv and manifest.txt.

void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

/// FNV-1a over the canonical rating serialization; stable across runs.
std::string dataset_digest(const Dataset& ds);

}  // namespace coupledrec

#endif
