#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emgf/con_tree.hpp"
#include "emgf/graph.hpp"

namespace emgf {

enum class Polarity : std::size_t { positive = 0, neutral = 1, negative = 2 };
inline constexpr std::size_t kNumClasses = 3;

std::string_view polarity_name(Polarity p);
/// Accepts positive/neutral/negative (any case). "conflict" and anything else
/// return nullopt.
std::optional<Polarity> parse_polarity(std::string_view text);

struct AspectSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }
};

struct AspectInstance {
    std::vector<std::string> tokens;
    AspectSpan aspect;
    Polarity polarity = Polarity::neutral;
    std::vector<std::size_t> dep_heads;  // 1-based head per token, 0 = root
    std::string con_tree;
    std::vector<std::vector<double>> knowledge;  // optional per-token vectors

    std::size_t size() const { return tokens.size(); }
    std::size_t knowledge_width() const { return knowledge.empty() ? 0 : knowledge.front().size(); }
};

/// Throws DataError when any record invariant fails (span bounds, head tree,
/// tree leaves vs tokens, knowledge shape).
void validate(const AspectInstance& instance);

/// Parsed structures of one validated instance.
struct ParsedInstance {
    Adjacency dep;
    ConTree tree;
};
ParsedInstance parse_structures(const AspectInstance& instance);

struct DatasetSummary {
    std::size_t records = 0;
    std::size_t excluded_conflict = 0;
    std::array<std::size_t, kNumClasses> label_counts{};
};

/// One JSON record per line:
///   {"tokens": [...], "aspect": [begin, end], "polarity": "positive",
///    "dep_heads": [...], "con_tree": "(S ...)", "kge": [[...], ...]}
/// Blank lines are skipped; "conflict" records are excluded and counted.
/// Errors carry the 1-based line number.
std::vector<AspectInstance> read_dataset(std::istream& in, DatasetSummary* summary = nullptr);
std::vector<AspectInstance> load_dataset(const std::filesystem::path& path, DatasetSummary* summary = nullptr);

std::string to_json_line(const AspectInstance& instance);
void write_dataset(std::ostream& out, std::span<const AspectInstance> instances);
void write_dataset(const std::filesystem::path& path, std::span<const AspectInstance> instances);

}  // namespace emgf
