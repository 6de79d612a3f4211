#include "emgf/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "emgf/errors.hpp"

namespace emgf {

using nlohmann::json;

std::string_view polarity_name(Polarity p) {
    switch (p) {
        case Polarity::positive: return "positive";
        case Polarity::neutral: return "neutral";
        case Polarity::negative: return "negative";
    }
    return "?";
}

std::optional<Polarity> parse_polarity(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "positive") return Polarity::positive;
    if (lower == "neutral") return Polarity::neutral;
    if (lower == "negative") return Polarity::negative;
    return std::nullopt;
}

void validate(const AspectInstance& inst) {
    const std::size_t n = inst.size();
    if (n == 0) throw DataError("instance has no tokens");
    if (inst.aspect.begin >= inst.aspect.end || inst.aspect.end > n)
        throw DataError("aspect span [" + std::to_string(inst.aspect.begin) + ", " + std::to_string(inst.aspect.end) +
                        ") is empty or outside [0, " + std::to_string(n) + ")");
    if (inst.dep_heads.size() != n)
        throw DataError("dep_heads has " + std::to_string(inst.dep_heads.size()) + " entries for " +
                        std::to_string(n) + " tokens");
    validate_dep_heads(inst.dep_heads);
    parse_bracketed(inst.con_tree, inst.tokens);
    if (!inst.knowledge.empty()) {
        if (inst.knowledge.size() != n)
            throw DataError("kge has " + std::to_string(inst.knowledge.size()) + " rows for " + std::to_string(n) +
                            " tokens");
        const std::size_t width = inst.knowledge.front().size();
        if (width == 0) throw DataError("kge rows are empty");
        for (std::size_t i = 0; i < n; ++i)
            if (inst.knowledge[i].size() != width)
                throw DataError("kge row " + std::to_string(i) + " has width " +
                                std::to_string(inst.knowledge[i].size()) + ", expected " + std::to_string(width));
    }
}

ParsedInstance parse_structures(const AspectInstance& inst) {
    return ParsedInstance{build_dep_adj(inst.dep_heads), parse_bracketed(inst.con_tree, inst.tokens)};
}

namespace {

AspectInstance from_json(const json& j) {
    AspectInstance inst;
    inst.tokens = j.at("tokens").get<std::vector<std::string>>();
    const auto span = j.at("aspect").get<std::vector<std::size_t>>();
    if (span.size() != 2) throw DataError("aspect must be [begin, end]");
    inst.aspect = {span[0], span[1]};
    inst.dep_heads = j.at("dep_heads").get<std::vector<std::size_t>>();
    inst.con_tree = j.at("con_tree").get<std::string>();
    if (auto it = j.find("kge"); it != j.end() && !it->is_null())
        inst.knowledge = it->get<std::vector<std::vector<double>>>();
    return inst;
}

}  // namespace

std::vector<AspectInstance> read_dataset(std::istream& in, DatasetSummary* summary) {
    std::vector<AspectInstance> out;
    DatasetSummary local;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
        try {
            const json j = json::parse(line);
            const std::string label = j.at("polarity").get<std::string>();
            const auto polarity = parse_polarity(label);
            if (!polarity) {
                std::string lower = label;
                std::transform(lower.begin(), lower.end(), lower.begin(),
                               [](unsigned char c) { return std::tolower(c); });
                if (lower == "conflict") {
                    ++local.excluded_conflict;
                    continue;
                }
                throw DataError("unknown polarity '" + label + "'");
            }
            AspectInstance inst = from_json(j);
            inst.polarity = *polarity;
            validate(inst);
            ++local.label_counts[static_cast<std::size_t>(inst.polarity)];
            out.push_back(std::move(inst));
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    local.records = out.size();
    if (out.empty() && local.excluded_conflict == 0) std::cerr << "warning: dataset contains no records\n";
    if (summary) *summary = local;
    return out;
}

std::vector<AspectInstance> load_dataset(const std::filesystem::path& path, DatasetSummary* summary) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset " + path.string());
    return read_dataset(in, summary);
}

std::string to_json_line(const AspectInstance& inst) {
    json j;
    j["tokens"] = inst.tokens;
    j["aspect"] = {inst.aspect.begin, inst.aspect.end};
    j["polarity"] = std::string(polarity_name(inst.polarity));
    j["dep_heads"] = inst.dep_heads;
    j["con_tree"] = inst.con_tree;
    if (!inst.knowledge.empty()) j["kge"] = inst.knowledge;
    return j.dump();
}

void write_dataset(std::ostream& out, std::span<const AspectInstance> instances) {
    for (const auto& inst : instances) out << to_json_line(inst) << '\n';
}

void write_dataset(const std::filesystem::path& path, std::span<const AspectInstance> instances) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_dataset(out, instances);
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace emgf
