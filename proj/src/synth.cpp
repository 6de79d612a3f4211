#include "emgf/synth.hpp"

#include <random>
#include <string>

namespace emgf {

namespace {

const char* lexicon_prefix(Polarity p) {
    switch (p) {
    case Polarity::positive: return "pos";
    case Polarity::neutral: return "neu";
    case Polarity::negative: return "neg";
    }
    return "?";
}

std::vector<double> knowledge_row(const std::string& token) {
    std::vector<double> v(kSynthKnowledgeWidth, 0.0);
    if (auto c = lexicon_class(token)) v[static_cast<std::size_t>(*c)] = 1.0;
    else if (token.rfind("asp", 0) == 0) v[3] = 1.0;
    return v;
}

}  // namespace

std::optional<Polarity> lexicon_class(std::string_view token) {
    for (Polarity p : {Polarity::positive, Polarity::neutral, Polarity::negative}) {
        const std::string_view prefix = lexicon_prefix(p);
        if (token.size() > prefix.size() && token.substr(0, prefix.size()) == prefix &&
            token.find_first_not_of("0123456789", prefix.size()) == std::string_view::npos)
            return p;
    }
    return std::nullopt;
}

std::vector<AspectInstance> synthesize(const SynthOptions& options) {
    if (options.instances == 0 || options.vocab == 0) throw ConfigError("synth: counts must be positive");
    std::mt19937_64 rng(options.seed);
    auto word = [&](const char* prefix) {
        return prefix + std::to_string(std::uniform_int_distribution<std::size_t>(0, options.vocab - 1)(rng));
    };
    auto pick_class = [&] { return static_cast<Polarity>(std::uniform_int_distribution<int>(0, 2)(rng)); };
    auto coin = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };

    std::vector<AspectInstance> out;
    for (std::size_t k = 0; k < options.instances; ++k) {
        const Polarity gold = pick_class();
        const Polarity other = static_cast<Polarity>((static_cast<int>(gold) + 1 + (coin(0.5) ? 1 : 0)) % 3);
        const bool target_first = coin(0.5);
        const Polarity first_class = target_first ? gold : other;
        const Polarity second_class = target_first ? other : gold;
        const std::string asp1 = word("asp"), asp2 = word("asp");
        const std::string op1 = word(lexicon_prefix(first_class)), op2 = word(lexicon_prefix(second_class));

        AspectInstance inst;
        inst.polarity = gold;
        if (options.compact) {
            // asp1 op1 but op2 asp2 .
            inst.tokens = {asp1, op1, "but", op2, asp2, "."};
            inst.dep_heads = {0, 1, 1, 5, 1, 1};
            inst.con_tree = "(S (S (NP (NN " + asp1 + ")) (ADJP (JJ " + op1 + "))) (CC but) (NP (ADJP (JJ " + op2 +
                            ")) (NN " + asp2 + ")) (. .))";
            inst.aspect = target_first ? AspectSpan{0, 1} : AspectSpan{4, 5};
        } else {
            const bool int1 = coin(0.3), int2 = coin(0.3);
            std::vector<std::string>& t = inst.tokens;
            std::vector<std::size_t>& h = inst.dep_heads;
            std::string first_adjp = "(ADJP ";
            t.push_back(asp1);
            h.push_back(0);
            if (int1) {
                const std::string w = word("int");
                t.push_back(w);
                h.push_back(3);  // modifies op1 at position 3
                first_adjp += "(RB " + w + ") ";
            }
            t.push_back(op1);
            h.push_back(1);
            first_adjp += "(JJ " + op1 + "))";
            const std::size_t has_pos = t.size() + 3;  // 1-based index of "has"
            for (const char* fn : {",", "but"}) {
                t.push_back(fn);
                h.push_back(1);
            }
            t.push_back("has");
            h.push_back(1);
            const std::size_t asp2_pos = has_pos + 3 + (int2 ? 1 : 0);
            t.push_back("a");
            h.push_back(asp2_pos);
            std::string second_adjp = "(ADJP ";
            if (int2) {
                const std::string w = word("int");
                t.push_back(w);
                h.push_back(asp2_pos - 1);
                second_adjp += "(RB " + w + ") ";
            }
            t.push_back(op2);
            h.push_back(asp2_pos);
            second_adjp += "(JJ " + op2 + "))";
            t.push_back(asp2);
            h.push_back(has_pos);
            t.push_back(".");
            h.push_back(1);
            inst.con_tree = "(S (S (NP (NN " + asp1 + ")) " + first_adjp + ") (, ,) (CC but) (VP (VBZ has) (NP (DT a) " +
                            second_adjp + " (NN " + asp2 + "))) (. .))";
            inst.aspect = target_first ? AspectSpan{0, 1} : AspectSpan{asp2_pos - 1, asp2_pos};
        }
        if (options.knowledge)
            for (const auto& tok : inst.tokens) inst.knowledge.push_back(knowledge_row(tok));
        validate(inst);
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace emgf
