#include "surerag/builder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "surerag/error.hpp"
#include "surerag/kv.hpp"
#include "surerag/random.hpp"
#include "surerag/text.hpp"

namespace surerag::builder {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(AnswerType t) {
    switch (t) {
    case AnswerType::entity: return "entity";
    case AnswerType::number: return "number";
    case AnswerType::date: return "date";
    case AnswerType::yesno: return "yesno";
    case AnswerType::other: return "other";
    }
    return "other";
}

AnswerType parse_answer_type(std::string_view s) {
    for (auto t : {AnswerType::entity, AnswerType::number, AnswerType::date, AnswerType::yesno,
                   AnswerType::other}) {
        if (to_string(t) == s) return t;
    }
    fail(ErrorCode::parse, "unknown answer_type '" + std::string(s) + "'");
}

std::string_view to_string(PerturbationKind k) {
    switch (k) {
    case PerturbationKind::entity_swap: return "entity_swap";
    case PerturbationKind::number_change: return "number_change";
    case PerturbationKind::date_shift: return "date_shift";
    case PerturbationKind::yesno_flip: return "yesno_flip";
    }
    return "entity_swap";
}

namespace {

std::vector<const Passage*> gold_passages(const SourceQuestion& src) {
    std::vector<const Passage*> out;
    for (const auto& p : src.candidate_passages)
        if (p.origin == Origin::gold_support) out.push_back(&p);
    return out;
}

std::vector<const Passage*> distractor_pool(const SourceQuestion& src) {
    std::vector<const Passage*> out;
    for (const auto& p : src.candidate_passages)
        if (p.origin != Origin::gold_support) out.push_back(&p);
    return out;
}

bool starts_with_not(std::string_view s) {
    return text::to_lower(s.substr(0, std::min<std::size_t>(4, s.size()))) == "not ";
}

}  // namespace

void validate(const SourceQuestion& src) {
    auto bad = [&](const std::string& why) {
        fail(ErrorCode::invariant, "source '" + src.source_id + "': " + why);
    };
    if (src.answer.empty()) bad("answer must be non-empty");
    if (gold_passages(src).size() < 2) bad("needs at least two gold supporting passages");
    std::set<std::string_view> ids;
    for (const auto& p : src.candidate_passages) {
        surerag::validate(p);
        if (!ids.insert(p.passage_id).second) bad("duplicate passage_id '" + p.passage_id + "'");
    }
    for (const auto& fact : src.gold_facts) {
        const bool found = std::any_of(src.candidate_passages.begin(), src.candidate_passages.end(),
                                       [&](const Passage& p) {
                                           return p.title == fact.title &&
                                                  std::find(p.sentences.begin(), p.sentences.end(),
                                                            fact.sentence) != p.sentences.end();
                                       });
        if (!found) bad("gold fact '" + fact.title + "' does not resolve to a candidate sentence");
    }
}

std::vector<SourceQuestion> read_sources(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "' for reading");
    std::vector<SourceQuestion> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            SourceQuestion s;
            s.source_id = j.at("source_id").get<std::string>();
            s.question = j.at("question").get<std::string>();
            s.answer = j.at("answer").get<std::string>();
            s.answer_type = parse_answer_type(j.value("answer_type", std::string{"other"}));
            for (const auto& f : j.at("gold_facts")) {
                if (f.is_array())
                    s.gold_facts.push_back({f.at(0).get<std::string>(), f.at(1).get<std::string>()});
                else
                    s.gold_facts.push_back({f.at("title").get<std::string>(), f.at("sentence").get<std::string>()});
            }
            for (const auto& pj : j.at("passages")) {
                Passage p;
                p.passage_id = pj.at("passage_id").get<std::string>();
                p.title = pj.value("title", std::string{});
                p.sentences = pj.at("sentences").get<std::vector<std::string>>();
                if (auto it = pj.find("retrieval_score"); it != pj.end() && !it->is_null())
                    p.retrieval_score = it->get<double>();
                p.origin = parse_origin(pj.value("origin", std::string{"distractor"}));
                s.candidate_passages.push_back(std::move(p));
            }
            out.push_back(std::move(s));
        } catch (const json::exception& e) {
            fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            if (e.code() != ErrorCode::parse) throw;
            fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        validate(out.back());
    }
    return out;
}

void write_sources(const std::vector<SourceQuestion>& sources, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    for (const auto& s : sources) {
        json j;
        j["source_id"] = s.source_id;
        j["question"] = s.question;
        j["answer"] = s.answer;
        j["answer_type"] = to_string(s.answer_type);
        json facts = json::array();
        for (const auto& f : s.gold_facts) facts.push_back({{"title", f.title}, {"sentence", f.sentence}});
        j["gold_facts"] = std::move(facts);
        json ps = json::array();
        for (const auto& p : s.candidate_passages) {
            json pj;
            pj["passage_id"] = p.passage_id;
            pj["title"] = p.title;
            pj["sentences"] = p.sentences;
            if (p.retrieval_score) pj["retrieval_score"] = *p.retrieval_score;
            pj["origin"] = surerag::to_string(p.origin);
            ps.push_back(std::move(pj));
        }
        j["passages"] = std::move(ps);
        out << j.dump() << '\n';
    }
    if (!out) fail(ErrorCode::io, "write failed for '" + path.string() + "'");
}

bool is_valid_replacement(std::string_view original, std::string_view replacement) {
    if (replacement.empty()) return false;
    if (text::to_lower(original) == text::to_lower(replacement)) return false;
    return !starts_with_not(replacement);
}

std::optional<std::string> shift_numeral(std::string_view s, long delta, bool year_only) {
    std::size_t i = 0;
    while (i < s.size()) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (!year_only || j - i == 4) {
            if (j - i > 15) return std::nullopt;
            const long value = std::stol(std::string(s.substr(i, j - i)));
            const long shifted = value + delta;
            if (shifted < 0) return std::nullopt;
            std::string out(s.substr(0, i));
            out += std::to_string(shifted);
            out += s.substr(j);
            return out;
        }
        i = j;
    }
    return std::nullopt;
}

std::optional<PerturbationSpec> perturb_answer(const std::string& answer, AnswerType type,
                                               const SourceQuestion& src, std::uint64_t rng_seed) {
    if (answer.empty()) fail(ErrorCode::invalid_argument, "perturb_answer: empty answer");
    Rng rng(rng_seed);

    if (type == AnswerType::yesno) {
        const auto lower = text::to_lower(answer);
        std::string flipped;
        if (lower == "yes") flipped = "no";
        else if (lower == "no") flipped = "yes";
        else return std::nullopt;
        if (std::isupper(static_cast<unsigned char>(answer[0])))
            flipped[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(flipped[0])));
        return PerturbationSpec{PerturbationKind::yesno_flip, answer, flipped};
    }

    // Numeric shifts: candidate deltas in a seeded order, first valid wins.
    auto numeric = [&](PerturbationKind kind, long span, bool year_only) -> std::optional<PerturbationSpec> {
        std::vector<long> deltas;
        for (long d = -span; d <= span; ++d)
            if (d != 0) deltas.push_back(d);
        rng.shuffle(deltas);
        for (long d : deltas) {
            auto shifted = shift_numeral(answer, d, year_only);
            if (shifted && is_valid_replacement(answer, *shifted))
                return PerturbationSpec{kind, answer, *shifted};
        }
        return std::nullopt;
    };
    if (shift_numeral(answer, 0, true)) return numeric(PerturbationKind::date_shift, 5, true);
    if (shift_numeral(answer, 0, false)) return numeric(PerturbationKind::number_change, 3, false);

    std::vector<std::string> titles;
    std::set<std::string> seen;
    for (const auto* p : distractor_pool(src)) {
        if (p->title.empty()) continue;
        if (seen.insert(text::to_lower(p->title)).second) titles.push_back(p->title);
    }
    rng.shuffle(titles);
    for (const auto& t : titles) {
        if (is_valid_replacement(answer, t)) return PerturbationSpec{PerturbationKind::entity_swap, answer, t};
    }
    return std::nullopt;
}

std::string group_id_for(const SourceQuestion& src) { return "g-" + src.source_id; }

std::vector<ExampleRecord> build_variants(const SourceQuestion& src, std::uint64_t rng_seed,
                                          std::vector<std::string>& notes, const BuildOptions& options) {
    validate(src);
    Rng rng(mix_seed(rng_seed, src.source_id));
    const std::string group = group_id_for(src);

    const auto golds = gold_passages(src);
    const auto pool = distractor_pool(src);

    auto make = [&](Condition c, std::vector<Passage> passages, const std::string& answer) {
        ExampleRecord r;
        r.example_id = group + ":" + std::string(surerag::to_string(c));
        r.group_id = group;
        r.split = Split::train;
        r.condition = c;
        r.question = src.question;
        r.answer = answer;
        r.claims = {answer};
        r.passages = std::move(passages);
        r.label = expected_label(c);
        return r;
    };

    std::vector<Passage> full;
    for (const auto* p : golds) full.push_back(*p);
    for (const auto* p : pool) {
        Passage d = *p;
        d.origin = Origin::distractor;
        full.push_back(std::move(d));
    }
    rng.shuffle(full);

    const std::string removed = golds[rng.index(golds.size())]->passage_id;
    std::vector<Passage> partial;
    for (const auto& p : full)
        if (p.passage_id != removed) partial.push_back(p);

    std::vector<ExampleRecord> out;
    out.push_back(make(Condition::full, full, src.answer));
    out.push_back(make(Condition::partial, std::move(partial), src.answer));

    if (pool.empty()) {
        notes.push_back(src.source_id + ": hard_insufficient omitted (empty distractor pool)");
        notes.push_back(src.source_id + ": irrelevant omitted (empty distractor pool)");
    } else {
        const auto query = text::content_token_set(src.question + " " + src.answer);
        std::vector<std::pair<double, const Passage*>> ranked;
        for (const auto* p : pool) ranked.emplace_back(text::jaccard(text::content_token_set(p->text()), query), p);
        const std::size_t k = options.evidence_k ? std::min(options.evidence_k, pool.size())
                                                 : std::max<std::size_t>(1, pool.size() / 2);

        auto desc = ranked;
        std::stable_sort(desc.begin(), desc.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<Passage> hard;
        for (std::size_t i = 0; i < k; ++i) {
            Passage p = *desc[i].second;
            p.origin = Origin::overlap_substitute;
            hard.push_back(std::move(p));
        }
        out.push_back(make(Condition::hard_insufficient, std::move(hard), src.answer));

        auto asc = ranked;
        std::stable_sort(asc.begin(), asc.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<Passage> irrelevant;
        for (std::size_t i = 0; i < k; ++i) {
            Passage p = *asc[i].second;
            p.origin = Origin::distractor;
            irrelevant.push_back(std::move(p));
        }
        out.push_back(make(Condition::irrelevant, std::move(irrelevant), src.answer));
    }

    const auto perturbation =
        perturb_answer(src.answer, src.answer_type, src, mix_seed(rng_seed, src.source_id + "/perturb"));
    if (perturbation) {
        out.push_back(make(Condition::refuted, full, perturbation->replacement));
    } else {
        notes.push_back(src.source_id + ": refuted omitted (no valid perturbation of '" + src.answer + "')");
    }
    return out;
}

std::vector<PairLabel> derive_pair_labels(const std::vector<ExampleRecord>& records,
                                          const std::map<std::string, SourceQuestion>& src_map) {
    std::vector<PairLabel> out;
    for (const auto& r : records) {
        auto it = src_map.find(r.group_id);
        if (it == src_map.end())
            fail(ErrorCode::invariant, "example '" + r.example_id + "': no source question for group '" +
                                           r.group_id + "'");
        std::set<std::string> gold_ids;
        for (const auto* p : gold_passages(it->second)) gold_ids.insert(p->passage_id);
        for (std::size_t c = 0; c < r.claims.size(); ++c) {
            for (const auto& p : r.passages) {
                Relation rel = Relation::neutral;
                if (gold_ids.count(p.passage_id))
                    rel = r.condition == Condition::refuted ? Relation::refute : Relation::support;
                out.push_back({r.example_id, c, p.passage_id, rel});
            }
        }
    }
    return out;
}

std::map<std::string, Split> assign_splits(const std::vector<std::string>& groups,
                                           const SplitRatios& ratios, std::uint64_t rng_seed) {
    if (groups.empty()) fail(ErrorCode::invalid_argument, "assign_splits: empty group list");
    double sum = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r))
            fail(ErrorCode::invalid_argument, "assign_splits: ratios must be positive");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::invalid_argument, "assign_splits: ratios must sum to 1");

    std::vector<std::string> order;
    std::set<std::string> seen;
    for (const auto& g : groups)
        if (seen.insert(g).second) order.push_back(g);
    Rng rng(mix_seed(rng_seed, "splits"));
    rng.shuffle(order);

    const auto n = static_cast<double>(order.size());
    const auto n_train = static_cast<std::size_t>(std::floor(n * ratios[0] + 1e-9));
    const auto n_dev = static_cast<std::size_t>(std::floor(n * ratios[1] + 1e-9));
    std::map<std::string, Split> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        Split s = i < n_train ? Split::train : (i < n_train + n_dev ? Split::dev : Split::test);
        out.emplace(order[i], s);
    }
    return out;
}

double audit_prefix_not(const std::vector<ExampleRecord>& records) {
    std::size_t refuted = 0, prefixed = 0;
    for (const auto& r : records) {
        if (r.condition != Condition::refuted) continue;
        ++refuted;
        if (starts_with_not(r.answer)) ++prefixed;
    }
    return refuted ? static_cast<double>(prefixed) / static_cast<double>(refuted) : 0.0;
}

BuildResult build_benchmark(const std::vector<SourceQuestion>& sources, std::uint64_t seed,
                            const SplitRatios& ratios, const BuildOptions& options) {
    BuildResult result;
    std::map<std::string, SourceQuestion> src_map;
    std::vector<std::string> groups;
    for (const auto& src : sources) {
        const auto group = group_id_for(src);
        if (!src_map.emplace(group, src).second)
            fail(ErrorCode::invariant, "duplicate source_id '" + src.source_id + "'");
        groups.push_back(group);
        auto variants = build_variants(src, seed, result.notes, options);
        for (auto& v : variants) result.examples.push_back(std::move(v));
    }
    const auto splits = assign_splits(groups, ratios, seed);
    for (auto& r : result.examples) r.split = splits.at(r.group_id);
    result.pair_labels = derive_pair_labels(result.examples, src_map);
    result.prefix_not_rate = audit_prefix_not(result.examples);

    for (auto c : all_conditions) result.counts["condition." + std::string(surerag::to_string(c))] = 0;
    for (auto s : {Split::train, Split::dev, Split::test}) result.counts["split." + std::string(surerag::to_string(s))] = 0;
    for (auto l : {Relation::support, Relation::refute, Relation::neutral})
        result.counts["pairs." + std::string(surerag::to_string(l))] = 0;
    for (const auto& r : result.examples) {
        ++result.counts["condition." + std::string(surerag::to_string(r.condition))];
        ++result.counts["split." + std::string(surerag::to_string(r.split))];
    }
    for (const auto& p : result.pair_labels) ++result.counts["pairs." + std::string(surerag::to_string(p.label))];
    result.counts["examples"] = result.examples.size();
    result.counts["groups"] = groups.size();
    return result;
}

void write_build_manifest(const BuildResult& result, std::uint64_t seed, const SplitRatios& ratios,
                          const fs::path& path) {
    kv::Document doc;
    doc.set("seed", std::to_string(seed));
    doc.set("split_ratios", kv::join_doubles({ratios.begin(), ratios.end()}));
    for (const auto& [key, value] : result.counts) doc.set("count." + key, std::to_string(value));
    doc.set("prefix_not_rate", kv::format_double(result.prefix_not_rate));
    for (std::size_t i = 0; i < result.notes.size(); ++i) doc.set("omitted." + std::to_string(i), result.notes[i]);
    doc.write(path);
}

// ---------------------------------------------------------------------------
// Scripted sources

namespace {

constexpr std::array<std::string_view, 24> first_names = {
    "Alma", "Bruno", "Celia", "Dorian", "Edith", "Felix", "Greta", "Hugo",
    "Ingrid", "Jonas", "Klara", "Lucian", "Mira", "Nils", "Olga", "Pavel",
    "Quinn", "Rosa", "Stefan", "Tilda", "Ulrich", "Vera", "Walter", "Yvonne"};
constexpr std::array<std::string_view, 24> surnames = {
    "Ashford", "Brandt", "Castell", "Dunmore", "Everly", "Falk", "Gorman", "Halloway",
    "Ivers", "Jablonski", "Kerrigan", "Lindqvist", "Marlow", "Novak", "Osgood", "Pryor",
    "Quill", "Ravensworth", "Sandoval", "Thorne", "Underhill", "Vance", "Whitcombe", "Zeller"};
constexpr std::array<std::string_view, 24> cities = {
    "Arlenport", "Brixholm", "Caldmoor", "Dunvale", "Eastmere", "Fernwick", "Glenhaven", "Harrowgate",
    "Islebridge", "Jorvik Falls", "Kestrel Bay", "Lowmarsh", "Millbrook", "Northwold", "Oakhurst", "Pinecrest",
    "Queensford", "Redcliff", "Stonehaven", "Thornbury", "Upton Vale", "Westerly", "Yarrowdale", "Zennor"};
constexpr std::array<std::string_view, 16> org_roots = {
    "Aurora", "Beacon", "Cobalt", "Delta", "Ember", "Falcon", "Granite", "Harbor",
    "Ironwood", "Juniper", "Keystone", "Lumen", "Meridian", "Nimbus", "Orion", "Pioneer"};
constexpr std::array<std::string_view, 8> org_kinds = {
    "Systems", "Foods", "Textiles", "Analytics", "Robotics", "Publishing", "Shipping", "Pharma"};
constexpr std::array<std::string_view, 8> activities = {
    "spoke at a trade fair in", "opened a gallery in", "wrote a memoir about", "restored a chapel in",
    "hosted a radio show in", "coached a rowing club in", "funded a library in", "painted murals in"};

template <std::size_t N>
std::string pick(Rng& rng, const std::array<std::string_view, N>& arr) {
    return std::string(arr[rng.index(N)]);
}

struct World {
    Rng& rng;
    std::set<std::string> used;

    template <typename F>
    std::string fresh(F make) {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            auto s = make();
            if (used.insert(s).second) return s;
        }
        fail(ErrorCode::invalid_argument, "scripted sources: name space exhausted");
    }
    std::string person() { return fresh([&] { return pick(rng, first_names) + " " + pick(rng, surnames); }); }
    std::string city() { return fresh([&] { return pick(rng, cities); }); }
    std::string org() { return fresh([&] { return pick(rng, org_roots) + " " + pick(rng, org_kinds); }); }
    std::string year() { return std::to_string(1850 + rng.index(150)); }
    std::string count() { return std::to_string(40 + 10 * rng.index(90)); }
};

}  // namespace

std::vector<SourceQuestion> make_scripted_sources(std::size_t n, std::uint64_t seed) {
    std::vector<SourceQuestion> out;
    out.reserve(n);
    for (std::size_t q = 0; q < n; ++q) {
        Rng rng(mix_seed(seed, "scripted/" + std::to_string(q)));
        World w{rng, {}};
        SourceQuestion s;
        s.source_id = "s" + std::to_string(q);
        std::size_t pid = 0;
        auto add = [&](std::string title, std::vector<std::string> sentences, Origin origin) {
            Passage p;
            p.passage_id = s.source_id + "-p" + std::to_string(pid++);
            p.title = std::move(title);
            p.sentences = std::move(sentences);
            p.retrieval_score = rng.uniform();
            p.origin = origin;
            s.candidate_passages.push_back(std::move(p));
        };
        auto gold = [&](const std::string& title, std::vector<std::string> sentences, std::size_t fact) {
            s.gold_facts.push_back({title, sentences[fact]});
            add(title, std::move(sentences), Origin::gold_support);
        };

        const std::string founder = w.person();
        const std::string company = w.org();
        const std::string city = w.city();
        const std::string year = w.year();

        switch (q % 4) {
        case 0:  // bridge entity
            s.question = "In which city is the company founded by " + founder + " headquartered?";
            s.answer = city;
            s.answer_type = AnswerType::entity;
            gold(founder, {founder + " is a businessperson.", founder + " founded " + company + " in " + year + "."}, 1);
            gold(company, {company + " is a private company.", company + " is headquartered in " + city + "."}, 1);
            break;
        case 1: {  // founding year
            s.question = "In what year was the company headquartered in " + city + " founded?";
            s.answer = year;
            s.answer_type = AnswerType::date;
            gold(company, {company + " is headquartered in " + city + ".", company + " makes specialty goods."}, 0);
            gold(founder, {founder + " is an industrialist.", founder + " founded " + company + " in " + year + "."}, 1);
            break;
        }
        case 2: {  // head count
            const std::string staff = w.count();
            s.question = "How many people work for the company founded by " + founder + "?";
            s.answer = staff;
            s.answer_type = AnswerType::number;
            gold(founder, {founder + " is an engineer.", founder + " founded " + company + " in " + year + "."}, 1);
            gold(company, {company + " employs " + staff + " people.", company + " exports worldwide."}, 0);
            break;
        }
        default: {  // comparison
            const std::string other = w.person();
            const bool same = rng.index(2) == 0;
            const std::string other_city = same ? city : w.city();
            s.question = "Were " + founder + " and " + other + " born in the same city?";
            s.answer = same ? "yes" : "no";
            s.answer_type = AnswerType::yesno;
            gold(founder, {founder + " was born in " + city + ".", founder + " studied chemistry."}, 0);
            gold(other, {other + " was born in " + other_city + ".", other + " became a violinist."}, 0);
            break;
        }
        }

        // Eight distractors: two near-misses mentioning question entities,
        // the rest about unrelated people, cities and companies.
        add(founder + " (disambiguation)",
            {"Another " + founder.substr(0, founder.find(' ')) + " " + pick(rng, activities) + " " + w.city() + "."},
            Origin::distractor);
        {
            const std::string c2 = w.city();
            add(c2, {c2 + " is a town near " + city + ".", c2 + " hosts a yearly market."}, Origin::distractor);
        }
        for (int d = 0; d < 6; ++d) {
            switch (d % 3) {
            case 0: {
                const std::string p = w.person();
                add(p, {p + " " + pick(rng, activities) + " " + w.city() + "."}, Origin::distractor);
                break;
            }
            case 1: {
                const std::string c = w.city();
                add(c, {c + " lies on the river " + pick(rng, org_roots) + ".", "Its population grew after " + w.year() + "."},
                    Origin::distractor);
                break;
            }
            default: {
                const std::string o = w.org();
                add(o, {o + " was listed in " + w.year() + ".", o + " is based in " + w.city() + "."}, Origin::distractor);
                break;
            }
            }
        }
        validate(s);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace surerag::builder
