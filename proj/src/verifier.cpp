#include "surerag/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "surerag/corpus.hpp"
#include "surerag/error.hpp"
#include "surerag/text.hpp"

namespace surerag::verifier {

void validate(const PairVerifier& v) {
    if (v.kind == VerifierKind::ingested && !v.score_source)
        fail(ErrorCode::invalid_argument, "ingested verifier requires a score source");
    if (!(v.surrogate.sharpness > 0.0) || !std::isfinite(v.surrogate.sharpness))
        fail(ErrorCode::invalid_argument, "surrogate sharpness must be finite and positive");
}

RelationDist surrogate_distribution(std::string_view /*question*/, std::string_view claim,
                                    std::string_view passage, const SurrogateParams& params) {
    const auto claim_set = text::content_token_set(claim);
    const auto passage_tokens = text::tokenize(passage);
    std::set<std::string> passage_set;
    for (const auto& t : passage_tokens)
        if (t != "n't" && !text::is_stopword(t)) passage_set.insert(t);
    const double o = text::jaccard(claim_set, passage_set);

    const std::set<std::string> cues(params.negation_cues.begin(), params.negation_cues.end());
    double g = 0.0;
    for (std::size_t i = 0; i < passage_tokens.size() && g == 0.0; ++i) {
        if (!cues.count(passage_tokens[i])) continue;
        const std::size_t lo = i >= params.negation_window ? i - params.negation_window : 0;
        const std::size_t hi = std::min(passage_tokens.size() - 1, i + params.negation_window);
        for (std::size_t j = lo; j <= hi; ++j) {
            if (j != i && claim_set.count(passage_tokens[j])) {
                g = 1.0;
                break;
            }
        }
    }

    const double raw[3] = {o * (1.0 - g), o * g, 1.0 - o};
    const double top = *std::max_element(raw, raw + 3);
    RelationDist out{};
    double z = 0.0;
    for (int i = 0; i < 3; ++i) {
        out[i] = std::exp(params.sharpness * (raw[i] - top));
        z += out[i];
    }
    for (auto& p : out) p /= z;
    return out;
}

std::vector<PairScore> score_pairs(const PairVerifier& verifier, const std::vector<ExampleRecord>& examples) {
    validate(verifier);
    std::vector<PairScore> out;

    if (verifier.kind == VerifierKind::lexical_surrogate) {
        for (const auto& ex : examples) {
            for (std::size_t c = 0; c < ex.claims.size(); ++c) {
                for (const auto& p : ex.passages) {
                    const auto d = surrogate_distribution(ex.question, ex.claims[c], p.text(), verifier.surrogate);
                    out.push_back({ex.example_id, c, p.passage_id, d[0], d[1], d[2], std::nullopt});
                }
            }
        }
        return out;
    }

    using Key = std::tuple<std::string, std::size_t, std::string>;
    std::map<Key, PairScore> by_key;
    for (auto& s : read_pair_scores(*verifier.score_source)) {
        Key key{s.example_id, s.claim_index, s.passage_id};
        if (!by_key.emplace(key, std::move(s)).second)
            fail(ErrorCode::invariant, "duplicate pair score (" + std::get<0>(key) + ", " +
                                           std::to_string(std::get<1>(key)) + ", " + std::get<2>(key) + ")");
    }
    for (const auto& ex : examples) {
        for (std::size_t c = 0; c < ex.claims.size(); ++c) {
            for (const auto& p : ex.passages) {
                auto it = by_key.find(Key{ex.example_id, c, p.passage_id});
                if (it == by_key.end())
                    fail(ErrorCode::missing_pair, "ingested scores miss (" + ex.example_id + ", " +
                                                      std::to_string(c) + ", " + p.passage_id + ")");
                out.push_back(it->second);
            }
        }
    }
    return out;
}

}  // namespace surerag::verifier
