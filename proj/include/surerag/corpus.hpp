#pragma once

// Line-delimited record I/O for examples, pair scores, pair-label stubs and
// predictions, plus the join of pair scores onto examples.

#include <filesystem>
#include <string>
#include <vector>

#include "surerag/types.hpp"

namespace surerag {

// m x k relation distributions for one example: rows are claims in
// claim_index order, columns follow the example's passage order.
struct ScoreMatrix {
    std::size_t claims = 0;
    std::size_t passages = 0;
    std::vector<RelationDist> cells;

    const RelationDist& at(std::size_t claim, std::size_t passage) const {
        return cells[claim * passages + passage];
    }
    RelationDist& at(std::size_t claim, std::size_t passage) {
        return cells[claim * passages + passage];
    }
};

// One matrix per example, aligned with the example list passed to join_scores.
using ScoreMatrixSet = std::vector<ScoreMatrix>;

std::vector<ExampleRecord> read_examples(const std::filesystem::path& path);
void write_examples(const std::vector<ExampleRecord>& records, const std::filesystem::path& path);

std::vector<PairScore> read_pair_scores(const std::filesystem::path& path);
void write_pair_scores(const std::vector<PairScore>& scores, const std::filesystem::path& path);

std::vector<PairLabel> read_pair_labels(const std::filesystem::path& path);
void write_pair_labels(const std::vector<PairLabel>& labels, const std::filesystem::path& path);

std::vector<DecisionOutcome> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::vector<DecisionOutcome>& preds, const std::filesystem::path& path);

// Throws missing_pair for the first absent (example, claim, passage) triple
// and invariant for orphan or duplicate scores.
ScoreMatrixSet join_scores(const std::vector<ExampleRecord>& examples,
                           const std::vector<PairScore>& scores);

// Throws invariant when one group_id appears under two splits.
void check_group_disjoint(const std::vector<ExampleRecord>& examples);

}  // namespace surerag
